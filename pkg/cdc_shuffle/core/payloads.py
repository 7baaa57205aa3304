import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

try:
    from cdc_shuffle.core.algebra import FieldMatrix, GaloisField
    from cdc_shuffle.core.instance import IVKey
except ImportError:
    from algebra import FieldMatrix, GaloisField  # type: ignore
    from instance import IVKey  # type: ignore


class PayloadStore:
    """
    Synthetic intermediate values. The content of v_{q,n} at a given length is a
    pure function of (seed, q, n, length), so every node "computes" the same IV
    independently and receivers can be checked against the originals.

    A payload is a (length, width) field array: `length` sub-symbols, each made
    of `width` field elements.
    """

    def __init__(self, field: GaloisField, seed: int = 2024, width: int = 2):
        if width < 1:
            raise ValueError(f"Sub-symbol width must be positive, got {width}")
        self.field = field
        self.seed = int(seed)
        self.width = int(width)
        self._cache: Dict[Tuple[int, int, int], FieldMatrix] = {}
        self.logger = logging.getLogger('cdc_shuffle.PayloadStore')

    @property
    def sub_symbol_bits(self) -> int:
        return self.field.bits * self.width

    def payload(self, key: IVKey, length: int) -> FieldMatrix:
        cache_key = (key.q, key.n, int(length))
        cached = self._cache.get(cache_key)
        if cached is None:
            rng = np.random.default_rng([self.seed, key.q, key.n, int(length)])
            cached = self.field.array(rng.integers(0, self.field.order, size=(int(length), self.width)))
            self._cache[cache_key] = cached
        return cached

    def segments(self, key: IVKey, parts: int) -> List[FieldMatrix]:
        """v_{q,n} split evenly into `parts` one-sub-symbol segments."""
        block = self.payload(key, parts)
        return [block[p:p + 1] for p in range(parts)]

    def concatenation(self, keys, length: int) -> FieldMatrix:
        """IVs of one cell laid end to end, `length` sub-symbols each."""
        if not keys:
            return self.field.zeros((0, self.width))
        return np.concatenate([self.payload(k, length) for k in keys], axis=0)

    def matches(self, key: IVKey, recovered: FieldMatrix, length: Optional[int] = None) -> bool:
        length = recovered.shape[0] if length is None else length
        return recovered.shape == (length, self.width) and np.array_equal(recovered, self.payload(key, length))
