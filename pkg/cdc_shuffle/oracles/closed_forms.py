"""
Closed-form reference loads: the three-node formula and the (semi-)homogeneous
sums. All values are exact; three_node_load is an un-normalized IV count.
"""
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, Mapping

import numpy as np

try:
    from cdc_shuffle.core.algebra import binom
    from cdc_shuffle.core.exceptions import DescriptorError
    from cdc_shuffle.core.instance import (THREE_NODE_REGIONS, InstanceDescriptor, SystemInstance,
                                           generate)
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.algebra import binom  # type: ignore
    from cdc_shuffle.core.exceptions import DescriptorError  # type: ignore
    from cdc_shuffle.core.instance import THREE_NODE_REGIONS, InstanceDescriptor, SystemInstance, generate  # type: ignore


@dataclass(frozen=True)
class ThreeNodePartition:
    """File counts per exclusive storage region of a 3-node placement."""
    S1: int = 0
    S2: int = 0
    S3: int = 0
    S12: int = 0
    S13: int = 0
    S23: int = 0
    S123: int = 0

    def __post_init__(self):
        negative = {k: v for k, v in asdict(self).items() if v < 0}
        if negative:
            raise ValueError(f"Region counts must be nonnegative, got {negative}")

    @property
    def N(self) -> int:
        return sum(asdict(self).values())

    def region_counts(self) -> Dict[str, int]:
        return {region: getattr(self, f"S{region}") for region in THREE_NODE_REGIONS}

    @classmethod
    def from_instance(cls, inst: SystemInstance) -> 'ThreeNodePartition':
        if inst.K != 3:
            raise DescriptorError(f"Three-node partition needs K=3, instance has K={inst.K}")
        counts = {region: 0 for region in THREE_NODE_REGIONS}
        for n in range(1, inst.N + 1):
            region = "".join(str(k) for k in sorted(inst.mappers_of(n)))
            if region not in counts:
                raise DescriptorError(f"file {n} unmapped")
            counts[region] += 1
        return cls(**{f"S{region}": c for region, c in counts.items()})

    def to_instance(self) -> SystemInstance:
        return generate(InstanceDescriptor.three_node(self.region_counts()))

    @classmethod
    def random(cls, rng: np.random.Generator, max_count: int = 6) -> 'ThreeNodePartition':
        while True:
            draw = rng.integers(0, max_count + 1, size=len(THREE_NODE_REGIONS))
            if draw.sum() > 0:
                return cls(*(int(v) for v in draw))


def g_function(x1, x2, x3) -> Fraction:
    """½(|max + Σ/2| + |max − Σ/2|)."""
    xs = [Fraction(x1), Fraction(x2), Fraction(x3)]
    top, half = max(xs), sum(xs) / 2
    return (abs(top + half) + abs(top - half)) / 2


def three_node_load(partition: ThreeNodePartition) -> Fraction:
    """Minimum shuffle traffic in IV units under W_k = {k}; S123 files cost nothing."""
    p = partition
    return 2 * (p.S1 + p.S2 + p.S3) + g_function(p.S12, p.S13, p.S23)


def homogeneous_load(K: int, r: int, s: int) -> Fraction:
    if not (1 <= r <= K and 1 <= s <= K):
        raise ValueError(f"Need 1 <= r, s <= K, got K={K}, r={r}, s={s}")
    total = Fraction(0)
    for ell in range(max(r + 1, s), min(r + s, K) + 1):
        total += Fraction(ell * binom(K, ell) * binom(ell - 2, r - 1) * binom(r, ell - s),
                          r * binom(K, r) * binom(K, s))
    return total


def semi_homogeneous_load(K: int, r: int, Q_s: Mapping[int, int]) -> Fraction:
    Q = sum(Q_s.values())
    if Q == 0:
        return Fraction(0)
    return sum((homogeneous_load(K, r, s) * Fraction(q, Q) for s, q in Q_s.items() if q), Fraction(0))
