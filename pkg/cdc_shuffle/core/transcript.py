import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Tuple

import pandas as pd


@dataclass(frozen=True)
class MessageRecord:
    scheme: str
    cluster: Tuple[int, ...]
    round: int
    sender: int
    kind: str  # 'coded' or 'residue'
    n_symbols: int
    sub_symbols_per_unit: int
    sub_symbol_bits: int
    n_lcs: int

    @property
    def units(self) -> Fraction:
        """Size in IV units (one unit = V bits)."""
        return Fraction(self.n_symbols, self.sub_symbols_per_unit)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['cluster'] = list(self.cluster)
        return out


@dataclass
class ShuffleTranscript:
    """Every block put on the shared link during one shuffle, in transmission order."""
    scheme: str
    records: List[MessageRecord] = field(default_factory=list)
    retries: int = 0

    def __post_init__(self):
        self.logger = logging.getLogger('cdc_shuffle.ShuffleTranscript')

    def add(self, cluster, round_z: int, sender: int, n_symbols: int, sub_symbols_per_unit: int,
            sub_symbol_bits: int, n_lcs: int, kind: str = 'coded') -> MessageRecord:
        if n_symbols < 0 or sub_symbols_per_unit < 1:
            raise ValueError(f"Bad block size {n_symbols}/{sub_symbols_per_unit} from node {sender}")
        record = MessageRecord(self.scheme, tuple(cluster), int(round_z), int(sender), kind,
                               int(n_symbols), int(sub_symbols_per_unit), int(sub_symbol_bits), int(n_lcs))
        self.records.append(record)
        return record

    def __len__(self) -> int:
        return len(self.records)

    def total_units(self) -> Fraction:
        return sum((r.units for r in self.records), Fraction(0))

    def measured_load(self, Q: int, N: int) -> Fraction:
        return self.total_units() / (Q * N)

    def to_frame(self) -> pd.DataFrame:
        columns = ['scheme', 'cluster', 'round', 'sender', 'kind', 'n_symbols',
                   'sub_symbols_per_unit', 'sub_symbol_bits', 'n_lcs']
        rows = [r.to_dict() for r in self.records]
        for row in rows:
            row['cluster'] = ",".join(map(str, row['cluster']))
        return pd.DataFrame(rows, columns=columns)

    def to_jsonl(self, path: str, append: bool = False) -> bool:
        try:
            with open(path, 'a' if append else 'w', encoding='utf-8') as f:
                for r in self.records:
                    f.write(json.dumps(r.to_dict()) + '\n')
            self.logger.info(f"Wrote {len(self.records)} {self.scheme} records to {path}")
            return True
        except IOError as e:
            self.logger.error(f"Could not write transcript to {path}: {e}", exc_info=True)
            return False
