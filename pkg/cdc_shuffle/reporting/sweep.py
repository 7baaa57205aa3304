"""
Load-bias sweep over K=4 heterogeneous systems: mapping loads
(1/2-d, 1/2-d, 1/2+d, 1/2+d) and reducing loads reversed, a batch of random
instances per bias d, one CSV row per instance plus one mean row per d.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

try:
    from cdc_shuffle.core.analysis import ShuffleAnalysis
    from cdc_shuffle.core.config_loader import DEFAULT_SEED, DEFAULT_SWEEP_SAMPLES
    from cdc_shuffle.core.instance import InstanceDescriptor, generate
    from cdc_shuffle.schemes.fsct import fsct_load
    from cdc_shuffle.schemes.osct import osct_load
except ImportError:
    import sys  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.analysis import ShuffleAnalysis  # type: ignore
    from cdc_shuffle.core.config_loader import DEFAULT_SEED, DEFAULT_SWEEP_SAMPLES  # type: ignore
    from cdc_shuffle.core.instance import InstanceDescriptor, generate  # type: ignore
    from cdc_shuffle.schemes.fsct import fsct_load  # type: ignore
    from cdc_shuffle.schemes.osct import osct_load  # type: ignore

logger = logging.getLogger('cdc_shuffle.sweep')

CSV_COLUMNS = ['d', 'sample', 'seed', 'lower_bound', 'uncoded', 'osct', 'fsct']
LOAD_COLUMNS = ['lower_bound', 'uncoded', 'osct', 'fsct']


def default_grid() -> List[Fraction]:
    return [Fraction(i, 64) for i in range(32)]


@dataclass
class SweepConfig:
    K: int = 4
    d_grid: List[Fraction] = field(default_factory=default_grid)
    samples: int = DEFAULT_SWEEP_SAMPLES
    N: int = 64
    Q: int = 64
    seed: int = DEFAULT_SEED
    schemes: Tuple[str, ...] = ('osct', 'fsct')
    workers: int = 1

    @classmethod
    def default(cls) -> 'SweepConfig':
        return cls()

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> 'SweepConfig':
        base = cls()
        grid = doc.get('d_grid')
        return cls(
            K=int(doc.get('K', base.K)),
            d_grid=[Fraction(str(d)) for d in grid] if grid is not None else base.d_grid,
            samples=int(doc.get('samples', base.samples)),
            N=int(doc.get('N', base.N)),
            Q=int(doc.get('Q', base.Q)),
            seed=int(doc.get('seed', base.seed)),
            schemes=tuple(doc.get('schemes', base.schemes)),
            workers=int(doc.get('workers', base.workers)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {'K': self.K, 'd_grid': [str(d) for d in self.d_grid], 'samples': self.samples,
                'N': self.N, 'Q': self.Q, 'seed': self.seed, 'schemes': list(self.schemes),
                'workers': self.workers}

    def mapping_loads(self, d: Fraction) -> List[Fraction]:
        half = Fraction(1, 2)
        low, high = [half - d] * (self.K // 2), [half + d] * (self.K - self.K // 2)
        return low + high

    def reducing_loads(self, d: Fraction) -> List[Fraction]:
        return list(reversed(self.mapping_loads(d)))


def sample_seed(master: int, d_index: int, sample: int) -> int:
    """Independent per-sample seed derived from the master seed."""
    return int(np.random.SeedSequence([master, d_index, sample]).generate_state(1)[0])


def _evaluate_sample(config: SweepConfig, d_index: int, d: Fraction, sample: int) -> Dict[str, Any]:
    seed = sample_seed(config.seed, d_index, sample)
    inst = generate(InstanceDescriptor.random_by_load(config.K, config.mapping_loads(d), config.reducing_loads(d),
                                                      config.N, config.Q, seed))
    analysis = ShuffleAnalysis(inst)
    row: Dict[str, Any] = {'d': float(d), 'sample': sample, 'seed': seed,
                           'lower_bound': float(analysis.lower_bound()),
                           'uncoded': float(analysis.uncoded_load())}
    row['osct'] = float(osct_load(inst, analysis)) if 'osct' in config.schemes else np.nan
    row['fsct'] = float(fsct_load(inst, analysis)) if 'fsct' in config.schemes else np.nan
    return row


def run_sweep(config: Optional[SweepConfig] = None) -> pd.DataFrame:
    """Rows ordered by (d, sample), each d followed by its 'mean' row. Deterministic under config.seed."""
    config = config if config is not None else SweepConfig.default()
    jobs = [(i, d, s) for i, d in enumerate(config.d_grid) for s in range(config.samples)]
    logger.info(f"Sweep: {len(config.d_grid)} bias values x {config.samples} samples, "
                f"K={config.K}, N={config.N}, Q={config.Q}, seed={config.seed}, workers={config.workers}")

    rows: List[Dict[str, Any]] = []
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(_evaluate_sample, config, i, d, s) for i, d, s in jobs]
            for future in as_completed(futures):
                rows.append(future.result())
    else:
        for i, d, s in jobs:
            rows.append(_evaluate_sample(config, i, d, s))

    if not rows:
        return pd.DataFrame(columns=CSV_COLUMNS)

    samples = pd.DataFrame(rows, columns=CSV_COLUMNS).sort_values(['d', 'sample'], kind='mergesort')
    out: List[pd.DataFrame] = []
    for d, group in samples.groupby('d', sort=True):
        mean_row = {'d': d, 'sample': 'mean', 'seed': ''}
        mean_row.update(group[LOAD_COLUMNS].mean().to_dict())
        out.append(group)
        out.append(pd.DataFrame([mean_row], columns=CSV_COLUMNS))
        logger.debug(f"d={d:.6f}: " + ", ".join(f"{c}={mean_row[c]:.6f}" for c in LOAD_COLUMNS))
    return pd.concat(out, ignore_index=True)


def sweep_means(frame: pd.DataFrame) -> pd.DataFrame:
    """The per-d mean rows, indexed by d."""
    means = frame[frame['sample'] == 'mean'].copy()
    means['d'] = means['d'].astype(float)
    return means.set_index('d')[LOAD_COLUMNS].astype(float)


def write_sweep_csv(frame: pd.DataFrame, stream) -> None:
    frame.to_csv(stream, index=False, float_format='%.6f', lineterminator='\n')
