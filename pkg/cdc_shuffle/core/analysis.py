"""
Combinatorics of the Shuffle phase.

Every needed intermediate value (requested by at least one node that does not
map its file) lands in exactly one cell (S, z, S1): S1 is the set of nodes
mapping the file, S = S1 plus the requesters, z = |S1|. A cluster round groups
the C(|S|, z) cells of one cluster S for one z.
"""
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

import pandas as pd

try:
    from cdc_shuffle.core.algebra import binom
    from cdc_shuffle.core.exceptions import InstanceValidationError
    from cdc_shuffle.core.instance import IVKey, SystemInstance
except ImportError:
    from algebra import binom  # type: ignore
    from exceptions import InstanceValidationError  # type: ignore
    from instance import IVKey, SystemInstance  # type: ignore

logger = logging.getLogger('cdc_shuffle.analysis')

NodeSet = Tuple[int, ...]


@dataclass(frozen=True)
class IVRecord:
    key: IVKey
    mappers: FrozenSet[int]
    requesters: FrozenSet[int]

    @property
    def t(self) -> int:
        return len(self.mappers)

    @property
    def d(self) -> int:
        return len(self.requesters)


@dataclass(frozen=True)
class IVCatalog:
    instance: SystemInstance
    records: Dict[IVKey, IVRecord]
    by_sets: Dict[Tuple[NodeSet, NodeSet], Tuple[IVKey, ...]]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[IVRecord]:
        return iter(self.records[k] for k in sorted(self.records))

    def __contains__(self, key) -> bool:
        return key in self.records

    def record(self, q: int, n: int) -> IVRecord:
        return self.records[IVKey(q, n)]

    @property
    def QN(self) -> int:
        return self.instance.Q * self.instance.N


@dataclass(frozen=True)
class ExclusiveIVSet:
    """V_{S1}^{S \\ S1}: mapped exactly by S1, needed by every node of S outside S1 and nobody else."""
    cluster: NodeSet
    mapper_subset: NodeSet
    members: Tuple[IVKey, ...] = ()

    @property
    def requesters(self) -> NodeSet:
        return tuple(k for k in self.cluster if k not in self.mapper_subset)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterRound:
    cluster: NodeSet
    z: int
    subsets: Tuple[NodeSet, ...]
    cells: Tuple[ExclusiveIVSet, ...]

    @property
    def skippable(self) -> bool:
        return all(len(c) == 0 for c in self.cells)

    @property
    def size(self) -> int:
        return len(self.cluster)

    def cell(self, mapper_subset) -> ExclusiveIVSet:
        return self.cells[self.subsets.index(tuple(sorted(mapper_subset)))]

    def cell_sizes(self) -> Dict[NodeSet, int]:
        return {c.mapper_subset: len(c) for c in self.cells}

    def total(self) -> int:
        return sum(len(c) for c in self.cells)

    def known(self, node: int) -> int:
        return sum(len(c) for c in self.cells if node in c.mapper_subset)

    def desired(self, node: int) -> int:
        return sum(len(c) for c in self.cells if node not in c.mapper_subset)

    def label(self) -> str:
        return "{" + ",".join(map(str, self.cluster)) + f"}}/z={self.z}"


@dataclass(frozen=True)
class DeficitProfile:
    cluster: NodeSet
    z: int
    known: Dict[int, int]
    desired: Dict[int, int]
    ratios: Dict[int, Optional[Fraction]]  # None: known sum is zero, desired sum is not
    n: Dict[int, int]

    def satisfies(self, node: int) -> bool:
        return self.n[node] >= 0

    @property
    def all_satisfied(self) -> bool:
        return all(v >= 0 for v in self.n.values())

    @property
    def violators(self) -> List[int]:
        return [k for k in self.cluster if self.n[k] < 0]


def build_catalog(inst: SystemInstance) -> IVCatalog:
    mappers_of = {n: inst.mappers_of(n) for n in range(1, inst.N + 1)}
    reducers_of = {q: inst.reducers_of(q) for q in range(1, inst.Q + 1)}
    records: Dict[IVKey, IVRecord] = {}
    by_sets: Dict[Tuple[NodeSet, NodeSet], List[IVKey]] = defaultdict(list)
    for q in range(1, inst.Q + 1):
        for n in range(1, inst.N + 1):
            requesters = reducers_of[q] - mappers_of[n]
            if not requesters:
                continue
            if not mappers_of[n]:
                raise InstanceValidationError([f"file {n} unmapped"])
            key = IVKey(q, n)
            records[key] = IVRecord(key, mappers_of[n], frozenset(requesters))
            by_sets[(tuple(sorted(mappers_of[n])), tuple(sorted(requesters)))].append(key)
    logger.debug(f"Catalog: {len(records)} needed IVs out of {inst.Q * inst.N}.")
    return IVCatalog(inst, records, {k: tuple(sorted(v)) for k, v in by_sets.items()})


def cluster_window(inst: SystemInstance) -> Tuple[int, int]:
    """(max(r_min+1, q_min), min(K, r_min+q_min)): the nominal range of sending-cluster sizes."""
    return max(inst.r_min + 1, inst.q_min), min(inst.K, inst.r_min + inst.q_min)


def enumerate_cluster_rounds(inst: SystemInstance, catalog: IVCatalog) -> List[ClusterRound]:
    """
    All cluster rounds, ordered by cluster size, then lexicographic cluster,
    then decreasing z. Empty rounds are kept and report skippable.
    """
    grouped: Dict[Tuple[NodeSet, NodeSet], List[IVKey]] = defaultdict(list)
    for rec in catalog:
        cluster = tuple(sorted(rec.mappers | rec.requesters))
        grouped[(cluster, tuple(sorted(rec.mappers)))].append(rec.key)

    lo, hi = cluster_window(inst)
    largest = max((len(c) for c, _ in grouped), default=hi)
    if largest > hi:
        logger.warning(f"Nonempty clusters of size {largest} exceed the nominal window [{lo}, {hi}]; enumerating up to {inst.K}.")
        hi = inst.K

    rounds: List[ClusterRound] = []
    for size in range(lo, hi + 1):
        for cluster in itertools.combinations(inst.nodes, size):
            for z in range(size - 1, inst.r_min - 1, -1):
                subsets = tuple(itertools.combinations(cluster, z))
                cells = tuple(ExclusiveIVSet(cluster, s1, tuple(sorted(grouped.get((cluster, s1), ()))))
                              for s1 in subsets)
                rounds.append(ClusterRound(cluster, z, subsets, cells))

    placed = sum(cr.total() for cr in rounds)
    if placed != len(catalog):
        raise AssertionError(f"Cluster rounds hold {placed} IVs, catalog has {len(catalog)}")
    return rounds


def nonempty_rounds(rounds: List[ClusterRound]) -> List[ClusterRound]:
    return [cr for cr in rounds if not cr.skippable]


def round_needed_ivs(cr: ClusterRound) -> List[IVKey]:
    """Every IV the round delivers, cells in enumeration order."""
    return [key for cell in cr.cells for key in cell.members]


def a_table(catalog: IVCatalog) -> Dict[Tuple[int, int], int]:
    """a_{t,d}: needed IVs known at t nodes and requested by d nodes. Nonzero cells only."""
    table: Dict[Tuple[int, int], int] = defaultdict(int)
    for rec in catalog:
        table[(rec.t, rec.d)] += 1
    return dict(sorted(table.items()))


def a_table_frame(table: Mapping[Tuple[int, int], int]) -> pd.DataFrame:
    rows = [{'t': t, 'd': d, 'count': c} for (t, d), c in sorted(table.items())]
    return pd.DataFrame(rows, columns=['t', 'd', 'count'])


def semi_homogeneous_a_table(K: int, r: int, Q_s: Mapping[int, int], N: int) -> Dict[Tuple[int, int], int]:
    """Closed form of a_{t,d} for files mapped r times and Q_s functions reduced s times each."""
    table: Dict[Tuple[int, int], Fraction] = defaultdict(Fraction)
    t = r
    for s, q_count in Q_s.items():
        if q_count == 0:
            continue
        for d in range(1, K - t + 1):
            value = Fraction(N * q_count * binom(t, t + d - s) * binom(K, t + d) * binom(t + d, t),
                             binom(K, t) * binom(K, s))
            if value:
                table[(t, d)] += value
    out = {}
    for key, value in sorted(table.items()):
        if value.denominator != 1:
            raise ValueError(f"a_{key} = {value} is not integral; check divisibility of N and Q_s")
        out[key] = int(value)
    return out


def lower_bound(catalog: IVCatalog) -> Fraction:
    total = sum((Fraction(c * d, t + d - 1) for (t, d), c in a_table(catalog).items()), Fraction(0))
    return total / catalog.QN


def uncoded_load(catalog: IVCatalog) -> Fraction:
    total = sum(c * d for (t, d), c in a_table(catalog).items())
    return Fraction(total, catalog.QN)


def deficit_profile(cr: ClusterRound) -> DeficitProfile:
    size, z = cr.size, cr.z
    known = {i: cr.known(i) for i in cr.cluster}
    desired = {i: cr.desired(i) for i in cr.cluster}
    ratios: Dict[int, Optional[Fraction]] = {}
    for i in cr.cluster:
        if known[i] == 0:
            ratios[i] = Fraction(0) if desired[i] == 0 else None
        else:
            ratios[i] = Fraction(desired[i], known[i])
    n = {i: (size - z) * known[i] - (z - 1) * desired[i] for i in cr.cluster}
    return DeficitProfile(cr.cluster, z, known, desired, ratios, n)


@dataclass
class ShuffleAnalysis:
    """Everything both schemes need about one instance, computed once."""
    instance: SystemInstance
    catalog: IVCatalog = field(init=False)
    rounds: List[ClusterRound] = field(init=False)

    def __post_init__(self):
        self.catalog = build_catalog(self.instance)
        self.rounds = enumerate_cluster_rounds(self.instance, self.catalog)

    @property
    def active_rounds(self) -> List[ClusterRound]:
        return nonempty_rounds(self.rounds)

    def lower_bound(self) -> Fraction:
        return lower_bound(self.catalog)

    def uncoded_load(self) -> Fraction:
        return uncoded_load(self.catalog)


if __name__ == '__main__':
    from cdc_shuffle.core.instance import InstanceDescriptor, generate
    logging.basicConfig(level=logging.DEBUG)
    inst = generate(InstanceDescriptor.homogeneous(3, 2, 1, 3, 3))
    analysis = ShuffleAnalysis(inst)
    assert a_table(analysis.catalog) == {(2, 1): 3}
    assert [cr.label() for cr in analysis.active_rounds] == ["{1,2,3}/z=2"]
    print(f"lower bound {analysis.lower_bound()}, uncoded {analysis.uncoded_load()}")
