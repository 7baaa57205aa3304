"""
System instances: K nodes, N files, Q Reduce functions, a pre-set data
placement M_k and a pre-set Reduce assignment W_k. Indices are 1-based
everywhere, matching the way the examples are quoted.
"""
import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

try:
    from cdc_shuffle.core.exceptions import DescriptorError, InstanceFormatError
    from cdc_shuffle.core.algebra import binom
except ImportError:
    from exceptions import DescriptorError, InstanceFormatError  # type: ignore
    from algebra import binom  # type: ignore

logger = logging.getLogger('cdc_shuffle.instance')

MAX_RESAMPLE_ATTEMPTS = 10_000
THREE_NODE_REGIONS = ('1', '2', '3', '12', '13', '23', '123')


class IVKey(NamedTuple):
    """Intermediate value v_{q,n}: Reduce function q applied to file n."""
    q: int
    n: int

    def __str__(self) -> str:
        return f"v_{{{self.q},{self.n}}}"


@dataclass(frozen=True)
class SystemInstance:
    K: int
    N: int
    Q: int
    placement: Tuple[Tuple[int, ...], ...]
    assignment: Tuple[Tuple[int, ...], ...]

    @classmethod
    def create(cls, K: int, N: int, Q: int,
               placement: Sequence[Sequence[int]],
               assignment: Sequence[Sequence[int]]) -> 'SystemInstance':
        # duplicates are kept so that validate() can report them
        return cls(int(K), int(N), int(Q),
                   tuple(tuple(sorted(int(i) for i in files)) for files in placement),
                   tuple(tuple(sorted(int(i) for i in funcs)) for funcs in assignment))

    @property
    def nodes(self) -> range:
        return range(1, self.K + 1)

    def files_of(self, node: int) -> frozenset:
        return frozenset(self.placement[node - 1])

    def functions_of(self, node: int) -> frozenset:
        return frozenset(self.assignment[node - 1])

    def mappers_of(self, n: int) -> frozenset:
        return frozenset(k for k in self.nodes if n in self.placement[k - 1])

    def reducers_of(self, q: int) -> frozenset:
        return frozenset(k for k in self.nodes if q in self.assignment[k - 1])

    def mapping_times(self) -> Dict[int, int]:
        return {n: len(self.mappers_of(n)) for n in range(1, self.N + 1)}

    def reducing_times(self) -> Dict[int, int]:
        return {q: len(self.reducers_of(q)) for q in range(1, self.Q + 1)}

    @property
    def r_min(self) -> int:
        return min(self.mapping_times().values())

    @property
    def q_min(self) -> int:
        return min(self.reducing_times().values())

    def mapping_loads(self) -> List[Fraction]:
        return [Fraction(len(set(files)), self.N) for files in self.placement]

    def reducing_loads(self) -> List[Fraction]:
        return [Fraction(len(set(funcs)), self.Q) for funcs in self.assignment]

    def computation_load(self) -> Fraction:
        return Fraction(sum(len(set(files)) for files in self.placement), self.N)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K, "N": self.N, "Q": self.Q,
            "placement": [sorted(set(files)) for files in self.placement],
            "assignment": [sorted(set(funcs)) for funcs in self.assignment],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> 'SystemInstance':
        if not isinstance(doc, Mapping):
            raise InstanceFormatError(f"Instance document must be a JSON object, got {type(doc).__name__}")
        for key in ("K", "N", "Q", "placement", "assignment"):
            if key not in doc:
                raise InstanceFormatError(f"Instance document is missing \"{key}\"")
        sizes = {}
        for key in ("K", "N", "Q"):
            value = doc[key]
            if isinstance(value, bool) or not isinstance(value, int):
                raise InstanceFormatError(f"{key} must be an integer, got {value!r}")
            if value < 1:
                raise InstanceFormatError(f"{key} must be ≥ 1")
            sizes[key] = value
        lists = {}
        for key, bound in (("placement", sizes["N"]), ("assignment", sizes["Q"])):
            entries = doc[key]
            if not isinstance(entries, list) or len(entries) != sizes["K"]:
                raise InstanceFormatError(f"\"{key}\" must be a list with one entry per node (K={sizes['K']})")
            for node, items in enumerate(entries, start=1):
                if not isinstance(items, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in items):
                    raise InstanceFormatError(f"{key} of node {node} must be a list of integers")
                bad = [i for i in items if i < 1 or i > bound]
                if bad:
                    raise InstanceFormatError(f"{key} of node {node} has indices {bad} outside [1, {bound}]")
            lists[key] = entries
        return cls.create(sizes["K"], sizes["N"], sizes["Q"], lists["placement"], lists["assignment"])


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(inst: SystemInstance) -> ValidationReport:
    report = ValidationReport()
    for name in ("K", "N", "Q"):
        if getattr(inst, name) < 1:
            report.violations.append(f"{name} must be ≥ 1")
    if len(inst.placement) != inst.K:
        report.violations.append(f"placement has {len(inst.placement)} node entries, expected {inst.K}")
    if len(inst.assignment) != inst.K:
        report.violations.append(f"assignment has {len(inst.assignment)} node entries, expected {inst.K}")
    if report.violations:
        return report

    for kind, per_node, bound, noun in (("placement", inst.placement, inst.N, "file"),
                                        ("assignment", inst.assignment, inst.Q, "function")):
        for node, items in enumerate(per_node, start=1):
            for i in sorted(set(items)):
                if items.count(i) > 1:
                    report.violations.append(f"node {node} {kind} lists {noun} {i} more than once")
                if i < 1 or i > bound:
                    report.violations.append(f"node {node} {kind} index {i} out of range [1, {bound}]")
        covered = set(itertools.chain.from_iterable(per_node))
        for i in range(1, bound + 1):
            if i not in covered:
                report.violations.append(f"{noun} {i} {'unmapped' if noun == 'file' else 'unassigned'}")
    return report


@dataclass(frozen=True)
class InstanceDescriptor:
    kind: str
    params: Tuple[Tuple[str, Any], ...] = ()

    KINDS = ('explicit', 'homogeneous', 'semi_homogeneous', 'random_by_load', 'three_node')

    def get(self, key: str, default: Any = None) -> Any:
        return dict(self.params).get(key, default)

    @classmethod
    def explicit(cls, inst: SystemInstance) -> 'InstanceDescriptor':
        return cls('explicit', (('instance', inst),))

    @classmethod
    def homogeneous(cls, K: int, r: int, s: int, N: int, Q: int) -> 'InstanceDescriptor':
        return cls('homogeneous', (('K', K), ('r', r), ('s', s), ('N', N), ('Q', Q)))

    @classmethod
    def semi_homogeneous(cls, K: int, r: int, Q_s: Mapping[int, int], N: int) -> 'InstanceDescriptor':
        return cls('semi_homogeneous', (('K', K), ('r', r), ('Q_s', tuple(sorted(Q_s.items()))), ('N', N)))

    @classmethod
    def random_by_load(cls, K: int, mapping_loads: Sequence[Union[Fraction, float, str]],
                       reducing_loads: Sequence[Union[Fraction, float, str]],
                       N: int, Q: int, seed: int) -> 'InstanceDescriptor':
        m = tuple(Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10 ** 6) for x in mapping_loads)
        w = tuple(Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10 ** 6) for x in reducing_loads)
        return cls('random_by_load', (('K', K), ('m', m), ('w', w), ('N', N), ('Q', Q), ('seed', seed)))

    @classmethod
    def three_node(cls, region_counts: Mapping[str, int]) -> 'InstanceDescriptor':
        counts = tuple((region, int(region_counts.get(region, 0))) for region in THREE_NODE_REGIONS)
        return cls('three_node', (('counts', counts),))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        for key, value in self.params:
            if key == 'instance':
                out[key] = value.to_dict()
            elif key in ('m', 'w'):
                out[key] = [str(v) for v in value]
            elif key in ('Q_s', 'counts'):
                out[key] = {str(k): v for k, v in value}
            else:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> 'InstanceDescriptor':
        kind = doc.get("kind")
        try:
            if kind == 'explicit':
                return cls.explicit(SystemInstance.from_dict(doc["instance"]))
            if kind == 'homogeneous':
                return cls.homogeneous(doc["K"], doc["r"], doc["s"], doc["N"], doc["Q"])
            if kind == 'semi_homogeneous':
                return cls.semi_homogeneous(doc["K"], doc["r"], {int(s): int(c) for s, c in doc["Q_s"].items()}, doc["N"])
            if kind == 'random_by_load':
                return cls.random_by_load(doc["K"], doc["m"], doc["w"], doc["N"], doc["Q"], doc.get("seed", 0))
            if kind == 'three_node':
                return cls.three_node(doc["counts"])
        except KeyError as e:
            raise DescriptorError(f"Descriptor of kind '{kind}' is missing {e}") from e
        raise DescriptorError(f"Unknown descriptor kind {kind!r}; expected one of {cls.KINDS}")


def _round_half_up(value: Fraction) -> int:
    return int((value + Fraction(1, 2)) // 1)


def _symmetric_batches(K: int, size: int, count: int, per_subset: int, start: int = 1) -> Dict[int, List[int]]:
    """Items start..start+count-1 dealt to the size-subsets of [K] in lexicographic order, per_subset each."""
    owners: Dict[int, List[int]] = {k: [] for k in range(1, K + 1)}
    item = start
    for subset in itertools.combinations(range(1, K + 1), size):
        for _ in range(per_subset):
            for k in subset:
                owners[k].append(item)
            item += 1
    assert item - start == count
    return owners


def _homogeneous_placement(K: int, r: int, N: int) -> Dict[int, List[int]]:
    if not 1 <= r <= K:
        raise DescriptorError(f"Computation load r={r} must lie in [1, {K}]")
    batches = binom(K, r)
    if N % batches:
        raise DescriptorError(f"N={N} is not divisible by C({K},{r})={batches}")
    return _symmetric_batches(K, r, N, N // batches)


def _generate_random_by_load(desc: InstanceDescriptor) -> SystemInstance:
    K, N, Q, seed = desc.get('K'), desc.get('N'), desc.get('Q'), desc.get('seed')
    m, w = desc.get('m'), desc.get('w')
    if len(m) != K or len(w) != K:
        raise DescriptorError(f"Expected {K} mapping and reducing loads, got {len(m)} and {len(w)}")
    file_counts = [_round_half_up(x * N) for x in m]
    func_counts = [_round_half_up(x * Q) for x in w]
    for label, counts, total in (("mapping", file_counts, N), ("reducing", func_counts, Q)):
        if any(c < 0 or c > total for c in counts):
            raise DescriptorError(f"Impossible {label} loads: per-node counts {counts} outside [0, {total}]")
        if sum(counts) < total:
            raise DescriptorError(f"Impossible {label} loads: per-node counts {counts} cannot cover {total} items")

    rng = np.random.default_rng(seed)

    def covering_draw(label: str, counts: List[int], total: int) -> List[List[int]]:
        for attempt in range(1, MAX_RESAMPLE_ATTEMPTS + 1):
            sets = [sorted(int(i) + 1 for i in rng.choice(total, size=c, replace=False)) for c in counts]
            if len(set().union(*sets)) == total:
                if attempt > 1:
                    logger.debug(f"random_by_load(seed={seed}) {label} covered after {attempt} draws.")
                return sets
        raise DescriptorError(f"random_by_load(seed={seed}) found no covering {label} in {MAX_RESAMPLE_ATTEMPTS} attempts")

    placement = covering_draw("placement", file_counts, N)
    assignment = covering_draw("assignment", func_counts, Q)
    return SystemInstance.create(K, N, Q, placement, assignment)


def generate(desc: InstanceDescriptor) -> SystemInstance:
    """Pure function of the descriptor (and its seed)."""
    kind = desc.kind
    if kind == 'explicit':
        return desc.get('instance')

    if kind == 'homogeneous':
        K, r, s, N, Q = (desc.get(k) for k in ('K', 'r', 's', 'N', 'Q'))
        placement = _homogeneous_placement(K, r, N)
        if not 1 <= s <= K:
            raise DescriptorError(f"Reducing load s={s} must lie in [1, {K}]")
        if Q % binom(K, s):
            raise DescriptorError(f"Q={Q} is not divisible by C({K},{s})={binom(K, s)}")
        assignment = _symmetric_batches(K, s, Q, Q // binom(K, s))
        return SystemInstance.create(K, N, Q, [placement[k] for k in range(1, K + 1)],
                                     [assignment[k] for k in range(1, K + 1)])

    if kind == 'semi_homogeneous':
        K, r, N = desc.get('K'), desc.get('r'), desc.get('N')
        Q_s = dict(desc.get('Q_s'))
        placement = _homogeneous_placement(K, r, N)
        assignment: Dict[int, List[int]] = {k: [] for k in range(1, K + 1)}
        start = 1
        for s in sorted(Q_s):
            count = Q_s[s]
            if count == 0:
                continue
            if not 1 <= s <= K:
                raise DescriptorError(f"Reducing level s={s} must lie in [1, {K}]")
            if count % binom(K, s):
                raise DescriptorError(f"Q_{s}={count} is not divisible by C({K},{s})={binom(K, s)}")
            for k, funcs in _symmetric_batches(K, s, count, count // binom(K, s), start).items():
                assignment[k].extend(funcs)
            start += count
        Q = start - 1
        if Q < 1:
            raise DescriptorError("Semi-homogeneous descriptor has no Reduce functions")
        return SystemInstance.create(K, N, Q, [placement[k] for k in range(1, K + 1)],
                                     [assignment[k] for k in range(1, K + 1)])

    if kind == 'random_by_load':
        return _generate_random_by_load(desc)

    if kind == 'three_node':
        counts = dict(desc.get('counts'))
        placement: Dict[int, List[int]] = {1: [], 2: [], 3: []}
        n = 1
        for region in THREE_NODE_REGIONS:
            if counts.get(region, 0) < 0:
                raise DescriptorError(f"Region S_{region} has negative count {counts[region]}")
            for _ in range(counts.get(region, 0)):
                for k in region:
                    placement[int(k)].append(n)
                n += 1
        N = n - 1
        if N < 1:
            raise DescriptorError("Three-node descriptor has no files")
        return SystemInstance.create(3, N, 3, [placement[1], placement[2], placement[3]], [[1], [2], [3]])

    raise DescriptorError(f"Unknown descriptor kind {kind!r}")


def all_files_everywhere(K: int, N: int, Q: int) -> SystemInstance:
    """Every node maps every file; functions dealt round-robin."""
    assignment = [[q for q in range(1, Q + 1) if (q - 1) % K == k - 1] for k in range(1, K + 1)]
    if Q < K:
        assignment = [a if a else [((k - 1) % Q) + 1] for k, a in enumerate(assignment, start=1)]
    return SystemInstance.create(K, N, Q, [list(range(1, N + 1))] * K, assignment)


def load_json(path: str) -> SystemInstance:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path} is not valid JSON: {e}") from e
    return SystemInstance.from_dict(doc)


def save_json(inst: SystemInstance, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(inst.to_dict(), f, indent=2, ensure_ascii=False)
        f.write('\n')
    logger.debug(f"Saved instance K={inst.K}, N={inst.N}, Q={inst.Q} to {path}")


def instance_to_frame(inst: SystemInstance) -> pd.DataFrame:
    rows = []
    for k, (m_k, w_k) in zip(inst.nodes, zip(inst.mapping_loads(), inst.reducing_loads())):
        rows.append({'node': k, 'files': len(inst.files_of(k)), 'functions': len(inst.functions_of(k)),
                     'mapping_load': float(m_k), 'reducing_load': float(w_k)})
    return pd.DataFrame(rows, columns=['node', 'files', 'functions', 'mapping_load', 'reducing_load'])


if __name__ == '__main__':
    inst = generate(InstanceDescriptor.homogeneous(3, 2, 1, 3, 3))
    assert validate(inst).ok
    assert inst.r_min == 2 and inst.q_min == 1
    rnd = generate(InstanceDescriptor.random_by_load(4, ['1/2'] * 4, ['1/2'] * 4, 64, 64, seed=7))
    assert all(len(inst_files) == 32 for inst_files in rnd.placement)
    print(instance_to_frame(rnd).to_string(index=False))
