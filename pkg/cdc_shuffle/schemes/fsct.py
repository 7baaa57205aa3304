"""
Few-shot coded transmission.

Every IV of a cluster round is cut into (|S|-1)*g equal segments. Node k
multicasts n̄_k*g random linear combinations of all segments it knows; each
receiver strips what it knows and solves the joint system built from every
other node's block. Whether that system can be full rank is a bipartite
transportation question (cells supply demand, senders have capacity), decided
with max-flow; the flow is also the witness for the non-zero path certificate.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

try:
    from cdc_shuffle.core.algebra import FieldMatrix, GaloisField, lcm_of_denominators, positive_part
    from cdc_shuffle.core.analysis import ClusterRound, DeficitProfile, ShuffleAnalysis, deficit_profile
    from cdc_shuffle.core.exceptions import (CertificateError, DecodeRetryNeeded, RetryExhaustedError,
                                             SingularSystemError)
    from cdc_shuffle.core.instance import IVKey, SystemInstance
    from cdc_shuffle.core.payloads import PayloadStore
    from cdc_shuffle.core.transcript import ShuffleTranscript
    from cdc_shuffle.schemes.base_scheme import BaseScheme
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.algebra import FieldMatrix, GaloisField, lcm_of_denominators, positive_part  # type: ignore
    from cdc_shuffle.core.analysis import ClusterRound, DeficitProfile, ShuffleAnalysis, deficit_profile  # type: ignore
    from cdc_shuffle.core.exceptions import (CertificateError, DecodeRetryNeeded, RetryExhaustedError,  # type: ignore
                                             SingularSystemError)
    from cdc_shuffle.core.instance import IVKey, SystemInstance  # type: ignore
    from cdc_shuffle.core.payloads import PayloadStore  # type: ignore
    from cdc_shuffle.core.transcript import ShuffleTranscript  # type: ignore
    from cdc_shuffle.schemes.base_scheme import BaseScheme  # type: ignore

logger = logging.getLogger('cdc_shuffle.fsct')

NodeSet = Tuple[int, ...]
SegmentId = Tuple[NodeSet, IVKey, int]

SOURCE, SINK = 'source', 'sink'


@dataclass(frozen=True)
class FeasibilityResult:
    node: int
    cluster: NodeSet
    z: int
    feasible: bool
    betas: Dict[Tuple[int, NodeSet], Fraction] = field(default_factory=dict)
    flow: Fraction = Fraction(0)
    demand: Fraction = Fraction(0)


@dataclass
class FsctMessageBlock:
    sender: int
    cluster: NodeSet
    z: int
    columns: Tuple[SegmentId, ...]  # every segment the sender knows, in round order
    coefficients: FieldMatrix      # n̄_k*g x |K_k|, uniform nonzero entries
    coded: FieldMatrix             # n̄_k*g x width

    @property
    def n_lcs(self) -> int:
        return int(self.coefficients.shape[0])


@dataclass(frozen=True)
class FsctRoundPlan:
    round: ClusterRound
    profile: DeficitProfile
    feasibility: Dict[int, FeasibilityResult]
    n_bar: Dict[int, Fraction]
    all_feasible: bool
    granularity: int
    witnesses: Dict[int, FeasibilityResult]  # per receiver, flows against capacities n̄

    @property
    def segments_per_iv(self) -> int:
        return (self.round.size - 1) * self.granularity

    def rows(self, k: int) -> int:
        return int(self.n_bar[k] * self.granularity)

    @property
    def units(self) -> Fraction:
        """Round traffic in IV units: each combination is 1/(|S|-1) of an IV."""
        return sum(self.n_bar.values(), Fraction(0)) / (self.round.size - 1)


# --------------------------------------------------------------- conditions

def check_deficit(profile: DeficitProfile, node: int) -> bool:
    return profile.n[node] >= 0


def _demanding_cells(cr: ClusterRound, node: int) -> List[Tuple[NodeSet, int]]:
    return [(c.mapper_subset, len(c)) for c in cr.cells if node not in c.mapper_subset and len(c)]


def check_feasible(cr: ClusterRound, profile: DeficitProfile, node: int,
                   capacities: Optional[Dict[int, Fraction]] = None) -> FeasibilityResult:
    """
    Does system (beta >= 0, cell demand (|S|-1)|V| met by its mappers, each
    sender j within capacity) have a solution? capacities default to (n_j)^+.
    """
    if capacities is None:
        capacities = {j: Fraction(positive_part(profile.n[j])) for j in cr.cluster}
    cells = _demanding_cells(cr, node)
    demand = sum(((cr.size - 1) * size for _, size in cells), 0)
    if not cells:
        return FeasibilityResult(node, cr.cluster, cr.z, True, {}, Fraction(0), Fraction(0))

    scale = lcm_of_denominators(capacities.values())
    G = nx.DiGraph()
    for s1, size in cells:
        G.add_edge(SOURCE, ('cell', s1), capacity=(cr.size - 1) * size * scale)
        for j in s1:
            G.add_edge(('cell', s1), ('node', j))  # no capacity attribute: unbounded
    for j in sorted({j for s1, _ in cells for j in s1}):
        G.add_edge(('node', j), SINK, capacity=int(capacities[j] * scale))

    flow_value, flow_dict = nx.maximum_flow(G, SOURCE, SINK)
    betas = {(j, s1): Fraction(flow_dict[('cell', s1)][('node', j)], scale)
             for s1, _ in cells for j in s1}
    feasible = flow_value == demand * scale
    return FeasibilityResult(node, cr.cluster, cr.z, feasible, betas, Fraction(flow_value, scale), Fraction(demand))


def _update_value(cr: ClusterRound, k: int) -> Fraction:
    """((|S|-1)/z) * max_{j != k} sum_{S1 ∋ k, j ∉ S1} |V_S1|: enough for every receiver to draw its share from k."""
    heaviest = max(sum(len(c) for c in cr.cells if k in c.mapper_subset and j not in c.mapper_subset)
                   for j in cr.cluster if j != k)
    return Fraction(cr.size - 1, cr.z) * heaviest


def update_parameters(cr: ClusterRound, profile: DeficitProfile,
                      feasibility: Optional[Dict[int, FeasibilityResult]] = None,
                      per_node: bool = False) -> Dict[int, Fraction]:
    """
    (n_k)^+ when every node is feasible; otherwise every node sends the update
    value. With per_node, only the infeasible nodes take the update value and
    the rest keep (n_k)^+; that reading is what the three-term formula counts
    but carries no feasibility guarantee.
    """
    if feasibility is None:
        feasibility = {i: check_feasible(cr, profile, i) for i in cr.cluster}
    if all(r.feasible for r in feasibility.values()):
        return {k: Fraction(positive_part(profile.n[k])) for k in cr.cluster}
    if per_node:
        return {k: Fraction(positive_part(profile.n[k])) if feasibility[k].feasible else _update_value(cr, k)
                for k in cr.cluster}
    return {k: _update_value(cr, k) for k in cr.cluster}


def round_granularity(n_bar: Dict[int, Fraction], betas=()) -> int:
    """g: smallest integer making every n̄_k*g (and beta*g) whole."""
    return lcm_of_denominators(list(n_bar.values()) + list(betas))


def plan_round(cr: ClusterRound) -> FsctRoundPlan:
    profile = deficit_profile(cr)
    feasibility = {i: check_feasible(cr, profile, i) for i in cr.cluster}
    all_feasible = all(r.feasible for r in feasibility.values())
    n_bar = update_parameters(cr, profile, feasibility)
    g = round_granularity(n_bar)
    if all_feasible:
        witnesses = feasibility
    else:
        witnesses = {i: check_feasible(cr, profile, i, capacities=n_bar) for i in cr.cluster}
        broken = [i for i, r in witnesses.items() if not r.feasible]
        if broken:
            raise CertificateError(f"Updated parameters of {cr.label()} leave nodes {broken} infeasible")
        logger.debug(f"FSCT {cr.label()}: infeasible nodes "
                     f"{[i for i, r in feasibility.items() if not r.feasible]}, parameters updated to "
                     f"{[str(n_bar[k]) for k in cr.cluster]}")
    return FsctRoundPlan(cr, profile, feasibility, n_bar, all_feasible, g, witnesses)


# -------------------------------------------------------------- certificate

def certify_nonzero_path(receiver: int, cr: ClusterRound, betas: Dict[Tuple[int, NodeSet], int],
                         rows: Dict[int, int], segments_per_iv: int) -> List[Tuple[int, int]]:
    """
    One (row, column) pair per unknown segment of `receiver`, rows pairwise
    distinct, each entry inside a sender's randomly generated block. Its
    existence makes det(M) a non-zero polynomial in the coefficients.

    Columns follow the receiver's unknown cells in round order; rows follow the
    senders in node order, and within a sender its cells in round order, each
    given beta segment-rows. betas and rows are in segment units.
    """
    unknown = [(c.mapper_subset, len(c)) for c in cr.cells if receiver not in c.mapper_subset and len(c)]
    senders = [k for k in cr.cluster if k != receiver]
    offset, acc = {}, 0
    for k in senders:
        offset[k] = acc
        acc += rows.get(k, 0)

    path: List[Tuple[int, int]] = []
    col = 0
    for m, (h_m, size) in enumerate(unknown):
        width = segments_per_iv * size
        prefix, bounds = 0, []
        for k in h_m:
            prefix += int(betas.get((k, h_m), 0))
            bounds.append((k, prefix))
        if prefix < width:
            raise CertificateError(f"Cell {list(h_m)} of {cr.label()} supplies {prefix} of {width} rows to node {receiver}")
        for p in range(width):
            before = 0
            for k, upto in bounds:
                if p < upto:
                    break
                before = upto
            earlier = sum(int(betas.get((k, h_l), 0)) for h_l, _ in unknown[:m] if k in h_l)
            local = earlier + (p - before)
            if local >= rows.get(k, 0):
                raise CertificateError(f"Node {k} has {rows.get(k, 0)} rows, path needs row {local} in {cr.label()}")
            path.append((offset[k] + local, col))
            col += 1

    if len({r for r, _ in path}) != len(path):
        raise CertificateError(f"Path rows collide for node {receiver} in {cr.label()}")
    return path


def round_certificate(plan: FsctRoundPlan, receiver: int) -> List[Tuple[int, int]]:
    g = plan.granularity
    betas = {key: int(b * g) for key, b in plan.witnesses[receiver].betas.items()}
    rows = {k: plan.rows(k) for k in plan.round.cluster}
    return certify_nonzero_path(receiver, plan.round, betas, rows, plan.segments_per_iv)


# ------------------------------------------------------------ encode/decode

def known_segments(cr: ClusterRound, node: int, parts: int) -> List[SegmentId]:
    return [(c.mapper_subset, key, p) for c in cr.cells if node in c.mapper_subset
            for key in c.members for p in range(parts)]


def unknown_segments(cr: ClusterRound, node: int, parts: int) -> List[SegmentId]:
    return [(c.mapper_subset, key, p) for c in cr.cells if node not in c.mapper_subset
            for key in c.members for p in range(parts)]


def _segment_rows(ids: List[SegmentId], payloads: PayloadStore, parts: int) -> FieldMatrix:
    if not ids:
        return payloads.field.zeros((0, payloads.width))
    return np.concatenate([payloads.segments(key, parts)[p] for _, key, p in ids], axis=0)


def fsct_encode(plan: FsctRoundPlan, payloads: PayloadStore, rng: np.random.Generator,
                gf: Optional[GaloisField] = None) -> List[FsctMessageBlock]:
    gf = gf if gf is not None else payloads.field
    cr, parts = plan.round, plan.segments_per_iv
    blocks = []
    for k in cr.cluster:
        n_rows = plan.rows(k)
        if n_rows == 0:
            continue
        columns = tuple(known_segments(cr, k, parts))
        R = gf.random_matrix(n_rows, len(columns), rng)
        blocks.append(FsctMessageBlock(k, cr.cluster, cr.z, columns, R, R @ _segment_rows(list(columns), payloads, parts)))
    return blocks


def build_receiver_system(receiver: int, blocks: List[FsctMessageBlock],
                          local_segments: Dict[SegmentId, FieldMatrix], unknown: List[SegmentId],
                          gf: GaloisField, width: int) -> Tuple[FieldMatrix, FieldMatrix]:
    """M and y of the receiver's joint system, senders in node order."""
    index = {seg: i for i, seg in enumerate(unknown)}
    row_blocks, rhs_blocks = [], []
    for block in sorted(blocks, key=lambda b: b.sender):
        if block.sender == receiver:
            continue
        known_cols = [c for c, seg in enumerate(block.columns) if receiver in seg[0]]
        unknown_cols = [c for c, seg in enumerate(block.columns) if receiver not in seg[0]]
        y = block.coded
        if known_cols:
            known = np.concatenate([local_segments[block.columns[c]] for c in known_cols], axis=0)
            y = y - block.coefficients[:, known_cols] @ known
        M_k = gf.zeros((block.n_lcs, len(unknown)))
        if unknown_cols:
            M_k[:, [index[block.columns[c]] for c in unknown_cols]] = block.coefficients[:, unknown_cols]
        row_blocks.append(M_k)
        rhs_blocks.append(y)
    if not row_blocks:
        return gf.zeros((0, len(unknown))), gf.zeros((0, width))
    return np.concatenate(row_blocks, axis=0), np.concatenate(rhs_blocks, axis=0)


def fsct_decode(receiver: int, cr: ClusterRound, blocks: List[FsctMessageBlock],
                local_segments: Dict[SegmentId, FieldMatrix], parts: int,
                gf: GaloisField, width: int) -> Dict[SegmentId, FieldMatrix]:
    unknown = unknown_segments(cr, receiver, parts)
    if not unknown:
        return {}
    M, y = build_receiver_system(receiver, blocks, local_segments, unknown, gf, width)
    x = gf.solve(M, y)
    if x is None:
        raise DecodeRetryNeeded(cr.cluster, cr.z, receiver)
    return {seg: x[i:i + 1] for i, seg in enumerate(unknown)}


def _decode_all(plan: FsctRoundPlan, blocks: List[FsctMessageBlock], payloads: PayloadStore,
                certify: bool) -> None:
    cr, parts, gf = plan.round, plan.segments_per_iv, payloads.field
    for receiver in cr.cluster:
        local_ids = known_segments(cr, receiver, parts)
        local = dict(zip(local_ids, (payloads.segments(key, parts)[p] for _, key, p in local_ids)))
        if certify:
            path = round_certificate(plan, receiver)
            M, _ = build_receiver_system(receiver, blocks, local, unknown_segments(cr, receiver, parts),
                                         gf, payloads.width)
            if any(int(M[r, c]) == 0 for r, c in path):
                raise CertificateError(f"Path of node {receiver} in {cr.label()} crosses a structural zero")
        recovered = fsct_decode(receiver, cr, blocks, local, parts, gf, payloads.width)
        for (s1, key, p), value in recovered.items():
            if not np.array_equal(value, payloads.segments(key, parts)[p]):
                raise SingularSystemError(f"Node {receiver} recovered a corrupted segment {p} of {key} in {cr.label()}")


# ----------------------------------------------------------------- accounting

def plan_rounds(analysis: ShuffleAnalysis) -> List[FsctRoundPlan]:
    return [plan_round(cr) for cr in analysis.active_rounds]


FSCT_READINGS = ('every_node', 'per_node')


def fsct_load(inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None,
              reading: str = 'every_node') -> Fraction:
    """
    every_node is the load the encoder actually sends. per_node is analytic
    only: it skips witness checks and never builds a plan.
    """
    if reading not in FSCT_READINGS:
        raise ValueError(f"Unknown FSCT reading '{reading}', expected one of {FSCT_READINGS}")
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    if reading == 'every_node':
        units = sum((p.units for p in plan_rounds(analysis)), Fraction(0))
    else:
        units = Fraction(0)
        for cr in analysis.active_rounds:
            n_bar = update_parameters(cr, deficit_profile(cr), per_node=True)
            units += sum(n_bar.values(), Fraction(0)) / (cr.size - 1)
    return units / (inst.Q * inst.N)


def three_term_formula_load(inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Fraction:
    """
    Closed three-term expression: lower bound, plus the deficit/feasibility
    correction, plus (1/z) * max-term for every infeasible node. Always equal
    to fsct_load(reading='per_node'); equal to the default reading unless a
    round mixes feasible and infeasible nodes.
    """
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    total = analysis.lower_bound() * inst.Q * inst.N
    for cr in analysis.active_rounds:
        profile = deficit_profile(cr)
        feasible = {i: check_feasible(cr, profile, i).feasible for i in cr.cluster}
        correction = sum(-profile.n[k] for k in cr.cluster if profile.n[k] < 0)
        correction -= sum(profile.n[k] for k in cr.cluster if profile.n[k] >= 0 and not feasible[k])
        total += Fraction(correction, cr.size - 1)
        for i in cr.cluster:
            if feasible[i]:
                continue
            heaviest = max(sum(len(c) for c in cr.cells if i in c.mapper_subset and j not in c.mapper_subset)
                           for j in cr.cluster if j != i)
            total += Fraction(heaviest, cr.z)
    return total / (inst.Q * inst.N)


def check_theorem4(inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Dict[str, Any]:
    """FSCT meets the lower bound when every node passes both conditions in every round."""
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    violations = []
    units = Fraction(0)
    for plan in plan_rounds(analysis):
        units += plan.units
        for i in plan.round.cluster:
            deficit_ok = check_deficit(plan.profile, i)
            feasible_ok = plan.feasibility[i].feasible
            if not (deficit_ok and feasible_ok):
                violations.append({'round': plan.round.label(), 'node': i,
                                   'deficit': deficit_ok, 'feasible': feasible_ok})
    load = units / (inst.Q * inst.N)
    bound = analysis.lower_bound()
    optimal = not violations
    if optimal and load != bound:
        raise AssertionError(f"Both conditions hold everywhere but FSCT load {load} != lower bound {bound}")
    return {'optimal': optimal, 'violations': violations, 'load': load, 'lower_bound': bound}


def run_fsct(inst: SystemInstance, payloads: PayloadStore, rng: np.random.Generator,
             analysis: Optional[ShuffleAnalysis] = None, verify: bool = True,
             max_retries: int = 16, certify: bool = True) -> ShuffleTranscript:
    """
    Encodes and decodes every round. A singular draw re-draws that round's
    coefficients only, up to max_retries attempts.
    """
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    transcript = ShuffleTranscript('fsct')
    for plan in plan_rounds(analysis):
        cr = plan.round
        attempt = 0
        while True:
            attempt += 1
            blocks = fsct_encode(plan, payloads, rng)
            if not verify:
                break
            try:
                _decode_all(plan, blocks, payloads, certify)
                break
            except DecodeRetryNeeded as e:
                logger.warning(f"FSCT {cr.label()}: {e} (attempt {attempt}/{max_retries})")
                if attempt >= max_retries:
                    raise RetryExhaustedError(cr.cluster, cr.z, attempt) from e
        transcript.retries += attempt - 1
        for block in blocks:
            transcript.add(cr.cluster, cr.z, block.sender, block.n_lcs, plan.segments_per_iv,
                           payloads.sub_symbol_bits, block.n_lcs, kind='coded')
        logger.debug(f"FSCT {cr.label()}: n̄={[str(plan.n_bar[k]) for k in cr.cluster]}, g={plan.granularity}, "
                     f"feasible={plan.all_feasible}, attempts={attempt}")
    return transcript


class FsctScheme(BaseScheme):
    scheme_type_name: str = "fsct"

    @staticmethod
    def get_default_params() -> dict:
        return {
            "verify": {"type": "bool", "default": True,
                       "desc": "Jointly decode every round at every receiver and compare with the payload store."},
            "certify": {"type": "bool", "default": True,
                        "desc": "Build the non-zero path certificate for every receiver before decoding."},
        }

    def analytic_load(self, inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Fraction:
        return fsct_load(inst, self._analysis(inst, analysis))

    def run(self, inst: SystemInstance, payloads: PayloadStore, rng: np.random.Generator,
            analysis: Optional[ShuffleAnalysis] = None) -> ShuffleTranscript:
        verify = bool(self.get_param("verify", True)) and self.settings.verify
        return run_fsct(inst, payloads, rng, self._analysis(inst, analysis), verify=verify,
                        max_retries=self.settings.max_retries, certify=bool(self.get_param("certify", True)))

    def optimality(self, inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Dict[str, Any]:
        return check_theorem4(inst, self._analysis(inst, analysis))
