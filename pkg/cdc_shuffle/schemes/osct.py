"""
One-shot coded transmission.

In every cluster round each node k of S owns one piece of every cell it maps,
sized alpha_k IV units, and multicasts C(|S|-2, z-1) Vandermonde combinations
of its C(|S|-1, z-1) pieces. Any receiver j in S knows the C(|S|-2, z-2)
pieces of cells containing j, so each block is decodable on its own.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

try:
    from cdc_shuffle.core.algebra import (FieldMatrix, GaloisField, binom, get_field,
                                          lcm_of_denominators, positive_part, solve_rational)
    from cdc_shuffle.core.analysis import (ClusterRound, DeficitProfile, ShuffleAnalysis,
                                           deficit_profile)
    from cdc_shuffle.core.exceptions import SingularSystemError
    from cdc_shuffle.core.instance import IVKey, SystemInstance
    from cdc_shuffle.core.payloads import PayloadStore
    from cdc_shuffle.core.transcript import ShuffleTranscript
    from cdc_shuffle.schemes.base_scheme import BaseScheme
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.algebra import (FieldMatrix, GaloisField, binom, get_field,  # type: ignore
                                          lcm_of_denominators, positive_part, solve_rational)
    from cdc_shuffle.core.analysis import ClusterRound, DeficitProfile, ShuffleAnalysis, deficit_profile  # type: ignore
    from cdc_shuffle.core.exceptions import SingularSystemError  # type: ignore
    from cdc_shuffle.core.instance import IVKey, SystemInstance  # type: ignore
    from cdc_shuffle.core.payloads import PayloadStore  # type: ignore
    from cdc_shuffle.core.transcript import ShuffleTranscript  # type: ignore
    from cdc_shuffle.schemes.base_scheme import BaseScheme  # type: ignore

logger = logging.getLogger('cdc_shuffle.osct')

NodeSet = Tuple[int, ...]


@dataclass(frozen=True)
class AlphaSolution:
    cluster: NodeSet
    z: int
    alpha: Dict[int, Fraction]
    tau: Dict[NodeSet, Fraction]
    objective: Fraction
    method: str = 'active_set'

    def vector(self) -> Tuple[Fraction, ...]:
        return tuple(self.alpha[k] for k in self.cluster)

    @property
    def cost(self) -> Fraction:
        return round_cost(self)

    @property
    def sub_symbols(self) -> int:
        return sub_symbol_count(self)


@dataclass
class OsctMessageBlock:
    sender: int
    cluster: NodeSet
    z: int
    columns: Tuple[NodeSet, ...]   # cells whose pieces the sender combines, in round order
    coefficients: FieldMatrix      # C(|S|-2, z-1) x C(|S|-1, z-1) Vandermonde block
    coded: FieldMatrix             # one row per combination, piece_len * width entries
    piece_len: int                 # sub-symbols per piece (alpha_k * D)
    residues: Dict[NodeSet, FieldMatrix] = field(default_factory=dict)

    @property
    def n_lcs(self) -> int:
        return int(self.coded.shape[0]) if self.piece_len else 0

    @property
    def coded_symbols(self) -> int:
        return self.n_lcs * self.piece_len

    @property
    def residue_symbols(self) -> int:
        return sum(int(r.shape[0]) for r in self.residues.values())


# ---------------------------------------------------------------- optimizer

def _cell_rows(cr: ClusterRound) -> List[Tuple[NodeSet, int]]:
    return [(c.mapper_subset, len(c)) for c in cr.cells]


def _objective(cr: ClusterRound, alpha: Dict[int, Fraction]) -> Fraction:
    return sum(((size - sum(alpha[j] for j in s1)) ** 2 for s1, size in _cell_rows(cr)), Fraction(0))


def _solution(cr: ClusterRound, alpha: Dict[int, Fraction], method: str) -> AlphaSolution:
    tau = {s1: Fraction(size) - sum(alpha[j] for j in s1) for s1, size in _cell_rows(cr)}
    return AlphaSolution(cr.cluster, cr.z, alpha, tau, _objective(cr, alpha), method)


def pinned_nodes(cr: ClusterRound) -> List[int]:
    """Members of an empty cell: alpha >= 0 and a zero cell sum force alpha = 0."""
    return sorted({j for c in cr.cells if len(c) == 0 for j in c.mapper_subset})


def closed_form_applies(cr: ClusterRound, profile: Optional[DeficitProfile] = None) -> bool:
    """Every cell nonempty and every deficit ratio strictly below (|S|-z)/(z-1)."""
    if any(len(c) == 0 for c in cr.cells):
        return False
    profile = profile if profile is not None else deficit_profile(cr)
    return all(v > 0 for v in profile.n.values())


def closed_form_alpha(cr: ClusterRound) -> Dict[int, Fraction]:
    """Unconstrained stationary point of the round's least-squares objective."""
    size, z = cr.size, cr.z
    owned = binom(size - 1, z - 1)
    out = {}
    for k in cr.cluster:
        known = Fraction(cr.known(k), owned)
        if z > 1:
            known -= Fraction((z - 1) * cr.desired(k), (size - z) * owned)
        out[k] = known
    return out


def _least_squares_on(cr: ClusterRound, support: List[int]) -> Optional[Dict[int, Fraction]]:
    rows = _cell_rows(cr)
    gram = [[sum(1 for s1, size in rows if a in s1 and b in s1 and size) for b in support] for a in support]
    rhs = [sum(size for s1, size in rows if a in s1) for a in support]
    sol = solve_rational(gram, rhs)
    if sol is None:
        return None
    alpha = {k: Fraction(0) for k in cr.cluster}
    alpha.update(dict(zip(support, sol)))
    return alpha


def solve_p_osct(cr: ClusterRound, profile: Optional[DeficitProfile] = None) -> AlphaSolution:
    """
    Minimizes sum_i (|V_i| - sum_{j in S_z[i]} alpha_j)^2 subject to alpha >= 0
    and alpha = 0 on members of empty cells, exactly.
    """
    if cr.skippable:
        return _solution(cr, {k: Fraction(0) for k in cr.cluster}, 'empty')

    if closed_form_applies(cr, profile):
        return _solution(cr, closed_form_alpha(cr), 'closed_form')

    pinned = set(pinned_nodes(cr))
    free = [k for k in cr.cluster if k not in pinned]
    best: Optional[AlphaSolution] = None
    for n_zero in range(len(free) + 1):
        for zero_set in itertools.combinations(free, n_zero):
            support = [k for k in free if k not in zero_set]
            alpha = _least_squares_on(cr, support) if support else {k: Fraction(0) for k in cr.cluster}
            if alpha is None or any(v < 0 for v in alpha.values()):
                continue
            candidate = _solution(cr, alpha, 'active_set')
            if best is None or (candidate.objective, candidate.vector()) < (best.objective, best.vector()):
                best = candidate
    assert best is not None  # the all-zero point is always feasible
    return best


def round_cost(solution: AlphaSolution) -> Fraction:
    """C(|S|-2, z-1) * sum_k alpha_k + sum_i (tau_i)^+, in IV units."""
    size = len(solution.cluster)
    coded = binom(size - 2, solution.z - 1) * sum(solution.alpha.values(), Fraction(0))
    return coded + sum((positive_part(t) for t in solution.tau.values()), Fraction(0))


def sub_symbol_count(solution: AlphaSolution) -> int:
    """D: sub-symbols per IV so that every piece and residue is a whole number of sub-symbols."""
    return lcm_of_denominators(list(solution.alpha.values()) + list(solution.tau.values()))


# ------------------------------------------------------------ encode/decode

def split_cell(cr: ClusterRound, mapper_subset: NodeSet, solution: AlphaSolution,
               payloads: PayloadStore) -> Tuple[Dict[int, FieldMatrix], Optional[FieldMatrix]]:
    """
    The cell's IVs laid end to end (D sub-symbols each), cut into alpha_j * D
    pieces in node order. Zero padding at the tail when tau < 0; the uncovered
    tail is the residue when tau > 0.
    """
    D = solution.sub_symbols
    cell = cr.cell(mapper_subset)
    data = payloads.concatenation(list(cell.members), D)
    lengths = {j: int(solution.alpha[j] * D) for j in mapper_subset}
    covered = sum(lengths.values())
    residue = None
    if covered > data.shape[0]:
        pad = payloads.field.zeros((covered - data.shape[0], payloads.width))
        data = np.concatenate([data, pad], axis=0)
    elif covered < data.shape[0]:
        residue = data[covered:]
    pieces: Dict[int, FieldMatrix] = {}
    offset = 0
    for j in mapper_subset:
        pieces[j] = data[offset:offset + lengths[j]]
        offset += lengths[j]
    return pieces, residue


def _cell_pieces(cr: ClusterRound, solution: AlphaSolution, payloads: PayloadStore,
                 cells: List[NodeSet]) -> Dict[NodeSet, Tuple[Dict[int, FieldMatrix], Optional[FieldMatrix]]]:
    return {s1: split_cell(cr, s1, solution, payloads) for s1 in cells}


def osct_encode(cr: ClusterRound, solution: AlphaSolution, payloads: PayloadStore,
                gf: Optional[GaloisField] = None) -> List[OsctMessageBlock]:
    gf = gf if gf is not None else payloads.field
    if cr.skippable:
        return []
    D = solution.sub_symbols
    size, z = cr.size, cr.z
    split = _cell_pieces(cr, solution, payloads, list(cr.subsets))
    n_rows = binom(size - 2, z - 1)
    blocks: Dict[int, OsctMessageBlock] = {}

    for k in cr.cluster:
        piece_len = int(solution.alpha[k] * D)
        if piece_len == 0:
            continue
        columns = tuple(s1 for s1 in cr.subsets if k in s1)
        V = gf.vandermonde(gf.distinct_points(len(columns)), n_rows)
        stacked = np.concatenate([split[s1][0][k].reshape(1, -1) for s1 in columns], axis=0)
        blocks[k] = OsctMessageBlock(k, cr.cluster, z, columns, V, V @ stacked, piece_len)

    for s1 in cr.subsets:
        residue = split[s1][1]
        if residue is None:
            continue
        sender = s1[0]
        if sender not in blocks:
            blocks[sender] = OsctMessageBlock(sender, cr.cluster, z, (), gf.zeros((0, 0)),
                                              gf.zeros((0, 0)), 0)
        blocks[sender].residues[s1] = residue

    return [blocks[k] for k in sorted(blocks)]


def osct_decode(receiver: int, block: OsctMessageBlock,
                local_pieces: Dict[NodeSet, FieldMatrix], gf: GaloisField) -> Dict[NodeSet, FieldMatrix]:
    """
    Pieces of `block.sender` for the cells the receiver does not map.
    local_pieces holds the sender's pieces of cells containing the receiver,
    which the receiver cuts from its own Map outputs.
    """
    if receiver == block.sender:
        raise ValueError(f"Node {receiver} cannot decode its own block")
    recovered: Dict[NodeSet, FieldMatrix] = {}
    if block.n_lcs:
        known_cols = [i for i, s1 in enumerate(block.columns) if receiver in s1]
        unknown_cols = [i for i, s1 in enumerate(block.columns) if receiver not in s1]
        y = block.coded
        if known_cols:
            known = np.concatenate([local_pieces[block.columns[i]].reshape(1, -1) for i in known_cols], axis=0)
            y = y - block.coefficients[:, known_cols] @ known
        x = gf.solve(block.coefficients[:, unknown_cols], y)
        if x is None:
            raise SingularSystemError(
                f"Node {receiver}: Vandermonde block of node {block.sender} in cluster {list(block.cluster)} "
                f"round z={block.z} is singular")
        for row, i in enumerate(unknown_cols):
            recovered[block.columns[i]] = x[row].reshape(block.piece_len, -1)
    return recovered


def _reassemble(cr: ClusterRound, solution: AlphaSolution, s1: NodeSet,
                pieces: Dict[int, FieldMatrix], residue: Optional[FieldMatrix],
                width: int, gf: GaloisField) -> Dict[IVKey, FieldMatrix]:
    D = solution.sub_symbols
    parts = [pieces[j] for j in s1 if int(solution.alpha[j] * D) > 0]
    if residue is not None:
        parts.append(residue)
    data = np.concatenate(parts, axis=0) if parts else gf.zeros((0, width))
    members = cr.cell(s1).members
    if data.shape[0] < len(members) * D:
        raise SingularSystemError(f"Cell {list(s1)} reassembled {data.shape[0]} of {len(members) * D} sub-symbols")
    return {key: data[i * D:(i + 1) * D] for i, key in enumerate(members)}


def decode_round(cr: ClusterRound, solution: AlphaSolution, blocks: List[OsctMessageBlock],
                 receiver: int, payloads: PayloadStore) -> Dict[IVKey, FieldMatrix]:
    """All IVs of the round requested by `receiver`, each block decoded in isolation."""
    gf = payloads.field
    own_cells = [s1 for s1 in cr.subsets if receiver in s1 and len(cr.cell(s1))]
    local = _cell_pieces(cr, solution, payloads, own_cells)
    wanted = [s1 for s1 in cr.subsets if receiver not in s1 and len(cr.cell(s1))]
    collected: Dict[NodeSet, Dict[int, FieldMatrix]] = {s1: {} for s1 in wanted}
    residues: Dict[NodeSet, FieldMatrix] = {}
    for block in blocks:
        if block.sender == receiver:
            continue
        local_pieces = {s1: local[s1][0][block.sender] for s1 in block.columns if receiver in s1 and s1 in local}
        # pieces of empty cells are all-zero padding
        for s1 in block.columns:
            if receiver in s1 and s1 not in local_pieces:
                local_pieces[s1] = gf.zeros((block.piece_len, payloads.width))
        for s1, piece in osct_decode(receiver, block, local_pieces, gf).items():
            if s1 in collected:
                collected[s1][block.sender] = piece
        for s1, residue in block.residues.items():
            if s1 in collected:
                residues[s1] = residue
    out: Dict[IVKey, FieldMatrix] = {}
    for s1 in wanted:
        out.update(_reassemble(cr, solution, s1, collected[s1], residues.get(s1), payloads.width, gf))
    return out


# ----------------------------------------------------------------- accounting

def solve_rounds(analysis: ShuffleAnalysis) -> List[Tuple[ClusterRound, AlphaSolution]]:
    return [(cr, solve_p_osct(cr)) for cr in analysis.active_rounds]


def osct_load(inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Fraction:
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    total = sum((sol.cost for _, sol in solve_rounds(analysis)), Fraction(0))
    return total / (inst.Q * inst.N)


def check_theorem2(inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Dict[str, Any]:
    """OSCT meets the lower bound when every round's least-squares objective is zero."""
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    solved = solve_rounds(analysis)
    witness = [{'round': cr.label(), 'objective': sol.objective} for cr, sol in solved if sol.objective != 0]
    optimal = not witness
    load = sum((sol.cost for _, sol in solved), Fraction(0)) / (inst.Q * inst.N)
    bound = analysis.lower_bound()
    if optimal and load != bound:
        raise AssertionError(f"All OSCT objectives vanish but load {load} != lower bound {bound}")
    return {'optimal': optimal, 'witness': witness, 'load': load, 'lower_bound': bound}


def run_osct(inst: SystemInstance, payloads: PayloadStore,
             analysis: Optional[ShuffleAnalysis] = None, verify: bool = True) -> ShuffleTranscript:
    """Encodes every round, decodes at every requester, and records the traffic."""
    analysis = analysis if analysis is not None else ShuffleAnalysis(inst)
    transcript = ShuffleTranscript('osct')
    for cr, sol in solve_rounds(analysis):
        D = sol.sub_symbols
        blocks = osct_encode(cr, sol, payloads)
        for block in blocks:
            if block.coded_symbols:
                transcript.add(cr.cluster, cr.z, block.sender, block.coded_symbols, D,
                               payloads.sub_symbol_bits, block.n_lcs, kind='coded')
            for s1, residue in block.residues.items():
                transcript.add(cr.cluster, cr.z, block.sender, int(residue.shape[0]), D,
                               payloads.sub_symbol_bits, 0, kind='residue')
        logger.debug(f"OSCT {cr.label()}: alpha={[str(a) for a in sol.vector()]}, D={D}, "
                     f"cost={sol.cost}, objective={sol.objective}, blocks={len(blocks)}")
        if not verify:
            continue
        for receiver in cr.cluster:
            recovered = decode_round(cr, sol, blocks, receiver, payloads)
            for key, value in recovered.items():
                if not payloads.matches(key, value, D):
                    raise SingularSystemError(f"Node {receiver} recovered a corrupted {key} in {cr.label()}")
            expected = sum(len(c) for c in cr.cells if receiver not in c.mapper_subset)
            if len(recovered) != expected:
                raise SingularSystemError(f"Node {receiver} recovered {len(recovered)} of {expected} IVs in {cr.label()}")
    return transcript


class OsctScheme(BaseScheme):
    scheme_type_name: str = "osct"

    @staticmethod
    def get_default_params() -> dict:
        return {
            "verify": {"type": "bool", "default": True,
                       "desc": "Decode every block at every receiver and compare with the payload store."},
        }

    def analytic_load(self, inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Fraction:
        return osct_load(inst, self._analysis(inst, analysis))

    def run(self, inst: SystemInstance, payloads: PayloadStore, rng: np.random.Generator,
            analysis: Optional[ShuffleAnalysis] = None) -> ShuffleTranscript:
        # rng unused: OSCT coefficients are deterministic Vandermonde blocks
        verify = bool(self.get_param("verify", True)) and self.settings.verify
        return run_osct(inst, payloads, self._analysis(inst, analysis), verify=verify)

    def optimality(self, inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Dict[str, Any]:
        return check_theorem2(inst, self._analysis(inst, analysis))
