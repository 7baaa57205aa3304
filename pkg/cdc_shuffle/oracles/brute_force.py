"""
Exhaustive references for small problems. None of them calls into the schemes.
"""
import itertools
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

try:
    from cdc_shuffle.core.algebra import positive_part, rational_row_reduce, solve_rational
    from cdc_shuffle.core.analysis import ClusterRound, build_catalog, deficit_profile, lower_bound
    from cdc_shuffle.core.exceptions import TinyOracleLimitError
    from cdc_shuffle.core.instance import SystemInstance
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.algebra import positive_part, rational_row_reduce, solve_rational  # type: ignore
    from cdc_shuffle.core.analysis import ClusterRound, build_catalog, deficit_profile, lower_bound  # type: ignore
    from cdc_shuffle.core.exceptions import TinyOracleLimitError  # type: ignore
    from cdc_shuffle.core.instance import SystemInstance  # type: ignore

logger = logging.getLogger('cdc_shuffle.brute_force')

MAX_TINY_IVS = 12
MAX_ACTIVE_SET_NODES = 8
MAX_BETA_VARIABLES = 8


def permutation_cut_bound(inst: SystemInstance) -> Fraction:
    """
    Best genie-aided bound over node orderings: node sigma_i must learn every IV
    it needs that none of sigma_1..sigma_i maps and none of sigma_1..sigma_{i-1}
    already needed.
    """
    catalog = build_catalog(inst)
    best = 0
    for order in itertools.permutations(inst.nodes):
        seen_mappers, seen_needs, count = set(), set(), 0
        for k in order:
            seen_mappers.add(k)
            for rec in catalog:
                if k in rec.requesters and rec.key not in seen_needs and not (rec.mappers & seen_mappers):
                    count += 1
                    seen_needs.add(rec.key)
            seen_needs.update(rec.key for rec in catalog if k in rec.requesters)
        best = max(best, count)
    return Fraction(best, inst.Q * inst.N)


def brute_force_min_load_tiny(inst: SystemInstance, max_ivs: int = MAX_TINY_IVS) -> Fraction:
    """
    Largest of the counting bound and the ordering bound; never above an achievable load.
    Accepts up to MAX_TINY_IVS (12) needed IVs, double the six-IV reach of an
    exhaustive search over linear schemes, since both bounds are closed form.
    """
    catalog = build_catalog(inst)
    if len(catalog) > max_ivs:
        raise TinyOracleLimitError(len(catalog), max_ivs)
    return max(lower_bound(catalog), permutation_cut_bound(inst))


def exhaustive_osct_objective(cr: ClusterRound) -> Fraction:
    """
    Minimum of sum_i (|V_i| - sum_{j in S_z[i]} alpha_j)^2 over alpha >= 0 with
    alpha summing to zero on empty cells, found by checking the KKT conditions
    of every support.
    """
    if cr.size > MAX_ACTIVE_SET_NODES:
        raise TinyOracleLimitError(cr.size, MAX_ACTIVE_SET_NODES, "nodes per cluster")
    cells = [(c.mapper_subset, len(c)) for c in cr.cells]
    nodes = list(cr.cluster)

    def objective(alpha: Dict[int, Fraction]) -> Fraction:
        return sum(((b - sum(alpha[j] for j in s1)) ** 2 for s1, b in cells), Fraction(0))

    best: Optional[Fraction] = None
    for size in range(len(nodes) + 1):
        for support in itertools.combinations(nodes, size):
            # stationarity on the support: sum over cells containing a of the residual = 0
            gram = [[sum(1 for s1, _ in cells if a in s1 and b in s1) for b in support] for a in support]
            rhs = [sum(b for s1, b in cells if a in s1) for a in support]
            sol = solve_rational(gram, rhs) if support else []
            if sol is None:
                continue
            alpha = {k: Fraction(0) for k in nodes}
            alpha.update(dict(zip(support, sol)))
            if any(v < 0 for v in alpha.values()):
                continue
            if any(b == 0 and sum(alpha[j] for j in s1) != 0 for s1, b in cells):
                continue
            pinned = {j for s1, b in cells if b == 0 for j in s1}
            residual = {s1: b - sum(alpha[j] for j in s1) for s1, b in cells}
            kkt = all(sum(residual[s1] for s1, _ in cells if k in s1) <= 0
                      for k in nodes if k not in support and k not in pinned)
            if not kkt:
                continue
            value = objective(alpha)
            best = value if best is None else min(best, value)
    assert best is not None
    return best


def feasible_by_vertex_enumeration(cr: ClusterRound, node: int,
                                   capacities: Optional[Dict[int, Fraction]] = None,
                                   max_vars: int = MAX_BETA_VARIABLES) -> bool:
    """
    Is {beta >= 0, sum_{j in S1} beta_{j,S1} >= (|S|-1)|V_S1|, sum_{S1} beta_{j,S1} <= cap_j}
    nonempty? The set has no lines, so it is nonempty iff some basic solution
    (n linearly independent tight constraints) satisfies every constraint.
    """
    if capacities is None:
        profile = deficit_profile(cr)
        capacities = {j: Fraction(positive_part(profile.n[j])) for j in cr.cluster}
    cells = [(c.mapper_subset, len(c)) for c in cr.cells if node not in c.mapper_subset and len(c)]
    variables: List[Tuple[int, tuple]] = [(j, s1) for s1, _ in cells for j in s1]
    n = len(variables)
    if n == 0:
        return True
    if n > max_vars:
        raise TinyOracleLimitError(n, max_vars, "beta variables")

    # every constraint as (row, bound, sense) meaning row . beta  sense  bound
    constraints = []
    for s1, size in cells:
        constraints.append(([1 if v[1] == s1 else 0 for v in variables], Fraction((cr.size - 1) * size), '>='))
    for j in sorted({j for s1, _ in cells for j in s1}):
        constraints.append(([1 if v[0] == j else 0 for v in variables], Fraction(capacities[j]), '<='))
    for i in range(n):
        constraints.append(([1 if c == i else 0 for c in range(n)], Fraction(0), '>='))

    def satisfied(beta: List[Fraction]) -> bool:
        for row, bound, sense in constraints:
            value = sum(a * b for a, b in zip(row, beta))
            if (sense == '>=' and value < bound) or (sense == '<=' and value > bound):
                return False
        return True

    for tight in itertools.combinations(range(len(constraints)), n):
        A = [[Fraction(a) for a in constraints[t][0]] for t in tight]
        if rational_row_reduce([row[:] for row in A]):
            continue  # rank deficient: not a vertex
        beta = solve_rational(A, [constraints[t][1] for t in tight])
        if beta is not None and satisfied(beta):
            return True
    return False
