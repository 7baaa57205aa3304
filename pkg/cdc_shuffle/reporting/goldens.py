"""
Golden registry: worked examples with known exact answers. Each golden
returns a list of mismatch descriptions; an empty list is a pass.
"""
import logging
import os
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

try:
    from cdc_shuffle.core.analysis import ShuffleAnalysis, deficit_profile
    from cdc_shuffle.core.instance import InstanceDescriptor, SystemInstance, generate, load_json
    from cdc_shuffle.oracles.closed_forms import (ThreeNodePartition, g_function, homogeneous_load,
                                                  semi_homogeneous_load, three_node_load)
    from cdc_shuffle.schemes.fsct import check_theorem4, fsct_load, plan_round, unknown_segments
    from cdc_shuffle.schemes.osct import check_theorem2, osct_load, solve_p_osct
except ImportError:
    import sys  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.analysis import ShuffleAnalysis, deficit_profile  # type: ignore
    from cdc_shuffle.core.instance import InstanceDescriptor, SystemInstance, generate, load_json  # type: ignore
    from cdc_shuffle.oracles.closed_forms import (ThreeNodePartition, g_function, homogeneous_load,  # type: ignore
                                                  semi_homogeneous_load, three_node_load)
    from cdc_shuffle.schemes.fsct import check_theorem4, fsct_load, plan_round, unknown_segments  # type: ignore
    from cdc_shuffle.schemes.osct import check_theorem2, osct_load, solve_p_osct  # type: ignore

logger = logging.getLogger('cdc_shuffle.goldens')

DEFAULT_DATA_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '../../data'))

F = Fraction

# Optimal alpha per nonempty (cluster, round) of the first worked example, node order.
# {1,2,4}/z=2 has cell sizes (2, 1, 2) like {1,2,3}/z=2 and the same unique optimum.
EXAMPLE1_ALPHA: Dict[str, Tuple[Fraction, ...]] = {
    "{1,2,3,4}/z=2": (F(1), F(1), F(0), F(0)),
    "{1,2,3}/z=2": (F(1, 2), F(3, 2), F(1, 2)),
    "{1,2,3}/z=1": (F(1), F(1), F(0)),
    "{1,2,4}/z=2": (F(1, 2), F(3, 2), F(1, 2)),
    "{1,2,4}/z=1": (F(1), F(1), F(0)),
    "{1,3,4}/z=2": (F(3), F(0), F(0)),
    "{1,3,4}/z=1": (F(2), F(0), F(1)),
    "{2,3,4}/z=2": (F(3), F(0), F(0)),
    "{2,3,4}/z=1": (F(2), F(0), F(1)),
    "{1,2}/z=1": (F(0), F(1)),
    "{1,3}/z=1": (F(1), F(0)),
    "{1,4}/z=1": (F(1), F(2)),
    "{2,3}/z=1": (F(1), F(0)),
    "{2,4}/z=1": (F(1), F(1)),
    "{3,4}/z=1": (F(0), F(2)),
}

GoldenFn = Callable[[str], List[str]]


def _expect(label: str, actual, expected) -> List[str]:
    return [] if actual == expected else [f"{label}: expected {expected}, got {actual}"]


def _example(data_dir: str, name: str) -> Tuple[SystemInstance, ShuffleAnalysis]:
    inst = load_json(os.path.join(data_dir, name))
    return inst, ShuffleAnalysis(inst)


# ---------------------------------------------------------------- example 1

def golden_example1_loads(data_dir: str) -> List[str]:
    inst, analysis = _example(data_dir, 'example1.json')
    return (_expect("lower bound", analysis.lower_bound(), F(35, 56))
            + _expect("osct load", osct_load(inst, analysis), F(35, 56))
            + _expect("uncoded load", analysis.uncoded_load(), F(64, 56)))


def golden_example1_theorem2(data_dir: str) -> List[str]:
    inst, analysis = _example(data_dir, 'example1.json')
    return _expect("theorem2 optimal", check_theorem2(inst, analysis)['optimal'], True)


def golden_example1_cells(data_dir: str) -> List[str]:
    _, analysis = _example(data_dir, 'example1.json')
    labels = [cr.label() for cr in analysis.active_rounds]
    out = _expect("nonempty rounds", sorted(labels), sorted(EXAMPLE1_ALPHA))
    skipped = {cr.label() for cr in analysis.rounds if cr.cluster == (1, 2, 3, 4) and cr.skippable}
    out += _expect("skipped rounds of {1,2,3,4}", skipped, {"{1,2,3,4}/z=3", "{1,2,3,4}/z=1"})
    rec = analysis.catalog.record(1, 1)
    out += _expect("v_{1,1} mappers", sorted(rec.mappers), [1, 2])
    out += _expect("v_{1,1} requesters", sorted(rec.requesters), [3])
    cell = next(cr for cr in analysis.rounds if cr.label() == "{1,2,3}/z=2").cell((1, 2))
    out += _expect("V_{1,2}^{3}", [(k.q, k.n) for k in cell.members], [(1, 1), (3, 1)])
    return out


def golden_example1_alpha(data_dir: str) -> List[str]:
    _, analysis = _example(data_dir, 'example1.json')
    out: List[str] = []
    for cr in analysis.active_rounds:
        expected = EXAMPLE1_ALPHA.get(cr.label())
        if expected is None:
            out.append(f"unexpected round {cr.label()}")
            continue
        out += _expect(f"alpha {cr.label()}", solve_p_osct(cr).vector(), expected)
    return out


# ---------------------------------------------------------------- example 2

def golden_example2_loads(data_dir: str) -> List[str]:
    inst, analysis = _example(data_dir, 'example2.json')
    bound = analysis.lower_bound()
    out = _expect("lower bound", bound, F(40, 63))
    out += _expect("lower bound (3 places)", round(float(bound), 3), 0.635)
    out += _expect("fsct load", fsct_load(inst, analysis), bound)
    out += _expect("osct load", osct_load(inst, analysis), F(2, 3))
    return out


def golden_example2_theorems(data_dir: str) -> List[str]:
    inst, analysis = _example(data_dir, 'example2.json')
    return (_expect("theorem4 optimal", check_theorem4(inst, analysis)['optimal'], True)
            + _expect("theorem2 optimal", check_theorem2(inst, analysis)['optimal'], False))


def golden_example2_round(data_dir: str) -> List[str]:
    _, analysis = _example(data_dir, 'example2.json')
    cr = next(c for c in analysis.rounds if c.label() == "{1,2,3,4}/z=2")
    out = _expect("cell sizes", cr.cell_sizes(),
                  {(1, 2): 0, (1, 3): 1, (1, 4): 1, (2, 3): 1, (2, 4): 1, (3, 4): 0})
    rec = analysis.catalog.record(5, 1)
    out += _expect("v_{5,1} mappers", sorted(rec.mappers), [1, 3])
    out += _expect("v_{5,1} requesters", sorted(rec.requesters), [2, 4])
    out += _expect("n", deficit_profile(cr).n, {1: 2, 2: 2, 3: 2, 4: 2})
    plan = plan_round(cr)
    unknown = unknown_segments(cr, 1, plan.segments_per_iv)
    received = sum(plan.rows(k) for k in cr.cluster if k != 1)
    out += _expect("node 1 system", (received, len(unknown)), (6, 6))
    return out


# ----------------------------------------------------------- closed forms

def golden_homogeneous(data_dir: str) -> List[str]:
    inst = generate(InstanceDescriptor.homogeneous(3, 2, 1, 3, 3))
    analysis = ShuffleAnalysis(inst)
    return (_expect("closed form", homogeneous_load(3, 2, 1), F(1, 6))
            + _expect("osct load", osct_load(inst, analysis), F(1, 6))
            + _expect("fsct load", fsct_load(inst, analysis), F(1, 6))
            + _expect("lower bound", analysis.lower_bound(), F(1, 6)))


def golden_semi_homogeneous(data_dir: str) -> List[str]:
    Q_s = {1: 4, 2: 6}
    inst = generate(InstanceDescriptor.semi_homogeneous(4, 2, Q_s, 6))
    analysis = ShuffleAnalysis(inst)
    expected = semi_homogeneous_load(4, 2, Q_s)
    return (_expect("osct load", osct_load(inst, analysis), expected)
            + _expect("fsct load", fsct_load(inst, analysis), expected))


def golden_g_function(data_dir: str) -> List[str]:
    return _expect("g(1,1,1)", g_function(1, 1, 1), F(3, 2))


def _three_node(partition: ThreeNodePartition, expected_units: Fraction) -> List[str]:
    inst = partition.to_instance()
    analysis = ShuffleAnalysis(inst)
    QN = inst.Q * inst.N
    return (_expect("closed form", three_node_load(partition), expected_units)
            + _expect("osct units", osct_load(inst, analysis) * QN, expected_units)
            + _expect("fsct units", fsct_load(inst, analysis) * QN, expected_units))


def golden_three_node_balanced(data_dir: str) -> List[str]:
    # S12 + S13 >= S23: half the pairwise total
    return _three_node(ThreeNodePartition(S12=1, S13=1, S23=1), F(3, 2))


def golden_three_node_dominant(data_dir: str) -> List[str]:
    # S12 + S13 < S23: the dominant pair sets the load
    return _three_node(ThreeNodePartition(S1=1, S12=1, S13=1, S23=3), F(2) + F(3))


GOLDENS: List[Tuple[str, GoldenFn]] = [
    ("example1.loads", golden_example1_loads),
    ("example1.theorem2", golden_example1_theorem2),
    ("example1.cells", golden_example1_cells),
    ("example1.alpha", golden_example1_alpha),
    ("example2.loads", golden_example2_loads),
    ("example2.theorems", golden_example2_theorems),
    ("example2.round_1234_z2", golden_example2_round),
    ("homogeneous.K3_r2_s1", golden_homogeneous),
    ("semi_homogeneous.K4_r2", golden_semi_homogeneous),
    ("three_node.g_111", golden_g_function),
    ("three_node.balanced", golden_three_node_balanced),
    ("three_node.dominant", golden_three_node_dominant),
]


def golden_ids() -> List[str]:
    return [name for name, _ in GOLDENS]


def run_goldens(list_only: bool = False, data_dir: str = DEFAULT_DATA_DIR) -> Tuple[List[str], Dict[str, List[str]]]:
    """(passed identifiers, failures by identifier). list_only reports every identifier as passed unrun."""
    if list_only:
        return golden_ids(), {}
    passed: List[str] = []
    failures: Dict[str, List[str]] = {}
    for name, fn in GOLDENS:
        try:
            mismatches = fn(data_dir)
        except Exception as e:
            logger.error(f"Golden {name} raised: {e}", exc_info=True)
            mismatches = [f"raised {type(e).__name__}: {e}"]
        if mismatches:
            failures[name] = mismatches
            for line in mismatches:
                logger.error(f"Golden {name}: {line}")
        else:
            passed.append(name)
            logger.info(f"Golden {name}: ok")
    logger.info(f"Goldens: {len(passed)} passed, {len(failures)} failed.")
    return passed, failures
