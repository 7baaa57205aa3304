from fractions import Fraction

import numpy as np
import pytest

from cdc_shuffle.core.algebra import binom
from cdc_shuffle.core.analysis import ShuffleAnalysis, deficit_profile
from cdc_shuffle.core.exceptions import DescriptorError, TinyOracleLimitError
from cdc_shuffle.core.instance import InstanceDescriptor, SystemInstance, all_files_everywhere, generate
from cdc_shuffle.oracles.brute_force import (MAX_TINY_IVS, brute_force_min_load_tiny, exhaustive_osct_objective,
                                             feasible_by_vertex_enumeration, permutation_cut_bound)
from cdc_shuffle.oracles.closed_forms import (ThreeNodePartition, g_function, homogeneous_load,
                                              semi_homogeneous_load, three_node_load)
from cdc_shuffle.schemes.fsct import check_feasible, fsct_load
from cdc_shuffle.schemes.osct import osct_load, closed_form_alpha, closed_form_applies, solve_p_osct

F = Fraction


@pytest.mark.parametrize("xs, expected", [
    ((1, 1, 1), F(3, 2)),
    ((1, 1, 3), F(3)),
    ((0, 0, 0), F(0)),
    ((2, 3, 4), F(9, 2)),
    ((0, 2, 5), F(5)),
])
def test_g_function(xs, expected):
    assert g_function(*xs) == expected


def test_g_function_ignores_order():
    assert g_function(5, 0, 2) == g_function(0, 2, 5) == g_function(2, 5, 0)


def _homogeneous_grid(K_values):
    return [(K, r, s) for K in K_values for r in range(1, K) for s in range(1, K + 1)]


def _check_homogeneous(K, r, s):
    inst = generate(InstanceDescriptor.homogeneous(K, r, s, binom(K, r), binom(K, s)))
    analysis = ShuffleAnalysis(inst)
    expected = homogeneous_load(K, r, s)
    assert analysis.lower_bound() == expected
    assert osct_load(inst, analysis) == expected
    assert fsct_load(inst, analysis) == expected


@pytest.mark.parametrize("K, r, s", _homogeneous_grid([2, 3, 4]))
def test_homogeneous_engines_meet_the_closed_form(K, r, s):
    _check_homogeneous(K, r, s)


@pytest.mark.slow
@pytest.mark.parametrize("K, r, s", _homogeneous_grid([5, 6]))
def test_homogeneous_engines_meet_the_closed_form_large(K, r, s):
    _check_homogeneous(K, r, s)


def test_homogeneous_load_edges():
    assert homogeneous_load(3, 2, 1) == F(1, 6)
    assert homogeneous_load(4, 4, 2) == 0
    # every node reduces every function: (K - r) / (K - 1)
    assert homogeneous_load(5, 2, 5) == F(3, 4)
    with pytest.raises(ValueError):
        homogeneous_load(3, 0, 1)


@pytest.mark.parametrize("Q_s", [{1: 4, 2: 6}, {1: 8, 3: 4}, {2: 6, 4: 1}])
def test_semi_homogeneous_engines_meet_the_mixture(Q_s):
    inst = generate(InstanceDescriptor.semi_homogeneous(4, 2, Q_s, 6))
    analysis = ShuffleAnalysis(inst)
    expected = semi_homogeneous_load(4, 2, Q_s)
    assert analysis.lower_bound() == expected
    assert osct_load(inst, analysis) == expected
    assert fsct_load(inst, analysis) == expected


def test_three_node_partition_round_trip():
    partition = ThreeNodePartition(S1=2, S23=1, S123=3)
    inst = partition.to_instance()
    assert inst.N == partition.N == 6
    assert ThreeNodePartition.from_instance(inst) == partition
    with pytest.raises(ValueError):
        ThreeNodePartition(S12=-1)


def test_three_node_engines_meet_the_formula():
    rng = np.random.default_rng(2023)
    balanced = unbalanced = 0
    for _ in range(500):
        partition = ThreeNodePartition.random(rng)
        inst = partition.to_instance()
        analysis = ShuffleAnalysis(inst)
        QN = inst.Q * inst.N
        expected = three_node_load(partition)
        assert osct_load(inst, analysis) * QN == expected, partition
        assert fsct_load(inst, analysis) * QN == expected, partition
        pairs = sorted((partition.S12, partition.S13, partition.S23))
        if pairs[0] + pairs[1] >= pairs[2]:
            balanced += 1
        else:
            unbalanced += 1
    assert balanced and unbalanced


def test_brute_force_nothing_to_send():
    assert brute_force_min_load_tiny(all_files_everywhere(3, 2, 2)) == 0


def test_brute_force_single_iv():
    inst = SystemInstance.create(2, 1, 1, [[1], []], [[], [1]])
    assert brute_force_min_load_tiny(inst) == 1


def test_brute_force_limit():
    inst = generate(InstanceDescriptor.homogeneous(4, 1, 1, 4, 4))
    assert MAX_TINY_IVS == 12
    assert brute_force_min_load_tiny(inst) == F(3, 4)
    with pytest.raises(TinyOracleLimitError):
        brute_force_min_load_tiny(inst, max_ivs=MAX_TINY_IVS - 1)
    with pytest.raises(TinyOracleLimitError):
        brute_force_min_load_tiny(inst, max_ivs=4)


def test_brute_force_sits_between_bound_and_schemes(crossed_pairs):
    analysis = ShuffleAnalysis(crossed_pairs)
    assert permutation_cut_bound(crossed_pairs) == F(1, 4)
    assert brute_force_min_load_tiny(crossed_pairs) == analysis.lower_bound() == F(1, 3)

    rng = np.random.default_rng(31)
    for trial in range(20):
        m = [F(int(rng.integers(1, 4)), 3) for _ in range(3)]
        w = [F(int(rng.integers(1, 4)), 3) for _ in range(3)]
        try:
            inst = generate(InstanceDescriptor.random_by_load(3, m, w, 3, 3, seed=trial))
        except DescriptorError:
            continue
        analysis = ShuffleAnalysis(inst)
        oracle = brute_force_min_load_tiny(inst)
        assert analysis.lower_bound() <= oracle
        assert oracle <= osct_load(inst, analysis)
        assert oracle <= fsct_load(inst, analysis)


def _rounds(*instances):
    for inst in instances:
        yield from ShuffleAnalysis(inst).active_rounds


def test_active_set_matches_exhaustive_search(example1, example2, crossed_pairs):
    three_node = generate(InstanceDescriptor.three_node({'12': 1, '13': 1, '23': 3}))
    for cr in _rounds(example1, example2, crossed_pairs, three_node):
        sol = solve_p_osct(cr)
        assert sol.objective == exhaustive_osct_objective(cr), cr.label()
        if closed_form_applies(cr):
            assert closed_form_alpha(cr) == sol.alpha


def test_max_flow_matches_vertex_enumeration(example1, example2, crossed_pairs):
    checked = 0
    for cr in _rounds(example1, example2, crossed_pairs):
        profile = deficit_profile(cr)
        for node in cr.cluster:
            try:
                expected = feasible_by_vertex_enumeration(cr, node)
            except TinyOracleLimitError:
                continue
            assert check_feasible(cr, profile, node).feasible == expected, (cr.label(), node)
            checked += 1
    assert checked > 0
