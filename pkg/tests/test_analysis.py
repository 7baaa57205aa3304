from fractions import Fraction

import pytest

from cdc_shuffle.core.analysis import (ShuffleAnalysis, a_table, a_table_frame, build_catalog, cluster_window,
                                       deficit_profile, round_needed_ivs, semi_homogeneous_a_table)
from cdc_shuffle.core.exceptions import InstanceValidationError
from cdc_shuffle.core.instance import InstanceDescriptor, SystemInstance, all_files_everywhere, generate

from conftest import find_round


def test_example1_a_table(example1_analysis):
    assert a_table(example1_analysis.catalog) == {(1, 1): 10, (1, 2): 10, (2, 1): 22, (2, 2): 6}


def test_example1_bounds(example1_analysis):
    assert example1_analysis.lower_bound() == Fraction(35, 56)
    assert example1_analysis.uncoded_load() == Fraction(64, 56)


def test_example2_bounds(example2_analysis):
    assert a_table(example2_analysis.catalog) == {(1, 1): 12, (1, 2): 6, (2, 1): 12, (2, 2): 4}
    assert example2_analysis.lower_bound() == Fraction(40, 63)
    assert example2_analysis.uncoded_load() == Fraction(44, 42)


def test_catalog_records(example1_analysis):
    rec = example1_analysis.catalog.record(1, 1)
    assert rec.mappers == frozenset({1, 2}) and rec.requesters == frozenset({3})
    assert (rec.t, rec.d) == (2, 1)
    # v_{7,1}: function 7 lives on node 1, which maps file 1
    assert (7, 1) not in example1_analysis.catalog


def test_every_needed_iv_lands_in_exactly_one_cell(example1_analysis):
    seen = [key for cr in example1_analysis.rounds for key in round_needed_ivs(cr)]
    assert len(seen) == len(set(seen)) == len(example1_analysis.catalog)


def test_example1_rounds(example1_analysis):
    assert cluster_window(example1_analysis.instance) == (2, 2)
    active = example1_analysis.active_rounds
    assert len(active) == 15
    assert active[0].label() == "{1,2}/z=1"
    assert active[-1].label() == "{1,2,3,4}/z=2"
    skipped = [cr.label() for cr in example1_analysis.rounds if cr.cluster == (1, 2, 3, 4) and cr.skippable]
    assert skipped == ["{1,2,3,4}/z=3", "{1,2,3,4}/z=1"]


def test_cells_of_the_three_node_cluster(example1_analysis):
    cr = find_round(example1_analysis, "{1,2,3}/z=2")
    assert cr.cell_sizes() == {(1, 2): 2, (1, 3): 1, (2, 3): 2}
    assert [(k.q, k.n) for k in cr.cell((2, 3)).members] == [(1, 4), (7, 4)]
    assert cr.cell((1, 3)).requesters == (2,)


def test_deficit_profile(example1_analysis):
    profile = deficit_profile(find_round(example1_analysis, "{1,2,3}/z=2"))
    assert profile.known == {1: 3, 2: 4, 3: 3}
    assert profile.desired == {1: 2, 2: 1, 3: 2}
    assert profile.ratios == {1: Fraction(2, 3), 2: Fraction(1, 4), 3: Fraction(2, 3)}
    assert profile.n == {1: 1, 2: 3, 3: 1}
    assert profile.all_satisfied and profile.violators == []


def test_deficit_ratio_undefined_when_nothing_is_known(example1_analysis):
    profile = deficit_profile(find_round(example1_analysis, "{1,3,4}/z=1"))
    # node 3 maps nothing in this round but needs three IVs; z = 1 never violates
    assert profile.ratios[3] is None
    assert profile.n[3] == 0
    assert profile.all_satisfied


def test_deficit_violator_in_unbalanced_three_node_round():
    inst = generate(InstanceDescriptor.three_node({'12': 1, '13': 1, '23': 3}))
    profile = deficit_profile(find_round(ShuffleAnalysis(inst), "{1,2,3}/z=2"))
    assert profile.ratios[1] == Fraction(3, 2)
    assert profile.n == {1: -1, 2: 3, 3: 3}
    assert profile.violators == [1]


def test_everything_local_means_nothing_to_send():
    analysis = ShuffleAnalysis(all_files_everywhere(3, 4, 3))
    assert len(analysis.catalog) == 0
    assert analysis.active_rounds == []
    assert analysis.lower_bound() == 0 and analysis.uncoded_load() == 0


def test_unmapped_file_with_requester_is_rejected():
    inst = SystemInstance.create(2, 2, 1, [[1], [1]], [[1], []])
    with pytest.raises(InstanceValidationError, match="file 2 unmapped"):
        build_catalog(inst)


def test_semi_homogeneous_a_table_matches_enumeration():
    Q_s = {1: 4, 2: 6}
    inst = generate(InstanceDescriptor.semi_homogeneous(4, 2, Q_s, 6))
    expected = semi_homogeneous_a_table(4, 2, Q_s, 6)
    assert expected == {(2, 1): 36, (2, 2): 6}
    assert a_table(build_catalog(inst)) == expected


def test_a_table_frame_is_sorted(example1_analysis):
    frame = a_table_frame(a_table(example1_analysis.catalog))
    assert list(frame.columns) == ['t', 'd', 'count']
    assert frame[['t', 'd']].values.tolist() == [[1, 1], [1, 2], [2, 1], [2, 2]]
    assert frame['count'].sum() == len(example1_analysis.catalog)
