from fractions import Fraction

import numpy as np
import pytest

from cdc_shuffle.core.algebra import (GaloisField, binom, format_rational, get_field, lcm_of_denominators,
                                      positive_part, solve_rational)
from cdc_shuffle.core.exceptions import FieldError
from cdc_shuffle.core.instance import IVKey
from cdc_shuffle.core.payloads import PayloadStore


def test_binom_is_zero_outside_the_triangle():
    assert binom(4, 2) == 6
    assert binom(2, -1) == 0
    assert binom(1, 2) == 0
    assert binom(-1, 0) == 0


def test_rational_helpers():
    assert lcm_of_denominators([Fraction(1, 2), Fraction(2, 3), Fraction(5)]) == 6
    assert lcm_of_denominators([]) == 1
    assert positive_part(Fraction(-1, 3)) == 0
    assert positive_part(Fraction(1, 3)) == Fraction(1, 3)
    assert format_rational(Fraction(35, 56)) == "5/8"
    assert format_rational(Fraction(4, 2)) == "2"


def test_solve_rational_exact():
    assert solve_rational([[2, 1], [1, 2]], [2, 3]) == [Fraction(1, 3), Fraction(4, 3)]


def test_solve_rational_free_variables_are_zero():
    assert solve_rational([[1, 1], [2, 2]], [3, 6]) == [Fraction(3), Fraction(0)]


def test_solve_rational_inconsistent():
    assert solve_rational([[1, 1], [1, 1]], [1, 2]) is None


@pytest.fixture(scope="module")
def gf() -> GaloisField:
    return get_field(16)


def test_field_solve_recovers_random_system(gf, rng):
    A = gf.random_matrix(5, 5, rng)
    x = gf.random_matrix(5, 3, rng)
    sol = gf.solve(A, A @ x)
    if gf.rank(A) == 5:
        assert np.array_equal(sol, x)
    else:
        assert sol is None


def test_field_solve_overdetermined_consistent(gf, rng):
    A = gf.random_matrix(4, 2, rng)
    x = gf.random_matrix(2, 1, rng)
    b = A @ x
    stacked = np.concatenate([A, gf.zeros((1, 2))], axis=0)
    rhs = np.concatenate([b, gf.zeros((1, 1))], axis=0)
    assert np.array_equal(gf.solve(stacked, rhs), x)


def test_field_solve_singular_and_underdetermined(gf):
    A = gf.array([[1, 2], [1, 2]])
    assert gf.solve(A, gf.array([[1], [1]])) is None
    assert gf.solve(gf.array([[1, 2]]), gf.array([[1]])) is None


def test_field_solve_dimension_mismatch(gf):
    with pytest.raises(FieldError, match="Dimension mismatch"):
        gf.solve(gf.array([[1, 0], [0, 1]]), gf.array([[1], [1], [1]]))


def test_vandermonde_blocks_have_full_rank(gf):
    V = gf.vandermonde(gf.distinct_points(6), 3)
    assert V.shape == (3, 6)
    assert gf.rank(V) == 3
    # any 3 columns form an invertible square block
    assert gf.rank(V[:, [0, 2, 5]]) == 3


def test_vandermonde_rejects_repeated_points(gf):
    with pytest.raises(FieldError, match="pairwise distinct"):
        gf.vandermonde([1, 2, 2], 2)


def test_random_matrix_entries_are_nonzero(gf, rng):
    R = gf.random_matrix(8, 8, rng)
    assert np.all(gf.to_ints(R) > 0)


def test_small_field_runs_out_of_points():
    small = GaloisField(2)
    with pytest.raises(FieldError):
        small.distinct_points(4)


def test_payloads_are_a_pure_function_of_the_key(gf):
    a, b = PayloadStore(gf, seed=3), PayloadStore(gf, seed=3)
    key = IVKey(2, 5)
    assert np.array_equal(a.payload(key, 4), b.payload(key, 4))
    assert not np.array_equal(a.payload(key, 4), PayloadStore(gf, seed=4).payload(key, 4))
    assert a.payload(key, 4).shape == (4, a.width)
    assert a.sub_symbol_bits == 32
    segments = a.segments(key, 3)
    assert len(segments) == 3 and all(s.shape == (1, a.width) for s in segments)
    assert a.matches(key, a.payload(key, 4))
