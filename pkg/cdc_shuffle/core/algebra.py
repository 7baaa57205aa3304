"""
Numeric substrate shared by both shuffle schemes.

Exact rationals (``fractions.Fraction``) carry every load, segment size and
flow value. Coded payloads live in GF(2^m), backed by ``galois`` arrays; the
elimination routines below work on those arrays row-by-row so that rank,
singularity and consistency are all decided exactly in the field.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import galois
import numpy as np

try:
    from cdc_shuffle.core.exceptions import FieldError
except ImportError:
    from exceptions import FieldError  # type: ignore

Rational = Fraction
FieldMatrix = galois.FieldArray

# x^16 + x^12 + x^3 + x + 1
DEFAULT_IRREDUCIBLE_POLYS = {16: 0x1100B}

logger = logging.getLogger('cdc_shuffle.algebra')


# ---------------------------------------------------------------- rationals

def as_rational(value: Union[int, str, Fraction]) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def positive_part(value: Fraction) -> Fraction:
    return value if value > 0 else Fraction(0)


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    result = 1
    for v in values:
        result = math.lcm(result, Fraction(v).denominator)
    return result


def binom(n: int, k: int) -> int:
    """Binomial coefficient that is 0 outside 0 <= k <= n (e.g. C(|S|-2, z-2) with z = 1)."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)


def rational_row_reduce(matrix: List[List[Fraction]], rhs: Optional[List[Fraction]] = None) -> List[int]:
    """
    Forward elimination in place. Returns the free (non-pivot) column indices.
    """
    n_rows = len(matrix)
    if n_rows == 0:
        return []
    n_cols = len(matrix[0])
    free_vars = []
    piv_r = 0
    for piv_c in range(n_cols):
        if piv_r >= n_rows:
            free_vars.append(piv_c)
            continue
        i_row = next((i for i in range(piv_r, n_rows) if matrix[i][piv_c] != 0), None)
        if i_row is None:
            free_vars.append(piv_c)
            continue
        if i_row != piv_r:
            matrix[piv_r], matrix[i_row] = matrix[i_row], matrix[piv_r]
            if rhs is not None:
                rhs[piv_r], rhs[i_row] = rhs[i_row], rhs[piv_r]
        fp = matrix[piv_r][piv_c]
        for r in range(piv_r + 1, n_rows):
            fr = matrix[r][piv_c]
            if fr == 0:
                continue
            frp = fr / fp
            for c in range(piv_c, n_cols):
                matrix[r][c] -= matrix[piv_r][c] * frp
            if rhs is not None:
                rhs[r] -= rhs[piv_r] * frp
        piv_r += 1
    return free_vars


def solve_rational(matrix: Sequence[Sequence[Union[int, Fraction]]],
                   rhs: Sequence[Union[int, Fraction]]) -> Optional[List[Fraction]]:
    """
    Exact solution of matrix @ x = rhs with free variables set to zero.
    Returns None when the system is inconsistent.
    """
    m = [[Fraction(v) for v in row] for row in matrix]
    t = [Fraction(v) for v in rhs]
    if not m:
        return []
    n_cols = len(m[0])
    free_vars = rational_row_reduce(m, t)
    rank = n_cols - len(free_vars)
    if any(t[r] != 0 for r in range(rank, len(m))):
        return None
    free_flags = set(free_vars)
    piv_cols = [c for c in range(n_cols) if c not in free_flags]
    sol = [Fraction(0)] * n_cols
    for r in range(len(piv_cols) - 1, -1, -1):
        piv_c = piv_cols[r]
        s = -t[r]
        for c in range(piv_c + 1, n_cols):
            s += m[r][c] * sol[c]
        sol[piv_c] = -s / m[r][piv_c]
    return sol


# ------------------------------------------------------------ finite field

@lru_cache(maxsize=None)
def _field_class(bits: int):
    if bits < 1:
        raise FieldError(f"Field size 2^{bits} is not supported")
    poly = DEFAULT_IRREDUCIBLE_POLYS.get(bits)
    if poly is None:
        return galois.GF(2 ** bits)
    return galois.GF(2 ** bits, irreducible_poly=poly)


class GaloisField:
    """GF(2^m) helper: construction, Vandermonde blocks, random blocks, exact elimination."""

    def __init__(self, bits: int = 16):
        self.bits = bits
        self.GF = _field_class(bits)
        self.order = self.GF.order
        self.logger = logging.getLogger('cdc_shuffle.GaloisField')

    def __repr__(self) -> str:
        return f"GaloisField(2^{self.bits})"

    # construction
    def array(self, values) -> FieldMatrix:
        return self.GF(np.asarray(values, dtype=np.int64))

    def zeros(self, shape) -> FieldMatrix:
        return self.GF.Zeros(shape)

    def random_matrix(self, rows: int, cols: int, rng: np.random.Generator) -> FieldMatrix:
        """Uniform nonzero coefficients; the draw depends only on rng state."""
        if rows == 0 or cols == 0:
            return self.zeros((rows, cols))
        return self.array(rng.integers(1, self.order, size=(rows, cols)))

    def to_ints(self, arr: FieldMatrix) -> np.ndarray:
        return np.asarray(arr.view(np.ndarray), dtype=np.int64)

    def distinct_points(self, count: int) -> FieldMatrix:
        """count distinct nonzero field elements 1, 2, ..., count."""
        if count >= self.order:
            raise FieldError(f"{self} has fewer than {count} nonzero elements")
        return self.array(np.arange(1, count + 1))

    def vandermonde(self, points, rows: int) -> FieldMatrix:
        """Entry (i, j) = points[j]**i."""
        pts = points if isinstance(points, galois.FieldArray) else self.array(points)
        pts = pts.reshape(-1)
        ints = self.to_ints(pts)
        if len(np.unique(ints)) != len(ints):
            raise FieldError(f"Vandermonde points must be pairwise distinct, got {ints.tolist()}")
        out = self.zeros((rows, len(ints)))
        if rows == 0:
            return out
        out[0] = self.GF.Ones(len(ints))
        for i in range(1, rows):
            out[i] = out[i - 1] * pts
        return out

    # elimination
    def row_reduce(self, matrix: FieldMatrix, ncols: Optional[int] = None) -> Tuple[FieldMatrix, List[int]]:
        """
        Reduced row echelon form over the field. Pivots are searched in the first
        ncols columns only (the coefficient part of an augmented matrix).
        """
        A = matrix.copy()
        n_rows, n_total = A.shape
        ncols = n_total if ncols is None else ncols
        pivots: List[int] = []
        r = 0
        for c in range(ncols):
            if r == n_rows:
                break
            nz = np.flatnonzero(A[r:, c].view(np.ndarray))
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                A[[r, p]] = A[[p, r]]
            A[r] = A[r] / A[r, c]
            others = np.flatnonzero(A[:, c].view(np.ndarray))
            others = others[others != r]
            if others.size:
                factors = A[others, c]
                A[others] = A[others] - factors[:, np.newaxis] * A[r][np.newaxis, :]
            pivots.append(c)
            r += 1
        return A, pivots

    def rank(self, matrix: FieldMatrix) -> int:
        if matrix.size == 0:
            return 0
        _, pivots = self.row_reduce(matrix)
        return len(pivots)

    def solve(self, A: FieldMatrix, b: FieldMatrix) -> Optional[FieldMatrix]:
        """
        Solves A x = b for square or overdetermined A. b may be a vector or a
        matrix of right-hand sides (one column per sub-symbol position).
        Returns None when A lacks full column rank or b is inconsistent.
        """
        if A.ndim != 2:
            raise FieldError(f"Coefficient matrix must be 2-D, got shape {A.shape}")
        m, n = A.shape
        vector_rhs = b.ndim == 1
        B = b.reshape(-1, 1) if vector_rhs else b
        if B.shape[0] != m:
            raise FieldError(f"Dimension mismatch: A is {m}x{n}, right-hand side has {B.shape[0]} rows")
        if n == 0:
            return self.zeros((0,) if vector_rhs else (0, B.shape[1]))
        if m < n:
            self.logger.debug(f"Underdetermined system {m}x{n}: singular.")
            return None
        aug = self.zeros((m, n + B.shape[1]))
        aug[:, :n] = A
        aug[:, n:] = B
        reduced, pivots = self.row_reduce(aug, ncols=n)
        if len(pivots) < n:
            self.logger.debug(f"Rank {len(pivots)} < {n}: singular.")
            return None
        if m > n and np.any(reduced[n:, n:].view(np.ndarray)):
            self.logger.warning(f"Inconsistent overdetermined system {m}x{n}.")
            return None
        x = reduced[:n, n:]
        return x.reshape(-1) if vector_rhs else x


def get_field(bits: int = 16) -> GaloisField:
    return GaloisField(bits)


if __name__ == '__main__':
    logging.basicConfig(level=logging.DEBUG)
    field = GaloisField(16)
    rng = np.random.default_rng(3)
    A = field.random_matrix(6, 6, rng)
    x = field.random_matrix(6, 1, rng).reshape(-1)
    sol = field.solve(A, A @ x)
    assert sol is not None and np.array_equal(sol, x)
    V = field.vandermonde(field.distinct_points(5), 3)
    assert field.rank(V) == 3
    assert solve_rational([[2, 1], [1, 3]], [3, 4]) == [Fraction(1), Fraction(1)]
    print("algebra smoke test passed")
