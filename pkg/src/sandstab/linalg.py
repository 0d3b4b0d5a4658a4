"""Exact rational solves with the box toppling matrix.

Boxes are flattened row-major, so the toppling matrix is banded with
half-bandwidth equal to the stride of the first axis. It is symmetric
positive definite, hence Gaussian elimination needs no pivoting and the
fill-in stays inside the band.
"""
from fractions import Fraction

import numpy as np

# Full exact inverses are O(N^2 * bandwidth) Fraction operations.
EXACT_SOLVE_CAP = 10_000
EXACT_INVERSE_CAP = 1_024


class ExactSizeError(ValueError):
    """Volume too large for exact rational arithmetic."""


class BandedRationalLU:
    """LU factors of ``Delta_V`` over the rationals.

    :param nbr: ``(N, 2d)`` neighbor table with -1 for outside neighbors
    :param bandwidth: max ``|i - j|`` over neighbor pairs
    """

    def __init__(self, nbr, bandwidth):
        n, deg = nbr.shape
        if n > EXACT_SOLVE_CAP:
            raise ExactSizeError(f"{n} sites exceeds exact-solve cap {EXACT_SOLVE_CAP}")
        b = int(bandwidth)
        self.n, self.b = n, b
        # row i stores columns i-b .. i+b at offsets 0 .. 2b
        rows = [[Fraction(0)] * (2 * b + 1) for _ in range(n)]
        for i in range(n):
            rows[i][b] = Fraction(deg)
            for j in nbr[i]:
                if j >= 0:
                    rows[i][b + int(j) - i] = Fraction(-1)
        lower = [[Fraction(0)] * (b + 1) for _ in range(n)]
        for k in range(n):
            pivot = rows[k][b]
            for i in range(k + 1, min(n, k + b + 1)):
                a_ik = rows[i][b + k - i]
                if a_ik == 0:
                    continue
                f = a_ik / pivot
                lower[i][k - i + b] = f
                row_i, row_k = rows[i], rows[k]
                for j in range(k, min(n, k + b + 1)):
                    a_kj = row_k[b + j - k]
                    if a_kj:
                        row_i[b + j - i] -= f * a_kj
        self._upper = rows
        self._lower = lower

    def solve(self, rhs):
        """Solve ``Delta_V x = rhs`` exactly; returns a list of Fractions."""
        n, b = self.n, self.b
        y = [Fraction(v) for v in rhs]
        for i in range(n):
            lo = self._lower[i]
            acc = y[i]
            for k in range(max(0, i - b), i):
                f = lo[k - i + b]
                if f:
                    acc -= f * y[k]
            y[i] = acc
        x = [Fraction(0)] * n
        for i in range(n - 1, -1, -1):
            row = self._upper[i]
            acc = y[i]
            for j in range(i + 1, min(n, i + b + 1)):
                a = row[b + j - i]
                if a:
                    acc -= a * x[j]
            x[i] = acc / row[b]
        return x


def exact_apply(nbr, vec):
    """``Delta_V @ vec`` for a list of rationals (or ints)."""
    n, deg = nbr.shape
    out = []
    for i in range(n):
        acc = deg * vec[i]
        for j in nbr[i]:
            if j >= 0:
                acc -= vec[int(j)]
        out.append(acc)
    return out


def bareiss_determinant(matrix):
    """Exact integer determinant by fraction-free elimination."""
    a = [[int(v) for v in row] for row in np.asarray(matrix)]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]
