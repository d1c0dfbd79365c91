"""Exact rational linear algebra and small symbolic helpers.

Everything here works on ``fractions.Fraction`` (or anything with exact
field arithmetic) so that the combinatorial identities elsewhere in the
package can be checked without floating-point slack.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def mat_det(rows):
    """Exact determinant by fraction-free-ish Gaussian elimination.

    `rows` is a square list-of-lists of Fractions (ints are fine too).
    """
    n = len(rows)
    a = [[Fraction(x) for x in row] for row in rows]
    if any(len(row) != n for row in a):
        raise ValueError("determinant needs a square matrix")
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            if a[r][col] == 0:
                continue
            factor = a[r][col] * inv
            for c in range(col, n):
                a[r][c] -= factor * a[col][c]
    return det


def mat_rank(rows):
    """Exact rank over the rationals."""
    if not rows:
        return 0
    a = [[Fraction(x) for x in row] for row in rows]
    n_rows, n_cols = len(a), len(a[0])
    rank = 0
    row = 0
    for col in range(n_cols):
        pivot = next((r for r in range(row, n_rows) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[row], a[pivot] = a[pivot], a[row]
        inv = 1 / a[row][col]
        for r in range(row + 1, n_rows):
            if a[r][col] == 0:
                continue
            factor = a[r][col] * inv
            for c in range(col, n_cols):
                a[r][c] -= factor * a[row][c]
        rank += 1
        row += 1
        if row == n_rows:
            break
    return rank


def mat_inv(rows):
    """Exact inverse via Gauss-Jordan; raises on singular input."""
    n = len(rows)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r == col or a[r][col] == 0:
                continue
            factor = a[r][col]
            a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def mat_mul(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


# ---------------------------------------------------------------------------
# truncated power series over Fractions (index = order)

def series_mul(a, b, n_max):
    out = [Fraction(0)] * (n_max + 1)
    for i, x in enumerate(a[: n_max + 1]):
        if x == 0:
            continue
        for j, y in enumerate(b[: n_max + 1 - i]):
            if y == 0:
                continue
            out[i + j] += x * y
    return out


def series_log1p(a, n_max):
    """log(1 + u) for a series u with u[0] == 0."""
    if a[0] != 0:
        raise ValueError("series_log1p needs a series with zero constant term")
    out = [Fraction(0)] * (n_max + 1)
    power = [Fraction(1)] + [Fraction(0)] * n_max  # u^0
    for k in range(1, n_max + 1):
        power = series_mul(power, a, n_max)
        sign = Fraction(1 if k % 2 == 1 else -1, k)
        for i, x in enumerate(power):
            out[i] += sign * x
    return out


# ---------------------------------------------------------------------------
# sparse multivariate polynomials: dict[exponent tuple -> Fraction]

def poly_mul(p, q):
    out = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            val = out.get(key, 0) + ca * cb
            if val:
                out[key] = val
            elif key in out:
                del out[key]
    return out


def poly_scale(p, c):
    if c == 0:
        return {}
    return {e: v * c for e, v in p.items()}


def poly_add_inplace(p, q):
    for e, v in q.items():
        val = p.get(e, 0) + v
        if val:
            p[e] = val
        elif e in p:
            del p[e]


def poly_det(matrix, n_vars):
    """Determinant of a small matrix whose entries are sparse polynomials."""
    n = len(matrix)
    if n == 0:
        return {(0,) * n_vars: Fraction(1)}
    out = {}
    for perm in itertools.permutations(range(n)):
        sign = perm_sign(perm)
        term = {(0,) * n_vars: Fraction(sign)}
        ok = True
        for r, c in enumerate(perm):
            entry = matrix[r][c]
            if not entry:
                ok = False
                break
            term = poly_mul(term, entry)
        if ok:
            poly_add_inplace(out, term)
    return out


def perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        node = start
        while not seen[node]:
            seen[node] = True
            node = perm[node]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# exact integration of monomials over ordered simplices
#
# For interpolation weights one repeatedly needs
#   I = \int_{0 < w_{pi(1)} < ... < w_{pi(k)} < 1} \prod_i w_i^{d_i} dw
# which iterates to  prod_i 1 / (sum_{j<=i} (d_{pi(j)} + 1)).

def monomial_integral_ordered(degrees_in_order):
    total = 0
    value = Fraction(1)
    for d in degrees_in_order:
        total += d + 1
        value /= total
    return value


def integrate_poly_over_ordering(poly, ordering):
    """Integrate a sparse polynomial over one ordering region of [0,1]^k.

    `ordering` lists variable indices from smallest to largest value.
    """
    total = Fraction(0)
    for exps, coeff in poly.items():
        total += coeff * monomial_integral_ordered([exps[v] for v in ordering])
    return total
