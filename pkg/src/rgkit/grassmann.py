"""Exact finite-dimensional Grassmann algebra and Berezin integration.

Elements are stored as ``{bitmask: coefficient}`` where bit ``i`` of the
mask marks generator ``i`` and the monomial is the product of the marked
generators in ascending index order.  Coefficients are exact Fractions by
default; floats work too when exactness is not required.

Sign conventions are anchored once and for all by two identities:

* ``berezin_integral(x1*x2, [0, 1]) == -1`` so that the quadratic-form
  representation below gives ``pfaffian([[0, 1], [-1, 0]]) == +1``;
* ``det M == berezin_integral(exp(-psibar.M.psi), interleaved measure)``
  with the measure written ``d(psibar_1) d(psi_1) d(psibar_2) d(psi_2)...``
  and applied right to left.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .guards import GuardExceeded

MAX_GENERATORS = 24


class GrassmannElement:
    """Element of the Grassmann algebra on `n_gen` generators."""

    __slots__ = ("n_gen", "terms")

    def __init__(self, n_gen, terms=None):
        if n_gen > MAX_GENERATORS:
            raise GuardExceeded(
                f"{n_gen} generators exceeds the exact-algebra guard ({MAX_GENERATORS})")
        self.n_gen = n_gen
        self.terms = dict(terms) if terms else {}

    # -- constructors -------------------------------------------------
    @classmethod
    def scalar(cls, n_gen, value):
        value = _coerce(value)
        return cls(n_gen, {0: value} if value else {})

    @classmethod
    def generator(cls, n_gen, index):
        if not 0 <= index < n_gen:
            raise ValueError(f"generator index {index} out of range")
        return cls(n_gen, {1 << index: Fraction(1)})

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        other = self._match(other)
        terms = dict(self.terms)
        for mask, coeff in other.terms.items():
            val = terms.get(mask, 0) + coeff
            if val:
                terms[mask] = val
            elif mask in terms:
                del terms[mask]
        return GrassmannElement(self.n_gen, terms)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return GrassmannElement(self.n_gen, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._match(other))

    def __rsub__(self, other):
        return self._match(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, GrassmannElement):
            other = _coerce(other)
            if not other:
                return GrassmannElement(self.n_gen)
            return GrassmannElement(
                self.n_gen, {m: c * other for m, c in self.terms.items()})
        if other.n_gen != self.n_gen:
            raise ValueError("generator counts differ")
        terms = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                if ma & mb:
                    continue
                coeff = ca * cb
                if reorder_sign(ma, mb) < 0:
                    coeff = -coeff
                mask = ma | mb
                val = terms.get(mask, 0) + coeff
                if val:
                    terms[mask] = val
                elif mask in terms:
                    del terms[mask]
        return GrassmannElement(self.n_gen, terms)

    def __rmul__(self, other):
        # scalars commute with everything
        return self.__mul__(other)

    def _match(self, other):
        if isinstance(other, GrassmannElement):
            if other.n_gen != self.n_gen:
                raise ValueError("generator counts differ")
            return other
        return GrassmannElement.scalar(self.n_gen, other)

    # -- structure ------------------------------------------------------
    def coefficient(self, mask):
        return self.terms.get(mask, Fraction(0))

    def is_even(self):
        return all(mask.bit_count() % 2 == 0 for mask in self.terms)

    def max_degree(self):
        return max((mask.bit_count() for mask in self.terms), default=0)

    def exp(self):
        """exp of a nilpotent even element plus an optional scalar part."""
        if not self.is_even():
            raise ValueError("exp is implemented for even elements only")
        scalar_part = self.terms.get(0, Fraction(0))
        nil = GrassmannElement(
            self.n_gen, {m: c for m, c in self.terms.items() if m})
        result = GrassmannElement.scalar(self.n_gen, 1)
        power = GrassmannElement.scalar(self.n_gen, 1)
        k = 1
        while power.terms:
            power = power * nil
            if not power.terms:
                break
            result = result + power * Fraction(1, math.factorial(k))
            k += 1
            if k > self.n_gen:
                break
        if scalar_part:
            result = result * _exp_scalar(scalar_part)
        return result

    def __repr__(self):
        items = ", ".join(f"{mask:b}:{coeff}" for mask, coeff in
                          sorted(self.terms.items())[:6])
        more = "..." if len(self.terms) > 6 else ""
        return f"GrassmannElement({self.n_gen}, {{{items}{more}}})"


def _coerce(value):
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return value


def _exp_scalar(value):
    if isinstance(value, Fraction):
        if value == 0:
            return Fraction(1)
        raise ValueError("exact exp of a nonzero scalar is not rational")
    return math.exp(value)


def reorder_sign(mask_a, mask_b):
    """Sign from interleaving ascending monomials mask_a * mask_b."""
    sign = 1
    b = mask_b
    while b:
        low = b & -b
        # generators of mask_a with index above this one must be crossed
        above = mask_a >> low.bit_length()
        if above.bit_count() % 2:
            sign = -sign
        b ^= low
    return sign


def berezin_integral(element, order):
    """Berezin integral with measure written left to right in `order`.

    The measure symbols act right to left, i.e. the last listed
    differential is applied first.  ``integral(x_i, [i]) == 1``.
    """
    current = element
    for gen in reversed(list(order)):
        bit = 1 << gen
        terms = {}
        for mask, coeff in current.terms.items():
            if not mask & bit:
                continue
            below = mask & (bit - 1)
            if below.bit_count() % 2:
                coeff = -coeff
            terms[mask ^ bit] = coeff
        current = GrassmannElement(current.n_gen, terms)
    return current.coefficient(0) if not current.terms or 0 in current.terms \
        else Fraction(0)


# ---------------------------------------------------------------------------
# determinants and Pfaffians through the algebra


def det_via_grassmann(matrix):
    """det M as the Gaussian Grassmann integral of exp(-psibar M psi)."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("square matrix required")
    if 2 * n > 16:
        raise GuardExceeded(f"{n}x{n} determinant exceeds the Grassmann route guard")
    n_gen = 2 * n  # psibar_i -> 2i, psi_i -> 2i+1
    quad = GrassmannElement(n_gen)
    for i in range(n):
        for j in range(n):
            if matrix[i][j]:
                pb = GrassmannElement.generator(n_gen, 2 * i)
                ps = GrassmannElement.generator(n_gen, 2 * j + 1)
                quad = quad + (pb * ps) * matrix[i][j]
    measure = []
    for i in range(n):
        measure.extend([2 * i, 2 * i + 1])
    return berezin_integral((-quad).exp(), measure)


def pfaffian(matrix, method="recursive"):
    """Pfaffian of an antisymmetric matrix of even dimension.

    `method` is "recursive" (minor expansion along the first row) or
    "grassmann" (integral of exp(-1/2 chi A chi), guarded at 8x8).
    """
    n = len(matrix)
    _check_antisymmetric(matrix)
    if n == 0:
        return Fraction(1)
    if n % 2:
        return Fraction(0)
    if method == "recursive":
        return _pfaffian_recursive(matrix)
    if method == "grassmann":
        if n > 8:
            raise GuardExceeded("grassmann pfaffian route guarded at 8x8")
        quad = GrassmannElement(n)
        for i in range(n):
            for j in range(i + 1, n):
                if matrix[i][j]:
                    gi = GrassmannElement.generator(n, i)
                    gj = GrassmannElement.generator(n, j)
                    quad = quad + (gi * gj) * matrix[i][j]
        return berezin_integral((-quad).exp(), list(range(n)))
    raise ValueError(f"unknown pfaffian method {method!r}")


def _pfaffian_recursive(matrix):
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    idx = list(range(n))

    def rec(active):
        if not active:
            return Fraction(1)
        first = active[0]
        rest = active[1:]
        total = Fraction(0)
        for pos, other in enumerate(rest):
            entry = matrix[first][other]
            if entry:
                sign = 1 if pos % 2 == 0 else -1
                remaining = rest[:pos] + rest[pos + 1:]
                total += sign * entry * rec(remaining)
        return total

    return rec(idx)


def _check_antisymmetric(matrix):
    n = len(matrix)
    for i in range(n):
        for j in range(n):
            a, b = matrix[i][j], matrix[j][i]
            if isinstance(a, float) or isinstance(b, float):
                if abs(a + b) > 1e-12 * max(1.0, abs(a), abs(b)):
                    raise ValueError("matrix is not antisymmetric")
            elif a != -b:
                raise ValueError("matrix is not antisymmetric")


def quasi_pfaffian_det(diag, antisym):
    """det(D + A) from the two-species quadratic Grassmann integral.

    D is diagonal (given as a vector), A antisymmetric.  The integrand is
      exp(- sum_i chi_i D_ii omega_i - sum_{i<j} chi_i A_ij chi_j
                                      + sum_{i<j} omega_i A_ij omega_j)
    with measure d(chi_1) d(omega_1) d(chi_2) d(omega_2) ...
    """
    n = len(diag)
    _check_antisymmetric(antisym)
    if len(antisym) != n:
        raise ValueError("dimension mismatch between D and A")
    if 2 * n > 16:
        raise GuardExceeded("quasi-pfaffian route guarded at 8x8")
    n_gen = 2 * n  # chi_i -> 2i, omega_i -> 2i+1
    chi = [GrassmannElement.generator(n_gen, 2 * i) for i in range(n)]
    omega = [GrassmannElement.generator(n_gen, 2 * i + 1) for i in range(n)]
    quad = GrassmannElement(n_gen)
    for i in range(n):
        if diag[i]:
            quad = quad + (chi[i] * omega[i]) * diag[i]
    for i in range(n):
        for j in range(i + 1, n):
            if antisym[i][j]:
                quad = quad + (chi[i] * chi[j]) * antisym[i][j]
                quad = quad - (omega[i] * omega[j]) * antisym[i][j]
    measure = []
    for i in range(n):
        measure.extend([2 * i, 2 * i + 1])
    return berezin_integral((-quad).exp(), measure)
