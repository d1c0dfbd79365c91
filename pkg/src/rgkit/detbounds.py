"""Determinant inequalities: Gram, Hadamard (row/column/sup-norm),
the naive permutation bound, and the forest-weakened Gram bound.

All checks are float-based with a small relative slack; the suites in
the tests draw thousands of random matrices and tolerate zero
violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .guards import InputError

REL_SLACK = 1e-9


def _as_matrix(a):
    mat = np.asarray(a, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError("square matrix required")
    return mat


@dataclass
class GramFactorization:
    """Families of vectors f_i (rows) and g_j (columns) in a common
    inner-product space; the represented matrix is a_ij = <f_i, g_j>."""
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if self.f.ndim != 2 or self.g.ndim != 2:
            raise InputError("vector families must be 2-d arrays")
        if self.f.shape[1] != self.g.shape[1]:
            raise InputError("families live in different spaces")

    @property
    def matrix(self):
        return self.f @ self.g.T

    @classmethod
    def from_matrix(cls, a):
        """Rows against the coordinate basis; the Gram bound then
        reproduces the row-Hadamard bound."""
        mat = _as_matrix(a)
        return cls(f=mat, g=np.eye(mat.shape[0]))

    def norms(self):
        return (np.linalg.norm(self.f, axis=1),
                np.linalg.norm(self.g, axis=1))


@dataclass
class BoundReport:
    bound: float
    abs_det: float
    holds: bool


def gram_bound(fact):
    """|det <f_i, g_j>| <= prod ||f_i|| * prod ||g_j||."""
    mat = fact.matrix
    if mat.shape[0] != mat.shape[1]:
        raise InputError("Gram matrix is not square")
    fn, gn = fact.norms()
    bound = float(np.prod(fn) * np.prod(gn))
    abs_det = abs(float(np.linalg.det(mat)))
    return BoundReport(bound, abs_det, abs_det <= bound * (1 + REL_SLACK))


@dataclass
class HadamardReport:
    row_bound: float
    col_bound: float
    sup_bound: float
    naive_bound: float
    abs_det: float

    def all_hold(self):
        slack = 1 + REL_SLACK
        return (self.abs_det <= self.row_bound * slack
                and self.abs_det <= self.col_bound * slack
                and self.abs_det <= self.sup_bound * slack)


def hadamard_bounds(a):
    """Row, column, sup-norm and naive permutation bounds.

    row:   prod of row Euclidean norms
    col:   prod of column Euclidean norms
    sup:   n^(n/2) * (max |a_ij|)^n
    naive: n! * (max |a_ij|)^n   (counting permutations, no cancellation)
    """
    mat = _as_matrix(a)
    n = mat.shape[0]
    sup = float(np.abs(mat).max()) if n else 0.0
    row = float(np.prod(np.linalg.norm(mat, axis=1)))
    col = float(np.prod(np.linalg.norm(mat, axis=0)))
    sup_bound = n ** (n / 2) * sup ** n
    naive = float(math.factorial(n)) * sup ** n
    abs_det = abs(float(np.linalg.det(mat)))
    return HadamardReport(row, col, sup_bound, naive, abs_det)


def hadamard_matrix(order):
    """The standard +-1 matrices of order 1, 2, 4, 8, ... (Sylvester
    doubling); these meet the sup-norm bound with equality."""
    if order < 1 or order & (order - 1):
        raise InputError("order must be a power of two")
    h = np.array([[1.0]])
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def weakened_gram_check(fact, x, rows, cols):
    """Gram bound for the entrywise-weakened matrix
    c_ab = x[rows[a], cols[b]] * <f_a, g_b>.

    x must be positive semidefinite with unit diagonal; the weakening
    then never enlarges the bound, because the vectors can be tensored
    with the columns of a square root of x without changing norms.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise InputError("x must be square")
    if not np.allclose(np.diag(x), 1.0, atol=1e-9):
        raise InputError("x must have unit diagonal")
    eigs = np.linalg.eigvalsh((x + x.T) / 2)
    if eigs.min() < -1e-10:
        raise InputError(f"x is not positive semidefinite (min eig {eigs.min()})")
    rows = list(rows)
    cols = list(cols)
    if len(rows) != len(cols):
        raise InputError("row and column block lists differ in length")
    m = x.shape[0]
    if any(not (0 <= r < m) for r in rows + cols):
        raise InputError("block index outside x")
    if fact.f.shape[0] < len(rows) or fact.g.shape[0] < len(cols):
        raise InputError("not enough vectors for the requested minor")
    base = fact.matrix
    weak = np.empty((len(rows), len(cols)))
    for a, r in enumerate(rows):
        for b, c in enumerate(cols):
            weak[a, b] = x[r, c] * base[a, b]
    fn, gn = fact.norms()
    bound = float(np.prod(fn[:len(rows)]) * np.prod(gn[:len(cols)]))
    abs_det = abs(float(np.linalg.det(weak)))
    return BoundReport(bound, abs_det, abs_det <= bound * (1 + REL_SLACK))
