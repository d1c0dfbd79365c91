"""Determinant bound certificates: Gram, Hadamard variants, weakened Gram."""

import random

import numpy as np
import pytest

from rgkit.detbounds import (
    GramFactorization,
    gram_bound,
    hadamard_bounds,
    hadamard_matrix,
    weakened_gram_check,
)
from rgkit.forest import x_matrix
from rgkit.guards import InputError


def test_identity_factorization():
    rep = gram_bound(GramFactorization(f=np.eye(4), g=np.eye(4)))
    assert rep.bound == 1.0
    assert abs(rep.abs_det - 1.0) < 1e-12
    assert rep.holds


def test_gram_bound_random_property():
    rng = np.random.default_rng(101)
    for _ in range(400):
        k = int(rng.integers(1, 7))
        dim = int(rng.integers(k, k + 4))
        fact = GramFactorization(
            f=rng.standard_normal((k, dim)), g=rng.standard_normal((k, dim))
        )
        assert gram_bound(fact).holds


def test_hadamard_bounds_random_property():
    rng = np.random.default_rng(102)
    for _ in range(400):
        n = int(rng.integers(2, 11))
        rep = hadamard_bounds(rng.standard_normal((n, n)))
        assert rep.all_hold()
        # the sup variant never exceeds the naive n! bound for n >= 3
        if n >= 3:
            assert rep.sup_bound <= rep.naive_bound * (1 + 1e-12)


def test_row_hadamard_is_gram_with_coordinate_basis():
    rng = np.random.default_rng(103)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n))
        h = hadamard_bounds(a)
        g = gram_bound(GramFactorization.from_matrix(a))
        assert abs(g.bound - h.row_bound) < 1e-9 * max(1.0, h.row_bound)


def test_sup_bound_equality_at_order_four():
    rep = hadamard_bounds(hadamard_matrix(4))
    assert abs(rep.abs_det - 16.0) < 1e-9
    assert abs(rep.sup_bound - 16.0) < 1e-9


def test_sup_bound_equality_at_order_eight():
    rep = hadamard_bounds(hadamard_matrix(8))
    assert abs(rep.abs_det - rep.sup_bound) < 1e-6 * rep.sup_bound


def test_hadamard_matrix_orders():
    for order in (1, 2, 4, 8, 16):
        h = hadamard_matrix(order)
        assert np.allclose(h @ h.T, order * np.eye(order))
    with pytest.raises(InputError):
        hadamard_matrix(3)


def test_weakened_gram_all_ones_reduces_to_plain():
    rng = np.random.default_rng(104)
    fact = GramFactorization(
        f=rng.standard_normal((3, 5)), g=rng.standard_normal((3, 5))
    )
    rep = weakened_gram_check(fact, np.ones((2, 2)), [0, 1, 0], [1, 0, 0])
    assert rep.holds


def test_weakened_gram_random_forests():
    pyrng = random.Random(9)
    rng = np.random.default_rng(105)
    for _ in range(200):
        m = pyrng.randint(2, 5)
        edges = []
        parent = list(range(m))

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for (i, j) in [(i, j) for i in range(m) for j in range(i + 1, m)]:
            if pyrng.random() < 0.5 and find(i) != find(j):
                parent[find(i)] = find(j)
                edges.append((i, j))
        w = [pyrng.random() for _ in edges]
        x = x_matrix(edges, w, m)
        k = pyrng.randint(2, 5)
        dim = pyrng.randint(k, k + 3)
        fact = GramFactorization(
            f=rng.standard_normal((k, dim)), g=rng.standard_normal((k, dim))
        )
        rows = [pyrng.randrange(m) for _ in range(k)]
        cols = [pyrng.randrange(m) for _ in range(k)]
        assert weakened_gram_check(fact, x, rows, cols).holds


def test_weakened_gram_rejects_non_psd_weakening():
    rng = np.random.default_rng(106)
    fact = GramFactorization(
        f=rng.standard_normal((2, 3)), g=rng.standard_normal((2, 3))
    )
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    with pytest.raises(InputError):
        weakened_gram_check(fact, bad, [0, 1], [0, 1])


def test_shape_mismatch_rejected():
    with pytest.raises(InputError):
        GramFactorization(f=np.eye(3), g=np.eye(4))
