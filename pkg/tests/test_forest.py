"""Interpolation weights, weakening matrices, and the partition identity."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from rgkit.forest import (
    all_forests,
    barycentric_check,
    forest_formula_verify,
    is_positive_semidefinite,
    path_minima,
    tree_weight,
    x_matrix,
)
from rgkit.graphs import bubble_graph, cycle_graph, multigraph
from rgkit.guards import GuardExceeded, InputError


def _random_forest(rng, n):
    edges = []
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    candidates = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(candidates)
    for (i, j) in candidates:
        if rng.random() < 0.5 and find(i) != find(j):
            parent[find(i)] = find(j)
            edges.append((i, j))
    return edges


def test_x_matrix_anchors():
    assert np.allclose(x_matrix([], [], 3), np.eye(3))
    assert np.allclose(x_matrix([(0, 1)], [1.0], 2), np.ones((2, 2)))
    path = x_matrix([(0, 1), (1, 2)], [0.3, 0.8], 3)
    assert abs(path[0, 1] - 0.3) < 1e-15
    assert abs(path[0, 2] - 0.3) < 1e-15
    assert abs(path[1, 2] - 0.8) < 1e-15
    assert is_positive_semidefinite(path)


def test_path_minima_uses_edge_positions():
    minima = path_minima(3, [(0, 1), (1, 2)], {0: 0.2, 1: 0.9})
    assert minima == {(0, 1): 0.2, (0, 2): 0.2, (1, 2): 0.9}
    # disconnected pairs are omitted
    assert path_minima(3, [(0, 1)], {0: 0.4}) == {(0, 1): 0.4}


def test_weakening_matrices_are_psd():
    rng = random.Random(3)
    for _ in range(300):
        n = rng.randint(2, 7)
        edges = _random_forest(rng, n)
        w = [rng.random() for _ in edges]
        assert is_positive_semidefinite(x_matrix(edges, w, n)), (edges, w)


def test_tree_weight_anchors():
    single = multigraph(2, [(0, 1)])
    assert tree_weight(single, [0]) == 1
    bub = bubble_graph()
    assert tree_weight(bub, [0]) == Fraction(1, 2)
    assert tree_weight(bub, [1]) == Fraction(1, 2)
    tri = cycle_graph(3)
    for t in ([0, 1], [0, 2], [1, 2]):
        assert tree_weight(tri, t) == Fraction(1, 3)


def test_tree_weight_rejects_non_tree():
    bub = bubble_graph()
    with pytest.raises(InputError):
        tree_weight(bub, [0, 1])  # both lines form a loop, not a tree


def test_tree_weight_mc_covers_exact():
    tri = cycle_graph(3)
    mean, half = tree_weight(tri, [0, 1], method="mc", samples=40000, seed=5)
    assert half > 0
    assert abs(mean - 1.0 / 3.0) < 3 * half


def test_weights_sum_to_one_on_random_graphs():
    rng = random.Random(17)
    found = 0
    while found < 10:
        nv = rng.randint(2, 4)
        ne = rng.randint(nv - 1, 5)
        edges = [(rng.randrange(nv), rng.randrange(nv)) for _ in range(ne)]
        edges = [(a, b) for a, b in edges if a != b]
        if not edges:
            continue
        g = multigraph(nv, edges)
        if len(g.components()) != 1 or not g.internal_lines():
            continue
        rep = barycentric_check(g)
        assert rep.exact and rep.total == 1
        assert rep.ok()
        found += 1


def test_weights_multiply_over_components():
    dis = multigraph(4, [(0, 1), (0, 1), (2, 3), (2, 3), (2, 3)])
    rep = barycentric_check(dis)
    assert rep.exact and rep.total == 1


def test_formula_two_point_closed_form():
    rep = forest_formula_verify({(0, 1): 0.9}, 2)
    assert rep.relative_error < 1e-10
    assert abs(rep.value_rhs - math.exp(0.9)) < 1e-12


def test_formula_constant_function():
    rep = forest_formula_verify({}, 3)
    assert rep.value_lhs == 1.0 and rep.value_rhs == 1.0


def test_formula_random_coefficients():
    rng = random.Random(23)
    for n in (2, 3, 4):
        for _ in range(3):
            coeff = {
                (i, j): rng.uniform(-1, 1)
                for i in range(n)
                for j in range(i + 1, n)
            }
            rep = forest_formula_verify(coeff, n)
            assert rep.relative_error < 1e-6, (n, coeff)


def test_formula_point_guard():
    with pytest.raises(GuardExceeded):
        forest_formula_verify({}, 6)


def test_forest_counts():
    assert {n: len(all_forests(n)) for n in (2, 3, 4, 5)} == {
        2: 2,
        3: 7,
        4: 38,
        5: 291,
    }
