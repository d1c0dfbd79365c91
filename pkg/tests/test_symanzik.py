"""Graph polynomials, tree counting, and parametric integrals."""

import math
import random
from fractions import Fraction

import pytest

from rgkit.graphs import bubble_graph, cycle_graph, multigraph
from rgkit.guards import InputError
from rgkit.symanzik import (
    deletion_contraction_check,
    first_symanzik,
    kirchhoff_tree_count,
    momentum_oracle_chain,
    parametric_amplitude,
    second_symanzik,
    skeleton,
    spanning_trees,
    tree_matrix_check,
)


def test_bubble_polynomial_and_trees():
    bub = bubble_graph()
    assert len(spanning_trees(bub)) == 2 == kirchhoff_tree_count(bub)
    u = first_symanzik(bub)
    assert u.terms == {(1, 0): 1, (0, 1): 1}
    assert u.is_homogeneous() and u.degree() == 1


def test_triangle_polynomial():
    tri = cycle_graph(3)
    u = first_symanzik(tri)
    assert u.terms == {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1}
    assert kirchhoff_tree_count(tri) == 3


def test_tree_graph_polynomial_is_constant():
    path = multigraph(3, [(0, 1), (1, 2)])
    u = first_symanzik(path)
    assert u.terms == {(0, 0): 1}
    assert kirchhoff_tree_count(path) == 1


def test_complete_graph_tree_count():
    k4 = multigraph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
    assert len(spanning_trees(k4)) == 16 == kirchhoff_tree_count(k4)


def test_random_tree_counts_match_determinant():
    rng = random.Random(7)
    trials = 0
    while trials < 30:
        nv = rng.randint(2, 5)
        ne = rng.randint(1, 7)
        edges = []
        for _ in range(ne):
            a, b = rng.randrange(nv), rng.randrange(nv)
            if a != b:
                edges.append((a, b))
        if not edges:
            continue
        g = multigraph(nv, edges)
        assert len(spanning_trees(g)) == kirchhoff_tree_count(g), (nv, edges)
        trials += 1


def test_second_polynomial_of_the_bubble():
    bub = bubble_graph()
    p = (Fraction(3), Fraction(-2))
    mom = {
        "e0": p,
        "e1": (Fraction(0), Fraction(0)),
        "e2": (-p[0], -p[1]),
        "e3": (Fraction(0), Fraction(0)),
    }
    v = second_symanzik(bub, mom)
    assert v.terms == {(1, 1): p[0] ** 2 + p[1] ** 2}


def test_momentum_conservation_required():
    bub = bubble_graph()
    mom = {
        "e0": (Fraction(1), Fraction(0)),
        "e1": (Fraction(0), Fraction(0)),
        "e2": (Fraction(0), Fraction(0)),
        "e3": (Fraction(0), Fraction(0)),
    }
    with pytest.raises(InputError):
        second_symanzik(bub, mom)


def test_deletion_contraction_with_bridges_and_parallels():
    cases = [
        multigraph(2, [(0, 1)]),
        multigraph(3, [(0, 1), (1, 2)]),
        multigraph(4, [(0, 1), (0, 2), (0, 3)]),
        bubble_graph(),
        cycle_graph(3),
        multigraph(3, [(0, 1), (0, 1), (1, 2), (1, 2), (0, 2)]),
    ]
    for g in cases:
        checked = deletion_contraction_check(g)
        assert len(checked) == g.l


def test_skeleton_assigns_positional_tags():
    ids, edges = skeleton(bubble_graph())
    assert len(ids) == 2
    assert [tag for _u, _v, tag in edges] == list(range(len(edges)))


def test_tree_matrix_anchor_two_by_two():
    a, b = Fraction(5, 3), Fraction(-7, 2)
    det, total = tree_matrix_check([[a, b], [-a, -b]])
    assert det == total == -b


def test_tree_matrix_triangle_laplacian():
    lap = [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]
    det, total = tree_matrix_check(lap)
    assert det == total == 3


def test_tree_matrix_rejects_bad_column_sums():
    with pytest.raises(InputError):
        tree_matrix_check([[1, 0], [0, 1]])


@pytest.mark.slow
def test_parametric_amplitude_matches_momentum_oracle():
    bub = bubble_graph()
    tri = cycle_graph(3)
    for d, graph, lines in ((2, bub, 2), (3, bub, 2), (2, tri, 3), (3, tri, 3)):
        amp, _err = parametric_amplitude(graph, d=d, m2=1.0)
        oracle = momentum_oracle_chain(d, 1.0, lines)
        assert abs(amp - oracle) / abs(oracle) < 1e-5


def test_bubble_amplitude_closed_form():
    # two propagators at zero momentum in two dimensions
    amp, _err = parametric_amplitude(bubble_graph(), d=2, m2=1.0)
    exact_value = 1.0 / (16 * math.pi ** 3)
    assert abs(amp - exact_value) / exact_value < 1e-8
