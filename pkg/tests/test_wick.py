"""Pairing enumeration, Gaussian moments, and unlabeled-graph classes."""

import math
import random
from fractions import Fraction

import pytest

from rgkit import wick
from rgkit.guards import GuardExceeded, InputError


def test_double_factorial_counts():
    assert [wick.count_pairings(k) for k in (0, 2, 4, 6, 8)] == [1, 1, 3, 15, 105]
    assert wick.count_pairings(3) == 0
    with pytest.raises(InputError):
        wick.count_pairings(-2)


def test_all_pairings_count_and_coverage():
    items = list(range(6))
    pairings = list(wick.all_pairings(items))
    assert len(pairings) == 15
    seen = set()
    for p in pairings:
        flat = tuple(sorted(x for pair in p for x in pair))
        assert flat == tuple(items)
        seen.add(tuple(sorted(tuple(sorted(pair)) for pair in p)))
    assert len(seen) == 15


def test_gaussian_moment_two_and_four_points():
    cov = {("a", "b"): Fraction(2), ("c", "d"): Fraction(3), ("a", "c"): Fraction(1),
           ("b", "d"): Fraction(5), ("a", "d"): Fraction(0), ("b", "c"): Fraction(7)}
    assert wick.gaussian_moment(["a", "b"], cov) == 2
    # sum over the three pairings of four labels
    got = wick.gaussian_moment(["a", "b", "c", "d"], cov)
    assert got == 2 * 3 + 1 * 5 + 0 * 7


def test_gaussian_moment_odd_vanishes():
    assert wick.gaussian_moment(["a"], {}) == 0


def test_vacuum_scheme_counts():
    schemes, classes = wick.enumerate_schemes(1, 0)
    assert len(schemes) == 3 and len(classes) == 1
    assert classes[0].multiplicity == 3
    assert classes[0].symmetry_factor == 8
    assert classes[0].vacuum_components == 1


def test_two_source_scheme_counts():
    schemes, classes = wick.enumerate_schemes(1, 2)
    assert len(schemes) == 15
    assert sorted(c.multiplicity for c in classes) == [3, 12]
    by_mult = {c.multiplicity: c for c in classes}
    assert by_mult[3].symmetry_factor == 8
    assert by_mult[12].symmetry_factor == 2
    assert by_mult[3].has_vacuum_component
    assert not by_mult[12].has_vacuum_component


def test_scheme_count_matches_double_factorial():
    for n, n_ext in ((1, 0), (1, 2), (2, 0), (2, 2)):
        schemes, classes = wick.enumerate_schemes(n, n_ext)
        assert len(schemes) == wick.count_pairings(4 * n + n_ext)
        assert sum(c.multiplicity for c in classes) == len(schemes)


def test_symmetry_factors_are_integers():
    for n, n_ext in ((1, 0), (1, 2), (2, 0), (2, 2), (2, 4)):
        _schemes, classes = wick.enumerate_schemes(n, n_ext)
        baseline = math.factorial(4) ** n * math.factorial(n)
        for c in classes:
            assert c.symmetry_factor * c.multiplicity == baseline


def test_exclude_vacuum_drops_disconnected_pieces():
    schemes, classes = wick.enumerate_schemes(1, 2, exclude_vacuum=True)
    assert len(schemes) == 12
    assert all(not c.has_vacuum_component for c in classes)


def test_order_guard_and_odd_parity():
    with pytest.raises(GuardExceeded):
        wick.enumerate_schemes(5, 0)
    with pytest.raises(InputError):
        wick.enumerate_schemes(1, 1)


def test_scheme_graphs_are_valid():
    rng = random.Random(2)
    schemes, _classes = wick.enumerate_schemes(2, 2)
    for scheme in rng.sample(schemes, 25):
        g = scheme.to_graph()
        assert g.n == 2 and g.N == 2
        assert 2 * len(g.lines) == 4 * g.n + g.N
