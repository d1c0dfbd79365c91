"""Gaussian pairing combinatorics: moments, contraction schemes, classes.

Fields carry labels; a covariance assigns a value to each label pair.
Moments of even products are sums over perfect pairings; contraction
schemes of a quartic-vertex model are perfect pairings of the 4n vertex
half-edges plus N source legs, grouped into unlabeled-graph classes with
integer symmetry factors (4!)^n n! / multiplicity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import FeynmanGraph, Line, Vertex
from .guards import GuardExceeded, InputError, InvariantViolation

MAX_VERTEX_ORDER = 4


def count_pairings(n_fields):
    """(n-1)!! perfect pairings of n labels (0 for odd n)."""
    if n_fields < 0:
        raise InputError("field count must be nonnegative")
    if n_fields % 2:
        return 0
    result = 1
    for k in range(n_fields - 1, 1, -2):
        result *= k
    return result


def all_pairings(items):
    """Yield perfect pairings, always pairing the lowest free item first."""
    items = list(items)
    if len(items) % 2:
        raise InputError("cannot pair an odd number of fields")
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for sub in all_pairings(remaining):
            yield [(first, partner)] + sub


def gaussian_moment(labels, covariance):
    """Sum over pairings of products of covariances.

    `covariance` maps (label, label) -> value; symmetric access is
    attempted both ways; missing entries raise.
    """

    def cov(a, b):
        if (a, b) in covariance:
            return covariance[(a, b)]
        if (b, a) in covariance:
            return covariance[(b, a)]
        raise InputError(f"covariance missing entry for pair ({a!r}, {b!r})")

    if len(labels) % 2:
        return 0
    total = 0
    for pairing in all_pairings(list(labels)):
        term = 1
        for a, b in pairing:
            term = term * cov(a, b)
        total = total + term
    return total


# ---------------------------------------------------------------------------
# contraction schemes for n quartic vertices and N external sources


@dataclass
class ContractionScheme:
    pairs: tuple  # tuple of ((label, label), ...) with labels as below

    def to_graph(self):
        """Half-edge labels: ("v<k>", slot) internal, ("e<j>", 0) external."""
        internal, external = [], []
        for a, b in self.pairs:
            if a[0].startswith("e") or b[0].startswith("e"):
                external.append((a, b))
            else:
                internal.append((a, b))
        n = len({lab[0] for pair in self.pairs for lab in pair
                 if lab[0].startswith("v")})
        vertices = [Vertex(f"v{k}") for k in range(n)]
        ext_ids = sorted({lab[0] for pair in external for lab in pair
                          if lab[0].startswith("e")},
                         key=lambda s: int(s[1:]))
        vertices += [Vertex(e, kind="external") for e in ext_ids]
        lines = [Line(a, b) for a, b in internal + external]
        return FeynmanGraph(vertices, lines)


@dataclass
class GraphClass:
    key: tuple
    multiplicity: int
    representative: ContractionScheme
    symmetry_factor: int = None
    vacuum_components: int = 0
    has_vacuum_component: bool = False


def _scheme_labels(n, n_external):
    labels = [(f"v{k}", s) for k in range(n) for s in range(4)]
    labels += [(f"e{j}", 0) for j in range(n_external)]
    return labels


def _canonical_key(pairs, n):
    """Unlabeled-graph key: minimum over internal vertex relabelings of the
    sorted edge multiset.  Slots are already quotiented out by dropping
    them; external sources keep their labels."""

    def encode(perm):
        mapping = {f"v{k}": f"v{perm[k]}" for k in range(n)}
        edges = []
        for a, b in pairs:
            ea = mapping.get(a[0], a[0])
            eb = mapping.get(b[0], b[0])
            edges.append(tuple(sorted((ea, eb))))
        return tuple(sorted(edges))

    return min(encode(perm) for perm in itertools.permutations(range(n))) \
        if n else encode([])


def enumerate_schemes(n, n_external, exclude_vacuum=False):
    """All contraction schemes and their unlabeled-graph classes.

    Returns (schemes, classes).  Scheme count is (4n + N - 1)!!; class
    multiplicities sum to it and give integer symmetry factors
    (4!)^n n! / multiplicity.
    """
    if n > MAX_VERTEX_ORDER:
        raise GuardExceeded(f"vertex order {n} exceeds desk-scale guard "
                            f"({MAX_VERTEX_ORDER})")
    if (4 * n + n_external) % 2:
        raise InputError("odd total field count cannot be paired")
    labels = _scheme_labels(n, n_external)
    schemes = []
    classes = {}
    for pairing in all_pairings(labels):
        scheme = ContractionScheme(tuple(tuple(p) for p in pairing))
        graph = scheme.to_graph()
        vacuum = _vacuum_components(graph)
        if exclude_vacuum and vacuum:
            continue
        schemes.append(scheme)
        key = _canonical_key(scheme.pairs, n)
        if key not in classes:
            classes[key] = GraphClass(key=key, multiplicity=0,
                                      representative=scheme,
                                      vacuum_components=vacuum,
                                      has_vacuum_component=vacuum > 0)
        classes[key].multiplicity += 1
    class_list = sorted(classes.values(), key=lambda c: c.key)
    baseline = math.factorial(4) ** n * math.factorial(n)
    for cls in class_list:
        sym = Fraction(baseline, cls.multiplicity)
        if sym.denominator != 1:
            raise InvariantViolation(
                f"symmetry factor {sym} is not an integer for class {cls.key}")
        cls.symmetry_factor = int(sym)
    if not exclude_vacuum:
        expected = count_pairings(4 * n + n_external)
        if len(schemes) != expected:
            raise InvariantViolation(
                f"scheme count {len(schemes)} != double factorial {expected}")
    return schemes, class_list


def _vacuum_components(graph):
    """Components of the full graph containing no external source."""
    vacuum = 0
    for comp in graph.components(internal_only=False):
        if not any(graph.vertices[v].kind == "external" for v in comp):
            vacuum += 1
    return vacuum
