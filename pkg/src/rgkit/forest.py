"""Taylor-forest interpolation: weakening matrices, tree weights,
and the forest formula.

The interpolation replaces the point (1,...,1) in the pair variables
by infimum-weakened points x^F(w), where x^F for a pair equals the
smallest w along the forest path joining it (0 if disconnected).  Tree
weights are integrals of products of such minima over the unit cube;
they are computed exactly by summing over orderings of the w's.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import monomial_integral_ordered
from .graphs import FeynmanGraph
from .guards import GuardExceeded, InputError, InvariantViolation
from .symanzik import skeleton, spanning_trees, _is_spanning_tree

MAX_POINTS = 5  # forest-formula verification guard


# ---------------------------------------------------------------------------
# weakening matrices


def path_minima(n, forest_edges, w):
    """x-value for every vertex pair: min w along the forest path.

    `forest_edges` is a list of (u, v) pairs on vertices 0..n-1 that
    must be acyclic; `w` maps each edge position to a weight in [0,1].
    Returns a dict {(i, j): x} for i < j, omitting disconnected pairs.
    """
    weights = {}
    adj = {v: [] for v in range(n)}
    for pos, (u, v) in enumerate(forest_edges):
        wv = w[pos]
        if not (0 <= wv <= 1):
            raise InputError(f"w[{pos}]={wv} outside [0,1]")
        adj[u].append((v, wv))
        adj[v].append((u, wv))
    for src in range(n):
        # BFS carrying the running minimum; forests have unique paths
        best = {src: None}
        queue = [src]
        while queue:
            node = queue.pop()
            for nxt, wv in adj[node]:
                if nxt in best:
                    continue
                cur = best[node]
                best[nxt] = wv if cur is None else min(cur, wv)
                queue.append(nxt)
        for dst, val in best.items():
            if dst > src and val is not None:
                weights[(src, dst)] = val
    return weights


def x_matrix(forest_edges, w, n):
    """Symmetric weakening matrix X^F with unit diagonal.

    Off-diagonal entries are path minima, 0 for disconnected pairs.
    The result is positive semidefinite for any w in [0,1]^F.
    """
    _check_forest(n, forest_edges)
    mat = np.eye(n)
    for (i, j), val in path_minima(n, forest_edges, w).items():
        mat[i, j] = mat[j, i] = float(val)
    return mat


def is_positive_semidefinite(mat, tol=1e-10):
    eigs = np.linalg.eigvalsh(np.asarray(mat, dtype=float))
    return bool(eigs.min() >= -tol)


def _check_forest(n, edges):
    parent = list(range(n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"edge ({u},{v}) outside vertex range")
        ru, rv = find(u), find(v)
        if ru == rv:
            raise InputError(f"edges contain a cycle through ({u},{v})")
        parent[ru] = rv


# ---------------------------------------------------------------------------
# tree weights


def tree_weight(graph, tree_tags, method="auto", samples=20000, seed=0):
    """Weight of a spanning tree: integral over w in [0,1]^T of the
    product over non-tree lines of the path minimum.

    method "exact" sums over orderings of the tree weights (the minimum
    over a path is the earliest edge on it); "mc" is plain Monte Carlo
    returning (mean, half-width of a 95% CI); "auto" picks exact for
    up to 8 tree lines.
    """
    ids, edges = skeleton(graph)
    n = len(ids)
    tag_to_edge = {tag: (u, v) for u, v, tag in edges}
    tree_tags = list(tree_tags)
    if set(tree_tags) - set(tag_to_edge):
        raise InputError("tree contains unknown line tags")
    tree_edges = [tag_to_edge[t] for t in tree_tags]
    if len(tree_edges) != n - 1 or not _is_spanning_tree(
            n, [(u, v, t) for (u, v), t in zip(tree_edges, tree_tags)]):
        raise InputError("given lines do not form a spanning tree")
    loop_tags = [t for t in tag_to_edge if t not in set(tree_tags)]
    if method == "auto":
        method = "exact" if len(tree_tags) <= 8 else "mc"
    if method == "exact":
        return _tree_weight_exact(n, tree_edges, tree_tags,
                                  [tag_to_edge[t] for t in loop_tags])
    if method == "mc":
        return _tree_weight_mc(n, tree_edges, tree_tags,
                               [tag_to_edge[t] for t in loop_tags],
                               samples, seed)
    raise InputError(f"unknown method {method!r}")


def _paths_through(n, tree_edges):
    """For each vertex pair, the set of tree-edge positions on its path."""
    adj = {v: [] for v in range(n)}
    for pos, (u, v) in enumerate(tree_edges):
        adj[u].append((v, pos))
        adj[v].append((u, pos))
    paths = {}
    for src in range(n):
        seen = {src: frozenset()}
        queue = [src]
        while queue:
            node = queue.pop()
            for nxt, pos in adj[node]:
                if nxt in seen:
                    continue
                seen[nxt] = seen[node] | {pos}
                queue.append(nxt)
        for dst, through in seen.items():
            if dst > src:
                paths[(src, dst)] = through
    return paths


def _tree_weight_exact(n, tree_edges, tree_tags, loop_edges):
    """Sum over orderings: on the region w_{p1} < ... < w_{pk} the path
    minimum is the earliest edge, so the integrand is a monomial."""
    k = len(tree_edges)
    if k == 0:
        return Fraction(1)
    paths = _paths_through(n, tree_edges)
    loop_paths = []
    for u, v in loop_edges:
        key = (min(u, v), max(u, v))
        if key not in paths:
            raise InvariantViolation("loop line endpoints disconnected in tree")
        loop_paths.append(paths[key])
    total = Fraction(0)
    for ordering in itertools.permutations(range(k)):
        rank = {pos: r for r, pos in enumerate(ordering)}
        degrees = [0] * k
        for through in loop_paths:
            earliest = min(through, key=lambda pos: rank[pos])
            degrees[rank[earliest]] += 1
        total += monomial_integral_ordered(degrees)
    return total


def _tree_weight_mc(n, tree_edges, tree_tags, loop_edges, samples, seed):
    rng = random.Random(seed)
    k = len(tree_edges)
    paths = _paths_through(n, tree_edges)
    loop_keys = [(min(u, v), max(u, v)) for u, v in loop_edges]
    values = np.empty(samples)
    for s in range(samples):
        w = [rng.random() for _ in range(k)]
        prod = 1.0
        for key in loop_keys:
            prod *= min(w[pos] for pos in paths[key])
        values[s] = prod
    mean = float(values.mean())
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(samples)
    return mean, half


@dataclass
class BarycentricReport:
    weights: list
    total: object
    deviation: float
    exact: bool

    def ok(self, tol=1e-9):
        return abs(self.deviation) <= tol


def barycentric_check(graph, method="auto", samples=20000, seed=0):
    """Sum tree weights over all spanning trees; the total must be 1.

    Disconnected graphs are handled through spanning forests, whose
    weights multiply over components, so the total is again 1.
    """
    ids, edges = skeleton(graph)
    if not ids:
        raise InputError("graph has no internal vertices")
    comp_sets = graph.components()
    if len(comp_sets) == 1:
        trees = spanning_trees(graph)
        if not trees:
            raise InputError("no spanning tree")
        rows = []
        total = Fraction(0)
        exact = True
        for tree in trees:
            res = tree_weight(graph, tree, method=method,
                              samples=samples, seed=seed)
            if isinstance(res, tuple):
                rows.append((tuple(tree), res[0], res[1]))
                total = float(total) + res[0]
                exact = False
            else:
                rows.append((tuple(tree), res, Fraction(0)))
                total = total + res
        dev = float(total - 1)
        return BarycentricReport(rows, total, dev, exact)
    # disconnected: per-component totals multiply
    total = Fraction(1)
    rows = []
    for comp in comp_sets:
        sub = _induced_subgraph(graph, comp)
        rep = barycentric_check(sub, method=method, samples=samples, seed=seed)
        rows.extend(rep.weights)
        total = (total * rep.total if rep.exact
                 else float(total) * float(rep.total))
    return BarycentricReport(rows, total, float(total - 1),
                             isinstance(total, Fraction))


def _induced_subgraph(graph, vertex_ids):
    from .graphs import Vertex, Line
    keep = set(vertex_ids)
    vertices = [v for v in graph.vertices.values() if v.id in keep]
    lines = [ln for ln in graph.internal_lines()
             if ln.endpoints()[0] in keep and ln.endpoints()[1] in keep]
    return FeynmanGraph(vertices, lines)


# ---------------------------------------------------------------------------
# forests on n labeled points and the interpolation formula


def all_forests(n):
    """Every forest on vertices 0..n-1, as a tuple of (i, j) pairs."""
    pairs = list(itertools.combinations(range(n), 2))
    forests = []
    for size in range(n):
        for subset in itertools.combinations(pairs, size):
            try:
                _check_forest(n, subset)
            except InputError:
                continue
            forests.append(subset)
    return forests


@dataclass
class ForestFormulaReport:
    n: int
    value_lhs: float
    value_rhs: float
    forest_count: int
    per_forest: list = field(repr=False, default_factory=list)

    @property
    def relative_error(self):
        scale = max(abs(self.value_lhs), 1e-300)
        return abs(self.value_lhs - self.value_rhs) / scale


def _exp_poly_integral(rates):
    """Integral of exp(sum rates[i] * v_i) over 0 < v_1 < ... < v_k < 1.

    Exact recursion on elements sum_mu exp(mu*t) * poly(t) with rational
    rates; returns a dict {mu: coefficient} to be evaluated at t = 1.
    """
    # element: {mu: {power: coeff}}
    current = {Fraction(0): {0: Fraction(1)}}
    for rate in rates:
        nxt = {}

        def add(mu, power, coeff):
            if coeff:
                nxt.setdefault(mu, {})
                nxt[mu][power] = nxt[mu].get(power, Fraction(0)) + coeff

        for mu, poly in current.items():
            nu = mu + rate
            for m, c in poly.items():
                if nu == 0:
                    add(Fraction(0), m + 1, c / (m + 1))
                else:
                    # int_0^t s^m e^{nu s} ds, integration by parts
                    fact = Fraction(1)
                    for r in range(m + 1):
                        add(nu, m - r, c * (-1) ** r * fact / nu ** (r + 1))
                        fact *= m - r
                    add(Fraction(0), 0, -c * (-1) ** m * math.factorial(m)
                        / nu ** (m + 1))
        current = nxt
    out = {}
    for mu, poly in current.items():
        out[mu] = out.get(mu, Fraction(0)) + sum(poly.values())
    return out


def forest_formula_verify(coefficients, n):
    """Check f(1,...,1) = sum over forests of integrated derivatives
    for f = exp(sum of c_ij x_ij).

    `coefficients` maps vertex pairs (i, j), i<j, to numbers.  Each
    forest contributes prod(c_l) times the integral of f at the
    weakened point; on every ordering region of the w's the exponent
    is linear, so each integral has an exact closed form.
    """
    if n > MAX_POINTS:
        raise GuardExceeded(f"n={n} exceeds the {MAX_POINTS}-point guard")
    coeff = {}
    for (i, j), c in coefficients.items():
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise InputError(f"bad pair ({i},{j})")
        coeff[(min(i, j), max(i, j))] = Fraction(c)
    pairs = list(itertools.combinations(range(n), 2))
    lhs = math.exp(float(sum(coeff.get(p, 0) for p in pairs)))
    rhs = 0.0
    rows = []
    for forest in all_forests(n):
        size = len(forest)
        if size == 0:
            # all pairs disconnected, x = 0 everywhere
            rhs += 1.0
            rows.append((forest, 1.0))
            continue
        prefactor = Fraction(1)
        for e in forest:
            prefactor *= coeff.get(e, Fraction(0))
        if prefactor == 0:
            rows.append((forest, 0.0))
            continue
        paths = _paths_through_pairs(n, forest)
        term = 0.0
        for ordering in itertools.permutations(range(size)):
            rank = {pos: r for r, pos in enumerate(ordering)}
            rates = [Fraction(0)] * size
            for p, through in paths.items():
                c = coeff.get(p, Fraction(0))
                if c:
                    earliest = min(through, key=lambda pos: rank[pos])
                    rates[rank[earliest]] += c
            exact = _exp_poly_integral(rates)
            term += sum(float(alpha) * math.exp(float(mu))
                        for mu, alpha in exact.items())
        term *= float(prefactor)
        rhs += term
        rows.append((forest, term))
    return ForestFormulaReport(n=n, value_lhs=lhs, value_rhs=rhs,
                               forest_count=len(rows), per_forest=rows)


def _paths_through_pairs(n, forest_edges):
    """Tree-edge positions on the path of every connected vertex pair."""
    adj = {v: [] for v in range(n)}
    for pos, (u, v) in enumerate(forest_edges):
        adj[u].append((v, pos))
        adj[v].append((u, pos))
    paths = {}
    for src in range(n):
        seen = {src: frozenset()}
        queue = [src]
        while queue:
            node = queue.pop()
            for nxt, pos in adj[node]:
                if nxt in seen:
                    continue
                seen[nxt] = seen[node] | {pos}
                queue.append(nxt)
        for dst, through in seen.items():
            if dst > src and through:
                paths[(min(src, dst), max(src, dst))] = through
    return paths
