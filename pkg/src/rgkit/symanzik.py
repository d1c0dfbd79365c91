"""Graph polynomials in the Schwinger parameters and parametric integrals.

The first polynomial sums over spanning trees, the second over spanning
two-forests weighted by the squared momentum crossing the cut.  Both are
computed by exhaustive enumeration (desk scale) and cross-checked by a
matrix-tree oracle and a deletion-contraction recursion.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .exact import mat_det
from .graphs import superficial_degree
from .guards import GuardExceeded, InputError, InvariantViolation

MAX_LINES = 16


# ---------------------------------------------------------------------------
# polynomials over the alpha variables


@dataclass
class AlphaPolynomial:
    """Sparse polynomial: variables are line tags, terms map exponent
    tuples (aligned with `variables`) to coefficients."""
    variables: tuple
    terms: dict

    def evaluate(self, values):
        total = 0
        vals = [values[v] for v in self.variables]
        for exps, coeff in self.terms.items():
            term = coeff
            for v, e in zip(vals, exps):
                if e:
                    term = term * v ** e
            total = total + term
        return total

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def is_homogeneous(self):
        degrees = {sum(e) for e in self.terms}
        return len(degrees) <= 1

    def coefficients(self):
        return list(self.terms.values())

    def __eq__(self, other):
        if not isinstance(other, AlphaPolynomial):
            return NotImplemented
        if self.variables == other.variables:
            return self.terms == other.terms
        # align on the union of variables
        allvars = tuple(sorted(set(self.variables) | set(other.variables)))
        return self._aligned(allvars) == other._aligned(allvars)

    def _aligned(self, allvars):
        pos = {v: i for i, v in enumerate(allvars)}
        out = {}
        for exps, coeff in self.terms.items():
            key = [0] * len(allvars)
            for v, e in zip(self.variables, exps):
                key[pos[v]] = e
            out[tuple(key)] = out.get(tuple(key), 0) + coeff
        return {k: v for k, v in out.items() if v}

    def to_dict(self):
        entries = []
        for exps, coeff in sorted(self.terms.items()):
            entries.append({
                "coeff": float(coeff) if not isinstance(coeff, int) else coeff,
                "monomial": {str(v): e for v, e in zip(self.variables, exps) if e},
            })
        return {"variables": [str(v) for v in self.variables], "terms": entries}


# ---------------------------------------------------------------------------
# skeleton extraction and tree enumeration


def skeleton(graph):
    """(vertex ids, edge list) of the internal multigraph.

    Edges are (u_index, v_index, tag); tags name the alpha variables and
    default to the line's position among the internal lines.
    """
    ids = graph.internal_vertex_ids()
    idx = {vid: i for i, vid in enumerate(ids)}
    edges = []
    for tag, ln in enumerate(graph.internal_lines()):
        a, b = ln.endpoints()
        edges.append((idx[a], idx[b], tag))
    return ids, edges


def _is_spanning_tree(n_vertices, edges):
    if len(edges) != n_vertices - 1:
        return False
    parent = list(range(n_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v, _tag in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def spanning_trees(graph):
    """All spanning trees of the internal skeleton, as lists of tags."""
    ids, edges = skeleton(graph)
    n = len(ids)
    if len(edges) > MAX_LINES:
        raise GuardExceeded(f"{len(edges)} lines exceeds the tree-enumeration guard")
    if n == 0:
        return []
    if n == 1:
        return [[]]
    trees = []
    for subset in itertools.combinations(edges, n - 1):
        if _is_spanning_tree(n, subset):
            trees.append([tag for _u, _v, tag in subset])
    return trees


def kirchhoff_tree_count(graph):
    """Spanning-tree count from the reduced Laplacian determinant."""
    ids, edges = skeleton(graph)
    n = len(ids)
    if n == 0:
        return 0
    if n == 1:
        return 1
    lap = [[Fraction(0)] * n for _ in range(n)]
    for u, v, _tag in edges:
        if u == v:
            continue  # self-loops never enter spanning trees
        lap[u][u] += 1
        lap[v][v] += 1
        lap[u][v] -= 1
        lap[v][u] -= 1
    minor = [row[1:] for row in lap[1:]]
    count = mat_det(minor)
    if count.denominator != 1:
        raise InvariantViolation("non-integer tree count")
    return int(count)


def first_symanzik(graph):
    """Sum over spanning trees of the product of complementary alphas."""
    if graph.tadpole_lines():
        raise InputError("first Symanzik polynomial requires a tadpole-free graph")
    ids, edges = skeleton(graph)
    tags = tuple(tag for _u, _v, tag in edges)
    trees = spanning_trees(graph)
    if not trees:
        raise InputError("graph has no spanning tree (empty or disconnected)")
    terms = {}
    for tree in trees:
        inside = set(tree)
        exps = tuple(0 if tag in inside else 1 for tag in tags)
        terms[exps] = terms.get(exps, 0) + 1
    return AlphaPolynomial(variables=tags, terms=terms)


def _two_forests(n_vertices, edges):
    """Spanning forests with exactly two components, with their vertex cut."""
    if n_vertices < 2:
        return
    for subset in itertools.combinations(edges, n_vertices - 2):
        parent = list(range(n_vertices))

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        ok = True
        for u, v, _tag in subset:
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if not ok:
            continue
        comp = {}
        for v in range(n_vertices):
            comp.setdefault(find(v), set()).add(v)
        groups = list(comp.values())
        if len(groups) != 2:
            continue
        yield subset, groups


def second_symanzik(graph, momenta):
    """Two-forest polynomial weighted by squared cut momenta.

    `momenta` maps external vertex ids to momentum vectors (sequences).
    Entering momenta must sum to zero.
    """
    ids, edges = skeleton(graph)
    if graph.tadpole_lines():
        raise InputError("second Symanzik polynomial requires a tadpole-free graph")
    n = len(ids)
    idx = {vid: i for i, vid in enumerate(ids)}
    dim = None
    vertex_p = [None] * n
    for ext, vec in momenta.items():
        if ext not in graph.vertices or graph.vertices[ext].kind != "external":
            raise InputError(f"{ext!r} is not an external vertex")
        vec = tuple(vec)
        dim = len(vec) if dim is None else dim
        if len(vec) != dim:
            raise InputError("momentum dimensions differ")
        attach = [ln for ln in graph.lines if ext in ln.endpoints()]
        if len(attach) != 1:
            raise InputError(f"external vertex {ext!r} must have exactly one leg")
        a, b = attach[0].endpoints()
        target = b if a == ext else a
        i = idx[target]
        if vertex_p[i] is None:
            vertex_p[i] = list(vec)
        else:
            vertex_p[i] = [x + y for x, y in zip(vertex_p[i], vec)]
    if dim is None:
        raise InputError("no external momenta supplied")
    zero = [0] * dim
    vertex_p = [p if p is not None else list(zero) for p in vertex_p]
    total = [sum(col) for col in zip(*vertex_p)]
    if any(_nonzero(x) for x in total):
        raise InputError(f"external momenta do not conserve: sum {total}")
    tags = tuple(tag for _u, _v, tag in edges)
    terms = {}
    for subset, groups in _two_forests(n, edges):
        inside = {tag for _u, _v, tag in subset}
        exps = tuple(0 if tag in inside else 1 for tag in tags)
        cut = groups[0]
        p_cut = [sum(vertex_p[v][c] for v in cut) for c in range(dim)]
        weight = sum(x * x for x in p_cut)
        if _nonzero(weight):
            terms[exps] = terms.get(exps, 0) + weight
    return AlphaPolynomial(variables=tags, terms=terms)


def _nonzero(x):
    if isinstance(x, float):
        return abs(x) > 1e-12
    return x != 0


# ---------------------------------------------------------------------------
# deletion / contraction


def delete_line(n_vertices, edges, tag):
    return n_vertices, [e for e in edges if e[2] != tag]


def contract_line(n_vertices, edges, tag):
    target = next((e for e in edges if e[2] == tag), None)
    if target is None:
        raise InputError(f"no line tagged {tag}")
    u, v, _ = target
    if u == v:
        raise InputError("cannot contract a tadpole")
    keep, merge = min(u, v), max(u, v)

    def remap(w):
        if w == merge:
            return keep
        return w - 1 if w > merge else w

    new_edges = [(remap(a), remap(b), t) for a, b, t in edges if t != tag]
    return n_vertices - 1, new_edges


def symanzik_from_edges(n_vertices, edges, variables):
    """First polynomial straight from an edge list (tags may be sparse).

    Returns the zero polynomial when the graph is disconnected, matching
    the empty spanning-tree sum.
    """
    terms = {}
    all_tags = tuple(variables)
    if n_vertices == 0:
        return AlphaPolynomial(variables=all_tags, terms={})
    present = {t for _u, _v, t in edges}
    for subset in itertools.combinations(edges, n_vertices - 1):
        if _is_spanning_tree(n_vertices, subset):
            inside = {t for _u, _v, t in subset}
            exps = tuple(0 if (t in inside or t not in present) else 1
                         for t in all_tags)
            # lines absent from this minor contribute no alpha factor
            terms[exps] = terms.get(exps, 0) + 1
    return AlphaPolynomial(variables=all_tags, terms=terms)


def deletion_contraction_check(graph, tag=None):
    """Verify U_G = alpha * U_{G-l} + U_{G/l} for one or all lines.

    Returns the list of checked tags.  Raises InvariantViolation on any
    mismatch.  Tadpole lines are skipped (U is not defined for them here).
    """
    ids, edges = skeleton(graph)
    n = len(ids)
    u_full = first_symanzik(graph)
    tags = [tag] if tag is not None else [t for _u, _v, t in edges]
    checked = []
    for t in tags:
        u, v, _ = next(e for e in edges if e[2] == t)
        if u == v:
            continue
        nv_d, e_d = delete_line(n, edges, t)
        nv_c, e_c = contract_line(n, edges, t)
        poly_d = symanzik_from_edges(nv_d, e_d, u_full.variables)
        poly_c = symanzik_from_edges(nv_c, e_c, u_full.variables)
        combined = {}
        for exps, coeff in poly_d.terms.items():
            pos = u_full.variables.index(t)
            lifted = list(exps)
            lifted[pos] += 1
            key = tuple(lifted)
            combined[key] = combined.get(key, 0) + coeff
        for exps, coeff in poly_c.terms.items():
            combined[exps] = combined.get(exps, 0) + coeff
        combined = {k: v for k, v in combined.items() if v}
        if combined != u_full.terms:
            raise InvariantViolation(
                f"deletion-contraction mismatch on line {t}")
        checked.append(t)
    return checked


# ---------------------------------------------------------------------------
# matrix-tree oracle for matrices with vanishing column sums


def tree_matrix_check(matrix):
    """Compare det of the (1,1)-minor with the directed-tree sum.

    For a square matrix with zero column sums the minor determinant
    equals the sum over spanning trees directed away from vertex 1 of
    prod (-A[parent][child]).  Returns (minor_det, tree_sum).
    """
    n = len(matrix)
    a = [[Fraction(x) for x in row] for row in matrix]
    for j in range(n):
        col = sum(a[i][j] for i in range(n))
        if col != 0:
            raise InputError(f"column {j} does not sum to zero")
    minor = [row[1:] for row in a[1:]]
    det = mat_det(minor) if n > 1 else Fraction(1)
    total = Fraction(0)
    for parents in _rooted_trees(n):
        term = Fraction(1)
        for child in range(1, n):
            term *= -a[parents[child]][child]
        total += term
    if det != total:
        raise InvariantViolation(
            f"tree-matrix identity failed: minor det {det} != tree sum {total}")
    return det, total


def _rooted_trees(n):
    """Parent arrays of all labeled trees on [0..n-1] rooted at 0."""
    if n == 1:
        yield [None]
        return
    if n == 2:
        yield [None, 0]
        return
    # Pruefer sequences enumerate all n^(n-2) labeled trees
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for x in seq:
            degree[x] += 1
        seq = list(seq)
        edges = []
        ptr = 0
        leaves = sorted(i for i in range(n) if degree[i] == 1)
        import heapq
        heap = list(leaves)
        heapq.heapify(heap)
        for x in seq:
            leaf = heapq.heappop(heap)
            edges.append((leaf, x))
            degree[x] -= 1
            if degree[x] == 1:
                heapq.heappush(heap, x)
        u = heapq.heappop(heap)
        v = heapq.heappop(heap)
        edges.append((u, v))
        # orient away from root 0
        adj = {i: [] for i in range(n)}
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        parents = [None] * n
        stack = [0]
        seen = {0}
        while stack:
            node = stack.pop()
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    parents[nxt] = node
                    stack.append(nxt)
        yield parents


# ---------------------------------------------------------------------------
# parametric amplitude and momentum-space oracle


def parametric_amplitude(graph, d, m2, momenta=None, rel_tol=1e-8):
    """Euclidean amplitude in the Schwinger representation.

    Normalization: each line carries (2 pi)^-d / (p^2 + m^2); the loop
    integrations then contribute pi^(d L / 2), giving
      (2 pi)^(-d l) pi^(d L / 2) * Int exp(-V/U) / U^(d/2)
                                      prod_l exp(-m^2 alpha_l) d alpha_l.
    Requires a negative superficial degree and positive mass.
    """
    if m2 <= 0:
        raise InputError("positive squared mass required")
    omega = superficial_degree(graph, d)
    if omega >= 0:
        raise InputError(f"superficial degree {omega} >= 0: amplitude diverges")
    u_poly = first_symanzik(graph)
    loops = graph.loop_count()
    n_lines = graph.l
    if momenta:
        v_poly = second_symanzik(graph, momenta)
    else:
        v_poly = None
    norm = (2 * math.pi) ** (-d * n_lines) * math.pi ** (d * loops / 2)

    def integrand(*ts):
        alphas = np.exp(np.asarray(ts))
        values = {v: alphas[i] for i, v in enumerate(u_poly.variables)}
        u_val = float(u_poly.evaluate(values))
        if u_val <= 0:
            return 0.0
        exponent = -m2 * float(alphas.sum())
        if v_poly is not None:
            exponent -= float(v_poly.evaluate(values)) / u_val
        # the alpha product is the log-substitution Jacobian
        return math.exp(exponent + float(np.log(alphas).sum())) * u_val ** (-d / 2)

    # the small-alpha corner carries mass ~ cutoff^((-omega)/2); keep the
    # cutoff tiny so the truncation sits far below the quadrature tolerance
    lo, hi = math.log(1e-26), math.log(max(200.0 / m2, 200.0))
    ranges = [(lo, hi)] * n_lines
    value, err = integrate.nquad(
        integrand, ranges,
        opts={"epsabs": 1e-14, "epsrel": rel_tol, "limit": 120})
    return norm * value, norm * err


def momentum_oracle_chain(d, m2, n_propagators):
    """One-loop chain at zero external momentum.

    (2 pi)^(-d l) * Int d^d k (k^2 + m^2)^(-l), computed radially.
    """
    if d not in (1, 2, 3):
        raise InputError("momentum oracle implemented for d in {1, 2, 3}")
    if n_propagators * 2 <= d:
        raise InputError("radial integral diverges")
    omega_d = 2 * math.pi ** (d / 2) / math.gamma(d / 2)

    def radial(r):
        return r ** (d - 1) / (r * r + m2) ** n_propagators

    value, _err = integrate.quad(radial, 0, np.inf, epsabs=1e-13, epsrel=1e-11)
    return (2 * math.pi) ** (-d * n_propagators) * omega_d * value
