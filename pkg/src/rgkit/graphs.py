"""Feynman graphs as half-edge structures.

A graph is a set of vertices, each owning a fixed number of half-edge
slots, plus oriented lines joining two slots.  External sources are
one-legged vertices of kind "external"; all combinatorial counters
(`n`, `l`, `N`, loop number) follow the usual conventions for amputated
graphs: internal lines join two internal vertices, external lines join
an internal vertex to a source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .exact import mat_rank
from .guards import InputError

INTERNAL_DEGREE = 4  # phi^4-type vertices unless overridden per vertex


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str = "internal"  # "internal" or "external"
    degree: int = None

    def __post_init__(self):
        if self.kind not in ("internal", "external"):
            raise InputError(f"unknown vertex kind {self.kind!r}")
        if self.degree is None:
            object.__setattr__(
                self, "degree", INTERNAL_DEGREE if self.kind == "internal" else 1)


@dataclass(frozen=True)
class Line:
    """Oriented line between two half-edges (vertex id, slot index)."""
    end_from: tuple
    end_to: tuple

    def endpoints(self):
        return self.end_from[0], self.end_to[0]

    def is_tadpole(self):
        return self.end_from[0] == self.end_to[0]


class FeynmanGraph:
    def __init__(self, vertices, lines):
        self.vertices = {}
        for v in vertices:
            if not isinstance(v, Vertex):
                v = Vertex(**v)
            if v.id in self.vertices:
                raise InputError(f"duplicate vertex id {v.id!r}")
            self.vertices[v.id] = v
        self.lines = []
        for ln in lines:
            if not isinstance(ln, Line):
                ln = Line(tuple(ln[0]), tuple(ln[1]))
            self.lines.append(ln)
        self.lines = tuple(self.lines)

    # -- counters -------------------------------------------------------
    def internal_vertex_ids(self):
        return [v.id for v in self.vertices.values() if v.kind == "internal"]

    def external_vertex_ids(self):
        return [v.id for v in self.vertices.values() if v.kind == "external"]

    @property
    def n(self):
        """Number of internal vertices."""
        return len(self.internal_vertex_ids())

    @property
    def N(self):
        """Number of external sources (one-legged vertices)."""
        return len(self.external_vertex_ids())

    def internal_lines(self):
        internal = set(self.internal_vertex_ids())
        return [ln for ln in self.lines
                if ln.end_from[0] in internal and ln.end_to[0] in internal]

    @property
    def l(self):
        return len(self.internal_lines())

    def tadpole_lines(self):
        return [ln for ln in self.lines if ln.is_tadpole()]

    def components(self, internal_only=True):
        """Connected components as frozensets of vertex ids.

        With `internal_only` the component count refers to the internal
        skeleton (internal vertices under internal lines), which is the
        `c` entering the loop-number formula.
        """
        if internal_only:
            ids = self.internal_vertex_ids()
            lines = self.internal_lines()
        else:
            ids = list(self.vertices)
            lines = self.lines
        parent = {v: v for v in ids}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for ln in lines:
            a, b = ln.endpoints()
            if a in parent and b in parent:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
        groups = {}
        for v in ids:
            groups.setdefault(find(v), set()).add(v)
        return [frozenset(g) for g in groups.values()]

    def loop_count(self):
        """Independent cycles L = l - n + c of the internal skeleton."""
        c = len(self.components())
        return self.l - self.n + c

    def is_connected(self):
        if self.n == 0:
            return len(self.vertices) <= 1
        if len(self.components()) != 1:
            return False
        # every external source must attach to the skeleton
        internal = set(self.internal_vertex_ids())
        for ext in self.external_vertex_ids():
            touching = [ln for ln in self.lines if ext in ln.endpoints()]
            if not touching:
                return False
            if not any(set(ln.endpoints()) & internal for ln in touching):
                return False
        return True

    # -- io ---------------------------------------------------------------
    def to_json(self):
        vertices = [
            {"id": v.id, "kind": v.kind, "degree": v.degree}
            for v in sorted(self.vertices.values(), key=lambda v: v.id)
        ]
        lines = sorted(
            ({"from": list(ln.end_from), "to": list(ln.end_to)} for ln in self.lines),
            key=lambda d: (d["from"], d["to"]))
        return json.dumps({"vertices": vertices, "lines": lines}, indent=2,
                          sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid graph JSON: {exc}") from exc
        if not isinstance(data, dict) or "vertices" not in data or "lines" not in data:
            raise InputError("graph JSON needs 'vertices' and 'lines' keys")
        vertices = []
        for v in data["vertices"]:
            vertices.append(Vertex(id=str(v["id"]), kind=v.get("kind", "internal"),
                                   degree=v.get("degree")))
        lines = []
        known = {v.id for v in vertices}
        for ln in data["lines"]:
            end_from = (str(ln["from"][0]), int(ln["from"][1]))
            end_to = (str(ln["to"][0]), int(ln["to"][1]))
            for vid, _slot in (end_from, end_to):
                if vid not in known:
                    raise InputError(f"line references unknown vertex {vid!r}")
            lines.append(Line(end_from, end_to))
        return cls(vertices, lines)

    def __repr__(self):
        return (f"FeynmanGraph(n={self.n}, N={self.N}, l={self.l}, "
                f"loops={self.loop_count()})")


@dataclass
class ValidationReport:
    ok: bool
    degree_violations: list = field(default_factory=list)
    dangling: list = field(default_factory=list)
    overfilled: list = field(default_factory=list)
    tadpoles: int = 0
    components: list = field(default_factory=list)


def validate(graph):
    """Structural check: slot usage, degrees, tadpole count, components."""
    usage = {}
    overfilled = []
    for ln in graph.lines:
        for vid, slot in (ln.end_from, ln.end_to):
            v = graph.vertices.get(vid)
            if v is None:
                raise InputError(f"line references unknown vertex {vid!r}")
            if not 0 <= slot < v.degree:
                raise InputError(f"slot {slot} out of range for vertex {vid!r}")
            key = (vid, slot)
            usage[key] = usage.get(key, 0) + 1
            if usage[key] > 1:
                overfilled.append(key)
    dangling = []
    degree_violations = []
    for v in graph.vertices.values():
        filled = sum(cnt for (vid, _s), cnt in usage.items() if vid == v.id)
        if filled != v.degree:
            degree_violations.append((v.id, filled, v.degree))
        for slot in range(v.degree):
            if (v.id, slot) not in usage:
                dangling.append((v.id, slot))
    report = ValidationReport(
        ok=not degree_violations and not dangling and not overfilled,
        degree_violations=degree_violations,
        dangling=dangling,
        overfilled=overfilled,
        tadpoles=len(graph.tadpole_lines()),
        components=graph.components(internal_only=False),
    )
    return report


def superficial_degree(graph, d):
    """Power-counting degree (d-4) n + d - (d-2)/2 N for a connected graph."""
    if not graph.is_connected():
        raise InputError("superficial degree is defined for connected graphs")
    n, N = graph.n, graph.N
    return (d - 4) * n + d - Fraction(d - 2, 2) * N


def divergence_class(omega):
    if omega < 0:
        return "convergent"
    if omega == 0:
        return "log-divergent"
    return f"power-divergent (degree {omega})"


def incidence_matrix(graph):
    """Signed vertex-line incidence of the internal skeleton.

    Rows follow `internal_vertex_ids()`, columns `internal_lines()`;
    +1 where a line starts, -1 where it ends.  Tadpole columns would be
    identically zero, so tadpoles are refused here.
    """
    if graph.tadpole_lines():
        raise InputError("incidence matrix requires a tadpole-free graph")
    rows = graph.internal_vertex_ids()
    lines = graph.internal_lines()
    index = {vid: i for i, vid in enumerate(rows)}
    matrix = [[0] * len(lines) for _ in rows]
    for col, ln in enumerate(lines):
        matrix[index[ln.end_from[0]]][col] += 1
        matrix[index[ln.end_to[0]]][col] -= 1
    return matrix, rows, lines


def incidence_rank(graph):
    matrix, _rows, _lines = incidence_matrix(graph)
    if not matrix or not matrix[0]:
        return 0
    return mat_rank(matrix)


# ---------------------------------------------------------------------------
# constructors used across the package and its tests


def phi4_graph(n, pairing, external_pairs=()):
    """Build a graph from a pairing of half-edge labels.

    Half-edges of internal vertex k are ("v{k}", s) with s in 0..3;
    externals are ("e{j}", 0).  `pairing` lists 2-tuples of labels for
    internal lines, `external_pairs` for source attachments.
    """
    vertices = [Vertex(f"v{k}") for k in range(n)]
    ext_ids = sorted({lab[0] for pair in external_pairs for lab in pair
                      if lab[0].startswith("e")})
    vertices += [Vertex(e, kind="external") for e in ext_ids]
    lines = [Line(tuple(a), tuple(b)) for a, b in list(pairing) + list(external_pairs)]
    return FeynmanGraph(vertices, lines)


def bubble_graph(external=True):
    """Two vertices joined by two parallel lines, four external legs."""
    vertices = [Vertex("v0"), Vertex("v1")]
    lines = [Line(("v0", 0), ("v1", 0)), Line(("v0", 1), ("v1", 1))]
    if external:
        vertices += [Vertex(f"e{j}", kind="external") for j in range(4)]
        lines += [
            Line(("v0", 2), ("e0", 0)), Line(("v0", 3), ("e1", 0)),
            Line(("v1", 2), ("e2", 0)), Line(("v1", 3), ("e3", 0)),
        ]
    return FeynmanGraph(vertices, lines)


def cycle_graph(k):
    """k-cycle with two external legs per vertex (phi^4-regular)."""
    vertices = [Vertex(f"v{i}") for i in range(k)]
    lines = [Line((f"v{i}", 0), (f"v{(i + 1) % k}", 1)) for i in range(k)]
    ext = []
    for i in range(k):
        for s in (2, 3):
            e = Vertex(f"e{2 * i + s - 2}", kind="external")
            vertices.append(e)
            ext.append(Line((f"v{i}", s), (e.id, 0)))
    return FeynmanGraph(vertices, lines + ext)


def multigraph(n_vertices, edges):
    """Plain internal multigraph for polynomial work.

    `edges` lists vertex-index pairs (ints); slots are assigned in order
    of appearance and each vertex degree matches its incidence count.
    """
    named = [(f"v{a}", f"v{b}") for a, b in edges]
    counts = {}
    for a, b in named:
        counts[a] = counts.get(a, 0) + 1
        counts[b] = counts.get(b, 0) + 1
    vertices = [Vertex(f"v{i}", degree=max(counts.get(f"v{i}", 0), 1))
                for i in range(n_vertices)]
    cursor = {v.id: 0 for v in vertices}
    lines = []
    for a, b in named:
        sa, cursor[a] = cursor[a], cursor[a] + 1
        sb, cursor[b] = cursor[b], cursor[b] + 1
        lines.append(Line((a, sa), (b, sb)))
    return FeynmanGraph(vertices, lines)
