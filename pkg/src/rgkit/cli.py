"""Command-line front end with guarded dispatch and reproducible output.

Every run is determined by a resolved configuration: subcommand, action,
module parameters, output format, and seed.  A JSON config file supplies
defaults for any flag not given on the command line (explicit flags win);
identical resolved configurations produce byte-identical CSV.  Guard rails
on expansion order, Grassmann generator count, and scale index are checked
before any module work starts.

Exit codes: 0 success, 2 invariant failure, 3 guard refusal, 4 input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import detbounds, exact, forest, graphs, grassmann, hubbard, rgflow, \
    sectors, symanzik, toy, wick
from .guards import GuardExceeded, InputError, InvariantViolation

FORMATS = ("table", "json", "csv", "svg")


# ---------------------------------------------------------------------------
# run configuration


@dataclasses.dataclass(frozen=True)
class GuardRail:
    """Hard ceilings enforced before dispatch; raising them is explicit."""

    max_order: int = 4
    max_generators: int = 16
    max_scale: int = 12


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; output is a function of this and the seed."""

    subcommand: str
    action: str
    params: dict
    fmt: str
    out: str
    seed: int
    check: bool
    threads: int
    rails: GuardRail

    def as_payload(self):
        return {
            "subcommand": self.subcommand,
            "action": self.action,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "format": self.fmt,
            "seed": self.seed,
            "threads": self.threads,
            "guards": dataclasses.asdict(self.rails),
        }


@dataclasses.dataclass
class Result:
    """Uniform shape every action returns: a table plus scalar summary."""

    columns: tuple
    rows: list
    summary: dict
    plot: object = None


# ---------------------------------------------------------------------------
# value coercion (config files deliver JSON values, flags deliver strings)


def _as_int(value):
    if isinstance(value, bool):
        raise InputError(f"expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    try:
        return int(str(value).strip())
    except ValueError as exc:
        raise InputError(f"expected an integer, got {value!r}") from exc


def _as_float(value):
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"expected a number, got {value!r}") from exc


def _as_fraction(value):
    """Exact rational from '1/20', '0.1', or a JSON number."""
    if isinstance(value, Fraction):
        return value
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"expected a rational number, got {value!r}") from exc


def _as_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got {value!r}")


def _as_str(value):
    return str(value)


def _as_index_list(value):
    """Scale indices: a single int, 'a..b', a comma list, or a JSON list."""
    if isinstance(value, (list, tuple)):
        return tuple(sorted({_as_int(v) for v in value}))
    if isinstance(value, int):
        return (value,)
    text = str(value).strip()
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = _as_int(lo_text), _as_int(hi_text)
        if hi < lo:
            raise InputError(f"empty index range {text!r}")
        return tuple(range(lo, hi + 1))
    if "," in text:
        return tuple(sorted({_as_int(part) for part in text.split(",")}))
    return (_as_int(text),)


def _as_pair(value):
    """Lattice direction given as 'n1,n2'."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (_as_int(value[0]), _as_int(value[1]))
    parts = str(value).split(",")
    if len(parts) != 2:
        raise InputError(f"expected 'n1,n2', got {value!r}")
    return (_as_int(parts[0]), _as_int(parts[1]))


# ---------------------------------------------------------------------------
# canonical formatting (CSV must be byte-identical run to run)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".12g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    if isinstance(value, (tuple, list)):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def _jsonable(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, Fraction):
        return _fmt(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if value is None:
        return None
    return str(value)


def _table_text(result):
    lines = [f"{key} = {_fmt(val)}" for key, val in result.summary.items()]
    if result.rows:
        lines.append("")
        cells = [[_fmt(v) for v in row] for row in result.rows]
        headers = [str(c) for c in result.columns]
        widths = [
            max(len(headers[i]), max((len(r[i]) for r in cells), default=0))
            for i in range(len(headers))
        ]
        lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
        lines.append("  ".join("-" * w for w in widths))
        for row in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _csv_text(result):
    lines = [f"# {key} = {_fmt(val)}" for key, val in result.summary.items()]
    lines.append(",".join(str(c) for c in result.columns))
    for row in result.rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_text(cfg, result):
    payload = {
        "config": cfg.as_payload(),
        "summary": {k: _jsonable(v) for k, v in result.summary.items()},
        "columns": list(result.columns),
        "rows": [[_jsonable(v) for v in row] for row in result.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _render_svg(result, path):
    if result.plot is None:
        raise InputError("this action has no plot; use table, json, or csv output")
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    result.plot(ax)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _emit(cfg, result):
    if cfg.fmt == "svg":
        if not cfg.out:
            raise InputError("svg output needs a file path (--svg FILE or --out FILE)")
        _render_svg(result, cfg.out)
        print(f"wrote {cfg.out}")
        return
    if cfg.fmt == "table":
        text = _table_text(result)
    elif cfg.fmt == "csv":
        text = _csv_text(result)
    elif cfg.fmt == "json":
        text = _json_text(cfg, result)
    else:
        raise InputError(f"unknown output format {cfg.fmt!r}")
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8") as handle:
                handle.write(text)
        except OSError as exc:
            raise InputError(f"cannot write {cfg.out}: {exc}") from exc
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# shared helpers


def _parallel_map(fn, items, threads):
    """Order-preserving map, optionally across a thread pool.

    Work items are independent and pure, so the result is identical for
    every thread count; threads only change wall time.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _require(condition, message):
    if not condition:
        raise InvariantViolation(message)


def _builtin_graph(name):
    lowered = name.lower()
    if lowered == "bubble":
        return graphs.multigraph(2, [(0, 1), (0, 1)])
    if lowered == "triangle":
        return graphs.multigraph(3, [(0, 1), (1, 2), (0, 2)])
    if lowered == "theta":
        return graphs.multigraph(2, [(0, 1), (0, 1), (0, 1)])
    if lowered == "k4":
        return graphs.multigraph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    if lowered.startswith("cycle:"):
        k = _as_int(lowered.split(":", 1)[1])
        if k < 2:
            raise InputError("a cycle needs at least 2 vertices")
        return graphs.multigraph(k, [(i, (i + 1) % k) for i in range(k)])
    raise InputError(
        f"unknown graph {name!r}; use bubble, triangle, theta, k4, cycle:K, "
        "or the path of a JSON file with 'vertices' and 'edges'")


def _load_graph(token):
    if token is None:
        raise InputError("this action needs --graph (a builtin name or JSON file)")
    text = str(token)
    if os.path.isfile(text):
        try:
            with open(text, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read graph file {text}: {exc}") from exc
        if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
            raise InputError(f"graph file {text} needs 'vertices' and 'edges'")
        n = _as_int(data["vertices"])
        edges = []
        for edge in data["edges"]:
            if not isinstance(edge, (list, tuple)) or len(edge) < 2:
                raise InputError(f"bad edge {edge!r} in {text}")
            u, v = _as_int(edge[0]), _as_int(edge[1])
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge {edge!r} leaves the vertex range in {text}")
            edges.append((u, v))
        if not edges:
            raise InputError(f"graph file {text} has no edges")
        return graphs.multigraph(n, edges)
    if text.endswith(".json"):
        raise InputError(f"graph file not found: {text}")
    return _builtin_graph(text)


def _random_antisymmetric(rng, size, span=9):
    a = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1, size):
            val = Fraction(int(rng.integers(-span, span + 1)))
            a[i][j] = val
            a[j][i] = -val
    return a


def _random_zero_column_sum(rng, size, span=4):
    m = [[Fraction(int(rng.integers(-span, span + 1))) for _ in range(size)]
         for _ in range(size)]
    for j in range(size):
        col = sum(m[i][j] for i in range(size))
        m[j][j] -= col
    return m


def _parse_sites(token):
    if isinstance(token, int):
        count = token
    else:
        text = str(token).strip()
        if text.startswith("grid:"):
            count = _as_int(text.split(":", 1)[1])
        else:
            count = _as_int(text)
    if count < 1:
        raise InputError("need at least one site")
    return count


# ---------------------------------------------------------------------------
# wick


def _run_wick_enumerate(p, cfg):
    schemes, classes = wick.enumerate_schemes(
        p["n"], p["n_external"], exclude_vacuum=p["exclude_vacuum"])
    rows = [
        (f"c{idx}", cls.multiplicity, cls.symmetry_factor, cls.vacuum_components)
        for idx, cls in enumerate(classes, 1)
    ]
    total_fields = 4 * p["n"] + p["n_external"]
    summary = {
        "vertices": p["n"],
        "external_fields": p["n_external"],
        "scheme_count": len(schemes),
        "class_count": len(classes),
        "pairing_double_factorial": wick.count_pairings(total_fields),
        "multiplicity_total": sum(cls.multiplicity for cls in classes),
    }
    return Result(
        ("graph_class", "multiplicity", "symmetry_factor", "vacuum_components"),
        rows, summary)


def _guard_wick(p, rails):
    if p["n"] > rails.max_order:
        raise GuardExceeded(
            f"vertex order {p['n']} exceeds --max-order {rails.max_order}")


def _check_wick(cfg):
    names = []
    schemes, classes = wick.enumerate_schemes(1, 0)
    _require(len(schemes) == 3 and len(classes) == 1
             and classes[0].multiplicity == 3,
             "single-vertex vacuum pairing count is off")
    names.append("single-vertex vacuum pairings: 3 schemes, 1 class")
    schemes, classes = wick.enumerate_schemes(1, 2)
    mults = sorted(cls.multiplicity for cls in classes)
    _require(len(schemes) == 15 and mults == [3, 12],
             "one vertex with two sources must split 15 = 3 + 12")
    names.append("one vertex, two sources: classes 3 and 12")
    schemes, classes = wick.enumerate_schemes(2, 0)
    _require(len(schemes) == wick.count_pairings(8) == 105,
             "two-vertex scheme count is not the double factorial")
    _require(sum(cls.multiplicity for cls in classes) == 105,
             "class multiplicities must resum to the scheme count")
    names.append("two-vertex multiplicities resum to 7!! = 105")
    return names


# ---------------------------------------------------------------------------
# grassmann


def _run_grassmann_pfaffian(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    all_match = True
    for k in range(p["count"]):
        matrix = _random_antisymmetric(rng, p["size"])
        pf = grassmann.pfaffian(matrix, method=p["method"])
        det = exact.mat_det(matrix)
        residual = pf * pf - det
        ok = residual == 0
        all_match = all_match and ok
        rows.append((k, pf, det, residual, ok))
    summary = {
        "size": p["size"],
        "count": p["count"],
        "method": p["method"],
        "all_match": all_match,
    }
    if not all_match:
        raise InvariantViolation("pfaffian square disagreed with the determinant")
    return Result(("draw", "pfaffian", "determinant", "pf2_minus_det", "match"),
                  rows, summary)


def _run_grassmann_quasi(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    all_match = True
    for k in range(p["count"]):
        size = p["size"]
        diag = [Fraction(int(rng.integers(-9, 10))) for _ in range(size)]
        anti = _random_antisymmetric(rng, size)
        value = grassmann.quasi_pfaffian_det(diag, anti)
        direct = exact.mat_det(
            [[(diag[i] if i == j else Fraction(0)) + anti[i][j]
              for j in range(size)] for i in range(size)])
        ok = value == direct
        all_match = all_match and ok
        rows.append((k, value, direct, ok))
    if not all_match:
        raise InvariantViolation("quasi-pfaffian disagreed with det(D + A)")
    summary = {"size": p["size"], "count": p["count"], "all_match": all_match}
    return Result(("draw", "quasi_pfaffian", "det_d_plus_a", "match"), rows, summary)


def _run_grassmann_det(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    all_match = True
    for k in range(p["count"]):
        size = p["size"]
        matrix = [[Fraction(int(rng.integers(-9, 10))) for _ in range(size)]
                  for _ in range(size)]
        via_integral = grassmann.det_via_grassmann(matrix)
        direct = exact.mat_det(matrix)
        ok = via_integral == direct
        all_match = all_match and ok
        rows.append((k, via_integral, direct, ok))
    if not all_match:
        raise InvariantViolation("Berezin-integral determinant disagreed")
    summary = {"size": p["size"], "count": p["count"], "all_match": all_match}
    return Result(("draw", "berezin_det", "direct_det", "match"), rows, summary)


def _guard_grassmann_pfaffian(p, rails):
    if p["method"] == "grassmann" and 2 * p["size"] > rails.max_generators:
        raise GuardExceeded(
            f"pfaffian via generators needs {2 * p['size']} generators; "
            f"--max-generators is {rails.max_generators}")


def _guard_grassmann_pairs(p, rails):
    if 2 * p["size"] > rails.max_generators:
        raise GuardExceeded(
            f"this route needs {2 * p['size']} generators; "
            f"--max-generators is {rails.max_generators}")


def _check_grassmann(cfg):
    names = []
    anchor = grassmann.pfaffian([[Fraction(0), Fraction(2)],
                                 [Fraction(-2), Fraction(0)]])
    _require(anchor == 2, "2x2 pfaffian must equal the upper entry")
    names.append("2x2 pfaffian sign anchor")
    rng = np.random.default_rng(cfg.seed)
    for size in (3, 4, 5, 6):
        matrix = _random_antisymmetric(rng, size)
        pf = grassmann.pfaffian(matrix)
        _require(pf * pf == exact.mat_det(matrix),
                 f"pfaffian square failed at size {size}")
        if size % 2:
            _require(pf == 0, "odd antisymmetric pfaffian must vanish")
    names.append("pfaffian square equals determinant (sizes 3-6)")
    diag = [Fraction(int(rng.integers(-9, 10))) for _ in range(4)]
    anti = _random_antisymmetric(rng, 4)
    total = [[(diag[i] if i == j else Fraction(0)) + anti[i][j]
              for j in range(4)] for i in range(4)]
    _require(grassmann.quasi_pfaffian_det(diag, anti) == exact.mat_det(total),
             "quasi-pfaffian route failed")
    names.append("quasi-pfaffian equals det(D + A)")
    matrix = [[Fraction(int(rng.integers(-9, 10))) for _ in range(3)]
              for _ in range(3)]
    _require(grassmann.det_via_grassmann(matrix) == exact.mat_det(matrix),
             "Berezin determinant route failed")
    names.append("Berezin integral reproduces a 3x3 determinant")
    return names


# ---------------------------------------------------------------------------
# symanzik


def _monomial_label(variables, exponents):
    parts = []
    for tag, power in zip(variables, exponents):
        if power == 1:
            parts.append(f"a{tag}")
        elif power > 1:
            parts.append(f"a{tag}^{power}")
    return "*".join(parts) if parts else "1"


def _run_symanzik_poly(p, cfg):
    graph = _load_graph(p["graph"])
    poly = symanzik.first_symanzik(graph)
    trees = symanzik.spanning_trees(graph)
    kirchhoff = symanzik.kirchhoff_tree_count(graph)
    rows = [
        (_monomial_label(poly.variables, exps), coeff)
        for exps, coeff in sorted(poly.terms.items())
    ]
    coefficient_total = sum(poly.terms.values())
    summary = {
        "internal_lines": len(poly.variables),
        "spanning_trees": len(trees),
        "kirchhoff_count": kirchhoff,
        "coefficient_total": coefficient_total,
        "degree": poly.degree(),
        "homogeneous": poly.is_homogeneous(),
        "counts_match": len(trees) == kirchhoff == coefficient_total,
    }
    return Result(("monomial", "coefficient"), rows, summary)


def _run_symanzik_verify(p, cfg):
    graph = _load_graph(p["graph"])
    checked = symanzik.deletion_contraction_check(graph)
    rows = [(f"l{tag}", "ok") for tag in checked]
    summary = {"lines_checked": len(checked), "identity_holds": True}
    return Result(("line", "deletion_contraction"), rows, summary)


def _run_symanzik_treematrix(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for k in range(p["count"]):
        matrix = _random_zero_column_sum(rng, p["size"])
        minor_det, tree_sum = symanzik.tree_matrix_check(matrix)
        rows.append((k, minor_det, tree_sum, minor_det == tree_sum))
    summary = {"size": p["size"], "count": p["count"], "all_match": True}
    return Result(("draw", "minor_det", "directed_tree_sum", "match"),
                  rows, summary)


def _check_symanzik(cfg):
    names = []
    for name in ("bubble", "triangle", "k4"):
        symanzik.deletion_contraction_check(_builtin_graph(name))
    names.append("deletion-contraction identity on bubble, triangle, k4")
    k4 = _builtin_graph("k4")
    trees = symanzik.spanning_trees(k4)
    _require(len(trees) == symanzik.kirchhoff_tree_count(k4) == 16,
             "complete graph on 4 vertices must have 16 spanning trees")
    names.append("matrix-tree count 16 on the complete 4-vertex graph")
    rng = np.random.default_rng(cfg.seed)
    for _ in range(3):
        symanzik.tree_matrix_check(_random_zero_column_sum(rng, 4))
    names.append("directed-tree determinant identity on random matrices")
    return names


# ---------------------------------------------------------------------------
# forest


def _run_forest_weights(p, cfg):
    graph = _load_graph(p["graph"])
    report = forest.barycentric_check(
        graph, method=p["method"], samples=p["samples"], seed=cfg.seed)
    rows = []
    for idx, (tags, weight, half_width) in enumerate(report.weights, 1):
        exact_weight = weight if isinstance(weight, Fraction) else None
        rows.append((
            f"T{idx}",
            "+".join(f"l{tag}" for tag in tags),
            float(weight),
            exact_weight,
            float(half_width),
        ))
    summary = {
        "tree_count": len(report.weights),
        "total": float(report.total),
        "total_exact": report.total if report.exact else None,
        "deviation_from_one": report.deviation,
        "exact": report.exact,
    }
    return Result(("tree", "lines", "weight", "weight_exact", "half_width"),
                  rows, summary)


def _run_forest_verify(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    n = p["points"]
    coefficients = {}
    for i in range(n):
        for j in range(i + 1, n):
            coefficients[(i, j)] = Fraction(
                int(rng.integers(-3, 4)), int(rng.integers(1, 5)))
    report = forest.forest_formula_verify(coefficients, n)
    rows = [(f"c{i}{j}", value) for (i, j), value in sorted(coefficients.items())]
    summary = {
        "points": n,
        "forest_count": report.forest_count,
        "direct_value": report.value_lhs,
        "interpolated_value": report.value_rhs,
        "relative_error": report.relative_error,
    }
    return Result(("pair", "coefficient"), rows, summary)


def _check_forest(cfg):
    names = []
    report = forest.barycentric_check(_builtin_graph("bubble"))
    weights = sorted(w for _tags, w, _hw in report.weights)
    _require(report.exact and weights == [Fraction(1, 2), Fraction(1, 2)],
             "two parallel lines must weigh 1/2 each")
    names.append("parallel-pair tree weights are exactly 1/2 + 1/2")
    report = forest.barycentric_check(_builtin_graph("triangle"))
    _require(report.exact and report.total == 1
             and [w for _t, w, _h in report.weights] == [Fraction(1, 3)] * 3,
             "triangle tree weights must be 1/3 each")
    names.append("triangle tree weights are exactly three thirds")
    report = forest.barycentric_check(_builtin_graph("theta"))
    _require(report.exact and report.total == 1,
             "theta-graph tree weights must sum to one")
    names.append("theta-graph tree weights sum to one")
    rng = np.random.default_rng(cfg.seed)
    coefficients = {(i, j): Fraction(int(rng.integers(-3, 4)),
                                     int(rng.integers(1, 5)))
                    for i in range(3) for j in range(i + 1, 3)}
    report = forest.forest_formula_verify(coefficients, 3)
    _require(report.relative_error < 1e-12,
             "interpolation formula drifted from the direct value")
    names.append("interpolation formula matches the direct exponential")
    edges = [(0, 1), (1, 2)]
    x = forest.x_matrix(edges, {pos: 0.5 for pos in range(len(edges))}, 4)
    _require(forest.is_positive_semidefinite(x),
             "weakening matrix must stay positive semidefinite")
    names.append("weakening matrix stays positive semidefinite")
    return names


# ---------------------------------------------------------------------------
# bounds


def _run_bounds_hadamard(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    matrices = []
    for _ in range(p["count"]):
        if p["kind"] == "gaussian":
            matrices.append(rng.standard_normal((p["size"], p["size"])))
        elif p["kind"] == "pm1":
            matrices.append(rng.choice([-1.0, 1.0], size=(p["size"], p["size"])))
        else:
            raise InputError(f"unknown matrix kind {p['kind']!r}")
    reports = _parallel_map(detbounds.hadamard_bounds, matrices, cfg.threads)
    rows = [
        (k, rep.abs_det, rep.row_bound, rep.col_bound, rep.sup_bound,
         rep.all_hold())
        for k, rep in enumerate(reports)
    ]
    all_hold = all(rep.all_hold() for rep in reports)
    if not all_hold:
        raise InvariantViolation("a determinant bound failed on a random draw")
    summary = {
        "size": p["size"],
        "count": p["count"],
        "kind": p["kind"],
        "all_hold": all_hold,
    }
    return Result(
        ("draw", "abs_det", "row_bound", "col_bound", "sup_bound", "holds"),
        rows, summary)


def _run_bounds_gram(p, cfg):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for k in range(p["count"]):
        f = rng.standard_normal((p["size"], p["dim"] or p["size"]))
        g = rng.standard_normal((p["size"], p["dim"] or p["size"]))
        report = detbounds.gram_bound(detbounds.GramFactorization(f, g))
        rows.append((k, report.abs_det, report.bound, report.holds))
        if not report.holds:
            raise InvariantViolation("Gram bound failed on a random draw")
    summary = {"size": p["size"], "count": p["count"], "all_hold": True}
    return Result(("draw", "abs_det", "bound", "holds"), rows, summary)


def _check_bounds(cfg):
    names = []
    rng = np.random.default_rng(cfg.seed)
    for size in range(2, 7):
        report = detbounds.hadamard_bounds(rng.standard_normal((size, size)))
        _require(report.all_hold(), f"volume bound failed at size {size}")
    names.append("row, column, and sup-norm bounds hold on random draws")
    h4 = detbounds.hadamard_matrix(4)
    report = detbounds.hadamard_bounds(h4)
    _require(abs(report.abs_det - 16.0) < 1e-9
             and abs(report.sup_bound - 16.0) < 1e-9,
             "order-4 sign matrix must meet the sup bound with equality")
    names.append("order-4 sign matrix meets the sup bound with equality")
    f = rng.standard_normal((4, 4))
    g = rng.standard_normal((4, 4))
    fact = detbounds.GramFactorization(f, g)
    _require(detbounds.gram_bound(fact).holds, "Gram bound failed")
    names.append("Gram bound holds for random vector families")
    norm_f = f / np.linalg.norm(f, axis=1, keepdims=True)
    norm_g = g / np.linalg.norm(g, axis=1, keepdims=True)
    unit = detbounds.GramFactorization(norm_f, norm_g)
    edges = [(0, 1), (1, 2), (2, 3)]
    x = forest.x_matrix(edges, {pos: float(rng.random())
                                for pos in range(len(edges))}, 4)
    weakened = detbounds.weakened_gram_check(unit, x, range(4), range(4))
    _require(weakened.holds, "interpolation-weakened Gram bound failed")
    names.append("weakened Gram bound survives interpolation matrices")
    return names


# ---------------------------------------------------------------------------
# flow


def _run_flow_run(p, cfg):
    kind = p["kind"]
    if kind == "af":
        trajectory = rgflow.flow_asymptotically_free(
            p["lambda0"], p["beta"], p["steps"], gamma=p["gamma"])
    elif kind == "stable":
        trajectory = rgflow.flow_stable_phi4(
            p["lambda0"], p["beta"], p["steps"], recursion=p["recursion"])
    else:
        raise InputError(f"unknown flow kind {kind!r}; use af or stable")
    rows = []
    identity_exact = True
    lam0 = trajectory.values[0]
    for i, lam in enumerate(trajectory.values):
        if lam is None:
            rows.append((i, None, None, None))
            continue
        inverse = 1 / lam if lam else None
        gap = (1 / lam - 1 / lam0) if (kind == "af" and lam) else None
        if kind == "af" and gap != trajectory.beta * i:
            identity_exact = False
        rows.append((i, float(lam), lam if isinstance(lam, Fraction) else None,
                     gap))
    final = trajectory.final
    summary = {
        "kind": trajectory.kind,
        "beta": float(trajectory.beta),
        "steps": p["steps"],
        "final": float(final) if final is not None else None,
        "final_exact": final if isinstance(final, Fraction) else None,
    }
    if kind == "af":
        summary["inverse_identity_exact"] = identity_exact
        if not identity_exact:
            raise InvariantViolation(
                "inverse-coupling identity failed along the trajectory")
    else:
        summary["blowup_index"] = trajectory.blowup_index
        summary["pole_estimate"] = trajectory.notes.get("pole_estimate")

    def plot(ax):
        values = trajectory.as_floats()
        steps = [i for i, v in enumerate(values) if math.isfinite(v) and v > 0]
        ax.semilogy(steps, [values[i] for i in steps], marker="o")
        ax.set_xlabel("step")
        ax.set_ylabel("coupling")
        ax.set_title(f"{trajectory.kind} flow, beta = {float(trajectory.beta):g}")
        ax.grid(True, which="both", alpha=0.3)

    return Result(("step", "coupling", "coupling_exact", "inverse_gap"),
                  rows, summary, plot)


def _run_flow_renormalon(p, cfg):
    growth = rgflow.renormalon_growth(p["nmax"], m2=p["m2"])
    logfree = rgflow.logfree_reference(m2=p["m2"])
    rows = []
    for n, integral, ratio in growth:
        logfree_ratio = (1.0 / n) if n >= 1 else None
        rows.append((n, integral, ratio, logfree_ratio))
    ratios = [r for _n, _v, r in growth if r is not None]
    window = [r for n, _v, r in growth if r is not None and n >= max(2, p["nmax"] - 5)]
    drift = (max(window) - min(window)) / abs(np.mean(window)) if window else None
    summary = {
        "n_max": p["nmax"],
        "m2": p["m2"],
        "logfree_value": logfree,
        "plateau_window_low": max(2, p["nmax"] - 5),
        "plateau_drift": drift,
        "ratio_final": ratios[-1] if ratios else None,
    }

    def plot(ax):
        ns = [n for n, _v, r in growth if r is not None]
        ax.plot(ns, [r for _n, _v, r in growth if r is not None],
                marker="o", label="factorial-growth ratio")
        ax.plot(ns, [1.0 / n for n in ns], marker="x", linestyle="--",
                label="log-free reference 1/n")
        ax.set_xlabel("order n")
        ax.set_ylabel("ratio I_n / (n I_{n-1})")
        ax.legend()
        ax.grid(True, alpha=0.3)

    return Result(("order", "integral", "ratio", "logfree_ratio"),
                  rows, summary, plot)


def _check_flow(cfg):
    names = []
    trajectory = rgflow.flow_asymptotically_free(Fraction(1, 10), 1, 10)
    _require(trajectory.final == Fraction(1, 20),
             "downward flow from 0.1 with unit slope must reach 0.05")
    for i, lam in enumerate(trajectory.values):
        _require(1 / lam - 1 / trajectory.values[0] == i,
                 "inverse-coupling identity failed")
    names.append("inverse-coupling identity is exact step by step")
    for lam in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)):
        traj = rgflow.flow_stable_phi4(lam, 1, 40)
        pole = 1 / lam
        _require(traj.blowup_index is not None
                 and abs(traj.blowup_index - pole) <= 2,
                 f"blow-up index strayed from the pole at coupling {lam}")
    names.append("blow-up index tracks the inverse-coupling pole")
    growth = rgflow.renormalon_growth(6)
    _require(all(value > 0 for _n, value, _r in growth),
             "moment integrals must be positive")
    _require(rgflow.logfree_reference() > 0, "log-free reference must be positive")
    names.append("moment integrals and log-free reference are positive")
    return names


# ---------------------------------------------------------------------------
# sectors


_CATEGORY_ORDER = ("corner", "middle-face", "face", "diagonal", "general")


def _run_sectors_count(p, cfg):
    js = p["j_range"]

    def one(j):
        grid = sectors.JelliumSectorGrid(p["dim"], j, p["M"], p["anisotropic"])
        centers = grid.centers()
        tolerance = p["tolerance"] * (1 + abs(p["offset"])) * p["M"] ** (-j)
        return len(centers), sectors.conserving_tuple_count(centers, tolerance)

    pairs = _parallel_map(one, js, cfg.threads)
    tuple_counts = [t for _s, t in pairs]
    slope = sectors.fitted_count_slope(js, tuple_counts, p["M"])
    rows = [(j, s, t) for j, (s, t) in zip(js, pairs)]
    summary = {
        "dimension": p["dim"],
        "M": p["M"],
        "tolerance_constant": p["tolerance"],
        "offset": p["offset"],
        "anisotropic": p["anisotropic"],
        "slope": slope,
    }

    def plot(ax):
        log_counts = [math.log(t) / math.log(p["M"]) for t in tuple_counts]
        ax.plot(js, log_counts, marker="o", label="log_M tuple count")
        intercept = np.mean([y - slope * j for j, y in zip(js, log_counts)])
        ax.plot(js, [slope * j + intercept for j in js], linestyle="--",
                label=f"fit slope {slope:.3f}")
        ax.set_xlabel("scale index j")
        ax.set_ylabel("log_M count")
        ax.legend()
        ax.grid(True, alpha=0.3)

    return Result(("j", "sector_count", "conserving_tuples"), rows, summary, plot)


def _run_sectors_hubbard(p, cfg):
    slice_index = p["i"]
    secs = sectors.all_sectors(slice_index)
    counts = {name: 0 for name in _CATEGORY_ORDER}
    for sector in secs:
        counts[sector.category()] += 1
    if p["list_all"]:
        columns = ("sector", "window_plus", "window_minus", "depth", "category")
        rows = [
            (f"s{k}", s.window_plus, s.window_minus, s.depth, s.category())
            for k, s in enumerate(secs, 1)
        ]
    else:
        columns = ("category", "count")
        rows = [(name, counts[name]) for name in _CATEGORY_ORDER]
    summary = {"slice_index": slice_index, "sector_count": len(secs)}
    for name in _CATEGORY_ORDER:
        summary[name.replace("-", "_")] = counts[name]
    return Result(columns, rows, summary)


def _run_sectors_decay(p, cfg):
    sector = sectors.HubbardSector(p["i"], p["splus"], p["sminus"])
    fit = hubbard.stretched_decay_fit(
        sector, beta=p["beta"], M=p["M"], order=p["alpha"],
        exponent=p["exponent"], steps=p["steps"],
        direction=p["direction"], nodes=p["nodes"])
    rows = [
        (k, float(d), float(d) ** fit.exponent, float(v))
        for k, (d, v) in enumerate(zip(fit.distances, fit.log_values))
    ]
    summary = {
        "slice_index": p["i"],
        "window_plus": p["splus"],
        "window_minus": p["sminus"],
        "beta": p["beta"],
        "stretch_exponent": fit.exponent,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "negative_slope": fit.slope < 0,
        "points": len(rows),
    }

    def plot(ax):
        xs = [float(d) ** fit.exponent for d in fit.distances]
        ax.plot(xs, fit.log_values, marker="o", linestyle="none",
                label="log |amplitude|")
        ax.plot(xs, [fit.slope * x + fit.intercept for x in xs], linestyle="--",
                label=f"slope {fit.slope:.3f}")
        ax.set_xlabel(f"distance^{fit.exponent:g}")
        ax.set_ylabel("log amplitude")
        ax.legend()
        ax.grid(True, alpha=0.3)

    return Result(("point", "distance", "stretched_distance", "log_amplitude"),
                  rows, summary, plot)


def _guard_sectors_count(p, rails):
    if max(p["j_range"]) > rails.max_scale:
        raise GuardExceeded(
            f"scale index {max(p['j_range'])} exceeds --max-scale {rails.max_scale}")


def _guard_sectors_slice(p, rails):
    if p["i"] > rails.max_scale:
        raise GuardExceeded(
            f"slice index {p['i']} exceeds --max-scale {rails.max_scale}")


def _check_sectors(cfg):
    names = []
    points = (-3.1, -1.2, 0.0, 0.7, 2.4)
    worst = max(sectors.tilted_identity_gap(k1, k2)
                for k1 in points for k2 in points)
    _require(worst <= 1e-12, "tilted-basis energy identity drifted")
    names.append("tilted-basis energy identity holds to 1e-12")
    _require(sectors.sector_q_window(0, 0, 2.0) == (0.0, 1.0),
             "the single window of slice zero must be the whole interval")
    for s in range(5):
        lo, hi = sectors.sector_q_window(s, 4, 2.0)
        _require(0.0 <= lo < hi <= 1.0, "windows must nest inside [0, 1]")
    names.append("distance windows stay inside the unit interval")
    counts = {}
    for sector in sectors.all_sectors(6):
        counts[sector.category()] = counts.get(sector.category(), 0) + 1
    _require(counts == {"corner": 1, "middle-face": 2, "face": 10,
                        "diagonal": 4, "general": 22},
             "slice-6 taxonomy counts changed")
    names.append("slice-6 sector taxonomy counts are 1/2/10/4/22")
    feasible, failures = sectors.conservation_soundness_sweep(3)
    _require(feasible > 0 and not failures,
             "conservation rule missed a feasible leg combination")
    names.append("conservation rule is sound for slices up to 3")
    partition = hubbard.gevrey_partition(0.5)
    rng = np.random.default_rng(cfg.seed)
    radii = rng.uniform(0.0, 1.5, size=8)
    total = sum(partition.slice_weight(i, radii, top=40) for i in range(41))
    _require(float(np.max(np.abs(total - 1.0))) < 1e-12,
             "scale partition of unity drifted")
    names.append("scale partition of unity sums to one")
    fit = hubbard.stretched_decay_fit(
        sectors.HubbardSector(2, 1, 1), beta=100.0, steps=4, nodes=40)
    _require(fit.slope < 0, "sector propagator must decay along the lattice ray")
    names.append("sector propagator decays along a lattice ray")
    return names


# ---------------------------------------------------------------------------
# toy


def _toy_spec(p):
    return toy.ToyModelSpec.grid(
        _parse_sites(p["sites"]), p["colors"], p["scale_index"],
        scale_base=p["base"], coupling=p["coupling"])


def _run_toy_pressure(p, cfg):
    spec = _toy_spec(p)
    series = toy.tree_expansion_pressure(
        spec, n_max=p["nmax"], samples=p["samples"], seed=cfg.seed)
    exact_series = None
    if p["compare_exact"]:
        exact_series = toy.pressure_series_exact(spec, n_max=p["nmax"])
    rows = []
    all_match = True
    for order in range(1, p["nmax"] + 1):
        coeff = series.coefficient(order)
        ci = series.confidence_for(order)
        lo, hi = (ci if ci else (None, None))
        exact_coeff = None
        agreement = None
        if exact_series is not None:
            exact_coeff = exact_series.coefficient(order)
            if isinstance(coeff, Fraction):
                agreement = "exact-match" if coeff == exact_coeff else "MISMATCH"
            else:
                inside = lo is not None and lo <= float(exact_coeff) <= hi
                agreement = "inside-ci" if inside else "outside-ci"
            if agreement in ("MISMATCH", "outside-ci"):
                all_match = False
        rows.append((order, coeff, float(coeff), series.root_magnitude(order),
                     lo, hi, exact_coeff, agreement))
    summary = {
        "sites": spec.site_count,
        "colors": spec.color_count,
        "scale_index": spec.scale_index,
        "scale_base": spec.scale_base,
        "coupling": spec.coupling,
        "n_max": p["nmax"],
        "method": series.method,
        "samples": p["samples"],
    }
    if exact_series is not None:
        summary["all_match"] = all_match
        if not all_match:
            raise InvariantViolation(
                "tree-expansion series disagreed with the direct evaluation")

    def plot(ax):
        orders = [row[0] for row in rows]
        roots = [row[3] for row in rows]
        ax.plot(orders, roots, marker="o")
        ax.set_xlabel("order n")
        ax.set_ylabel("|p_n|^(1/n)")
        ax.set_title(f"{spec.site_count} sites, {spec.color_count} colors, "
                     f"scale {spec.scale_index}")
        ax.grid(True, alpha=0.3)

    return Result(
        ("order", "coefficient", "value", "root_magnitude",
         "ci_low", "ci_high", "direct_coefficient", "agreement"),
        rows, summary, plot)


def _run_toy_bound(p, cfg):
    report = toy.bound_sweep(
        site_count=_parse_sites(p["sites"]), n_max=p["nmax"],
        scale_indices=p["j_range"], color_counts=p["colors_list"],
        scale_base=p["base"], coupling=p["coupling"])
    rows = list(report.rows)
    summary = {
        "fitted_scale": report.fitted_scale,
        "all_hold": report.all_hold,
        "scale_ratio": report.scale_ratio,
        "color_ratio": report.color_ratio,
        "zero_series_colors": report.zero_series_colors,
    }
    return Result(("scale_index", "colors", "order", "root_magnitude"),
                  rows, summary)


def _guard_toy_pressure(p, rails):
    if p["nmax"] > rails.max_order:
        raise GuardExceeded(
            f"series order {p['nmax']} exceeds --max-order {rails.max_order}")
    if p["scale_index"] > rails.max_scale:
        raise GuardExceeded(
            f"scale index {p['scale_index']} exceeds --max-scale {rails.max_scale}")
    if p["compare_exact"]:
        demand = 2 * _parse_sites(p["sites"]) * p["colors"]
        if demand > rails.max_generators:
            raise GuardExceeded(
                f"direct evaluation needs {demand} generators; "
                f"--max-generators is {rails.max_generators}")


def _guard_toy_bound(p, rails):
    if p["nmax"] > rails.max_order:
        raise GuardExceeded(
            f"series order {p['nmax']} exceeds --max-order {rails.max_order}")
    if max(p["j_range"]) > rails.max_scale:
        raise GuardExceeded(
            f"scale index {max(p['j_range'])} exceeds --max-scale {rails.max_scale}")


def _check_toy(cfg):
    names = []
    for colors in (1, 2, 3):
        spec = toy.ToyModelSpec.grid(2, colors, 1)
        series = toy.pressure_series_exact(spec, n_max=1)
        _require(series.coefficient(1) == -Fraction(colors - 1, colors),
                 "first-order pressure must be -(N-1)/N")
    names.append("first-order pressure equals -(N-1)/N")
    spec = toy.ToyModelSpec.grid(2, 2, 1)
    series = toy.pressure_series_exact(spec, n_max=2)
    _require(toy.tree_pressure_order(spec, 2) == series.coefficient(2),
             "tree route disagreed with the direct second order")
    names.append("tree expansion matches the direct second order")
    edges = ((0, 1), (1, 2))
    wiring = toy.all_contraction_wirings(edges)[0]
    _require(toy.count_compatible_colorings(3, 2, edges, wiring)
             == toy.color_multiplicity(3, 2),
             "per-tree color count must be N^(n+1)")
    names.append("per-tree color assignments count N^(n+1)")
    _require(toy.pauli_power_vanishes(toy.ToyModelSpec.grid(1, 2, 0)),
             "high powers of the local interaction must vanish")
    names.append("local interaction is nilpotent past the color count")
    return names


# ---------------------------------------------------------------------------
# registry


@dataclasses.dataclass(frozen=True)
class ActionDef:
    params: dict
    handler: object
    guard: object = None


REGISTRY = {
    ("wick", "enumerate"): ActionDef(
        params={
            "n": (1, _as_int),
            "n_external": (0, _as_int),
            "exclude_vacuum": (False, _as_bool),
        },
        handler=_run_wick_enumerate,
        guard=_guard_wick,
    ),
    ("grassmann", "pfaffian"): ActionDef(
        params={
            "size": (6, _as_int),
            "count": (10, _as_int),
            "method": ("recursive", _as_str),
        },
        handler=_run_grassmann_pfaffian,
        guard=_guard_grassmann_pfaffian,
    ),
    ("grassmann", "quasi"): ActionDef(
        params={"size": (4, _as_int), "count": (5, _as_int)},
        handler=_run_grassmann_quasi,
        guard=_guard_grassmann_pairs,
    ),
    ("grassmann", "det"): ActionDef(
        params={"size": (4, _as_int), "count": (5, _as_int)},
        handler=_run_grassmann_det,
        guard=_guard_grassmann_pairs,
    ),
    ("symanzik", "poly"): ActionDef(
        params={"graph": (None, _as_str)},
        handler=_run_symanzik_poly,
    ),
    ("symanzik", "verify"): ActionDef(
        params={"graph": (None, _as_str)},
        handler=_run_symanzik_verify,
    ),
    ("symanzik", "treematrix"): ActionDef(
        params={"size": (5, _as_int), "count": (20, _as_int)},
        handler=_run_symanzik_treematrix,
    ),
    ("forest", "weights"): ActionDef(
        params={
            "graph": (None, _as_str),
            "method": ("auto", _as_str),
            "samples": (20000, _as_int),
        },
        handler=_run_forest_weights,
    ),
    ("forest", "verify"): ActionDef(
        params={"points": (3, _as_int)},
        handler=_run_forest_verify,
    ),
    ("bounds", "hadamard"): ActionDef(
        params={
            "size": (6, _as_int),
            "count": (50, _as_int),
            "kind": ("gaussian", _as_str),
        },
        handler=_run_bounds_hadamard,
    ),
    ("bounds", "gram"): ActionDef(
        params={
            "size": (5, _as_int),
            "count": (20, _as_int),
            "dim": (0, _as_int),
        },
        handler=_run_bounds_gram,
    ),
    ("flow", "run"): ActionDef(
        params={
            "kind": ("af", _as_str),
            "lambda0": (Fraction(1, 10), _as_fraction),
            "beta": (Fraction(1), _as_fraction),
            "steps": (10, _as_int),
            "gamma": (0.0, _as_float),
            "recursion": ("inverse", _as_str),
        },
        handler=_run_flow_run,
    ),
    ("flow", "renormalon"): ActionDef(
        params={"nmax": (15, _as_int), "m2": (1.0, _as_float)},
        handler=_run_flow_renormalon,
    ),
    ("sectors", "count"): ActionDef(
        params={
            "dim": (2, _as_int),
            "M": (2.0, _as_float),
            "j_range": ((3, 4, 5, 6, 7), _as_index_list),
            "tolerance": (2.0, _as_float),
            "offset": (0, _as_int),
            "anisotropic": (False, _as_bool),
        },
        handler=_run_sectors_count,
        guard=_guard_sectors_count,
    ),
    ("sectors", "hubbard"): ActionDef(
        params={"i": (4, _as_int), "list_all": (False, _as_bool)},
        handler=_run_sectors_hubbard,
        guard=_guard_sectors_slice,
    ),
    ("sectors", "decay"): ActionDef(
        params={
            "i": (4, _as_int),
            "splus": (2, _as_int),
            "sminus": (2, _as_int),
            "beta": (1000.0, _as_float),
            "M": (2.0, _as_float),
            "alpha": (0.5, _as_float),
            "exponent": (None, _as_float),
            "steps": (20, _as_int),
            "direction": ((1, 0), _as_pair),
            "nodes": (80, _as_int),
        },
        handler=_run_sectors_decay,
        guard=_guard_sectors_slice,
    ),
    ("toy", "pressure"): ActionDef(
        params={
            "sites": ("grid:2", _as_str),
            "colors": (2, _as_int),
            "scale_index": (3, _as_int),
            "base": (2, _as_int),
            "coupling": (Fraction(1), _as_fraction),
            "nmax": (3, _as_int),
            "samples": (4000, _as_int),
            "compare_exact": (False, _as_bool),
        },
        handler=_run_toy_pressure,
        guard=_guard_toy_pressure,
    ),
    ("toy", "bound"): ActionDef(
        params={
            "sites": ("grid:2", _as_str),
            "colors_list": ((1, 2, 4), _as_index_list),
            "j_range": ((1, 2, 3, 4, 5), _as_index_list),
            "base": (2, _as_int),
            "coupling": (Fraction(1), _as_fraction),
            "nmax": (3, _as_int),
        },
        handler=_run_toy_bound,
        guard=_guard_toy_bound,
    ),
}

CHECKS = {
    "wick": _check_wick,
    "grassmann": _check_grassmann,
    "symanzik": _check_symanzik,
    "forest": _check_forest,
    "bounds": _check_bounds,
    "flow": _check_flow,
    "sectors": _check_sectors,
    "toy": _check_toy,
}


# ---------------------------------------------------------------------------
# argument parsing


class _ArgumentParser(argparse.ArgumentParser):
    """argparse whose usage errors map to the input-error exit code."""

    def error(self, message):
        self.exit(4, f"{self.prog}: input error: {message}\n")


def _common_parent():
    parent = _ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="FILE",
                        help="JSON file of defaults; explicit flags win")
    parent.add_argument("--seed", type=int, help="random seed (default 0)")
    parent.add_argument("--format", choices=FORMATS,
                        help="output format (default table)")
    parent.add_argument("--json", dest="json_flag", action="store_true",
                        default=None, help="shorthand for --format json")
    parent.add_argument("--csv", dest="csv_flag", action="store_true",
                        default=None, help="shorthand for --format csv")
    parent.add_argument("--svg", dest="svg_path", metavar="FILE",
                        help="write a plot to FILE (implies --format svg)")
    parent.add_argument("--out", metavar="FILE",
                        help="write output to FILE instead of stdout")
    parent.add_argument("--check", action="store_true", default=None,
                        help="run this module's invariant suite and exit")
    parent.add_argument("--threads", type=int,
                        help="worker threads for independent work items")
    parent.add_argument("--max-order", dest="max_order", type=int,
                        help="guard: largest expansion order (default 4)")
    parent.add_argument("--max-generators", dest="max_generators", type=int,
                        help="guard: largest generator count (default 16)")
    parent.add_argument("--max-scale", dest="max_scale", type=int,
                        help="guard: largest scale index (default 12)")
    return parent


def build_parser():
    parser = _ArgumentParser(
        prog="rgkit",
        description="graph expansions, interpolation formulas, determinant "
                    "bounds, coupling flows, and sector counting from one "
                    "deterministic command line",
    )
    common = [_common_parent()]
    modules = parser.add_subparsers(dest="subcommand", metavar="MODULE",
                                    required=True, parser_class=_ArgumentParser)

    wick_parser = modules.add_parser("wick", help="pairing enumeration")
    wick_actions = wick_parser.add_subparsers(
        dest="action", metavar="ACTION", required=True,
        parser_class=_ArgumentParser)
    enum = wick_actions.add_parser("enumerate", parents=common,
                                   help="pairings of n quartic vertices")
    enum.add_argument("--n", dest="n", type=int, help="internal vertices")
    enum.add_argument("--N", dest="n_external", type=int,
                      help="external source fields")
    enum.add_argument("--exclude-vacuum", dest="exclude_vacuum",
                      action="store_true", default=None,
                      help="drop schemes with vacuum components")

    gr_parser = modules.add_parser("grassmann", help="anticommuting calculus")
    gr_actions = gr_parser.add_subparsers(dest="action", metavar="ACTION",
                                          required=True,
                                          parser_class=_ArgumentParser)
    pf = gr_actions.add_parser("pfaffian", parents=common,
                               help="pfaffian square vs determinant")
    pf.add_argument("--size", type=int, help="matrix size")
    pf.add_argument("--count", type=int, help="random draws")
    pf.add_argument("--method", choices=("recursive", "grassmann"))
    quasi = gr_actions.add_parser("quasi", parents=common,
                                  help="two-species quadratic integral")
    quasi.add_argument("--size", type=int)
    quasi.add_argument("--count", type=int)
    gdet = gr_actions.add_parser("det", parents=common,
                                 help="determinant via Berezin integral")
    gdet.add_argument("--size", type=int)
    gdet.add_argument("--count", type=int)

    sy_parser = modules.add_parser("symanzik", help="graph polynomials")
    sy_actions = sy_parser.add_subparsers(dest="action", metavar="ACTION",
                                          required=True,
                                          parser_class=_ArgumentParser)
    poly = sy_actions.add_parser("poly", parents=common,
                                 help="spanning-tree polynomial of a graph")
    poly.add_argument("--graph", help="builtin name or JSON file")
    verify = sy_actions.add_parser("verify", parents=common,
                                   help="deletion-contraction identity")
    verify.add_argument("--graph", help="builtin name or JSON file")
    tm = sy_actions.add_parser("treematrix", parents=common,
                               help="directed-tree determinant identity")
    tm.add_argument("--size", type=int)
    tm.add_argument("--count", type=int)

    fo_parser = modules.add_parser("forest", help="interpolation formulas")
    fo_actions = fo_parser.add_subparsers(dest="action", metavar="ACTION",
                                          required=True,
                                          parser_class=_ArgumentParser)
    weights = fo_actions.add_parser("weights", parents=common,
                                    help="tree weights of a graph (sum to 1)")
    weights.add_argument("--graph", help="builtin name or JSON file")
    weights.add_argument("--method", choices=("auto", "exact", "mc"))
    weights.add_argument("--samples", type=int)
    fverify = fo_actions.add_parser("verify", parents=common,
                                    help="interpolation formula on an "
                                         "exponential family")
    fverify.add_argument("--points", type=int)

    bo_parser = modules.add_parser("bounds", help="determinant bounds")
    bo_actions = bo_parser.add_subparsers(dest="action", metavar="ACTION",
                                          required=True,
                                          parser_class=_ArgumentParser)
    had = bo_actions.add_parser("hadamard", parents=common,
                                help="volume bounds on random matrices")
    had.add_argument("--size", type=int)
    had.add_argument("--count", type=int)
    had.add_argument("--kind", choices=("gaussian", "pm1"))
    gram = bo_actions.add_parser("gram", parents=common,
                                 help="inner-product bound on random families")
    gram.add_argument("--size", type=int)
    gram.add_argument("--count", type=int)
    gram.add_argument("--dim", type=int)

    fl_parser = modules.add_parser("flow", help="coupling trajectories")
    fl_actions = fl_parser.add_subparsers(dest="action", metavar="ACTION",
                                          required=True,
                                          parser_class=_ArgumentParser)
    run = fl_actions.add_parser("run", parents=common,
                                help="iterate a one-coupling flow")
    run.add_argument("--kind", choices=("af", "stable"))
    run.add_argument("--lambda0", help="starting coupling (rational ok)")
    run.add_argument("--beta", help="one-loop slope (rational ok)")
    run.add_argument("--steps", type=int)
    run.add_argument("--gamma", type=float, help="log-correction strength")
    run.add_argument("--recursion", choices=("inverse", "euler"))
    ren = fl_actions.add_parser("renormalon", parents=common,
                                help="factorial growth of moment integrals")
    ren.add_argument("--nmax", type=int)
    ren.add_argument("--m2", type=float)

    se_parser = modules.add_parser("sectors", help="Fermi-surface sectors")
    se_actions = se_parser.add_subparsers(dest="action", metavar="ACTION",
                                          required=True,
                                          parser_class=_ArgumentParser)
    count = se_actions.add_parser("count", parents=common,
                                  help="conserving 4-tuples across scales")
    count.add_argument("--dim", type=int, choices=(2, 3))
    count.add_argument("--M", dest="M", type=float)
    count.add_argument("--j", dest="j_range", help="scale indices, e.g. 3..7")
    count.add_argument("--tolerance", type=float)
    count.add_argument("--offset", type=int)
    count.add_argument("--anisotropic", action="store_true", default=None)
    hub = se_actions.add_parser("hubbard", parents=common,
                                help="anisotropic sectors of one slice")
    hub.add_argument("--i", dest="i", type=int, help="slice index")
    hub.add_argument("--list", dest="list_all", action="store_true",
                     default=None, help="list every sector")
    decay = se_actions.add_parser("decay", parents=common,
                                  help="stretched-exponential decay fit")
    decay.add_argument("--i", dest="i", type=int, help="slice index")
    decay.add_argument("--splus", type=int, help="window toward one face")
    decay.add_argument("--sminus", type=int, help="window toward the other")
    decay.add_argument("--beta", type=float, help="inverse temperature")
    decay.add_argument("--M", dest="M", type=float)
    decay.add_argument("--alpha", type=float, help="partition smoothness")
    decay.add_argument("--exponent", type=float, help="fit stretching power")
    decay.add_argument("--steps", type=int)
    decay.add_argument("--direction", help="lattice ray, e.g. 1,0")
    decay.add_argument("--nodes", type=int, help="quadrature nodes")

    toy_parser = modules.add_parser("toy", help="multi-color lattice model")
    toy_actions = toy_parser.add_subparsers(dest="action", metavar="ACTION",
                                            required=True,
                                            parser_class=_ArgumentParser)
    pressure = toy_actions.add_parser("pressure", parents=common,
                                      help="pressure series two ways")
    pressure.add_argument("--sites", help="site layout, e.g. grid:2")
    pressure.add_argument("--N", dest="colors", type=int, help="color count")
    pressure.add_argument("--j", dest="scale_index", type=int,
                          help="scale index")
    pressure.add_argument("--base", type=int, help="scale base")
    pressure.add_argument("--coupling", help="coupling (rational ok)")
    pressure.add_argument("--nmax", type=int, help="series order")
    pressure.add_argument("--samples", type=int, help="Monte Carlo samples")
    pressure.add_argument("--compare-exact", dest="compare_exact",
                          action="store_true", default=None,
                          help="also evaluate the series directly")
    bound = toy_actions.add_parser("bound", parents=common,
                                   help="per-order bounds across scales "
                                        "and colors")
    bound.add_argument("--sites", help="site layout, e.g. grid:2")
    bound.add_argument("--colors", dest="colors_list",
                       help="color counts, e.g. 1,2,4")
    bound.add_argument("--j", dest="j_range", help="scale indices, e.g. 1..5")
    bound.add_argument("--base", type=int)
    bound.add_argument("--coupling", help="coupling (rational ok)")
    bound.add_argument("--nmax", type=int)

    return parser


# ---------------------------------------------------------------------------
# config resolution and dispatch


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"config {path} must be a JSON object")
    return {str(key).replace("-", "_"): value for key, value in data.items()}


def _resolve_value(args, config, name, default, coerce):
    raw = getattr(args, name, None)
    if raw is None:
        raw = config.get(name)
    if raw is None:
        return default
    return coerce(raw)


def resolve_config(args):
    config = _load_config(args.config) if args.config else {}
    key = (args.subcommand, args.action)
    action_def = REGISTRY[key]
    params = {
        name: _resolve_value(args, config, name, default, coerce)
        for name, (default, coerce) in action_def.params.items()
    }
    fmt = args.format
    if fmt is None and args.svg_path:
        fmt = "svg"
    if fmt is None and args.csv_flag:
        fmt = "csv"
    if fmt is None and args.json_flag:
        fmt = "json"
    if fmt is None:
        fmt = str(config.get("format", "table"))
    if fmt not in FORMATS:
        raise InputError(f"unknown output format {fmt!r}")
    out = args.out or args.svg_path or config.get("out")
    rails = GuardRail(
        max_order=_resolve_value(args, config, "max_order", 4, _as_int),
        max_generators=_resolve_value(args, config, "max_generators", 16,
                                      _as_int),
        max_scale=_resolve_value(args, config, "max_scale", 12, _as_int),
    )
    threads = _resolve_value(args, config, "threads", 1, _as_int)
    if threads < 1:
        raise InputError("--threads must be at least 1")
    return RunConfig(
        subcommand=args.subcommand,
        action=args.action,
        params=params,
        fmt=fmt,
        out=str(out) if out else None,
        seed=_resolve_value(args, config, "seed", 0, _as_int),
        check=bool(args.check) or _as_bool(config.get("check", False)),
        threads=threads,
        rails=rails,
    )


def run(cfg):
    """Dispatch one resolved configuration and return its Result."""
    if cfg.check:
        names = CHECKS[cfg.subcommand](cfg)
        return Result(
            ("invariant", "status"),
            [(name, "ok") for name in names],
            {"module": cfg.subcommand, "invariants_checked": len(names),
             "all_ok": True},
        )
    action_def = REGISTRY[(cfg.subcommand, cfg.action)]
    if action_def.guard is not None:
        action_def.guard(cfg.params, cfg.rails)
    return action_def.handler(cfg.params, cfg)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits directly (status 4 for usage errors, 0 for --help);
        # translate so in-process callers get a return code as well
        return exc.code if isinstance(exc.code, int) else 4
    try:
        cfg = resolve_config(args)
        result = run(cfg)
        _emit(cfg, result)
    except GuardExceeded as exc:
        print(f"guard refusal: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
