"""Momentum-space sector analysis for fermionic Fermi surfaces.

Tools for slicing the neighborhood of a Fermi surface into angular sectors,
classifying the anisotropic windows of the half-filled square-lattice band in
a tilted momentum basis, deciding which sector 4-tuples can satisfy momentum
conservation at a quartic vertex, and counting conserving tuples on circular
and spherical surfaces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import cKDTree

from .guards import GuardExceeded, InputError

# The window arithmetic behind the vertex conservation rules compares a sine
# lower bound (slope 2/pi) against a sqrt(2) upper bound across one scale
# step, which is only decisive when the scale ratio exceeds 3*pi/sqrt(2).
MIN_CONSERVATION_RATIO = 3.0 * math.pi / math.sqrt(2.0)

# Enumeration guards for the conserving-tuple counting experiments.
MAX_COUNTING_INDEX = {2: 7, 3: 4}


# ---------------------------------------------------------------------------
# Thermal frequencies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatsubaraGrid:
    """Symmetric window of odd thermal frequencies (2n+1)*pi/beta.

    Antiperiodic boundary conditions put all frequencies on odd multiples of
    pi/beta, so the grid never contains zero: min |k0| = pi/beta exactly.
    """

    beta: float
    half_count: int  # frequencies for n = -half_count .. half_count-1

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise InputError("inverse temperature must be positive")
        if self.half_count < 0:
            raise InputError("frequency window size must be nonnegative")

    @property
    def frequencies(self) -> np.ndarray:
        odd = 2 * np.arange(-self.half_count, self.half_count) + 1
        return odd * (math.pi / self.beta)

    @property
    def min_abs_frequency(self) -> float:
        return math.pi / self.beta

    @property
    def is_empty(self) -> bool:
        return self.half_count == 0

    @classmethod
    def for_slice(cls, slice_index: int, beta: float, M: float = 2.0) -> "MatsubaraGrid":
        """All frequencies that can carry weight in one scale slice.

        The slice weight vanishes unless k0^2 + E^2 <= 2 M^(2-2i), so every
        frequency with |k0| > sqrt(2) M^(1-i) contributes exactly zero and
        the finite window below carries no truncation error at all.
        """
        if beta <= 0:
            raise InputError("inverse temperature must be positive")
        bound = math.sqrt(2.0) * M ** (1 - slice_index) * beta / math.pi
        half = int(math.floor((bound + 1.0) / 2.0)) if bound >= 1.0 else 0
        return cls(beta=beta, half_count=half)


def last_slice_index(temperature: float, M: float = 2.0) -> int:
    """Largest slice index whose frequency window still holds a Matsubara mode.

    Equals floor(log(M*sqrt(2)/(pi*T)) / log(M)); slices beyond it have an
    identically vanishing propagator because even the smallest frequency
    pi/beta falls outside their energy window.
    """
    if temperature <= 0:
        raise InputError("temperature must be positive")
    if M < 2:
        raise InputError("scale ratio must be at least 2")
    x = M * math.sqrt(2.0) / (math.pi * temperature)
    k = math.log(x) / math.log(M)
    nearest = round(k)
    # Guard the exact-power case against floating-point log round-off.
    if abs(k - nearest) < 1e-9:
        return int(nearest)
    return int(math.floor(k))


# ---------------------------------------------------------------------------
# Dispersion relations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dispersion:
    """Single-particle band energy measured from the Fermi level."""

    kind: str  # "jellium" or "hubbard"
    effective_mass: float = 1.0
    chemical_potential: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("jellium", "hubbard"):
            raise InputError("dispersion kind must be 'jellium' or 'hubbard'")
        if self.kind == "jellium":
            if self.effective_mass <= 0:
                raise InputError("effective mass must be positive")
            if self.chemical_potential <= 0:
                raise InputError("chemical potential must be positive")

    def energy(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == "jellium":
            return np.sum(k * k, axis=-1) / (2.0 * self.effective_mass) - self.chemical_potential
        return np.cos(k[..., 0]) + np.cos(k[..., 1])

    @property
    def fermi_radius(self) -> float:
        if self.kind != "jellium":
            raise InputError("only the rotation-invariant band has a Fermi radius")
        return math.sqrt(2.0 * self.effective_mass * self.chemical_potential)


# ---------------------------------------------------------------------------
# Tilted basis for the square-lattice band
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TiltedMomentum:
    """Momentum in the 45-degree basis aligned with the square Fermi surface.

    Components k_plus, k_minus are coordinates along (pi/2)(1,1) and
    (pi/2)(-1,1); in these units the square Fermi surface sits at
    |k_plus| = |k_minus| = 1 and the band energy factorizes as
    2 cos(pi k_plus / 2) cos(pi k_minus / 2).
    """

    k0: float
    k_plus: float
    k_minus: float

    @classmethod
    def from_square(cls, k0: float, k1: float, k2: float) -> "TiltedMomentum":
        return cls(k0=k0, k_plus=(k1 + k2) / math.pi, k_minus=(k2 - k1) / math.pi)

    def to_square(self) -> Tuple[float, float]:
        k1 = (math.pi / 2.0) * (self.k_plus - self.k_minus)
        k2 = (math.pi / 2.0) * (self.k_plus + self.k_minus)
        return (k1, k2)

    @property
    def q_plus(self) -> float:
        return _corner_offset(self.k_plus)

    @property
    def q_minus(self) -> float:
        return _corner_offset(self.k_minus)

    def band_energy(self) -> float:
        return 2.0 * math.cos(math.pi * self.k_plus / 2.0) * math.cos(math.pi * self.k_minus / 2.0)


def _corner_offset(component: float) -> float:
    """Signed distance to the nearest face of the square Fermi surface."""
    return component - 1.0 if component >= 0 else component + 1.0


def tilted_identity_gap(k1: float, k2: float) -> float:
    """Residual of the factorization cos k1 + cos k2 = 2 cos cos in the tilted basis."""
    tm = TiltedMomentum.from_square(0.0, k1, k2)
    return abs(math.cos(k1) + math.cos(k2) - tm.band_energy())


# ---------------------------------------------------------------------------
# Square-lattice sectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class HubbardSector:
    """One anisotropic sector of a scale slice of the square-lattice band.

    ``slice_index`` fixes the overall energy shell; ``window_plus`` and
    ``window_minus`` index dyadic windows for the distance to the two faces
    of the square Fermi surface in the tilted basis (0 = farthest, equal to
    the slice index = closest).
    """

    slice_index: int
    window_plus: int
    window_minus: int

    def __post_init__(self) -> None:
        i, sp, sm = self.slice_index, self.window_plus, self.window_minus
        for value in (i, sp, sm):
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise InputError("sector indices must be nonnegative integers")
        if sp > i or sm > i:
            raise InputError("window index cannot exceed its slice index")
        if sp + sm < i - 2:
            raise InputError(
                "empty sector: both windows sit too far from the Fermi surface "
                "for their product to reach the slice energy shell"
            )

    @property
    def depth(self) -> int:
        return self.window_plus + self.window_minus - self.slice_index + 2

    @property
    def is_border(self) -> bool:
        return self.depth == 0

    def category(self) -> str:
        i, sp, sm = self.slice_index, self.window_plus, self.window_minus
        if sp == i and sm == i:
            return "corner"
        if {sp, sm} == {0, i}:
            return "middle-face"
        if (sm == i and 0 < sp < i) or (sp == i and 0 < sm < i):
            return "face"
        if sp == sm and sp < i:
            return "diagonal"
        return "general"


def sector_category(sector: HubbardSector) -> str:
    return sector.category()


def all_sectors(slice_index: int) -> List[HubbardSector]:
    """Every nonempty sector of one slice."""
    out = []
    for sp in range(slice_index + 1):
        for sm in range(slice_index + 1):
            if sp + sm >= slice_index - 2:
                out.append(HubbardSector(slice_index, sp, sm))
    return out


def sector_q_window(window_index: int, slice_index: int, M: float) -> Tuple[float, float]:
    """Linearized |q| window for one tilted direction of a sector.

    q is the signed distance to the nearest face of the square Fermi surface;
    the window is the sine-linearized image of the sector's cosine window and
    encloses the exact support.
    """
    s, i = window_index, slice_index
    if not 0 <= s <= i:
        raise InputError("window index must lie between 0 and the slice index")
    if i == 0:
        return (0.0, 1.0)
    if s == 0:
        return (2.0 / (math.pi * M), 1.0)
    if s < i:
        return (2.0 * M ** (-s) / (math.pi * M), math.sqrt(2.0) * M ** (-s))
    return (0.0, math.sqrt(2.0) * M ** (-i))


def hubbard_sector_support(sector: HubbardSector, M: float = 2.0) -> Dict[str, Tuple[float, float]]:
    """Per-direction |q| windows of a sector."""
    return {
        "plus": sector_q_window(sector.window_plus, sector.slice_index, M),
        "minus": sector_q_window(sector.window_minus, sector.slice_index, M),
    }


def sector_cos_window(window_index: int, slice_index: int, M: float) -> Tuple[float, float]:
    """|cos(pi k/2)| window on which one direction's sector weight can be nonzero."""
    s, i = window_index, slice_index
    if not 0 <= s <= i:
        raise InputError("window index must lie between 0 and the slice index")
    if i == 0:
        return (0.0, 1.0)
    if s == 0:
        return (1.0 / M, 1.0)
    if s < i:
        return (M ** (-(s + 1)), min(1.0, math.sqrt(2.0) * M ** (-s)))
    return (0.0, min(1.0, math.sqrt(2.0) * M ** (-i)))


# ---------------------------------------------------------------------------
# Vertex momentum conservation between sectors
# ---------------------------------------------------------------------------


def feasible_offsets(
    windows: Sequence[Tuple[float, float]], max_offset: int = 2
) -> Set[int]:
    """Even totals 2m reachable as signed sums of one value from each window.

    Each leg contributes a value with free sign and magnitude inside its
    window; for a fixed sign pattern the achievable sums form an interval,
    so feasibility of each lattice offset is decided exactly by interval
    arithmetic (no grid search needed).
    """
    offsets: Set[int] = set()
    for signs in itertools.product((1, -1), repeat=len(windows)):
        lo = sum(w[0] if s > 0 else -w[1] for s, w in zip(signs, windows))
        hi = sum(w[1] if s > 0 else -w[0] for s, w in zip(signs, windows))
        for m in range(-max_offset, max_offset + 1):
            if lo - 1e-12 <= 2.0 * m <= hi + 1e-12:
                offsets.add(m)
    return offsets


def _direction_admissible(
    window_indices: Sequence[int], scale_indices: Sequence[int]
) -> Tuple[bool, str]:
    """Conservation rule for one tilted direction.

    Admissible when the two smallest window indices differ by at most one,
    or when the uniquely smallest window index equals its own slice index
    and that slice is strictly coarser than the other three.
    """
    order = sorted(range(len(window_indices)), key=lambda t: window_indices[t])
    s_sorted = [window_indices[t] for t in order]
    if s_sorted[1] - s_sorted[0] <= 1:
        return True, "paired-windows"
    leader = order[0]
    others = [scale_indices[t] for t in range(len(window_indices)) if t != leader]
    if window_indices[leader] == scale_indices[leader] and all(
        scale_indices[leader] < o for o in others
    ):
        return True, "scale-coincidence"
    return False, ""


@dataclass(frozen=True)
class ConservationVerdict:
    admissible: bool
    plus_ok: bool
    minus_ok: bool
    plus_clause: str
    minus_clause: str

    def __bool__(self) -> bool:
        return self.admissible


def check_momentum_conservation(
    sectors: Sequence[HubbardSector], M: float = 16.0
) -> ConservationVerdict:
    """Can four sectors possibly exchange momentum at a quartic vertex?

    Applies the per-direction window rules; sound in the sense that any
    4-tuple admitting actual momenta inside its windows is admitted.
    """
    if len(sectors) != 4:
        raise InputError("exactly four sectors meet at a quartic vertex")
    if M <= MIN_CONSERVATION_RATIO:
        raise InputError(
            "sector conservation rules require a scale ratio M > 3*pi/sqrt(2)"
            f" ~= {MIN_CONSERVATION_RATIO:.4f}; got M={M}"
        )
    scales = [s.slice_index for s in sectors]
    plus_ok, plus_clause = _direction_admissible([s.window_plus for s in sectors], scales)
    minus_ok, minus_clause = _direction_admissible([s.window_minus for s in sectors], scales)
    return ConservationVerdict(
        admissible=plus_ok and minus_ok,
        plus_ok=plus_ok,
        minus_ok=minus_ok,
        plus_clause=plus_clause,
        minus_clause=minus_clause,
    )


def conservation_feasible(
    sectors: Sequence[HubbardSector], M: float = 16.0
) -> Dict[str, Set[int]]:
    """Interval oracle: lattice offsets reachable in each tilted direction."""
    if len(sectors) != 4:
        raise InputError("exactly four sectors meet at a quartic vertex")
    result = {}
    for direction, attr in (("plus", "window_plus"), ("minus", "window_minus")):
        windows = [sector_q_window(getattr(s, attr), s.slice_index, M) for s in sectors]
        result[direction] = feasible_offsets(windows)
    return result


def conservation_soundness_sweep(
    max_slice: int = 6, M: float = 16.0
) -> Tuple[int, List[Tuple[Tuple[int, int], ...]]]:
    """Exhaustive per-direction soundness check of the conservation rule.

    Sweeps every multiset of four (slice, window) legs up to ``max_slice``;
    whenever the interval oracle finds momenta compatible with the vertex
    constraint, the admissibility rule must agree.  Returns the number of
    feasible leg combinations checked and the list of failures (expected
    empty).
    """
    pairs = [(i, s) for i in range(1, max_slice + 1) for s in range(i + 1)]
    failures: List[Tuple[Tuple[int, int], ...]] = []
    feasible_count = 0
    for combo in itertools.combinations_with_replacement(pairs, 4):
        windows = [sector_q_window(s, i, M) for i, s in combo]
        if not feasible_offsets(windows):
            continue
        feasible_count += 1
        ok, _ = _direction_admissible([s for _, s in combo], [i for i, _ in combo])
        if not ok:
            failures.append(combo)
    return feasible_count, failures


def nonzero_offset_counterexamples(
    max_slice: int = 6, M: float = 16.0
) -> List[Tuple[Tuple[int, int], ...]]:
    """Search for nonzero lattice offsets without two outermost-window legs.

    A nonzero offset needs |sum q| >= 2, which requires at least two legs in
    the outermost window (index 0); this sweep confirms there is no
    counterexample among all leg multisets up to ``max_slice``.
    """
    pairs = [(i, s) for i in range(1, max_slice + 1) for s in range(i + 1)]
    bad: List[Tuple[Tuple[int, int], ...]] = []
    for combo in itertools.combinations_with_replacement(pairs, 4):
        zeros = sum(1 for _, s in combo if s == 0)
        if zeros >= 2:
            continue
        windows = [sector_q_window(s, i, M) for i, s in combo]
        if any(m != 0 for m in feasible_offsets(windows)):
            bad.append(combo)
    return bad


# ---------------------------------------------------------------------------
# Isotropic sector grids on circular / spherical Fermi surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JelliumSectorGrid:
    """Angular discretization of the Fermi circle / sphere at one scale.

    Isotropic sectors have angular size M^-j; the optional anisotropic 2D
    mode uses tangential size M^-(j/2) instead.  Centers are unit vectors
    arranged symmetrically under k -> -k.
    """

    dimension: int
    slice_index: int
    M: float = 2.0
    anisotropic: bool = False

    def __post_init__(self) -> None:
        if self.dimension not in (2, 3):
            raise InputError("sector grids exist for dimensions 2 and 3")
        if self.anisotropic and self.dimension != 2:
            raise InputError("anisotropic sectors are a 2D construction")
        if self.slice_index < 0:
            raise InputError("slice index must be nonnegative")
        if self.M <= 1:
            raise InputError("scale ratio must exceed 1")
        limit = MAX_COUNTING_INDEX[self.dimension]
        if self.slice_index > limit:
            raise GuardExceeded(
                f"sector enumeration capped at slice index {limit} in "
                f"{self.dimension}D; got {self.slice_index}"
            )

    @property
    def angular_scale(self) -> float:
        exponent = self.slice_index / 2.0 if self.anisotropic else float(self.slice_index)
        return self.M ** (-exponent)

    def centers(self) -> np.ndarray:
        delta = self.angular_scale
        if self.dimension == 2:
            count = int(math.ceil(2.0 * math.pi / delta))
            count += count % 2  # antipodal symmetry
            angles = (np.arange(count) + 0.5) * (2.0 * math.pi / count)
            return np.column_stack([np.cos(angles), np.sin(angles)])
        bands = int(math.ceil(math.pi / delta))
        rows = []
        for b in range(bands):
            polar = (b + 0.5) * math.pi / bands
            ring = int(math.ceil(2.0 * math.pi * math.sin(polar) / delta))
            ring += ring % 2
            ring = max(ring, 2)
            azimuth = (np.arange(ring) + 0.5) * (2.0 * math.pi / ring)
            rows.append(
                np.column_stack(
                    [
                        math.sin(polar) * np.cos(azimuth),
                        math.sin(polar) * np.sin(azimuth),
                        np.full(ring, math.cos(polar)),
                    ]
                )
            )
        return np.vstack(rows)


def conserving_tuple_count(centers: np.ndarray, tolerance: float) -> int:
    """Number of ordered center 4-tuples with |u_a+u_b+u_c+u_d| <= tolerance.

    Pair sums are matched against their negatives with a KD-tree; unordered
    pairs carry weight 2 (1 on the diagonal) so the weighted neighbor count
    equals the ordered 4-tuple count exactly.
    """
    pts = np.asarray(centers, dtype=float)
    if tolerance <= 0:
        raise InputError("tolerance must be positive")
    rows, cols = np.triu_indices(len(pts))
    sums = pts[rows] + pts[cols]
    weights = np.where(rows == cols, 1.0, 2.0)
    del rows, cols
    tree = cKDTree(sums)
    mirror = cKDTree(-sums)
    total = tree.count_neighbors(mirror, tolerance, weights=(weights, weights))
    return int(round(total))


def fitted_count_slope(slice_indices: Sequence[int], counts: Sequence[int], M: float) -> float:
    """Least-squares slope of log(count) against j*log(M)."""
    if len(slice_indices) < 2:
        raise InputError("slope fit needs at least two slice indices")
    if any(c <= 0 for c in counts):
        raise InputError("slope fit needs positive counts at every index")
    x = np.asarray(slice_indices, dtype=float) * math.log(M)
    y = np.log(np.asarray(counts, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class TupleCountReport:
    dimension: int
    M: float
    tolerance_constant: float
    offset: int
    anisotropic: bool
    slice_indices: Tuple[int, ...]
    sector_counts: Tuple[int, ...]
    tuple_counts: Tuple[int, ...]
    slope: float


def count_conserving_tuples(
    dimension: int,
    slice_indices: Iterable[int],
    M: float = 2.0,
    tolerance_constant: float = 2.0,
    offset: int = 0,
    anisotropic: bool = False,
) -> TupleCountReport:
    """Count conserving sector 4-tuples across scales and fit the growth exponent.

    The tolerance at scale j is tolerance_constant * (1+|offset|) * M^-j,
    matching the resolution of the sector grid; ``offset`` widens the target
    to lattice-shifted conservation.
    """
    js = sorted(set(int(j) for j in slice_indices))
    sector_counts = []
    tuple_counts = []
    for j in js:
        grid = JelliumSectorGrid(dimension, j, M, anisotropic)
        centers = grid.centers()
        tol = tolerance_constant * (1 + abs(offset)) * M ** (-j)
        sector_counts.append(len(centers))
        tuple_counts.append(conserving_tuple_count(centers, tol))
    slope = fitted_count_slope(js, tuple_counts, M)
    return TupleCountReport(
        dimension=dimension,
        M=M,
        tolerance_constant=tolerance_constant,
        offset=offset,
        anisotropic=anisotropic,
        slice_indices=tuple(js),
        sector_counts=tuple(sector_counts),
        tuple_counts=tuple(tuple_counts),
        slope=slope,
    )


# ---------------------------------------------------------------------------
# Rhombus classification of conserving 2D tuples
# ---------------------------------------------------------------------------

_PAIRINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


def antipodal_pairing_defect(momenta: np.ndarray) -> Tuple[float, Tuple[Tuple[int, int], Tuple[int, int]]]:
    """Best split of four momenta into two nearly opposite pairs.

    Returns (defect, pairing) where the defect is the larger of the two
    pair-sum norms, minimized over the three perfect matchings.
    """
    p = np.asarray(momenta, dtype=float)
    best = None
    best_pairing = _PAIRINGS[0]
    for pairing in _PAIRINGS:
        (a, b), (c, d) = pairing
        gap = max(
            float(np.linalg.norm(p[a] + p[b])),
            float(np.linalg.norm(p[c] + p[d])),
        )
        if best is None or gap < best:
            best = gap
            best_pairing = pairing
    return float(best), best_pairing


@dataclass(frozen=True)
class RhombusReport:
    label: str  # "parallelogram-paired" | "degenerate" | "unpaired"
    pairing_defect: float
    pairing: Tuple[Tuple[int, int], Tuple[int, int]]
    cooper_pair: bool
    conservation_gap: float


def rhombus_witness(
    momenta,
    fermi_radius: float = 1.0,
    tolerance: float = 1e-6,
    pairing_tolerance: float = None,
    collinear_tolerance: float = 0.15,
) -> RhombusReport:
    """Classify a conserving on-shell 2D 4-tuple as a (near-)parallelogram.

    Exactly conserving quadruples of equal-length 2D vectors always split
    into two opposite pairs; approximate conservation preserves that split
    except near the degenerate collinear configuration.  Also flags whether
    some two legs nearly cancel (a zero-total-momentum pair).
    """
    p = np.asarray(momenta, dtype=float)
    if p.shape != (4, 2):
        raise InputError("expected four 2D momenta")
    if pairing_tolerance is None:
        pairing_tolerance = 10.0 * tolerance
    radii = np.linalg.norm(p, axis=1)
    if np.max(np.abs(radii - fermi_radius)) > tolerance * max(1.0, fermi_radius):
        raise InputError("momenta are off the Fermi circle beyond tolerance")
    gap = float(np.linalg.norm(p.sum(axis=0)))
    if gap > 4.0 * max(tolerance, pairing_tolerance):
        raise InputError("momenta do not satisfy conservation within tolerance")
    defect, pairing = antipodal_pairing_defect(p)
    cooper = False
    for a in range(4):
        for b in range(a + 1, 4):
            if np.linalg.norm(p[a] + p[b]) <= pairing_tolerance:
                cooper = True
    if defect <= pairing_tolerance:
        (a, b), (c, d) = pairing
        v1 = (p[a] - p[b]) / 2.0
        v2 = (p[c] - p[d]) / 2.0
        n1 = np.linalg.norm(v1)
        n2 = np.linalg.norm(v2)
        if n1 < 1e-12 or n2 < 1e-12:
            label = "degenerate"
        else:
            sine = abs(v1[0] * v2[1] - v1[1] * v2[0]) / (n1 * n2)
            label = "degenerate" if sine < collinear_tolerance else "parallelogram-paired"
    else:
        label = "unpaired"
    return RhombusReport(
        label=label,
        pairing_defect=defect,
        pairing=pairing,
        cooper_pair=cooper,
        conservation_gap=gap,
    )


# ---------------------------------------------------------------------------
# Curvature profile of the square-lattice band edge
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureProfile:
    k1: float
    k2: float
    slice_index: int
    M: float
    curvature_radius: float  # osculating-circle radius of the band edge
    surface_distance: float  # normal-line distance to the zero-energy curve
    band_width: float  # normal-line width of the slice band
    tangential_scale: float  # sqrt(band_width * curvature_radius)


def hubbard_curvature_profile(
    k1: float, slice_index: int, M: float = 2.0, k2: float = None
) -> CurvatureProfile:
    """Local geometry of the inner band edge cos k1 + cos k2 = M^-j.

    The curvature radius comes from the exact level-curve formula; distance
    to the Fermi surface and the band width are measured along the normal
    line; their geometric mean with the curvature radius gives the
    tangential length over which the band stays flat.
    """
    target = M ** (-float(slice_index))
    if k2 is None:
        if not 0.0 <= k1 <= math.pi / 2.0:
            raise InputError("first component must lie in [0, pi/2]")
        inner = target - math.cos(k1)
        if not -1.0 <= inner <= 1.0:
            raise InputError("no band-edge point above this first component")
        k2 = math.acos(inner)
    else:
        if abs(abs(math.cos(k1) + math.cos(k2)) - target) > 1e-9:
            raise InputError("point is off the inner band edge of the slice")
    s1, s2 = math.sin(k1), math.sin(k2)
    c1, c2 = math.cos(k1), math.cos(k2)
    grad_norm = math.hypot(s1, s2)
    if grad_norm < 1e-14:
        raise InputError("band gradient vanishes here (saddle point)")
    nx, ny = -s1 / grad_norm, -s2 / grad_norm  # unit gradient of cos+cos

    def level(t: float) -> float:
        return math.cos(k1 + t * nx) + math.cos(k2 + t * ny)

    def reach_level(func, hint: float, cap: float = 4.0) -> float:
        """Smallest t > 0 with func(t) <= 0, allowing tangential touching."""
        hi = hint
        while hi <= cap:
            if func(hi) <= 0.0:
                return brentq(func, 0.0, hi, xtol=1e-14)
            hi *= 1.6
        # The crossing window can be too narrow for the geometric scan (the
        # normal line may graze the target curve near a corner), so fall
        # back to the global minimum over the capped range.
        res = minimize_scalar(func, bounds=(0.0, cap), method="bounded",
                              options={"xatol": 1e-13})
        if res.fun < 0.0:
            return brentq(func, 0.0, float(res.x), xtol=1e-14)
        if res.fun <= 1e-9:
            return float(res.x)
        raise InputError("band boundary not reached along the normal line")

    # toward the Fermi surface: the level decreases opposite the gradient
    distance = reach_level(lambda t: level(-t), 0.5 * target / grad_norm)
    # toward the outer edge of the slice band
    outer = math.sqrt(2.0) * M * target
    width = reach_level(lambda t: outer - level(t), 0.5 * target / grad_norm)
    curvature_radius = (s1 * s1 + s2 * s2) ** 1.5 / abs(c1 * s2 * s2 + c2 * s1 * s1)
    return CurvatureProfile(
        k1=k1,
        k2=k2,
        slice_index=slice_index,
        M=M,
        curvature_radius=curvature_radius,
        surface_distance=distance,
        band_width=width,
        tangential_scale=math.sqrt(width * curvature_radius),
    )
