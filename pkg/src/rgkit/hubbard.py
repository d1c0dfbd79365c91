"""Smooth scale slicing and position-space sector propagators for the
half-filled square-lattice band.

Two ingredients live here:

* :class:`GevreyPartition` — a compactly supported, infinitely smooth
  partition of unity built from bumps whose bridge function is
  ``exp(-t**-p)``.  The steepness ``p = 1/(1 - order)`` keeps all
  derivatives bounded while the Fourier transform still decays like a
  stretched exponential ``exp(-c |x| ** order)``.
* :class:`SectorPropagator` — the position-space covariance of a single
  (scale slice, sector) pair of the nearest-neighbour hopping band at half
  filling, evaluated by exact summation over the finitely many thermal
  frequencies the slice supports and Gauss-Legendre quadrature over the
  exact momentum support of the sector windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .guards import GuardExceeded, InputError
from .sectors import HubbardSector, MatsubaraGrid, all_sectors, sector_cos_window

__all__ = [
    "GevreyPartition",
    "gevrey_partition",
    "SectorPropagator",
    "sector_amplitude",
    "default_probes",
    "AmplitudeBandReport",
    "amplitude_band",
    "DecayFit",
    "stretched_decay_fit",
    "DEFAULT_SPATIAL_PROBES",
    "DEFAULT_TIME_FRACTIONS",
]


# ---------------------------------------------------------------------------
# Smooth compactly supported partitions of unity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GevreyPartition:
    """Dyadic partition of unity with compactly supported smooth bumps.

    The base bump equals 1 for ``|r| <= 1``, 0 for ``|r| >= 2`` and bridges
    monotonically in between.  Rescaled differences of the bump give two
    families that both sum to 1 identically:

    * slice weights in the squared-energy variable (``slice_weight``), one
      per scale; passing ``top`` closes the family by letting the last
      slice absorb the remaining small-argument tail, and
    * window weights in the squared-cosine variable (``window_weight``),
      one per sector window of a fixed slice.
    """

    order: float
    M: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 < self.order < 1.0:
            raise InputError("smoothness order must lie strictly between 0 and 1")
        if self.M <= 1.0:
            raise InputError("scale ratio must exceed 1")

    @property
    def steepness(self) -> float:
        """Exponent p of the bridge exp(-t**-p); diverges as order -> 1."""
        return 1.0 / (1.0 - self.order)

    def bump(self, r) -> np.ndarray:
        """Smooth cutoff: 1 on [0, 1], 0 on [2, inf), monotone in between."""
        arr = np.abs(np.asarray(r, dtype=float))
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.zeros(arr.shape)
        out[arr <= 1.0] = 1.0
        mid = (arr > 1.0) & (arr < 2.0)
        if np.any(mid):
            t = arr[mid] - 1.0
            p = self.steepness
            # exp(-t**-p) underflows harmlessly to 0 at the edges.
            with np.errstate(divide="ignore", over="ignore", under="ignore"):
                ht = np.exp(-(t ** -p))
                h1 = np.exp(-((1.0 - t) ** -p))
            out[mid] = h1 / (ht + h1)
        return out[0] if scalar else out

    def slice_weight(self, index: int, r, top: Optional[int] = None) -> np.ndarray:
        """Weight of scale slice ``index`` at squared energy ``r``.

        Slice 0 covers arguments of order one and larger; slice i covers a
        dyadic shell around M**(-2i).  With ``top`` set, the slice at the
        top index keeps its full small-argument tail so that the weights
        for indices 0..top sum to 1 exactly for every r.
        """
        if index < 0:
            raise InputError("slice index must be nonnegative")
        if top is not None and not 0 <= index <= top:
            raise InputError("slice index must not exceed the closing index")
        if index == 0:
            if top == 0:
                return np.ones_like(np.asarray(r, dtype=float))
            return 1.0 - self.bump(r)
        inner = self.bump(self.M ** (2 * (index - 1)) * np.asarray(r, dtype=float))
        if top is not None and index == top:
            return inner
        return inner - self.bump(self.M ** (2 * index) * np.asarray(r, dtype=float))

    def window_weight(self, window_index: int, slice_index: int, r) -> np.ndarray:
        """Weight of sector window ``window_index`` of slice ``slice_index``.

        The argument is the squared cosine that measures the distance to
        one face of the square Fermi surface.  For every slice the window
        weights 0..slice_index sum to 1 identically.
        """
        s, i = window_index, slice_index
        if not 0 <= s <= i:
            raise InputError("window index must lie between 0 and the slice index")
        arr = np.asarray(r, dtype=float)
        if i == 0:
            return np.ones_like(arr)
        if s == 0:
            return 1.0 - self.bump(self.M ** 2 * arr)
        if s == i:
            return self.bump(self.M ** (2 * i) * arr)
        return self.bump(self.M ** (2 * s) * arr) - self.bump(
            self.M ** (2 * (s + 1)) * arr
        )

    def slice_support_bound(self, index: int) -> float:
        """Smallest b with slice_weight(index, r) = 0 for all r > b."""
        if index < 0:
            raise InputError("slice index must be nonnegative")
        if index == 0:
            return math.inf
        return 2.0 * self.M ** (-2 * (index - 1))


def gevrey_partition(alpha: float, M: float = 2.0) -> GevreyPartition:
    """Partition of unity whose bumps have stretched-exponential dual decay.

    ``alpha`` in (0, 1) is the decay exponent targeted for the position
    side; values outside the open interval are rejected.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError("decay exponent alpha must lie strictly between 0 and 1")
    return GevreyPartition(order=alpha, M=M)


# ---------------------------------------------------------------------------
# Sector propagator on the position lattice
# ---------------------------------------------------------------------------

HALF_PI = math.pi / 2.0
_LATTICE_TOL = 1e-9


def _direction_nodes(
    window_index: int, slice_index: int, M: float, nodes: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights covering one tilted momentum direction.

    The window constrains |cos(pi*k/2)| to [a, b]; on k in [-2, 2] that is
    a union of at most four intervals (two once the window reaches the
    face at |k| = 1).  Each interval gets its own Gauss-Legendre rule.
    """
    a, b = sector_cos_window(window_index, slice_index, M)
    t_in = (2.0 / math.pi) * math.acos(min(b, 1.0))
    t_out = (2.0 / math.pi) * math.acos(max(a, 0.0))
    intervals: List[Tuple[float, float]] = []
    if window_index == slice_index:
        # Window includes cos = 0: the two arcs join across |k| = 1.
        intervals.append((t_in, 2.0 - t_in))
        intervals.append((-(2.0 - t_in), -t_in))
    else:
        intervals.append((t_in, t_out))
        intervals.append((2.0 - t_out, 2.0 - t_in))
        intervals.append((-t_out, -t_in))
        intervals.append((-(2.0 - t_in), -(2.0 - t_out)))
    base_x, base_w = np.polynomial.legendre.leggauss(nodes)
    ks: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    for lo, hi in intervals:
        if hi - lo <= 0.0:
            continue
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        ks.append(mid + half * base_x)
        ws.append(half * base_w)
    return np.concatenate(ks), np.concatenate(ws)


class SectorPropagator:
    """Position-space covariance of one (slice, sector) of the band.

    The momentum integrand is supported on finitely many thermal
    frequencies (the slice cutoff kills every |k0| > sqrt(2)*M**(1-i), so
    the frequency sum is exact, not truncated) and on the compact momentum
    windows of the sector, which are integrated with Gauss-Legendre rules
    on their exact support intervals.

    Positions live on the lattice spanned by the two tilted basis vectors
    of length pi/2; equivalently, both tilted coordinates are integer
    multiples of pi/2 with integers of equal parity.  Other positions are
    rejected as domain errors.
    """

    def __init__(
        self,
        sector: HubbardSector,
        beta: float,
        M: float = 2.0,
        order: float = 0.5,
        nodes: int = 80,
        last_slice: bool = False,
    ) -> None:
        if beta <= 0:
            raise InputError("inverse temperature must be positive")
        if nodes < 4:
            raise InputError("need at least 4 quadrature nodes per interval")
        self.sector = sector
        self.beta = float(beta)
        self.M = float(M)
        self.partition = GevreyPartition(order=order, M=M)
        self.grid = MatsubaraGrid.for_slice(sector.slice_index, beta, M)
        if self.grid.is_empty:
            raise InputError(
                "slice has no thermal frequencies at this temperature; "
                "it lies beyond the last slice"
            )
        i = sector.slice_index
        kp, wp = _direction_nodes(sector.window_plus, i, self.M, nodes)
        km, wm = _direction_nodes(sector.window_minus, i, self.M, nodes)
        cp = np.cos(HALF_PI * kp)
        cm = np.cos(HALF_PI * km)
        vp = self.partition.window_weight(sector.window_plus, i, cp ** 2)
        vm = self.partition.window_weight(sector.window_minus, i, cm ** 2)
        energy = 2.0 * cp[:, None] * cm[None, :]
        freqs = self.grid.frequencies
        top = i if last_slice else None
        shell = self.partition.slice_weight(
            i, freqs[:, None, None] ** 2 + energy[None, :, :] ** 2, top=top
        )
        # |i*k0 - E| >= |k0| >= pi/beta > 0: the denominator never vanishes.
        denom = 1j * freqs[:, None, None] - energy[None, :, :]
        self._tensor = (
            shell / denom * (vp * wp)[None, :, None] * (vm * wm)[None, None, :]
        )
        self._k_plus = kp
        self._k_minus = km

    @property
    def prefactor(self) -> float:
        """Overall normalisation: spin half times the Brillouin measure 1/(8*beta)."""
        return 1.0 / (16.0 * self.beta)

    @property
    def scale_factor(self) -> float:
        """Expected amplitude scale M**-(slice_index + depth) of this sector."""
        return self.M ** (-(self.sector.slice_index + self.sector.depth))

    def value_tilted(self, x0: float, x_plus: float, x_minus: float) -> complex:
        """Propagator at time x0 and tilted positions (x_plus, x_minus).

        Both tilted coordinates must be integer multiples of pi/2 and the
        two integers must share their parity; anything else is off the
        position lattice and raises an input error.
        """
        a = x_plus / HALF_PI
        b = x_minus / HALF_PI
        ra, rb = round(a), round(b)
        if abs(a - ra) > _LATTICE_TOL or abs(b - rb) > _LATTICE_TOL:
            raise InputError(
                "tilted positions must be integer multiples of pi/2"
            )
        if (ra - rb) % 2 != 0:
            raise InputError(
                "position violates the lattice parity condition: the two "
                "tilted coordinates must be integers of equal parity"
            )
        phase0 = np.exp(1j * self.grid.frequencies * x0)
        phase_p = np.exp(1j * self._k_plus * x_plus)
        phase_m = np.exp(1j * self._k_minus * x_minus)
        total = np.einsum(
            "f,fab,a,b->", phase0, self._tensor, phase_p, phase_m, optimize=True
        )
        return complex(self.prefactor * total)

    def value_lattice(self, x0: float, n1: int, n2: int) -> complex:
        """Propagator at time x0 and lattice site n1*e1 + n2*e2.

        The tilted coordinates of an integer site are (pi/2)*(n1+n2) and
        (pi/2)*(n2-n1); their integers always share parity, so every
        integer site is admissible.
        """
        x_plus = HALF_PI * (n1 + n2)
        x_minus = HALF_PI * (n2 - n1)
        return self.value_tilted(x0, x_plus, x_minus)

    def scaled_distance(self, x0: float, x_plus: float, x_minus: float) -> float:
        """Distance weighted by the decay rates of this sector.

        Time decays at the slice rate M**-i; each tilted direction decays
        at its own window rate M**-s.
        """
        i = self.sector.slice_index
        return (
            self.M ** (-i) * abs(x0)
            + self.M ** (-self.sector.window_plus) * abs(x_plus)
            + self.M ** (-self.sector.window_minus) * abs(x_minus)
        )


# ---------------------------------------------------------------------------
# Amplitude scaling across the sectors of a slice
# ---------------------------------------------------------------------------

#: Spatial lattice probes used to measure a sector's amplitude near the
#: origin.  Both parities of n1+n2 matter: at time zero the propagator
#: vanishes identically on even sites (shifting both tilted momenta by 2
#: flips the band energy and the thermal sum cancels in +-k0 pairs), while
#: at odd sites the contributions of the two opposite Fermi faces
#: interfere destructively for narrow-window sectors.
DEFAULT_SPATIAL_PROBES: Tuple[Tuple[int, int], ...] = (
    (0, 0),
    (1, 0),
    (0, 1),
    (1, 1),
    (1, -1),
    (2, 0),
    (2, 1),
    (1, 2),
    (2, 2),
    (3, 0),
)

#: Time offsets used for amplitude probes, in units of the slice time scale
#: M**slice_index (the inverse width of the slice's frequency window).
DEFAULT_TIME_FRACTIONS: Tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 2.0)


def default_probes(
    slice_index: int, M: float = 2.0
) -> Tuple[Tuple[float, int, int], ...]:
    """Lattice probes (x0, n1, n2) adapted to one slice's natural scales."""
    time_scale = M ** slice_index
    return tuple(
        (frac * time_scale, n1, n2)
        for frac in DEFAULT_TIME_FRACTIONS
        for (n1, n2) in DEFAULT_SPATIAL_PROBES
    )


def sector_amplitude(
    propagator: SectorPropagator,
    probes: Optional[Iterable[Tuple[float, int, int]]] = None,
) -> float:
    """Largest |propagator| over a set of (x0, n1, n2) lattice probes.

    The default probe set spans the slice's own time scale and a handful
    of nearby odd lattice sites; it measures the size of the propagator
    near the origin without landing on its exact parity zeros.
    """
    if probes is None:
        probes = default_probes(propagator.sector.slice_index, propagator.M)
    return max(abs(propagator.value_lattice(*probe)) for probe in probes)


@dataclass(frozen=True)
class AmplitudeBandReport:
    """How tightly sector amplitudes track the scale M**-(slice+depth).

    ``band`` is max/min of amplitude / M**-(slice+depth) over every sector;
    ``positive_depth_band`` restricts to sectors of depth >= 1.  Depth-0
    (border) sectors overlap the slice shell only inside the flat tails of
    the window bumps, so their amplitudes sit many orders of magnitude
    below the common scale and the all-sector band is necessarily huge.
    """

    slice_index: int
    beta: float
    M: float
    ratios: Dict[HubbardSector, float]
    band: float
    positive_depth_band: float


def amplitude_band(
    slice_index: int,
    beta: float,
    M: float = 2.0,
    order: float = 0.5,
    nodes: int = 80,
    probes: Optional[Iterable[Tuple[float, int, int]]] = None,
) -> AmplitudeBandReport:
    """Measure amplitude / M**-(slice+depth) for every sector of a slice.

    A small band (max/min ratio) certifies that the single scale factor
    M**-(slice_index + depth) captures the size of every sector propagator
    of positive depth; border sectors are reported as well but live far
    below that scale.
    """
    if probes is not None:
        probes = tuple(probes)
    ratios: Dict[HubbardSector, float] = {}
    for sector in all_sectors(slice_index):
        prop = SectorPropagator(sector, beta=beta, M=M, order=order, nodes=nodes)
        ratios[sector] = sector_amplitude(prop, probes) / prop.scale_factor
    values = list(ratios.values())
    band = max(values) / max(min(values), 1e-300)
    positive = [r for s, r in ratios.items() if s.depth >= 1]
    positive_band = max(positive) / max(min(positive), 1e-300)
    return AmplitudeBandReport(
        slice_index=slice_index,
        beta=beta,
        M=M,
        ratios=ratios,
        band=band,
        positive_depth_band=positive_band,
    )


# ---------------------------------------------------------------------------
# Stretched-exponential spatial decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log |C| against (scaled distance) ** exponent."""

    exponent: float
    slope: float
    intercept: float
    distances: np.ndarray = field(repr=False)
    log_values: np.ndarray = field(repr=False)


def stretched_decay_fit(
    sector: HubbardSector,
    beta: float,
    M: float = 2.0,
    order: float = 0.5,
    exponent: Optional[float] = None,
    steps: int = 20,
    direction: Tuple[int, int] = (1, 0),
    nodes: int = 80,
    noise_floor: float = 1e-12,
) -> DecayFit:
    """Fit log |C| ~ slope * d**exponent along a lattice ray.

    Walks odd multiples 1, 3, ..., 2*steps-1 of ``direction`` on the
    position lattice (odd multiples of an odd site dodge the exact parity
    zeros of the time-zero propagator), records the scaled distance d and
    log |C| at each, and fits a line in the stretched variable
    d**exponent (default: the partition's own smoothness order).  A
    clearly negative slope confirms the stretched-exponential decay the
    smooth cutoffs are designed to give.  Values below ``noise_floor``
    times the ray maximum are treated as quadrature noise and dropped.
    """
    if steps < 3:
        raise InputError("need at least 3 points for a decay fit")
    if direction == (0, 0):
        raise InputError("direction must be a nonzero lattice vector")
    exp_used = order if exponent is None else float(exponent)
    if exp_used <= 0:
        raise InputError("stretching exponent must be positive")
    prop = SectorPropagator(sector, beta=beta, M=M, order=order, nodes=nodes)
    dists: List[float] = []
    values: List[float] = []
    for step in range(steps):
        t = 2 * step + 1
        n1, n2 = t * direction[0], t * direction[1]
        value = abs(prop.value_lattice(0.0, n1, n2))
        x_plus = HALF_PI * (n1 + n2)
        x_minus = HALF_PI * (n2 - n1)
        dists.append(prop.scaled_distance(0.0, x_plus, x_minus))
        values.append(value)
    peak = max(values)
    if peak <= noise_floor * prop.scale_factor:
        raise InputError(
            "propagator vanishes along this ray (lattice parity zeros); "
            "choose a direction whose odd multiples are odd sites"
        )
    kept = [(d, v) for d, v in zip(dists, values) if v > noise_floor * peak]
    if len(kept) < 3:
        raise InputError("too few nonzero propagator values along this ray")
    xs = np.asarray([d for d, _ in kept]) ** exp_used
    ys = np.asarray([math.log(v) for _, v in kept])
    slope, intercept = np.polyfit(xs, ys, 1)
    return DecayFit(
        exponent=exp_used,
        slope=float(slope),
        intercept=float(intercept),
        distances=np.asarray([d for d, _ in kept]),
        log_values=ys,
    )
