"""Smooth scale partitions and sector-restricted propagator evaluation."""

import math

import numpy as np
import pytest

from rgkit.guards import InputError
from rgkit.hubbard import (
    GevreyPartition,
    SectorPropagator,
    default_probes,
    gevrey_partition,
    sector_amplitude,
    stretched_decay_fit,
)
from rgkit.sectors import HubbardSector, MatsubaraGrid


@pytest.fixture(scope="module")
def part():
    return gevrey_partition(0.5, 2.0)


def test_bump_plateau_and_support(part):
    assert np.all(part.bump(np.linspace(0, 1, 100)) == 1.0)
    assert np.all(part.bump(np.linspace(2, 50, 100)) == 0.0)
    mid = part.bump(np.linspace(1.0001, 1.9999, 500))
    assert np.all((mid >= 0) & (mid <= 1))
    assert np.all(np.diff(mid) <= 1e-15)
    assert abs(part.steepness - 2.0) < 1e-15


def test_closed_slice_family_sums_to_one():
    for top, M in ((6, 2.0), (4, 3.0)):
        p = gevrey_partition(0.5, M)
        rr = np.geomspace(M ** (-2 * top), 10.0, 1000)
        total = sum(p.slice_weight(i, rr, top=top) for i in range(top + 1))
        assert np.max(np.abs(total - 1.0)) < 1e-10


def test_open_family_plus_tail_is_one(part):
    rr = np.geomspace(1e-8, 10.0, 800)
    total = sum(part.slice_weight(i, rr) for i in range(7))
    tail = part.bump(2.0 ** (2 * 6) * rr)
    assert np.max(np.abs(total + tail - 1.0)) < 1e-12


def test_slice_support_bound(part):
    for i in (1, 3, 5):
        bound = part.slice_support_bound(i)
        rr = np.linspace(bound * 1.0000001, bound * 3, 200)
        assert np.all(part.slice_weight(i, rr) == 0.0)


def test_window_family_telescopes(part):
    for i in (0, 1, 3, 5):
        rr = np.geomspace(1e-8, 2.0, 700)
        total = sum(part.window_weight(s, i, rr) for s in range(i + 1))
        assert np.max(np.abs(total - 1.0)) < 1e-12


def test_order_parameter_validation():
    for bad in (0.0, 1.0, -0.3, 1.4):
        with pytest.raises(InputError):
            gevrey_partition(bad)


def test_frequency_truncation_is_exact(part):
    beta, M, i = 50.0, 2.0, 2
    grid = MatsubaraGrid.for_slice(i, beta, M)
    next_freq = (2 * grid.half_count + 1) * math.pi / beta
    assert float(part.slice_weight(i, next_freq ** 2)) == 0.0


def _brute_value(sector, beta, M, order, x0, n1, n2, n_grid):
    p = GevreyPartition(order, M)
    grid = MatsubaraGrid.for_slice(sector.slice_index, beta, M)
    k = np.linspace(-2.0, 2.0, n_grid)
    c = np.cos(np.pi * k / 2)
    vp = p.window_weight(sector.window_plus, sector.slice_index, c ** 2)
    vm = p.window_weight(sector.window_minus, sector.slice_index, c ** 2)
    xp = (np.pi / 2) * (n1 + n2)
    xm = (np.pi / 2) * (n2 - n1)
    row = vp * np.exp(1j * k * xp)
    col = vm * np.exp(1j * k * xm)
    energy = 2.0 * np.outer(c, c)
    total = 0.0 + 0.0j
    for k0 in grid.frequencies:
        ui = p.slice_weight(sector.slice_index, k0 ** 2 + energy ** 2)
        f = ui / (1j * k0 - energy) * np.outer(row, col) * np.exp(1j * k0 * x0)
        total += np.trapezoid(np.trapezoid(f, k, axis=1), k)
    return total / (16.0 * beta)


@pytest.mark.slow
def test_quadrature_matches_brute_force():
    sector = HubbardSector(2, 1, 1)
    prop = SectorPropagator(sector, beta=50.0, M=2.0, order=0.5, nodes=80)
    for probe in ((0.0, 1, 0), (0.3, 1, 1), (0.0, 2, -1)):
        mine = prop.value_lattice(*probe)
        brute = _brute_value(sector, 50.0, 2.0, 0.5, *probe, n_grid=2001)
        assert abs(mine - brute) / max(abs(mine), 1e-300) < 2e-3


def test_node_convergence():
    sector = HubbardSector(2, 1, 1)
    p80 = SectorPropagator(sector, beta=50.0, nodes=80)
    p160 = SectorPropagator(sector, beta=50.0, nodes=160)
    probes = default_probes(2, 2.0)
    va = np.array([p80.value_lattice(*p) for p in probes])
    vb = np.array([p160.value_lattice(*p) for p in probes])
    assert np.max(np.abs(va - vb)) / np.max(np.abs(vb)) < 1e-5


def test_lattice_domain_rules():
    prop = SectorPropagator(HubbardSector(2, 1, 1), beta=50.0, M=2.0)
    with pytest.raises(InputError):
        prop.value_tilted(0.0, 0.3, 0.0)  # off the lattice
    with pytest.raises(InputError):
        prop.value_tilted(0.0, math.pi / 2, 0.0)  # mismatched parity
    v = prop.value_tilted(0.0, math.pi / 2, -math.pi / 2)
    assert v == prop.value_lattice(0.0, 1, 0)


def test_parity_nulls_and_evenness():
    prop = SectorPropagator(HubbardSector(2, 1, 1), beta=50.0, M=2.0)
    ref = sector_amplitude(prop)
    assert abs(prop.value_lattice(0.0, 0, 0)) < 1e-12 * ref
    a = prop.value_lattice(0.0, 1, 0)
    b = prop.value_lattice(0.0, 0, -1)
    assert abs(a - b) < 1e-14 * abs(a)


def test_empty_slice_rejected():
    with pytest.raises(InputError):
        SectorPropagator(HubbardSector(12, 12, 12), beta=50.0)


def test_decay_fit_slope_and_rejections():
    fit = stretched_decay_fit(
        HubbardSector(4, 2, 2), beta=1000.0, M=2.0, order=0.5,
        steps=20, direction=(1, 0),
    )
    assert len(fit.distances) == 20
    assert fit.slope <= -0.5
    with pytest.raises(InputError):
        stretched_decay_fit(HubbardSector(4, 2, 2), beta=1000.0, direction=(1, 1))
