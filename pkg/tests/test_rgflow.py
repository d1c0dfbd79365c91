"""Coupling recursions, scale-slice constants, and factorial growth."""

import math
from fractions import Fraction

import numpy as np
import pytest

from rgkit.guards import GuardExceeded, InputError
from rgkit.rgflow import (
    SliceParams,
    cutoff_propagator,
    flow_asymptotically_free,
    flow_stable_phi4,
    logfree_reference,
    renormalon_growth,
    renormalon_integral,
    slice_bound_constant,
    slice_propagator,
    slice_sum,
)


def test_asymptotically_free_inverse_law():
    af = flow_asymptotically_free(Fraction(1, 10), 1, 10)
    assert af.final == Fraction(1, 20)
    for i, lam in enumerate(af.values):
        assert 1 / lam - 1 / af.values[0] == i
    assert all(b < a for a, b in zip(af.values, af.values[1:]))


def test_asymptotically_free_beta_scaling():
    af = flow_asymptotically_free(Fraction(1, 10), 3, 5)
    for i, lam in enumerate(af.values):
        assert 1 / lam - 10 == 3 * i


def test_log_corrected_deviation():
    lam0 = 1e-3
    g = flow_asymptotically_free(lam0, 1, 50, gamma=0.5)
    pure = flow_asymptotically_free(lam0, 1, 50)
    for i in (10, 30, 50):
        dev = g.notes["log_corrected"][i] - float(pure.values[i])
        predicted = -(lam0 ** 2) * 0.5 * math.log(i)
        assert abs(dev - predicted) < 0.1 * abs(predicted)


def test_stable_flow_blowup_index_tracks_inverse_coupling():
    for lam_ren in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)):
        traj = flow_stable_phi4(lam_ren, 1, 40)
        assert traj.blowup_index is not None
        assert abs(traj.blowup_index - 1 / lam_ren) <= 2
        vals = [v for v in traj.values if v is not None]
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_stable_flow_zero_coupling_fixed_point():
    traj = flow_stable_phi4(0, 1, 5)
    assert all(v == 0 for v in traj.values)
    assert traj.blowup_index is None


def test_stable_flow_euler_variant():
    traj = flow_stable_phi4(Fraction(1, 10), 1, 40, recursion="euler")
    assert traj.blowup_index is not None


def test_negative_coupling_rejected():
    with pytest.raises(InputError):
        flow_stable_phi4(Fraction(-1, 10), 1, 5)


def test_slice_telescoping():
    params = SliceParams(M=2.0, m2=1.0, d=3, rho=6)
    for r in (0.0, 0.3, 1.7):
        total = slice_sum(r, params)
        direct = cutoff_propagator(r, params.M ** (-2 * params.rho), params)
        assert abs(total - direct) / direct < 1e-8


def test_slice_propagators_positive_and_shrinking():
    params = SliceParams(M=2.0, m2=1.0, d=3, rho=6)
    vals = [slice_propagator(i, 0.5, params) for i in range(1, 7)]
    assert all(v > 0 for v in vals)
    assert vals[-1] < vals[0]


def test_slice_bound_constant_spread():
    for d in (3, 4):
        params = SliceParams(M=2.0, m2=1.0, d=d)
        ks = [slice_bound_constant(i, params) for i in range(1, 9)]
        assert max(ks) / min(ks) < 4.0


def test_cutoff_decay_rate():
    params = SliceParams(M=2.0, m2=1.0, d=3)
    rs = np.linspace(4.0, 8.0, 9)
    logs = [math.log(cutoff_propagator(r, 0.01, params)) for r in rs]
    slope = np.polyfit(rs, logs, 1)[0]
    assert slope <= -math.sqrt(params.m2) * 0.999


def test_cutoff_kappa_scaling():
    params = SliceParams(M=2.0, m2=1.0, d=4)
    vals = [
        cutoff_propagator(0.0, k, params) * k ** (params.d / 2 - 1)
        for k in (1e-1, 1e-2, 1e-3, 1e-4)
    ]
    assert max(vals) / min(vals) < 1.5


def test_renormalon_growth_plateau():
    rows = renormalon_growth(15)
    assert rows[0][2] is None
    ratios = [r for n, _v, r in rows if n >= 10]
    drift = max(
        abs(ratios[k + 1] - ratios[k]) / ratios[k + 1]
        for k in range(len(ratios) - 1)
    )
    assert drift < 0.10


def test_renormalon_order_guard():
    with pytest.raises(GuardExceeded):
        renormalon_integral(21)
    with pytest.raises(InputError):
        renormalon_integral(-1)


def test_logfree_reference_closed_form():
    # radial integral at unit mass is exactly 1/4, so the constant is pi^2/2
    assert abs(logfree_reference() - math.pi ** 2 / 2) < 1e-9
