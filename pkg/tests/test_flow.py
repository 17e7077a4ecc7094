"""Loewner solvers and the stochastic flow integrators."""

import math

import numpy as np
import pytest

from slitflow.classify import enumerate_families
from slitflow.errors import DomainError, ParameterRangeError
from slitflow.flow import (
    DrivingPath,
    chordal_loewner,
    coth_half,
    coth_half_grid,
    dipolar_loewner,
    integrate_slit_flow,
    inverse_map,
    sample_driving,
    simulate_ensemble,
    zero_driving,
)


def _chordal_model(kappa=4.0, alpha=0.0):
    fams = {f.name: f for f in enumerate_families(kappa)}
    return fams["chordal-drift"].instantiate(alpha=alpha)


def test_zero_driving_chordal_matches_closed_form():
    # forward map: g_t(z) = sqrt(z^2 + 4t), so g_0.2(i) = i sqrt(0.2)
    drv = zero_driving(4.0, 0.0, 0.2, 1e-3)
    path = chordal_loewner(drv, 1j)
    w_T = path.w[path.last_alive_index()]
    assert abs(w_T - 1j * math.sqrt(1.0 - 4.0 * 0.2)) < 1e-8


def test_zero_driving_inverse_map_closed_form():
    # inverse map: g_t^{-1}(iy) = i sqrt(y^2 + 4t)
    drv = zero_driving(4.0, 0.0, 1.0, 1e-3)
    z = inverse_map(drv, 1j, 1.0)
    assert abs(z - 1j * math.sqrt(1.0 + 4.0)) < 1e-8


def test_inverse_map_round_trips_forward_map():
    drv = sample_driving(4.0, 0.0, 0.2, 1e-3, seed=9)
    path = chordal_loewner(drv, 0.4 + 1.3j)
    g_T = path.w[path.last_alive_index()] + drv.values[-1]
    back = inverse_map(drv, g_T, drv.horizon)
    assert abs(back - (0.4 + 1.3j)) < 1e-6


def test_capacity_normalization_far_point():
    drv = zero_driving(4.0, 0.0, 1.0, 1e-3)
    path = chordal_loewner(drv, 100j)
    w_T = path.w[path.last_alive_index()]
    assert abs((w_T - 100j) * 100j - 2.0) < 1e-3


def test_chordal_loewner_with_noise_keeps_half_plane():
    drv = sample_driving(6.0, 0.0, 0.5, 1e-3, seed=11)
    path = chordal_loewner(drv, 0.5 + 1.2j)
    live = path.w[: path.last_alive_index() + 1]
    assert np.all(live.imag > 0)


def test_driving_path_shape_and_interp():
    drv = sample_driving(4.0, 0.5, 0.2, 1e-2, seed=3)
    assert drv.horizon == pytest.approx(0.2)
    assert drv.values[0] == 0.0
    assert drv.xi_at(0.015) == pytest.approx(
        0.5 * (drv.values[1] + drv.values[2])
    )
    with pytest.raises(ParameterRangeError):
        sample_driving(4.0, 0.0, 1.0, 2.0, seed=0)


def test_coth_half_scalar_and_grid_agree():
    zs = np.array([0.3 + 0.4j, -1.2 + 2.0j, 5.0 + 0.1j, 50.0 + 1.0j])
    grid = coth_half_grid(zs)
    for z, g in zip(zs, grid):
        assert g == pytest.approx(coth_half(complex(z)), rel=1e-12)


def test_coth_half_grid_stable_at_tiny_arguments():
    # the naive cosh - cos denominator rounds to zero below |z| ~ 1e-8
    z = 4e-9 + 6e-12j
    got = coth_half_grid(np.array([z]))[0]
    assert np.isfinite(got.real) and np.isfinite(got.imag)
    assert got == pytest.approx(2.0 / z, rel=1e-6)


def test_dipolar_loewner_zero_driving_closed_form():
    # on the imaginary axis dZ/dt = coth(iy/2) = -i cot(y/2), which
    # integrates to cos(y_t / 2) = cos(y_0 / 2) exp(t / 2)
    T = 0.2
    drv = zero_driving(6.0, 0.0, T, 1e-3)
    path = dipolar_loewner(drv, 0.0 + 1.0j)
    w_T = path.w[path.last_alive_index()]
    y_exact = 2.0 * math.acos(math.cos(0.5) * math.exp(T / 2.0))
    assert abs(w_T.real) < 1e-9
    assert w_T.imag == pytest.approx(y_exact, abs=1e-6)


def test_integrate_slit_flow_rejects_lower_half_plane():
    model = _chordal_model()
    drv = zero_driving(4.0, 0.0, 0.1, 1e-3)
    with pytest.raises(DomainError):
        integrate_slit_flow(model, 1.0 - 1.0j, drv)


def test_integrate_slit_flow_matches_loewner_at_zero_noise():
    # w_t(z) = sqrt(z^2 + 4t) and w'_t(z) = z / sqrt(z^2 + 4t)
    model = _chordal_model(4.0, 0.0)
    T = 0.2
    drv = zero_driving(4.0, 0.0, T, 1e-4)
    path = integrate_slit_flow(model, 1j, drv)
    w_T = path.w[path.last_alive_index()]
    assert abs(w_T - 1j * math.sqrt(1.0 - 4.0 * T)) < 2e-3
    lp_T = path.log_wp[path.last_alive_index()]
    assert lp_T == pytest.approx(-0.5 * math.log(1.0 - 4.0 * T), abs=5e-3)


def test_ensemble_reproducible_and_stays_in_half_plane():
    model = _chordal_model(4.0, 0.0)
    pts = np.array([0.5 + 1.0j, -0.4 + 1.5j])
    a = simulate_ensemble(model, pts, 32, 0.1, 1e-3, 42)
    b = simulate_ensemble(model, pts, 32, 0.1, 1e-3, 42)
    assert np.array_equal(a.w, b.w)
    assert np.array_equal(a.log_wp, b.log_wp)
    assert np.all(a.w.imag > 0)


def test_ensemble_seed_changes_output():
    model = _chordal_model(4.0, 0.0)
    pts = np.array([0.5 + 1.0j])
    a = simulate_ensemble(model, pts, 8, 0.1, 1e-3, 1)
    b = simulate_ensemble(model, pts, 8, 0.1, 1e-3, 2)
    assert not np.array_equal(a.w, b.w)


def test_ensemble_freezes_near_singularity():
    model = _chordal_model(6.0, 0.0)
    # a point hugging the origin gets frozen, not propagated to Im <= 0
    pts = np.array([0.02 + 0.05j])
    res = simulate_ensemble(model, pts, 64, 0.05, 1e-3, 7)
    assert np.any(~res.alive)
    assert np.all(res.w.imag > 0)


def test_ensemble_callback_order_and_times():
    model = _chordal_model(4.0, 0.0)
    seen = []

    def cb(i, t, w, log_wp, alive):
        seen.append((i, t))

    simulate_ensemble(model, np.array([1j]), 4, 0.01, 1e-3, 5, cb)
    assert seen[0] == (0, 0.0)
    assert len(seen) == 11
    assert seen[-1][1] == pytest.approx(0.01)


def test_ensemble_matches_scalar_integrator_statistics():
    # same SDE integrated two ways should give matching one-step moments
    model = _chordal_model(4.0, 0.0)
    T, dt = 0.05, 1e-3
    res = simulate_ensemble(model, np.array([1j]), 4000, T, dt, 21)
    drv_mean = np.mean(res.w[:, 0])
    # zero-noise trajectory as the drift proxy
    drv = zero_driving(4.0, 0.0, T, dt)
    det = integrate_slit_flow(model, 1j, drv)
    det_T = det.w[det.last_alive_index()]
    assert abs(drv_mean - det_T) < 0.05
