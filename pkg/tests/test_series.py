"""Tests for the truncated Wigner-current series."""
import math

import numpy as np
import pytest

from app.core.grid import divergence, make_grid
from app.core.hamiltonians import harmonic_model, harper_model, lotka_volterra_model
from app.core.series import (
    SeparableTerm,
    TruncationPolicy,
    WignerFunctionSpec,
    classical_current_field,
    current_field,
    current_x,
    current_k,
    dW_dt,
    dW_dt_field,
    div_w,
    separable_spec,
    series_coefficient,
    truncated_sum,
)
from app.ensembles.gaussian import GaussianEnsemble, currents_erf, gaussian_wigner_spec
from app.ensembles.thermal import TdEnsemble, td_div_w, thermal_wigner_spec
from app.errors import SeriesError, VelocityUndefinedError


def test_series_coefficients():
    assert series_coefficient(0) == 1.0
    assert series_coefficient(1) == pytest.approx(-1.0 / 24.0)
    assert series_coefficient(2) == pytest.approx(1.0 / 1920.0)


@pytest.mark.parametrize("eta_max, tol", [(-1, 1e-12), (32, 1e-12), (5, -1.0)])
def test_truncation_policy_validation(eta_max, tol):
    with pytest.raises(SeriesError):
        TruncationPolicy(eta_max=eta_max, tol=tol)


def test_truncation_policy_from_settings():
    policy = TruncationPolicy.from_settings()
    assert policy.eta_max == 25
    assert policy.tol == 1e-12


def test_truncated_sum_stops_after_two_quiet_terms():
    calls = []

    def term(eta):
        calls.append(eta)
        return np.array([1.0 if eta == 0 else 0.0])

    total = truncated_sum(term, 0, TruncationPolicy(eta_max=10))
    assert calls == [0, 1, 2]
    assert total[0] == 1.0


def test_spec_needs_enough_derivatives():
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, harper_model(1.0)))
    shallow = WignerFunctionSpec(
        name="shallow", w=spec.w, dx_n=spec.dx_n, dk_n=spec.dk_n, max_order=3, peak=spec.peak,
    )
    with pytest.raises(SeriesError, match="truncation needs 4"):
        current_x(harper_model(1.0), shallow, TruncationPolicy(eta_max=2), 0.0, 0.0)
    with pytest.raises(SeriesError):
        dW_dt(harper_model(1.0), shallow, TruncationPolicy(eta_max=2), 0.0, 0.0)


def test_spec_without_dx_upto_stacks_single_orders():
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, harper_model(1.0)))
    plain = WignerFunctionSpec(
        name="plain", w=spec.w, dx_n=spec.dx_n, dk_n=spec.dk_n, max_order=spec.max_order, peak=spec.peak,
    )
    x = np.linspace(-1.0, 1.0, 5)[:, None]
    k = np.linspace(-1.0, 1.0, 4)[None, :]
    np.testing.assert_allclose(plain.x_derivatives(6, x, k), spec.x_derivatives(6, x, k), atol=1e-14)


def test_separable_spec_needs_a_peak():
    factor = lambda n, z: np.ones((n + 1,) + np.shape(z))
    with pytest.raises(SeriesError, match="peak"):
        separable_spec("flat", [SeparableTerm(1.0, factor, factor)], max_order=4)


def test_harmonic_current_is_classical():
    model = harmonic_model()
    spec = gaussian_wigner_spec(GaussianEnsemble(0.8, model))
    x = np.linspace(-2.0, 2.0, 9)[:, None]
    k = np.linspace(-2.0, 2.0, 7)[None, :]
    policy = TruncationPolicy()
    w = spec.w(x, k)
    np.testing.assert_allclose(current_x(model, spec, policy, x, k), k * w, atol=1e-15)
    np.testing.assert_allclose(current_k(model, spec, policy, x, k), -x * w, atol=1e-15)


def test_harmonic_velocity_divergence_vanishes():
    model = harmonic_model()
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, model))
    x = np.linspace(-3.0, 3.0, 13)[:, None]
    k = np.linspace(-3.0, 3.0, 13)[None, :]
    assert np.max(np.abs(div_w(model, spec, TruncationPolicy(), x, k))) < 1e-12


@pytest.mark.parametrize("model", [harper_model(1.0), lotka_volterra_model()])
def test_zero_order_truncation_is_classical(model):
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, model))
    policy = TruncationPolicy(eta_max=0)
    x = np.linspace(-1.0, 1.0, 5)[:, None]
    k = np.linspace(-1.0, 1.0, 5)[None, :]
    w = spec.w(x, k)
    np.testing.assert_allclose(current_x(model, spec, policy, x, k), model.kinetic(k, 1) * w, atol=1e-15)
    assert np.all(div_w(model, spec, policy, x, k) == 0.0)


def test_harper_series_current_matches_error_function_form():
    ensemble = GaussianEnsemble(1.0, harper_model(1.3))
    spec = gaussian_wigner_spec(ensemble)
    x = np.linspace(-math.pi, math.pi, 41)[:, None]
    k = np.linspace(-math.pi, math.pi, 41)[None, :]
    policy = TruncationPolicy()
    jx, jk = currents_erf(ensemble, x, k)
    np.testing.assert_allclose(current_x(ensemble.model, spec, policy, x, k), jx, atol=1e-12)
    np.testing.assert_allclose(current_k(ensemble.model, spec, policy, x, k), jk, atol=1e-12)


def test_continuity_against_finite_differences():
    model = harper_model(1.0)
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, model))
    grid = make_grid(((-math.pi, math.pi), (-math.pi, math.pi)), (201, 201))
    policy = TruncationPolicy(eta_max=10)
    current = current_field(model, spec, policy, grid)
    residual = dW_dt_field(model, spec, policy, grid).values + divergence(current).values
    assert np.max(np.abs(residual[2:-2, 2:-2])) < 1e-5 * current.max_abs()


def test_first_order_velocity_divergence_of_boltzmann_state_is_opposite_of_quantifier(lattice):
    ensemble = TdEnsemble(harper_model(1.3), 0.8)
    spec = thermal_wigner_spec(ensemble, corrected=False)
    x, k = lattice
    series = div_w(ensemble.model, spec, TruncationPolicy(eta_max=1), x, k)
    np.testing.assert_allclose(series, -td_div_w(ensemble, x, k), atol=1e-12)


def test_velocity_undefined_below_floor():
    model = harper_model(1.0)
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, model))
    with pytest.raises(VelocityUndefinedError, match="velocity undefined"):
        div_w(model, spec, TruncationPolicy(eta_max=2), np.array([0.0, 0.5]), 0.0, w_floor=1.0)


def test_scalar_inputs_return_floats():
    model = harper_model(1.0)
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, model))
    value = current_x(model, spec, TruncationPolicy(eta_max=3), 0.2, 0.4)
    assert isinstance(value, float)


def test_classical_current_is_velocity_times_w():
    model = harper_model(2.0)
    spec = gaussian_wigner_spec(GaussianEnsemble(1.0, model))
    grid = make_grid(((-1.0, 1.0), (-1.0, 1.0)), (9, 9))
    field = classical_current_field(model, spec, grid)
    x, k = grid.axes()
    np.testing.assert_allclose(field.x_values, -np.sin(k) * spec.w(x, k))
    np.testing.assert_allclose(field.k_values, 2.0 * np.sin(x) * spec.w(x, k))


def test_series_current_error_falls_as_truncation_grows():
    ensemble = GaussianEnsemble(1.0, harper_model(1.0))
    spec = gaussian_wigner_spec(ensemble)
    x = np.linspace(-math.pi, math.pi, 41)[:, None]
    k = np.linspace(-math.pi, math.pi, 41)[None, :]
    exact, _ = currents_erf(ensemble, x, k)
    errors = [
        float(np.max(np.abs(current_x(ensemble.model, spec, TruncationPolicy(eta_max=n, tol=0.0), x, k) - exact)))
        for n in range(6)
    ]
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] < 1e-6
