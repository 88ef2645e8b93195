"""Tests for the Gaussian ensemble under Harper dynamics."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.core.hamiltonians import harmonic_model, harper_model, lotka_volterra_model
from app.core.series import TruncationPolicy, current_k, current_x
from app.ensembles.gaussian import (
    GaussianEnsemble,
    currents_erf,
    div_closed,
    div_series,
    g_gamma,
    gaussian_div_w,
    gaussian_div_w_from_currents,
    gaussian_wigner_spec,
    marginal,
    purity,
    purity_quadrature,
    velocity_by_division,
    velocity_field,
)
from app.errors import ModelError, VelocityUndefinedError

GAMMAS = (1.0 / math.sqrt(2.0), 1.0, math.sqrt(2.0))


@pytest.fixture
def bulk():
    values = np.linspace(-2.0, 2.0, 17)
    return values[:, None], values[None, :]


@pytest.mark.parametrize("gamma", [0.0, -1.0, 4.5])
def test_gamma_range(gamma):
    with pytest.raises(ModelError, match="gamma"):
        GaussianEnsemble(gamma, harper_model(1.0))


def test_gamma_upper_edge_is_allowed():
    assert GaussianEnsemble(4.0, harper_model(1.0)).gamma == 4.0


def test_closed_currents_need_harper():
    with pytest.raises(ModelError, match="harper"):
        currents_erf(GaussianEnsemble(1.0, harmonic_model()), 0.1, 0.2)


def test_series_needs_hermite_reduction():
    with pytest.raises(ModelError, match="Hermite reduction"):
        div_series(GaussianEnsemble(1.0, lotka_volterra_model()), 0.1, 0.2)


def test_g_gamma_peak_and_symmetry():
    ensemble = GaussianEnsemble(1.5, harper_model(1.0))
    assert g_gamma(ensemble, 0.0, 0.0) == pytest.approx(2.25 / math.pi)
    assert g_gamma(ensemble, 0.3, -0.7) == g_gamma(ensemble, -0.7, 0.3)


@pytest.mark.parametrize("z", [0.0, 0.4, -1.3])
def test_marginal_integrates_g_over_the_other_axis(z):
    ensemble = GaussianEnsemble(1.2, harper_model(1.0))
    integral, _ = quad(lambda k: g_gamma(ensemble, z, k), -np.inf, np.inf)
    assert marginal(ensemble, z) == pytest.approx(integral, rel=1e-10)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 4.0])
def test_purity_quadrature_matches_gamma_squared(gamma):
    ensemble = GaussianEnsemble(gamma, harper_model(1.0))
    assert purity(ensemble) == gamma ** 2
    assert purity_quadrature(ensemble) == pytest.approx(gamma ** 2, rel=1e-8)


@pytest.mark.parametrize("nu2", [1.0, 2.0])
@pytest.mark.parametrize("gamma", GAMMAS)
def test_series_divergence_matches_closed_form(gamma, nu2):
    ensemble = GaussianEnsemble(gamma, harper_model(nu2))
    x = np.linspace(-math.pi, math.pi, 25)[:, None]
    k = np.linspace(-math.pi, math.pi, 25)[None, :]
    sx, sk = div_series(ensemble, x, k)
    cx, ck = div_closed(ensemble, x, k)
    np.testing.assert_allclose(sx, cx, atol=1e-10)
    np.testing.assert_allclose(sk, ck, atol=1e-10)


def test_short_series_is_not_converged():
    ensemble = GaussianEnsemble(math.sqrt(2.0), harper_model(1.0))
    sx, _ = div_series(ensemble, 1.0, 1.0, TruncationPolicy(eta_max=0))
    cx, _ = div_closed(ensemble, 1.0, 1.0)
    assert abs(sx - cx) > 1e-6


def test_harper_closed_divergence_reduces_to_sinh():
    gamma, nu2, x, k = 1.1, 1.7, 0.4, -0.9
    ensemble = GaussianEnsemble(gamma, harper_model(nu2))
    g = g_gamma(ensemble, x, k)
    damp = math.exp(-gamma ** 2 / 4.0)
    dx, dk = div_closed(ensemble, x, k)
    assert dx == pytest.approx(2.0 * math.sin(k) * math.sinh(gamma ** 2 * x) * damp * g, rel=1e-12)
    assert dk == pytest.approx(-2.0 * nu2 * math.sin(x) * math.sinh(gamma ** 2 * k) * damp * g, rel=1e-12)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_erf_currents_differentiate_to_closed_divergence(gamma):
    ensemble = GaussianEnsemble(gamma, harper_model(1.4))
    h = 1e-5
    for x, k in [(0.3, 0.8), (-1.2, 0.5), (2.0, -2.5)]:
        fx = (currents_erf(ensemble, x + h, k)[0] - currents_erf(ensemble, x - h, k)[0]) / (2.0 * h)
        fk = (currents_erf(ensemble, x, k + h)[1] - currents_erf(ensemble, x, k - h)[1]) / (2.0 * h)
        dx, dk = div_closed(ensemble, x, k)
        assert fx == pytest.approx(dx, abs=1e-8)
        assert fk == pytest.approx(dk, abs=1e-8)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_velocity_matches_division_in_the_bulk(gamma, bulk):
    ensemble = GaussianEnsemble(gamma, harper_model(2.0))
    x, k = bulk
    for closed, divided in zip(velocity_field(ensemble, x, k), velocity_by_division(ensemble, x, k)):
        np.testing.assert_allclose(closed, divided, rtol=1e-9, atol=1e-12)


def test_velocity_survives_where_division_underflows():
    ensemble = GaussianEnsemble(1.0, harper_model(1.0))
    wx, _ = velocity_field(ensemble, 20.0, 1.0)
    divided, _ = velocity_by_division(ensemble, 20.0, 1.0)
    assert math.isfinite(wx) and wx != 0.0
    assert divided == 0.0


def test_velocity_undefined_deep_in_the_tail():
    ensemble = GaussianEnsemble(1.0, harper_model(1.0))
    with pytest.raises(VelocityUndefinedError, match="Gaussian tail"):
        velocity_field(ensemble, np.array([0.0, 30.0]), 0.0)
    with pytest.raises(VelocityUndefinedError):
        gaussian_div_w(ensemble, 0.0, 30.0)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_quantifier_matches_quotient_rule(gamma, bulk):
    ensemble = GaussianEnsemble(gamma, harper_model(1.0 / math.sqrt(2.0)))
    x, k = bulk
    np.testing.assert_allclose(
        gaussian_div_w(ensemble, x, k), gaussian_div_w_from_currents(ensemble, x, k), rtol=1e-8, atol=1e-10
    )


def test_quantifier_is_divergence_of_velocity():
    ensemble = GaussianEnsemble(1.0, harper_model(1.3))
    h = 1e-5
    x, k = 0.7, -1.1
    dwx = (velocity_field(ensemble, x + h, k)[0] - velocity_field(ensemble, x - h, k)[0]) / (2.0 * h)
    dwk = (velocity_field(ensemble, x, k + h)[1] - velocity_field(ensemble, x, k - h)[1]) / (2.0 * h)
    assert gaussian_div_w(ensemble, x, k) == pytest.approx(dwx + dwk, abs=1e-7)


def test_quantifier_vanishes_on_the_diagonal_at_unit_strength():
    ensemble = GaussianEnsemble(1.0, harper_model(1.0))
    z = np.linspace(-2.0, 2.0, 9)
    assert np.all(gaussian_div_w(ensemble, 0.0, 0.0) == 0.0)
    np.testing.assert_allclose(gaussian_div_w(ensemble, z, z), 0.0, atol=1e-12)


@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("nu2", [0.5, 2.0])
def test_currents_are_odd_in_the_conjugate_variable(bulk, gamma, nu2):
    ensemble = GaussianEnsemble(gamma, harper_model(nu2))
    x, k = bulk
    jx, jk = currents_erf(ensemble, x, k)
    jx_flipped, _ = currents_erf(ensemble, x, -k)
    _, jk_flipped = currents_erf(ensemble, -x, k)
    np.testing.assert_allclose(jx_flipped, -jx, atol=1e-15)
    np.testing.assert_allclose(jk_flipped, -jk, atol=1e-15)

    spec = gaussian_wigner_spec(ensemble)
    policy = TruncationPolicy()
    series_jx = current_x(ensemble.model, spec, policy, x, k)
    series_jk = current_k(ensemble.model, spec, policy, x, k)
    np.testing.assert_allclose(current_x(ensemble.model, spec, policy, x, -k), -series_jx, atol=1e-14)
    np.testing.assert_allclose(current_k(ensemble.model, spec, policy, -x, k), -series_jk, atol=1e-14)
