"""
Isotropic Gaussian ensembles.

G(x, k) = (gamma^2 / pi) exp(-gamma^2 (x^2 + k^2)). Current divergences are
available as Hermite series and in closed form for models whose odd
derivatives factor as mu^(2n+1) kappa(k) and lam^(2n+1) upsilon(x); Harper
additionally has error-function currents and a closed-form quantum velocity.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.config import get_settings
from app.core.grid import PhaseGrid, evaluate_field, make_grid, volume_integral
from app.core.hamiltonians import HermiteReduction, SeparableModel
from app.core.series import SeparableTerm, TruncationPolicy, WignerFunctionSpec, separable_spec, series_coefficient, truncated_sum
from app.core.special import HERMITE_MAX_ORDER, erf, hermite_table, scaled_erfc
from app.errors import ModelError, VelocityUndefinedError
from app.utils.logger import get_logger


logger = get_logger(__name__)

GAMMA_MAX = 4.0
IMAG_RESIDUE = 1e-13


def _out(value, x, k):
    shape = np.broadcast_shapes(np.shape(x), np.shape(k))
    value = np.broadcast_to(value, shape)
    return float(value) if shape == () else np.array(value)


@dataclass(frozen=True)
class GaussianEnsemble:
    """Gaussian Wigner state of inverse spread gamma evolving under a model."""
    gamma: float
    model: SeparableModel

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= GAMMA_MAX:
            raise ModelError(f"gamma must lie in (0, {GAMMA_MAX}], got {self.gamma}")

    @property
    def nu2(self) -> float:
        if self.model.name != "harper" or self.model.nu2 is None:
            raise ModelError(f"closed Gaussian currents need the harper model, got {self.model.name}")
        return float(self.model.nu2)


def g_gamma(ensemble: GaussianEnsemble, x, k):
    g2 = ensemble.gamma ** 2
    return _out((g2 / math.pi) * np.exp(-g2 * (np.asarray(x) ** 2 + np.asarray(k) ** 2)), x, k)


def marginal(ensemble: GaussianEnsemble, z):
    """x- or k-marginal (gamma / sqrt(pi)) exp(-gamma^2 z^2); both are identical."""
    z = np.asarray(z, dtype=float)
    value = (ensemble.gamma / math.sqrt(math.pi)) * np.exp(-(ensemble.gamma * z) ** 2)
    return float(value) if value.ndim == 0 else value


def purity(ensemble: GaussianEnsemble) -> float:
    """Closed-form purity 2 pi integral of G^2, equal to gamma^2."""
    return ensemble.gamma ** 2


def purity_quadrature(ensemble: GaussianEnsemble, points: Optional[int] = None) -> float:
    """Purity by trapezoid quadrature of 2 pi G^2 over [-8/gamma, 8/gamma]^2."""
    points = points or get_settings().quadrature_points
    half = 8.0 / ensemble.gamma
    grid = make_grid(((-half, half), (-half, half)), (points, points))
    return 2.0 * math.pi * volume_integral(evaluate_field(grid, lambda x, k: g_gamma(ensemble, x, k) ** 2))


def _gaussian_factor(gamma: float):
    def factor(n_max: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        orders = np.arange(n_max + 1).reshape((-1,) + (1,) * z.ndim)
        return (-gamma) ** orders * hermite_table(n_max, gamma * z) * np.exp(-(gamma * z) ** 2)[None]

    return factor


def gaussian_wigner_spec(ensemble: GaussianEnsemble) -> WignerFunctionSpec:
    """G as a series-engine spec; d^n G = (-gamma)^n H_n(gamma z) G along either axis."""
    g2 = ensemble.gamma ** 2
    factor = _gaussian_factor(ensemble.gamma)
    return separable_spec(
        name=f"gaussian-gamma={ensemble.gamma:g}",
        terms=[SeparableTerm(g2 / math.pi, factor, factor)],
        max_order=HERMITE_MAX_ORDER,
        peak=g2 / math.pi,
    )


def _reduction(model: SeparableModel) -> HermiteReduction:
    if model.hermite is None:
        raise ModelError(f"no Hermite reduction for model {model.name}")
    return model.hermite


def _real(value: np.ndarray, label: str) -> np.ndarray:
    value = np.asarray(value)
    residue = np.abs(value.imag)
    if np.any(residue > IMAG_RESIDUE * np.maximum(1.0, np.abs(value.real))):
        raise ModelError(f"{label} has imaginary residue {float(np.max(residue))!r}")
    return value.real


def div_series(ensemble: GaussianEnsemble, x, k, policy: Optional[TruncationPolicy] = None) -> Tuple:
    """(dJx/dx, dJk/dk) as truncated Hermite series.

    Raises:
        ModelError: if the model has no Hermite reduction
    """
    red = _reduction(ensemble.model)
    policy = policy or TruncationPolicy.from_settings()
    gamma = ensemble.gamma
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    top = 2 * policy.eta_max + 1
    hx = hermite_table(top, gamma * x)
    hk = hermite_table(top, gamma * k)
    g = g_gamma(ensemble, x, k)
    kappa = red.kappa(k)
    upsilon = red.upsilon(x)

    def x_term(eta: int) -> np.ndarray:
        n = 2 * eta + 1
        return series_coefficient(eta) * red.mu ** n * kappa * (-gamma) ** n * hx[n] * g

    def k_term(eta: int) -> np.ndarray:
        n = 2 * eta + 1
        return -series_coefficient(eta) * red.lam ** n * upsilon * (-gamma) ** n * hk[n] * g

    dx = _real(truncated_sum(x_term, 0, policy), "series dJx/dx")
    dk = _real(truncated_sum(k_term, 0, policy), "series dJk/dk")
    return _out(dx, x, k), _out(dk, x, k)


def div_closed(ensemble: GaussianEnsemble, x, k) -> Tuple:
    """(dJx/dx, dJk/dk) in closed form.

    dJx/dx =  2i kappa(k)   sinh(i mu gamma^2 x)  exp(mu^2 gamma^2 / 4) G
    dJk/dk = -2i upsilon(x) sinh(i lam gamma^2 k) exp(lam^2 gamma^2 / 4) G

    For Harper these reduce to 2 sin k sinh(gamma^2 x) e^(-gamma^2/4) G and
    -2 nu2 sin x sinh(gamma^2 k) e^(-gamma^2/4) G.
    """
    red = _reduction(ensemble.model)
    g2 = ensemble.gamma ** 2
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    g = g_gamma(ensemble, x, k)
    dx = 2j * red.kappa(k) * np.sinh(1j * red.mu * g2 * x) * np.exp(red.mu ** 2 * g2 / 4.0) * g
    dk = -2j * red.upsilon(x) * np.sinh(1j * red.lam * g2 * k) * np.exp(red.lam ** 2 * g2 / 4.0) * g
    return _out(_real(dx, "closed dJx/dx"), x, k), _out(_real(dk, "closed dJk/dk"), x, k)


def currents_erf(ensemble: GaussianEnsemble, x, k) -> Tuple:
    """Harper currents integrated in closed form with error functions."""
    nu2 = ensemble.nu2
    gamma = ensemble.gamma
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    pref = gamma / (2.0 * math.sqrt(math.pi))
    jx = pref * np.sin(k) * np.exp(-(gamma * k) ** 2) * (erf(gamma * (x - 0.5)) - erf(gamma * (x + 0.5)))
    jk = -nu2 * pref * np.sin(x) * np.exp(-(gamma * x) ** 2) * (erf(gamma * (k - 0.5)) - erf(gamma * (k + 0.5)))
    return _out(jx, x, k), _out(jk, x, k)


def _gap(gamma: float, z: np.ndarray) -> np.ndarray:
    """exp(gamma^2 z^2) [erf(gamma(z - 1/2)) - erf(gamma(z + 1/2))], even in z, without overflow."""
    za = np.abs(z)
    u = gamma * (za + 0.5)
    v = gamma * (za - 0.5)
    g2 = gamma ** 2
    return scaled_erfc(u) * np.exp(-g2 * (za + 0.25)) - scaled_erfc(v) * np.exp(g2 * (za - 0.25))


def _guard_tail(ensemble: GaussianEnsemble, x: np.ndarray, k: np.ndarray) -> None:
    limit = get_settings().gaussian_tail_exponent
    exponent = ensemble.gamma ** 2 * (x ** 2 + k ** 2)
    if np.any(exponent > limit):
        idx = np.unravel_index(int(np.argmax(exponent)), np.shape(exponent))
        xs = np.broadcast_to(x, np.shape(exponent))[idx]
        ks = np.broadcast_to(k, np.shape(exponent))[idx]
        raise VelocityUndefinedError(f"velocity undefined in the Gaussian tail at (x={float(xs)!r}, k={float(ks)!r})")


def velocity_field(ensemble: GaussianEnsemble, x, k) -> Tuple:
    """Harper quantum velocity J / G in closed form (no division).

    Raises:
        VelocityUndefinedError: where gamma^2 (x^2 + k^2) exceeds the tail limit
    """
    nu2 = ensemble.nu2
    gamma = ensemble.gamma
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    _guard_tail(ensemble, x, k)
    pref = math.sqrt(math.pi) / (2.0 * gamma)
    wx = pref * np.sin(k) * _gap(gamma, x)
    wk = -nu2 * pref * np.sin(x) * _gap(gamma, k)
    return _out(wx, x, k), _out(wk, x, k)


def velocity_by_division(ensemble: GaussianEnsemble, x, k) -> Tuple:
    """J / G computed literally; a reference for velocity_field inside the bulk."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    _guard_tail(ensemble, x, k)
    jx, jk = currents_erf(ensemble, x, k)
    g = g_gamma(ensemble, x, k)
    return _out(jx / g, x, k), _out(jk / g, x, k)


def gaussian_div_w(ensemble: GaussianEnsemble, x, k):
    """Liouvillianity quantifier of the Harper Gaussian ensemble, d wx/dx + d wk/dk.

    d wx/dx = sin k [gamma sqrt(pi) x gap(x) + 2 e^(-gamma^2/4) sinh(gamma^2 x)], and
    d wk/dk mirrors it with -nu2 sin x.
    """
    nu2 = ensemble.nu2
    gamma = ensemble.gamma
    g2 = gamma ** 2
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    _guard_tail(ensemble, x, k)
    damp = 2.0 * math.exp(-g2 / 4.0)
    root = gamma * math.sqrt(math.pi)
    dwx = np.sin(k) * (root * x * _gap(gamma, x) + damp * np.sinh(g2 * x))
    dwk = -nu2 * np.sin(x) * (root * k * _gap(gamma, k) + damp * np.sinh(g2 * k))
    return _out(dwx + dwk, x, k)


def gaussian_div_w_from_currents(ensemble: GaussianEnsemble, x, k):
    """(G div J - J . grad G) / G^2 assembled from the erf currents and closed divergences."""
    g2 = ensemble.gamma ** 2
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    _guard_tail(ensemble, x, k)
    g = g_gamma(ensemble, x, k)
    jx, jk = currents_erf(ensemble, x, k)
    dx, dk = div_closed(ensemble, x, k)
    grad_x, grad_k = -2.0 * g2 * x * g, -2.0 * g2 * k * g
    return _out((g * (dx + dk) - (jx * grad_x + jk * grad_k)) / g ** 2, x, k)


def default_field_grid(points: Optional[int] = None) -> PhaseGrid:
    """Open [-pi, pi]^2 grid used for Gaussian field exports."""
    points = points or get_settings().grid_points
    return make_grid(((-math.pi, math.pi), (-math.pi, math.pi)), (points, points))
