"""
Thermodynamic ensembles.

Classical Boltzmann Wigner function W0 = exp(-beta H) / Z0, its O(hbar^2)
stationary correction W_St = exp(-beta H)(1 + chi) / Z_St, the corrected
currents and Liouvillianity quantifier, partition functions and the
thermodynamic curves derived from them.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Literal, Optional, Sequence, Tuple

import numpy as np

from app.config import get_settings
from app.core.grid import PhaseGrid, ScalarField, VectorField, evaluate_field, sign_change_mask, volume_integral
from app.core.hamiltonians import SeparableModel
from app.core.jets import jet_derivatives, jet_exp, jet_from_derivatives, jet_mul
from app.core.series import MAX_ETA, SeparableTerm, WignerFunctionSpec, separable_spec
from app.core.special import bessel_i
from app.errors import CorrectionRegimeError, ModelError
from app.utils.logger import get_logger


logger = get_logger(__name__)

ZMethod = Literal["auto", "quadrature", "closed_form"]
FOUR_PI2 = 4.0 * math.pi ** 2


def _out(value, x, k):
    shape = np.broadcast_shapes(np.shape(x), np.shape(k))
    value = np.broadcast_to(value, shape)
    return float(value) if shape == () else np.array(value)


def _is_harper(model: SeparableModel) -> bool:
    return model.name == "harper" and model.nu2 is not None


def _require_harper(model: SeparableModel, what: str) -> float:
    if not _is_harper(model):
        raise ModelError(f"{what} is only defined for the harper model, got {model.name}")
    return float(model.nu2)


@dataclass(frozen=True)
class TdEnsemble:
    """Thermal ensemble of a model at dimensionless inverse temperature beta.

    The grid is the quadrature grid for the partition functions; it defaults
    to the model's natural window at ``quadrature_points`` per axis.
    """
    model: SeparableModel
    beta: float
    grid: Optional[PhaseGrid] = None

    def __post_init__(self) -> None:
        if not self.beta > 0.0:
            raise ModelError(f"beta must be positive, got {self.beta}")
        if self.grid is None:
            object.__setattr__(self, "grid", self.model.natural_grid(get_settings().quadrature_points))
        if _is_harper(self.model):
            g = self.grid
            on_cell = all(
                math.isclose(a, b, abs_tol=1e-12)
                for a, b in ((g.x_min, -math.pi), (g.x_max, math.pi), (g.k_min, -math.pi), (g.k_max, math.pi))
            )
            if not (on_cell and all(g.periodic)):
                raise ModelError("harper ensembles need the periodic grid [-pi, pi]^2")

    @cached_property
    def z0(self) -> float:
        return z_classical(self.model, self.beta, self.grid)

    @cached_property
    def z_st(self) -> float:
        return z_corrected(self)


@dataclass(frozen=True)
class ThermoCurve:
    """Classical and corrected thermodynamic observables per beta.

    Corrected entries are NaN where the correction regime was exceeded and
    the curve was built non-strictly.
    """
    betas: np.ndarray
    z_classical: np.ndarray
    z_corrected: np.ndarray
    purity_cl: np.ndarray
    purity_q: np.ndarray
    energy_cl: np.ndarray
    energy_q: np.ndarray
    heat_cl: np.ndarray
    heat_q: np.ndarray


# Pointwise ensemble functions

def chi(model: SeparableModel, beta: float, x, k):
    """O(hbar^2) correction factor: -(b^2/8) V'' K'' + (b^3/24)(V'' K'^2 + K'' V'^2)."""
    v1, v2 = model.potential(x, 1), model.potential(x, 2)
    k1, k2 = model.kinetic(k, 1), model.kinetic(k, 2)
    value = -(beta ** 2 / 8.0) * v2 * k2 + (beta ** 3 / 24.0) * (v2 * k1 ** 2 + k2 * v1 ** 2)
    return _out(value, x, k)


def _boltzmann(ensemble: TdEnsemble, x, k) -> np.ndarray:
    return np.exp(-ensemble.beta * ensemble.model.hamiltonian(x, k))


def w0(ensemble: TdEnsemble, x, k):
    """Classical Boltzmann Wigner function exp(-beta H) / Z0."""
    return _out(_boltzmann(ensemble, x, k) / ensemble.z0, x, k)


def w_st2(ensemble: TdEnsemble, x, k):
    """Stationary O(hbar^2) Wigner function (Z0 / Z_St) W0 (1 + chi)."""
    value = _boltzmann(ensemble, x, k) * (1.0 + chi(ensemble.model, ensemble.beta, x, k)) / ensemble.z_st
    return _out(value, x, k)


def harper_bracket_printed(beta: float, nu2: float, x, k):
    """Printed Harper correction bracket.

    Carries nu2 only on the cos(k) sin^2(x) term, so 1 + chi = 1 - nu2 (1 - bracket)
    and the two agree at nu2 = 1 only.
    """
    value = 1.0 - (
        (beta ** 3 / 24.0) * (nu2 * np.cos(k) * np.sin(x) ** 2 + np.cos(x) * np.sin(k) ** 2)
        + (beta ** 2 / 8.0) * np.cos(k) * np.cos(x)
    )
    return _out(value, x, k)



# Partition functions

def z_classical(model: SeparableModel, beta: float, grid: Optional[PhaseGrid] = None, method: ZMethod = "auto") -> float:
    """Classical partition function Z0 = integral of exp(-beta H).

    Args:
        model: Hamiltonian model
        beta: Inverse temperature (> 0)
        grid: Quadrature grid; defaults to the natural window at quadrature_points
        method: "quadrature", "closed_form" (Harper only) or "auto"
            (closed form for Harper, quadrature otherwise)
    """
    if not beta > 0.0:
        raise ModelError(f"beta must be positive, got {beta}")
    if method == "closed_form" or (method == "auto" and _is_harper(model)):
        nu2 = _require_harper(model, "closed-form Z0")
        return FOUR_PI2 * bessel_i(0, beta) * bessel_i(0, nu2 * beta)
    grid = grid or model.natural_grid(get_settings().quadrature_points)
    return volume_integral(evaluate_field(grid, lambda x, k: np.exp(-beta * model.hamiltonian(x, k))))


def _corrected_quadrature(model: SeparableModel, beta: float, grid: PhaseGrid) -> float:
    numerator = evaluate_field(
        grid, lambda x, k: np.exp(-beta * model.hamiltonian(x, k)) * (1.0 + chi(model, beta, x, k))
    )
    return volume_integral(numerator)


def z_corrected_closed(model: SeparableModel, beta: float) -> float:
    """Harper Z_St in closed form: 4 pi^2 [I0(b) I0(nu2 b) - (nu2 b^2 / 24) I1(b) I1(nu2 b)]."""
    nu2 = _require_harper(model, "closed-form Z_St")
    return FOUR_PI2 * (
        bessel_i(0, beta) * bessel_i(0, nu2 * beta)
        - (nu2 * beta ** 2 / 24.0) * bessel_i(1, beta) * bessel_i(1, nu2 * beta)
    )


def z_corrected_printed(model: SeparableModel, beta: float) -> float:
    """Printed Harper Z_St: 4 pi^2 I0(b) I0(nu2 b) - (b^2 / 24) I1(b) I1(nu2 b). Diagnostic only."""
    nu2 = _require_harper(model, "printed Z_St")
    return (
        FOUR_PI2 * bessel_i(0, beta) * bessel_i(0, nu2 * beta)
        - (beta ** 2 / 24.0) * bessel_i(1, beta) * bessel_i(1, nu2 * beta)
    )


def z_corrected(ensemble: TdEnsemble) -> float:
    """Corrected partition function by quadrature of exp(-beta H)(1 + chi).

    Raises:
        CorrectionRegimeError: if the integral is not positive
    """
    value = _corrected_quadrature(ensemble.model, ensemble.beta, ensemble.grid)
    if _is_harper(ensemble.model):
        closed = z_corrected_closed(ensemble.model, ensemble.beta)
        printed = z_corrected_printed(ensemble.model, ensemble.beta)
        logger.info(
            "Corrected partition function",
            beta=ensemble.beta,
            nu2=ensemble.model.nu2,
            quadrature=value,
            closed_form=closed,
            printed=printed,
            closed_rel_diff=abs(value - closed) / abs(closed) if closed else None,
            printed_rel_diff=abs(value - printed) / abs(printed) if printed else None,
        )
    if not value > 0.0:
        raise CorrectionRegimeError(
            f"correction regime exceeded: Z_St = {value!r} at beta={ensemble.beta}, model={ensemble.model.name}"
        )
    return value


# Currents and quantifiers

def corrected_currents(ensemble: TdEnsemble, x, k) -> Tuple:
    """O(hbar^2) currents of the stationary corrected ensemble.

    J_x =  [K'(1 + chi) - (1/24) K''' (b^2 V'^2 - b V'')] exp(-b H) / Z_St
    J_k = -[V'(1 + chi) - (1/24) V''' (b^2 K'^2 - b K'')] exp(-b H) / Z_St
    """
    model, beta = ensemble.model, ensemble.beta
    v1, v2, v3 = (model.potential(x, m) for m in (1, 2, 3))
    k1, k2, k3 = (model.kinetic(k, m) for m in (1, 2, 3))
    weight = _boltzmann(ensemble, x, k) / ensemble.z_st
    one_chi = 1.0 + chi(model, beta, x, k)
    jx = (k1 * one_chi - k3 * (beta ** 2 * v1 ** 2 - beta * v2) / 24.0) * weight
    jk = -(v1 * one_chi - v3 * (beta ** 2 * k1 ** 2 - beta * k2) / 24.0) * weight
    return _out(jx, x, k), _out(jk, x, k)


def printed_corrected_currents(ensemble: TdEnsemble, x, k) -> Tuple:
    """Printed Harper O(hbar^2) currents with the stray m^4 read as nu^4.

    Kept as a cross-check; agrees with corrected_currents through order beta^2.
    """
    nu2 = _require_harper(ensemble.model, "printed corrected currents")
    beta = ensemble.beta
    w = _boltzmann(ensemble, x, k) / ensemble.z0
    cubic = (beta ** 3 * nu2 / 24.0) * (nu2 * np.cos(k) ** 2 * np.sin(x) + np.sin(k) * np.cos(x) ** 2)
    jx = -np.sin(k) * (
        1.0 - cubic
        + (beta * nu2 * np.cos(x) + beta ** 2 * (nu2 ** 2 * np.sin(x) ** 2 - 3.0 * nu2 * np.cos(k) * np.cos(x))) / 24.0
    ) * w
    jk = nu2 * np.sin(x) * (
        1.0 - cubic
        + (beta * np.cos(k) + beta ** 2 * (np.sin(k) ** 2 - 3.0 * nu2 * np.cos(k) * np.cos(x))) / 24.0
    ) * w
    return _out(jx, x, k), _out(jk, x, k)


def printed_current_discrepancy(ensemble: TdEnsemble, grid: Optional[PhaseGrid] = None) -> float:
    """Largest gap between printed and derived Harper currents, relative to max |J|."""
    grid = grid or ensemble.grid
    x, k = grid.axes()
    jx, jk = corrected_currents(ensemble, x, k)
    px, pk = printed_corrected_currents(ensemble, x, k)
    scale = float(np.max(np.hypot(jx, jk)))
    gap = float(np.max(np.hypot(jx - px, jk - pk))) / scale
    logger.info("Printed corrected currents compared", beta=ensemble.beta, nu2=ensemble.model.nu2, relative_gap=gap)
    return gap


def td_div_w(ensemble: TdEnsemble, x, k):
    """O(hbar^2) Liouvillianity quantifier (b^2/12)(K''' V'' V' - V''' K'' K').

    The term-by-term series applied to W0 at first order gives the opposite sign.
    """
    model, beta = ensemble.model, ensemble.beta
    v1, v2, v3 = (model.potential(x, m) for m in (1, 2, 3))
    k1, k2, k3 = (model.kinetic(k, m) for m in (1, 2, 3))
    return _out((beta ** 2 / 12.0) * (k3 * v2 * v1 - v3 * k2 * k1), x, k)


def harper_td_div_w(beta: float, nu2: float, x, k):
    """Harper closed form (b^2/12) sin x sin k (nu2^2 cos x - nu2 cos k)."""
    value = (beta ** 2 / 12.0) * np.sin(x) * np.sin(k) * (nu2 ** 2 * np.cos(x) - nu2 * np.cos(k))
    return _out(value, x, k)


def flow_reversal_masks(current: VectorField) -> Tuple[ScalarField, ScalarField]:
    """0/1 maps where J_x (first) or J_k (second) changes sign between neighbouring nodes."""
    return sign_change_mask(current.component("x")), sign_change_mask(current.component("k"))


# Wigner function specs for the series engine

def _weighted_factor(derivative, beta: float, kind: str):
    def factor(n_max: int, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        weight = jet_exp(-beta * jet_from_derivatives(derivative, z, n_max))
        if kind == "curvature":
            weight = jet_mul(weight, jet_from_derivatives(lambda s, m: derivative(s, m + 2), z, n_max))
        elif kind == "slope_squared":
            slope = jet_from_derivatives(lambda s, m: derivative(s, m + 1), z, n_max)
            weight = jet_mul(weight, jet_mul(slope, slope))
        return jet_derivatives(weight)

    return factor


def thermal_wigner_spec(ensemble: TdEnsemble, corrected: bool = True) -> WignerFunctionSpec:
    """W0 or W_St as a sum of separable products with exact derivatives from Taylor jets."""
    model, beta = ensemble.model, ensemble.beta
    terms = [SeparableTerm(1.0, _weighted_factor(model.potential, beta, "plain"), _weighted_factor(model.kinetic, beta, "plain"))]
    if corrected:
        terms += [
            SeparableTerm(
                -beta ** 2 / 8.0,
                _weighted_factor(model.potential, beta, "curvature"),
                _weighted_factor(model.kinetic, beta, "curvature"),
            ),
            SeparableTerm(
                beta ** 3 / 24.0,
                _weighted_factor(model.potential, beta, "curvature"),
                _weighted_factor(model.kinetic, beta, "slope_squared"),
            ),
            SeparableTerm(
                beta ** 3 / 24.0,
                _weighted_factor(model.potential, beta, "slope_squared"),
                _weighted_factor(model.kinetic, beta, "curvature"),
            ),
        ]
    return separable_spec(
        name=f"{model.name}-{'w_st2' if corrected else 'w0'}-beta={beta:g}",
        terms=terms,
        max_order=2 * MAX_ETA + 1,
        norm=ensemble.z_st if corrected else ensemble.z0,
        peak_grid=ensemble.grid,
    )


# Thermodynamic curves

def _z_value(model: SeparableModel, beta: float, which: str, grid: PhaseGrid) -> float:
    if which == "classical":
        return z_classical(model, beta, grid, method="quadrature")
    value = _corrected_quadrature(model, beta, grid)
    if not value > 0.0:
        raise CorrectionRegimeError(f"correction regime exceeded: Z_St = {value!r} at beta={beta}")
    return value


def _observables_at(model: SeparableModel, beta: float, step: float, which: str, grid: PhaseGrid) -> Tuple[float, float, float, float]:
    offsets = (-2, -1, 0, 1, 2)
    logs = [math.log(_z_value(model, beta + o * step, which, grid)) for o in offsets]
    z = math.exp(logs[2])
    purity = _z_value(model, 2.0 * beta, which, grid) / z ** 2
    d1 = (logs[0] - 8.0 * logs[1] + 8.0 * logs[3] - logs[4]) / (12.0 * step)
    d2 = (-logs[0] + 16.0 * logs[1] - 30.0 * logs[2] + 16.0 * logs[3] - logs[4]) / (12.0 * step ** 2)
    return z, purity, -d1, beta ** 2 * d2


def thermo_observables(
    model: SeparableModel,
    betas: Sequence[float],
    which: Literal["classical", "corrected"],
    grid: Optional[PhaseGrid] = None,
    strict: bool = True,
) -> Dict[str, np.ndarray]:
    """Z, purity Z(2b)/Z(b)^2, energy -d ln Z/db and heat b^2 d^2 ln Z/db^2 per beta.

    Beta derivatives use 4th-order central differences with step min(betas)/50.

    Raises:
        ModelError: for non-positive or non-ascending betas
        CorrectionRegimeError: in strict mode when a partition function is not positive
    """
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0 or np.any(betas <= 0.0) or np.any(np.diff(betas) <= 0.0):
        raise ModelError("betas must be positive and strictly ascending")
    grid = grid or model.natural_grid(get_settings().quadrature_points)
    step = float(betas.min()) / 50.0

    def one(beta: float) -> Tuple[float, float, float, float]:
        try:
            return _observables_at(model, beta, step, which, grid)
        except CorrectionRegimeError:
            if strict:
                raise
            logger.warning("Correction regime exceeded", beta=beta, which=which, model=model.name)
            return (math.nan,) * 4

    with ThreadPoolExecutor(max_workers=get_settings().threads) as pool:
        rows = list(pool.map(one, betas.tolist()))
    columns = np.array(rows).T
    return {"z": columns[0], "purity": columns[1], "energy": columns[2], "heat": columns[3]}


def thermo_curve(
    model: SeparableModel,
    betas: Sequence[float],
    grid: Optional[PhaseGrid] = None,
    strict: bool = True,
) -> ThermoCurve:
    """Classical and corrected thermodynamic curves over ascending betas."""
    classical = thermo_observables(model, betas, "classical", grid, strict)
    corrected = thermo_observables(model, betas, "corrected", grid, strict)
    logger.info(
        "Thermodynamic curve computed",
        model=model.name,
        points=len(classical["z"]),
        beta_min=float(np.min(betas)),
        beta_max=float(np.max(betas)),
        corrected_nan=int(np.sum(np.isnan(corrected["z"]))),
    )
    return ThermoCurve(
        betas=np.asarray(betas, dtype=float),
        z_classical=classical["z"],
        z_corrected=corrected["z"],
        purity_cl=classical["purity"],
        purity_q=corrected["purity"],
        energy_cl=classical["energy"],
        energy_q=corrected["energy"],
        heat_cl=classical["heat"],
        heat_q=corrected["heat"],
    )
