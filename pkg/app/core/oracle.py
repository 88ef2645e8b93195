"""
Verification suite.

Every closed form has a slower independent route; each check compares the two
and returns a CheckReport. Quadrature never calls the Bessel closed forms and
the Hermite series never calls the sinh/erf closed forms.
"""
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.config import get_settings
from app.core.grid import (
    PhaseGrid,
    ScalarField,
    VectorField,
    divergence,
    evaluate_vector_field,
    loop_flux,
    make_grid,
    partial_derivative,
    rectangle_polyline,
    volume_integral,
)
from app.core.hamiltonians import SeparableModel, harmonic_model, harper_model, lotka_volterra_model
from app.core.orbits import classify_and_trace
from app.core.series import (
    TruncationPolicy,
    WignerFunctionSpec,
    current_field,
    dW_dt,
    div_w,
)
from app.core.special import bessel_i
from app.ensembles.gaussian import (
    GaussianEnsemble,
    currents_erf,
    div_closed,
    div_series,
    gaussian_wigner_spec,
    purity,
    purity_quadrature,
)
from app.ensembles.thermal import (
    TdEnsemble,
    corrected_currents,
    harper_td_div_w,
    td_div_w,
    thermal_wigner_spec,
    thermo_observables,
    w0,
    z_classical,
)
from app.models import CheckReport, Offender
from app.utils.logger import get_logger


logger = get_logger(__name__)

NU2_SET = (1.0 / math.sqrt(2.0), 1.0, math.sqrt(2.0), 2.0)
GAMMA_SET = (1.0 / math.sqrt(2.0), 1.0, math.sqrt(2.0))
# The first two windows are centred on the origin, where Harper fluxes vanish by parity.
GREEN_RECTANGLES = (
    (-0.5, 0.5, -0.5, 0.5),
    (-2.0, 2.0, -2.0, 2.0),
    (0.1, 1.3, 0.2, 1.7),
    (0.4, 1.0, 0.5, 1.4),
    (-2.3, -0.6, -1.9, 0.7),
)
INTERIOR = (slice(2, -2), slice(2, -2))


def _square(half: float, points: int, periodic: bool = False) -> PhaseGrid:
    return make_grid(((-half, half), (-half, half)), (points, points), (periodic, periodic))


def _worst(grid: PhaseGrid, value: np.ndarray, reference: np.ndarray, label: Optional[str] = None, count: int = 3) -> List[Offender]:
    """The nodes with the largest |value - reference|."""
    value = np.broadcast_to(value, grid.shape)
    reference = np.broadcast_to(reference, grid.shape)
    err = np.abs(value - reference)
    flat = np.argsort(err, axis=None)[::-1][:count]
    offenders = []
    for i, j in zip(*np.unravel_index(flat, grid.shape)):
        offenders.append(Offender(
            x=float(grid.x_nodes[i]), k=float(grid.k_nodes[j]),
            value=float(value[i, j]), reference=float(reference[i, j]), label=label,
        ))
    return offenders


def _log(report: CheckReport) -> CheckReport:
    logger.info(
        "Check finished",
        check=report.name,
        error=report.max_abs_error,
        tolerance=report.tolerance,
        metric=report.metric,
        passed=report.passed,
    )
    return report


def check_quadrature_vs_bessel(
    betas: Sequence[float] = (0.1, 0.5, 1.0, 2.0, 5.0),
    nu2s: Sequence[float] = NU2_SET,
    points: Optional[int] = None,
) -> CheckReport:
    """Periodic-trapezoid Z0 against 4 pi^2 I0(beta) I0(nu2 beta), relative."""
    points = points or get_settings().quadrature_points
    grid = _square(math.pi, points, periodic=True)
    worst, details = 0.0, []
    for nu2 in nu2s:
        model = harper_model(nu2)
        for beta in betas:
            quadrature = z_classical(model, beta, grid, method="quadrature")
            closed = 4.0 * math.pi ** 2 * bessel_i(0, beta) * bessel_i(0, nu2 * beta)
            rel = abs(quadrature - closed) / closed
            if rel >= worst:
                worst = rel
                details = [Offender(x=beta, k=nu2, value=quadrature, reference=closed, label="beta,nu2")]
    return _log(CheckReport.build("quadrature_vs_bessel", worst, 1e-8, "relative", details))


def check_series_vs_closed(
    gammas: Sequence[float] = GAMMA_SET,
    points: int = 101,
    policy: Optional[TruncationPolicy] = None,
    nu2: float = 1.0,
) -> CheckReport:
    """Hermite-series current divergences against the sinh closed forms."""
    policy = policy or TruncationPolicy.from_settings()
    grid = _square(math.pi, points)
    x, k = grid.axes()
    worst, details = 0.0, []
    for gamma in gammas:
        ensemble = GaussianEnsemble(gamma, harper_model(nu2))
        sx, sk = div_series(ensemble, x, k, policy)
        cx, ck = div_closed(ensemble, x, k)
        err = max(float(np.max(np.abs(sx - cx))), float(np.max(np.abs(sk - ck))))
        if err >= worst:
            worst = err
            details = _worst(grid, sx, cx, label=f"gamma={gamma:g} dJx/dx") + _worst(grid, sk, ck, label=f"gamma={gamma:g} dJk/dk")
    return _log(CheckReport.build("series_vs_closed", worst, 1e-10, "absolute", details))


def check_continuity(
    model: SeparableModel,
    wspec: WignerFunctionSpec,
    grid: PhaseGrid,
    policy: Optional[TruncationPolicy] = None,
    label: Optional[str] = None,
) -> CheckReport:
    """|dW/dt + div J| on the grid interior, relative to max |J|, at matched truncation."""
    policy = policy or TruncationPolicy.from_settings()
    current = current_field(model, wspec, policy, grid)
    x, k = grid.axes()
    rate = np.broadcast_to(dW_dt(model, wspec, policy, x, k), grid.shape)
    div_j = divergence(current).values
    scale = current.max_abs() or 1.0
    residual = np.abs(rate + div_j)[INTERIOR] / scale
    name = f"continuity[{label or model.name + '+' + wspec.name}]"
    details = _worst(
        make_grid(((grid.x_nodes[2], grid.x_nodes[-3]), (grid.k_nodes[2], grid.k_nodes[-3])), residual.shape),
        rate[INTERIOR], -div_j[INTERIOR],
    )
    return _log(CheckReport.build(
        name, float(np.max(residual)), 1e-6, "relative", details, {"max_current": scale, "eta_max": policy.eta_max},
    ))


def check_corrected_stationarity(
    nu2: float = 1.0,
    betas: Sequence[float] = (0.1, 0.5, 1.0),
    fit_betas: Sequence[float] = (0.05, 0.1, 0.2),
    policy: Optional[TruncationPolicy] = None,
) -> CheckReport:
    """Divergence of the O(hbar^2) corrected currents, and the scaling of the remaining non-stationarity.

    The reported error is the finite-difference divergence residual of the
    corrected currents relative to max |J|. The full-series dW/dt of the
    corrected Wigner function is fitted against beta on a log-log scale and
    its exponent recorded in the notes.
    """
    policy = policy or TruncationPolicy(eta_max=10)
    model = harper_model(nu2)
    worst = 0.0
    for beta in betas:
        ensemble = TdEnsemble(model, beta)
        grid = ensemble.grid
        current = evaluate_vector_field(grid, lambda x, k: corrected_currents(ensemble, x, k))
        residual = float(np.max(np.abs(divergence(current).values))) / current.max_abs()
        worst = max(worst, residual)

    sample = _square(math.pi, 101, periodic=True)
    x, k = sample.axes()
    ratios = []
    for beta in fit_betas:
        ensemble = TdEnsemble(model, beta)
        spec = thermal_wigner_spec(ensemble, corrected=True)
        rate = np.abs(dW_dt(model, spec, policy, x, k))
        jx, jk = corrected_currents(ensemble, x, k)
        ratios.append(float(np.max(rate)) / float(np.max(np.hypot(jx, jk))))
    exponent = float(np.polyfit(np.log(fit_betas), np.log(ratios), 1)[0])
    notes = {
        "stationarity_residual": dict(zip([f"{b:g}" for b in fit_betas], ratios)),
        "fitted_exponent": exponent,
    }
    return _log(CheckReport.build("corrected_stationarity", worst, 1e-4, "relative", notes=notes))


def check_greens_theorem(
    vector: VectorField,
    rectangles: Iterable[Tuple[float, float, float, float]] = GREEN_RECTANGLES,
    label: str = "field",
) -> CheckReport:
    """Closed-loop flux against the integrated divergence, per rectangle.

    Relative error |flux - integral| / max(|integral|, |flux|, loop integral of |J.n|)
    with tolerance 10 max(h_x, h_k)^2.
    """
    grid = vector.grid
    div_field = divergence(vector)
    worst, notes = 0.0, {}
    for window in rectangles:
        loop = rectangle_polyline(window)
        flux = loop_flux(vector, loop)
        integral = volume_integral(div_field, window)
        scale = max(abs(integral), abs(flux), loop_flux(vector, loop, absolute=True))
        rel = abs(flux - integral) / scale if scale > 0.0 else 0.0
        notes[str(window)] = {"flux": flux, "integral": integral, "relative_error": rel}
        worst = max(worst, rel)
    tolerance = 10.0 * max(grid.h_x, grid.h_k) ** 2
    return _log(CheckReport.build(f"greens_theorem[{label}]", worst, tolerance, "relative", notes=notes))


def check_harmonic_liouvillian(points: int = 61) -> CheckReport:
    """div w for the harmonic model (Gaussian and thermal states) and for any model at eta_max = 0."""
    policy = TruncationPolicy.from_settings()
    grid = _square(3.0, points)
    x, k = grid.axes()
    harmonic = harmonic_model()
    rows = [
        ("harmonic+gaussian", harmonic, gaussian_wigner_spec(GaussianEnsemble(1.0, harmonic)), policy),
        ("harmonic+td", harmonic, thermal_wigner_spec(TdEnsemble(harmonic, 1.0), corrected=True), policy),
        ("harper+gaussian eta0", harper_model(1.0), gaussian_wigner_spec(GaussianEnsemble(1.0, harper_model(1.0))), TruncationPolicy(eta_max=0)),
        ("lotka_volterra+gaussian eta0", lotka_volterra_model(), gaussian_wigner_spec(GaussianEnsemble(1.0, lotka_volterra_model())), TruncationPolicy(eta_max=0)),
    ]
    worst, notes = 0.0, {}
    for label, model, spec, row_policy in rows:
        value = float(np.max(np.abs(div_w(model, spec, row_policy, x, k))))
        notes[label] = value
        worst = max(worst, value)
    return _log(CheckReport.build("harmonic_liouvillian", worst, 1e-12, "absolute", notes=notes))


def check_td_divw_consistency(
    betas: Sequence[float] = (0.1, 1.0, 3.0, 5.0),
    nu2s: Sequence[float] = NU2_SET,
) -> CheckReport:
    """Generic O(hbar^2) quantifier against the Harper closed form on a 5x5 lattice."""
    lattice = np.array([-math.pi / 2, -math.pi / 4, 0.0, math.pi / 4, math.pi / 2])
    x, k = lattice[:, None], lattice[None, :]
    worst, details = 0.0, []
    for nu2 in nu2s:
        model = harper_model(nu2)
        for beta in betas:
            generic = td_div_w(TdEnsemble(model, beta), x, k)
            closed = harper_td_div_w(beta, nu2, x, k)
            err = float(np.max(np.abs(generic - closed)))
            if err >= worst:
                worst = err
                i, j = np.unravel_index(int(np.argmax(np.abs(generic - closed))), generic.shape)
                details = [Offender(x=float(lattice[i]), k=float(lattice[j]), value=float(generic[i, j]),
                                    reference=float(closed[i, j]), label=f"beta={beta:g},nu2={nu2:g}")]
    hand = td_div_w(TdEnsemble(harper_model(1.0), 1.0), math.pi / 4, math.pi / 2)
    worst = max(worst, abs(hand - 1.0 / 24.0))
    return _log(CheckReport.build("td_divw_consistency", worst, 1e-12, "absolute", details, {"hand_value": hand}))


def check_erf_consistency(gammas: Sequence[float] = GAMMA_SET, points: Optional[int] = None, nu2: float = 1.0) -> CheckReport:
    """Finite-difference divergence of the erf currents against the closed forms, componentwise."""
    points = points or get_settings().check_grid_points
    grid = _square(math.pi, points)
    x, k = grid.axes()
    worst, details = 0.0, []
    for gamma in gammas:
        ensemble = GaussianEnsemble(gamma, harper_model(nu2))
        current = evaluate_vector_field(grid, lambda x, k: currents_erf(ensemble, x, k))
        fx = partial_derivative(current.component("x"), "x").values
        fk = partial_derivative(current.component("k"), "k").values
        cx, ck = (np.broadcast_to(c, grid.shape) for c in div_closed(ensemble, x, k))
        err = max(float(np.max(np.abs(fx - cx)[INTERIOR])), float(np.max(np.abs(fk - ck)[INTERIOR])))
        if err >= worst:
            worst = err
            details = _worst(grid, fx, cx, label=f"gamma={gamma:g} dJx/dx")
    return _log(CheckReport.build("erf_consistency", worst, 1e-6, "absolute", details))


def check_averaging_out(gammas: Sequence[float] = GAMMA_SET, points: Optional[int] = None, nu2: float = 1.0) -> CheckReport:
    """Integral of div J over the symmetric window [-pi, pi]^2 vanishes."""
    points = points or get_settings().grid_points
    grid = _square(math.pi, points)
    x, k = grid.axes()
    worst, notes = 0.0, {}
    for gamma in gammas:
        dx, dk = div_closed(GaussianEnsemble(gamma, harper_model(nu2)), x, k)
        total = abs(volume_integral(ScalarField(grid, np.broadcast_to(dx + dk, grid.shape))))
        notes[f"{gamma:g}"] = total
        worst = max(worst, total)
    return _log(CheckReport.build("averaging_out", worst, 1e-10, "absolute", notes=notes))


def expected_branch(energy: float, nu2: float) -> str:
    """Portrait classification rule written out independently of the tracer."""
    e = abs(energy)
    if e > nu2 + 1.0:
        return "empty"
    if 0.0 < e < nu2 - 1.0 or energy == 0.0:
        return "open"
    return "closed_positive" if energy > 0 else "closed_negative"


def check_orbit_classification(
    nu2s: Sequence[float] = (0.5, 1.0, 2.0),
    energies: Sequence[float] = (0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5, 2.0, -2.0, 2.5, -2.5),
) -> CheckReport:
    """Portrait branches match the threshold rule; error is the worst energy drift."""
    worst, details, mismatches = 0.0, [], []
    for nu2 in nu2s:
        model = harper_model(nu2)
        for energy in energies:
            orbit = classify_and_trace(model, energy)
            if orbit.branch != expected_branch(energy, nu2):
                mismatches.append(f"nu2={nu2:g} energy={energy:g}: {orbit.branch}")
            drift = orbit.energy_drift(model)
            if drift >= worst and len(orbit.polyline):
                worst = drift
                details = [Offender(x=energy, k=nu2, value=drift, reference=0.0, label="energy,nu2")]
    error = math.inf if mismatches else worst
    return _log(CheckReport.build("orbit_classification", error, 1e-7, "absolute", details, {"mismatches": mismatches}))


def _thermo_grid() -> PhaseGrid:
    return _square(math.pi, get_settings().grid_points, periodic=True)


def check_purity_bound(nu2s: Sequence[float] = NU2_SET, betas: Optional[Sequence[float]] = None) -> CheckReport:
    """Corrected purity stays below one on (0, 1]; error is the largest excess over 1."""
    betas = betas if betas is not None else np.linspace(0.1, 1.0, 10)
    grid = _thermo_grid()
    worst, notes = 0.0, {}
    for nu2 in nu2s:
        q = thermo_observables(harper_model(nu2), betas, "corrected", grid)
        notes[f"{nu2:g}"] = float(np.max(q["purity"]))
        worst = max(worst, float(np.max(q["purity"])) - 1.0, 0.0)
    return _log(CheckReport.build("purity_bound", worst, 1e-6, "absolute", notes=notes))


def check_classical_purity_limit(nu2s: Sequence[float] = NU2_SET, beta: float = 1e-6) -> CheckReport:
    """Classical purity Z(2b)/Z(b)^2 tends to 1/(4 pi^2) as beta goes to 0."""
    grid = _thermo_grid()
    target = 1.0 / (4.0 * math.pi ** 2)
    worst = 0.0
    for nu2 in nu2s:
        model = harper_model(nu2)
        value = z_classical(model, 2.0 * beta, grid, "quadrature") / z_classical(model, beta, grid, "quadrature") ** 2
        worst = max(worst, abs(value - target))
    return _log(CheckReport.build("classical_purity_limit", worst, 1e-10, "absolute"))


def check_energy_suppression(nu2s: Sequence[float] = NU2_SET, betas: Optional[Sequence[float]] = None) -> CheckReport:
    """Corrected internal energy is no larger in magnitude than the classical one on (0, 1]."""
    betas = betas if betas is not None else np.linspace(0.1, 1.0, 10)
    grid = _thermo_grid()
    worst = 0.0
    for nu2 in nu2s:
        model = harper_model(nu2)
        cl = thermo_observables(model, betas, "classical", grid)["energy"]
        q = thermo_observables(model, betas, "corrected", grid)["energy"]
        worst = max(worst, float(np.max(np.abs(q) - np.abs(cl))), 0.0)
    return _log(CheckReport.build("energy_suppression", worst, 1e-9, "absolute"))


def check_gaussian_purity(gammas: Sequence[float] = GAMMA_SET) -> CheckReport:
    """Quadrature of 2 pi G^2 against gamma^2, relative."""
    worst = 0.0
    for gamma in gammas:
        ensemble = GaussianEnsemble(gamma, harper_model(1.0))
        worst = max(worst, abs(purity_quadrature(ensemble) - purity(ensemble)) / purity(ensemble))
    return _log(CheckReport.build("gaussian_purity", worst, 1e-8, "relative"))


@dataclass
class SuiteResult:
    """Result of a verification run."""
    reports: List[CheckReport] = field(default_factory=list)
    elapsed_ms: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


class VerificationSuite:
    """Runs every oracle check at the configured resolutions."""

    def __init__(self, grid_points: Optional[int] = None):
        """
        Args:
            grid_points: Nodes per axis for the Green's-theorem fields
                (default: grid_points setting)
        """
        self.settings = get_settings()
        self.grid_points = grid_points or self.settings.grid_points
        self.policy = TruncationPolicy.from_settings()

    def _greens_fields(self) -> List[Tuple[str, VectorField]]:
        grid = _square(math.pi, self.grid_points, periodic=True)
        harper = harper_model(1.0)
        thermal = TdEnsemble(harper, 1.0)

        def classical(x, k):
            vx, vk = harper.velocity(x, k)
            w = w0(thermal, x, k)
            return vx * w, vk * w

        gaussian = GaussianEnsemble(1.0, harper)
        return [
            ("classical", evaluate_vector_field(grid, classical)),
            ("td_corrected", evaluate_vector_field(grid, lambda x, k: corrected_currents(thermal, x, k))),
            ("gaussian", evaluate_vector_field(grid, lambda x, k: currents_erf(gaussian, x, k))),
        ]

    def _continuity_rows(self) -> List[CheckReport]:
        points = self.settings.check_grid_points
        harper = harper_model(1.0)
        harmonic = harmonic_model()
        thermal = TdEnsemble(harper, 1.0)
        return [
            check_continuity(harmonic, gaussian_wigner_spec(GaussianEnsemble(1.0, harmonic)),
                             _square(4.0, points), self.policy, "harmonic+gaussian"),
            check_continuity(harper, gaussian_wigner_spec(GaussianEnsemble(1.0, harper)),
                             _square(math.pi, points), self.policy, "harper+gaussian"),
            check_continuity(harper, thermal_wigner_spec(thermal, corrected=True),
                             thermal.grid, TruncationPolicy(eta_max=10), "harper+td"),
        ]

    def run(self, checks: Optional[Sequence[str]] = None) -> SuiteResult:
        """
        Run the suite.

        Args:
            checks: Optional subset of check-name prefixes to run

        Returns:
            SuiteResult with one report per check
        """
        start_time = time.time()
        steps: List[Tuple[str, Callable[[], List[CheckReport]]]] = [
            ("quadrature_vs_bessel", lambda: [check_quadrature_vs_bessel()]),
            ("series_vs_closed", lambda: [check_series_vs_closed(policy=self.policy)]),
            ("continuity", self._continuity_rows),
            ("corrected_stationarity", lambda: [check_corrected_stationarity()]),
            ("greens_theorem", lambda: [check_greens_theorem(f, label=name) for name, f in self._greens_fields()]),
            ("harmonic_liouvillian", lambda: [check_harmonic_liouvillian()]),
            ("td_divw_consistency", lambda: [check_td_divw_consistency()]),
            ("erf_consistency", lambda: [check_erf_consistency()]),
            ("averaging_out", lambda: [check_averaging_out()]),
            ("orbit_classification", lambda: [check_orbit_classification()]),
            ("purity_bound", lambda: [check_purity_bound()]),
            ("classical_purity_limit", lambda: [check_classical_purity_limit()]),
            ("energy_suppression", lambda: [check_energy_suppression()]),
            ("gaussian_purity", lambda: [check_gaussian_purity()]),
        ]
        result = SuiteResult()
        for name, step in steps:
            if checks and not any(name.startswith(c) for c in checks):
                continue
            result.reports.extend(step())
        result.elapsed_ms = int((time.time() - start_time) * 1000)
        logger.info(
            "Verification finished",
            checks=len(result.reports),
            failed=sum(not r.passed for r in result.reports),
            elapsed_ms=result.elapsed_ms,
        )
        return result
