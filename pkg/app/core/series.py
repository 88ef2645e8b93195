"""
Truncated-series engine for Wigner flows of separable Hamiltonians.

With c_n = (-1)^n / (4^n (2n+1)!) the currents read

    J_x =  sum_n c_n K^(2n+1)(k) d_x^(2n) W
    J_k = -sum_n c_n V^(2n+1)(x) d_k^(2n) W

and dW/dt, div w follow by differentiating these term by term. All
evaluators broadcast over x and k, so a grid is evaluated by passing x as a
column and k as a row.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from app.config import get_settings
from app.core.grid import PhaseGrid, ScalarField, VectorField
from app.core.hamiltonians import SeparableModel
from app.errors import SeriesError, VelocityUndefinedError


ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
PartialFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]
StackFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]
FactorFn = Callable[[int, np.ndarray], np.ndarray]

MAX_ETA = 31


@dataclass(frozen=True)
class TruncationPolicy:
    """Where a series is cut.

    Summation stops at eta_max, or earlier once two consecutive terms are
    below tol times the partial sum at every evaluated point.
    """
    eta_max: int = 25
    tol: float = 1e-12

    def __post_init__(self) -> None:
        if not 0 <= self.eta_max <= MAX_ETA:
            raise SeriesError(f"eta_max must lie in [0, {MAX_ETA}], got {self.eta_max}")
        if self.tol < 0.0:
            raise SeriesError(f"tol must be non-negative, got {self.tol}")

    @classmethod
    def from_settings(cls) -> "TruncationPolicy":
        settings = get_settings()
        return cls(eta_max=settings.eta_max, tol=settings.series_tol)


@dataclass(frozen=True)
class WignerFunctionSpec:
    """A Wigner function with analytic partial derivatives.

    ``dx_upto``/``dk_upto`` optionally return the stacked derivatives of
    orders 0..n in one call; otherwise they are assembled from ``dx_n``/``dk_n``.
    """
    name: str
    w: ArrayFn
    dx_n: PartialFn
    dk_n: PartialFn
    max_order: int
    peak: float
    dx_upto: Optional[StackFn] = None
    dk_upto: Optional[StackFn] = None

    def x_derivatives(self, n_max: int, x: np.ndarray, k: np.ndarray) -> np.ndarray:
        if self.dx_upto is not None:
            return self.dx_upto(n_max, x, k)
        return np.stack(np.broadcast_arrays(*[self.dx_n(n, x, k) for n in range(n_max + 1)]))

    def k_derivatives(self, n_max: int, x: np.ndarray, k: np.ndarray) -> np.ndarray:
        if self.dk_upto is not None:
            return self.dk_upto(n_max, x, k)
        return np.stack(np.broadcast_arrays(*[self.dk_n(n, x, k) for n in range(n_max + 1)]))


@dataclass(frozen=True)
class SeparableTerm:
    """coef * f(x) * g(k), with factor callbacks returning derivatives 0..n stacked."""
    coef: float
    fx: FactorFn
    gk: FactorFn


def separable_spec(
    name: str,
    terms: Sequence[SeparableTerm],
    max_order: int,
    norm: float = 1.0,
    peak: Optional[float] = None,
    peak_grid: Optional[PhaseGrid] = None,
) -> WignerFunctionSpec:
    """Build a spec for W = (1/norm) sum coef f(x) g(k).

    The peak used by the Wigner-zero guard is taken from ``peak`` or, failing
    that, measured on ``peak_grid``.
    """
    terms = list(terms)

    def w(x, k):
        return sum(t.coef * t.fx(0, x)[0] * t.gk(0, k)[0] for t in terms) / norm

    def dx_upto(n_max, x, k):
        return sum(t.coef * t.fx(n_max, x) * t.gk(0, k)[0][None] for t in terms) / norm

    def dk_upto(n_max, x, k):
        return sum(t.coef * t.fx(0, x)[0][None] * t.gk(n_max, k) for t in terms) / norm

    def dx_n(n, x, k):
        return dx_upto(n, x, k)[n]

    def dk_n(n, x, k):
        return dk_upto(n, x, k)[n]

    if peak is None:
        if peak_grid is None:
            raise SeriesError("separable_spec needs a peak value or a grid to measure it on")
        x, k = peak_grid.axes()
        peak = float(np.max(np.abs(w(x, k))))
    return WignerFunctionSpec(
        name=name, w=w, dx_n=dx_n, dk_n=dk_n, max_order=max_order, peak=peak,
        dx_upto=dx_upto, dk_upto=dk_upto,
    )


def series_coefficient(eta: int) -> float:
    """(i/2)^(2 eta) / (2 eta + 1)! as a real number."""
    return (-1.0) ** eta / (4.0 ** eta * math.factorial(2 * eta + 1))


def _require_order(wspec: WignerFunctionSpec, needed: int) -> None:
    if wspec.max_order < needed:
        raise SeriesError(
            f"{wspec.name} supplies derivatives up to order {wspec.max_order}, truncation needs {needed}"
        )


def truncated_sum(term: Callable[[int], np.ndarray], first: int, policy: TruncationPolicy) -> np.ndarray:
    """Sum term(first..eta_max) with the two-quiet-terms early stop."""
    total: Optional[np.ndarray] = None
    quiet = 0
    for eta in range(first, policy.eta_max + 1):
        t = term(eta)
        total = t if total is None else total + t
        if np.all(np.abs(t) <= policy.tol * np.abs(total)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    return total if total is not None else np.zeros(())


def _points(x, k) -> Tuple[np.ndarray, np.ndarray, Tuple[int, ...]]:
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    return x, k, np.broadcast_shapes(x.shape, k.shape)


def _finish(value: np.ndarray, shape: Tuple[int, ...]):
    value = np.broadcast_to(value, shape)
    return float(value) if shape == () else np.array(value)


def current_x(model: SeparableModel, wspec: WignerFunctionSpec, policy: TruncationPolicy, x, k):
    """x component of the Wigner current.

    Raises:
        SeriesError: if wspec cannot supply order 2 * eta_max
    """
    _require_order(wspec, 2 * policy.eta_max)
    x, k, shape = _points(x, k)
    dx = wspec.x_derivatives(2 * policy.eta_max, x, k)
    total = truncated_sum(
        lambda eta: series_coefficient(eta) * model.kinetic(k, 2 * eta + 1) * dx[2 * eta], 0, policy
    )
    return _finish(total, shape)


def current_k(model: SeparableModel, wspec: WignerFunctionSpec, policy: TruncationPolicy, x, k):
    """k component of the Wigner current."""
    _require_order(wspec, 2 * policy.eta_max)
    x, k, shape = _points(x, k)
    dk = wspec.k_derivatives(2 * policy.eta_max, x, k)
    total = truncated_sum(
        lambda eta: -series_coefficient(eta) * model.potential(x, 2 * eta + 1) * dk[2 * eta], 0, policy
    )
    return _finish(total, shape)


def dW_dt(model: SeparableModel, wspec: WignerFunctionSpec, policy: TruncationPolicy, x, k):
    """Time derivative of W, equal to minus the divergence of the current."""
    order = 2 * policy.eta_max + 1
    _require_order(wspec, order)
    x, k, shape = _points(x, k)
    dx = wspec.x_derivatives(order, x, k)
    dk = wspec.k_derivatives(order, x, k)

    def term(eta: int) -> np.ndarray:
        n = 2 * eta + 1
        return series_coefficient(eta) * (model.potential(x, n) * dk[n] - model.kinetic(k, n) * dx[n])

    return _finish(truncated_sum(term, 0, policy), shape)


def div_w(
    model: SeparableModel,
    wspec: WignerFunctionSpec,
    policy: TruncationPolicy,
    x,
    k,
    w_floor: Optional[float] = None,
):
    """Divergence of the quantum velocity J / W.

    Raises:
        VelocityUndefinedError: where |W| is at or below the floor
            (default w_floor_rel times the peak of W)
    """
    order = 2 * policy.eta_max + 1
    _require_order(wspec, order)
    x, k, shape = _points(x, k)
    floor = w_floor if w_floor is not None else get_settings().w_floor_rel * wspec.peak
    w = np.broadcast_to(np.asarray(wspec.w(x, k), dtype=float), shape)
    low = np.abs(w) <= floor
    if np.any(low):
        idx = np.argwhere(low)[0] if shape else ()
        xs = np.broadcast_to(x, shape)[tuple(idx)]
        ks = np.broadcast_to(k, shape)[tuple(idx)]
        raise VelocityUndefinedError(
            f"velocity undefined near Wigner zero at (x={float(xs)!r}, k={float(ks)!r})"
        )
    if policy.eta_max == 0:
        return _finish(np.zeros(shape), shape)

    dx = wspec.x_derivatives(order, x, k)
    dk = wspec.k_derivatives(order, x, k)
    w2 = w * w

    def term(eta: int) -> np.ndarray:
        n = 2 * eta + 1
        gx = dx[n] / w - dx[n - 1] * dx[1] / w2
        gk = dk[n] / w - dk[n - 1] * dk[1] / w2
        return series_coefficient(eta) * (model.kinetic(k, n) * gx - model.potential(x, n) * gk)

    return _finish(truncated_sum(term, 1, policy), shape)


def current_field(
    model: SeparableModel, wspec: WignerFunctionSpec, policy: TruncationPolicy, grid: PhaseGrid
) -> VectorField:
    """Series current on every node of a grid."""
    x, k = grid.axes()
    return VectorField(grid, current_x(model, wspec, policy, x, k), current_k(model, wspec, policy, x, k))


def dW_dt_field(
    model: SeparableModel, wspec: WignerFunctionSpec, policy: TruncationPolicy, grid: PhaseGrid
) -> ScalarField:
    x, k = grid.axes()
    return ScalarField(grid, dW_dt(model, wspec, policy, x, k))


def classical_current_field(model: SeparableModel, wspec: WignerFunctionSpec, grid: PhaseGrid) -> VectorField:
    """Classical current v W with v the Hamiltonian velocity."""
    x, k = grid.axes()
    w = np.broadcast_to(wspec.w(x, k), grid.shape)
    vx, vk = model.velocity(x, k)
    return VectorField(grid, np.broadcast_to(vx, grid.shape) * w, np.broadcast_to(vk, grid.shape) * w)
