"""
Phase-space grids, fields, finite-difference calculus and integral operators.

Fields are stored as 2-D arrays of shape (n_x, n_k), x outer and k inner, so a
row-major flattening gives the exported value order. Pointwise functions are
evaluated on broadcastable axes (x as a column, k as a row) and must be
numpy-vectorized.
"""
import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import RegularGridInterpolator

from app.config import get_settings
from app.errors import GridError


Axis = Literal["x", "k"]
Window = Tuple[float, float, float, float]

# 4th-order one-sided stencils for the two nodes nearest a boundary, scaled by 12 h^order.
_EDGE_STENCILS = {
    1: ((-25.0, 48.0, -36.0, 16.0, -3.0), (-3.0, -10.0, 18.0, -6.0, 1.0)),
    2: ((45.0, -154.0, 214.0, -156.0, 61.0, -10.0), (10.0, -15.0, -4.0, 14.0, -6.0, 1.0)),
}


class PhaseGrid(BaseModel):
    """Uniform rectangular grid over an (x, k) phase-space window.

    Node coordinates are x_i = x_min + i * h_x with h_x = (x_max - x_min) / (n_x - 1),
    and analogously for k. On a periodic axis the first and last nodes are the
    same physical point.
    """
    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    k_min: float
    k_max: float
    n_x: int = Field(..., ge=8)
    n_k: int = Field(..., ge=8)
    periodic: Tuple[bool, bool] = (False, False)

    @model_validator(mode="after")
    def _check_bounds(self) -> "PhaseGrid":
        for name in ("x_min", "x_max", "k_min", "k_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.x_min >= self.x_max:
            raise ValueError("x_min ≥ x_max")
        if self.k_min >= self.k_max:
            raise ValueError("k_min ≥ k_max")
        return self

    @property
    def h_x(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def h_k(self) -> float:
        return (self.k_max - self.k_min) / (self.n_k - 1)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_x, self.n_k)

    @property
    def x_nodes(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_x) * self.h_x

    @property
    def k_nodes(self) -> np.ndarray:
        return self.k_min + np.arange(self.n_k) * self.h_k

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Broadcastable node coordinates: x as a column, k as a row."""
        return self.x_nodes[:, None], self.k_nodes[None, :]

    def spacing(self, axis: Axis) -> float:
        return self.h_x if axis == "x" else self.h_k

    def is_periodic(self, axis: Axis) -> bool:
        return self.periodic[0] if axis == "x" else self.periodic[1]

    def contains(self, x: float, k: float) -> bool:
        tol_x = 1e-9 * (self.x_max - self.x_min)
        tol_k = 1e-9 * (self.k_max - self.k_min)
        return (
            self.x_min - tol_x <= x <= self.x_max + tol_x
            and self.k_min - tol_k <= k <= self.k_max + tol_k
        )


def _as_grid_array(grid: PhaseGrid, values: np.ndarray, label: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim == 1 and array.size == grid.n_x * grid.n_k:
        array = array.reshape(grid.shape)
    if array.shape != grid.shape:
        raise GridError(f"{label} has shape {array.shape}, grid needs {grid.shape}")
    if not np.all(np.isfinite(array)):
        i, j = np.argwhere(~np.isfinite(array))[0]
        raise GridError(
            f"{label} is not finite at node (x={grid.x_nodes[i]!r}, k={grid.k_nodes[j]!r})"
        )
    array = array.copy()
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ScalarField:
    """Real values on every node of a PhaseGrid."""
    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_grid_array(self.grid, self.values, "values"))

    def flat(self) -> np.ndarray:
        """Row-major values (x outer, k inner)."""
        return self.values.ravel()

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class VectorField:
    """(x, k) components on every node of a PhaseGrid."""
    grid: PhaseGrid
    x_values: np.ndarray
    k_values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_values", _as_grid_array(self.grid, self.x_values, "x_values"))
        object.__setattr__(self, "k_values", _as_grid_array(self.grid, self.k_values, "k_values"))

    def component(self, axis: Axis) -> ScalarField:
        return ScalarField(self.grid, self.x_values if axis == "x" else self.k_values)

    def modulus(self) -> ScalarField:
        return ScalarField(self.grid, np.hypot(self.x_values, self.k_values))

    def max_abs(self) -> float:
        return float(np.max(np.hypot(self.x_values, self.k_values)))


def make_grid(
    bounds: Sequence[Sequence[float]],
    counts: Sequence[int],
    periodic: Sequence[bool] = (False, False),
) -> PhaseGrid:
    """Build a grid from ((x_min, x_max), (k_min, k_max)) and (n_x, n_k).

    Raises:
        pydantic.ValidationError: naming the offending field.
    """
    (x_min, x_max), (k_min, k_max) = bounds
    n_x, n_k = counts
    return PhaseGrid(
        x_min=x_min, x_max=x_max, k_min=k_min, k_max=k_max,
        n_x=n_x, n_k=n_k, periodic=(bool(periodic[0]), bool(periodic[1])),
    )


def evaluate_field(grid: PhaseGrid, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> ScalarField:
    """Evaluate a vectorized pointwise function on every node."""
    x, k = grid.axes()
    raw = np.asarray(f(x, k), dtype=float)
    return ScalarField(grid, np.broadcast_to(raw, grid.shape))


def evaluate_vector_field(
    grid: PhaseGrid,
    f: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
) -> VectorField:
    """Evaluate a vectorized pointwise function returning (x, k) components."""
    x, k = grid.axes()
    fx, fk = f(x, k)
    return VectorField(
        grid,
        np.broadcast_to(np.asarray(fx, dtype=float), grid.shape),
        np.broadcast_to(np.asarray(fk, dtype=float), grid.shape),
    )


def _derivative_along(values: np.ndarray, h: float, order: int, periodic: bool) -> np.ndarray:
    """4th-order finite difference along axis 0."""
    scale = 12.0 * h ** order
    if periodic:
        u = values[:-1]
        m2, m1 = np.roll(u, 2, axis=0), np.roll(u, 1, axis=0)
        p1, p2 = np.roll(u, -1, axis=0), np.roll(u, -2, axis=0)
        if order == 1:
            d = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / scale
        else:
            d = (-m2 + 16.0 * m1 - 30.0 * u + 16.0 * p1 - p2) / scale
        return np.concatenate([d, d[:1]], axis=0)

    d = np.empty_like(values)
    if order == 1:
        d[2:-2] = (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / scale
    else:
        d[2:-2] = (
            -values[:-4] + 16.0 * values[1:-3] - 30.0 * values[2:-2]
            + 16.0 * values[3:-1] - values[4:]
        ) / scale
    sign = -1.0 if order == 1 else 1.0
    for i, stencil in enumerate(_EDGE_STENCILS[order]):
        coeffs = np.asarray(stencil).reshape((-1,) + (1,) * (values.ndim - 1))
        width = len(stencil)
        d[i] = np.sum(coeffs * values[:width], axis=0) / scale
        d[-1 - i] = sign * np.sum(coeffs * values[::-1][:width], axis=0) / scale
    return d


def partial_derivative(field: ScalarField, axis: Axis, order: int = 1) -> ScalarField:
    """4th-order central finite difference along one axis.

    Periodic axes wrap around; open axes use one-sided 4th-order stencils on
    the two outermost nodes.
    """
    if axis not in ("x", "k"):
        raise GridError(f"unknown axis {axis!r}")
    if order not in (1, 2):
        raise GridError(f"unsupported derivative order {order}")
    grid = field.grid
    n = grid.n_x if axis == "x" else grid.n_k
    if n < 2 * order + 5:
        raise GridError(f"axis {axis} has {n} nodes, order {order} needs at least {2 * order + 5}")

    index = 0 if axis == "x" else 1
    values = np.moveaxis(field.values, index, 0)
    d = _derivative_along(values, grid.spacing(axis), order, grid.is_periodic(axis))
    return ScalarField(grid, np.moveaxis(d, 0, index))


def divergence(vector: VectorField) -> ScalarField:
    """d/dx of the x component plus d/dk of the k component."""
    dx = partial_derivative(vector.component("x"), "x", 1)
    dk = partial_derivative(vector.component("k"), "k", 1)
    return ScalarField(vector.grid, dx.values + dk.values)


def _snap(t: float) -> float:
    nearest = round(t)
    return float(nearest) if abs(t - nearest) < 1e-9 else t


def _linear_weights(n: int, h: float, t_lo: float, t_hi: float) -> np.ndarray:
    """Weights integrating the piecewise-linear interpolant between fractional node indices."""
    t_lo = min(max(_snap(t_lo), 0.0), n - 1.0)
    t_hi = min(max(_snap(t_hi), 0.0), n - 1.0)
    weights = np.zeros(n)
    first = int(math.floor(t_lo))
    last = min(int(math.ceil(t_hi)), n - 1)
    for cell in range(min(first, n - 2), last):
        left = max(t_lo, cell) - cell
        right = min(t_hi, cell + 1) - cell
        if right <= left:
            continue
        weights[cell] += h * ((right - left) - 0.5 * (right ** 2 - left ** 2))
        weights[cell + 1] += h * 0.5 * (right ** 2 - left ** 2)
    return weights


def full_window(grid: PhaseGrid) -> Window:
    return (grid.x_min, grid.x_max, grid.k_min, grid.k_max)


def volume_integral(field: ScalarField, window: Optional[Window] = None) -> float:
    """Trapezoidal integral over a rectangular sub-window.

    Window edges between nodes are handled by integrating the piecewise-linear
    interpolant; over the full grid this is the plain 2-D trapezoid rule.

    Raises:
        GridError: if the window is empty or not inside the grid.
    """
    grid = field.grid
    x_lo, x_hi, k_lo, k_hi = window if window is not None else full_window(grid)
    if not (x_lo < x_hi and k_lo < k_hi):
        raise GridError("integration window is empty")
    if not (grid.contains(x_lo, k_lo) and grid.contains(x_hi, k_hi)):
        raise GridError(f"window {(x_lo, x_hi, k_lo, k_hi)} outside grid")

    w_x = _linear_weights(grid.n_x, grid.h_x, (x_lo - grid.x_min) / grid.h_x, (x_hi - grid.x_min) / grid.h_x)
    w_k = _linear_weights(grid.n_k, grid.h_k, (k_lo - grid.k_min) / grid.h_k, (k_hi - grid.k_min) / grid.h_k)
    return float(w_x @ field.values @ w_k)


def rectangle_polyline(window: Window) -> np.ndarray:
    """Closed counter-clockwise polyline around a rectangle."""
    x_lo, x_hi, k_lo, k_hi = window
    return np.array([
        [x_lo, k_lo], [x_hi, k_lo], [x_hi, k_hi], [x_lo, k_hi], [x_lo, k_lo],
    ])


def _signed_area(points: np.ndarray) -> float:
    x, k = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x[:-1] * k[1:] - x[1:] * k[:-1]))


def loop_flux(
    vector: VectorField,
    polyline: Union[np.ndarray, Sequence[Sequence[float]]],
    samples_per_edge: Optional[int] = None,
    absolute: bool = False,
) -> float:
    """Outward flux of a vector field through a closed polyline.

    The field is interpolated bilinearly and every edge is sampled at
    Gauss-Legendre nodes. Clockwise polylines are reversed so that the normal
    always points outward. With ``absolute=True`` the integrand is |J.n|.

    Raises:
        GridError: for open polylines or vertices outside the grid.
    """
    samples = samples_per_edge or get_settings().loop_samples
    points = np.asarray(polyline, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2 or len(points) < 4:
        raise GridError("polyline needs at least three distinct vertices plus the closing vertex")
    scale = max(1.0, float(np.max(np.abs(points))))
    if not np.allclose(points[0], points[-1], rtol=0.0, atol=1e-12 * scale):
        raise GridError("open polyline: first and last vertices differ")
    grid = vector.grid
    for x, k in points:
        if not grid.contains(x, k):
            raise GridError(f"polyline vertex (x={x!r}, k={k!r}) outside grid")
    if _signed_area(points) < 0.0:
        points = points[::-1]

    nodes, weights = leggauss(samples)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights

    start, delta = points[:-1], np.diff(points, axis=0)
    length = np.hypot(delta[:, 0], delta[:, 1])
    keep = length > 0.0
    start, delta, length = start[keep], delta[keep], length[keep]
    normal = np.stack([delta[:, 1], -delta[:, 0]], axis=1) / length[:, None]

    sample_points = start[:, None, :] + t[None, :, None] * delta[:, None, :]
    flat = sample_points.reshape(-1, 2)
    flat[:, 0] = np.clip(flat[:, 0], grid.x_min, grid.x_max)
    flat[:, 1] = np.clip(flat[:, 1], grid.k_min, grid.k_max)

    axes = (grid.x_nodes, grid.k_nodes)
    jx = RegularGridInterpolator(axes, vector.x_values, method="linear", bounds_error=False, fill_value=None)(flat)
    jk = RegularGridInterpolator(axes, vector.k_values, method="linear", bounds_error=False, fill_value=None)(flat)
    jx = jx.reshape(sample_points.shape[:2])
    jk = jk.reshape(sample_points.shape[:2])

    integrand = jx * normal[:, 0:1] + jk * normal[:, 1:2]
    if absolute:
        integrand = np.abs(integrand)
    return float(np.sum(length * (integrand @ w)))


def enclosed_probability(w: ScalarField, window: Optional[Window] = None) -> float:
    """Probability carried by a Wigner field inside a fixed window."""
    return volume_integral(w, window)


def probability_flux(current: VectorField, polyline: Union[np.ndarray, Sequence[Sequence[float]]]) -> float:
    """Outward probability flux through a closed loop.

    For a window fixed in phase space the enclosed probability changes at
    minus this rate.
    """
    return loop_flux(current, polyline)


def sign_change_mask(field: ScalarField) -> ScalarField:
    """1 where the field changes sign towards the next node along x or k, else 0.

    Traces the zero contours of a current component (flow reversal lines).
    """
    v = field.values
    mask = np.zeros(field.grid.shape)
    mask[:-1, :] = np.maximum(mask[:-1, :], (v[:-1, :] * v[1:, :] < 0.0))
    mask[:, :-1] = np.maximum(mask[:, :-1], (v[:, :-1] * v[:, 1:] < 0.0))
    return ScalarField(field.grid, mask)
