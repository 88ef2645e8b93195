"""
Separable Hamiltonian models.

A model H(x, k) = K(k) + V(x) exposes the analytic derivatives of K and V to
any order. The built-in catalog holds the Harper, harmonic and Lotka-Volterra
Hamiltonians.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from app.core.grid import PhaseGrid, make_grid
from app.errors import ModelError
from app.utils.logger import get_logger


logger = get_logger(__name__)

DerivativeFn = Callable[[np.ndarray, int], np.ndarray]
Bounds = Tuple[Tuple[float, float], Tuple[float, float]]


@dataclass(frozen=True)
class HermiteReduction:
    """Constants of the odd-derivative factorization used by Gaussian closed forms.

    d^(2n+1)K/dk^(2n+1) = mu^(2n+1) kappa(k) and d^(2n+1)V/dx^(2n+1) = lam^(2n+1) upsilon(x).
    """
    mu: complex
    lam: complex
    kappa: Callable[[np.ndarray], np.ndarray]
    upsilon: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SeparableModel:
    """Separable Hamiltonian with analytic derivative callbacks."""
    name: str
    kinetic_fn: DerivativeFn
    potential_fn: DerivativeFn
    natural_bounds: Bounds
    natural_periodic: Tuple[bool, bool] = (False, False)
    parameters: Dict[str, float] = field(default_factory=dict)
    hermite: Optional[HermiteReduction] = None

    def kinetic(self, k: np.ndarray, order: int = 0) -> np.ndarray:
        """d^order K / dk^order at k."""
        if order < 0:
            raise ModelError(f"derivative order must be non-negative, got {order}")
        return self.kinetic_fn(np.asarray(k, dtype=float), order)

    def potential(self, x: np.ndarray, order: int = 0) -> np.ndarray:
        """d^order V / dx^order at x."""
        if order < 0:
            raise ModelError(f"derivative order must be non-negative, got {order}")
        return self.potential_fn(np.asarray(x, dtype=float), order)

    def hamiltonian(self, x: np.ndarray, k: np.ndarray) -> np.ndarray:
        return self.kinetic(k) + self.potential(x)

    def velocity(self, x: np.ndarray, k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Hamiltonian vector field (dK/dk, -dV/dx), broadcast to a common shape."""
        vx = self.kinetic(k, 1)
        vk = -self.potential(x, 1)
        return np.broadcast_arrays(vx, vk)

    def natural_grid(self, points: int) -> PhaseGrid:
        """Grid over the model's natural window with ``points`` nodes per axis."""
        return make_grid(self.natural_bounds, (points, points), self.natural_periodic)

    @property
    def nu2(self) -> Optional[float]:
        return self.parameters.get("nu2")


def _cosine_cycle(z: np.ndarray, order: int) -> np.ndarray:
    phase = order % 4
    if phase == 0:
        return np.cos(z)
    if phase == 1:
        return -np.sin(z)
    if phase == 2:
        return -np.cos(z)
    return np.sin(z)


def harper_model(nu2: float) -> SeparableModel:
    """Harper Hamiltonian cos(k) + nu2 cos(x) on the periodic cell [-pi, pi]^2.

    Raises:
        ModelError: if nu2 <= 0
    """
    if not nu2 > 0.0:
        raise ModelError(f"harper model needs nu2 > 0, got {nu2}")
    nu2 = float(nu2)
    return SeparableModel(
        name="harper",
        kinetic_fn=_cosine_cycle,
        potential_fn=lambda x, m: nu2 * _cosine_cycle(x, m),
        natural_bounds=((-np.pi, np.pi), (-np.pi, np.pi)),
        natural_periodic=(True, True),
        parameters={"nu2": nu2},
        hermite=HermiteReduction(
            mu=1j,
            lam=1j,
            kappa=lambda k: 1j * np.sin(k),
            upsilon=lambda x: 1j * nu2 * np.sin(x),
        ),
    )


def _quadratic(z: np.ndarray, order: int) -> np.ndarray:
    if order == 0:
        return 0.5 * z ** 2
    if order == 1:
        return z
    if order == 2:
        return np.ones_like(z)
    return np.zeros_like(z)


def harmonic_model() -> SeparableModel:
    """Harmonic oscillator k^2/2 + x^2/2."""
    return SeparableModel(
        name="harmonic",
        kinetic_fn=_quadratic,
        potential_fn=_quadratic,
        natural_bounds=((-6.0, 6.0), (-6.0, 6.0)),
    )


def _exponential_well(z: np.ndarray, order: int) -> np.ndarray:
    value = (-1.0) ** order * np.exp(-z)
    if order == 0:
        value = value + z
    elif order == 1:
        value = value + 1.0
    return value


def lotka_volterra_model() -> SeparableModel:
    """Lotka-Volterra Hamiltonian x + k + exp(-x) + exp(-k)."""
    return SeparableModel(
        name="lotka_volterra",
        kinetic_fn=_exponential_well,
        potential_fn=_exponential_well,
        natural_bounds=((-1.0, 5.0), (-1.0, 5.0)),
    )


def classical_velocity(model: SeparableModel) -> Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """The classical phase-space velocity (dK/dk, -dV/dx) of a model."""
    return model.velocity


_CATALOG = {
    "harper": harper_model,
    "harmonic": harmonic_model,
    "lotka_volterra": lotka_volterra_model,
}


def get_model(name: str, **params: float) -> SeparableModel:
    """Look up a catalog model by name.

    Args:
        name: harper, harmonic or lotka_volterra (dashes accepted)
        **params: Model parameters, e.g. nu2 for harper

    Raises:
        ModelError: for unknown names or invalid parameters
    """
    key = name.strip().lower().replace("-", "_")
    if key not in _CATALOG:
        raise ModelError(f"unknown model {name!r}; available: {', '.join(sorted(_CATALOG))}")
    try:
        model = _CATALOG[key](**params)
    except TypeError as e:
        raise ModelError(f"invalid parameters for {key}: {e}") from e
    logger.debug("Model created", model=key, **params)
    return model
