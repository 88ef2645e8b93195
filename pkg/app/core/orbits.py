"""
Classical portraits of the Harper Hamiltonian.

Energies are classified with the open/closed threshold rule and traced by
fixed-step RK4 from a seed found by root bracketing along a coordinate line.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from app.config import get_settings
from app.core.hamiltonians import SeparableModel
from app.errors import ModelError
from app.utils.logger import get_logger


logger = get_logger(__name__)

MIN_SEED_SPEED = 1e-9


@dataclass(frozen=True)
class ClassicalOrbit:
    """A classified constant-energy curve; polyline rows are (x, k) vertices."""
    energy: float
    branch: str
    polyline: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def energy_drift(self, model: SeparableModel) -> float:
        """Largest |H(vertex) - energy| along the polyline."""
        if len(self.polyline) == 0:
            return 0.0
        h = model.hamiltonian(self.polyline[:, 0], self.polyline[:, 1])
        return float(np.max(np.abs(h - self.energy)))

    @property
    def traced_closed(self) -> Optional[bool]:
        """Whether the traced polyline came back to its seed; None when nothing was traced."""
        if len(self.polyline) == 0:
            return None
        return bool(np.array_equal(self.polyline[0], self.polyline[-1]))

    @property
    def agrees_with_branch(self) -> Optional[bool]:
        """Whether the traced shape matches the energy-rule branch."""
        closed = self.traced_closed
        if closed is None:
            return None
        return closed == self.branch.startswith("closed")


def classify_energy(energy: float, nu2: float) -> str:
    """Branch of the Harper level set H = energy.

    empty beyond |energy| > nu2 + 1, open for energy = 0 or 0 < |energy| < nu2 - 1,
    otherwise closed with the family picked by the sign of energy.
    """
    magnitude = abs(energy)
    if magnitude > nu2 + 1.0:
        return "empty"
    if magnitude == 0.0 or (nu2 > 1.0 and magnitude < nu2 - 1.0):
        return "open"
    return "closed_positive" if energy > 0.0 else "closed_negative"


def _seed_lines() -> List[Tuple[str, float]]:
    # (free coordinate, value of the fixed coordinate); the free one runs over [0, pi]
    return [("x", 0.0), ("k", 0.0), ("x", math.pi), ("k", math.pi), ("x", 0.5 * math.pi), ("k", 0.5 * math.pi)]


def find_seed(model: SeparableModel, energy: float) -> Optional[Tuple[float, float]]:
    """First point on H = energy found by bracketing along a coordinate line.

    Seeds at (near) fixed points are skipped.
    """
    for free, fixed in _seed_lines():
        if free == "x":
            point = lambda s: (s, fixed)
        else:
            point = lambda s: (fixed, s)
        f = lambda s: float(model.hamiltonian(*point(s))) - energy
        a, b = 0.0, math.pi
        fa, fb = f(a), f(b)
        if fa * fb > 0.0:
            continue
        root = a if fa == 0.0 else b if fb == 0.0 else brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        x, k = point(root)
        vx, vk = model.velocity(x, k)
        if math.hypot(float(vx), float(vk)) >= MIN_SEED_SPEED:
            return x, k
    return None


def _rk4_step(model: SeparableModel, x: float, k: float, h: float) -> Tuple[float, float]:
    def rhs(x: float, k: float) -> Tuple[float, float]:
        return float(model.kinetic_fn(k, 1)), -float(model.potential_fn(x, 1))

    a1, b1 = rhs(x, k)
    a2, b2 = rhs(x + 0.5 * h * a1, k + 0.5 * h * b1)
    a3, b3 = rhs(x + 0.5 * h * a2, k + 0.5 * h * b2)
    a4, b4 = rhs(x + h * a3, k + h * b3)
    return (
        x + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        k + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    )


def trace_orbit(
    model: SeparableModel,
    seed: Tuple[float, float],
    step: float,
    max_steps: int,
    cell: float = 2.0 * math.pi,
) -> np.ndarray:
    """Integrate the classical flow from a seed.

    Stops when the path returns to the seed (closed), when it has moved a full
    periodic cell along either axis (open), or after ``max_steps``.
    """
    x0, k0 = float(seed[0]), float(seed[1])
    points = [(x0, k0)]
    x, k = x0, k0
    for n in range(1, max_steps + 1):
        xn, kn = _rk4_step(model, x, k, step)
        moved = math.hypot(xn - x, kn - k)
        x, k = xn, kn
        points.append((x, k))
        if n > 10 and math.hypot(x - x0, k - k0) <= moved:
            points.append((x0, k0))
            break
        if abs(x - x0) >= cell or abs(k - k0) >= cell:
            break
    return np.array(points)


def classify_and_trace(model: SeparableModel, energy: float) -> ClassicalOrbit:
    """Classify and trace one Harper level set.

    Args:
        model: Harper model (carries nu2)
        energy: Level-set energy

    Returns:
        ClassicalOrbit with an empty polyline for the empty branch

    Raises:
        ModelError: if the model is not Harper
    """
    if model.name != "harper" or model.nu2 is None:
        raise ModelError("classify_and_trace requires the harper model")
    settings = get_settings()
    nu2 = model.nu2
    branch = classify_energy(energy, nu2)
    if branch == "empty":
        return ClassicalOrbit(energy=energy, branch=branch)

    seed = find_seed(model, energy)
    if seed is None:
        logger.info("No regular seed on level set", energy=energy, nu2=nu2, branch=branch)
        return ClassicalOrbit(energy=energy, branch=branch)

    period = 2.0 * math.pi / math.sqrt(nu2)
    step = period / settings.orbit_steps_per_period
    max_steps = settings.orbit_steps_per_period * settings.orbit_max_periods
    polyline = trace_orbit(model, seed, step, max_steps)
    orbit = ClassicalOrbit(energy=energy, branch=branch, polyline=polyline)
    if not orbit.agrees_with_branch:
        logger.warning(
            "Traced orbit contradicts its energy branch",
            energy=energy, nu2=nu2, branch=branch, traced_closed=orbit.traced_closed,
        )
    logger.debug(
        "Orbit traced",
        energy=energy, nu2=nu2, branch=branch,
        vertices=len(polyline), drift=orbit.energy_drift(model),
    )
    return orbit
