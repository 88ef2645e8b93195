"""
Shared fixtures.
"""
import math

import numpy as np
import pytest

from app.config import get_settings
from app.core.grid import make_grid


@pytest.fixture
def small_settings(monkeypatch):
    """Coarse grids so field commands stay fast."""
    monkeypatch.setenv("WIGNER_FLOW_GRID_POINTS", "33")
    monkeypatch.setenv("WIGNER_FLOW_QUADRATURE_POINTS", "129")
    get_settings.cache_clear()
    yield get_settings()
    get_settings.cache_clear()


@pytest.fixture
def periodic_cell():
    def build(points: int = 129):
        return make_grid(((-math.pi, math.pi), (-math.pi, math.pi)), (points, points), (True, True))
    return build


@pytest.fixture
def open_square():
    def build(half: float = math.pi, points: int = 101):
        return make_grid(((-half, half), (-half, half)), (points, points))
    return build


@pytest.fixture
def lattice():
    values = np.array([-math.pi / 2, -math.pi / 4, 0.0, math.pi / 4, math.pi / 2])
    return values[:, None], values[None, :]
