"""
Wigner flow toolkit.
"""
from .config import get_settings, Settings
from .errors import (
    WignerFlowError,
    GridError,
    SpecialFunctionRangeError,
    ModelError,
    SeriesError,
    VelocityUndefinedError,
    CorrectionRegimeError,
)

__all__ = [
    "get_settings",
    "Settings",
    "WignerFlowError",
    "GridError",
    "SpecialFunctionRangeError",
    "ModelError",
    "SeriesError",
    "VelocityUndefinedError",
    "CorrectionRegimeError",
]
