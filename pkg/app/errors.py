"""
Exception hierarchy for the Wigner flow toolkit.
"""


class WignerFlowError(Exception):
    """Base class for all toolkit errors."""


class GridError(WignerFlowError, ValueError):
    """Invalid grid window, derivative order, polyline or non-finite field value."""


class SpecialFunctionRangeError(WignerFlowError, ValueError):
    """Special function evaluated outside its validated range."""


class ModelError(WignerFlowError, ValueError):
    """Invalid Hamiltonian model or model lacking a required structure."""


class SeriesError(WignerFlowError, ValueError):
    """Truncation policy incompatible with the supplied Wigner function."""


class VelocityUndefinedError(WignerFlowError, ArithmeticError):
    """Quantum velocity requested where the Wigner function is (nearly) zero."""


class CorrectionRegimeError(WignerFlowError, ArithmeticError):
    """O(hbar^2) corrected partition function is no longer positive."""
