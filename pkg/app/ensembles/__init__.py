"""
Ensembles module.
"""
from .thermal import TdEnsemble, ThermoCurve, thermal_wigner_spec, thermo_curve
from .gaussian import GaussianEnsemble, gaussian_wigner_spec

__all__ = [
    "TdEnsemble",
    "ThermoCurve",
    "thermal_wigner_spec",
    "thermo_curve",
    "GaussianEnsemble",
    "gaussian_wigner_spec",
]
