"""
Core module.
"""
from .grid import PhaseGrid, ScalarField, VectorField, make_grid, evaluate_field, evaluate_vector_field
from .hamiltonians import SeparableModel, get_model, harper_model, harmonic_model, lotka_volterra_model
from .orbits import ClassicalOrbit, classify_and_trace
from .series import TruncationPolicy, WignerFunctionSpec

__all__ = [
    "PhaseGrid",
    "ScalarField",
    "VectorField",
    "make_grid",
    "evaluate_field",
    "evaluate_vector_field",
    "SeparableModel",
    "get_model",
    "harper_model",
    "harmonic_model",
    "lotka_volterra_model",
    "ClassicalOrbit",
    "classify_and_trace",
    "TruncationPolicy",
    "WignerFunctionSpec",
]
