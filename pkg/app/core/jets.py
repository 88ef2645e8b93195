"""
Truncated Taylor jets.

A jet of order M at points x is an array of shape (M + 1, *x.shape) holding
the normalized Taylor coefficients c_m = f^(m)(x) / m!. Products and
exponentials of jets give exact high-order derivatives of the Boltzmann
weights exp(-beta V(x)) p(x) from the analytic derivatives of V.
"""
import math
from typing import Callable

import numpy as np


DerivativeFn = Callable[[np.ndarray, int], np.ndarray]


def _factorials(order: int) -> np.ndarray:
    return np.array([float(math.factorial(m)) for m in range(order + 1)])


def _expand(weights: np.ndarray, like: np.ndarray) -> np.ndarray:
    return weights.reshape((-1,) + (1,) * (like.ndim - 1))


def jet_from_derivatives(derivative: DerivativeFn, x: np.ndarray, order: int) -> np.ndarray:
    """Jet of f from a callback ``derivative(x, m) = f^(m)(x)``."""
    x = np.asarray(x, dtype=float)
    raw = np.stack([np.broadcast_to(np.asarray(derivative(x, m), dtype=float), x.shape) for m in range(order + 1)])
    return raw / _expand(_factorials(order), raw)


def jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product (Cauchy convolution of coefficients)."""
    order = min(len(a), len(b)) - 1
    out = np.zeros((order + 1,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]))
    for m in range(order + 1):
        out[m] = np.sum(a[: m + 1] * b[m::-1], axis=0)
    return out


def jet_exp(a: np.ndarray) -> np.ndarray:
    """Jet of exp(f) from the jet of f.

    Uses e_0 = exp(a_0), e_m = (1/m) sum_{j=1..m} j a_j e_{m-j}.
    """
    out = np.empty_like(a)
    out[0] = np.exp(a[0])
    for m in range(1, len(a)):
        j = np.arange(1, m + 1)
        out[m] = np.sum(_expand(j.astype(float), a) * a[1 : m + 1] * out[m - 1 :: -1][:m], axis=0) / m
    return out


def jet_derivatives(jet: np.ndarray) -> np.ndarray:
    """Plain derivatives f^(m)(x) = m! c_m."""
    order = len(jet) - 1
    return jet * _expand(_factorials(order), jet)
