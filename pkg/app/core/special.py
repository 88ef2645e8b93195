"""
Special functions module.

Thin validated wrappers over scipy.special for the closed forms: modified
Bessel functions I0 and I1, the error function and its scaled complement, and
physicists' Hermite polynomials.
"""
from typing import Union

import numpy as np
from scipy import special as sp

from app.errors import SpecialFunctionRangeError


ArrayLike = Union[float, np.ndarray]

BESSEL_MAX_ARGUMENT = 50.0
HERMITE_MAX_ORDER = 64


def _result(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def bessel_i(order: int, x: ArrayLike) -> ArrayLike:
    """Modified Bessel function of the first kind, I0 or I1.

    Args:
        order: 0 or 1
        x: Argument(s) with |x| <= 50

    Returns:
        I_order(x), same shape as ``x``

    Raises:
        SpecialFunctionRangeError: for other orders or out-of-range arguments
    """
    if order not in (0, 1):
        raise SpecialFunctionRangeError(f"bessel_i supports orders 0 and 1, got {order}")
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > BESSEL_MAX_ARGUMENT):
        raise SpecialFunctionRangeError(
            f"bessel_i argument {float(np.max(np.abs(arr)))!r} exceeds {BESSEL_MAX_ARGUMENT}"
        )
    value = sp.i0(arr) if order == 0 else sp.i1(arr)
    return _result(value, x)


def erf(x: ArrayLike) -> ArrayLike:
    """Error function, odd by construction."""
    arr = np.asarray(x, dtype=float)
    return _result(np.copysign(sp.erf(np.abs(arr)), arr), x)


def scaled_erfc(x: ArrayLike) -> ArrayLike:
    """exp(x^2) * erfc(x), finite for large positive x."""
    arr = np.asarray(x, dtype=float)
    return _result(sp.erfcx(arr), x)


def _check_hermite_order(n: int) -> None:
    if n < 0 or n > HERMITE_MAX_ORDER:
        raise SpecialFunctionRangeError(f"hermite order must lie in [0, {HERMITE_MAX_ORDER}], got {n}")


def hermite(n: int, z: ArrayLike) -> ArrayLike:
    """Physicists' Hermite polynomial H_n(z), n <= 64."""
    _check_hermite_order(n)
    arr = np.asarray(z, dtype=float)
    return _result(sp.eval_hermite(n, arr), z)


def hermite_table(n_max: int, z: ArrayLike) -> np.ndarray:
    """H_0..H_n_max at z by the three-term recurrence.

    Returns:
        Array of shape (n_max + 1, *shape(z))
    """
    _check_hermite_order(n_max)
    arr = np.asarray(z, dtype=float)
    table = np.empty((n_max + 1,) + arr.shape)
    table[0] = 1.0
    if n_max >= 1:
        table[1] = 2.0 * arr
    for n in range(1, n_max):
        table[n + 1] = 2.0 * arr * table[n] - 2.0 * n * table[n - 1]
    return table
