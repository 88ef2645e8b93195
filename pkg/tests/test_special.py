"""Tests for the special-function wrappers against independent series."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.special import bessel_i, erf, hermite, hermite_table, scaled_erfc
from app.errors import SpecialFunctionRangeError


def bessel_series(order, x, terms=80):
    """I_order(x) = sum (x/2)^(2m+order) / (m! (m+order)!)."""
    half = x / 2.0
    return sum(half ** (2 * m + order) / (math.factorial(m) * math.factorial(m + order)) for m in range(terms))


def erf_maclaurin(x, terms=40):
    return 2.0 / math.sqrt(math.pi) * sum(
        (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1)) for n in range(terms)
    )


def hermite_by_recurrence(n, z):
    prev, cur = 1.0, 2.0 * z
    if n == 0:
        return prev
    for m in range(1, n):
        prev, cur = cur, 2.0 * z * cur - 2.0 * m * prev
    return cur


@pytest.mark.parametrize("order", [0, 1])
@pytest.mark.parametrize("x", [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
def test_bessel_matches_power_series(order, x):
    assert bessel_i(order, x) == pytest.approx(bessel_series(order, x), rel=1e-13, abs=1e-300)


def test_bessel_known_values():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(1, 0.0) == 0.0
    assert bessel_i(0, 1.0) == pytest.approx(1.2660658777520082, rel=1e-15)


def test_bessel_is_vectorized():
    x = np.array([[0.5, 1.0], [2.0, 3.0]])
    values = bessel_i(0, x)
    assert values.shape == (2, 2)
    assert values[1, 0] == pytest.approx(bessel_series(0, 2.0), rel=1e-13)


@pytest.mark.parametrize("order, x", [(2, 1.0), (-1, 1.0), (0, 50.5), (1, np.array([1.0, -60.0]))])
def test_bessel_rejects_out_of_range(order, x):
    with pytest.raises(SpecialFunctionRangeError):
        bessel_i(order, x)


@pytest.mark.parametrize("x", [0.0, 0.05, 0.3, 0.5, 1.0, 1.5, 2.0])
def test_erf_matches_maclaurin(x):
    assert erf(x) == pytest.approx(erf_maclaurin(x), rel=1e-13, abs=1e-16)


@given(st.floats(-30.0, 30.0, allow_nan=False))
@settings(max_examples=200)
def test_erf_is_odd(x):
    assert erf(-x) == -erf(x)
    assert abs(erf(x)) <= 1.0


def test_scaled_erfc_is_finite_in_the_tail():
    x = 30.0
    asymptotic = (1.0 - 1.0 / (2.0 * x ** 2) + 3.0 / (4.0 * x ** 4)) / (x * math.sqrt(math.pi))
    assert scaled_erfc(x) == pytest.approx(asymptotic, rel=1e-7)
    assert scaled_erfc(0.0) == pytest.approx(1.0, rel=1e-15)


def test_hermite_low_orders():
    z = np.linspace(-2.0, 2.0, 9)
    np.testing.assert_allclose(hermite(2, z), 4 * z ** 2 - 2, atol=1e-12)
    np.testing.assert_allclose(hermite(3, z), 8 * z ** 3 - 12 * z, atol=1e-12)
    assert hermite(0, 0.7) == 1.0


@pytest.mark.parametrize("n", [0, 1, 5, 12, 25, 40])
def test_hermite_table_matches_scalar_recurrence(n):
    z = np.array([-1.3, -0.2, 0.0, 0.4, 2.1])
    table = hermite_table(n, z)
    assert table.shape == (n + 1, 5)
    expected = np.array([hermite_by_recurrence(n, v) for v in z])
    np.testing.assert_allclose(table[n], expected, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(table[n], hermite(n, z), rtol=1e-10, atol=1e-10 * np.max(np.abs(expected)))


@given(st.integers(1, 30), st.floats(-3.0, 3.0, allow_nan=False))
@settings(max_examples=100)
def test_hermite_three_term_recurrence(n, z):
    table = hermite_table(n + 1, z)
    scale = max(1.0, abs(2.0 * z * table[n]), abs(2.0 * n * table[n - 1]))
    assert table[n + 1] - 2.0 * z * table[n] + 2.0 * n * table[n - 1] == pytest.approx(0.0, abs=1e-12 * scale)


@given(st.integers(0, 20), st.floats(-3.0, 3.0, allow_nan=False))
@settings(max_examples=100)
def test_hermite_parity(n, z):
    assert hermite(n, -z) == pytest.approx((-1) ** n * hermite(n, z), rel=1e-12, abs=1e-12)


def test_hermite_rejects_high_orders():
    with pytest.raises(SpecialFunctionRangeError):
        hermite(65, 0.1)
    with pytest.raises(SpecialFunctionRangeError):
        hermite_table(70, 0.1)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("s", [0.3, 0.7])
def test_hermite_table_reproduces_odd_generating_function(gamma, s):
    zeta = np.linspace(-1.5, 1.5, 11)
    table = hermite_table(63, gamma * zeta)
    odd = np.arange(1, 64, 2)
    weights = np.array([s ** n / math.factorial(n) for n in odd])
    series = np.tensordot(weights, table[odd], axes=1)
    np.testing.assert_allclose(series, np.sinh(2.0 * s * gamma * zeta) * np.exp(-s ** 2), rtol=1e-12, atol=1e-14)
