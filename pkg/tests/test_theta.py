import cmath
import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horiforge.coeffs import ExactScalar
from horiforge.forms import ModelAlgebra
from horiforge.series import eval_numeric
from horiforge.theta import (LAWS, InvalidShiftError, SamplingError, ThetaKind, sample_point,
                             theta_derivative_numeric, theta_numeric, theta_prime,
                             theta_series, theta_shifted, theta_shifted_numeric,
                             theta_transform_residual)

F = Fraction
KINDS = list(ThetaKind)
# classical Jacobi index for each kind, argument pi v and nome e^{i pi tau}
CLASSICAL = {ThetaKind.THETA: 1, ThetaKind.THETA1: 2, ThetaKind.THETA2: 4, ThetaKind.THETA3: 3}


def oracle(kind, v, tau, derivative=0):
    mpmath.mp.dps = 30
    val = mpmath.jtheta(CLASSICAL[kind], mpmath.pi * v, mpmath.exp(1j * mpmath.pi * tau),
                        derivative)
    return complex(val) * math.pi ** derivative


@pytest.mark.parametrize("kind", KINDS)
def test_product_matches_classical_sums(kind):
    rng = random.Random(3)
    for _ in range(10):
        v, tau = sample_point(rng)
        assert abs(theta_numeric(kind, v, tau) - oracle(kind, v, tau)) < 1e-12


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("order", [1, 2])
def test_derivatives_match_oracle(kind, order):
    rng = random.Random(4)
    for _ in range(5):
        v, tau = sample_point(rng)
        got = theta_derivative_numeric(kind, v, tau, order)
        assert abs(got - oracle(kind, v, tau, order)) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_series_evaluates_to_numeric(kind):
    s = theta_series(kind, q_order=12, y_window=(-12, 12), exact=False)
    v, tau = 0.11 - 0.05j, 0.03 + 1.1j
    assert abs(eval_numeric(s, v, tau) - theta_numeric(kind, v, tau)) < 1e-12


def test_theta2_half_power_coefficient():
    s = theta_series("theta2", q_order=2, y_window=(-3, 3))
    half = {y: c for q, y, c in s.items() if q == F(1, 2)}
    assert half == {F(-1): -1, F(1): -1}


def test_theta_leading_term():
    s = theta_series("theta", q_order=1, y_window=(-2, 2))
    assert dict(((q, y), c) for q, y, c in s.items()) == {
        (F(1, 8), F(-1, 2)): -ExactScalar.i(), (F(1, 8), F(1, 2)): ExactScalar.i()}


def test_theta_odd_in_v():
    assert theta_numeric("theta", 0, 1j) == 0
    v, tau = 0.2 + 0.1j, 1.2j
    assert abs(theta_numeric("theta", -v, tau) + theta_numeric("theta", v, tau)) < 1e-13


def test_theta_prime_forms():
    s = theta_prime("theta1", "series", q_order=2, y_window=(-3, 3))
    v, tau = 0.1, 1j
    assert abs(eval_numeric(s, v, tau) - theta_prime("theta1", v, tau)) < 1e-6
    with pytest.raises(ValueError):
        theta_prime("theta", "numeric")
    with pytest.raises(ValueError):
        theta_prime("theta", 0.1)


def test_unknown_kind_and_law():
    with pytest.raises(ValueError):
        ThetaKind.parse("theta9")
    with pytest.raises(ValueError):
        theta_transform_residual("theta", "nope", 0.1, 1j)


def test_sampling_region_is_enforced():
    with pytest.raises(SamplingError):
        theta_transform_residual("theta", "S-inversion", 0.1, 3j)


@pytest.mark.parametrize("law", LAWS)
@pytest.mark.parametrize("kind", KINDS)
def test_transformation_laws(kind, law):
    rng = random.Random(hash((kind.value, law)) & 0xFFFF)
    tol = 1e-8 if law.startswith("derivative") else 1e-9
    for _ in range(20):
        v, tau = sample_point(rng)
        assert theta_transform_residual(kind, law, v, tau) < tol


def test_laws_detect_a_wrong_multiplier():
    # T maps theta2 to theta3, not to itself
    v, tau = 0.1 + 0.05j, 1.1j
    assert abs(theta_numeric("theta2", v, tau + 1) - theta_numeric("theta2", v, tau)) > 1e-3


def test_shift_validation():
    M = ModelAlgebra(4)
    a = M.generator("a", 1)
    x = M.generator("x", 2)
    with pytest.raises(InvalidShiftError):
        theta_shifted("theta", M.one() + x)
    with pytest.raises(InvalidShiftError):
        theta_shifted("theta", a)


@pytest.mark.parametrize("kind", KINDS)
def test_shifted_series_matches_numeric(kind):
    M = ModelAlgebra(4)
    x = M.generator("x", 2)
    y = M.generator("y", 2)
    nu = x * F(1, 3) - y
    s = theta_shifted(kind, nu, q_order=10, y_window=(-10, 10), exact=False)
    v, tau = 0.07 + 0.02j, 1.05j
    got = eval_numeric(s, v, tau)
    want = theta_shifted_numeric(kind, nu, v, tau)
    assert (got - want).max_abs() < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.4, 0.4), st.floats(-0.2, 0.2), st.floats(0.8, 1.4))
def test_quasi_periodicity_property(x, yv, t):
    v, tau = complex(x, yv), complex(0, t)
    for kind in KINDS:
        assert theta_transform_residual(kind, "z+1", v, tau) < 1e-9
        assert theta_transform_residual(kind, "z+tau", v, tau) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.2, 0.2), st.floats(1e-4, 1e-3))
def test_derivative_against_finite_difference(x, yv, h):
    v, tau = complex(x, yv), 1.1j
    for kind in KINDS:
        fd = (theta_numeric(kind, v + h, tau) - theta_numeric(kind, v - h, tau)) / (2 * h)
        assert abs(fd - theta_derivative_numeric(kind, v, tau)) < 1e-5 * (1 + abs(fd))
