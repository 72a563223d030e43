import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horiforge.coeffs import ExactScalar, NotInvertibleError
from horiforge.forms import ModelAlgebra
from horiforge.series import (QYSeries, dz, eval_numeric, series_exp, series_inv,
                              series_log1p, series_mul)

F = Fraction


def S(terms, q_order=6, y_window=(-6, 6)):
    return QYSeries.from_terms(terms, q_order, y_window)


def test_telescoping_product():
    a = S({(0, 0): 1, (1, 1): -1})
    b = S({(0, 0): 1, (1, 1): 1, (2, 2): 1})
    assert series_mul(a, b) == S({(0, 0): 1, (3, 3): -1})


def test_half_powers_of_y():
    h = S({(0, F(1, 2)): 1})
    assert h * h == S({(0, 1): 1})


def test_geometric_inverse():
    inv = series_inv(S({(0, 0): 1, (1, 1): -1}))
    assert inv == S({(k, k): 1 for k in range(7)})


def test_inverse_of_sine_like_series():
    a = S({(0, F(-1, 2)): 1, (0, F(1, 2)): -1})
    inv = series_inv(a)
    # y^{1/2} (1 + y + y^2 + ...) up to the window
    expected = S({(0, F(1, 2) + k): 1 for k in range(6)})
    assert inv.restrict(y_window=(-6, 5)) == expected.restrict(y_window=(-6, 5))
    assert inv.truncated
    back = (a * inv).restrict(y_window=(-6, 5))
    assert back == S({(0, 0): 1}).restrict(y_window=(-6, 5))


def test_inverse_with_nilpotent_coefficient():
    M = ModelAlgebra(4)
    f = M.generator("f", 2)
    a = QYSeries.monomial(M.one() + f)
    inv = series_inv(a)
    assert inv.coefficient(0, 0) == M.one() - f + f * f


def test_inverse_needs_a_leading_unit():
    with pytest.raises((NotInvertibleError, ZeroDivisionError)):
        series_inv(QYSeries())


def test_inverse_precision_drops_by_leading_power():
    a = S({(F(1, 8), 0): 1, (1, 1): 1})
    inv = series_inv(a)
    assert inv.q_order == 6 - F(2, 8)
    assert (a * inv).restrict(q_order=5) == S({(0, 0): 1}).restrict(q_order=5)


def test_exp_and_log():
    assert series_exp(QYSeries()) == QYSeries.monomial(F(1))
    lg = series_log1p(S({(1, 1): 1}, q_order=4))
    assert lg == S({(k, k): F((-1) ** (k + 1), k) for k in range(1, 5)}, q_order=4)


def test_exp_log_round_trip_nilpotent():
    M = ModelAlgebra(6)
    f = M.generator("f", 2)
    g = M.generator("g", 2)
    a = QYSeries.monomial(f + g * F(1, 3), q_order=2)
    back = series_exp(series_log1p(a))
    assert back == QYSeries.monomial(M.one(), q_order=2) + a


def test_dz_examples():
    h = QYSeries.monomial(F(1), y=F(1, 2))
    assert dz(h) == QYSeries.monomial(ExactScalar({(1, 1): F(-1)}), y=F(1, 2))
    assert dz(QYSeries.monomial(F(5))).is_zero()
    factor = ExactScalar({(-1, 1): F(-1, 2)})  # -i/(2 pi)
    for m in range(-8, 9):
        ym = QYSeries.monomial(F(1), y=m)
        assert dz(ym) * factor == QYSeries.monomial(F(-m), y=m)


def test_eval_examples():
    a = S({(0, 0): 1, (1, 1): -1})
    assert abs(eval_numeric(a, 0, 1j) - (1 - math.exp(-2 * math.pi))) < 1e-15
    z = 0.13 - 0.07j
    y = S({(0, 1): 1})
    assert abs(eval_numeric(y, z, 1j) - cmath.exp(-2j * math.pi * z)) < 1e-15


def test_window_drop_sets_flag():
    a = S({(0, 4): 1}, y_window=(-6, 6))
    assert not a.truncated
    assert (a * a).truncated


# -- properties ---------------------------------------------------------------

exps_q = st.integers(0, 24).map(lambda k: F(k, 8))
exps_y = st.integers(-6, 6).map(lambda k: F(k, 2))
coeff = st.fractions(min_value=-3, max_value=3, max_denominator=3)


@st.composite
def series(draw, max_terms=5):
    n = draw(st.integers(1, max_terms))
    terms = {}
    for _ in range(n):
        terms[(draw(exps_q), draw(exps_y))] = draw(coeff)
    return QYSeries.from_terms(terms, q_order=3, y_window=(-20, 20))


def _same_to_precision(x, y):
    n = min(x.q_order, y.q_order)
    return x.restrict(q_order=n) == y.restrict(q_order=n)


@settings(max_examples=100, deadline=None)
@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    # truncated series are a ring only up to the common precision
    assert _same_to_precision((a * b) * c, a * (b * c))
    assert _same_to_precision(a * (b + c), a * b + a * c)
    assert a * b == b * a


@settings(max_examples=100, deadline=None)
@given(series(), series())
def test_ring_axioms_float(a, b):
    fa, fb = a.map_coefficients(complex), b.map_coefficients(complex)
    diff = (fa * fb) - (a * b).map_coefficients(complex)
    assert diff.max_abs() < 1e-12


@st.composite
def upward_series(draw):
    """Non-negative y-exponents: dropped high-y terms can never come back down."""
    terms = {(draw(exps_q), draw(st.integers(0, 6).map(lambda k: F(k, 2)))): draw(coeff)
             for _ in range(draw(st.integers(1, 5)))}
    return QYSeries.from_terms(terms, q_order=3, y_window=(-20, 20))


@settings(max_examples=100, deadline=None)
@given(upward_series())
def test_inverse_round_trip(a):
    if a.is_zero():
        return
    prod = (a * series_inv(a)).restrict(y_window=(-8, 8))
    assert prod == QYSeries.monomial(F(1), q_order=prod.q_order, y_window=(-8, 8))


@settings(max_examples=100, deadline=None)
@given(series(), series())
def test_dz_is_a_derivation(a, b):
    assert _same_to_precision(dz(a * b), dz(a) * b + a * dz(b))


low_q = st.integers(0, 8).map(lambda k: F(k, 8))


@st.composite
def short_series(draw):
    terms = {(draw(low_q), draw(exps_y)): draw(coeff) for _ in range(draw(st.integers(1, 4)))}
    return QYSeries.from_terms(terms, q_order=3, y_window=(-20, 20))


@settings(max_examples=60, deadline=None)
@given(short_series(), short_series(), st.floats(-0.3, 0.3), st.floats(-0.2, 0.2))
def test_eval_is_multiplicative(a, b, x, yv):
    # q-exponents stay <= 1, so nothing is dropped from the product
    z, tau = complex(x, yv), 1.3j
    lhs = eval_numeric(a * b, z, tau)
    rhs = eval_numeric(a, z, tau) * eval_numeric(b, z, tau)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))
