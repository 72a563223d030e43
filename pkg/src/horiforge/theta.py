"""The four Jacobi theta functions as product expansions.

With ``q = e^{2 pi i tau}``::

    theta(v)  = 2 q^{1/8} sin(pi v) prod_j (1-q^j)(1-e^{2 pi i v} q^j)(1-e^{-2 pi i v} q^j)
    theta1(v) = 2 q^{1/8} cos(pi v) prod_j (1-q^j)(1+e^{2 pi i v} q^j)(1+e^{-2 pi i v} q^j)
    theta2(v) = prod_j (1-q^j)(1-e^{2 pi i v} q^{j-1/2})(1-e^{-2 pi i v} q^{j-1/2})
    theta3(v) = prod_j (1-q^j)(1+e^{2 pi i v} q^{j-1/2})(1+e^{-2 pi i v} q^{j-1/2})

Series use ``y = e^{-2 pi i v}``.  Numeric values come from the finite
product; numeric derivatives come from differentiating the series term by
term and summing at the point.
"""
from __future__ import annotations

import cmath
import enum
import math
import random
from fractions import Fraction
from functools import lru_cache

from .coeffs import ExactScalar
from .forms import Form
from .series import QYSeries, Q_UNIT, Y_UNIT, DEFAULT_Q_ORDER, DEFAULT_Y_WINDOW, dz

# q-order used for numeric evaluation of derivatives; enough for 1e-12 on the
# sampling region (Im tau >= 0.4, |Im v| <= 1.7).
NUMERIC_Q_ORDER = 48


class ThetaKind(enum.Enum):
    THETA = "theta"
    THETA1 = "theta1"
    THETA2 = "theta2"
    THETA3 = "theta3"

    @classmethod
    def parse(cls, name: "str | ThetaKind") -> "ThetaKind":
        if isinstance(name, ThetaKind):
            return name
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown theta kind {name!r}; expected one of "
                             f"{[k.value for k in cls]}") from None


class InvalidShiftError(ValueError):
    pass


class SamplingError(ValueError):
    pass


LAWS = ("T-shift", "S-inversion", "z+1", "z+tau",
        "derivative-T", "derivative-S", "derivative-z+1", "derivative-z+tau")


# -- series ----------------------------------------------------------------

def _y_span(q_max_units: int) -> int:
    """Bound on |y-exponent| (in halves) reachable below the q-bound."""
    n = Fraction(q_max_units, Q_UNIT)
    return Y_UNIT * (int(math.isqrt(int(2 * n) + 1)) + 3)


def _product_series(kind: ThetaKind, q_max: int) -> QYSeries:
    span = _y_span(q_max)

    def mk(terms):
        return QYSeries(terms, q_max, -span, span)

    one = Fraction(1)
    out = mk({(0, 0): one})
    j_max = q_max // Q_UNIT + 1
    sign = -1 if kind in (ThetaKind.THETA, ThetaKind.THETA2) else 1
    half = kind in (ThetaKind.THETA2, ThetaKind.THETA3)
    for j in range(1, j_max + 1):
        out = out * mk({(0, 0): one, (j * Q_UNIT, 0): -one})
        qe = j * Q_UNIT - (Q_UNIT // 2 if half else 0)
        # e^{2 pi i v} -> y^{-1}, e^{-2 pi i v} -> y
        out = out * mk({(0, 0): one, (qe, -Y_UNIT): Fraction(sign)})
        out = out * mk({(0, 0): one, (qe, Y_UNIT): Fraction(sign)})
    if kind is ThetaKind.THETA:
        # 2 sin(pi v) = -i (y^{-1/2} - y^{1/2})
        mi = ExactScalar({(0, 1): Fraction(-1)})
        pre = mk({(1, -1): mi, (1, 1): -mi})
        out = pre * out
    elif kind is ThetaKind.THETA1:
        pre = mk({(1, -1): one, (1, 1): one})
        out = pre * out
    return out


@lru_cache(maxsize=64)
def _theta_series_cached(kind: ThetaKind, q_max: int, exact: bool) -> QYSeries:
    # Expand one q-step further so the q^{1/8} prefactor does not cost precision.
    s = _product_series(kind, q_max)
    if not exact:
        s = s.map_coefficients(complex)
    return s


def theta_series(kind, q_order=DEFAULT_Q_ORDER, y_window=DEFAULT_Y_WINDOW,
                 exact: bool = True) -> QYSeries:
    """Expansion of a theta function through ``q^{q_order}``."""
    kind = ThetaKind.parse(kind)
    q_max = int(Fraction(q_order) * Q_UNIT)
    if q_max < Q_UNIT:
        raise ValueError("q_order must be at least 1")
    full = _theta_series_cached(kind, q_max, exact)
    return full.restrict(y_window=y_window)


@lru_cache(maxsize=64)
def _derivative_series(kind: ThetaKind, order: int, q_max: int) -> QYSeries:
    s = _theta_series_cached(kind, q_max, False)
    for _ in range(order):
        s = dz(s, exact=False)
    return s


@lru_cache(maxsize=64)
def _derivative_arrays(kind: ThetaKind, order: int, q_max: int):
    s = _derivative_series(kind, order, q_max)
    return [(Fraction(qe, Q_UNIT), Fraction(ye, Y_UNIT), complex(c))
            for (qe, ye), c in sorted(s.terms.items())]


def theta_prime_series(kind, q_order=DEFAULT_Q_ORDER, y_window=DEFAULT_Y_WINDOW,
                       exact: bool = True) -> QYSeries:
    """``d/dv`` of :func:`theta_series`, coefficient by coefficient."""
    return dz(theta_series(kind, q_order, y_window, exact), exact=exact)


# -- numerics --------------------------------------------------------------

def theta_numeric(kind, v: complex, tau: complex, n_factors: int = 40) -> complex:
    """Finite product with ``n_factors`` factors of each type."""
    kind = ThetaKind.parse(kind)
    q = cmath.exp(2j * math.pi * tau)
    e = cmath.exp(2j * math.pi * v)
    ei = 1 / e
    if kind is ThetaKind.THETA:
        if v == 0:
            return 0j
        pre = 2 * cmath.exp(2j * math.pi * tau / 8) * cmath.sin(math.pi * v)
        sign, shift = -1, 0.0
    elif kind is ThetaKind.THETA1:
        pre = 2 * cmath.exp(2j * math.pi * tau / 8) * cmath.cos(math.pi * v)
        sign, shift = 1, 0.0
    elif kind is ThetaKind.THETA2:
        pre, sign, shift = 1, -1, 0.5
    else:
        pre, sign, shift = 1, 1, 0.5
    qhalf = cmath.exp(-2j * math.pi * tau * shift)
    prod = complex(pre)
    qj = 1 + 0j
    for _ in range(n_factors):
        qj *= q
        qs = qj * qhalf
        prod *= (1 - qj) * (1 + sign * e * qs) * (1 + sign * ei * qs)
    return prod


def theta_derivative_numeric(kind, v: complex, tau: complex, order: int = 1,
                             q_order: int = NUMERIC_Q_ORDER) -> complex:
    """``order``-th v-derivative, summed from the differentiated series."""
    kind = ThetaKind.parse(kind)
    terms = _derivative_arrays(kind, order, q_order * Q_UNIT)
    two_pi_i = 2j * math.pi
    q_cache: dict = {}
    y_cache: dict = {}
    total = 0j
    for rq, ry, c in terms:
        qf = q_cache.get(rq)
        if qf is None:
            qf = q_cache[rq] = cmath.exp(two_pi_i * tau * float(rq))
        yf = y_cache.get(ry)
        if yf is None:
            yf = y_cache[ry] = cmath.exp(-two_pi_i * v * float(ry))
        total += c * qf * yf
    return total


def theta_prime(kind, representation, tau: complex | None = None, **kwargs):
    """v-derivative of a theta function.

    ``representation`` is either the string ``"series"`` (returns the
    differentiated series; keyword arguments go to :func:`theta_prime_series`)
    or a complex point ``v`` (requires ``tau``).
    """
    if isinstance(representation, str):
        if representation != "series":
            raise ValueError("representation must be 'series' or a complex point")
        return theta_prime_series(kind, **kwargs)
    if tau is None:
        raise ValueError("numeric representation needs tau")
    return theta_derivative_numeric(kind, representation, tau, 1, **kwargs)


# -- nilpotent shifts ------------------------------------------------------

def check_shift(nu: Form) -> None:
    if nu.scalar_part() != 0:
        raise InvalidShiftError("shift has a nonzero scalar part")
    if any(p % 2 for p in nu.degrees()):
        raise InvalidShiftError("shift has odd-degree components")


def _powers_over_factorial(nu: Form) -> list[Form]:
    """``[1, nu, nu^2/2!, ...]`` up to the last nonzero power."""
    out = [nu.model.one()]
    k = 1
    while True:
        nxt = out[-1] * nu / k
        if nxt.is_zero():
            return out
        out.append(nxt)
        k += 1


def theta_shifted(kind, nu: Form, q_order=DEFAULT_Q_ORDER, y_window=DEFAULT_Y_WINDOW,
                  exact: bool = True) -> QYSeries:
    """Taylor expansion ``sum_k theta^{(k)}(z) nu^k / k!`` for nilpotent even ``nu``."""
    check_shift(nu)
    s = theta_series(kind, q_order, y_window, exact)
    total = None
    for nk in _powers_over_factorial(nu):
        term = s * nk
        total = term if total is None else total + term
        s = dz(s, exact=exact)
    return total


def theta_shifted_numeric(kind, nu: Form, v: complex, tau: complex) -> Form:
    """Numeric counterpart of :func:`theta_shifted` at the point ``(v, tau)``."""
    check_shift(nu)
    total = None
    for k, nk in enumerate(_powers_over_factorial(nu)):
        if k == 0:
            val = theta_numeric(kind, v, tau)
        else:
            val = theta_derivative_numeric(kind, v, tau, k)
        term = nk.map_coefficients(complex) * val
        total = term if total is None else total + term
    return total


# -- transformation laws ---------------------------------------------------

_T_IMAGE = {ThetaKind.THETA: ThetaKind.THETA, ThetaKind.THETA1: ThetaKind.THETA1,
            ThetaKind.THETA2: ThetaKind.THETA3, ThetaKind.THETA3: ThetaKind.THETA2}
_S_IMAGE = {ThetaKind.THETA: ThetaKind.THETA, ThetaKind.THETA1: ThetaKind.THETA2,
            ThetaKind.THETA2: ThetaKind.THETA1, ThetaKind.THETA3: ThetaKind.THETA3}
_Z1_SIGN = {ThetaKind.THETA: -1, ThetaKind.THETA1: -1,
            ThetaKind.THETA2: 1, ThetaKind.THETA3: 1}
_ZTAU_SIGN = {ThetaKind.THETA: -1, ThetaKind.THETA1: 1,
              ThetaKind.THETA2: -1, ThetaKind.THETA3: 1}
_EIGHTH = cmath.exp(1j * math.pi / 4)


def _t_factor(kind: ThetaKind) -> complex:
    return _EIGHTH if kind in (ThetaKind.THETA, ThetaKind.THETA1) else 1


def _s_factor(kind: ThetaKind, tau: complex, v: complex) -> complex:
    c = cmath.sqrt(tau / 1j) * cmath.exp(1j * math.pi * tau * v * v)
    return c / 1j if kind is ThetaKind.THETA else c


def law_sides(kind, law: str, v: complex, tau: complex) -> tuple[complex, complex]:
    """Left- and right-hand sides of a transformation law at ``(v, tau)``."""
    kind = ThetaKind.parse(kind)
    th = theta_numeric
    dth = theta_derivative_numeric
    two_pi_i = 2j * math.pi
    if law == "T-shift":
        return th(kind, v, tau + 1), _t_factor(kind) * th(_T_IMAGE[kind], v, tau)
    if law == "derivative-T":
        return dth(kind, v, tau + 1), _t_factor(kind) * dth(_T_IMAGE[kind], v, tau)
    if law == "S-inversion":
        return th(kind, v, -1 / tau), _s_factor(kind, tau, v) * th(_S_IMAGE[kind], tau * v, tau)
    if law == "derivative-S":
        img = _S_IMAGE[kind]
        rhs = _s_factor(kind, tau, v) * (two_pi_i * tau * v * th(img, tau * v, tau)
                                         + tau * dth(img, tau * v, tau))
        return dth(kind, v, -1 / tau), rhs
    if law == "z+1":
        return th(kind, v + 1, tau), _Z1_SIGN[kind] * th(kind, v, tau)
    if law == "derivative-z+1":
        return dth(kind, v + 1, tau), _Z1_SIGN[kind] * dth(kind, v, tau)
    e = _ZTAU_SIGN[kind] * cmath.exp(-1j * math.pi * (tau + 2 * v))
    if law == "z+tau":
        return th(kind, v + tau, tau), e * th(kind, v, tau)
    if law == "derivative-z+tau":
        return dth(kind, v + tau, tau), e * (dth(kind, v, tau) - two_pi_i * th(kind, v, tau))
    raise ValueError(f"unknown law {law!r}; expected one of {LAWS}")


def _image_tau(law: str, tau: complex) -> complex:
    if law.endswith("S") or law == "S-inversion":
        return -1 / tau
    if law.endswith("T") or law == "T-shift":
        return tau + 1
    return tau


def theta_transform_residual(kind, law: str, v: complex, tau: complex) -> float:
    """``|LHS - RHS|`` of the named law at ``(v, tau)``."""
    if law not in LAWS:
        raise ValueError(f"unknown law {law!r}; expected one of {LAWS}")
    if tau.imag <= 0.4 or _image_tau(law, tau).imag <= 0.4:
        raise SamplingError(f"tau={tau} or its image has Im <= 0.4")
    lhs, rhs = law_sides(kind, law, v, tau)
    return abs(lhs - rhs)


def sample_point(rng: random.Random) -> tuple[complex, complex]:
    """Draw ``(v, tau)`` from the region where all laws are well conditioned."""
    t = rng.uniform(0.8, 1.25)
    ang = rng.uniform(-0.2, 0.2)
    tau = 1j * t * cmath.exp(1j * ang)
    v = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3))
    return v, tau
