"""Truncated bivariate Laurent series in ``q = e^{2 pi i tau}`` and ``y = e^{-2 pi i z}``.

Exponents are kept as integers in fixed units: eighths for ``q`` and halves
for ``y``.  ``q_max`` is the precision bound (terms above it are unknown and
dropped); ``[y_min, y_max]`` is a window, and ``truncated`` records that some
operation discarded a term outside it.

Coefficients may be scalars (``Fraction``, :class:`ExactScalar`, ``complex``)
or :class:`~horiforge.forms.Form` objects.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Callable

from .coeffs import ExactScalar, NotInvertibleError, is_scalar
from .forms import Form

Q_UNIT = 8
Y_UNIT = 2
DEFAULT_Q_ORDER = 16
DEFAULT_Y_WINDOW = (-8, 8)


class DivergentArgumentError(ValueError):
    pass


def _is_zero(c) -> bool:
    if isinstance(c, Form):
        return not c.terms
    return c == 0


def _q_units(r) -> int:
    v = Fraction(r) * Q_UNIT
    if v.denominator != 1:
        raise ValueError(f"q-exponent {r} is not a multiple of 1/{Q_UNIT}")
    return int(v)


def _y_units(r) -> int:
    v = Fraction(r) * Y_UNIT
    if v.denominator != 1:
        raise ValueError(f"y-exponent {r} is not a multiple of 1/{Y_UNIT}")
    return int(v)


def _coeff_is_float(c) -> bool:
    if isinstance(c, Form):
        return any(_coeff_is_float(v) for v in c.terms.values())
    return isinstance(c, (float, complex))


class QYSeries:
    """Immutable truncated series; see module docstring for the conventions."""

    __slots__ = ("terms", "q_max", "y_min", "y_max", "truncated")

    def __init__(self, terms: dict | None = None, q_max: int = DEFAULT_Q_ORDER * Q_UNIT,
                 y_min: int = DEFAULT_Y_WINDOW[0] * Y_UNIT,
                 y_max: int = DEFAULT_Y_WINDOW[1] * Y_UNIT, truncated: bool = False):
        self.q_max = q_max
        self.y_min = y_min
        self.y_max = y_max
        kept = {}
        for (qe, ye), c in (terms or {}).items():
            if qe > q_max or _is_zero(c):
                continue
            if ye < y_min or ye > y_max:
                truncated = True
                continue
            kept[(qe, ye)] = c
        self.terms = kept
        self.truncated = truncated

    # -- constructors -----------------------------------------------------

    @classmethod
    def monomial(cls, coeff, q=0, y=0, q_order=DEFAULT_Q_ORDER,
                 y_window=DEFAULT_Y_WINDOW) -> "QYSeries":
        return cls({(_q_units(q), _y_units(y)): coeff}, _q_units(q_order),
                   _y_units(y_window[0]), _y_units(y_window[1]))

    @classmethod
    def from_terms(cls, terms: dict, q_order=DEFAULT_Q_ORDER,
                   y_window=DEFAULT_Y_WINDOW) -> "QYSeries":
        """Build from ``{(q_exponent, y_exponent): coeff}`` with rational exponents."""
        raw = {(_q_units(a), _y_units(b)): c for (a, b), c in terms.items()}
        return cls(raw, _q_units(q_order), _y_units(y_window[0]), _y_units(y_window[1]))

    def like(self, terms: dict, truncated: bool | None = None) -> "QYSeries":
        return QYSeries(terms, self.q_max, self.y_min, self.y_max,
                        self.truncated if truncated is None else truncated)

    # -- inspection -------------------------------------------------------

    @property
    def q_order(self) -> Fraction:
        return Fraction(self.q_max, Q_UNIT)

    @property
    def y_window(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.y_min, Y_UNIT), Fraction(self.y_max, Y_UNIT)

    def coefficient(self, q=0, y=0, default=0):
        return self.terms.get((_q_units(q), _y_units(y)), default)

    def items(self):
        """Yield ``(q_exponent, y_exponent, coeff)`` with ``Fraction`` exponents."""
        for (qe, ye), c in sorted(self.terms.items()):
            yield Fraction(qe, Q_UNIT), Fraction(ye, Y_UNIT), c

    def is_zero(self) -> bool:
        return not self.terms

    def min_q(self) -> int | None:
        return min((qe for qe, _ in self.terms), default=None)

    def map_coefficients(self, f: Callable) -> "QYSeries":
        return self.like({k: f(c) for k, c in self.terms.items()})

    def restrict(self, q_order=None, y_window=None) -> "QYSeries":
        q_max = self.q_max if q_order is None else min(self.q_max, _q_units(q_order))
        if y_window is None:
            y_min, y_max = self.y_min, self.y_max
        else:
            y_min = max(self.y_min, _y_units(y_window[0]))
            y_max = min(self.y_max, _y_units(y_window[1]))
        return QYSeries(self.terms, q_max, y_min, y_max, self.truncated)

    def max_abs(self) -> float:
        best = 0.0
        for c in self.terms.values():
            v = c.max_abs() if isinstance(c, Form) else abs(complex(c))
            best = max(best, v)
        return best

    def __repr__(self):
        body = " + ".join(f"({c})*q^{qe}*y^{ye}" for qe, ye, c in self.items()) or "0"
        flag = ", truncated" if self.truncated else ""
        lo, hi = self.y_window
        return f"QYSeries({body}; q<={self.q_order}, y in [{lo}, {hi}]{flag})"

    # -- arithmetic -------------------------------------------------------

    def _combine_params(self, other: "QYSeries"):
        return (min(self.q_max, other.q_max), max(self.y_min, other.y_min),
                min(self.y_max, other.y_max), self.truncated or other.truncated)

    def __add__(self, other):
        if not isinstance(other, QYSeries):
            if is_scalar(other) or isinstance(other, Form):
                other = QYSeries({(0, 0): other}, self.q_max, self.y_min, self.y_max)
            else:
                return NotImplemented
        q_max, y_min, y_max, trunc = self._combine_params(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return QYSeries(out, q_max, y_min, y_max, trunc)

    def __radd__(self, other):
        return self + other

    def __neg__(self):
        return self.like({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QYSeries):
            return series_mul(self, other)
        if is_scalar(other) or isinstance(other, Form):
            return self.like({k: c * other for k, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if is_scalar(other) or isinstance(other, Form):
            return self.like({k: other * c for k, c in self.terms.items()})
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, int):
            other = Fraction(other)
        if is_scalar(other):
            return self.like({k: c / other for k, c in self.terms.items()})
        if isinstance(other, QYSeries):
            return self * series_inv(other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, QYSeries):
            return self.terms == other.terms
        if is_scalar(other):
            if other == 0:
                return not self.terms
            return self.terms == {(0, 0): other}
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]


def series_mul(a: QYSeries, b: QYSeries) -> QYSeries:
    """Convolution product; precision follows the lowest q-exponents present."""
    lo_a, lo_b = a.min_q(), b.min_q()
    if lo_a is None or lo_b is None:
        q_max = min(a.q_max, b.q_max)
    else:
        q_max = min(a.q_max + lo_b, b.q_max + lo_a)
    y_min, y_max = max(a.y_min, b.y_min), min(a.y_max, b.y_max)
    trunc = a.truncated or b.truncated
    b_items = sorted(b.terms.items())
    out: dict = {}
    for (qa, ya), ca in a.terms.items():
        limit = q_max - qa
        for (qb, yb), cb in b_items:
            if qb > limit:
                break
            y = ya + yb
            if y < y_min or y > y_max:
                trunc = True
                continue
            key = (qa + qb, y)
            c = ca * cb
            if key in out:
                out[key] = out[key] + c
            else:
                out[key] = c
    return QYSeries(out, q_max, y_min, y_max, trunc)


def _slices(a: QYSeries) -> dict[int, dict[int, object]]:
    out: dict[int, dict] = {}
    for (qe, ye), c in a.terms.items():
        out.setdefault(qe, {})[ye] = c
    return out


def _slice_mul(s1: dict, s2: dict, y_min: int, y_max: int, flag: list) -> dict:
    out: dict = {}
    for y1, c1 in s1.items():
        for y2, c2 in s2.items():
            y = y1 + y2
            if y < y_min or y > y_max:
                flag[0] = True
                continue
            c = c1 * c2
            out[y] = out[y] + c if y in out else c
    return {y: c for y, c in out.items() if not _is_zero(c)}


def _slice_add(s1: dict, s2: dict, sign: int = 1) -> dict:
    out = dict(s1)
    for y, c in s2.items():
        c = c if sign > 0 else -c
        out[y] = out[y] + c if y in out else c
    return {y: c for y, c in out.items() if not _is_zero(c)}


def _scalar_inverse(c):
    if isinstance(c, Form):
        return c.inverse()
    if isinstance(c, int):
        return Fraction(1, c)
    if isinstance(c, ExactScalar):
        return c.inverse()
    return 1 / c


def _one_like(c):
    if isinstance(c, Form):
        return c.model.one()
    if isinstance(c, (float, complex)):
        return 1.0 + 0j
    return Fraction(1)


def _leading_scalar(c):
    return c.scalar_part() if isinstance(c, Form) else c


def _slice_inverse(s: dict, y_min: int, y_max: int, flag: list) -> dict:
    """Inverse of a y-Laurent slice, expanded in positive powers of y."""
    s_low = min(s)
    c0 = s[s_low]
    if _is_zero(_leading_scalar(c0)):
        raise NotInvertibleError("leading coefficient has no invertible scalar part")
    inv_c0 = _scalar_inverse(c0)
    # (c0 + t) = c0 (1 + u) with u = c0^{-1} t, every term of t at positive relative y
    u = {y - s_low: inv_c0 * c for y, c in s.items() if y != s_low}
    lo, hi = y_min + s_low, y_max + s_low
    one = _one_like(c0)
    total = {0: one}
    power = {0: one}
    for _ in range(10_000):
        power = _slice_mul(power, u, lo, hi, flag)
        power = {y: -c for y, c in power.items()}
        if not power:
            break
        total = _slice_add(total, power)
    else:
        raise DivergentArgumentError("slice inverse did not terminate")
    out = {}
    for y, c in total.items():
        ye = y - s_low
        if ye < y_min or ye > y_max:
            flag[0] = True
            continue
        out[ye] = c * inv_c0
    return out


def series_inv(a: QYSeries) -> QYSeries:
    """Inverse, expanded at ``q = 0`` and then at ``y = 0``.

    Writes ``a = q^{q0} (a_0 + a_1 q^{1/8} + ...)`` with ``y``-Laurent slices
    ``a_k``, inverts ``a_0`` by a geometric series in ``y`` (and nilpotent form
    parts), then solves ``b_n = -a_0^{-1} sum_k a_k b_{n-k}`` level by level.
    """
    if a.is_zero():
        raise NotInvertibleError("zero series")
    slices = _slices(a)
    q0 = min(slices)
    rel = {qe - q0: s for qe, s in slices.items()}
    q_max = a.q_max - 2 * q0
    n_max = q_max + q0
    flag = [a.truncated]
    b0 = _slice_inverse(rel[0], a.y_min, a.y_max, flag)
    b = {0: b0}
    for n in range(1, n_max + 1):
        acc: dict = {}
        for k in range(1, n + 1):
            ak = rel.get(k)
            bk = b.get(n - k)
            if ak and bk:
                acc = _slice_add(acc, _slice_mul(ak, bk, a.y_min, a.y_max, flag))
        if acc:
            b[n] = {y: -c for y, c in _slice_mul(b0, acc, a.y_min, a.y_max, flag).items()}
    out = {}
    for n, s in b.items():
        for y, c in s.items():
            out[(n - q0, y)] = c
    return QYSeries(out, q_max, a.y_min, a.y_max, flag[0])


def _check_augmentation(a: QYSeries):
    for (qe, ye), c in a.terms.items():
        if qe > 0 or (qe == 0 and ye > 0):
            continue
        if qe == 0 and isinstance(c, Form) and _is_zero(c.scalar_part()):
            continue
        raise DivergentArgumentError(
            f"term q^{Fraction(qe, Q_UNIT)} y^{Fraction(ye, Y_UNIT)} is outside the "
            "augmentation ideal")


def _unit_series(a: QYSeries) -> QYSeries:
    sample = next(iter(a.terms.values()), Fraction(1))
    return a.like({(0, 0): _one_like(sample)})


def series_exp_log(a: QYSeries, which: str) -> QYSeries:
    """``exp(a)`` or ``log(1 + a)`` for ``a`` in the augmentation ideal."""
    _check_augmentation(a)
    one = _unit_series(a)
    if which == "exp":
        out, power = one, one
        for k in range(1, 100_000):
            power = (power * a / k).restrict(q_order=a.q_order)
            if power.is_zero():
                return out
            out = out + power
    elif which in ("log", "log1p", "log-of-1-plus"):
        out = a.like({})
        power = one
        for k in range(1, 100_000):
            power = (power * a).restrict(q_order=a.q_order)
            if power.is_zero():
                return out
            out = out + power / k if k % 2 else out - power / k
    else:
        raise ValueError(f"unknown function {which!r}")
    raise DivergentArgumentError("series did not terminate")


def series_exp(a: QYSeries) -> QYSeries:
    return series_exp_log(a, "exp")


def series_log1p(a: QYSeries) -> QYSeries:
    return series_exp_log(a, "log1p")


def dz(a: QYSeries, exact: bool | None = None) -> QYSeries:
    """``d/dz`` under ``y = e^{-2 pi i z}``: ``y^r -> -2 pi i r y^r``."""
    if exact is None:
        exact = not any(_coeff_is_float(c) for c in a.terms.values())
    out = {}
    for (qe, ye), c in a.terms.items():
        if ye == 0:
            continue
        r = Fraction(ye, Y_UNIT)
        if exact:
            factor = ExactScalar({(1, 1): -2 * r})
        else:
            factor = -2j * math.pi * float(r)
        out[(qe, ye)] = c * factor
    return a.like(out)


def _to_complex_coeff(c):
    if isinstance(c, Form):
        return c.map_coefficients(complex)
    return complex(c)


def eval_numeric(a: QYSeries, z: complex, tau: complex):
    """Substitute ``q = e^{2 pi i tau}``, ``y = e^{-2 pi i z}`` and sum."""
    total = None
    q_cache: dict = {}
    y_cache: dict = {}
    for (qe, ye), c in a.terms.items():
        qf = q_cache.get(qe)
        if qf is None:
            qf = q_cache[qe] = cmath.exp(2j * math.pi * tau * qe / Q_UNIT)
        yf = y_cache.get(ye)
        if yf is None:
            yf = y_cache[ye] = cmath.exp(-2j * math.pi * z * ye / Y_UNIT)
        term = _to_complex_coeff(c) * (qf * yf)
        total = term if total is None else total + term
    return 0j if total is None else total
