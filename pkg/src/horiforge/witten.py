"""Witten-module generating functions for surrogate pairs and their theta identities.

For roots ``rho_i`` of E and ``sigma_i`` of E' (normalized, B included in the
per-factor monomials ``y e^{-2 pi i (B + rho)}`` and ``y^{-1} e^{2 pi i (B + rho)}``):

* :func:`gch_ratio` expands the product formula of the four ratios,
* :func:`wmn_table` re-derives the same coefficients from elementary and
  complete symmetric polynomials (an independent oracle),
* :func:`witten_capital` multiplies by the sinh / cosh prefactor determinant,
* :func:`theta_det_form` evaluates ``det theta_k(z+B+F) / theta_k(z+B+F')``.
"""
from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .coeffs import ExactScalar
from .forms import Form, ModelAlgebra, degree_component, form_exp
from .gerbe import (Expansion, FormMatrix, GaugePathData, GerbeModuleSurrogate, HoloFunction,
                    NumericPoint, SeriesPoint, SingularPointError, ValueTable, anomaly,
                    det_holo_expansion, integrate_s, log_taylor, odd_chern,
                    trace_holo_expansion, _poly_mul, _same_pair)
from .modular import JacobiSpec, ResampleSignal, SubgroupId, check_jacobi
from .series import Q_UNIT, Y_UNIT, QYSeries, dz, series_inv
from .theta import ThetaKind, theta_derivative_numeric, theta_numeric, theta_series


class WittenKind(enum.Enum):
    THETA = "Theta"
    THETA1 = "Theta1"
    THETA2 = "Theta2"
    THETA3 = "Theta3"

    @classmethod
    def parse(cls, name) -> "WittenKind":
        if isinstance(name, WittenKind):
            return name
        aliases = {"W": "Theta", "A": "Theta1", "B": "Theta2", "C": "Theta3",
                   "theta": "Theta", "theta1": "Theta1", "theta2": "Theta2",
                   "theta3": "Theta3"}
        try:
            return cls(aliases.get(name, name))
        except ValueError:
            raise ValueError(f"unknown Witten kind {name!r}") from None

    @property
    def offset(self) -> Fraction:
        """Shift of the q-exponent: factors carry ``q^{u - offset}``."""
        return Fraction(1, 2) if self in (WittenKind.THETA2, WittenKind.THETA3) else Fraction(0)

    @property
    def sign(self) -> int:
        """``-1`` for ``Lambda_{-q}`` factors, ``+1`` for ``Lambda_{q}``."""
        return -1 if self in (WittenKind.THETA, WittenKind.THETA2) else 1

    @property
    def theta(self) -> ThetaKind:
        return {WittenKind.THETA: ThetaKind.THETA, WittenKind.THETA1: ThetaKind.THETA1,
                WittenKind.THETA2: ThetaKind.THETA2,
                WittenKind.THETA3: ThetaKind.THETA3}[self]

    @property
    def group(self) -> SubgroupId:
        return {WittenKind.THETA: SubgroupId.SL2Z, WittenKind.THETA1: SubgroupId.GAMMA0_2,
                WittenKind.THETA2: SubgroupId.GAMMA_UPPER0_2,
                WittenKind.THETA3: SubgroupId.GAMMA_THETA}[self]


class WindowError(ValueError):
    pass


def _two_pi_i(exact: bool):
    return ExactScalar({(1, 1): Fraction(2)}) if exact else 2j * math.pi


def _pi_i(exact: bool):
    return ExactScalar({(1, 1): Fraction(1)}) if exact else 1j * math.pi


def _minus_i_over_two_pi(exact: bool):
    return ExactScalar({(-1, 1): Fraction(-1, 2)}) if exact else -1j / (2 * math.pi)


def _coerce(form: Form, exact: bool) -> Form:
    return form if exact else form.map_coefficients(complex)


def _padded(q_order, y_window) -> tuple[int, int, int]:
    """Series parameters (in internal units) wide enough that no discarded
    term can re-enter the requested window: a ``y^{-1}`` always costs at
    least ``q^{1/2}``."""
    q_max = int(Fraction(q_order) * Q_UNIT)
    pad = 2 * Fraction(q_order) + 2
    lo = int((Fraction(y_window[0]) - pad) * Y_UNIT)
    hi = int((Fraction(y_window[1]) + pad) * Y_UNIT)
    return q_max, lo, hi


def _factor_monomials(E: GerbeModuleSurrogate, exact: bool) -> tuple[list[Form], list[Form]]:
    """``e^{-2 pi i (B + rho_i)}`` and ``e^{2 pi i (B + rho_i)}`` per root."""
    if E.roots is None:
        raise ValueError("Witten generating functions need a root presentation")
    c = _two_pi_i(exact)
    B = _coerce(E.B, exact)
    xs, xbars = [], []
    for r in E.roots:
        arg = (B + _coerce(r, exact)) * c
        xs.append(form_exp(-arg))
        xbars.append(form_exp(arg))
    return xs, xbars


# -- product formula ----------------------------------------------------------------

def gch_ratio(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate, q_order=8,
              y_window=(-6, 6), exact: bool = True) -> QYSeries:
    """Graded twisted Chern character of ``Theta_k(E) / Theta_k(E')``."""
    kind = WittenKind.parse(kind)
    _same_pair(E, Ep)
    q_max, lo, hi = _padded(q_order, y_window)
    model = E.model
    one = _coerce(model.one(), exact)
    xs, xbars = _factor_monomials(E, exact)
    ps, pbars = _factor_monomials(Ep, exact)
    s = kind.sign

    def mk(terms):
        return QYSeries(terms, q_max, lo, hi)

    out = mk({(0, 0): one})
    u = 1
    while True:
        e = int((u - kind.offset) * Q_UNIT)
        if e > q_max:
            break
        for x in xs:
            out = out * mk({(0, 0): one, (e, Y_UNIT): x * s})
        for x in xbars:
            out = out * mk({(0, 0): one, (e, -Y_UNIT): x * s})
        # 1/(1 + s q^e y X) = sum_j (-s)^j q^{je} y^j X^j
        for x, ysign in [(p, 1) for p in ps] + [(p, -1) for p in pbars]:
            terms = {(0, 0): one}
            power = one
            j = 1
            while j * e <= q_max:
                power = power * x
                terms[(j * e, ysign * j * Y_UNIT)] = power * ((-s) ** j)
                j += 1
            out = out * mk(terms)
        u += 1
    return out.restrict(q_order=q_order, y_window=y_window)


# -- brute-force oracle -----------------------------------------------------------------

def _elementary(xs: list[Form], k: int, one: Form) -> Form:
    acc = one * 0
    for combo in itertools.combinations(xs, k):
        t = one
        for x in combo:
            t = t * x
        acc = acc + t
    return acc


def _complete(xs: list[Form], k: int, one: Form) -> Form:
    acc = one * 0
    for combo in itertools.combinations_with_replacement(xs, k):
        t = one
        for x in combo:
            t = t * x
        acc = acc + t
    return acc


def _poly_product(a: dict, b: dict, n_max: int) -> dict:
    out: dict = {}
    for (qa, ya), ca in a.items():
        for (qb, yb), cb in b.items():
            q = qa + qb
            if q > n_max:
                continue
            c = ca * cb
            if c.is_zero():
                continue
            key = (q, ya + yb)
            out[key] = out[key] + c if key in out else c
    return {k: v for k, v in out.items() if not v.is_zero()}


def wmn_table(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate, n_max=6,
              exact: bool = True) -> dict:
    """All ``(n, m) -> coefficient of q^n y^m`` with ``n <= n_max``.

    Each ``Lambda_t`` factor is expanded into exterior powers (elementary
    symmetric polynomials); each inverted factor into symmetric powers
    (complete homogeneous polynomials).  q-exponents are kept in halves.
    """
    kind = WittenKind.parse(kind)
    _same_pair(E, Ep)
    one = _coerce(E.model.one(), exact)
    xs, xbars = _factor_monomials(E, exact)
    ps, pbars = _factor_monomials(Ep, exact)
    rank = E.rank
    n2 = int(2 * Fraction(n_max))
    s = kind.sign
    table = {(0, 0): one}
    u = 1
    while True:
        e2 = int(2 * (u - kind.offset))
        if e2 > n2:
            break
        blocks = []
        for roots, ysign in ((xs, 1), (xbars, -1)):
            blocks.append({(k * e2, ysign * k): _elementary(roots, k, one) * (s ** k)
                           for k in range(rank + 1) if k * e2 <= n2})
        for roots, ysign in ((ps, 1), (pbars, -1)):
            blocks.append({(k * e2, ysign * k): _complete(roots, k, one) * ((-s) ** k)
                           for k in range(n2 // e2 + 1)})
        for blk in blocks:
            table = _poly_product(table, blk, n2)
        u += 1
    return {(Fraction(q, 2), m): c for (q, m), c in table.items()}


def wmn_character(m: int, n, kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate,
                  y_window=(-6, 6), exact: bool = True) -> Form:
    """Brute-force coefficient of ``q^n y^m`` in the graded character."""
    if not (y_window[0] <= m <= y_window[1]):
        raise WindowError(f"m={m} is outside the y-window {tuple(y_window)}")
    table = wmn_table(kind, E, Ep, n, exact)
    zero = _coerce(E.model.zero(), exact)
    return table.get((Fraction(n), m), zero)


# -- holomorphic descriptors ---------------------------------------------------------

def _theta_series_padded(kind: ThetaKind, point: SeriesPoint) -> QYSeries:
    q_max, lo, hi = _padded(point.q_order, point.y_window)
    # one extra q-step so that dividing by q^{1/8} keeps precision q_order
    s = theta_series(kind, Fraction(q_max, Q_UNIT) + 1, exact=point.exact)
    return QYSeries(s.terms, s.q_max, lo, hi, s.truncated)


class ThetaFunction(HoloFunction):
    def __init__(self, kind: ThetaKind):
        self.kind = ThetaKind.parse(kind)
        self.name = self.kind.value

    def taylor(self, point, order):
        if isinstance(point, NumericPoint):
            out = [theta_numeric(self.kind, point.z, point.tau)]
            for k in range(1, order + 1):
                out.append(theta_derivative_numeric(self.kind, point.z, point.tau, k)
                           / math.factorial(k))
            return out
        s = _theta_series_padded(self.kind, point)
        out = [s]
        for k in range(1, order + 1):
            s = dz(s, exact=point.exact)
            out.append(s / math.factorial(k))
        return out


class ThetaLogDerivative(HoloFunction):
    """``theta'/theta`` of one kind."""

    def __init__(self, kind: ThetaKind):
        self.kind = ThetaKind.parse(kind)
        self.name = self.kind.value + "'/" + self.kind.value

    def taylor(self, point, order):
        if isinstance(point, NumericPoint):
            c = ThetaFunction(self.kind).taylor(point, order + 1)
            h = log_taylor(c)
            return [(j + 1) * h[j + 1] for j in range(order + 1)]
        s = _theta_series_padded(self.kind, point)
        phi = dz(s, exact=point.exact) * series_inv(s)
        out = [phi]
        for k in range(1, order + 1):
            phi = dz(phi, exact=point.exact)
            out.append(phi / math.factorial(k))
        return out


class HyperbolicFunction(HoloFunction):
    """``sinh(pi i w)`` or ``cosh(pi i w)`` as a function of ``w``."""

    def __init__(self, which: str):
        if which not in ("sinh", "cosh"):
            raise ValueError(which)
        self.name = which

    def taylor(self, point, order):
        pi_i = _pi_i(not isinstance(point, NumericPoint) and point.exact)
        if isinstance(point, NumericPoint):
            import cmath
            base = {"sinh": cmath.sinh(1j * math.pi * point.z),
                    "cosh": cmath.cosh(1j * math.pi * point.z)}
        else:
            q_max, lo, hi = _padded(point.q_order, point.y_window)
            one = Fraction(1, 2) if point.exact else 0.5 + 0j
            # e^{pi i z} = y^{-1/2}
            base = {"sinh": QYSeries({(0, -1): one, (0, 1): -one}, q_max, lo, hi),
                    "cosh": QYSeries({(0, -1): one, (0, 1): one}, q_max, lo, hi)}
        other = {"sinh": "cosh", "cosh": "sinh"}
        out = []
        factor = Fraction(1) if not isinstance(point, NumericPoint) else 1 + 0j
        for k in range(order + 1):
            b = base[self.name] if k % 2 == 0 else base[other[self.name]]
            coeff = factor / math.factorial(k)
            out.append(b * coeff)
            factor = factor * pi_i
        return out


def _series_point(q_order, y_window, exact) -> SeriesPoint:
    return SeriesPoint(Fraction(q_order), tuple(Fraction(v) for v in y_window), exact)


def _shift(E: GerbeModuleSurrogate, exact: bool) -> FormMatrix:
    sh = E.shift()
    return sh if exact else sh.map(lambda f: f.map_coefficients(complex))


def _finisher(q_order, y_window, exact: bool, point_exact: bool):
    """Restrict a scalar series value; round it once if the forms are floating."""
    def cut(v):
        v = v.restrict(q_order=q_order, y_window=y_window)
        return v if exact or not point_exact else v.map_coefficients(complex)
    return cut


def theta_det_form(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate, q_order=8,
                   y_window=(-6, 6), exact: bool = False, method: str = "exp-trace-log",
                   exact_scalars: bool = True) -> QYSeries:
    """``det theta_k(z + B + F^E) / theta_k(z + B + F^{E'})`` as a series.

    With floating forms the scalar series (theta Taylor data and their
    logarithms) are still computed exactly unless ``exact_scalars`` is off;
    they are rounded once, just before being paired with the forms.
    """
    kind = WittenKind.parse(kind)
    _same_pair(E, Ep)
    point_exact = exact or exact_scalars
    point = _series_point(q_order, y_window, point_exact)
    ex = det_holo_expansion(ThetaFunction(kind.theta), point, _shift(E, exact),
                            _shift(Ep, exact), method)
    return ex.evaluate(_finisher(q_order, y_window, exact, point_exact))


def prefactor_det(kind, E, Ep, q_order=8, y_window=(-6, 6), exact: bool = False):
    """sinh-ratio (Theta), cosh-ratio (Theta1) determinant, or ``None``."""
    kind = WittenKind.parse(kind)
    if kind in (WittenKind.THETA2, WittenKind.THETA3):
        return None
    f = HyperbolicFunction("sinh" if kind is WittenKind.THETA else "cosh")
    q_max, lo, hi = _padded(q_order, y_window)
    wide = (Fraction(lo, Y_UNIT), Fraction(hi, Y_UNIT))
    point = _series_point(q_order, y_window, True)
    ex = det_holo_expansion(f, point, _shift(E, exact), _shift(Ep, exact))
    return ex.evaluate(_finisher(q_order, wide, exact, True))


def _lift(E: GerbeModuleSurrogate) -> GerbeModuleSurrogate:
    """Same module with every floating coefficient replaced by its exact binary value."""
    def exact_form(f: Form) -> Form:
        return f.map_coefficients(
            lambda c: c if isinstance(c, (int, Fraction, ExactScalar)) else ExactScalar.coerce(c))
    return GerbeModuleSurrogate(E.rank, exact_form(E.B), roots=[exact_form(r) for r in E.roots],
                                name=E.name)


def witten_capital(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate, q_order=8,
                   y_window=(-6, 6), exact: bool = False, lift: bool = True) -> QYSeries:
    """``W``, ``A``, ``B`` or ``C``: the graded character times its prefactor.

    With floating forms and ``lift`` on, the inputs are taken at their exact
    binary values, the whole product is formed exactly and rounded once.
    """
    kind = WittenKind.parse(kind)
    if not exact and lift:
        out = witten_capital(kind, _lift(E), _lift(Ep), q_order, y_window, exact=True)
        return out.map_coefficients(lambda f: f.map_coefficients(complex))
    q_max, lo, hi = _padded(q_order, y_window)
    wide = (Fraction(lo, Y_UNIT), Fraction(hi, Y_UNIT))
    g = gch_ratio(kind, E, Ep, q_order, wide, exact)
    pre = prefactor_det(kind, E, Ep, q_order, y_window, exact)
    out = g if pre is None else g * pre
    return out.restrict(q_order=q_order, y_window=y_window)


def deri_residual(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate, q_order=8,
                  y_window=(-6, 6), exact: bool = False,
                  exact_scalars: bool = True) -> QYSeries:
    """``-(i/2pi) [dz D - D Tr(theta'/theta(z+B+F) - theta'/theta(z+B+F'))]``."""
    kind = WittenKind.parse(kind)
    _same_pair(E, Ep)
    point_exact = exact or exact_scalars
    point = _series_point(q_order, y_window, point_exact)
    NE, NEp = _shift(E, exact), _shift(Ep, exact)
    D = det_holo_expansion(ThetaFunction(kind.theta), point, NE, NEp, prefix="det-")
    T = trace_holo_expansion(ThetaLogDerivative(kind.theta), point, NE, NEp, D.table,
                             prefix="tr-")
    cut = _finisher(q_order, y_window, exact, point_exact)
    lhs = D.evaluate(lambda v: cut(dz(v, exact=point_exact)))
    rhs = (D * T).evaluate(cut)
    return (lhs - rhs) * _minus_i_over_two_pi(exact)


def theta_det_numeric(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate,
                      z: complex, tau: complex) -> Form:
    """Determinant side evaluated at a point (complex coefficients)."""
    kind = WittenKind.parse(kind)
    ex = det_holo_expansion(ThetaFunction(kind.theta), NumericPoint(z, tau),
                            _shift(E, False), _shift(Ep, False))
    return ex.evaluate()


# -- odd case -------------------------------------------------------------------

def _odd_traces(path: GaugePathData, exact: bool) -> list[Form]:
    """``P_j = int_0^1 Tr[A_phi N(s)^j] ds`` with ``N(s) = B I + F(s)``."""
    mod = path.module
    model = mod.model
    conv = (lambda m: m) if exact else (lambda m: m.map(lambda f: f.map_coefficients(complex)))
    poly = {k: conv(v) for k, v in path.curvature_poly().items()}
    BI = conv(FormMatrix.identity(model, mod.rank) * mod.B)
    poly[0] = poly[0] + BI if 0 in poly else BI
    A = conv(path.A_phi)
    K = model.max_degree // 2
    ident = conv(FormMatrix.identity(model, mod.rank))
    power = {0: ident}
    out = []
    for j in range(K + 1):
        if j:
            power = _poly_mul(power, poly)
        integrand = {k: (A * v).trace() for k, v in power.items()}
        val = integrate_s(integrand) if integrand else model.zero()
        out.append(val)
    return out


def odd_witten_expansion(kind, path: GaugePathData, point, exact: bool) -> Expansion:
    """``exact`` refers to the form coefficients; the point fixes the scalar ring."""
    kind = WittenKind.parse(kind)
    traces = _odd_traces(path, exact)
    c = ThetaLogDerivative(kind.theta).taylor(point, len(traces) - 1)
    if isinstance(c[0], QYSeries):
        one = c[0].like({(0, 0): Fraction(1) if point.exact else 1 + 0j})
    else:
        one = 1 + 0j
    table = ValueTable(one)
    pairs = []
    for j, P in enumerate(traces):
        if P.is_zero():
            continue
        table.add(("c", j), c[j])
        pairs.append((("c", j), -P))
    return Expansion.linear(table, path.module.model, pairs)


def odd_witten(kind, path: GaugePathData, q_order=8, y_window=(-6, 6),
               exact: bool = False, exact_scalars: bool = True) -> QYSeries:
    """``-int_0^1 Tr[A_phi theta'/theta(z + B + F(s))] ds`` as a series."""
    point_exact = exact or exact_scalars
    point = _series_point(q_order, y_window, point_exact)
    ex = odd_witten_expansion(kind, path, point, exact)
    return ex.evaluate(_finisher(q_order, y_window, exact, point_exact))


def odd_witten_numeric(kind, path: GaugePathData, z: complex, tau: complex) -> Form:
    return odd_witten_expansion(kind, path, NumericPoint(z, tau), False).evaluate()


# -- Jacobi verdicts ----------------------------------------------------------------

@dataclass
class JacobiCheck:
    degree: int
    transform: str
    max_residual: float
    resamples: int


@dataclass
class JacobiVerdict:
    kind: str
    status: str  # pass, fail, refused
    checks: list[JacobiCheck] = field(default_factory=list)
    reason: str = ""

    @property
    def max_residual(self) -> float:
        return max((c.max_residual for c in self.checks), default=0.0)


def _form_is_small(f: Form, tol: float) -> bool:
    return f.max_abs() <= tol


def _memo_point(fn):
    cache: dict = {}

    def wrapped(z, tau):
        key = (z, tau)
        hit = cache.get(key)
        if hit is None:
            try:
                hit = fn(z, tau)
            except SingularPointError as exc:
                raise ResampleSignal(str(exc)) from exc
            cache[key] = hit
        return hit
    return wrapped


def _run_jacobi(kind: WittenKind, evaluate, degrees, weight_of, samples, rng, tol,
                status_label: str) -> JacobiVerdict:
    f_all = _memo_point(evaluate)
    checks = []
    ok = True
    for p in degrees:
        spec = JacobiSpec(weight_of(p), 0, kind.group)

        def f_p(z, tau, p=p):
            return degree_component(f_all(z, tau), p)

        for rep in check_jacobi(f_p, spec, rng, samples):
            checks.append(JacobiCheck(p, rep.name, rep.max_residual, rep.resamples))
            ok = ok and rep.max_residual < tol
    return JacobiVerdict(kind.value, "pass" if ok else "fail", checks)


def witten_jacobi_check(kind, E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate,
                        degrees=(0, 2, 4), samples: int = 10, rng: random.Random | None = None,
                        tol: float = 1e-7, enforce_gate: bool = True,
                        gate_tol: float = 1e-12) -> JacobiVerdict:
    """Jacobi residuals of the degree-p parts of the determinant side.

    Weight ``p/2``, index 0, group per kind.  With ``enforce_gate`` an
    instance whose anomaly does not vanish is refused.
    """
    kind = WittenKind.parse(kind)
    rng = rng or random.Random(0)
    exact = all(isinstance(c, (int, Fraction, ExactScalar))
                for r in (E.roots or []) + (Ep.roots or []) + [E.B] for c in r.terms.values())
    rep = anomaly(E, Ep, exact=exact)
    vanishes = rep.vanishes if exact else (_form_is_small(rep.ch2, gate_tol)
                                           and _form_is_small(rep.ch4, gate_tol))
    if enforce_gate and not vanishes:
        return JacobiVerdict(kind.value, "refused", reason="anomaly does not vanish")
    for p in degrees:
        if p % 2:
            raise ValueError("even case needs even degrees")
    return _run_jacobi(kind, lambda z, t: theta_det_numeric(kind, E, Ep, z, t), degrees,
                       lambda p: p // 2, samples, rng, tol, "even")


def odd_anomaly_vanishes(path: GaugePathData, tol: float = 1e-12) -> bool:
    exact = all(isinstance(c, (int, Fraction, ExactScalar))
                for row in path.A_phi.entries for f in row for c in f.terms.values())
    rep = odd_chern(path, 1, exact=exact)
    if exact:
        return rep.ch1.is_zero() and rep.ch3.is_zero()
    return _form_is_small(rep.ch1, tol) and _form_is_small(rep.ch3, tol)


def odd_jacobi_check(kind, path: GaugePathData, degrees=(1, 3), samples: int = 10,
                     rng: random.Random | None = None, tol: float = 1e-7,
                     enforce_gate: bool = True) -> JacobiVerdict:
    """Odd analogue: weight ``(p+1)/2`` on the degree-p parts."""
    kind = WittenKind.parse(kind)
    rng = rng or random.Random(0)
    if enforce_gate and not odd_anomaly_vanishes(path):
        return JacobiVerdict(kind.value, "refused", reason="odd anomaly does not vanish")
    for p in degrees:
        if p % 2 == 0:
            raise ValueError("odd case needs odd degrees")
    return _run_jacobi(kind, lambda z, t: odd_witten_numeric(kind, path, z, t), degrees,
                       lambda p: (p + 1) // 2, samples, rng, tol, "odd")
