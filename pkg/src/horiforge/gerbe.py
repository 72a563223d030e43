"""Finite-rank single-chart surrogates for gerbe modules.

Stored B-fields, roots and connections are normalized: the raw curvature is
``2 pi i`` times the stored one.  Exponentials therefore read
``exp(-2 pi i (B + F))`` and holomorphic functions are applied at
``z + B + F``.

Functional calculus on nilpotent arguments is done with :class:`Expansion`:
a finite sum ``sum_key value(key) * form_key`` where each key is a multiset of
symbols whose values (complex numbers or scalar :class:`QYSeries`) live in a
shared :class:`ValueTable`.  Only scalar values get multiplied together, and
each distinct product is computed once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from .coeffs import ExactScalar, NotInvertibleError
from .forms import Form, ModelAlgebra, ModelMismatchError, d as form_d, form_exp
from .series import QYSeries, series_inv

SINGULAR_THRESHOLD = 1e-10


class SingularPointError(ArithmeticError):
    """A holomorphic function vanishes (or nearly) at the evaluation point."""


class SurrogateError(ValueError):
    pass


# -- form-valued matrices ------------------------------------------------------

class FormMatrix:
    """Square matrix whose entries are ring elements (usually :class:`Form`)."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence[Any]]):
        rows = [list(r) for r in entries]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise SurrogateError("matrix must be square")
        self.entries = rows

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def identity(cls, model: ModelAlgebra, n: int) -> "FormMatrix":
        return cls([[model.one() if i == j else model.zero() for j in range(n)]
                    for i in range(n)])

    @classmethod
    def zeros(cls, model: ModelAlgebra, n: int) -> "FormMatrix":
        return cls([[model.zero()] * n for _ in range(n)])

    @classmethod
    def diag(cls, forms: Sequence[Form]) -> "FormMatrix":
        model = forms[0].model
        n = len(forms)
        return cls([[forms[i] if i == j else model.zero() for j in range(n)]
                    for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def _same_size(self, other: "FormMatrix"):
        if other.size != self.size:
            raise SurrogateError(f"size mismatch: {self.size} vs {other.size}")

    def __add__(self, other: "FormMatrix") -> "FormMatrix":
        self._same_size(other)
        return FormMatrix([[a + b for a, b in zip(r1, r2)]
                           for r1, r2 in zip(self.entries, other.entries)])

    def __neg__(self) -> "FormMatrix":
        return FormMatrix([[-a for a in r] for r in self.entries])

    def __sub__(self, other: "FormMatrix") -> "FormMatrix":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FormMatrix):
            self._same_size(other)
            n = self.size
            out = []
            for i in range(n):
                row = []
                for j in range(n):
                    acc = None
                    for k in range(n):
                        t = self.entries[i][k] * other.entries[k][j]
                        acc = t if acc is None else acc + t
                    row.append(acc)
                out.append(row)
            return FormMatrix(out)
        return FormMatrix([[a * other for a in r] for r in self.entries])

    def __rmul__(self, other):
        return FormMatrix([[other * a for a in r] for r in self.entries])

    def __pow__(self, k: int) -> "FormMatrix":
        model = self._model()
        out = FormMatrix.identity(model, self.size)
        for _ in range(k):
            out = out * self
        return out

    def _model(self) -> ModelAlgebra:
        return self.entries[0][0].model

    def trace(self):
        acc = None
        for i in range(self.size):
            t = self.entries[i][i]
            acc = t if acc is None else acc + t
        return acc

    def d(self) -> "FormMatrix":
        return FormMatrix([[form_d(a) for a in r] for r in self.entries])

    def map(self, f: Callable) -> "FormMatrix":
        return FormMatrix([[f(a) for a in r] for r in self.entries])

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self.entries for a in r)

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j].is_zero()
                   for i in range(self.size) for j in range(self.size) if i != j)

    def diagonal(self) -> list:
        return [self.entries[i][i] for i in range(self.size)]

    def __eq__(self, other):
        if not isinstance(other, FormMatrix) or other.size != self.size:
            return NotImplemented
        return all(a == b for r1, r2 in zip(self.entries, other.entries)
                   for a, b in zip(r1, r2))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return "FormMatrix(" + repr(self.entries) + ")"


def mat_mul(a: FormMatrix, b: FormMatrix) -> FormMatrix:
    return a * b


def mat_add(a: FormMatrix, b: FormMatrix) -> FormMatrix:
    return a + b


def mat_trace(a: FormMatrix):
    return a.trace()


def mat_d(a: FormMatrix) -> FormMatrix:
    return a.d()


def _check_degree(m: FormMatrix, deg: int, what: str):
    for row in m.entries:
        for a in row:
            if a.terms and a.degrees() != {deg}:
                raise SurrogateError(f"{what} entries must have degree {deg}")


def curvature(conn: FormMatrix) -> FormMatrix:
    """``d(conn) + conn conn`` for a matrix of 1-forms."""
    _check_degree(conn, 1, "connection")
    return conn.d() + conn * conn


# -- surrogates ------------------------------------------------------------------

def _check_nilpotent_even(form: Form, what: str):
    if form.scalar_part() != 0:
        raise SurrogateError(f"{what} has a nonzero scalar part")
    if any(p % 2 for p in form.degrees()):
        raise SurrogateError(f"{what} has odd-degree components")


@dataclass
class GerbeModuleSurrogate:
    """Rank-N single-chart module: a B-field plus diagonal roots or a connection."""

    rank: int
    B: Form
    roots: list[Form] | None = None
    conn: FormMatrix | None = None
    name: str = "E"

    def __post_init__(self):
        if (self.roots is None) == (self.conn is None):
            raise SurrogateError("give exactly one of roots or conn")
        if self.B.terms and self.B.degrees() != {2}:
            raise SurrogateError("B must be a 2-form")
        if self.roots is not None:
            if len(self.roots) != self.rank:
                raise SurrogateError(f"expected {self.rank} roots, got {len(self.roots)}")
            for r in self.roots:
                if r.model is not self.B.model:
                    raise ModelMismatchError("roots and B live in different models")
                _check_nilpotent_even(r, "root")
        else:
            if self.conn.size != self.rank:
                raise SurrogateError("connection size differs from rank")
            _check_degree(self.conn, 1, "connection")

    @property
    def model(self) -> ModelAlgebra:
        return self.B.model

    def curvature(self) -> FormMatrix:
        if self.roots is not None:
            return FormMatrix.diag(self.roots)
        return curvature(self.conn)

    def shift(self) -> FormMatrix:
        """``B I + F``, the nilpotent part of the argument ``z + B + F``."""
        return FormMatrix.identity(self.model, self.rank) * self.B + self.curvature()

    def direct_sum(self, other: "GerbeModuleSurrogate") -> "GerbeModuleSurrogate":
        if not (self.B == other.B):
            raise SurrogateError("direct sum needs equal B-fields")
        if self.roots is not None and other.roots is not None:
            return GerbeModuleSurrogate(self.rank + other.rank, self.B,
                                        roots=self.roots + other.roots)
        model = self.model
        a, b = self._conn_or_none(), other._conn_or_none()
        if a is None or b is None:
            raise SurrogateError("cannot mix root and connection presentations")
        n = self.rank + other.rank
        rows = [[model.zero()] * n for _ in range(n)]
        for i in range(self.rank):
            for j in range(self.rank):
                rows[i][j] = a[i, j]
        for i in range(other.rank):
            for j in range(other.rank):
                rows[self.rank + i][self.rank + j] = b[i, j]
        return GerbeModuleSurrogate(n, self.B, conn=FormMatrix(rows))

    def _conn_or_none(self):
        return self.conn


@dataclass
class GaugePathData:
    """Connection ``conn`` and the constant path direction ``A_phi``."""

    module: GerbeModuleSurrogate
    A_phi: FormMatrix

    def __post_init__(self):
        if self.module.conn is None:
            raise SurrogateError("gauge path needs a connection presentation")
        if self.A_phi.size != self.module.rank:
            raise SurrogateError("A_phi size differs from rank")
        _check_degree(self.A_phi, 1, "A_phi")

    def curvature_poly(self) -> dict[int, FormMatrix]:
        """``F(s) = curvature(conn + s A_phi)`` as ``{power of s: matrix}``."""
        c, a = self.module.conn, self.A_phi
        poly = {0: c.d() + c * c, 1: a.d() + c * a + a * c, 2: a * a}
        return {k: v for k, v in poly.items() if not v.is_zero()}


def _ring_factor(model: ModelAlgebra, exact: bool):
    """``-2 pi i`` in the requested ring."""
    if exact:
        return ExactScalar({(1, 1): Fraction(-2)})
    return -2j * math.pi


def _same_pair(E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate):
    if E.rank != Ep.rank:
        raise SurrogateError(f"ranks differ: {E.rank} vs {Ep.rank}")
    if E.model is not Ep.model:
        raise ModelMismatchError("surrogates live in different models")
    if not (E.B == Ep.B):
        raise SurrogateError("surrogates have different B-fields")


def mat_exp(M: FormMatrix) -> FormMatrix:
    """Exponential of a matrix with nilpotent entries."""
    model = M._model()
    out = FormMatrix.identity(model, M.size)
    term = out
    k = 0
    while True:
        k += 1
        term = (term * M) * Fraction(1, k)
        if term.is_zero():
            return out
        out = out + term


def twisted_chern(E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate, m: int = 1,
                  exact: bool = True) -> Form:
    """``exp(-2 pi i m B) (Tr exp(-2 pi i F) - Tr exp(-2 pi i F'))``."""
    _same_pair(E, Ep)
    c = _ring_factor(E.model, exact)
    tr = mat_exp(E.curvature() * c).trace() - mat_exp(Ep.curvature() * c).trace()
    return form_exp(E.B * (c * m)) * tr


@dataclass
class AnomalyReport:
    ch2: Form
    ch4: Form
    vanishes: bool


def anomaly(E: GerbeModuleSurrogate, Ep: GerbeModuleSurrogate,
            exact: bool = True) -> AnomalyReport:
    ch = twisted_chern(E, Ep, 1, exact)
    from .forms import degree_component
    ch2, ch4 = degree_component(ch, 2), degree_component(ch, 4)
    return AnomalyReport(ch2, ch4, ch2.is_zero() and ch4.is_zero())


def _poly_mul(p: dict[int, FormMatrix], q: dict[int, FormMatrix]) -> dict[int, FormMatrix]:
    out: dict[int, FormMatrix] = {}
    for i, a in p.items():
        for j, b in q.items():
            t = a * b
            if t.is_zero():
                continue
            out[i + j] = out[i + j] + t if i + j in out else t
    return out


def integrate_s(poly: dict[int, Any]):
    """``int_0^1`` of ``sum_j c_j s^j`` coefficient by coefficient."""
    acc = None
    for j, c in poly.items():
        t = c * Fraction(1, j + 1)
        acc = t if acc is None else acc + t
    return acc


@dataclass
class OddChernReport:
    ch: Form
    ch1: Form
    ch3: Form


def odd_chern(path: GaugePathData, m: int = 1, exact: bool = True) -> OddChernReport:
    """``-exp(-2 pi i m B) int_0^1 Tr[A_phi exp(-2 pi i F(s))] ds``, exactly in ``s``."""
    from .forms import degree_component
    mod = path.module
    model = mod.model
    c = _ring_factor(model, exact)
    X = {k: v * c for k, v in path.curvature_poly().items()}
    ident = FormMatrix.identity(model, mod.rank)
    expo = {0: ident}
    term = {0: ident}
    k = 0
    while True:
        k += 1
        term = {j: v * Fraction(1, k) for j, v in _poly_mul(term, X).items()}
        if not term:
            break
        for j, v in term.items():
            expo[j] = expo[j] + v if j in expo else v
    integrand = {j: (path.A_phi * v).trace() for j, v in expo.items()}
    ch = -(form_exp(mod.B * (c * m)) * integrate_s(integrand))
    return OddChernReport(ch, degree_component(ch, 1), degree_component(ch, 3))


# -- holomorphic functional calculus -------------------------------------------

@dataclass(frozen=True)
class NumericPoint:
    z: complex
    tau: complex | None = None


@dataclass(frozen=True)
class SeriesPoint:
    """Evaluate ``z`` symbolically: values become scalar q,y-series."""

    q_order: Fraction
    y_window: tuple
    exact: bool = True


class HoloFunction:
    """A function with Taylor data ``f^{(k)}(z)/k!`` at a point."""

    name = "f"

    def taylor(self, point, order: int) -> list:
        raise NotImplementedError


class ExpFunction(HoloFunction):
    name = "exp"

    def taylor(self, point, order):
        if not isinstance(point, NumericPoint):
            raise TypeError("exp is only available at numeric points")
        e = complex(math.e) ** point.z
        return [e / math.factorial(k) for k in range(order + 1)]


def value_inverse(v):
    if isinstance(v, QYSeries):
        return series_inv(v)
    if isinstance(v, ExactScalar):
        return v.inverse()
    if isinstance(v, (int, Fraction)):
        return Fraction(1) / v
    if abs(v) < SINGULAR_THRESHOLD:
        raise SingularPointError(f"value {v} is numerically zero")
    return 1 / v


class ValueTable:
    """Symbol values plus a memo of their products."""

    def __init__(self, one):
        self.one = one
        self.values: dict = {}
        self._memo: dict = {(): one}

    def add(self, symbol, value):
        self.values[symbol] = value

    def value(self, key: tuple):
        hit = self._memo.get(key)
        if hit is None:
            hit = self.value(key[:-1]) * self.values[key[-1]]
            self._memo[key] = hit
        return hit


def _merge_keys(k1: tuple, k2: tuple) -> tuple:
    return tuple(sorted(k1 + k2))


class Expansion:
    """``sum_key value(key) * form_key`` over a shared :class:`ValueTable`."""

    __slots__ = ("table", "terms", "model")

    def __init__(self, table: ValueTable, model: ModelAlgebra, terms: dict | None = None):
        self.table = table
        self.model = model
        self.terms = {k: f for k, f in (terms or {}).items() if not f.is_zero()}

    @classmethod
    def constant(cls, table, form: Form) -> "Expansion":
        return cls(table, form.model, {(): form})

    @classmethod
    def linear(cls, table, model, pairs) -> "Expansion":
        out: dict = {}
        for sym, form in pairs:
            key = () if sym is None else (sym,)
            out[key] = out[key] + form if key in out else form
        return cls(table, model, out)

    def __add__(self, other: "Expansion") -> "Expansion":
        out = dict(self.terms)
        for k, f in other.terms.items():
            out[k] = out[k] + f if k in out else f
        return Expansion(self.table, self.model, out)

    def __neg__(self) -> "Expansion":
        return Expansion(self.table, self.model, {k: -f for k, f in self.terms.items()})

    def __sub__(self, other: "Expansion") -> "Expansion":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Expansion):
            out: dict = {}
            for k1, f1 in self.terms.items():
                for k2, f2 in other.terms.items():
                    f = f1 * f2
                    if f.is_zero():
                        continue
                    k = _merge_keys(k1, k2)
                    out[k] = out[k] + f if k in out else f
            return Expansion(self.table, self.model, out)
        return Expansion(self.table, self.model, {k: f * other for k, f in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def exp(self) -> "Expansion":
        """Exponential of an expansion whose forms are all nilpotent."""
        for f in self.terms.values():
            if f.scalar_part() != 0:
                raise ValueError("exp needs nilpotent forms")
        one = Expansion.constant(self.table, self.model.one())
        out, term, k = one, one, 0
        while True:
            k += 1
            term = (term * self) * Fraction(1, k)
            if term.is_zero():
                return out
            out = out + term

    def inv_one_plus(self) -> "Expansion":
        """``(1 + self)^{-1}`` for nilpotent forms."""
        one = Expansion.constant(self.table, self.model.one())
        out, term = one, one
        while True:
            term = -(term * self)
            if term.is_zero():
                return out
            out = out + term

    def evaluate(self, transform: Callable | None = None):
        """Collapse to a Form (numeric values) or a Form-coefficient series."""
        acc = None
        for k, f in self.terms.items():
            v = self.table.value(k)
            if transform is not None:
                v = transform(v)
            if isinstance(v, QYSeries):
                t = v * f
            else:
                t = f * v
            acc = t if acc is None else acc + t
        if acc is None:
            return self.model.zero() if not isinstance(self.table.one, QYSeries) \
                else self.table.one * self.model.zero()
        return acc


def log_taylor(c: Sequence) -> list:
    """Taylor coefficients ``h_1..h_K`` of ``log(f(z+w)/f(z))`` from ``c_k = f^{(k)}/k!``."""
    inv0 = value_inverse(c[0])
    g = [None] + [ck * inv0 for ck in c[1:]]
    h: list = [None]
    for k in range(1, len(c)):
        acc = g[k] * k
        for j in range(1, k):
            acc = acc - h[j] * g[k - j] * j
        h.append(acc / k if not isinstance(acc, QYSeries) else acc / Fraction(k))
    return h


def _unit_for(point, sample):
    if isinstance(sample, QYSeries):
        return sample.like({(0, 0): Fraction(1) if point.exact else 1 + 0j})
    return 1 + 0j if isinstance(sample, complex) else Fraction(1)


def _nil_order(N: FormMatrix) -> int:
    """Largest k with a possibly nonzero ``N^k``: degree bound over 2."""
    model = N._model()
    return model.max_degree // 2


def holo_apply(f: HoloFunction, point, N: FormMatrix) -> FormMatrix:
    """``f(z I + N) = sum_k f^{(k)}(z)/k! N^k`` for nilpotent ``N``."""
    K = _nil_order(N)
    c = f.taylor(point, K)
    model = N._model()
    out = None
    power = FormMatrix.identity(model, N.size)
    for k in range(K + 1):
        if k:
            power = power * N
            if power.is_zero():
                break
        term = power.map(lambda e, ck=c[k]: ck * e if isinstance(ck, QYSeries) else e * ck)
        out = term if out is None else out + term
    return out


def det_holo_expansion(f: HoloFunction, point, N_num: FormMatrix, N_den: FormMatrix,
                       method: str = "exp-trace-log", table: ValueTable | None = None,
                       prefix: str = "") -> Expansion:
    """``det f(z + N_num) / det f(z + N_den)`` as an :class:`Expansion`."""
    if N_num.size != N_den.size:
        raise SurrogateError("determinant ratio needs equal sizes")
    model = N_num._model()
    K = _nil_order(N_num)
    c = f.taylor(point, K)
    if table is None:
        table = ValueTable(_unit_for(point, c[0]))
    if method == "exp-trace-log":
        h = log_taylor(c)
        pairs = []
        pn = FormMatrix.identity(model, N_num.size)
        pd = pn
        for k in range(1, K + 1):
            pn, pd = pn * N_num, pd * N_den
            P = pn.trace() - pd.trace()
            if P.is_zero():
                continue
            sym = (prefix + "h", k)
            table.add(sym, h[k])
            pairs.append((sym, P))
        return Expansion.linear(table, model, pairs).exp()
    if method == "roots":
        if not (N_num.is_diagonal() and N_den.is_diagonal()):
            raise SurrogateError("root-product path needs diagonal arguments")
        inv0 = value_inverse(c[0])
        for k in range(1, K + 1):
            table.add((prefix + "g", k), c[k] * inv0)
        out = Expansion.constant(table, model.one())

        def factor(rho: Form) -> Expansion:
            pairs, p = [], model.one()
            for k in range(1, K + 1):
                p = p * rho
                if p.is_zero():
                    break
                pairs.append(((prefix + "g", k), p))
            return Expansion.linear(table, model, pairs)

        for rho in N_num.diagonal():
            out = out * (factor(rho) + Expansion.constant(table, model.one()))
        for sig in N_den.diagonal():
            out = out * factor(sig).inv_one_plus()
        return out
    raise ValueError(f"unknown determinant method {method!r}")


def det_holo(f: HoloFunction, point, N_num: FormMatrix, N_den: FormMatrix,
             method: str = "exp-trace-log"):
    """Evaluated determinant ratio: a Form (numeric point) or Form-coefficient series."""
    return det_holo_expansion(f, point, N_num, N_den, method).evaluate()


def trace_holo_expansion(f: HoloFunction, point, N_num: FormMatrix, N_den: FormMatrix,
                         table: ValueTable, prefix: str = "") -> Expansion:
    """``Tr f(z + N_num) - Tr f(z + N_den)`` as an :class:`Expansion`."""
    model = N_num._model()
    K = _nil_order(N_num)
    c = f.taylor(point, K)
    pairs = []
    pn = FormMatrix.identity(model, N_num.size)
    pd = FormMatrix.identity(model, N_den.size)
    for k in range(K + 1):
        if k:
            pn, pd = pn * N_num, pd * N_den
        P = pn.trace() - pd.trace()
        if P.is_zero():
            continue
        sym = (prefix + "c", k)
        table.add(sym, c[k])
        pairs.append((sym, P))
    return Expansion.linear(table, model, pairs)
