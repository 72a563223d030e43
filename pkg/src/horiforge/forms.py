"""Truncated free graded-commutative algebras with a differential.

A :class:`ModelAlgebra` is declared generator by generator; each generator
carries a degree and its differential (a form in earlier generators).
Elements are :class:`Form` objects: sparse maps from normalized words to
coefficients.  A word is a tuple of ``(generator_index, exponent)`` pairs
sorted by declaration order, so the Koszul sign of any product is absorbed
into the coefficient at multiplication time.

Generators flagged ``fiber=True`` (circle-bundle connection forms) do not
count towards the truncation degree; they are odd, so each appears at most
once in a word anyway.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .coeffs import is_scalar


class ModelMismatchError(ValueError):
    pass


class ModelDefinitionError(ValueError):
    pass


class InvalidFluxError(ValueError):
    pass


def _is_zero(c) -> bool:
    if isinstance(c, Form):
        return not c.terms
    return c == 0


class ModelAlgebra:
    """Free graded-commutative algebra on declared generators, truncated in degree.

    Generators are appended with :meth:`generator`; forms built before a later
    declaration stay valid because words are sparse.
    """

    def __init__(self, max_degree: int):
        if max_degree < 1:
            raise ModelDefinitionError("max_degree must be positive")
        self.max_degree = max_degree
        self.names: list[str] = []
        self.degrees: list[int] = []
        self.odd: list[bool] = []
        self.fiber: list[bool] = []
        self.differentials: list[Form] = []
        self._index: dict[str, int] = {}
        self._mul_cache: dict = {}
        self._d_cache: dict = {}

    def __repr__(self):
        gens = ", ".join(f"{n}:{d}" for n, d in zip(self.names, self.degrees))
        return f"ModelAlgebra(max_degree={self.max_degree}, [{gens}])"

    # -- declaration -------------------------------------------------------

    def generator(self, name: str, degree: int, d: "Form | int | None" = None,
                  fiber: bool = False) -> "Form":
        if name in self._index:
            raise ModelDefinitionError(f"generator {name!r} declared twice")
        if degree < 1:
            raise ModelDefinitionError(
                f"generator {name!r}: degree must be >= 1, got {degree}")
        if fiber and degree % 2 == 0:
            raise ModelDefinitionError(f"fiber generator {name!r} must be odd")
        if d is None or (not isinstance(d, Form) and d == 0):
            d = self.zero()
        if d.model is not self:
            raise ModelMismatchError(f"differential of {name!r} is over another model")
        if d.terms and d.degree() != degree + 1:
            raise ModelDefinitionError(
                f"d{name} must have pure degree {degree + 1}")
        if not self.d(d).is_zero():
            raise ModelDefinitionError(f"d(d{name}) != 0")
        idx = len(self.names)
        self.names.append(name)
        self.degrees.append(degree)
        self.odd.append(degree % 2 == 1)
        self.fiber.append(fiber)
        self.differentials.append(d)
        self._index[name] = idx
        return self.gen(name)

    # -- element constructors ---------------------------------------------

    def zero(self) -> "Form":
        return Form(self, {})

    def one(self) -> "Form":
        return Form(self, {(): Fraction(1)})

    def scalar(self, c) -> "Form":
        return Form(self, {(): c})

    def gen(self, name: str) -> "Form":
        try:
            idx = self._index[name]
        except KeyError:
            raise ModelDefinitionError(f"unknown generator {name!r}") from None
        return Form(self, {((idx, 1),): Fraction(1)})

    def __getitem__(self, name: str) -> "Form":
        return self.gen(name)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        return self._index[name]

    # -- word arithmetic --------------------------------------------------

    def word_degree(self, word) -> int:
        return sum(self.degrees[i] * e for i, e in word)

    def base_degree(self, word) -> int:
        return sum(self.degrees[i] * e for i, e in word if not self.fiber[i])

    def mul_words(self, w1, w2):
        """Return ``(word, sign)`` for ``w1 * w2`` or ``None`` if it vanishes."""
        key = (w1, w2)
        hit = self._mul_cache.get(key)
        if hit is not None or key in self._mul_cache:
            return hit
        odd = self.odd
        merged = dict(w1)
        sign = 1
        result = None
        for j, e in w2:
            if odd[j]:
                if j in merged:
                    break
                if sum(1 for i, _ in w1 if odd[i] and i > j) % 2:
                    sign = -sign
            merged[j] = merged.get(j, 0) + e
        else:
            word = tuple(sorted(merged.items()))
            if self.base_degree(word) <= self.max_degree:
                result = (word, sign)
        self._mul_cache[key] = result
        return result

    def d_word(self, word) -> dict:
        hit = self._d_cache.get(word)
        if hit is not None:
            return hit
        total: dict = {}
        prefix_deg = 0
        for pos, (i, e) in enumerate(word):
            dg = self.differentials[i]
            if dg.terms:
                prefix = Form(self, {word[:pos]: Fraction(1)})
                suffix = Form(self, {word[pos + 1:]: Fraction(1)})
                if self.odd[i]:
                    piece = dg
                else:
                    rest = ((i, e - 1),) if e > 1 else ()
                    piece = Form(self, {rest: Fraction(e)}) * dg
                term = prefix * piece * suffix
                if prefix_deg % 2:
                    term = -term
                for w, c in term.terms.items():
                    total[w] = total.get(w, 0) + c
            prefix_deg += self.degrees[i] * e
        total = {w: c for w, c in total.items() if c != 0}
        self._d_cache[word] = total
        return total

    def d(self, a: "Form") -> "Form":
        return d(a)


class Form:
    """Element of a :class:`ModelAlgebra`; immutable by convention."""

    __slots__ = ("model", "terms")

    def __init__(self, model: ModelAlgebra, terms: Mapping | None = None):
        self.model = model
        self.terms = {w: c for w, c in (terms or {}).items() if not _is_zero(c)}

    # -- inspection -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int | None:
        """Pure degree of a homogeneous form; ``None`` for zero or mixed."""
        degs = {self.model.word_degree(w) for w in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def degrees(self) -> set[int]:
        return {self.model.word_degree(w) for w in self.terms}

    def scalar_part(self):
        return self.terms.get((), 0)

    def coefficient(self, *names: str):
        """Coefficient of the normalized word built from ``names`` (must be sorted)."""
        word = self.model.one()
        for n in names:
            word = word * self.model.gen(n)
        ((w, sign),) = word.terms.items()
        return self.terms.get(w, 0) * sign

    def contains_generator(self, name: str) -> bool:
        idx = self.model.index(name)
        return any(i == idx for w in self.terms for i, _ in w)

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def map_coefficients(self, f) -> "Form":
        return Form(self.model, {w: f(c) for w, c in self.terms.items()})

    def word_str(self, word) -> str:
        parts = []
        for i, e in word:
            n = self.model.names[i]
            parts.append(n if e == 1 else f"{n}^{e}")
        return "*".join(parts) if parts else "1"

    def __repr__(self):
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda kv: (self.model.word_degree(kv[0]), kv[0]))
        return " + ".join(f"({c})*{self.word_str(w)}" if w else f"({c})" for w, c in items)

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: "Form"):
        if other.model is not self.model:
            raise ModelMismatchError("forms live in different model algebras")

    def _lift(self, other):
        if isinstance(other, Form):
            self._check(other)
            return other
        if is_scalar(other):
            return Form(self.model, {(): other})
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for w, c in o.terms.items():
            out[w] = out[w] + c if w in out else c
        return Form(self.model, out)

    __radd__ = __add__

    def __neg__(self):
        return Form(self.model, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Form):
            return wedge(self, other)
        if is_scalar(other):
            if other == 0:
                return Form(self.model, {})
            return Form(self.model, {w: c * other for w, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if is_scalar(other):
            if other == 0:
                return Form(self.model, {})
            return Form(self.model, {w: other * c for w, c in self.terms.items()})
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, int):
            other = Fraction(other)
        if is_scalar(other):
            return Form(self.model, {w: c / other for w, c in self.terms.items()})
        if isinstance(other, Form):
            return self * other.inverse()
        return NotImplemented

    def __pow__(self, n: int):
        out = self.model.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Form):
            return self.model is other.model and self.terms == other.terms
        if is_scalar(other):
            if other == 0:
                return not self.terms
            return self.terms == {(): other}
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def nilpotent_part(self) -> "Form":
        return Form(self.model, {w: c for w, c in self.terms.items() if w})

    def inverse(self) -> "Form":
        """Inverse of a form with invertible scalar part (geometric series)."""
        s = self.scalar_part()
        if _is_zero(s):
            raise ZeroDivisionError("form has no invertible scalar part")
        inv_s = 1 / s if not isinstance(s, int) else Fraction(1, s)
        n = self.nilpotent_part() * inv_s
        out = self.model.one()
        power = self.model.one()
        while True:
            power = -(power * n)
            if power.is_zero():
                break
            out = out + power
        return out * inv_s

    def d(self) -> "Form":
        return d(self)


def wedge(a: Form, b: Form) -> Form:
    """Graded-commutative product, truncated at the model's degree bound."""
    if a.model is not b.model:
        raise ModelMismatchError("forms live in different model algebras")
    model = a.model
    mul_words = model.mul_words
    out: dict = {}
    for w1, c1 in a.terms.items():
        for w2, c2 in b.terms.items():
            r = mul_words(w1, w2)
            if r is None:
                continue
            w, sign = r
            c = c1 * c2
            if sign < 0:
                c = -c
            if w in out:
                out[w] = out[w] + c
            else:
                out[w] = c
    return Form(model, out)


def d(a: Form) -> Form:
    """Exterior derivative extended from generators by the graded Leibniz rule."""
    model = a.model
    out: dict = {}
    for w, c in a.terms.items():
        if not w:
            continue
        for w2, c2 in model.d_word(w).items():
            v = c * c2
            out[w2] = out[w2] + v if w2 in out else v
    return Form(model, out)


def twisted_d(m: int, H: Form, a: Form) -> Form:
    """``d(a) + m * H ^ a`` for a closed 3-form ``H``."""
    check_flux(H)
    if H.model is not a.model:
        raise ModelMismatchError("flux and form live in different models")
    return d(a) + m * (H * a)


def check_flux(H: Form) -> None:
    if H.terms and H.degree() != 3:
        raise InvalidFluxError("flux must have pure degree 3")
    if not d(H).is_zero():
        raise InvalidFluxError("flux is not closed")


def degree_component(a: Form, p: int) -> Form:
    model = a.model
    return Form(model, {w: c for w, c in a.terms.items() if model.word_degree(w) == p})


def components(a: Form) -> dict[int, Form]:
    out: dict[int, dict] = {}
    for w, c in a.terms.items():
        out.setdefault(a.model.word_degree(w), {})[w] = c
    return {p: Form(a.model, t) for p, t in sorted(out.items())}


def form_exp(a: Form) -> Form:
    """``exp`` of a nilpotent form (scalar part must vanish)."""
    if not _is_zero(a.scalar_part()):
        raise ValueError("form_exp needs a nilpotent argument")
    out = a.model.one()
    term = a.model.one()
    k = 0
    while True:
        k += 1
        term = term * a / k
        if term.is_zero():
            return out
        out = out + term


def form_sum(forms: Iterable[Form], model: ModelAlgebra) -> Form:
    out: dict = {}
    for f in forms:
        for w, c in f.terms.items():
            out[w] = out[w] + c if w in out else c
    return Form(model, out)
