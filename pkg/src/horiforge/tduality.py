"""Circle-bundle models, level-m Hori maps and their graded versions.

Everything lives in one *correspondence algebra*: base generators plus the
two fiber connections ``A`` (on Z) and ``Ahat`` (on the dual Zhat).  Forms on
Z avoid ``Ahat``; forms on Zhat avoid ``A``.  The level-m map multiplies by
``exp(-m A Ahat) = 1 - m A Ahat`` and integrates ``A`` out, with
``int A^beta = beta`` once ``A`` is moved to the left.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .forms import (Form, InvalidFluxError, ModelAlgebra, check_flux, d, degree_component,
                    twisted_d)


class InvalidInputError(ValueError):
    pass


@dataclass(frozen=True)
class CircleBundleModel:
    """A circle bundle with connection ``fiber`` (``dA = F``) and flux ``h3 + Fhat A``."""

    algebra: ModelAlgebra
    fiber: str
    F: Form
    h3: Form
    Fhat: Form

    @property
    def A(self) -> Form:
        return self.algebra[self.fiber]

    @property
    def H(self) -> Form:
        return self.h3 + self.Fhat * self.A

    @property
    def fiber_index(self) -> int:
        return self.algebra.index(self.fiber)


def _fiber_indices(algebra: ModelAlgebra) -> set[int]:
    return {i for i, f in enumerate(algebra.fiber) if f}


def is_base_form(a: Form) -> bool:
    fib = _fiber_indices(a.model)
    return all(i not in fib for w in a.terms for i, _ in w)


@dataclass(frozen=True)
class TDualPair:
    algebra: ModelAlgebra
    Z: CircleBundleModel
    Zhat: CircleBundleModel

    @classmethod
    def build(cls, algebra: ModelAlgebra, fiber: str, dual_fiber: str,
              h3: Form | None = None) -> "TDualPair":
        """Pair the bundles with connections ``fiber`` and ``dual_fiber``.

        Their curvatures are read off the algebra; the fluxes are
        ``H = h3 + Fhat A`` and ``Hhat = h3 + F Ahat``.
        """
        for name in (fiber, dual_fiber):
            if name not in algebra or not algebra.fiber[algebra.index(name)]:
                raise InvalidInputError(f"{name!r} is not a declared fiber generator")
        F = d(algebra[fiber])
        Fhat = d(algebra[dual_fiber])
        h3 = algebra.zero() if h3 is None else h3
        for label, form in (("F", F), ("Fhat", Fhat), ("h3", h3)):
            if not is_base_form(form):
                raise InvalidInputError(f"{label} involves a fiber generator")
        if h3.terms and h3.degree() != 3:
            raise InvalidFluxError("h3 must have pure degree 3")
        if not (d(h3) + Fhat * F).is_zero():
            raise InvalidFluxError("d h3 + Fhat F != 0, so H is not closed")
        Z = CircleBundleModel(algebra, fiber, F, h3, Fhat)
        Zhat = CircleBundleModel(algebra, dual_fiber, Fhat, h3, F)
        check_flux(Z.H)
        check_flux(Zhat.H)
        return cls(algebra, Z, Zhat)

    def side(self, name: str) -> CircleBundleModel:
        if name == "Z":
            return self.Z
        if name == "Zhat":
            return self.Zhat
        raise ValueError(f"side must be 'Z' or 'Zhat', got {name!r}")

    def other(self, name: str) -> str:
        return "Zhat" if name == "Z" else "Z"

    def correspondence_residual(self) -> Form:
        """``Hhat - H - d(A Ahat)``; zero on a valid pair."""
        return self.Zhat.H - self.Z.H - d(self.Z.A * self.Zhat.A)


def _check_on(omega: Form, bundle: CircleBundleModel, other: CircleBundleModel):
    if omega.model is not bundle.algebra:
        raise InvalidInputError("form is over a different model")
    if omega.contains_generator(other.fiber):
        raise InvalidInputError(
            f"form involves {other.fiber!r}, which is not a generator on this side")


def _strip_fiber(omega: Form, idx: int) -> tuple[dict, dict]:
    """Split ``omega = alpha + A ^ gamma``; return the term dicts of ``alpha`` and ``gamma``."""
    model = omega.model
    alpha, gamma = {}, {}
    a_word = ((idx, 1),)
    for w, c in omega.terms.items():
        if any(i == idx for i, _ in w):
            rest = tuple(p for p in w if p[0] != idx)
            _, sign = model.mul_words(a_word, rest)
            gamma[rest] = c if sign > 0 else -c
        else:
            alpha[w] = c
    return alpha, gamma


def decompose(omega: Form, pair: TDualPair, side: str = "Z") -> tuple[Form, Form]:
    """``omega = alpha + beta ^ A`` with fiber-free ``alpha``, ``beta``."""
    bundle = pair.side(side)
    _check_on(omega, bundle, pair.side(pair.other(side)))
    model = omega.model
    idx = bundle.fiber_index
    alpha, _ = _strip_fiber(omega, idx)
    beta = {}
    a_word = ((idx, 1),)
    for w, c in omega.terms.items():
        if any(i == idx for i, _ in w):
            rest = tuple(p for p in w if p[0] != idx)
            _, sign = model.mul_words(rest, a_word)
            beta[rest] = c if sign > 0 else -c
    return Form(model, alpha), Form(model, beta)


def fiber_integrate(omega: Form, bundle: CircleBundleModel) -> Form:
    """``int A ^ gamma = gamma`` and ``int alpha = 0`` for fiber-free ``alpha``, ``gamma``."""
    _, gamma = _strip_fiber(omega, bundle.fiber_index)
    return Form(omega.model, gamma)


def hori_level(m: int, omega: Form, pair: TDualPair, side: str = "Z") -> Form:
    """Level-m Hori map from ``side`` to the dual side."""
    src = pair.side(side)
    dst = pair.side(pair.other(side))
    _check_on(omega, src, dst)
    kernel = omega.model.one() - m * (src.A * dst.A)
    return fiber_integrate(omega * kernel, src)


def hori_inverse(m: int, omega_hat: Form, pair: TDualPair, side: str = "Zhat") -> Form:
    """Inverse of the level-m map for ``m != 0``: the dual map divided by ``-m``."""
    if m == 0:
        raise ValueError("the level-0 map is not invertible")
    return hori_level(m, omega_hat, pair, side) / Fraction(-m)


def chain_residual(m: int, omega: Form, pair: TDualPair, side: str = "Z") -> Form:
    """``T(d + mH) omega + (d + mHhat) T omega``; zero for every ``omega``."""
    src = pair.side(side)
    dst = pair.side(pair.other(side))
    lhs = hori_level(m, twisted_d(m, src.H, omega), pair, side)
    rhs = twisted_d(m, dst.H, hori_level(m, omega, pair, side))
    return lhs + rhs


@dataclass
class GradedInvariantFamily:
    """Finitely many slots ``m -> omega_m`` standing for ``sum_m omega_m y^m``."""

    slots: dict[int, Form]
    side: str = "Z"
    closed: bool = False

    def __post_init__(self):
        self.slots = {m: w for m, w in self.slots.items() if not w.is_zero()}

    def is_zero(self) -> bool:
        return not self.slots

    def verify_closed(self, pair: TDualPair) -> bool:
        H = pair.side(self.side).H
        return all(twisted_d(m, H, w).is_zero() for m, w in self.slots.items())


def graded_hori(fam: GradedInvariantFamily, pair: TDualPair) -> GradedInvariantFamily:
    """Apply the level-m map in slot m; a closed family maps to a closed family."""
    out = GradedInvariantFamily({m: hori_level(m, w, pair, fam.side)
                                 for m, w in fam.slots.items()},
                                pair.other(fam.side))
    if fam.closed:
        out.closed = out.verify_closed(pair)
        if not out.closed:
            raise AssertionError("graded Hori image of a closed family is not closed")
    return out


def euler_residual(fam: GradedInvariantFamily, pair: TDualPair) -> GradedInvariantFamily:
    """Dual map after the map, plus ``m omega_m`` in each slot; identically zero."""
    back = graded_hori(GradedInvariantFamily(fam.slots, fam.side), pair)
    back = graded_hori(back, pair)
    slots = {}
    for m in set(fam.slots) | set(back.slots):
        w = back.slots.get(m, pair.algebra.zero())
        if m in fam.slots:
            w = w + m * fam.slots[m]
        slots[m] = w
    return GradedInvariantFamily(slots, fam.side)


def flux_duality_residuals(pair: TDualPair) -> tuple[Form, Form]:
    """``int_Z H - Fhat`` and ``int_Zhat Hhat - F``."""
    return (fiber_integrate(pair.Z.H, pair.Z) - pair.Z.Fhat,
            fiber_integrate(pair.Zhat.H, pair.Zhat) - pair.Zhat.Fhat)


# -- model builders ----------------------------------------------------------

def t3_pair(k: int = 1) -> TDualPair:
    """T^3 with ``H = k dx dy A`` and its dual nilmanifold (``dAhat = k dx dy``)."""
    alg = ModelAlgebra(2)
    dx = alg.generator("dx", 1)
    dy = alg.generator("dy", 1)
    alg.generator("A", 1, fiber=True)
    alg.generator("Ahat", 1, d=k * (dx * dy), fiber=True)
    return TDualPair.build(alg, "A", "Ahat")


def _rand_frac(rng: random.Random, lo: int = -3, hi: int = 3) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice((1, 1, 2, 3)))


def random_pair(rng: random.Random, max_degree: int = 5) -> TDualPair:
    """A randomized pair with nonzero ``F``, ``Fhat`` and ``h3``.

    Base: closed 1-forms ``e1..e4``, ``e5`` with ``d e5 = e1 e2``, and a closed
    2-form ``w``.  ``F = a e1 e2`` so ``h3 = -a e5 Fhat + (closed 3-form)``
    satisfies ``d h3 + Fhat F = 0``.
    """
    alg = ModelAlgebra(max_degree)
    e = [alg.generator(f"e{i}", 1) for i in range(1, 5)]
    e5 = alg.generator("e5", 1, d=e[0] * e[1])
    w = alg.generator("w", 2)
    closed2 = [e[i] * e[j] for i, j in itertools.combinations(range(4), 2)] + [w]
    closed3 = [e[i] * e[j] * e[k] for i, j, k in itertools.combinations(range(4), 3)]
    closed3 += [x * w for x in e]
    a = Fraction(rng.choice((-2, -1, 1, 2)), rng.choice((1, 2)))
    F = a * (e[0] * e[1])
    Fhat = sum((_rand_frac(rng) * c for c in closed2), alg.zero())
    if Fhat.is_zero():
        Fhat = w
    h3 = -a * (e5 * Fhat) + sum((_rand_frac(rng) * c for c in rng.sample(closed3, 3)),
                                alg.zero())
    alg.generator("A", 1, d=F, fiber=True)
    alg.generator("Ahat", 1, d=Fhat, fiber=True)
    return TDualPair.build(alg, "A", "Ahat", h3)


_MONOMIAL_CACHE: dict = {}


def _base_monomials(alg: ModelAlgebra) -> list[Form]:
    key = id(alg)
    hit = _MONOMIAL_CACHE.get(key)
    if hit is not None and hit[0] is alg:
        return hit[1]
    base = [alg.gen(n) for n, fib in zip(alg.names, alg.fiber) if not fib]
    layer = [alg.one()]
    out = [alg.one()]
    seen = {next(iter(alg.one().terms))}
    while layer:
        nxt = []
        for mono in layer:
            for g in base:
                p = mono * g
                if p.is_zero():
                    continue
                (wd,) = p.terms
                if wd in seen:
                    continue
                seen.add(wd)
                mon = Form(alg, {wd: Fraction(1)})
                nxt.append(mon)
                out.append(mon)
        layer = nxt
    _MONOMIAL_CACHE[key] = (alg, out)
    return out


def random_invariant_form(rng: random.Random, pair: TDualPair, side: str = "Z",
                          parity: int | None = None, n_terms: int = 4) -> Form:
    """Random form in base generators and this side's fiber, of one parity."""
    alg = pair.algebra
    A = pair.side(side).A
    if parity is None:
        parity = rng.randint(0, 1)
    monos = _base_monomials(alg)
    out = alg.zero()
    for _ in range(n_terms):
        mono = rng.choice(monos)
        deg = mono.degree()
        if (deg % 2) != parity:
            mono = mono * A
        out = out + _rand_frac(rng) * mono
    if out.is_zero():
        out = A if parity else alg.one()
    return out


def parity_of(omega: Form) -> int | None:
    """0 or 1 when all components share a parity, else ``None``."""
    ps = {p % 2 for p in omega.degrees()}
    return ps.pop() if len(ps) == 1 else None


__all__ = [
    "CircleBundleModel", "TDualPair", "GradedInvariantFamily", "InvalidInputError",
    "decompose", "fiber_integrate", "hori_level", "hori_inverse", "chain_residual",
    "graded_hori", "euler_residual", "flux_duality_residuals", "t3_pair", "random_pair",
    "random_invariant_form", "parity_of", "is_base_form", "degree_component",
]
