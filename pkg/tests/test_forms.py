from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horiforge.forms import (InvalidFluxError, ModelAlgebra, ModelDefinitionError,
                             ModelMismatchError, components, d, degree_component, form_exp,
                             twisted_d, wedge)


def plane():
    M = ModelAlgebra(2)
    return M, M.generator("dx", 1), M.generator("dy", 1)


def five_model():
    M = ModelAlgebra(5)
    e = [M.generator(f"e{i}", 1) for i in range(1, 4)]
    c = M.generator("c", 1, d=e[0] * e[1])
    w = M.generator("w", 2)
    v = M.generator("v", 2, d=w * e[2])
    return M, e + [c, w, v]


def test_wedge_of_one_forms():
    M, dx, dy = plane()
    assert wedge(dx, dy) == dx * dy
    assert (dx * dx).is_zero()
    assert (dx * dy * dx).is_zero()
    assert dy * dx == -(dx * dy)


def test_declaration_order_normalization():
    M = ModelAlgebra(4)
    F = M.generator("F", 2)
    a = M.generator("a", 1, d=F)
    # even times odd commutes
    assert a * F == F * a
    assert list((a * F).terms.values()) == [Fraction(1)]


def test_d_leibniz_on_curvature_model():
    M = ModelAlgebra(4)
    F = M.generator("F", 2)
    a = M.generator("a", 1, d=F)
    assert d(a * F) == F * F
    assert d(M.scalar(Fraction(3))).is_zero()


def test_rejects_bad_generators():
    M = ModelAlgebra(3)
    with pytest.raises(ModelDefinitionError):
        M.generator("f", 0)
    x = M.generator("x", 1)
    with pytest.raises(ModelDefinitionError):
        M.generator("y", 1, d=x)
    with pytest.raises(ModelDefinitionError):
        M.generator("x", 2)
    with pytest.raises(ModelDefinitionError):
        M.generator("A", 2, fiber=True)


def test_d_squared_checked_at_declaration():
    M = ModelAlgebra(4)
    a = M.generator("a", 1)
    b = M.generator("b", 1)
    c = M.generator("c", 1, d=a * b)
    e = M.generator("e", 2)
    # d(c e) = a b e is nonzero, so c e cannot be a differential
    with pytest.raises(ModelDefinitionError):
        M.generator("g", 2, d=c * e)


def test_truncation():
    M, dx, dy = plane()
    M2 = ModelAlgebra(2)
    w = M2.generator("w", 2)
    assert (w * w).is_zero()
    assert w.degree() == 2


def test_model_mismatch():
    M1, dx, _ = plane()
    M2, dz, _ = plane()
    with pytest.raises(ModelMismatchError):
        dx + dz


def test_twisted_d_examples():
    M = ModelAlgebra(3)
    dx, dy = M.generator("dx", 1), M.generator("dy", 1)
    A = M.generator("A", 1, fiber=True)
    H = 2 * (dx * dy * A)
    assert twisted_d(2, H, M.one()) == 2 * H
    assert twisted_d(5, H, H).is_zero()
    a = M.generator("a", 1)
    assert twisted_d(1, H, a) == -2 * (dx * dy * a * A)
    with pytest.raises(InvalidFluxError):
        twisted_d(1, dx * dy, a)


def test_degree_component():
    M, dx, dy = plane()
    f = M.one() + dx * dy
    assert degree_component(f, 2) == dx * dy
    assert degree_component(f, 1).is_zero()


def test_form_exp_nilpotent():
    M = ModelAlgebra(4)
    x = M.generator("x", 2)
    assert form_exp(x) == M.one() + x + x * x * Fraction(1, 2)
    with pytest.raises(ValueError):
        form_exp(M.one())


def test_inverse():
    M = ModelAlgebra(4)
    x = M.generator("x", 2)
    f = 2 + x
    assert f * f.inverse() == M.one()


# -- properties ---------------------------------------------------------------

MODEL, GENS = five_model()
_monomials = None


def _monos():
    global _monomials
    if _monomials is None:
        out = [MODEL.one()]
        layer = [MODEL.one()]
        for _ in range(5):
            nxt = []
            for m in layer:
                for g in GENS:
                    p = m * g
                    if not p.is_zero() and all(p != -q and p != q for q in out):
                        nxt.append(p)
                        out.append(p)
            layer = nxt
        _monomials = out
    return _monomials


@st.composite
def forms(draw, homogeneous=False):
    monos = _monos()
    idx = draw(st.lists(st.integers(0, len(monos) - 1), min_size=1, max_size=4))
    coeffs = draw(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=4),
                           min_size=len(idx), max_size=len(idx)))
    out = MODEL.zero()
    for i, c in zip(idx, coeffs):
        out = out + monos[i] * c
    if homogeneous:
        comps = components(out)
        if not comps:
            return out
        return comps[draw(st.sampled_from(sorted(comps)))]
    return out


@settings(max_examples=200, deadline=None)
@given(forms())
def test_d_squared_vanishes(a):
    assert d(d(a)).is_zero()


@settings(max_examples=150, deadline=None)
@given(forms(homogeneous=True), forms(homogeneous=True))
def test_graded_commutativity(a, b):
    if a.is_zero() or b.is_zero():
        return
    sign = (-1) ** (a.degree() * b.degree())
    assert (wedge(a, b) - sign * wedge(b, a)).is_zero()


@settings(max_examples=150, deadline=None)
@given(forms(homogeneous=True), forms())
def test_leibniz(a, b):
    if a.is_zero():
        return
    sign = (-1) ** a.degree()
    assert d(a * b) == d(a) * b + sign * (a * d(b))


@settings(max_examples=100, deadline=None)
@given(forms(), forms(), forms())
def test_associativity(a, b, c):
    assert (a * b) * c == a * (b * c)


@settings(max_examples=100, deadline=None)
@given(forms(), st.integers(-4, 4))
def test_twisted_d_squares_to_zero(a, m):
    e1, e2, e3, c, w, v = GENS
    H = e1 * e2 * e3 + w * e3
    assert twisted_d(m, H, twisted_d(m, H, a)).is_zero()


@settings(max_examples=100, deadline=None)
@given(forms())
def test_components_sum_back(a):
    total = MODEL.zero()
    for p in range(MODEL.max_degree + 1):
        total = total + degree_component(a, p)
    assert total == a
