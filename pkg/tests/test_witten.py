import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horiforge.coeffs import ExactScalar
from horiforge.forms import ModelAlgebra, degree_component, form_exp
from horiforge.gerbe import FormMatrix, GaugePathData, GerbeModuleSurrogate, SurrogateError
from horiforge.instances import (anomalous_pair, cube_root_pair, decomposable_pair,
                                 odd_cube_root, odd_diagonal, random_diagonal_pair)
from horiforge.series import QYSeries, dz, eval_numeric, series_inv
from horiforge.theta import theta_derivative_numeric, theta_numeric, theta_series
from horiforge.witten import (WindowError, WittenKind, deri_residual, gch_ratio,
                              odd_jacobi_check, odd_witten, odd_witten_numeric,
                              theta_det_form, theta_det_numeric, witten_capital,
                              witten_jacobi_check, wmn_character, wmn_table)

F = Fraction
KINDS = list(WittenKind)
TWO_PI_I = ExactScalar({(1, 1): F(2)})


def rank_one(max_degree=4):
    M = ModelAlgebra(max_degree)
    x = M.generator("x", 2)
    E = GerbeModuleSurrogate(1, M.zero(), roots=[x])
    Ep = GerbeModuleSurrogate(1, M.zero(), roots=[M.zero()])
    return M, x, E, Ep


def test_kind_metadata():
    assert WittenKind.parse("W") is WittenKind.THETA
    assert WittenKind.parse("theta3") is WittenKind.THETA3
    assert [k.group.value for k in KINDS] == ["SL2Z", "Gamma0_2", "Gamma_upper0_2",
                                              "GammaTheta"]
    with pytest.raises(ValueError):
        WittenKind.parse("D")


@pytest.mark.parametrize("kind", KINDS)
def test_equal_modules_give_one(kind):
    inst = decomposable_pair()
    one = gch_ratio(kind, inst.E, inst.E, q_order=3, y_window=(-3, 3))
    assert one == QYSeries.monomial(inst.E.model.one(), q_order=3, y_window=(-3, 3))
    cap = witten_capital(kind, inst.E, inst.E, q_order=3, y_window=(-3, 3), exact=True)
    assert cap == one
    assert deri_residual(kind, inst.E, inst.E, q_order=3, y_window=(-3, 3),
                         exact=True).is_zero()


def test_rank_one_q1_coefficient():
    M, x, E, Ep = rank_one()
    g = gch_ratio("Theta", E, Ep, q_order=2, y_window=(-3, 3))
    e = form_exp(x * -TWO_PI_I)
    einv = form_exp(x * TWO_PI_I)
    got = {y: c for q, y, c in g.items() if q == 1}
    want = {F(1): M.one() - e, F(-1): M.one() - einv}
    assert got == want


def test_theta1_and_theta_differ_by_sign_at_1_1():
    inst = random_diagonal_pair(random.Random(1), rank=2, max_degree=4)
    a = wmn_character(1, 1, "Theta", inst.E, inst.Ep)
    b = wmn_character(1, 1, "Theta1", inst.E, inst.Ep)
    assert not a.is_zero() and b == -a


def test_theta2_starts_at_half():
    inst = random_diagonal_pair(random.Random(2), rank=2, max_degree=4)
    g = gch_ratio("Theta2", inst.E, inst.Ep, q_order=2, y_window=(-3, 3))
    qs = sorted({q for q, _, c in g.items() if q > 0})
    assert qs[0] == F(1, 2)
    assert wmn_character(0, 0, "Theta2", inst.E, inst.Ep) == inst.E.model.one()


def test_y_exponents_are_integral():
    inst = random_diagonal_pair(random.Random(3), rank=2, max_degree=4)
    for kind in KINDS:
        g = gch_ratio(kind, inst.E, inst.Ep, q_order=3, y_window=(-4, 4))
        assert all(y.denominator == 1 for _, y, _ in g.items())


def test_window_error():
    inst = decomposable_pair()
    with pytest.raises(WindowError):
        wmn_character(9, 1, "Theta", inst.E, inst.Ep, y_window=(-6, 6))


def test_rank_mismatch_is_rejected():
    M, x, E, _ = rank_one()
    with pytest.raises(SurrogateError):
        gch_ratio("Theta", E, GerbeModuleSurrogate(2, M.zero(), roots=[x, x]))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 3), st.sampled_from(KINDS))
def test_gch_matches_brute_force(seed, rank, kind):
    inst = random_diagonal_pair(random.Random(seed), rank=rank, max_degree=4)
    n_max = 4
    g = gch_ratio(kind, inst.E, inst.Ep, q_order=n_max, y_window=(-6, 6))
    table = wmn_table(kind, inst.E, inst.Ep, n_max)
    zero = inst.E.model.zero()
    keys = {(q, y) for q, y, _ in g.items()} | {(n, m) for n, m in table if -6 <= m <= 6}
    for n, m in keys:
        if n <= n_max:
            assert g.coefficient(n, m, zero) == table.get((n, m), zero)


@pytest.mark.parametrize("kind", ["Theta2", "Theta3"])
def test_rank_one_square_zero_determinant(kind):
    M, x, E, Ep = rank_one(max_degree=2)
    got = theta_det_form(kind, E, Ep, q_order=3, y_window=(-4, 4), exact=True)
    th = theta_series(kind.lower(), q_order=3, y_window=(-40, 40))
    log_der = (dz(th) * series_inv(th)).restrict(q_order=3, y_window=(-4, 4))
    want = QYSeries.monomial(M.one(), q_order=3, y_window=(-4, 4)) + log_der * x
    assert got == want


def test_capital_without_prefactor_is_the_character():
    inst = random_diagonal_pair(random.Random(5), rank=2, max_degree=4)
    for kind in ("Theta2", "Theta3"):
        cap = witten_capital(kind, inst.E, inst.Ep, q_order=3, y_window=(-3, 3), exact=True)
        assert cap == gch_ratio(kind, inst.E, inst.Ep, q_order=3, y_window=(-3, 3))


@pytest.mark.parametrize("kind", KINDS)
def test_central_identity_exact(kind):
    inst = random_diagonal_pair(random.Random(7), rank=2, max_degree=4)
    cap = witten_capital(kind, inst.E, inst.Ep, q_order=4, y_window=(-4, 4), exact=True)
    det = theta_det_form(kind, inst.E, inst.Ep, q_order=4, y_window=(-4, 4), exact=True)
    assert cap == det
    assert degree_component(det.coefficient(0, 0, inst.E.model.zero()), 0) == \
        inst.E.model.one()


@pytest.mark.parametrize("kind", KINDS)
def test_central_identity_with_b_field_in_floats(kind):
    inst = cube_root_pair()
    cap = witten_capital(kind, inst.E, inst.Ep, q_order=3, y_window=(-3, 3))
    det = theta_det_form(kind, inst.E, inst.Ep, q_order=3, y_window=(-3, 3))
    assert (cap - det).max_abs() < 1e-10


def test_lifted_capital_is_the_rounded_exact_value():
    inst = random_diagonal_pair(random.Random(10), rank=2, max_degree=4, scale=F(1, 4))
    E = GerbeModuleSurrogate(2, inst.E.B.map_coefficients(complex),
                             roots=[r.map_coefficients(complex) for r in inst.E.roots])
    Ep = GerbeModuleSurrogate(2, inst.Ep.B.map_coefficients(complex),
                              roots=[r.map_coefficients(complex) for r in inst.Ep.roots])
    exact = witten_capital("Theta", inst.E, inst.Ep, q_order=3, y_window=(-3, 3), exact=True)
    lifted = witten_capital("Theta", E, Ep, q_order=3, y_window=(-3, 3))
    plain = witten_capital("Theta", E, Ep, q_order=3, y_window=(-3, 3), lift=False)
    rounded = exact.map_coefficients(lambda f: f.map_coefficients(complex))
    assert (lifted - rounded).max_abs() < 1e-14
    assert (plain - rounded).max_abs() < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_deri_identity_exact(kind):
    inst = random_diagonal_pair(random.Random(8), rank=2, max_degree=4)
    assert deri_residual(kind, inst.E, inst.Ep, q_order=4, y_window=(-4, 4),
                         exact=True).is_zero()


def test_series_and_numeric_determinants_agree():
    inst = random_diagonal_pair(random.Random(9), rank=2, max_degree=4, exact=False,
                                scale=F(1, 4))
    z, tau = 0.07 + 0.03j, 1.3j
    for kind in ("Theta2", "Theta3"):
        s = theta_det_form(kind, inst.E, inst.Ep, q_order=10, y_window=(-14, 14))
        diff = eval_numeric(s, z, tau) - theta_det_numeric(kind, inst.E, inst.Ep, z, tau)
        assert diff.max_abs() < 1e-8


@pytest.mark.parametrize("kind", KINDS)
def test_jacobi_on_decomposable_pair(kind):
    inst = decomposable_pair()
    v = witten_jacobi_check(kind, inst.E, inst.Ep, degrees=inst.degrees, samples=3,
                            rng=random.Random(1))
    assert v.status == "pass", v.checks
    assert v.max_residual < 1e-7


@pytest.mark.parametrize("kind", KINDS)
def test_jacobi_on_degree_six_instance(kind):
    inst = cube_root_pair()
    v = witten_jacobi_check(kind, inst.E, inst.Ep, degrees=(6,), samples=2,
                            rng=random.Random(2))
    assert v.status == "pass"
    # the checked component is not trivially zero
    value = theta_det_numeric(kind, inst.E, inst.Ep, 0.1 + 0.05j, 1.1j)
    assert degree_component(value, 6).max_abs() > 1e-3


def test_anomalous_pair_is_refused_and_fails_when_forced():
    inst = anomalous_pair()
    v = witten_jacobi_check("Theta", inst.E, inst.Ep, samples=2)
    assert v.status == "refused"
    forced = witten_jacobi_check("Theta", inst.E, inst.Ep, degrees=(2,), samples=3,
                                 enforce_gate=False, rng=random.Random(3))
    assert forced.status == "fail"
    assert max(c.max_residual for c in forced.checks if c.transform == "S") > 1e-3


def test_odd_case_rejects_even_degrees():
    with pytest.raises(ValueError):
        odd_jacobi_check("Theta", odd_diagonal().path, degrees=(2,))
    inst = decomposable_pair()
    with pytest.raises(ValueError):
        witten_jacobi_check("Theta", inst.E, inst.Ep, degrees=(1,))


def test_odd_witten_of_zero_path():
    inst = odd_diagonal()
    mod = inst.path.module
    path = GaugePathData(mod, FormMatrix.zeros(mod.model, 2))
    assert odd_witten("Theta", path, q_order=2, y_window=(-2, 2), exact=True).is_zero()


def test_odd_witten_rank_one_scalar_oracle():
    M = ModelAlgebra(3)
    u = M.generator("u", 1)
    mod = GerbeModuleSurrogate(1, M.zero(), conn=FormMatrix([[M.zero()]]))
    path = GaugePathData(mod, FormMatrix([[u]]))
    z, tau = 0.12 + 0.04j, 1.1j
    for kind in KINDS:
        got = odd_witten_numeric(kind, path, z, tau)
        ratio = theta_derivative_numeric(kind.theta, z, tau) / theta_numeric(kind.theta, z, tau)
        assert (got + u * ratio).max_abs() < 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_odd_jacobi(kind):
    for inst in (odd_diagonal(), odd_cube_root()):
        v = odd_jacobi_check(kind, inst.path, degrees=inst.degrees, samples=2,
                             rng=random.Random(4))
        assert v.status == "pass", (inst.name, v.checks)


def test_odd_anomalous_path_is_refused():
    M = ModelAlgebra(3)
    u = M.generator("u", 1)
    mod = GerbeModuleSurrogate(1, M.zero(), conn=FormMatrix([[M.zero()]]))
    v = odd_jacobi_check("Theta", GaugePathData(mod, FormMatrix([[u]])))
    assert v.status == "refused"
