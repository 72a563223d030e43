import cmath
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horiforge.modular import (IDENTITY, JacobiSpec, ModularMatrix, ResampleSignal, S,
                               SubgroupId, T, act, check_jacobi, generator_words, generators,
                               jacobi_residual, membership, sample_for, word)
from horiforge.theta import theta_numeric

GROUPS = list(SubgroupId)


def eta(tau):
    q = cmath.exp(2j * math.pi * tau)
    out = cmath.exp(2j * math.pi * tau / 24)
    for n in range(1, 60):
        out *= 1 - q ** n
    return out


def phi(z, tau):
    """theta^2 / eta^6: weight -2, index 1 on the full modular group."""
    th = theta_numeric("theta", z, tau)
    return th * th / eta(tau) ** 6


def test_matrix_basics():
    assert S @ S == ModularMatrix(-1, 0, 0, -1)
    assert (S @ T) @ (S @ T) @ (S @ T) == ModularMatrix(-1, 0, 0, -1)
    assert T @ T.inverse() == IDENTITY
    with pytest.raises(ValueError):
        ModularMatrix(1, 1, 1, 1)
    assert str(T) == "[[1, 1], [0, 1]]"


@pytest.mark.parametrize("group", GROUPS)
def test_generators_are_members(group):
    for name, g in generator_words(group):
        assert membership(g, group), name


def test_membership_examples():
    assert not membership(S, "Gamma0_2")
    assert membership(T, "Gamma0_2")
    assert not membership(T, "Gamma_upper0_2")
    assert membership(S, "GammaTheta")
    assert not membership(T, "GammaTheta")
    with pytest.raises(ValueError):
        membership(S, "Gamma7")


letters = st.lists(st.sampled_from([0, 1]), max_size=8)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(GROUPS), letters, st.lists(st.booleans(), max_size=8))
def test_words_in_generators_stay_in_group(group, picks, inverts):
    gens = generators(group)
    g = IDENTITY
    for k, inv in zip(picks, inverts + [False] * len(picks)):
        h = gens[k]
        g = g @ (h.inverse() if inv else h)
    assert membership(g, group)


@settings(max_examples=100, deadline=None)
@given(letters, letters, st.floats(-0.4, 0.4), st.floats(0.8, 1.3))
def test_action_is_a_group_action(w1, w2, x, t):
    g1 = word(*[(S, T)[k] for k in w1])
    g2 = word(*[(S, T)[k] for k in w2])
    z, tau = complex(x, 0.1), complex(0, t)
    direct = act(g1 @ g2, z, tau)
    z2, tau2 = act(g2, z, tau)
    composed = act(g1, z2, tau2)
    for a, b in zip(direct, composed):
        assert abs(a - b) < 1e-9 * (1 + abs(a))


def test_known_jacobi_form_passes():
    spec = JacobiSpec(-2, 1, SubgroupId.SL2Z)
    reports = check_jacobi(phi, spec, random.Random(1), 20)
    assert [r.name for r in reports] == ["S", "T", "z+tau", "z+1"]
    assert max(r.max_residual for r in reports) < 1e-9


def test_wrong_index_is_detected():
    spec = JacobiSpec(-2, 2, SubgroupId.SL2Z)
    reports = check_jacobi(phi, spec, random.Random(2), 5)
    assert max(r.max_residual for r in reports) > 1e-3


def test_theta_ratio_fourth_power_is_gamma0_invariant():
    def ratio4(z, tau):
        return (theta_numeric("theta1", z, tau) / theta_numeric("theta", z, tau)) ** 4

    spec = JacobiSpec(0, 0, SubgroupId.GAMMA0_2)
    reports = check_jacobi(ratio4, spec, random.Random(3), 20)
    assert max(r.max_residual for r in reports) < 1e-8


def test_theta_ratio_itself_picks_up_a_multiplier():
    def ratio(z, tau):
        return theta_numeric("theta1", z, tau) / theta_numeric("theta", z, tau)

    spec = JacobiSpec(0, 0, SubgroupId.GAMMA0_2)
    worst = {r.name: r.max_residual for r in check_jacobi(ratio, spec, random.Random(4), 5)}
    assert worst["T"] < 1e-9
    assert worst["ST^2ST"] > 1e-3
    assert worst["z+tau"] > 1e-3


def test_resample_signal_is_honoured():
    calls = []

    def f(z, tau):
        calls.append(z)
        if len(calls) == 1:
            raise ResampleSignal("near a zero")
        return 1.0

    spec = JacobiSpec(0, 0, SubgroupId.SL2Z)
    reps = check_jacobi(f, spec, random.Random(5), 1, [("T", T)])
    assert reps[0].resamples == 1 and reps[0].max_residual == 0


def test_sample_for_keeps_image_above_threshold():
    rng = random.Random(6)
    g = word(S, T, T, S, T)
    for _ in range(20):
        z, tau = sample_for(g, rng)
        assert act(g, z, tau)[1].imag >= 0.15


def test_spec_requires_integers():
    with pytest.raises(TypeError):
        JacobiSpec(0.5, 0, SubgroupId.SL2Z)


def test_lattice_residual_direct():
    spec = JacobiSpec(-2, 1, SubgroupId.SL2Z)
    assert jacobi_residual(phi, spec, (1, 0), 0.1 + 0.05j, 1.1j) < 1e-10
