"""Ready-made surrogate pairs used by tests, the CLI and the acceptance suite."""
from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .forms import ModelAlgebra
from .gerbe import FormMatrix, GaugePathData, GerbeModuleSurrogate

OMEGA = cmath.exp(2j * math.pi / 3)


@dataclass
class EvenInstance:
    name: str
    E: GerbeModuleSurrogate
    Ep: GerbeModuleSurrogate
    degrees: tuple[int, ...]


def decomposable_pair() -> EvenInstance:
    """Roots ``(x, -x)`` against ``(0, 0)`` with ``x = e1 e2``, B = 0."""
    M = ModelAlgebra(4)
    e = [M.generator(f"e{i}", 1) for i in range(1, 5)]
    x = e[0] * e[1]
    zero = M.zero()
    E = GerbeModuleSurrogate(2, zero, roots=[x, -x], name="E")
    Ep = GerbeModuleSurrogate(2, zero, roots=[zero, zero], name="E'")
    return EvenInstance("decomposable", E, Ep, (0, 2, 4))


def cube_root_pair() -> EvenInstance:
    """Roots ``(b, wb, w^2 b)`` against zeros with nonzero B, up to degree 6.

    Power sums of the roots vanish below degree 6, so the anomaly vanishes
    through degree 4 while the degree-6 part of the determinant is nontrivial.
    """
    M = ModelAlgebra(6)
    b = M.generator("b", 2)
    beta = M.generator("beta", 2)
    B = beta.map_coefficients(complex)
    roots = [b.map_coefficients(lambda c, w=OMEGA ** k: c * w) for k in range(3)]
    zero = M.zero().map_coefficients(complex)
    E = GerbeModuleSurrogate(3, B, roots=roots, name="E")
    Ep = GerbeModuleSurrogate(3, B, roots=[zero] * 3, name="E'")
    return EvenInstance("cube-root", E, Ep, (0, 2, 4, 6))


def anomalous_pair() -> EvenInstance:
    """Rank one, root ``x`` against ``0``: the degree-2 anomaly is ``x``."""
    M = ModelAlgebra(4)
    x = M.generator("x", 2)
    E = GerbeModuleSurrogate(1, M.zero(), roots=[x], name="E")
    Ep = GerbeModuleSurrogate(1, M.zero(), roots=[M.zero()], name="E'")
    return EvenInstance("anomalous", E, Ep, (0, 2, 4))


def random_diagonal_pair(rng: random.Random, rank: int = 2, max_degree: int = 6,
                         n_two_forms: int = 3, exact: bool = True,
                         scale: Fraction = Fraction(1)) -> EvenInstance:
    """Random rational combinations of closed 2-form generators as roots.

    ``scale`` multiplies every coefficient; small scales keep floating
    coefficients of the resulting series moderate.
    """
    M = ModelAlgebra(max_degree)
    gens = [M.generator(f"x{i}", 2) for i in range(1, n_two_forms + 1)]

    def combo():
        f = M.zero()
        for g in gens:
            f = f + g * (Fraction(rng.randint(-3, 3), rng.randint(1, 3)) * scale)
        return f if exact else f.map_coefficients(complex)

    B = combo()
    E = GerbeModuleSurrogate(rank, B, roots=[combo() for _ in range(rank)], name="E")
    Ep = GerbeModuleSurrogate(rank, B, roots=[combo() for _ in range(rank)], name="E'")
    return EvenInstance("random", E, Ep, tuple(range(0, max_degree + 1, 2)))


@dataclass
class OddInstance:
    name: str
    path: GaugePathData
    degrees: tuple[int, ...]


def odd_diagonal() -> OddInstance:
    """``A_phi = diag(u, -u)`` with ``u`` closed and a flat trivial connection."""
    M = ModelAlgebra(4)
    u = M.generator("u", 1)
    mod = GerbeModuleSurrogate(2, M.zero(), conn=FormMatrix.zeros(M, 2), name="E")
    return OddInstance("odd-diagonal", GaugePathData(mod, FormMatrix.diag([u, -u])), (1, 3))


def odd_cube_root() -> OddInstance:
    """``conn = diag(c, wc, w^2 c)`` with ``dc = f`` and ``A_phi = diag(u, wu, w^2 u)``.

    Degrees 1 and 3 cancel, degree 5 carries ``u f^2``.
    """
    M = ModelAlgebra(5)
    f = M.generator("f", 2)
    c = M.generator("c", 1, d=f)
    u = M.generator("u", 1)
    beta = M.generator("beta", 2)

    def scaled(g, k):
        return g.map_coefficients(lambda v, w=OMEGA ** k: v * w)

    conn = FormMatrix.diag([scaled(c, k) for k in range(3)])
    A = FormMatrix.diag([scaled(u, k) for k in range(3)])
    mod = GerbeModuleSurrogate(3, beta.map_coefficients(complex), conn=conn, name="E")
    return OddInstance("odd-cube-root", GaugePathData(mod, A), (1, 3, 5))
