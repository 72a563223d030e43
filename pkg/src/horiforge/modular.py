"""Modular group actions and Jacobi-form transformation residuals."""
from __future__ import annotations

import cmath
import enum
import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable

from .forms import Form
from .theta import sample_point


class ResampleSignal(Exception):
    """Raised when an evaluation point sits too close to a singularity."""


class SamplingExhaustedError(RuntimeError):
    pass


# Denominators smaller than this trigger a resample.
SINGULAR_THRESHOLD = 1e-10
MAX_RETRIES = 20


@dataclass(frozen=True)
class ModularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self} is not 1")

    def __matmul__(self, other: "ModularMatrix") -> "ModularMatrix":
        return ModularMatrix(self.a * other.a + self.b * other.c,
                             self.a * other.b + self.b * other.d,
                             self.c * other.a + self.d * other.c,
                             self.c * other.b + self.d * other.d)

    def inverse(self) -> "ModularMatrix":
        return ModularMatrix(self.d, -self.b, -self.c, self.a)

    def as_list(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def __str__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


IDENTITY = ModularMatrix(1, 0, 0, 1)
S = ModularMatrix(0, -1, 1, 0)
T = ModularMatrix(1, 1, 0, 1)


def word(*letters: ModularMatrix) -> ModularMatrix:
    out = IDENTITY
    for g in letters:
        out = out @ g
    return out


class SubgroupId(enum.Enum):
    SL2Z = "SL2Z"
    GAMMA0_2 = "Gamma0_2"
    GAMMA_UPPER0_2 = "Gamma_upper0_2"
    GAMMA_THETA = "GammaTheta"

    @classmethod
    def parse(cls, name: "str | SubgroupId") -> "SubgroupId":
        if isinstance(name, SubgroupId):
            return name
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown subgroup {name!r}; expected one of "
                             f"{[g.value for g in cls]}") from None


def membership(gamma: ModularMatrix, group) -> bool:
    group = SubgroupId.parse(group)
    if group is SubgroupId.SL2Z:
        return True
    if group is SubgroupId.GAMMA0_2:
        return gamma.c % 2 == 0
    if group is SubgroupId.GAMMA_UPPER0_2:
        return gamma.b % 2 == 0
    parity = (gamma.a % 2, gamma.b % 2, gamma.c % 2, gamma.d % 2)
    return parity in ((1, 0, 0, 1), (0, 1, 1, 0))


_GENERATOR_WORDS = {
    SubgroupId.SL2Z: (("S", (S,)), ("T", (T,))),
    SubgroupId.GAMMA0_2: (("T", (T,)), ("ST^2ST", (S, T, T, S, T))),
    SubgroupId.GAMMA_UPPER0_2: (("STS", (S, T, S)), ("T^2STS", (T, T, S, T, S))),
    SubgroupId.GAMMA_THETA: (("S", (S,)), ("T^2", (T, T))),
}


def generator_words(group) -> list[tuple[str, ModularMatrix]]:
    group = SubgroupId.parse(group)
    return [(name, word(*letters)) for name, letters in _GENERATOR_WORDS[group]]


def generators(group) -> list[ModularMatrix]:
    return [m for _, m in generator_words(group)]


def act(gamma: ModularMatrix, z: complex, tau: complex) -> tuple[complex, complex]:
    j = gamma.c * tau + gamma.d
    return z / j, (gamma.a * tau + gamma.b) / j


@dataclass(frozen=True)
class JacobiSpec:
    weight: int
    index: int
    group: SubgroupId

    def __post_init__(self):
        if not isinstance(self.weight, int) or not isinstance(self.index, int):
            raise TypeError("weight and index must be integers")

    def transforms(self) -> list[tuple[str, "ModularMatrix | tuple[int, int]"]]:
        """Generators of the group plus the two lattice generators."""
        return generator_words(self.group) + [("z+tau", (1, 0)), ("z+1", (0, 1))]


def _difference_size(x) -> float:
    if isinstance(x, Form):
        return x.max_abs()
    return abs(x)


def jacobi_sides(f: Callable, spec: JacobiSpec, transform, z: complex, tau: complex):
    """Both sides of the automorphy relation for one transform."""
    s, l = spec.weight, spec.index
    if isinstance(transform, ModularMatrix):
        z2, tau2 = act(transform, z, tau)
        j = transform.c * tau + transform.d
        factor = j ** s * cmath.exp(2j * math.pi * l * transform.c * z * z / j)
        return f(z2, tau2), f(z, tau) * factor
    lam, mu = transform
    factor = cmath.exp(-2j * math.pi * l * (lam * lam * tau + 2 * lam * z))
    return f(z + lam * tau + mu, tau), f(z, tau) * factor


def jacobi_residual(f: Callable, spec: JacobiSpec, transform, z: complex,
                    tau: complex) -> float:
    """Size of the automorphy defect; Form values use the largest coefficient.

    ``f`` may raise :class:`ResampleSignal` near a singular point.
    """
    lhs, rhs = jacobi_sides(f, spec, transform, z, tau)
    return _difference_size(lhs - rhs)


def image_tau(transform, tau: complex) -> complex:
    if isinstance(transform, ModularMatrix):
        return act(transform, 0, tau)[1]
    return tau


def sample_for(transform, rng: random.Random, min_image_im: float = 0.15):
    """A sample point whose image under ``transform`` stays away from the real axis."""
    for _ in range(MAX_RETRIES):
        z, tau = sample_point(rng)
        if image_tau(transform, tau).imag >= min_image_im:
            return z, tau
    raise SamplingExhaustedError(f"no admissible sample for {transform}")


@dataclass
class TransformReport:
    name: str
    max_residual: float
    samples: int
    resamples: int


def check_jacobi(f: Callable, spec: JacobiSpec, rng: random.Random, samples: int,
                 transforms: Iterable | None = None) -> list[TransformReport]:
    """Max residual per transform over ``samples`` random points, resampling near zeros."""
    reports = []
    for name, tr in (transforms if transforms is not None else spec.transforms()):
        worst, resamples = 0.0, 0
        for _ in range(samples):
            for attempt in range(MAX_RETRIES + 1):
                z, tau = sample_for(tr, rng)
                try:
                    r = jacobi_residual(f, spec, tr, z, tau)
                except (ResampleSignal, ZeroDivisionError):
                    resamples += 1
                    continue
                worst = max(worst, r)
                break
            else:
                raise SamplingExhaustedError(f"{name}: {MAX_RETRIES} resamples in a row")
        reports.append(TransformReport(name, worst, samples, resamples))
    return reports
