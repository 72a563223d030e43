"""Coefficient rings.

Two rings are supported:

* ``EXACT``: Gaussian rationals with a formal, invertible symbol for pi.
  Integers and ``Fraction`` values are used directly where no ``i`` or
  ``pi`` is involved; anything else becomes an :class:`ExactScalar`.
* ``FLOAT``: Python complex numbers.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Any


class NotInvertibleError(ArithmeticError):
    pass


class ExactScalar:
    """A finite sum of ``c * i**j * pi**k`` with rational ``c``, ``j`` in {0, 1}.

    Stored as ``{(k, j): Fraction}``; negative ``k`` is allowed so monomials
    in pi can be inverted.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def coerce(cls, x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return cls({(0, 0): Fraction(x)})
        if isinstance(x, complex) or isinstance(x, float):
            z = complex(x)
            re, im = Fraction(z.real), Fraction(z.imag)
            if float(re) != z.real or float(im) != z.imag:
                raise TypeError(f"{x!r} is not exactly representable")
            return cls({(0, 0): re, (0, 1): im})
        raise TypeError(f"cannot coerce {x!r} to ExactScalar")

    @classmethod
    def pi(cls, power: int = 1) -> "ExactScalar":
        return cls({(power, 0): Fraction(1)})

    @classmethod
    def i(cls) -> "ExactScalar":
        return cls({(0, 1): Fraction(1)})

    def __repr__(self):
        if not self.terms:
            return "ExactScalar(0)"
        return f"ExactScalar({format_exact(self)})"

    def __complex__(self):
        total = 0j
        for (k, j), c in self.terms.items():
            total += float(c) * (math.pi ** k) * (1j if j else 1)
        return total

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, ExactScalar):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return not self.terms
            return self.terms == {(0, 0): Fraction(other)}
        if isinstance(other, (float, complex)):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def _binary(self, other):
        if isinstance(other, ExactScalar):
            return other
        if isinstance(other, (int, Fraction)):
            return ExactScalar({(0, 0): Fraction(other)})
        return None

    def __add__(self, other):
        o = self._binary(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) + other
            return NotImplemented
        out = dict(self.terms)
        for k, v in o.terms.items():
            out[k] = out.get(k, 0) + v
        return ExactScalar(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        o = self._binary(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) - other
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return ExactScalar()
            return ExactScalar({k: v * other for k, v in self.terms.items()})
        if not isinstance(other, ExactScalar):
            if isinstance(other, (float, complex)):
                return complex(self) * other
            return NotImplemented
        out: dict = {}
        for (k1, j1), c1 in self.terms.items():
            for (k2, j2), c2 in other.terms.items():
                j = j1 + j2
                c = c1 * c2
                if j == 2:
                    j, c = 0, -c
                key = (k1 + k2, j)
                out[key] = out.get(key, 0) + c
        return ExactScalar(out)

    __rmul__ = __mul__

    def inverse(self) -> "ExactScalar":
        """Inverse of a pi-monomial ``(a + b i) pi^k``; other values raise."""
        ks = {k for k, _ in self.terms}
        if len(ks) != 1:
            raise NotInvertibleError(f"{self!r} is not a pi-monomial")
        (k,) = ks
        a = self.terms.get((k, 0), Fraction(0))
        b = self.terms.get((k, 1), Fraction(0))
        n = a * a + b * b
        return ExactScalar({(-k, 0): a / n, (-k, 1): -b / n})

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactScalar({k: v / other for k, v in self.terms.items()})
        if isinstance(other, ExactScalar):
            return self * other.inverse()
        if isinstance(other, (float, complex)):
            return complex(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __abs__(self):
        return abs(complex(self))


def is_scalar(x: Any) -> bool:
    return isinstance(x, (numbers.Number, ExactScalar))


def format_exact(x) -> str:
    """Render an exact scalar as ``p/q``, ``a+bi`` or a pi-polynomial."""
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    parts = []
    for (k, j), c in sorted(x.terms.items()):
        s = str(c) + ("i" if j else "")
        if k:
            s += "*pi" + (f"^{k}" if k != 1 else "")
        parts.append(s)
    return " + ".join(parts) if parts else "0"


def format_scalar(x) -> str:
    if isinstance(x, (ExactScalar, int, Fraction)):
        return format_exact(x)
    z = complex(x)
    return f"{z.real!r}{z.imag:+.17g}i"


@dataclass(frozen=True)
class Ring:
    """Handle for one coefficient ring: constants and conversion."""

    name: str
    exact: bool

    @property
    def pi(self):
        return ExactScalar.pi() if self.exact else math.pi

    @property
    def i(self):
        return ExactScalar.i() if self.exact else 1j

    def scalar(self, x):
        if self.exact:
            if isinstance(x, (int, Fraction, ExactScalar)):
                return x
            return ExactScalar.coerce(x)
        return complex(x)


EXACT = Ring("exact", True)
FLOAT = Ring("float", False)

