"""Exact scalars in Q(i)[sigma, 1/sigma][sqrt(r) : r squarefree].

``sigma`` stands for (2 pi)^(1/2) and is kept formal, so every Gaussian
normalization constant stays exact and equality is syntactic on the
normal form.
"""
from __future__ import annotations

import math
import re as regex
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from .errors import DivisionUnsupported

__all__ = ["Scalar", "squarefree_split", "ZERO", "ONE", "I", "SIGMA"]


@lru_cache(maxsize=4096)
def squarefree_split(n: int) -> tuple[int, int]:
    """Return ``(s, r)`` with ``n == s*s*r`` and ``r`` squarefree (n > 0)."""
    if n <= 0:
        raise ValueError("squarefree_split needs a positive integer")
    s, r = 1, 1
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            r *= p
        p += 1 if p == 2 else 2
    return s, r * n


def _coerce(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)) or isinstance(x, Rational):
        return Scalar._from_terms({(0, 1): (Fraction(x), Fraction(0))})
    return NotImplemented


class Scalar:
    """Immutable exact scalar.

    The normal form is a sorted tuple of ``(sigma_exp, radicand, re, im)``
    with nonzero ``(re, im)`` and squarefree ``radicand``.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            self._terms = value._terms
        else:
            q = Fraction(value)
            self._terms = ((0, 1, q, Fraction(0)),) if q else ()
        self._hash = None

    @classmethod
    def _from_terms(cls, terms: dict) -> "Scalar":
        obj = object.__new__(cls)
        obj._terms = tuple(
            (k, r, re, im) for (k, r), (re, im) in sorted(terms.items()) if re or im
        )
        obj._hash = None
        return obj

    # constructors -------------------------------------------------------

    @classmethod
    def from_parts(cls, re=0, im=0, sigma=0, radicand=1) -> "Scalar":
        s, r = squarefree_split(radicand)
        return cls._from_terms({(sigma, r): (Fraction(re) * s, Fraction(im) * s)})

    @classmethod
    def sqrt(cls, value) -> "Scalar":
        """Exact square root of a nonnegative rational."""
        q = Fraction(value)
        if q < 0:
            raise ValueError("sqrt of a negative rational is not in the ring")
        if q == 0:
            return cls(0)
        s_num, r_num = squarefree_split(q.numerator * q.denominator)
        return cls._from_terms({(0, r_num): (Fraction(s_num, q.denominator), Fraction(0))})

    @classmethod
    def sigma(cls, power: int = 1) -> "Scalar":
        return cls._from_terms({(int(power), 1): (Fraction(1), Fraction(0))})

    # structure ----------------------------------------------------------

    @property
    def terms(self) -> tuple:
        return self._terms

    def _dict(self) -> dict:
        return {(k, r): (re, im) for k, r, re, im in self._terms}

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        t = self._terms
        return not t or (len(t) == 1 and t[0][0] == 0 and t[0][1] == 1 and not t[0][3])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._terms[0][2] if self._terms else Fraction(0)

    def is_single_term(self) -> bool:
        return len(self._terms) == 1

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        d = self._dict()
        for k, r, re, im in other._terms:
            a, b = d.get((k, r), (0, 0))
            d[(k, r)] = (a + re, b + im)
        return Scalar._from_terms(d)

    __radd__ = __add__

    def __neg__(self):
        return Scalar._from_terms({(k, r): (-re, -im) for k, r, re, im in self._terms})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        d: dict = {}
        for k1, r1, a1, b1 in self._terms:
            for k2, r2, a2, b2 in other._terms:
                g = math.gcd(r1, r2)
                rad = (r1 // g) * (r2 // g)
                re = (a1 * a2 - b1 * b2) * g
                im = (a1 * b2 + b1 * a2) * g
                key = (k1 + k2, rad)
                x, y = d.get(key, (0, 0))
                d[key] = (x + re, y + im)
        return Scalar._from_terms(d)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if not self._terms:
            raise ZeroDivisionError("division by zero scalar")
        if len(self._terms) != 1:
            raise DivisionUnsupported(f"cannot divide by the multi-term scalar {self}")
        k, r, a, b = self._terms[0]
        n = a * a + b * b
        # 1/(c sqrt r) = conj(c) sqrt r / (|c|^2 r)
        return Scalar._from_terms({(-k, r): (a / (n * r), -b / (n * r))})

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "Scalar":
        return Scalar._from_terms({(k, r): (re, -im) for k, r, re, im in self._terms})

    def abs_single(self) -> "Scalar":
        """|x| for a single-term scalar with real coefficient."""
        if not self._terms:
            return self
        if len(self._terms) != 1 or self._terms[0][3]:
            raise DivisionUnsupported(f"absolute value of {self} is not a single real term")
        k, r, a, _ = self._terms[0]
        return Scalar._from_terms({(k, r): (abs(a), Fraction(0))})

    def sign(self) -> int:
        """Exact sign of a real scalar whose terms share one sign."""
        if not self._terms:
            return 0
        if any(t[3] for t in self._terms):
            raise ValueError(f"{self} is not real")
        signs = {1 if t[2] > 0 else -1 for t in self._terms}
        if len(signs) == 1:
            return signs.pop()
        raise ValueError(f"sign of {self} is not decidable termwise")

    def is_positive(self) -> bool:
        try:
            return self.sign() > 0
        except ValueError:
            return False

    # comparison ---------------------------------------------------------

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms) if not self.is_rational() else hash(self.to_fraction())
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # display ------------------------------------------------------------

    def __complex__(self):
        """Numeric value (display only; sigma^2 -> 2 pi)."""
        total = 0j
        for k, r, re, im in self._terms:
            total += complex(float(re), float(im)) * math.sqrt(r) * (2 * math.pi) ** (k / 2)
        return total

    def __float__(self):
        z = complex(self)
        if abs(z.imag) > 1e-12 * max(1.0, abs(z.real)):
            raise ValueError(f"{self} is not real")
        return z.real

    def __repr__(self):
        return f"Scalar({str(self)!r})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for k, r, re, im in self._terms:
            c = _coeff_str(re, im)
            factors = []
            if r != 1:
                factors.append(f"sqrt:{r}")
            if k != 0:
                factors.append(f"sigma:{k}")
            if not factors:
                parts.append(c)
            elif c == "1":
                parts.append("*".join(factors))
            else:
                parts.append("*".join([c] + factors))
        return " + ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        """Inverse of ``str``; also accepts plain rationals like ``"3/4"``."""
        text = text.strip()
        if not text:
            raise ValueError("empty scalar string")
        total = ZERO
        for part in text.split(" + "):
            coeff, k, r = None, 0, 1
            for f in part.split("*"):
                f = f.strip()
                if f.startswith("sqrt:"):
                    r = int(f[5:])
                elif f.startswith("sigma:"):
                    k = int(f[6:])
                else:
                    if coeff is not None:
                        raise ValueError(f"malformed scalar term {part!r}")
                    coeff = _parse_coeff(f)
            re, im = coeff if coeff is not None else (Fraction(1), Fraction(0))
            if r < 1 or squarefree_split(r)[0] != 1:
                raise ValueError(f"radicand {r} is not squarefree")
            total = total + Scalar._from_terms({(k, r): (re, im)})
        return total

    def to_json(self) -> list:
        return [[k, r, _coeff_str(re, im)] for k, r, re, im in self._terms]

    @classmethod
    def from_json(cls, data) -> "Scalar":
        if isinstance(data, (str, int)):
            return cls.parse(str(data))
        d = {}
        for item in data:
            k, r, c = item
            if not isinstance(k, int) or not isinstance(r, int) or r < 1:
                raise ValueError(f"bad scalar term {item!r}")
            if squarefree_split(r)[0] != 1:
                raise ValueError(f"radicand {r} is not squarefree")
            if (k, r) in d:
                raise ValueError(f"duplicate scalar term {item!r}")
            d[(k, r)] = _parse_coeff(c)
        return cls._from_terms(d)


_COMPLEX_RE = regex.compile(r"^(-?\d+(?:/\d+)?)([+-])(\d+(?:/\d+)?)i$")


def _coeff_str(re_: Fraction, im: Fraction) -> str:
    if not im:
        return str(re_)
    return f"{re_}{'+' if im >= 0 else '-'}{abs(im)}i"


def _parse_coeff(text: str) -> tuple[Fraction, Fraction]:
    text = text.strip()
    m = _COMPLEX_RE.match(text)
    if m:
        im = Fraction(m.group(3))
        return Fraction(m.group(1)), im if m.group(2) == "+" else -im
    if text.endswith("i"):
        raise ValueError(f"malformed complex coefficient {text!r}")
    return Fraction(text), Fraction(0)


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar._from_terms({(0, 1): (Fraction(0), Fraction(1))})
SIGMA = Scalar.sigma(1)
