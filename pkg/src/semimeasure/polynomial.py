"""Sparse polynomials on a FinVec with exact coefficients.

Coefficients are ``Fraction`` when rational and ``Scalar`` otherwise; the
two interoperate, and rational Scalars are demoted so the normal form is
unique.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import SpaceMismatch
from .linalg import FinVec
from .scalar import Scalar


def normalize_coeff(c):
    if isinstance(c, Scalar):
        return c.to_fraction() if c.is_rational() else c
    return Fraction(c)


def coeff_to_str(c) -> str:
    return str(c)


def coeff_from_str(s: str):
    return normalize_coeff(Scalar.parse(s))


def _add_into(d: dict, key, c):
    if key in d:
        s = d[key] + c
        if s == 0:
            del d[key]
        else:
            d[key] = s
    elif c != 0:
        d[key] = c


class Polynomial:
    __slots__ = ("space", "_terms", "_key")

    def __init__(self, space: FinVec, terms: Mapping[tuple, object] | None = None):
        self.space = space
        n = space.dim
        d: dict = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != n or any(x < 0 for x in e):
                raise SpaceMismatch(f"exponent {e} does not fit {space.name}")
            _add_into(d, e, normalize_coeff(c))
        self._terms = {e: normalize_coeff(c) for e, c in d.items()}
        self._key = None

    @classmethod
    def _raw(cls, space: FinVec, d: dict) -> "Polynomial":
        obj = object.__new__(cls)
        obj.space = space
        obj._terms = {e: normalize_coeff(c) for e, c in d.items() if c != 0}
        obj._key = None
        return obj

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, space: FinVec, c=1) -> "Polynomial":
        return cls._raw(space, {(0,) * space.dim: c})

    @classmethod
    def zero(cls, space: FinVec) -> "Polynomial":
        return cls._raw(space, {})

    @classmethod
    def variable(cls, space: FinVec, i: int) -> "Polynomial":
        e = [0] * space.dim
        e[i] = 1
        return cls._raw(space, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, space: FinVec, exps: Sequence[int], c=1) -> "Polynomial":
        return cls(space, {tuple(exps): c})

    @classmethod
    def linear(cls, space: FinVec, coeffs: Sequence) -> "Polynomial":
        d = {}
        for i, c in enumerate(coeffs):
            e = [0] * space.dim
            e[i] = 1
            d[tuple(e)] = c
        return cls._raw(space, d)

    # structure ----------------------------------------------------------

    @property
    def terms(self) -> dict:
        return self._terms

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def constant_term(self):
        return self._terms.get((0,) * self.space.dim, Fraction(0))

    def _check(self, other: "Polynomial"):
        if other.space != self.space:
            raise SpaceMismatch(f"{self.space.name} vs {other.space.name}")

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.space == other.space and self._terms == other._terms
        if isinstance(other, (int, Fraction, Scalar)):
            return self == Polynomial.constant(self.space, other)
        return NotImplemented

    def __hash__(self):
        if self._key is None:
            self._key = hash((self.space, tuple(sorted((e, str(c)) for e, c in self._terms.items()))))
        return self._key

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.space, other)
        self._check(other)
        d = dict(self._terms)
        for e, c in other._terms.items():
            _add_into(d, e, c)
        return Polynomial._raw(self.space, d)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.space, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = normalize_coeff(c)
        if c == 0:
            return Polynomial.zero(self.space)
        return Polynomial._raw(self.space, {e: x * c for e, x in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        d: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                _add_into(d, tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
        return Polynomial._raw(self.space, d)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        out = Polynomial.constant(self.space)
        for _ in range(n):
            out = out * self
        return out

    # calculus -----------------------------------------------------------

    def derivative(self, i: int) -> "Polynomial":
        d: dict = {}
        for e, c in self._terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                _add_into(d, tuple(f), c * e[i])
        return Polynomial._raw(self.space, d)

    def directional_derivative(self, v: Sequence) -> "Polynomial":
        out = Polynomial.zero(self.space)
        for i, x in enumerate(v):
            if x:
                out = out + self.derivative(i).scale(x)
        return out

    def evaluate(self, point: Sequence):
        total = Fraction(0)
        for e, c in self._terms.items():
            m = Fraction(1)
            for x, k in zip(point, e):
                if k:
                    m *= Fraction(x) ** k
            total = total + c * m
        return normalize_coeff(total)

    def substitute(self, target: FinVec, rows: Sequence[Sequence]) -> "Polynomial":
        """p(M y): variable i of self becomes sum_j rows[i][j] y_j on ``target``."""
        lin = [Polynomial.linear(target, r) for r in rows]
        cache: dict = {}

        def power(i: int, k: int) -> Polynomial:
            key = (i, k)
            if key not in cache:
                cache[key] = Polynomial.constant(target) if k == 0 else power(i, k - 1) * lin[i]
            return cache[key]

        d: dict = {}
        for e, c in self._terms.items():
            acc = Polynomial.constant(target, c)
            for i, k in enumerate(e):
                if k:
                    acc = acc * power(i, k)
            for e2, c2 in acc._terms.items():
                _add_into(d, e2, c2)
        return Polynomial._raw(target, d)

    def parity(self) -> "Polynomial":
        """p(-x)."""
        return Polynomial._raw(
            self.space, {e: (-c if sum(e) % 2 else c) for e, c in self._terms.items()}
        )

    def relabel(self, space: FinVec, perm: Sequence[int] | None = None) -> "Polynomial":
        """Same coefficients on ``space``; variable i moves to slot perm[i]."""
        if space.dim != self.space.dim:
            raise SpaceMismatch(f"{space.name} has the wrong dimension")
        if perm is None:
            return Polynomial._raw(space, dict(self._terms))
        d = {}
        for e, c in self._terms.items():
            f = [0] * space.dim
            for i, k in enumerate(e):
                f[perm[i]] = k
            d[tuple(f)] = c
        return Polynomial._raw(space, d)

    def map_coeffs(self, fn) -> "Polynomial":
        return Polynomial._raw(self.space, {e: fn(c) for e, c in self._terms.items()})

    # io -----------------------------------------------------------------

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.items():
            mono = "*".join(
                f"{self.space.basis[i]}^{k}" if k > 1 else self.space.basis[i]
                for i, k in enumerate(e)
                if k
            )
            parts.append(f"({c})*{mono}" if mono else f"({c})")
        return " + ".join(parts)

    def to_json(self) -> list:
        return [[list(e), coeff_to_str(c)] for e, c in self.items()]

    @classmethod
    def from_json(cls, space: FinVec, data: Iterable) -> "Polynomial":
        d = {}
        for e, c in data:
            e = tuple(e)
            if e in d:
                raise ValueError(f"duplicate exponent {e}")
            d[e] = coeff_from_str(c)
        return cls(space, d)
