"""Seeded random exact objects for audits and property tests."""
from __future__ import annotations

import random
from fractions import Fraction

from .lattice import GLElement, WindowSpace
from .linalg import FinVec, LinMap, identity, inverse, matmul, rank, transpose
from .polynomial import Polynomial
from .quadforms import PosDefForm


def small_matrix(rng: random.Random, rows: int, cols: int, lo: int = -2, hi: int = 2) -> tuple:
    return tuple(tuple(Fraction(rng.randint(lo, hi)) for _ in range(cols)) for _ in range(rows))


def random_posdef(rng: random.Random, space: FinVec) -> PosDefForm:
    """A A^T + I with small integer A."""
    n = space.dim
    a = small_matrix(rng, n, n, -1, 1)
    m = matmul(a, transpose(a, n), out_cols=n) if n else ()
    m = tuple(tuple(m[i][j] + (1 if i == j else 0) for j in range(n)) for i in range(n))
    return PosDefForm(space, m)


def random_polynomial(rng: random.Random, space: FinVec, degree: int, terms: int = 4) -> Polynomial:
    n = space.dim
    d = {}
    for _ in range(terms):
        e = [0] * n
        for _ in range(rng.randint(0, degree)):
            if n:
                e[rng.randrange(n)] += 1
        d[tuple(e)] = d.get(tuple(e), 0) + Fraction(rng.randint(-3, 3), rng.randint(1, 2))
    return Polynomial(space, d)


def random_surjection(rng: random.Random, source: FinVec, target_dim: int, name: str = "T") -> LinMap:
    target = FinVec.standard(target_dim, name, prefix="y")
    while True:
        m = small_matrix(rng, target_dim, source.dim)
        if target_dim == 0 or rank(m) == target_dim:
            return LinMap(source, target, m if target_dim else ())


def random_injection(rng: random.Random, target: FinVec, source_dim: int, name: str = "S") -> LinMap:
    source = FinVec.standard(source_dim, name, prefix="s")
    while True:
        m = small_matrix(rng, target.dim, source_dim)
        if source_dim == 0 or rank(m) == source_dim:
            return LinMap(source, target, m)


def random_gl(rng: random.Random, space: WindowSpace) -> GLElement:
    n = space.size
    while True:
        m = small_matrix(rng, n, n, -1, 1)
        m = tuple(tuple(m[i][j] + (2 if i == j else 0) for j in range(n)) for i in range(n))
        if rank(m) == n:
            return GLElement(space, m)


def cayley_orthogonal(q: PosDefForm, skew: tuple) -> tuple:
    """g = (1 - q^{-1} S)^{-1} (1 + q^{-1} S) preserves q for skew S."""
    n = q.dim
    a = matmul(inverse(q.matrix), skew)
    one = identity(n)
    minus = tuple(tuple(one[i][j] - a[i][j] for j in range(n)) for i in range(n))
    plus = tuple(tuple(one[i][j] + a[i][j] for j in range(n)) for i in range(n))
    return matmul(inverse(minus), plus)


def random_skew(rng: random.Random, n: int) -> tuple:
    m = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = Fraction(rng.randint(-2, 2))
            m[i][j], m[j][i] = x, -x
    return tuple(tuple(r) for r in m)
