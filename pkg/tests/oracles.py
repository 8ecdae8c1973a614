"""Independent reference computations for the test suite.

Nothing here imports the package: moments, fibre minima and polynomial
algebra are recomputed from scratch with Fractions and plain dicts.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

# --- tiny dict polynomials: {exponent tuple: Fraction} ------------------------


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def linear_form(row, n: int) -> dict:
    return {tuple(int(i == j) for i in range(n)): Fraction(c) for j, c in enumerate(row) if c}


def monomial_of_images(matrix, e, n: int) -> dict:
    """(M x)^e expanded in the source variables x."""
    out = {(0,) * n: Fraction(1)}
    for i, k in enumerate(e):
        for _ in range(k):
            out = poly_mul(out, linear_form(matrix[i], n))
    return out


# --- Isserlis by perfect matchings --------------------------------------------


def isserlis_moment(cov, exps) -> Fraction:
    """E[y^e] as a sum over perfect matchings of the index multiset.

    The last remaining index is paired with each other index in turn;
    identical multisets share their partial sums.
    """
    n = len(exps)
    key0 = tuple(exps)

    @lru_cache(maxsize=None)
    def rec(key):
        if not any(key):
            return Fraction(1)
        counts = list(key)
        last = max(i for i in range(n) if counts[i])
        counts[last] -= 1
        total = Fraction(0)
        for j in range(n):
            if counts[j] and cov[last][j]:
                rest = list(counts)
                rest[j] -= 1
                total += counts[j] * Fraction(cov[last][j]) * rec(tuple(rest))
        return total

    if sum(exps) % 2:
        return Fraction(0)
    return rec(key0)


def naive_matchings(items):
    """All perfect matchings of a list of labels (for cross-checking small cases)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for j in range(len(rest)):
        for m in naive_matchings(rest[:j] + rest[j + 1:]):
            yield [(first, rest[j])] + m


def naive_moment(cov, exps) -> Fraction:
    items = [i for i, k in enumerate(exps) for _ in range(k)]
    total = Fraction(0)
    for m in naive_matchings(items):
        prod = Fraction(1)
        for a, b in m:
            prod *= Fraction(cov[a][b])
        total += prod
    return total


def generating_moment(cov, exps) -> Fraction:
    """E[y^e] = e! [t^e] (t^T cov t / 2)^k / k! with 2k = |e|."""
    n = len(exps)
    if sum(exps) % 2:
        return Fraction(0)
    k = sum(exps) // 2
    quad: dict = {}
    for i in range(n):
        for j in range(n):
            if cov[i][j]:
                e = tuple(int(a == i) + int(a == j) for a in range(n))
                quad[e] = quad.get(e, 0) + Fraction(cov[i][j]) / 2
    power = {(0,) * n: Fraction(1)}
    for _ in range(k):
        power = poly_mul(power, quad)
    coeff = power.get(tuple(exps), Fraction(0))
    fact = 1
    for x in exps:
        fact *= factorial(x)
    return coeff * fact / factorial(k)


def expectation(poly: dict, cov) -> Fraction:
    return sum((c * isserlis_moment(cov, e) for e, c in poly.items()), Fraction(0))


# --- exact linear algebra -------------------------------------------------------


def solve(a, b):
    """Gauss-Jordan over Fractions; a is square and invertible."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(y)] for row, y in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def invert(a):
    n = len(a)
    cols = [solve(a, [int(i == j) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def fiber_minimum(q, beta, y):
    """min q(x) over beta x = y, via the Lagrange system [[Q, B^T], [B, 0]]."""
    n, k = len(q), len(beta)
    top = [list(q[i]) + [beta[r][i] for r in range(k)] for i in range(n)]
    bottom = [list(beta[r]) + [0] * k for r in range(k)]
    sol = solve(top + bottom, [0] * n + list(y))
    x = sol[:n]
    value = sum(Fraction(q[i][j]) * x[i] * x[j] for i in range(n) for j in range(n))
    return value, x

