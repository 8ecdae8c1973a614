"""Symmetric bilinear forms: restriction, direct image, inverse, Haar volume."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionMismatch, NotPositiveDefinite
from .linalg import (
    FinVec,
    LinMap,
    Matrix,
    as_matrix,
    complement_section,
    det,
    dual_map,
    inverse,
    kernel,
    matmul,
    sub_block,
    transpose,
    zeros,
)
from .scalar import Scalar


@dataclass(frozen=True)
class SymBilForm:
    space: FinVec
    matrix: Matrix

    def __post_init__(self):
        m = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        n = self.space.dim
        if len(m) != n or any(len(r) != n for r in m):
            raise DimensionMismatch(f"form matrix is not {n}x{n}")
        if any(m[i][j] != m[j][i] for i in range(n) for j in range(i)):
            raise DimensionMismatch("form matrix is not symmetric")

    @property
    def dim(self) -> int:
        return self.space.dim

    def __call__(self, x, y=None) -> Fraction:
        y = x if y is None else y
        return sum(
            (self.matrix[i][j] * x[i] * y[j] for i in range(self.dim) for j in range(self.dim)),
            Fraction(0),
        )

    def det(self) -> Fraction:
        return det(self.matrix)

    def upper_triangle(self) -> list[list[str]]:
        return [[str(self.matrix[i][j]) for j in range(i, self.dim)] for i in range(self.dim)]

    @classmethod
    def from_upper_triangle(cls, space: FinVec, rows) -> "SymBilForm":
        n = space.dim
        m = [[Fraction(0)] * n for _ in range(n)]
        for i, row in enumerate(rows):
            for off, x in enumerate(row):
                m[i][i + off] = m[i + off][i] = Fraction(x)
        return cls(space, tuple(tuple(r) for r in m))


def is_positive_definite(b: SymBilForm) -> bool:
    """Sylvester criterion; the empty form counts as positive definite."""
    return all(det(sub_block(b.matrix, range(k), range(k))) > 0 for k in range(1, b.dim + 1))


class PosDefForm(SymBilForm):
    """A symmetric form whose leading principal minors are all positive."""

    def __post_init__(self):
        super().__post_init__()
        if not is_positive_definite(self):
            raise NotPositiveDefinite(f"form on {self.space.name} is not positive definite")

    @classmethod
    def of(cls, b: SymBilForm) -> "PosDefForm":
        return b if isinstance(b, PosDefForm) else cls(b.space, b.matrix)

    @classmethod
    def standard(cls, space: FinVec, scale=1) -> "PosDefForm":
        n = space.dim
        return cls(space, tuple(tuple(Fraction(scale) if i == j else Fraction(0) for j in range(n)) for i in range(n)))


@dataclass(frozen=True)
class HaarVolume:
    """``coefficient`` times the coordinate Lebesgue measure of ``line``."""

    line: str
    coefficient: Scalar

    def __post_init__(self):
        if not self.coefficient.is_positive():
            raise NotPositiveDefinite(f"Haar coefficient {self.coefficient} is not positive")


def _congruence(b: Matrix, a: Matrix, src_dim: int) -> Matrix:
    """a^T b a."""
    if not a or src_dim == 0:
        return zeros(src_dim, src_dim)
    at = transpose(a)
    return matmul(matmul(at, b), a)


def restrict_form(b: PosDefForm, alpha: LinMap) -> PosDefForm:
    if alpha.target != b.space:
        raise DimensionMismatch(f"{alpha.name} does not land in {b.space.name}")
    alpha.require_injective()
    return PosDefForm(alpha.source, _congruence(b.matrix, alpha.matrix, alpha.source.dim))


def inverse_form(b: PosDefForm) -> PosDefForm:
    return PosDefForm(b.space.dual(), inverse(b.matrix))


def schur_data(b: PosDefForm, beta: LinMap):
    """Blocks of ``b`` in the basis (section of beta, kernel of beta).

    Returns (section, kernel inclusion, A, B, C) with A = S^T b S,
    B = S^T b K, C = K^T b K.
    """
    if beta.source != b.space:
        raise DimensionMismatch(f"{beta.name} does not start at {b.space.name}")
    s = complement_section(beta)
    _, k = kernel(beta)
    m, kd = beta.target.dim, k.source.dim
    a_blk = _congruence(b.matrix, s.matrix, m)
    c_blk = _congruence(b.matrix, k.matrix, kd)
    if m and kd:
        b_blk = matmul(matmul(transpose(s.matrix), b.matrix), k.matrix)
    else:
        b_blk = zeros(m, kd)
    return s, k, a_blk, b_blk, c_blk


def fiber_minimizer(b: PosDefForm, beta: LinMap) -> LinMap:
    """Linear map w'' -> the q_b-minimal point of the fiber beta^{-1}(w'')."""
    s, k, _, b_blk, c_blk = schur_data(b, beta)
    n, m, kd = b.dim, beta.target.dim, k.source.dim
    if kd == 0 or m == 0:
        return s
    # M = S - K C^{-1} B^T
    corr = matmul(matmul(k.matrix, inverse(c_blk)), transpose(b_blk))
    mm = tuple(tuple(s.matrix[i][j] - corr[i][j] for j in range(m)) for i in range(n))
    return LinMap(beta.target, b.space, mm)


def pushforward_form(b: PosDefForm, beta: LinMap) -> PosDefForm:
    """Direct image as the Schur complement of the kernel block."""
    beta.require_surjective()
    _, k, a_blk, b_blk, c_blk = schur_data(b, beta)
    m, kd = beta.target.dim, k.source.dim
    if kd and m:
        corr = matmul(matmul(b_blk, inverse(c_blk)), transpose(b_blk))
        a_blk = tuple(tuple(a_blk[i][j] - corr[i][j] for j in range(m)) for i in range(m))
    return PosDefForm(beta.target, a_blk)


def pushforward_form_literal(b: PosDefForm, beta: LinMap) -> PosDefForm:
    """((beta^t)^* (b^{-1}))^{-1}, composed literally from the pieces."""
    beta.require_surjective()
    inv = inverse_form(b)
    restricted = restrict_form(inv, dual_map(beta))
    return PosDefForm(beta.target, inverse(restricted.matrix))


def induced_haar(b: PosDefForm, line: str | None = None) -> HaarVolume:
    """dVol_q: sqrt(det b) times coordinate Lebesgue measure."""
    return HaarVolume(line or f"|det({b.space.name})^*|", Scalar.sqrt(b.det()))


def form_to_json(b: SymBilForm) -> dict:
    return {"space": b.space.to_json(), "upper": b.upper_triangle()}


def form_from_json(d, cls=PosDefForm) -> SymBilForm:
    base = SymBilForm.from_upper_triangle(FinVec.from_json(d["space"]), d["upper"])
    return cls(base.space, base.matrix)
