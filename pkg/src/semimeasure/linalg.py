"""Finite-dimensional exact linear algebra over Q.

Matrices are tuples of row tuples of ``Fraction``.  Spaces carry ordered
basis labels; maps carry a matrix of shape (target dim) x (source dim).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DimensionMismatch, NotInjective, NotSurjective

Matrix = tuple  # tuple[tuple[Fraction, ...], ...]


# --- raw matrix helpers ----------------------------------------------------


def as_matrix(rows: Sequence[Sequence], ncols: int | None = None) -> Matrix:
    m = tuple(tuple(Fraction(x) for x in row) for row in rows)
    if m:
        width = len(m[0])
        if any(len(r) != width for r in m):
            raise DimensionMismatch("ragged matrix")
    return m


def zeros(n: int, m: int) -> Matrix:
    return tuple((Fraction(0),) * m for _ in range(n))


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def ncols(a: Matrix, default: int = 0) -> int:
    return len(a[0]) if a else default


def transpose(a: Matrix, nc: int | None = None) -> Matrix:
    if not a:
        return tuple(() for _ in range(nc or 0))
    return tuple(zip(*a))


def matmul(a: Matrix, b: Matrix, inner: int | None = None, out_cols: int | None = None) -> Matrix:
    """Product a @ b; ``out_cols`` is needed only when ``b`` has no rows."""
    if not b:
        return tuple((Fraction(0),) * (out_cols or 0) for _ in a)
    bt = tuple(zip(*b)) if b[0] else ()
    if not bt:
        return tuple(() for _ in a)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def matvec(a: Matrix, v: Sequence) -> tuple:
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a)


def hstack(*blocks: Matrix) -> Matrix:
    rows = max(len(b) for b in blocks)
    return tuple(sum((tuple(b[i]) for b in blocks), ()) for i in range(rows))


def rref(a: Matrix, width: int | None = None) -> tuple[Matrix, tuple[int, ...]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    rows = [[Fraction(x) for x in r] for r in a]
    w = ncols(a, width or 0)
    pivots: list[int] = []
    r = 0
    for c in range(w):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return tuple(tuple(row) for row in rows[:r]), tuple(pivots)


def rank(a: Matrix) -> int:
    return len(rref(a)[1])


def det(a: Matrix) -> Fraction:
    n = len(a)
    if n == 0:
        return Fraction(1)
    m = [[Fraction(x) for x in r] for r in a]
    d = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            d = -d
        d *= m[c][c]
        inv = 1 / m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] * inv
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return d


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    if n == 0:
        return ()
    aug = hstack(a, identity(n))
    r, piv = rref(aug)
    if len(piv) < n or piv[n - 1] != n - 1:
        raise ZeroDivisionError("singular matrix")
    return tuple(row[n:] for row in r[:n])


def solve(a: Matrix, b: Sequence) -> tuple:
    """Unique solution of a x = b for square invertible a."""
    return matvec(inverse(a), b)


def null_space(a: Matrix, width: int) -> list[tuple]:
    """Basis of {x : a x = 0}, one vector per free column, in column order."""
    r, piv = rref(a, width)
    free = [c for c in range(width) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * width
        v[f] = Fraction(1)
        for row, p in zip(r, piv):
            v[p] = -row[f]
        basis.append(tuple(v))
    return basis


def sub_block(a: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return tuple(tuple(a[i][j] for j in cols) for i in rows)


def fmt_fraction(x: Fraction) -> str:
    return str(Fraction(x))


# --- spaces and maps -------------------------------------------------------


@dataclass(frozen=True)
class FinVec:
    name: str
    basis: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if len(set(self.basis)) != len(self.basis):
            raise DimensionMismatch(f"basis labels of {self.name} are not distinct")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def dual(self) -> "FinVec":
        if self.name.endswith("^*"):
            return FinVec(self.name[:-2], tuple(b[:-1] if b.endswith("*") else b for b in self.basis))
        return FinVec(self.name + "^*", tuple(b + "*" for b in self.basis))

    @classmethod
    def standard(cls, n: int, name: str | None = None, prefix: str = "x") -> "FinVec":
        return cls(name or f"Q{n}", tuple(f"{prefix}{i}" for i in range(n)))

    def to_json(self) -> dict:
        return {"name": self.name, "basis": list(self.basis)}

    @classmethod
    def from_json(cls, d) -> "FinVec":
        return cls(d["name"], tuple(d["basis"]))


@dataclass(frozen=True)
class LinMap:
    source: FinVec
    target: FinVec
    matrix: Matrix
    name: str = field(default="", compare=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if len(m) != self.target.dim or (m and len(m[0]) != self.source.dim):
            raise DimensionMismatch(
                f"matrix shape does not match {self.source.name} -> {self.target.name}"
            )
        if not self.name:
            object.__setattr__(self, "name", f"{self.source.name}->{self.target.name}")

    @classmethod
    def identity(cls, space: FinVec) -> "LinMap":
        return cls(space, space, identity(space.dim))

    @property
    def rank(self) -> int:
        return rank(self.matrix)

    def is_injective(self) -> bool:
        return self.rank == self.source.dim

    def is_surjective(self) -> bool:
        return self.rank == self.target.dim

    def require_injective(self):
        if not self.is_injective():
            raise NotInjective(f"{self.name} is not injective")

    def require_surjective(self):
        if not self.is_surjective():
            raise NotSurjective(f"{self.name} is not surjective")

    def columns(self) -> list[tuple]:
        return [tuple(row[j] for row in self.matrix) for j in range(self.source.dim)]

    def __call__(self, v: Sequence) -> tuple:
        return matvec(self.matrix, v) if self.matrix else ()

    def __matmul__(self, other: "LinMap") -> "LinMap":
        """Composition ``self o other``."""
        if other.target != self.source:
            raise DimensionMismatch(f"cannot compose {self.name} after {other.name}")
        return LinMap(
            other.source,
            self.target,
            matmul(self.matrix, other.matrix, out_cols=other.source.dim)
            if self.matrix
            else (),
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "matrix": [[fmt_fraction(x) for x in row] for row in self.matrix],
        }

    @classmethod
    def from_json(cls, d) -> "LinMap":
        return cls(
            FinVec.from_json(d["source"]),
            FinVec.from_json(d["target"]),
            tuple(tuple(Fraction(x) for x in row) for row in d["matrix"]),
            d.get("name", ""),
        )


def zero_space(name: str = "0") -> FinVec:
    return FinVec(name, ())


def image_rref(m: LinMap) -> tuple[Matrix, tuple[int, ...]]:
    """Row-reduced basis of the image (as row vectors in the target)."""
    return rref(transpose(m.matrix, m.target.dim) if m.matrix else (), m.target.dim)


def image_key(m: LinMap) -> str:
    """Canonical text for Im(m) inside its target."""
    r, _ = image_rref(m)
    return ";".join(",".join(str(x) for x in row) for row in r)


def kernel(m: LinMap) -> tuple[FinVec, LinMap]:
    vecs = null_space(m.matrix, m.source.dim) if m.matrix else [
        tuple(Fraction(int(i == j)) for i in range(m.source.dim)) for j in range(m.source.dim)
    ]
    space = FinVec(f"ker({m.name})", tuple(f"k{i}" for i in range(len(vecs))))
    inc = LinMap(space, m.source, transpose(tuple(vecs), len(vecs)) if vecs else zeros(m.source.dim, 0))
    return space, inc


def cokernel(m: LinMap) -> tuple[FinVec, LinMap]:
    """Quotient by the image; basis = target coordinates off the pivot columns.

    The class of ``v`` has coordinates ``v[j] - sum_i v[p_i] R[i][j]`` for the
    non-pivot columns ``j`` of the row-reduced image basis ``R``.
    """
    r, piv = image_rref(m)
    n = m.target.dim
    comp = [j for j in range(n) if j not in piv]
    space = FinVec(
        f"coker({m.name})", tuple(f"{m.target.basis[j]}~" for j in comp)
    )
    rows = []
    for j in comp:
        row = [Fraction(0)] * n
        row[j] = Fraction(1)
        for i, p in enumerate(piv):
            row[p] -= r[i][j]
        rows.append(tuple(row))
    return space, LinMap(m.target, space, tuple(rows) if rows else ())


def complement_section(beta: LinMap) -> LinMap:
    """A right inverse s of a surjection (beta s = id)."""
    beta.require_surjective()
    r, piv = rref(beta.matrix, beta.source.dim)
    # beta x = y solved with free variables zero: x[piv[i]] = (E y)[i],
    # where E is the row operation bringing beta to rref.
    n, m = beta.source.dim, beta.target.dim
    aug = hstack(beta.matrix, identity(m))
    ra, pa = rref(aug)
    e = tuple(row[n:] for row in ra[: len(piv)])
    cols = []
    for k in range(m):
        x = [Fraction(0)] * n
        for i, p in enumerate(piv):
            x[p] = e[i][k]
        cols.append(x)
    return LinMap(beta.target, beta.source, transpose(tuple(tuple(c) for c in cols), m) if cols else zeros(n, 0))


def dual_map(m: LinMap) -> LinMap:
    return LinMap(m.target.dual(), m.source.dual(), transpose(m.matrix, m.source.dim) if m.matrix else zeros(m.source.dim, m.target.dim), f"({m.name})^t")


def ses_det(alpha: LinMap, beta: LinMap) -> Fraction:
    """det[alpha | s] for a section s of beta, in the coordinate bases.

    This is the scalar of the canonical identification
    det(A) (x) det(C) -> det(B) for 0 -> A -> B -> C -> 0.
    """
    s = complement_section(beta)
    cols = alpha.columns() + s.columns()
    if not cols:
        return Fraction(1)
    return det(transpose(tuple(cols)))


@dataclass(frozen=True)
class ShortExactSeq:
    alpha: LinMap
    beta: LinMap

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if a.target != b.source:
            raise DimensionMismatch("alpha and beta are not composable")
        a.require_injective()
        b.require_surjective()
        comp = b @ a
        if any(x for row in comp.matrix for x in row) or a.source.dim + b.target.dim != a.target.dim:
            raise DimensionMismatch("image(alpha) != kernel(beta)")

    def det_factor(self) -> Fraction:
        return ses_det(self.alpha, self.beta)


@dataclass(frozen=True)
class CartesianSquare:
    """W --alpha2--> W1, W --beta2--> W2, W1 --beta1--> W12, W2 --alpha1--> W12."""

    alpha2: LinMap
    beta2: LinMap
    beta1: LinMap
    alpha1: LinMap


def check_cartesian(sq: CartesianSquare) -> bool:
    a2, b2, b1, a1 = sq.alpha2, sq.beta2, sq.beta1, sq.alpha1
    if not (a2.source == b2.source and a2.target == b1.source and b2.target == a1.source and b1.target == a1.target):
        return False
    if not (a1.is_injective() and a2.is_injective() and b1.is_surjective() and b2.is_surjective()):
        return False
    if (b1 @ a2).matrix != (a1 @ b2).matrix:
        return False
    # pullback: W -> W1 (+) W2 is injective onto ker[beta1 | -alpha1]
    stacked = tuple(a2.matrix) + tuple(b2.matrix)
    if rank(stacked) != a2.source.dim:
        return False
    big = hstack(b1.matrix, tuple(tuple(-x for x in row) for row in a1.matrix)) if b1.matrix else ()
    kdim = (a2.target.dim + b2.target.dim) - (rank(big) if big else 0)
    return kdim == a2.source.dim


def pullback_square(beta1: LinMap, alpha1: LinMap, name: str = "W") -> CartesianSquare:
    """Complete beta1: W1 ->> W12 <-< W2 : alpha1 to a Cartesian square."""
    n1, n2 = beta1.source.dim, alpha1.source.dim
    big = hstack(beta1.matrix, tuple(tuple(-x for x in row) for row in alpha1.matrix)) if beta1.matrix else zeros(0, n1 + n2)
    vecs = null_space(big, n1 + n2) if big else [
        tuple(Fraction(int(i == j)) for i in range(n1 + n2)) for j in range(n1 + n2)
    ]
    w = FinVec(name, tuple(f"w{i}" for i in range(len(vecs))))
    cols1 = [v[:n1] for v in vecs]
    cols2 = [v[n1:] for v in vecs]
    a2 = LinMap(w, beta1.source, transpose(tuple(cols1), n1) if vecs else zeros(n1, 0))
    b2 = LinMap(w, alpha1.source, transpose(tuple(cols2), n2) if vecs else zeros(n2, 0))
    return CartesianSquare(a2, b2, beta1, alpha1)


def coordinate_inclusion(sub: FinVec, ambient: FinVec) -> LinMap:
    """Inclusion sending each label of ``sub`` to the same label of ``ambient``."""
    idx = {b: i for i, b in enumerate(ambient.basis)}
    m = [[Fraction(0)] * sub.dim for _ in range(ambient.dim)]
    for j, b in enumerate(sub.basis):
        m[idx[b]][j] = Fraction(1)
    return LinMap(sub, ambient, tuple(tuple(r) for r in m))


def coordinate_projection(ambient: FinVec, quot: FinVec) -> LinMap:
    idx = {b: i for i, b in enumerate(ambient.basis)}
    m = [[Fraction(0)] * ambient.dim for _ in range(quot.dim)]
    for i, b in enumerate(quot.basis):
        m[i][idx[b]] = Fraction(1)
    return LinMap(ambient, quot, tuple(tuple(r) for r in m))


def solve_in_image(a: Matrix, b: Sequence, width: int) -> tuple | None:
    """Some x with a x = b (free variables zero), or None if b is not in the image."""
    n = len(a)
    aug = tuple(tuple(a[i]) + (Fraction(b[i]),) for i in range(n))
    r, piv = rref(aug, width + 1)
    if width in piv:
        return None
    x = [Fraction(0)] * width
    for i, p in enumerate(piv):
        x[p] = r[i][width]
    return tuple(x)
