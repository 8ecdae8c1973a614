"""Windowed Laurent-series model of a locally linearly compact space.

Basis vector ``e_i`` models t^i for i in a finite index set (normally
-N..N-1).  Lattice points are subsets of the indices; everything above the
window is implicitly included.  Theories over the lattice (dimension,
determinant, Haar, orientation) are stored as explicit tables over nested
pairs, so every coherence condition is a finite check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Iterator

from .errors import (
    IncoherentInput,
    IndexOutsideWindow,
    NotAdmissible,
    NotComplexWindow,
    NotNested,
    SingularCompression,
)
from .linalg import det, matmul, sub_block
from .polynomial import coeff_from_str

# --- spaces and lattice points ---------------------------------------------


@dataclass(frozen=True)
class WindowSpace:
    """A coordinate window; ``dual`` marks the residue-dual side."""

    indices: tuple[int, ...]
    dual: bool = False

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(set(self.indices))))

    @classmethod
    def window(cls, n: int) -> "WindowSpace":
        if n < 1:
            raise ValueError("window size must be at least 1")
        return cls(tuple(range(-n, n)))

    @property
    def name(self) -> str:
        side = "V*" if self.dual else "V"
        return f"{side}[{','.join(map(str, self.indices))}]"

    def label(self, i: int) -> str:
        return f"{'f' if self.dual else 'e'}{i}"

    @property
    def size(self) -> int:
        return len(self.indices)

    def point(self, indices: Iterable[int]) -> "LatticeSubspace":
        return LatticeSubspace(self, frozenset(indices))

    @property
    def u0(self) -> "LatticeSubspace":
        return self.point(i for i in self.indices if i >= 0)

    @property
    def whole(self) -> "LatticeSubspace":
        return self.point(self.indices)

    @property
    def empty(self) -> "LatticeSubspace":
        return self.point(())

    def chain(self, a: int) -> "LatticeSubspace":
        """U_a = span{e_i : i >= a}."""
        return self.point(i for i in self.indices if i >= a)

    def lattice(self) -> list["LatticeSubspace"]:
        idx = self.indices
        out = []
        for k in range(len(idx) + 1):
            out.extend(self.point(c) for c in combinations(idx, k))
        return out

    def nested_pairs(self) -> Iterator[tuple["LatticeSubspace", "LatticeSubspace"]]:
        """All (U1, U2) with U1 <= U2."""
        idx = self.indices
        n = len(idx)
        for code in range(3**n):
            lo, hi, c = [], [], code
            for i in idx:
                c, r = divmod(c, 3)
                if r == 2:
                    lo.append(i)
                if r >= 1:
                    hi.append(i)
            yield self.point(lo), self.point(hi)

    def nested_triples(self):
        idx = self.indices
        for code in range(4 ** len(idx)):
            a, b, c, x = [], [], [], code
            for i in idx:
                x, r = divmod(x, 4)
                if r == 3:
                    a.append(i)
                if r >= 2:
                    b.append(i)
                if r >= 1:
                    c.append(i)
            yield self.point(a), self.point(b), self.point(c)

    def dual_space(self) -> "WindowSpace":
        return WindowSpace(tuple(-i - 1 for i in self.indices), not self.dual)

    def to_json(self) -> dict:
        return {"indices": list(self.indices), "dual": self.dual}

    @classmethod
    def from_json(cls, d) -> "WindowSpace":
        return cls(tuple(d["indices"]), bool(d.get("dual", False)))


@dataclass(frozen=True)
class LatticeSubspace:
    space: WindowSpace
    indices: frozenset

    def __post_init__(self):
        s = frozenset(int(i) for i in self.indices)
        bad = s - set(self.space.indices)
        if bad:
            raise IndexOutsideWindow(f"indices {sorted(bad)} are outside {self.space.name}")
        object.__setattr__(self, "indices", s)

    def _same(self, other: "LatticeSubspace"):
        if other.space != self.space:
            raise IndexOutsideWindow("lattice points live in different windows")

    def meet(self, other):
        self._same(other)
        return LatticeSubspace(self.space, self.indices & other.indices)

    def join(self, other):
        self._same(other)
        return LatticeSubspace(self.space, self.indices | other.indices)

    def leq(self, other) -> bool:
        self._same(other)
        return self.indices <= other.indices

    __and__ = meet
    __or__ = join
    __le__ = leq

    def sorted(self) -> list[int]:
        return sorted(self.indices)

    def __lt__(self, other):
        return (len(self.indices), self.sorted()) < (len(other.indices), other.sorted())

    def __str__(self):
        return "{" + ",".join(map(str, self.sorted())) + "}"

    def to_json(self) -> list:
        return self.sorted()


def lattice_ops(u1: LatticeSubspace, u2: LatticeSubspace, op: str):
    if op == "meet":
        return u1.meet(u2)
    if op == "join":
        return u1.join(u2)
    if op == "leq":
        return u1.leq(u2)
    raise ValueError(f"unknown lattice operation {op!r}")


def require_nested(u1: LatticeSubspace, u2: LatticeSubspace):
    if not u1.leq(u2):
        raise NotNested(f"{u1} is not contained in {u2}")


def relative_dim(u_prime: LatticeSubspace, u: LatticeSubspace) -> int:
    """[U' : U] = dim U'/(U' n U) - dim U/(U' n U)."""
    u_prime._same(u)
    return len(u_prime.indices - u.indices) - len(u.indices - u_prime.indices)


def dual_lattice(u: LatticeSubspace) -> LatticeSubspace:
    """Annihilator under <t^i, t^j> = 1 iff i + j + 1 = 0."""
    d = u.space.dual_space()
    return LatticeSubspace(d, frozenset(j for j in d.indices if -j - 1 not in u.indices))


def sort_sign(x: Iterable[int], y: Iterable[int]) -> int:
    """Sign turning e_X ^ e_Y (each increasing) into e_{X u Y}."""
    ys = sorted(y)
    inv = sum(1 for a in x for b in ys if a > b)
    return -1 if inv % 2 else 1


def sequence_sign(seq: list[int], descending: bool = False) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    n = len(seq)
    if descending:
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if seq[i] < seq[j])
    else:
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


# --- dimension theories ------------------------------------------------------


@dataclass(frozen=True)
class DimensionTheory:
    """d(U) = base_value + [U : U0]."""

    space: WindowSpace
    base_value: int = 0

    def __call__(self, u: LatticeSubspace) -> int:
        return self.base_value + relative_dim(u, self.space.u0)

    def shift(self, n: int) -> "DimensionTheory":
        return DimensionTheory(self.space, self.base_value + n)

    @classmethod
    def vanishing_at(cls, u: LatticeSubspace) -> "DimensionTheory":
        return cls(u.space, -relative_dim(u, u.space.u0))

    def is_additive(self) -> bool:
        return all(
            self(b) == self(a) + len(b.indices - a.indices) for a, b in self.space.nested_pairs()
        )


def dual_dimension_theory(d: DimensionTheory) -> DimensionTheory:
    """d^v(W) = -d(W^perp)."""
    dspace = d.space.dual_space()
    out = DimensionTheory(dspace, -d(dual_lattice(dspace.u0)))
    for w in dspace.lattice():
        if out(w) != -d(dual_lattice(w)):
            raise IncoherentInput("dual dimension theory is not additive")
    return out


@dataclass(frozen=True)
class CoordinateSeq:
    """0 -> V' -> V -> V'' -> 0 with V' spanned by the coordinates ``sub``."""

    ambient: WindowSpace
    sub: tuple[int, ...]

    def __post_init__(self):
        s = tuple(sorted(set(self.sub)))
        if not set(s) <= set(self.ambient.indices):
            raise NotAdmissible("subspace coordinates are not in the window")
        object.__setattr__(self, "sub", s)

    @property
    def sub_space(self) -> WindowSpace:
        return WindowSpace(self.sub, self.ambient.dual)

    @property
    def quotient_space(self) -> WindowSpace:
        return WindowSpace(tuple(i for i in self.ambient.indices if i not in self.sub), self.ambient.dual)

    def split(self, u: LatticeSubspace) -> tuple[LatticeSubspace, LatticeSubspace]:
        """(alpha^{-1} U, beta U) for a coordinate lattice point."""
        s = set(self.sub)
        return (
            self.sub_space.point(i for i in u.indices if i in s),
            self.quotient_space.point(i for i in u.indices if i not in s),
        )

    def glue(self, u1: LatticeSubspace, u2: LatticeSubspace) -> LatticeSubspace:
        return self.ambient.point(u1.indices | u2.indices)


def _check_seq(seq: CoordinateSeq, sub_space: WindowSpace, quot_space: WindowSpace):
    if sub_space != seq.sub_space or quot_space != seq.quotient_space:
        raise NotAdmissible("theories do not live on the pieces of the sequence")


def sum_dimension_theory(d1: DimensionTheory, d2: DimensionTheory, seq: CoordinateSeq) -> DimensionTheory:
    """d(U) = d'(alpha^{-1} U) + d''(beta U)."""
    _check_seq(seq, d1.space, d2.space)
    u0 = seq.ambient.u0
    a, b = seq.split(u0)
    out = DimensionTheory(seq.ambient, d1(a) + d2(b))
    for u in seq.ambient.lattice():
        x, y = seq.split(u)
        if out(u) != d1(x) + d2(y):
            raise IncoherentInput("sum of dimension theories is not additive")
    return out


# --- tables over nested pairs ------------------------------------------------


Key = tuple[frozenset, frozenset]


def _key(u1: LatticeSubspace, u2: LatticeSubspace) -> Key:
    return (u1.indices, u2.indices)


@dataclass
class _Theory:
    """Common shape: a reference point and a transition table."""

    space: WindowSpace
    ref: LatticeSubspace
    table: dict = field(repr=False)

    def transition(self, u1: LatticeSubspace, u2: LatticeSubspace):
        require_nested(u1, u2)
        return self.table[_key(u1, u2)]

    def line(self, u: LatticeSubspace) -> str:
        return f"|{u}>/|{self.ref}>"

    def degree(self, u: LatticeSubspace) -> int:
        return relative_dim(u, self.ref)

    def table_json(self) -> list:
        rows = []
        for (a, b), t in sorted(self.table.items(), key=lambda kv: (len(kv[0][1]), sorted(kv[0][1]), len(kv[0][0]), sorted(kv[0][0]))):
            rows.append([sorted(a), sorted(b), str(t)])
        return rows

    def __eq__(self, other):
        return type(self) is type(other) and self.space == other.space and self.ref == other.ref and self.table == other.table

    __hash__ = None


def _build(space: WindowSpace, fn: Callable) -> dict:
    return {_key(a, b): fn(a, b) for a, b in space.nested_pairs()}


class DetTheory(_Theory):
    """Transitions t(U1,U2): |U1> (x) e_{U2/U1} = t |U2> (coordinate det-bases).

    Coherence: t(U1,U2) t(U2,U3) = sort_sign(U2/U1, U3/U2) t(U1,U3).
    """

    kind = "det"

    def sign_of_gap(self, a, b, c) -> int:
        return sort_sign(b.indices - a.indices, c.indices - b.indices)


class HaarTheory(_Theory):
    """Positive transitions valued in |det(U2/U1)^*|; plain multiplicativity."""

    kind = "haar"

    def sign_of_gap(self, a, b, c) -> int:
        return 1


class OrientationTheory(_Theory):
    """+-1 transitions with the same Koszul rule as determinants."""

    kind = "orientation"

    def sign_of_gap(self, a, b, c) -> int:
        return sort_sign(b.indices - a.indices, c.indices - b.indices)


def coherence_failures(theory: _Theory, triples: Iterable | None = None) -> list[tuple]:
    """Nested triples where the composition square fails to commute."""
    bad = []
    t = theory.table
    for a, b, c in triples if triples is not None else theory.space.nested_triples():
        lhs = t[_key(a, b)] * t[_key(b, c)]
        rhs = theory.sign_of_gap(a, b, c) * t[_key(a, c)]
        if lhs != rhs:
            bad.append((a.sorted(), b.sorted(), c.sorted()))
    if isinstance(theory, HaarTheory) and any(not _positive(x) for x in t.values()):
        bad.append(("nonpositive transition",))
    if isinstance(theory, OrientationTheory) and any(x not in (1, -1) for x in t.values()):
        bad.append(("transition not +-1",))
    return bad


def _positive(x) -> bool:
    return x.is_positive() if hasattr(x, "is_positive") else x > 0


def is_coherent(theory: _Theory) -> bool:
    return not coherence_failures(theory)


def canonical_transition(u1: LatticeSubspace, u2: LatticeSubspace) -> int:
    """Sign of |U1> ^ e_gap = +-|U2>; |U> lists the window part decreasing."""
    gap = sorted(u2.indices - u1.indices)
    seq = sorted(u1.indices, reverse=True) + gap
    return sequence_sign(seq, descending=True)


def canonical_det_theory(ref: LatticeSubspace) -> DetTheory:
    """Delta_ref: Delta(U) = |U> / |ref>, so Delta(ref) is k with basis 1."""
    space = ref.space
    return DetTheory(space, ref, _build(space, lambda a, b: Fraction(canonical_transition(a, b))))


def theory_isomorphism(t1: _Theory, t2: _Theory) -> dict:
    """Gauge c(U) with t2(U1,U2) = t1(U1,U2) c(U2)/c(U1), c(t2.ref) = 1.

    The solutions form a one-dimensional space (a torsor under scalars); this
    returns the one normalized at the reference of ``t2``.  Raises when the
    theories are not isomorphic.
    """
    if t1.space != t2.space or type(t1) is not type(t2):
        raise IncoherentInput("theories of different kinds or on different windows")
    space = t1.space
    base = space.empty
    c = {}
    for u in space.lattice():
        k = _key(base, u)
        c[u.indices] = _div(t2.table[k], t1.table[k])
    norm = c[t2.ref.indices]
    c = {u: _div(x, norm) for u, x in c.items()}
    for (a, b), x in t1.table.items():
        if t2.table[(a, b)] != x * c[b] / c[a]:
            raise IncoherentInput("theories are not isomorphic")
    return c


def _div(a, b):
    if isinstance(a, int):
        a = Fraction(a)
    return a / b


def relative_det_line(u_prime: LatticeSubspace, u: LatticeSubspace) -> tuple[str, int]:
    """The line [U'|U] = Hom(Delta_U, Delta_U') and its degree [U':U]."""
    return f"[{u_prime}|{u}]", relative_dim(u_prime, u)


def det_dual(theory: DetTheory) -> DetTheory:
    """Delta^v(W) = Delta(W^perp)^*; t^v(W1,W2) = 1/t(W2^perp, W1^perp)."""
    dspace = theory.space.dual_space()
    back = lambda w: LatticeSubspace(theory.space, frozenset(-j - 1 for j in dspace.indices if j not in w.indices))
    table = _build(dspace, lambda w1, w2: 1 / Fraction(theory.table[_key(back(w2), back(w1))]))
    return DetTheory(dspace, dual_lattice(theory.ref), table)


def det_product(t1: DetTheory, t2: DetTheory, seq: CoordinateSeq) -> DetTheory:
    """Delta(U) = Delta'(alpha^{-1} U) (x) Delta''(beta U), graded lines.

    Moving e_{A'} past Delta''(U1'') costs (-1)^{|A'| d''(U1'')}.
    """
    _check_seq(seq, t1.space, t2.space)

    def tr(a, b):
        a1, a2 = seq.split(a)
        b1, b2 = seq.split(b)
        g1 = b1.indices - a1.indices
        g2 = b2.indices - a2.indices
        koszul = -1 if (len(g1) * relative_dim(a2, t2.ref)) % 2 else 1
        return t1.table[_key(a1, b1)] * t2.table[_key(a2, b2)] * sort_sign(g1, g2) * koszul

    return DetTheory(seq.ambient, seq.glue(t1.ref, t2.ref), _build(seq.ambient, tr))


def associator(t1: DetTheory, t2: DetTheory, t3: DetTheory) -> dict:
    """epsilon: (D1 x D2) x D3 -> D1 x (D2 x D3) for a length-2 filtration.

    The blocks are the windows of the three theories.  Returns the gauge;
    it is 1 everywhere when the graded associator is the identity.
    """
    space = _ambient_of(t1, t2, t3)
    left = CoordinateSeq(space, t1.space.indices + t2.space.indices)
    inner_left = CoordinateSeq(left.sub_space, t1.space.indices)
    right_inner = CoordinateSeq(WindowSpace(t2.space.indices + t3.space.indices, space.dual), t2.space.indices)
    right = CoordinateSeq(space, t1.space.indices)
    lhs = det_product(det_product(t1, t2, inner_left), t3, left)
    rhs = det_product(t1, det_product(t2, t3, right_inner), right)
    return theory_isomorphism(lhs, rhs)


def _ambient_of(*theories) -> WindowSpace:
    idx = []
    for t in theories:
        idx.extend(t.space.indices)
    if len(set(idx)) != len(idx):
        raise NotAdmissible("blocks overlap")
    return WindowSpace(tuple(idx), theories[0].space.dual)


def associator_cube(ts: list[DetTheory]) -> bool:
    """Coherence of the associators for a length-3 filtration (four blocks).

    All five bracketings are computed; the gauges relating them must compose
    consistently around the cube (every path gives the same comparison).
    """
    a, b, c, d = ts
    space = _ambient_of(a, b, c, d)

    def prod(x, y):
        amb = WindowSpace(x.space.indices + y.space.indices, space.dual)
        return det_product(x, y, CoordinateSeq(amb, x.space.indices))

    brackets = {
        "((ab)c)d": prod(prod(prod(a, b), c), d),
        "(a(bc))d": prod(prod(a, prod(b, c)), d),
        "a((bc)d)": prod(a, prod(prod(b, c), d)),
        "a(b(cd))": prod(a, prod(b, prod(c, d))),
        "(ab)(cd)": prod(prod(a, b), prod(c, d)),
    }
    names = list(brackets)
    gauges = {(x, y): theory_isomorphism(brackets[x], brackets[y]) for x in names for y in names}
    for x in names:
        for y in names:
            for z in names:
                gxy, gyz, gxz = gauges[(x, y)], gauges[(y, z)], gauges[(x, z)]
                if any(gxy[u] * gyz[u] != gxz[u] for u in gxz):
                    return False
    # natural transformations given by the graded associator are constant 1
    return all(v == 1 for g in gauges.values() for v in g.values())


def haar_from_det(theory: DetTheory, dualize: bool = False) -> HaarTheory:
    """|Delta|: absolute values of transitions (``dualize`` gives |Delta^*|)."""
    if dualize:
        table = {k: 1 / abs(Fraction(v)) for k, v in theory.table.items()}
    else:
        table = {k: abs(Fraction(v)) for k, v in theory.table.items()}
    return HaarTheory(theory.space, theory.ref, table)


def orientation_from_det(theory: DetTheory) -> OrientationTheory:
    return OrientationTheory(theory.space, theory.ref, {k: (1 if v > 0 else -1) for k, v in theory.table.items()})


def unit_haar(ref: LatticeSubspace) -> HaarTheory:
    return HaarTheory(ref.space, ref, _build(ref.space, lambda a, b: Fraction(1)))


# --- complex windows ---------------------------------------------------------


def is_complex_point(u: LatticeSubspace) -> bool:
    """Stable under multiplication by i, which swaps e_{2k} and e_{2k+1}."""
    return all((i ^ 1) in u.indices for i in u.indices)


def complex_orientation(space: WindowSpace) -> OrientationTheory:
    """The canonical orientation of complex gaps (+1 throughout).

    Defined on complex lattice points; gaps are complex spaces and their
    complex orientation matches the pairwise coordinate ordering.
    """
    if any((i ^ 1) not in space.indices for i in space.indices):
        raise NotComplexWindow(f"{space.name} is not a union of complex pairs")
    table = {}
    for a, b in space.nested_pairs():
        if is_complex_point(a) and is_complex_point(b):
            table[_key(a, b)] = 1
    return ComplexOrientation(space, space.u0, table)


class ComplexOrientation(OrientationTheory):
    """Orientation on the sublattice of complex points.

    A complex gap has even real dimension, so the Koszul sign between two
    complex gaps is +1 and the constant theory is coherent.
    """

    def transition(self, u1, u2):
        if not (is_complex_point(u1) and is_complex_point(u2)):
            raise NotComplexWindow(f"gap {u2}/{u1} is not complex")
        return super().transition(u1, u2)


def complex_triples(space: WindowSpace):
    for a, b, c in space.nested_triples():
        if is_complex_point(a) and is_complex_point(b) and is_complex_point(c):
            yield a, b, c


# --- the GL cocycle ----------------------------------------------------------


@dataclass(frozen=True)
class GLElement:
    space: WindowSpace
    matrix: tuple

    def __post_init__(self):
        m = tuple(tuple(Fraction(x) for x in row) for row in self.matrix)
        n = self.space.size
        if len(m) != n or any(len(r) != n for r in m):
            raise IndexOutsideWindow("matrix does not match the window")
        if det(m) == 0:
            raise SingularCompression("GL element is not invertible")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "GLElement") -> "GLElement":
        return GLElement(self.space, matmul(self.matrix, other.matrix))

    def stabilizes(self, u: LatticeSubspace) -> bool:
        pos = [self.space.indices.index(i) for i in u.indices]
        rest = [k for k in range(self.space.size) if k not in pos]
        return all(self.matrix[r][c] == 0 for r in rest for c in pos)


def compression(g: GLElement, ref: LatticeSubspace) -> Fraction:
    """det of the block of g on the reference coordinates (its comparison scalar)."""
    pos = [g.space.indices.index(i) for i in sorted(ref.indices)]
    if not pos:
        return Fraction(1)
    d = det(sub_block(g.matrix, pos, pos))
    if d == 0:
        raise SingularCompression("g compresses the reference point singularly")
    return d


def central_cocycle(g1: GLElement, g2: GLElement, theory: DetTheory) -> Fraction:
    """Discrepancy of composed comparisons Delta -> g(Delta), normalized at ref.

    c(g1, g2) = lambda(g1) lambda(g2) / lambda(g1 g2) with lambda the
    compression determinant on the reference point.
    """
    ref = theory.ref
    return compression(g1, ref) * compression(g2, ref) / compression(g1 @ g2, ref)


def cocycle_identity(g1, g2, g3, theory: DetTheory) -> bool:
    c = lambda a, b: central_cocycle(a, b, theory)
    return c(g1, g2) * c(g1 @ g2, g3) == c(g1, g2 @ g3) * c(g2, g3)


def theory_to_json(t: _Theory) -> dict:
    return {"kind": t.kind, "space": t.space.to_json(), "ref": t.ref.to_json(), "table": t.table_json()}


def theory_from_json(d) -> _Theory:
    cls = {"det": DetTheory, "haar": HaarTheory, "orientation": OrientationTheory}[d["kind"]]
    space = WindowSpace.from_json(d["space"])
    table = {}
    for a, b, t in d["table"]:
        table[(frozenset(a), frozenset(b))] = coeff_from_str(t) if cls is not OrientationTheory else int(t)
    return cls(space, space.point(d["ref"]), table)
