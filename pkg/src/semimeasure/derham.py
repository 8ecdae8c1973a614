"""Almost-Gaussian differential forms, fibre integration, and Koszul differentials.

A form is sum_J p_J(x) e^{-q(x)/2} dx_J with one shared positive form q.
Orientations are carried as a coefficient on the coordinate orientation
of the space plus named cokernel lines OR(Coker) left by restrictions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence

from .agmeasures import MomentTable
from .errors import IncoherentOrientation, NotAComplex, SpaceMismatch, TagMismatch
from .lattice import (
    HaarTheory,
    LatticeSubspace,
    OrientationTheory,
    WindowSpace,
    coherence_failures,
    is_complex_point,
    relative_dim,
)
from .linalg import (
    FinVec,
    LinMap,
    cokernel,
    coordinate_inclusion,
    coordinate_projection,
    det,
    image_key,
    inverse,
    kernel,
    matmul,
    ses_det,
    transpose,
)
from .polynomial import Polynomial
from .promeasures import QuadraticTheory, subquotient
from .quadforms import PosDefForm, fiber_minimizer, pushforward_form, restrict_form
from .report import Report
from .scalar import Scalar
from .superalg import (
    ExteriorElement,
    SuperMeasure,
    SuperVec,
    induced_coker_map,
    merge_sign,
)


def _sign(x) -> int:
    return 1 if x > 0 else -1


def or_line(alpha: LinMap) -> str:
    return f"OR {alpha.target.name}/<{image_key(alpha)}>"


def form_coords(space: FinVec) -> FinVec:
    return FinVec("d" + space.name, tuple("d" + b for b in space.basis))


# --- forms -------------------------------------------------------------------


class AGForm:
    """sum_J p_J e^{-q/2} dx_J; J runs over increasing index tuples."""

    __slots__ = ("q", "components")

    def __init__(self, q: PosDefForm, components: Mapping[tuple, Polynomial] | None = None):
        self.q = q
        d = {}
        for idx, p in (components or {}).items():
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)) or any(not 0 <= i < q.dim for i in idx):
                raise SpaceMismatch(f"index set {idx} is not increasing inside {q.space.name}")
            if not isinstance(p, Polynomial):
                p = Polynomial.constant(q.space, p)
            if p.space != q.space:
                raise SpaceMismatch("coefficient lives on another space")
            if not p.is_zero():
                d[idx] = p
        self.components = d

    @property
    def space(self) -> FinVec:
        return self.q.space

    @classmethod
    def gaussian(cls, q: PosDefForm, idx: tuple = (), c=1) -> "AGForm":
        return cls(q, {tuple(idx): Polynomial.constant(q.space, c)})

    @classmethod
    def from_exterior(cls, q: PosDefForm, e: ExteriorElement) -> "AGForm":
        return cls(q, dict(e.terms))

    def exterior(self) -> ExteriorElement:
        return ExteriorElement(form_coords(self.space), self.components)

    @property
    def degree(self) -> int | None:
        """The common degree, or None for the zero form or a mixed form."""
        ds = {len(k) for k in self.components}
        return ds.pop() if len(ds) == 1 else None

    def degrees(self) -> set:
        return {len(k) for k in self.components}

    def is_zero(self) -> bool:
        return not self.components

    def __add__(self, other: "AGForm") -> "AGForm":
        if other.q != self.q:
            raise SpaceMismatch("forms with different Gaussian factors")
        d = dict(self.components)
        for k, p in other.components.items():
            d[k] = d[k] + p if k in d else p
        return AGForm(self.q, d)

    def scale(self, c) -> "AGForm":
        return AGForm(self.q, {k: p.scale(c) for k, p in self.components.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def wedge(self, other: "AGForm | ExteriorElement") -> "AGForm":
        """Wedge with a polynomial-coefficient form (the Gaussian factor stays single)."""
        e = other.exterior() if isinstance(other, AGForm) else other
        return AGForm.from_exterior(self.q, self.exterior().wedge(ExteriorElement(form_coords(self.space), e.terms)))

    def __eq__(self, other):
        return isinstance(other, AGForm) and self.q == other.q and self.components == other.components

    def __hash__(self):
        return hash(self.q)

    def __repr__(self):
        if not self.components:
            return "0"
        parts = []
        for k, p in sorted(self.components.items()):
            dx = "^".join("d" + self.space.basis[i] for i in k)
            parts.append(f"({p})" + (f" {dx}" if dx else ""))
        return " + ".join(parts) + " e^{-q/2}"

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "components": [{"indices": list(k), "coeff": p.to_json()} for k, p in sorted(self.components.items())],
        }


def exterior_d(w: AGForm) -> AGForm:
    """d(p e^{-q/2} dx_J) = sum_j (d_j p - (q x)_j p) e^{-q/2} dx_j ^ dx_J."""
    n = w.space.dim
    qx = [Polynomial.linear(w.space, w.q.matrix[j]) for j in range(n)]
    out: dict = {}
    for idx, p in w.components.items():
        for j in range(n):
            s = merge_sign((j,), idx)
            if not s:
                continue
            c = p.derivative(j) - qx[j] * p
            if s < 0:
                c = -c
            k = tuple(sorted(idx + (j,)))
            out[k] = out[k] + c if k in out else c
    return AGForm(w.q, out)


def pullback_form(w: AGForm, alpha: LinMap) -> AGForm:
    """Plain pullback of forms along a linear map into ``w.space``."""
    if alpha.target != w.space:
        raise SpaceMismatch(f"{alpha.name} does not land in {w.space.name}")
    src = alpha.source
    q1 = restrict_form(w.q, alpha)
    subst = {k: p.substitute(src, alpha.matrix) for k, p in w.components.items()}
    e = ExteriorElement(form_coords(w.space), subst).substitute(form_coords(src), alpha.matrix)
    return AGForm(q1, {k: c if isinstance(c, Polynomial) else Polynomial.constant(src, c) for k, c in e.terms.items()})


@dataclass(frozen=True)
class OrientedForm:
    """form (x) coefficient * [coordinate orientation] (x) OR(Coker) tags."""

    form: AGForm
    orientation: object = 1
    tags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(sorted(self.tags)))

    @property
    def space(self) -> FinVec:
        return self.form.space

    def normalized(self) -> "OrientedForm":
        if self.orientation == 1:
            return self
        return OrientedForm(self.form.scale(self.orientation), 1, self.tags)

    def __eq__(self, other):
        if not isinstance(other, OrientedForm):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return a.form == b.form and a.tags == b.tags

    def __hash__(self):
        return hash(self.form)

    def with_form(self, form: AGForm) -> "OrientedForm":
        return OrientedForm(form, self.orientation, self.tags)

    def discharge(self, tag: str, sign: int) -> "OrientedForm":
        if tag not in self.tags:
            raise TagMismatch(f"no orientation line {tag!r} to discharge")
        rest = list(self.tags)
        rest.remove(tag)
        return OrientedForm(self.form, self.orientation * sign, tuple(rest))

    def to_json(self) -> dict:
        return {"form": self.form.to_json(), "orientation": str(self.orientation), "tags": list(self.tags)}


def d_oriented(w: OrientedForm) -> OrientedForm:
    return w.with_form(exterior_d(w.form))


def fiber_integrate(w: OrientedForm, beta: LinMap) -> OrientedForm:
    """Integration along the fibres of a surjection.

    Coordinates x = M w'' + K y with M the q-orthogonal lift and K a kernel
    basis; fibre variables go last and o_W = sign det[M|K] o_W'' ^ o_K.
    """
    if beta.source != w.space:
        raise SpaceMismatch(f"{beta.name} does not start at {w.space.name}")
    beta.require_surjective()
    q = w.form.q
    target = beta.target
    m = target.dim
    _, k = kernel(beta)
    d = k.source.dim
    mmap = fiber_minimizer(q, beta)
    n = q.dim
    combined = FinVec(f"{target.name}+fiber", tuple(target.basis) + tuple(f"\x00y{i}" for i in range(d)))
    rows = [(tuple(mmap.matrix[i]) if m else ()) + (tuple(k.matrix[i]) if d else ()) for i in range(n)]
    polys = {idx: p.substitute(combined, rows) for idx, p in w.form.components.items()}
    e = ExteriorElement(form_coords(q.space), polys).substitute(form_coords(combined), rows)
    fibre = tuple(range(m, m + d))
    if d:
        c_blk = matmul(matmul(transpose(k.matrix), q.matrix), k.matrix)
        table = MomentTable(inverse(c_blk))
        const = Scalar.sigma(d) / Scalar.sqrt(det(c_blk))
    out: dict = {}
    for idx, p in e.terms.items():
        if idx[len(idx) - d:] != fibre or any(i >= m for i in idx[: len(idx) - d]):
            continue
        key = idx[: len(idx) - d]
        if not isinstance(p, Polynomial):
            p = Polynomial.constant(combined, p)
        if d:
            acc: dict = {}
            for ex, c in p.terms.items():
                mom = table(ex[m:])
                if mom:
                    kk = ex[:m]
                    acc[kk] = acc.get(kk, 0) + c * mom
            val = Polynomial(target, acc).scale(const)
        else:
            val = p.relabel(target)
        out[key] = out[key] + val if key in out else val
    frame = [tuple(mmap.matrix[i]) + tuple(k.matrix[i]) if d else tuple(mmap.matrix[i]) for i in range(n)]
    sign = _sign(det(tuple(frame))) if n else 1
    q2 = pushforward_form(q, beta)
    return OrientedForm(AGForm(q2, out), w.orientation * sign, w.tags)


def restrict_form_deRham(w: OrientedForm, alpha: LinMap) -> OrientedForm:
    """alpha^*: the pulled-back form, tagged by OR(Coker alpha).

    o_W = sign ses_det(alpha, pi) o_W' ^ o_Coker, so the coefficient picks
    up that sign.
    """
    alpha.require_injective()
    form = pullback_form(w.form, alpha)
    if alpha.source.dim == alpha.target.dim:
        return OrientedForm(form, w.orientation * _sign(det(alpha.matrix)), w.tags)
    _, proj = cokernel(alpha)
    sign = _sign(ses_det(alpha, proj))
    return OrientedForm(form, w.orientation * sign, w.tags + (or_line(alpha),))


def form_base_change_sides(w: OrientedForm, sq) -> tuple:
    """(alpha1^* beta1_* w, beta2_* alpha2^* w), the second moved onto the first's line.

    The orientation lines of the two cokernels are matched through beta1;
    moving the cokernel line past the fibre costs (-1)^{dim Ker * dim Coker}.
    """
    lhs = restrict_form_deRham(fiber_integrate(w, sq.beta1), sq.alpha1)
    rhs = fiber_integrate(restrict_form_deRham(w, sq.alpha2), sq.beta2)
    c = sq.alpha2.target.dim - sq.alpha2.source.dim
    if c:
        d = sq.beta1.source.dim - sq.beta1.target.dim
        sign = _sign(induced_coker_map(sq)) * (-1) ** (c * d)
        rhs = rhs.discharge(or_line(sq.alpha2), sign)
        rhs = OrientedForm(rhs.form, rhs.orientation, rhs.tags + (or_line(sq.alpha1),))
    return lhs, rhs


# --- the semiinfinite de Rham family ----------------------------------------


def kahler_form(space: FinVec, labels: Sequence[int]) -> ExteriorElement:
    """sum over complex pairs (2k, 2k+1) of dx_{2k} ^ dx_{2k+1}."""
    pos = {i: n for n, i in enumerate(labels)}
    terms = {}
    for i in labels:
        if i % 2 == 0 and (i + 1) in pos:
            terms[tuple(sorted((pos[i], pos[i + 1])))] = 1
    return ExteriorElement(form_coords(space), terms)


@dataclass
class DeRhamFamily:
    """Entries (U, U') -> oriented forms on U/U' (all tags discharged by O)."""

    orientation: OrientationTheory
    entries: dict = field(repr=False)

    @property
    def space(self) -> WindowSpace:
        return self.orientation.space

    def entry(self, u, u_prime) -> OrientedForm:
        return self.entries[(frozenset(u), frozenset(u_prime))]

    def map_entries(self, fn) -> "DeRhamFamily":
        return DeRhamFamily(self.orientation, {k: fn(v) for k, v in self.entries.items()})

    def degrees(self) -> set:
        """Dim-torsor degrees: form degree + [U':ref] (shift by dim(U/U'))."""
        ref = self.orientation.ref
        out = set()
        for (u, up), w in self.entries.items():
            base = relative_dim(self.space.point(up), ref)
            out |= {k + base for k in w.form.degrees()}
        return out

    def to_json(self) -> list:
        return [
            {"U": sorted(u), "U'": sorted(up), "entry": w.to_json()}
            for (u, up), w in sorted(self.entries.items(), key=lambda kv: (sorted(kv[0][0]), sorted(kv[0][1])))
        ]


def _o_transition(o: OrientationTheory, u1: frozenset, u2: frozenset) -> int:
    return o.table[(u1, u2)]


def family_push(fam: DeRhamFamily, u, up, upp) -> OrientedForm:
    src = subquotient(fam.space, u, up)
    return fiber_integrate(fam.entry(u, up), coordinate_projection(src, subquotient(fam.space, u, upp)))


def family_pull(fam: DeRhamFamily, u, up, u1) -> OrientedForm:
    """Restriction to U1/U', the OR(U/U1) line discharged by O.

    Base change past the fibre U' costs the Koszul sign
    (-1)^{dim U' * dim(U/U1)} (dimensions counted from the bottom of the
    window); it is +1 whenever the gaps are complex.
    """
    alpha = coordinate_inclusion(subquotient(fam.space, u1, up), subquotient(fam.space, u, up))
    w = restrict_form_deRham(fam.entry(u, up), alpha)
    c = alpha.target.dim - alpha.source.dim
    if c:
        sign = _o_transition(fam.orientation, frozenset(u1), frozenset(u))
        if (len(up) * c) % 2:
            sign = -sign
        w = w.discharge(or_line(alpha), sign)
    return w


def check_derham_coherence(fam: DeRhamFamily) -> Report:
    rep = Report("derham-coherence")
    ents = fam.entries
    for (u, up) in sorted(ents, key=lambda k: (len(k[0]), sorted(k[0]), len(k[1]), sorted(k[1]))):
        for upp in _steps_up(fam, u, up):
            if (u, upp) in ents:
                rep.record(family_push(fam, u, up, upp) == ents[(u, upp)], ("push", sorted(u), sorted(up), sorted(upp)))
        for u1 in _steps_down(fam, u, up):
            if (u1, up) in ents:
                rep.record(family_pull(fam, u, up, u1) == ents[(u1, up)], ("pull", sorted(u), sorted(up), sorted(u1)))
    return rep


def _step_sets(fam: DeRhamFamily, free: frozenset):
    """Minimal nonempty blocks one can move: single indices, or complex pairs."""
    complex_only = all(is_complex_point(fam.space.point(u)) and is_complex_point(fam.space.point(up)) for u, up in fam.entries)
    if complex_only:
        return [frozenset({i, i ^ 1}) for i in sorted(free) if i % 2 == 0 and (i ^ 1) in free]
    return [frozenset({i}) for i in sorted(free)]


def _steps_up(fam, u, up):
    return [up | b for b in _step_sets(fam, u - up)]


def _steps_down(fam, u, up):
    return [u - b for b in _step_sets(fam, u - up)]


def build_semiinf_derham(o: OrientationTheory, q: QuadraticTheory, kahler_power: int = 0) -> DeRhamFamily:
    """Entries pushed down from the seed e^{-q/2} omega^k / k! on the whole window.

    entry(U, U') = beta_* (O(U, whole) alpha_U^* seed); push edges are then
    the composition law and pull edges the base-change identity.
    """
    bad = coherence_failures(o, _theory_triples(o))
    if bad:
        raise IncoherentOrientation(f"orientation theory fails on {len(bad)} triples")
    space = o.space
    whole = frozenset(space.indices)
    full = subquotient(space, whole, ())
    omega = kahler_form(full, sorted(whole))
    seed_ext = ExteriorElement.scalar(form_coords(full), Fraction(1, factorial(kahler_power)))
    for _ in range(kahler_power):
        seed_ext = seed_ext.wedge(omega)
    seed = OrientedForm(AGForm.from_exterior(q.form, seed_ext.map_coeffs(lambda c: Polynomial.constant(full, c))))
    entries = {}
    for (u_lo, u_hi) in o.table:
        u, up = u_hi, u_lo
        on_u = subquotient(space, u, ())
        alpha = coordinate_inclusion(on_u, full)
        w = restrict_form_deRham(seed, alpha)
        if u != whole:
            w = w.discharge(or_line(alpha), _o_transition(o, u, whole))
        entries[(u, up)] = fiber_integrate(w, coordinate_projection(on_u, subquotient(space, u, up)))
    return DeRhamFamily(o, entries)


def _theory_triples(o: OrientationTheory):
    keys = o.table
    pts = sorted({a for a, _ in keys} | {b for _, b in keys}, key=lambda s: (len(s), sorted(s)))
    for a in pts:
        for b in pts:
            if (a, b) not in keys:
                continue
            for c in pts:
                if (b, c) in keys and (a, c) in keys:
                    yield space_point(o.space, a), space_point(o.space, b), space_point(o.space, c)


def space_point(space: WindowSpace, s) -> LatticeSubspace:
    return space.point(s)


# --- complexes and the Koszul differential ---------------------------------


@dataclass(frozen=True)
class ComplexOfSpaces:
    """V^start -> V^{start+1} -> ... with d o d = 0."""

    spaces: tuple
    diffs: tuple
    start: int = 0

    def __post_init__(self):
        if len(self.diffs) != max(len(self.spaces) - 1, 0):
            raise NotAComplex("need one differential between consecutive spaces")
        for i, dmap in enumerate(self.diffs):
            if dmap.source != self.spaces[i] or dmap.target != self.spaces[i + 1]:
                raise NotAComplex(f"differential {i} has the wrong source or target")
        for i in range(len(self.diffs) - 1):
            comp = self.diffs[i + 1] @ self.diffs[i]
            if any(x != 0 for row in comp.matrix for x in row):
                raise NotAComplex(f"d o d is not zero at degree {self.start + i}")

    @classmethod
    def cone_of_identity(cls, v: FinVec) -> "ComplexOfSpaces":
        """CV = {V -> V}: the Koszul complex of V, in degrees 0 and 1."""
        v0 = FinVec(v.name + "^0", tuple(b + "'0" for b in v.basis))
        v1 = FinVec(v.name + "^1", tuple(b + "'1" for b in v.basis))
        return cls((v0, v1), (LinMap(v0, v1, tuple(tuple(Fraction(int(i == j)) for j in range(v.dim)) for i in range(v.dim))),))

    def degree(self, i: int) -> int:
        return self.start + i

    def _parts(self, parity: int) -> list[int]:
        return [i for i in range(len(self.spaces)) if self.degree(i) % 2 == parity]

    def offsets(self, parity: int) -> dict:
        off, out = 0, {}
        for i in self._parts(parity):
            out[i] = off
            off += self.spaces[i].dim
        return out

    def sup(self) -> SuperVec:
        def collapse(parity):
            parts = self._parts(parity)
            name = "+".join(self.spaces[i].name for i in parts) or f"0{parity}"
            return FinVec(name, tuple(b for i in parts for b in self.spaces[i].basis))

        return SuperVec(collapse(0), collapse(1))

    def odd_blocks(self):
        """(A, B): the parts of d_V mapping odd -> even and even -> odd."""
        w = self.sup()
        ne, no = w.even.dim, w.odd.dim
        a = [[Fraction(0)] * no for _ in range(ne)]
        b = [[Fraction(0)] * ne for _ in range(no)]
        off = {0: self.offsets(0), 1: self.offsets(1)}
        for i, dmap in enumerate(self.diffs):
            p = self.degree(i) % 2
            src_off, tgt_off = off[p][i], off[1 - p][i + 1]
            blk = a if p == 1 else b
            for r in range(dmap.target.dim):
                for c in range(dmap.source.dim):
                    blk[tgt_off + r][src_off + c] += dmap.matrix[r][c]
        return a, b

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "spaces": [s.to_json() for s in self.spaces],
            "differentials": [[[str(x) for x in row] for row in dmap.matrix] for dmap in self.diffs],
        }


def _eps_space(odd_coords: FinVec) -> FinVec:
    return FinVec("eps+" + odd_coords.name, ("eps",) + tuple(odd_coords.basis))


def _lift(e: ExteriorElement, target: FinVec) -> ExteriorElement:
    return ExteriorElement(target, {tuple(i + 1 for i in k): c for k, c in e.terms.items()})


def _exp_nilpotent(x: ExteriorElement) -> ExteriorElement:
    """exp of an even nilpotent element without constant term."""
    out = ExteriorElement.scalar(x.space, 1)
    term = out
    k = 1
    while True:
        term = term.wedge(x).scale(Fraction(1, k))
        if term.is_zero():
            return out
        out = out + term
        k += 1


def _taylor_shift(e: ExteriorElement, shifts: Sequence[ExteriorElement]) -> ExteriorElement:
    """f(x + eta) for polynomial-coefficient f and nilpotent even shifts eta_j.

    sum_k (eta . grad)^k f / k!; terminates since every eta_j is nilpotent.
    """
    out = e
    term = e
    k = 1
    while True:
        nxt = ExteriorElement(e.space)
        for j, eta in enumerate(shifts):
            if eta.is_zero():
                continue
            deriv = term.map_coeffs(lambda p: p.derivative(j))
            nxt = nxt + eta.wedge(deriv)
        term = nxt.scale(Fraction(1, k))
        if term.is_zero():
            return out
        out = out + term
        k += 1


def _grassmann_det(m: list) -> ExteriorElement:
    n = len(m)
    if n == 0:
        return None
    if n == 1:
        return m[0][0]
    out = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        t = m[0][j].wedge(_grassmann_det(minor))
        if j % 2:
            t = -t
        out = t if out is None else out + t
    return out


def berezinian_of_inverse_shift(a, b, space: FinVec, even: FinVec) -> ExteriorElement:
    """Ber(1 - eps d) = det(X - Y W^{-1} Z) / det W with W = 1 here.

    Blocks: X = 1 (even), Y = -eps A, Z = -eps B, W = 1; entries live in the
    eps-Grassmann algebra with polynomial coefficients.
    """
    ne, no = len(a), len(b)
    one = ExteriorElement.scalar(space, Polynomial.constant(even, 1))
    zero = ExteriorElement(space)
    eps = ExteriorElement.generator(space, 0, Polynomial.constant(even, 1))
    y = [[eps.scale(-a[i][j]) for j in range(no)] for i in range(ne)]
    z = [[eps.scale(-b[i][j]) for j in range(ne)] for i in range(no)]
    schur = []
    for i in range(ne):
        row = []
        for j in range(ne):
            acc = one if i == j else zero
            for k in range(no):
                acc = acc - y[i][k].wedge(z[k][j])
            row.append(acc)
        schur.append(row)
    d = _grassmann_det(schur)
    return one if d is None else d


def transport_along_eps(c: ComplexOfSpaces, m: SuperMeasure) -> ExteriorElement:
    """The density of (1 + eps d_V)_* m, over the algebra Lambda[eps, theta].

    The point map is (x, theta) -> (x + eps A theta, theta + eps B x); the
    density is composed with its inverse and multiplied by Ber of the inverse.
    """
    w = c.sup()
    if m.space != w:
        raise SpaceMismatch("measure does not live on the collapsed super space")
    a, b = c.odd_blocks()
    even = w.even
    big = _eps_space(w.odd_coords())
    poly = lambda v: Polynomial.constant(even, v)
    eps = ExteriorElement.generator(big, 0, poly(1))
    theta = [ExteriorElement.generator(big, i + 1, poly(1)) for i in range(w.odd.dim)]
    xs = [Polynomial.variable(even, j) for j in range(even.dim)]
    # even shifts eta_j = -eps (A theta)_j
    eta = []
    for j in range(even.dim):
        acc = ExteriorElement(big)
        for k in range(w.odd.dim):
            if a[j][k]:
                acc = acc + theta[k].scale(a[j][k])
        eta.append(eps.wedge(acc).scale(-1))
    # odd substitution theta_i -> theta_i - eps (B x)_i
    new_theta = []
    for i in range(w.odd.dim):
        bx = sum((xs[j].scale(b[i][j]) for j in range(even.dim) if b[i][j]), Polynomial.zero(even))
        new_theta.append(theta[i] - eps.scale(bx))
    dens = ExteriorElement(big)
    for idx, p in m.density.terms.items():
        acc = ExteriorElement.scalar(big, p)
        for i in idx:
            acc = acc.wedge(new_theta[i])
        dens = dens + acc
    dens = _taylor_shift(dens, eta)
    # Gaussian factor: e^{-q(x+eta)/2} = e^{-q/2} exp(-x^T q eta - eta^T q eta / 2)
    qx = [Polynomial.linear(even, m.q.matrix[j]) for j in range(even.dim)]
    expo = ExteriorElement(big)
    for j in range(even.dim):
        expo = expo - eta[j].scale(qx[j])
        for k in range(even.dim):
            if m.q.matrix[j][k]:
                expo = expo - eta[j].wedge(eta[k]).scale(Fraction(m.q.matrix[j][k], 2))
    dens = dens.wedge(_exp_nilpotent(expo))
    dens = dens.wedge(berezinian_of_inverse_shift(a, b, big, even))
    return dens


def koszul_differential(c: ComplexOfSpaces, h: HaarTheory | None, m: SuperMeasure) -> SuperMeasure:
    """The eps-component of the transport of m along 1 + eps d_V.

    ``h`` is the Haar theory the measure is twisted by; at window scale it
    is carried along unchanged.
    """
    dens = transport_along_eps(c, m)
    coords = m.space.odd_coords()
    out = {}
    for idx, p in dens.terms.items():
        if idx and idx[0] == 0:
            out[tuple(i - 1 for i in idx[1:])] = p
    return m.with_density(ExteriorElement(coords, out))


def koszul_direct(c: ComplexOfSpaces, m: SuperMeasure) -> SuperMeasure:
    """Cross-check: -sum (A theta)_j (d_j - (qx)_j) - sum (B x)_i d/dtheta_i."""
    w = c.sup()
    a, b = c.odd_blocks()
    even = w.even
    coords = w.odd_coords()
    xs = [Polynomial.variable(even, j) for j in range(even.dim)]
    qx = [Polynomial.linear(even, m.q.matrix[j]) for j in range(even.dim)]
    dens = m.density
    out = ExteriorElement(coords)
    for j in range(even.dim):
        ath = ExteriorElement(coords, {(k,): Polynomial.constant(even, a[j][k]) for k in range(w.odd.dim)})
        grad = dens.map_coeffs(lambda p: p.derivative(j) - qx[j] * p)
        out = out - ath.wedge(grad)
    for i in range(w.odd.dim):
        bx = sum((xs[j].scale(b[i][j]) for j in range(even.dim) if b[i][j]), Polynomial.zero(even))
        out = out - dens.left_derivative(i).map_coeffs(lambda p: bx * p)
    return m.with_density(out)


def odd_parities(m: SuperMeasure) -> set:
    return {len(k) % 2 for k in m.density.terms}
