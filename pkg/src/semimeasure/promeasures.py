"""Coherent families of measures over the window lattice.

A family assigns to every nested pair U' <= U an almost-Gaussian measure on
the subquotient U/U', read as an element of M(U/U') (x) h(U)^* for a Haar
theory h.  The structure maps are

* pushforward along U/U' ->> U/U'' for U' <= U'', and
* pullback along U1/U' >-> U/U' for U' <= U1 <= U, with the cokernel line
  |det(U/U1)^*| traded for h(U1)^* through the transition t_h(U1, U).

Distributions live in the dual direct system; a germ is one representative
(U, U', distribution on U/U') whose coefficient is read in h(U).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .agmeasures import (
    AlmostGaussianMeasure,
    DeskDistribution,
    HeisenbergOp,
    apply_heisenberg,
    apply_heisenberg_distribution,
    coker_line,
    distribution_pullback,
    distribution_pushforward,
    fourier,
    normalize_distribution,
    pair,
    pullback_measure,
    pushforward_measure,
    transport,
)
from .errors import (
    IncoherentInput,
    MissingEntry,
    NotNested,
    NotPositiveDefinite,
    TagMismatch,
    VectorOutsideLattice,
)
from .lattice import (
    GLElement,
    HaarTheory,
    LatticeSubspace,
    WindowSpace,
    dual_lattice,
    relative_dim,
    theory_isomorphism,
    unit_haar,
)
from .linalg import (
    FinVec,
    LinMap,
    coordinate_inclusion,
    coordinate_projection,
    inverse,
    matmul,
    transpose,
)
from .polynomial import Polynomial, normalize_coeff
from .quadforms import PosDefForm, pushforward_form, restrict_form
from .report import Report
from .scalar import Scalar

Pair = tuple[frozenset, frozenset]


def subquotient(space: WindowSpace, u: Iterable[int], u_prime: Iterable[int]) -> FinVec:
    u, u_prime = frozenset(u), frozenset(u_prime)
    if not u_prime <= u:
        raise NotNested(f"{sorted(u_prime)} is not contained in {sorted(u)}")
    idx = sorted(u - u_prime)
    name = f"{space.name}:{sorted(u)}/{sorted(u_prime)}".replace(" ", "")
    return FinVec(name, tuple(space.label(i) for i in idx))


def full_space(space: WindowSpace) -> FinVec:
    return subquotient(space, space.indices, ())


def _pairs(space: WindowSpace):
    for a, b in space.nested_pairs():
        yield b.indices, a.indices  # (U, U')


# --- quadratic theories ------------------------------------------------------


@dataclass(frozen=True)
class QuadraticTheory:
    space: WindowSpace
    form: PosDefForm

    def __post_init__(self):
        if self.form.space != full_space(self.space):
            raise IncoherentInput("form does not live on the window")

    @classmethod
    def from_matrix(cls, space: WindowSpace, matrix) -> "QuadraticTheory":
        return cls(space, PosDefForm(full_space(space), matrix))

    @classmethod
    def standard(cls, space: WindowSpace, scale=1) -> "QuadraticTheory":
        return cls(space, PosDefForm.standard(full_space(space), scale))

    def dual(self) -> "QuadraticTheory":
        """q^{-1} on the dual window (coordinates j = -i-1 run backwards)."""
        inv = inverse(self.form.matrix)
        n = len(inv)
        rev = tuple(tuple(inv[n - 1 - a][n - 1 - b] for b in range(n)) for a in range(n))
        return QuadraticTheory.from_matrix(self.space.dual_space(), rev)


def forms_from_theory(q: QuadraticTheory, u: LatticeSubspace | Iterable[int], u_prime) -> PosDefForm:
    """Restrict the window form to U, then push it to U/U'."""
    u = _idx(u)
    u_prime = _idx(u_prime)
    sq = subquotient(q.space, u, u_prime)
    on_u = subquotient(q.space, u, ())
    r = restrict_form(q.form, coordinate_inclusion(on_u, q.form.space))
    return pushforward_form(r, coordinate_projection(on_u, sq))


def _idx(u) -> frozenset:
    return u.indices if isinstance(u, LatticeSubspace) else frozenset(u)


def q_trivialize_haar(q: QuadraticTheory, u1, u2) -> Scalar:
    """dVol_q on U2/U1 in its coordinate basis: sqrt(det q_{U2/U1})."""
    return Scalar.sqrt(forms_from_theory(q, u2, u1).det())


def reassemble_form(space: WindowSpace, forms: dict) -> PosDefForm:
    """Recover the window form from the family of subquotient forms."""
    whole = frozenset(space.indices)
    f = forms[(whole, frozenset())]
    for (u, u_prime), g in forms.items():
        if pushforward_form(restrict_form(f, coordinate_inclusion(subquotient(space, u, ()), f.space)), coordinate_projection(subquotient(space, u, ()), g.space)) != g:
            raise IncoherentInput(f"subquotient form at {sorted(u)}/{sorted(u_prime)} is not induced")
    return f


# --- families ----------------------------------------------------------------


@dataclass
class CoherentMeasureFamily:
    haar: HaarTheory
    entries: dict  # (U, U') -> AlmostGaussianMeasure on U/U'

    @property
    def space(self) -> WindowSpace:
        return self.haar.space

    def entry(self, u, u_prime) -> AlmostGaussianMeasure:
        key = (_idx(u), _idx(u_prime))
        if key not in self.entries:
            raise MissingEntry(f"no entry at {sorted(key[0])}/{sorted(key[1])}")
        return self.entries[key]

    def t(self, u1: frozenset, u2: frozenset):
        return self.haar.table[(u1, u2)]

    def map_entries(self, fn) -> "CoherentMeasureFamily":
        return CoherentMeasureFamily(self.haar, {k: fn(k, m) for k, m in self.entries.items()})

    def degree(self) -> int:
        return max((m.p.degree() for m in self.entries.values()), default=-1)

    def __eq__(self, other):
        return isinstance(other, CoherentMeasureFamily) and self.haar == other.haar and self.entries == other.entries


def push_edge(fam: CoherentMeasureFamily, u, u_prime, u_pp) -> AlmostGaussianMeasure:
    """Image of entry (U, U') in U/U'' for U' <= U''."""
    src = subquotient(fam.space, u, u_prime)
    beta = coordinate_projection(src, subquotient(fam.space, u, u_pp))
    return pushforward_measure(fam.entry(u, u_prime), beta)


def pull_edge(fam: CoherentMeasureFamily, u, u_prime, u1) -> AlmostGaussianMeasure:
    """Image of entry (U, U') in M(U1/U') (x) h(U1)^* for U' <= U1 <= U."""
    alpha = coordinate_inclusion(subquotient(fam.space, u1, u_prime), subquotient(fam.space, u, u_prime))
    m = pullback_measure(fam.entry(u, u_prime), alpha)
    if alpha.source.dim < alpha.target.dim:
        m = m.discharge(coker_line(alpha))
    return m.scale(fam.t(frozenset(u1), frozenset(u)))


def check_coherence(fam: CoherentMeasureFamily) -> Report:
    """Every adjacent push/pull edge whose two ends are present."""
    rep = Report("coherence")
    ents = fam.entries
    for (u, up) in sorted(ents, key=_sort_key):
        for i in sorted(u - up):
            upp = up | {i}
            if (u, upp) in ents:
                rep.record(push_edge(fam, u, up, upp) == ents[(u, upp)], ("push", sorted(u), sorted(up), sorted(upp)))
            u1 = u - {i}
            if (u1, up) in ents:
                rep.record(pull_edge(fam, u, up, u1) == ents[(u1, up)], ("pull", sorted(u), sorted(up), sorted(u1)))
    return rep


def _sort_key(k):
    u, up = k
    return (len(u), sorted(u), len(up), sorted(up))


def gaussian_family(q: QuadraticTheory, ref: LatticeSubspace) -> CoherentMeasureFamily:
    """gamma_q in M_h(V) for h = |Delta_ref|^*.

    Entry (U, U') is kappa(U) gamma_{q_{U/U'}} with
    kappa(U) = sigma^{[U:ref]} sqrt(det q_ref / det q_U); the sigma power is
    the Gaussian normalization that each restriction leaves behind.
    """
    space = q.space
    h = unit_haar(ref)
    det_u = {u.indices: forms_from_theory(q, u, ()).det() for u in space.lattice()}
    entries = {}
    for u, up in _pairs(space):
        kappa = Scalar.sigma(relative_dim(space.point(u), ref)) * Scalar.sqrt(Fraction(det_u[ref.indices]) / det_u[u])
        form = forms_from_theory(q, u, up)
        entries[(u, up)] = AlmostGaussianMeasure.gaussian(form).scale(kappa)
    return CoherentMeasureFamily(h, entries)


def regauge(fam: CoherentMeasureFamily, haar: HaarTheory) -> CoherentMeasureFamily:
    """Re-express the family in an isomorphic Haar theory."""
    c = theory_isomorphism(fam.haar, haar)
    return CoherentMeasureFamily(haar, {k: m.scale(1 / _as_scalar(c[k[0]])) for k, m in fam.entries.items()})


def _as_scalar(x):
    return x if isinstance(x, Scalar) else Scalar(x)


def perturb_entry(fam: CoherentMeasureFamily, u, u_prime, delta: Polynomial) -> CoherentMeasureFamily:
    key = (_idx(u), _idx(u_prime))
    entries = dict(fam.entries)
    entries[key] = entries[key].with_p(entries[key].p + delta)
    return CoherentMeasureFamily(fam.haar, entries)


# --- Fourier -----------------------------------------------------------------


def dual_haar(h: HaarTheory) -> HaarTheory:
    """h^v(X) = h(X^perp) read against the self-dual Lebesgue measure.

    t^v(X1, X2) = sigma^{2 dim(X2/X1)} / t(X2^perp, X1^perp).
    """
    dspace = h.space.dual_space()
    back = lambda x: frozenset(-j - 1 for j in dspace.indices if j not in x)
    table = {}
    for a, b in dspace.nested_pairs():
        t = h.table[(back(b.indices), back(a.indices))]
        table[(a.indices, b.indices)] = Scalar.sigma(2 * len(b.indices - a.indices)) / _as_scalar(t)
    table = {k: normalize_coeff(v) for k, v in table.items()}
    return HaarTheory(dspace, dual_lattice(h.ref), table)


def _fourier_entry(m: AlmostGaussianMeasure, target: FinVec) -> AlmostGaussianMeasure:
    f = fourier(m)
    n = m.space.dim
    perm = [n - 1 - k for k in range(n)]
    qm = f.q.matrix
    rev = tuple(tuple(qm[n - 1 - a][n - 1 - b] for b in range(n)) for a in range(n))
    form = PosDefForm(target, rev)
    # P exp(-Q/2) dy/(2 pi)^n = sigma^{-n} / sqrt(det Q) * P gamma_Q
    c = Scalar.sigma(-n) / Scalar.sqrt(form.det())
    return AlmostGaussianMeasure(target, form, f.p.relabel(target, perm).scale(c))


def fourier_family(fam: CoherentMeasureFamily) -> CoherentMeasureFamily:
    """Entrywise Fourier transform onto the dual window.

    The entry at (U, U') goes to (U'^perp, U^perp), since (U/U')^* = U'^perp/U^perp,
    and the coefficient moves from h(U)^* to h(U')^* through t_h(U', U).
    """
    rep = check_coherence(fam)
    if not rep.passed:
        raise IncoherentInput(f"Fourier transform of an incoherent family ({len(rep.failures)} failing edges)")
    space = fam.space
    dspace = space.dual_space()
    perp = lambda x: frozenset(j for j in dspace.indices if -j - 1 not in x)
    out = {}
    for (u, up), m in fam.entries.items():
        x, y = perp(up), perp(u)
        target = subquotient(dspace, x, y)
        out[(x, y)] = _fourier_entry(m, target).scale(fam.t(up, u))
    return CoherentMeasureFamily(dual_haar(fam.haar), out)


def parity_family(fam: CoherentMeasureFamily) -> CoherentMeasureFamily:
    return fam.map_entries(lambda k, m: m.parity())


# --- symmetries and the Heisenberg action -------------------------------------


def orthogonal_invariance(fam: CoherentMeasureFamily, q: QuadraticTheory, g: GLElement) -> Report:
    """g in O(q) maps each entry it acts on to itself.

    g acts on U/U' when it stabilizes both U and U'.
    """
    rep = Report("orthogonal-invariance")
    gm = g.matrix
    if matmul(matmul(transpose(gm), q.form.matrix), gm) != q.form.matrix:
        raise NotPositiveDefinite("g does not preserve q")
    pos = {i: k for k, i in enumerate(fam.space.indices)}
    for (u, up), m in sorted(fam.entries.items(), key=lambda kv: _sort_key(kv[0])):
        if not (g.stabilizes(fam.space.point(u)) and g.stabilizes(fam.space.point(up))):
            continue
        idx = sorted(u - up)
        block = tuple(tuple(gm[pos[a]][pos[b]] for b in idx) for a in idx)
        rep.record(transport(m, LinMap(m.space, m.space, block)) == m, (sorted(u), sorted(up)))
    return rep


def _reduce_op(op: HeisenbergOp, space: WindowSpace, u: frozenset, up: frozenset) -> HeisenbergOp | None:
    """Generators on U/U'; None when some generator is not defined there."""
    pos = {i: k for k, i in enumerate(space.indices)}
    idx = sorted(u - up)
    terms = []
    for c, word in op.terms:
        new = []
        for kind, vec in word:
            if len(vec) != space.size:
                raise VectorOutsideLattice(f"generator of length {len(vec)} on {space.name}")
            supp = {i for i in space.indices if vec[pos[i]]}
            if kind == "v" and not supp <= u:
                return None
            if kind == "f" and supp & up:
                return None
            new.append((kind, tuple(vec[pos[i]] for i in idx)))
        terms.append((c, tuple(new)))
    return HeisenbergOp(tuple(terms))


def heisenberg_on_family(op: HeisenbergOp, fam: CoherentMeasureFamily) -> CoherentMeasureFamily:
    """Entrywise action on the pairs where every generator descends to U/U'."""
    out = {}
    for (u, up), m in fam.entries.items():
        red = _reduce_op(op, fam.space, u, up)
        if red is not None:
            out[(u, up)] = apply_heisenberg(red, m)
    if not out:
        raise VectorOutsideLattice("no lattice pair carries all generators")
    return CoherentMeasureFamily(fam.haar, out)


def window_vector(space: WindowSpace, coords: dict) -> tuple:
    return tuple(Fraction(coords.get(i, 0)) for i in space.indices)


# --- distribution germs ------------------------------------------------------


@dataclass(frozen=True)
class DistributionGerm:
    haar: HaarTheory
    u: frozenset
    u_prime: frozenset
    dist: DeskDistribution

    def __post_init__(self):
        object.__setattr__(self, "u", frozenset(self.u))
        object.__setattr__(self, "u_prime", frozenset(self.u_prime))
        if self.dist.ambient != subquotient(self.haar.space, self.u, self.u_prime):
            raise IncoherentInput("germ distribution does not live on its subquotient")

    @property
    def space(self) -> WindowSpace:
        return self.haar.space

    def is_zero(self) -> bool:
        return self.dist.density_p.is_zero()

    def scale(self, c) -> "DistributionGerm":
        return DistributionGerm(self.haar, self.u, self.u_prime, self.dist.scale(c))

    def __eq__(self, other):
        return isinstance(other, DistributionGerm) and germs_equal(self, other)

    def __hash__(self):
        return hash((self.u, self.u_prime))


def germ_enlarge(g: DistributionGerm, u2) -> DistributionGerm:
    """alpha_*: D(U/U') (x) h(U) -> D(U2/U') (x) h(U2)."""
    u2 = _idx(u2)
    if not g.u <= u2:
        raise NotNested("can only enlarge U")
    if u2 == g.u:
        return g
    alpha = coordinate_inclusion(subquotient(g.space, g.u, g.u_prime), subquotient(g.space, u2, g.u_prime))
    d = distribution_pushforward(g.dist, alpha).scale(g.haar.table[(g.u, u2)])
    return DistributionGerm(g.haar, u2, g.u_prime, d)


def germ_refine(g: DistributionGerm, u_pp) -> DistributionGerm:
    """beta^*: D(U/U') -> D(U/U'') for U'' <= U'."""
    u_pp = _idx(u_pp)
    if not u_pp <= g.u_prime:
        raise NotNested("can only shrink U'")
    if u_pp == g.u_prime:
        return g
    beta = coordinate_projection(subquotient(g.space, g.u, u_pp), subquotient(g.space, g.u, g.u_prime))
    return DistributionGerm(g.haar, g.u, u_pp, distribution_pullback(g.dist, beta))


def germ_move(g: DistributionGerm, u2, u_pp) -> DistributionGerm:
    return germ_refine(germ_enlarge(g, u2), u_pp)


def germs_equal(a: DistributionGerm, b: DistributionGerm) -> bool:
    """Compare after pushing both to the common refinement."""
    if a.haar != b.haar:
        return False
    u2, u_pp = a.u | b.u, a.u_prime & b.u_prime
    da = germ_move(a, u2, u_pp).dist
    db = germ_move(b, u2, u_pp).dist
    if da.density_p.is_zero() or db.density_p.is_zero():
        return da.density_p.is_zero() and db.density_p.is_zero()
    return normalize_distribution(da) == normalize_distribution(db)


def zero_germ(haar: HaarTheory, u) -> DistributionGerm:
    g = vacuum_delta(haar, u)
    return g.scale(0)


def pair_family(fam: CoherentMeasureFamily, g: DistributionGerm) -> Scalar:
    if fam.haar != g.haar:
        raise TagMismatch("family and germ use different Haar theories")
    return pair(g.dist, fam.entry(g.u, g.u_prime))


def heisenberg_on_germ(op: HeisenbergOp, g: DistributionGerm) -> DistributionGerm:
    """Move to a representative where all generators descend, then act."""
    pos = {i: k for k, i in enumerate(g.space.indices)}
    u2, u_pp = set(g.u), set(g.u_prime)
    for _, word in op.terms:
        for kind, vec in word:
            if len(vec) != g.space.size:
                raise VectorOutsideLattice(f"generator of length {len(vec)} on {g.space.name}")
            supp = {i for i in g.space.indices if vec[pos[i]]}
            if kind == "v":
                u2 |= supp
            else:
                u_pp -= supp
    moved = germ_move(g, frozenset(u2), frozenset(u_pp))
    red = _reduce_op(op, g.space, moved.u, moved.u_prime)
    return DistributionGerm(g.haar, moved.u, moved.u_prime, apply_heisenberg_distribution(red, moved.dist))


# --- vacuum ------------------------------------------------------------------


def vacuum_delta(haar: HaarTheory, u) -> DistributionGerm:
    """delta_U: the canonical 1 in D(U/U) (x) h(U)."""
    u = _idx(u)
    z = subquotient(haar.space, u, u)
    return DistributionGerm(haar, u, u, DeskDistribution(LinMap.identity(z), Polynomial.constant(z), None))


@dataclass(frozen=True)
class VacuumElement:
    u: frozenset
    germ: DistributionGerm

    @classmethod
    def of(cls, haar: HaarTheory, u) -> "VacuumElement":
        return cls(_idx(u), vacuum_delta(haar, u))

    def relations(self) -> Report:
        """L_v |U> = 0 for v in U and L_f |U> = 0 for f in U^perp.

        Each is checked at the defining representative and after moving to
        a larger U and a smaller U' first.
        """
        rep = Report("vacuum-relations")
        space = self.germ.space
        reps = [self.germ]
        bigger = frozenset(space.indices)
        reps.append(germ_move(self.germ, bigger, frozenset()))
        for i in space.indices:
            basis = window_vector(space, {i: 1})
            for r in reps:
                if i in self.u:
                    op = HeisenbergOp.vector(basis)
                    rep.record(heisenberg_on_germ(op, r).is_zero(), ("L_v", i, sorted(r.u), sorted(r.u_prime)))
                else:
                    op = HeisenbergOp.covector(basis)
                    rep.record(heisenberg_on_germ(op, r).is_zero(), ("L_f", i, sorted(r.u), sorted(r.u_prime)))
        return rep


def default_haar(space: WindowSpace) -> HaarTheory:
    return unit_haar(space.u0)
