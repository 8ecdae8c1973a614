"""Super vector spaces, Grassmann algebras, Berezin integration, semiinfinite wedges.

Exterior elements store strictly increasing index tuples; every product is
normalized with its Koszul sign right away.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .agmeasures import (
    AlmostGaussianMeasure,
    as_scalar,
    coker_identification,
    coker_line,
    integrate,
    pullback_composition_factor,
    pullback_measure,
    pushforward_measure,
)
from .errors import (
    IndexOutsideWindow,
    NotNested,
    ParityViolation,
    SpaceMismatch,
    TagMismatch,
)
from .lattice import DetTheory, LatticeSubspace, WindowSpace, relative_dim, sort_sign
from .linalg import (
    FinVec,
    LinMap,
    cokernel,
    complement_section,
    det,
    image_key,
    kernel,
    ses_det,
    transpose,
)
from .polynomial import Polynomial, normalize_coeff
from .quadforms import PosDefForm
from .scalar import Scalar


def merge_sign(a: tuple, b: tuple) -> int:
    """Sign of e_a ^ e_b = sign * e_{a u b} (0 if they overlap)."""
    if set(a) & set(b):
        return 0
    return sort_sign(a, b)


def _is_zero(c) -> bool:
    return c.is_zero() if isinstance(c, Polynomial) else c == 0


# --- exterior algebra --------------------------------------------------------


class ExteriorElement:
    """Sum of c_I theta_I over increasing index tuples I into ``space.basis``.

    Coefficients may be rationals, Scalars or Polynomials (even coefficients
    commute with everything).
    """

    __slots__ = ("space", "terms")

    def __init__(self, space: FinVec, terms: Mapping[tuple, object] | None = None):
        self.space = space
        d = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if list(idx) != sorted(set(idx)) or any(not 0 <= i < space.dim for i in idx):
                raise SpaceMismatch(f"index set {idx} is not increasing inside {space.name}")
            c = c if isinstance(c, Polynomial) else normalize_coeff(c)
            if not _is_zero(c):
                d[idx] = c
        self.terms = d

    @classmethod
    def scalar(cls, space: FinVec, c=1) -> "ExteriorElement":
        return cls(space, {(): c})

    @classmethod
    def generator(cls, space: FinVec, i: int, c=1) -> "ExteriorElement":
        return cls(space, {(i,): c})

    @classmethod
    def linear(cls, space: FinVec, coeffs: Sequence) -> "ExteriorElement":
        return cls(space, {(i,): c for i, c in enumerate(coeffs)})

    def _new(self, d: dict) -> "ExteriorElement":
        return ExteriorElement(self.space, d)

    def __add__(self, other: "ExteriorElement") -> "ExteriorElement":
        if other.space != self.space:
            raise SpaceMismatch("exterior elements over different spaces")
        d = dict(self.terms)
        for k, c in other.terms.items():
            d[k] = d[k] + c if k in d else c
        return self._new(d)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "ExteriorElement":
        return self._new({k: _mul(v, c) for k, v in self.terms.items()})

    def wedge(self, other: "ExteriorElement") -> "ExteriorElement":
        if other.space != self.space:
            raise SpaceMismatch("exterior elements over different spaces")
        d: dict = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                s = merge_sign(a, b)
                if s:
                    k = tuple(sorted(a + b))
                    v = _mul(ca, cb)
                    v = v if s > 0 else -v
                    d[k] = d[k] + v if k in d else v
        return self._new(d)

    __xor__ = wedge

    def __eq__(self, other):
        return isinstance(other, ExteriorElement) and self.space == other.space and self.terms == other.terms

    def __hash__(self):
        return hash((self.space, tuple(sorted((k, str(v)) for k, v in self.terms.items()))))

    def is_zero(self) -> bool:
        return not self.terms

    def component(self, idx: tuple):
        return self.terms.get(tuple(idx), 0)

    def top(self):
        return self.component(tuple(range(self.space.dim)))

    def degrees(self) -> set:
        return {len(k) for k in self.terms}

    def left_derivative(self, i: int) -> "ExteriorElement":
        """d/dtheta_i from the left: theta_i theta_J -> theta_J."""
        d = {}
        for k, c in self.terms.items():
            if i in k:
                pos = k.index(i)
                rest = k[:pos] + k[pos + 1:]
                d[rest] = c if pos % 2 == 0 else -c
        return self._new(d)

    def map_coeffs(self, fn) -> "ExteriorElement":
        return self._new({k: fn(v) for k, v in self.terms.items()})

    def substitute(self, target: FinVec, rows: Sequence[Sequence]) -> "ExteriorElement":
        """theta_i -> sum_j rows[i][j] eta_j, on generators of ``target``."""
        lin = [ExteriorElement.linear(target, r) for r in rows]
        out = ExteriorElement(target)
        for k, c in self.terms.items():
            acc = ExteriorElement.scalar(target, 1)
            for i in k:
                acc = acc.wedge(lin[i])
            out = out + acc.scale(c) if not isinstance(c, Polynomial) else out + _poly_times(acc, c)
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(
            f"({c})*" + "^".join(self.space.basis[i] for i in k) if k else f"({c})" for k, c in sorted(self.terms.items())
        )

    def to_json(self) -> list:
        return [{"indices": list(k), "coeff": str(c)} for k, c in sorted(self.terms.items())]


def _mul(a, b):
    if isinstance(b, Polynomial) and not isinstance(a, Polynomial):
        return b.scale(a)
    if isinstance(a, Polynomial) and not isinstance(b, Polynomial):
        return a.scale(b)
    return a * b


def _poly_times(e: ExteriorElement, p: Polynomial) -> ExteriorElement:
    return ExteriorElement(e.space, {k: p.scale(c) for k, c in e.terms.items()})


# --- super spaces and measures ----------------------------------------------


@dataclass(frozen=True)
class SuperVec:
    even: FinVec
    odd: FinVec

    @property
    def name(self) -> str:
        return f"{self.even.name}|{self.odd.name}"

    def parity_shift(self) -> "SuperVec":
        return SuperVec(self.odd, self.even)

    def odd_coords(self) -> FinVec:
        """Generators theta_i of Lambda(W^{1*})."""
        return FinVec(self.odd.name + "^*", tuple("d" + b for b in self.odd.basis))


@dataclass(frozen=True)
class SuperLinMap:
    even: LinMap
    odd: LinMap

    @property
    def source(self) -> SuperVec:
        return SuperVec(self.even.source, self.odd.source)

    @property
    def target(self) -> SuperVec:
        return SuperVec(self.even.target, self.odd.target)

    def __matmul__(self, other: "SuperLinMap") -> "SuperLinMap":
        return SuperLinMap(self.even @ other.even, self.odd @ other.odd)

    @classmethod
    def identity(cls, w: SuperVec) -> "SuperLinMap":
        return cls(LinMap.identity(w.even), LinMap.identity(w.odd))


def odd_coker_line(alpha: LinMap) -> str:
    return f"det {alpha.target.name}/<{image_key(alpha)}>"


@dataclass(frozen=True)
class SuperMeasure:
    """sum_I p_I(x) theta_I gamma_q(x) (x) mu * [e_1 ^ ... ^ e_k].

    The even Haar part |det(W^0)^*| is inside gamma_q; ``mu`` is the
    coefficient on the coordinate basis of det(W^1).  ``odd_tags`` name
    cokernel lines det(Coker) left by odd pullbacks.
    """

    space: SuperVec
    q: PosDefForm
    density: ExteriorElement  # over odd_coords, Polynomial coefficients on even
    mu: Scalar = Scalar(1)
    tags: tuple = ()
    odd_tags: tuple = ()

    def __post_init__(self):
        if self.q.space != self.space.even or self.density.space != self.space.odd_coords():
            raise SpaceMismatch("super measure pieces live on different spaces")
        object.__setattr__(self, "density", self.density.map_coeffs(lambda c: c if isinstance(c, Polynomial) else Polynomial.constant(self.space.even, c)))
        object.__setattr__(self, "mu", as_scalar(self.mu))
        object.__setattr__(self, "tags", tuple(sorted(self.tags)))
        object.__setattr__(self, "odd_tags", tuple(sorted(self.odd_tags)))

    @classmethod
    def product(cls, even: AlmostGaussianMeasure, odd: ExteriorElement, odd_space: FinVec, mu=1) -> "SuperMeasure":
        """even_part (x) odd_part (x) mu-line coefficient."""
        w = SuperVec(even.space, odd_space)
        coords = w.odd_coords()
        if odd.space != coords:
            odd = ExteriorElement(coords, odd.terms)
        dens = ExteriorElement(coords, {k: even.p.scale(c) for k, c in odd.terms.items()})
        return cls(w, even.q, dens, mu, even.tags)

    def with_density(self, density: ExteriorElement) -> "SuperMeasure":
        return SuperMeasure(self.space, self.q, density, self.mu, self.tags, self.odd_tags)

    def even_component(self, idx: tuple) -> AlmostGaussianMeasure:
        p = self.density.component(idx)
        p = p if isinstance(p, Polynomial) else Polynomial.zero(self.space.even)
        return AlmostGaussianMeasure(self.space.even, self.q, p, self.tags)

    def normalized(self) -> "SuperMeasure":
        """Fold mu into the density so equal measures compare equal."""
        if self.mu == 1:
            return self
        return SuperMeasure(self.space, self.q, self.density.scale(self.mu), Scalar(1), self.tags, self.odd_tags)

    def retag(self, old, new, factor, odd: bool = False) -> "SuperMeasure":
        """Replace even (or odd) cokernel lines ``old`` by ``new``, scaling by ``factor``.

        Either argument may be a single line name or a list of them.
        """
        old = [old] if isinstance(old, str) else list(old)
        new = [new] if isinstance(new, str) else list(new)
        tags, odd_tags = list(self.tags), list(self.odd_tags)
        pool = odd_tags if odd else tags
        for line in old:
            if line not in pool:
                raise TagMismatch(f"super measure carries no line {line}")
            pool.remove(line)
        pool.extend(new)
        return SuperMeasure(self.space, self.q, self.density, self.mu * factor, tuple(tags), tuple(odd_tags))

    def __eq__(self, other):
        if not isinstance(other, SuperMeasure):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return (a.space, a.q, a.density, a.tags, a.odd_tags) == (b.space, b.q, b.density, b.tags, b.odd_tags)

    def __hash__(self):
        return hash((self.space, self.q))


def induced_coker_map(sq) -> Fraction:
    """det of Coker(alpha2) -> Coker(alpha1) induced by beta1, in cokernel coordinates."""
    c2, pi2 = cokernel(sq.alpha2)
    c1, pi1 = cokernel(sq.alpha1)
    if c2.dim == 0:
        return Fraction(1)
    phi = pi1 @ sq.beta1 @ complement_section(pi2)
    return det(phi.matrix)


def super_base_change_sides(m: SuperMeasure, even_sq, odd_sq) -> tuple:
    """(alpha1^* beta1_* m, beta2_* alpha2^* m), the second moved onto the first's lines."""
    b1 = SuperLinMap(even_sq.beta1, odd_sq.beta1)
    a1 = SuperLinMap(even_sq.alpha1, odd_sq.alpha1)
    b2 = SuperLinMap(even_sq.beta2, odd_sq.beta2)
    a2 = SuperLinMap(even_sq.alpha2, odd_sq.alpha2)
    lhs = super_pullback(super_pushforward(m, b1), a1)
    rhs = super_pushforward(super_pullback(m, a2), b2)
    if even_sq.alpha2.source.dim < even_sq.alpha2.target.dim:
        rhs = rhs.retag(coker_line(even_sq.alpha2), coker_line(even_sq.alpha1), coker_identification(even_sq))
    if odd_sq.alpha2.source.dim < odd_sq.alpha2.target.dim:
        rhs = rhs.retag(odd_coker_line(odd_sq.alpha2), odd_coker_line(odd_sq.alpha1), induced_coker_map(odd_sq), odd=True)
    return lhs, rhs


def _odd_cokernel_det(a: LinMap):
    if a.source.dim == a.target.dim:
        return det(a.matrix) if a.source.dim else Fraction(1)
    return ses_det(a, cokernel(a)[1])


def coker_sequence_det(a1: LinMap, a2: LinMap) -> Fraction:
    """det of 0 -> Coker(a2) -> Coker(a1 a2) -> Coker(a1) -> 0 in cokernel coordinates."""
    c2, p2 = cokernel(a2)
    c, p = cokernel(a1 @ a2)
    c1, p1 = cokernel(a1)
    if not c.dim:
        return Fraction(1)
    if c2.dim and c1.dim:
        return ses_det(p @ a1 @ complement_section(p2), p1 @ complement_section(p))
    if c2.dim:
        return det((p @ a1 @ complement_section(p2)).matrix)
    return det((p1 @ complement_section(p)).matrix)


def super_pullback_composition_sides(m: SuperMeasure, a1: SuperLinMap, a2: SuperLinMap) -> tuple:
    """(a2^* a1^* m, (a1 a2)^* m), the second moved onto the separate cokernel lines."""
    lhs = super_pullback(super_pullback(m, a1), a2)
    whole = a1 @ a2
    rhs = super_pullback(m, whole)
    we, wo = whole.even, whole.odd
    if we.source.dim < we.target.dim:
        new = [coker_line(a) for a in (a1.even, a2.even) if a.source.dim < a.target.dim]
        rhs = rhs.retag([coker_line(we)], new, pullback_composition_factor(a1.even, a2.even))
    if wo.source.dim < wo.target.dim:
        new = [odd_coker_line(a) for a in (a1.odd, a2.odd) if a.source.dim < a.target.dim]
        rhs = rhs.retag([odd_coker_line(wo)], new, 1 / coker_sequence_det(a1.odd, a2.odd), odd=True)
    return lhs, rhs


def berezin_integrate(m: SuperMeasure) -> Scalar:
    """Even integral of the top odd coefficient, contracted with det(W^1)."""
    if m.odd_tags:
        raise TagMismatch(f"undischarged odd lines {m.odd_tags}")
    top = m.even_component(tuple(range(m.space.odd.dim)))
    return integrate(top) * m.mu


def _check_parity(f: SuperLinMap, m: SuperMeasure, source: bool):
    if (f.source if source else f.target) != m.space:
        raise ParityViolation("map does not respect the super space of the measure")


def super_pushforward(m: SuperMeasure, beta: SuperLinMap) -> SuperMeasure:
    """Even part by Gaussian fibre integration, odd part by fibre Berezin integration.

    Odd coordinates are changed to the basis [kernel | section]; the fibre
    integral keeps the terms containing every kernel generator.
    """
    _check_parity(beta, m, True)
    beta.even.require_surjective()
    beta.odd.require_surjective()
    bo = beta.odd
    _, k = kernel(bo)
    s = complement_section(bo)
    c, r = k.source.dim, bo.target.dim
    mixed = FinVec("fiber|" + bo.target.name, tuple(f"k{i}" for i in range(c)) + tuple(f"s{j}" for j in range(r)))
    rows = [tuple(k.matrix[i]) + tuple(s.matrix[i]) for i in range(bo.source.dim)]
    new_dens = m.density.substitute(mixed, rows)
    target = beta.target
    coords = target.odd_coords()
    fibre = tuple(range(c))
    out: dict = {}
    for idx, p in new_dens.terms.items():
        if idx[:c] == fibre:
            rest = tuple(i - c for i in idx[c:])
            pushed = pushforward_measure(AlmostGaussianMeasure(m.space.even, m.q, p, m.tags), beta.even)
            out[rest] = pushed.p
    q2 = pushforward_measure(AlmostGaussianMeasure.gaussian(m.q), beta.even).q
    cols = k.columns() + s.columns()
    jac = det(transpose(tuple(cols))) if cols else Fraction(1)
    return SuperMeasure(target, q2, ExteriorElement(coords, out), m.mu / jac, m.tags, m.odd_tags)


def super_pullback(m: SuperMeasure, alpha: SuperLinMap) -> SuperMeasure:
    """Restrict coefficients; tags for the even and the odd cokernel."""
    _check_parity(alpha, m, False)
    alpha.even.require_injective()
    alpha.odd.require_injective()
    src = alpha.source
    dens = m.density.substitute(src.odd_coords(), alpha.odd.matrix)
    out = {}
    tags = None
    for idx, p in dens.terms.items():
        pulled = pullback_measure(AlmostGaussianMeasure(m.space.even, m.q, p, m.tags), alpha.even)
        out[idx] = pulled.p
        tags = pulled.tags
    pulled_q = pullback_measure(AlmostGaussianMeasure.gaussian(m.q), alpha.even)
    if tags is None:
        tags = tuple(sorted(m.tags + tuple(t for t in pulled_q.tags)))
    odd_tags = m.odd_tags
    mu = m.mu
    ao = alpha.odd
    if ao.source.dim < ao.target.dim:
        _, proj = cokernel(ao)
        mu = mu / ses_det(ao, proj)
        odd_tags = odd_tags + (odd_coker_line(ao),)
    elif ao.source.dim:
        mu = mu / det(ao.matrix)
    return SuperMeasure(src, pulled_q.q, ExteriorElement(src.odd_coords(), out), mu, tags, odd_tags)


# --- semiinfinite wedge ------------------------------------------------------


@dataclass(frozen=True)
class WedgeMonomial:
    """Occupied set in Maya encoding: charge plus excitations.

    The occupied indices, listed increasingly, are eventually consecutive
    towards +infinity (every lattice point contains the top of the window).
    ``excitations`` is the symmetric difference with the vacuum
    {i >= -charge} of the same charge.
    """

    charge: int
    excitations: frozenset

    @classmethod
    def from_occupied(cls, space: WindowSpace, occupied) -> "WedgeMonomial":
        s = frozenset(occupied)
        u = space.point(s)
        c = relative_dim(u, space.u0)
        vac = frozenset(i for i in space.indices if i >= -c)
        return cls(c, s ^ vac)

    def occupied(self, space: WindowSpace) -> frozenset:
        vac = frozenset(i for i in space.indices if i >= -self.charge)
        s = vac ^ self.excitations
        if not s <= set(space.indices):
            raise IndexOutsideWindow("monomial does not fit the window")
        return s

    def to_json(self) -> dict:
        return {"charge": self.charge, "excitations": sorted(self.excitations)}


@dataclass(frozen=True)
class WedgeVector:
    """sum_I c_I e_I (x) delta_U in Lambda(U/U1) (x) Delta(U), I a subset of U.

    e_I (x) delta_U is the semiinfinite wedge with holes at I; as a vector of
    the wedge it equals |U \\ I> / t(U \\ I, U).
    """

    theory: DetTheory
    stage: frozenset
    terms: tuple  # ((I, coeff), ...) sorted, I increasing tuples

    @classmethod
    def make(cls, theory: DetTheory, stage, terms: Mapping) -> "WedgeVector":
        stage = frozenset(stage)
        d = {}
        for idx, c in terms.items():
            idx = tuple(sorted(idx))
            if not set(idx) <= stage:
                raise IndexOutsideWindow(f"exterior indices {idx} are not in the stage {sorted(stage)}")
            c = normalize_coeff(c)
            if c != 0:
                d[idx] = d.get(idx, 0) + c
        d = {k: v for k, v in d.items() if v != 0}
        return cls(theory, stage, tuple(sorted(d.items())))

    @classmethod
    def vacuum(cls, theory: DetTheory, u: LatticeSubspace | None = None) -> "WedgeVector":
        u = u or theory.ref
        return cls.make(theory, u.indices, {(): 1})

    @property
    def space(self) -> WindowSpace:
        return self.theory.space

    def as_dict(self) -> dict:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def occupied_coeffs(self) -> dict:
        """Coordinates in the stage-free basis |S>."""
        out = {}
        for idx, c in self.terms:
            s = self.stage - set(idx)
            out[frozenset(s)] = c / self.theory.table[(frozenset(s), self.stage)]
        return out

    @classmethod
    def from_occupied(cls, theory: DetTheory, stage, coeffs: Mapping) -> "WedgeVector":
        stage = frozenset(stage)
        terms = {}
        for s, c in coeffs.items():
            s = frozenset(s)
            if not s <= stage:
                raise NotNested("occupied set is not inside the stage")
            terms[tuple(sorted(stage - s))] = c * theory.table[(s, stage)]
        return cls.make(theory, stage, terms)

    def degrees(self) -> set:
        """Dim-torsor degrees: d(U) - |I| relative to the theory's reference."""
        base = relative_dim(self.space.point(self.stage), self.theory.ref)
        return {base - len(idx) for idx, _ in self.terms}

    def __add__(self, other: "WedgeVector") -> "WedgeVector":
        a, b = common_stage(self, other)
        d = a.as_dict()
        for k, c in b.terms:
            d[k] = d.get(k, 0) + c
        return WedgeVector.make(a.theory, a.stage, d)

    def scale(self, c) -> "WedgeVector":
        return WedgeVector.make(self.theory, self.stage, {k: v * c for k, v in self.terms})

    def __sub__(self, other):
        return self + other.scale(-1)

    def equals(self, other: "WedgeVector") -> bool:
        a, b = common_stage(self, other)
        return a.terms == b.terms

    def to_json(self) -> list:
        out = []
        for s, c in sorted(self.occupied_coeffs().items(), key=lambda kv: sorted(kv[0])):
            mono = WedgeMonomial.from_occupied(self.space, s)
            out.append({"charge": mono.charge, "excitations": sorted(mono.excitations), "coeff": str(c)})
        return out


def wedge_transition(v: WedgeVector, from_u, to_u, theory: DetTheory | None = None) -> WedgeVector:
    """Lambda(U/U1) (x) Delta(U) -> Lambda(U2/U1) (x) Delta(U2).

    e_I (x) delta_U -> t(U, U2) (e_I ^ e_gap) (x) delta_U2.
    """
    theory = theory or v.theory
    from_u = frozenset(from_u.indices if isinstance(from_u, LatticeSubspace) else from_u)
    to_u = frozenset(to_u.indices if isinstance(to_u, LatticeSubspace) else to_u)
    if from_u != v.stage:
        raise NotNested("vector is not at the stated stage")
    if not from_u <= to_u:
        raise NotNested(f"{sorted(from_u)} is not contained in {sorted(to_u)}")
    gap = tuple(sorted(to_u - from_u))
    t = theory.table[(from_u, to_u)]
    out = {}
    for idx, c in v.terms:
        out[tuple(sorted(idx + gap))] = c * t * sort_sign(idx, gap)
    return WedgeVector.make(theory, to_u, out)


def common_stage(a: WedgeVector, b: WedgeVector) -> tuple[WedgeVector, WedgeVector]:
    if a.theory != b.theory:
        raise SpaceMismatch("wedge vectors twisted by different theories")
    top = a.stage | b.stage
    return wedge_transition(a, a.stage, top), wedge_transition(b, b.stage, top)


def _clifford_sign(s: frozenset, i: int) -> int:
    return -1 if sum(1 for x in s if x > i) % 2 else 1


def clifford_action(kind: str, index: int, w: WedgeVector) -> WedgeVector:
    """psi_i (create) wedges e_i in front; psi_i^* (annihilate) contracts it.

    On |S>: psi_i |S> = (-1)^{#{s in S: s > i}} |S + i>, and the same sign for
    removal, so {psi_i, psi_j^*} = delta_ij and squares vanish.
    """
    if index not in w.space.indices:
        raise IndexOutsideWindow(f"index {index} is outside {w.space.name}")
    stage = w.stage | {index}
    w = wedge_transition(w, w.stage, stage)
    out = {}
    for s, c in w.occupied_coeffs().items():
        if kind == "create":
            if index in s:
                continue
            out[s | {index}] = out.get(s | {index}, 0) + c * _clifford_sign(s, index)
        elif kind == "annihilate":
            if index not in s:
                continue
            out[s - {index}] = out.get(s - {index}, 0) + c * _clifford_sign(s, index)
        else:
            raise ValueError(f"unknown Clifford generator {kind!r}")
    return WedgeVector.from_occupied(w.theory, stage, out)


def wedge_basis(theory: DetTheory) -> list[WedgeVector]:
    """The basis |S> at the top stage, one vector per lattice point."""
    top = frozenset(theory.space.indices)
    return [WedgeVector.from_occupied(theory, top, {u.indices: 1}) for u in theory.space.lattice()]
