"""Almost-Gaussian measures p * gamma_q on finite-dimensional spaces.

A measure carries ``tags``: names of cokernel lines |det(Coker)^*| that a
pullback produced and nobody has discharged yet.  Each tag stands for the
coordinate Lebesgue basis of that line; the numeric factor is folded into
the polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import SpaceMismatch, TaggedMeasure, TagMismatch, VectorOutsideLattice
from .linalg import (
    FinVec,
    LinMap,
    cokernel,
    det,
    image_key,
    image_rref,
    inverse,
    kernel,
    matmul,
    pullback_square,
    solve_in_image,
    sub_block,
    transpose,
)
from .polynomial import Polynomial, normalize_coeff
from .quadforms import (
    PosDefForm,
    SymBilForm,
    fiber_minimizer,
    inverse_form,
    pushforward_form,
    restrict_form,
)
from .scalar import ONE, I, Scalar


def coker_line(alpha: LinMap) -> str:
    """Canonical name of |det(Coker alpha)^*|, depending only on the image."""
    return f"|det {alpha.target.name}/<{image_key(alpha)}>|^*"


def as_scalar(c) -> Scalar:
    return c if isinstance(c, Scalar) else Scalar(c)


# --- Gaussian moments ------------------------------------------------------


class MomentTable:
    """E[y^a] for a centred Gaussian with covariance ``cov`` (memoized).

    Uses E[y_i y^b] = sum_j cov[i][j] b_j E[y^(b - e_j)].
    """

    def __init__(self, cov):
        self.cov = cov
        self.n = len(cov)
        self._cache: dict = {(0,) * self.n: Fraction(1)}

    def __call__(self, a: tuple):
        if sum(a) % 2:
            return Fraction(0)
        hit = self._cache.get(a)
        if hit is not None:
            return hit
        i = next(k for k, x in enumerate(a) if x)
        b = list(a)
        b[i] -= 1
        total = Fraction(0)
        for j in range(self.n):
            if b[j] and self.cov[i][j]:
                c = list(b)
                c[j] -= 1
                total += self.cov[i][j] * b[j] * self(tuple(c))
        self._cache[a] = total
        return total


def gaussian_expectation(p: Polynomial, q: PosDefForm):
    """Integral of p against gamma_q."""
    if p.is_zero():
        return Fraction(0)
    table = MomentTable(inverse(q.matrix) if q.dim else ())
    total = Fraction(0)
    for e, c in p.terms.items():
        m = table(e)
        if m:
            total = total + c * m
    return normalize_coeff(total)


# --- measures ---------------------------------------------------------------


@dataclass(frozen=True)
class AlmostGaussianMeasure:
    space: FinVec
    q: PosDefForm
    p: Polynomial
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.q.space != self.space or self.p.space != self.space:
            raise SpaceMismatch("measure, form and polynomial live on different spaces")
        object.__setattr__(self, "tags", tuple(sorted(self.tags)))

    @classmethod
    def gaussian(cls, q: PosDefForm) -> "AlmostGaussianMeasure":
        return cls(q.space, q, Polynomial.constant(q.space))

    def with_p(self, p: Polynomial) -> "AlmostGaussianMeasure":
        return AlmostGaussianMeasure(self.space, self.q, p, self.tags)

    def scale(self, c) -> "AlmostGaussianMeasure":
        return self.with_p(self.p.scale(c))

    def __add__(self, other: "AlmostGaussianMeasure") -> "AlmostGaussianMeasure":
        if (other.space, other.q, other.tags) != (self.space, self.q, self.tags):
            raise SpaceMismatch("can only add measures with the same form and tags")
        return self.with_p(self.p + other.p)

    def __sub__(self, other):
        return self + other.scale(-1)

    def is_zero(self) -> bool:
        return self.p.is_zero()

    def parity(self) -> "AlmostGaussianMeasure":
        """Image under x -> -x."""
        return self.with_p(self.p.parity())

    def discharge(self, line: str, factor=1) -> "AlmostGaussianMeasure":
        """Drop a tag, multiplying by ``factor`` (the value of its basis)."""
        if line not in self.tags:
            raise TagMismatch(f"measure carries no line {line}")
        tags = list(self.tags)
        tags.remove(line)
        return AlmostGaussianMeasure(self.space, self.q, self.p.scale(factor), tuple(tags))

    def retag(self, old: Sequence[str], new: Sequence[str], factor=1) -> "AlmostGaussianMeasure":
        """Replace lines ``old`` by ``new`` under an identification scaled by ``factor``."""
        tags = list(self.tags)
        for line in old:
            if line not in tags:
                raise TagMismatch(f"measure carries no line {line}")
            tags.remove(line)
        return AlmostGaussianMeasure(self.space, self.q, self.p.scale(factor), tuple(tags) + tuple(new))


def integrate(mu: AlmostGaussianMeasure) -> Scalar:
    if mu.tags:
        raise TaggedMeasure(f"undischarged lines {mu.tags}")
    return as_scalar(gaussian_expectation(mu.p, mu.q))


def _fiber_average(p: Polynomial, q: PosDefForm, beta: LinMap) -> Polynomial:
    """w'' -> E[p(M w'' + K y)] with y Gaussian of covariance (K^T q K)^{-1}."""
    target = beta.target
    mmap = fiber_minimizer(q, beta)
    _, k = kernel(beta)
    kd, m = k.source.dim, target.dim
    if p.is_zero():
        return Polynomial.zero(target)
    combined = FinVec(
        f"{target.name}+fiber", tuple(target.basis) + tuple(f"\x00fiber{i}" for i in range(kd))
    )
    rows = [tuple(mmap.matrix[i]) + tuple(k.matrix[i]) if kd else tuple(mmap.matrix[i]) for i in range(q.dim)]
    if m == 0:
        rows = [tuple(k.matrix[i]) for i in range(q.dim)]
    lifted = p.substitute(combined, rows)
    if kd == 0:
        return lifted.relabel(target)
    c_blk = matmul(matmul(transpose(k.matrix), q.matrix), k.matrix)
    table = MomentTable(inverse(c_blk))
    out: dict = {}
    for e, c in lifted.terms.items():
        mom = table(e[m:])
        if mom:
            key = e[:m]
            out[key] = out.get(key, 0) + c * mom
    return Polynomial(target, out)


def pushforward_measure(mu: AlmostGaussianMeasure, beta: LinMap) -> AlmostGaussianMeasure:
    """Integration along the fibres of a surjection."""
    if beta.source != mu.space:
        raise SpaceMismatch(f"{beta.name} does not start at {mu.space.name}")
    beta.require_surjective()
    q2 = pushforward_form(mu.q, beta)
    return AlmostGaussianMeasure(beta.target, q2, _fiber_average(mu.p, mu.q, beta), mu.tags)


def pullback_factor(q: PosDefForm, alpha: LinMap) -> Scalar:
    """The cokernel factor of alpha^*(gamma_q): sigma^{-c} sqrt(det pi_* q).

    The sqrt part is dVol_{alpha,q} on Coker(alpha) in its coordinate basis;
    the sigma^{-c} is the Gaussian normalization that restriction does not
    remove.
    """
    cspace, proj = cokernel(alpha)
    c = cspace.dim
    if c == 0:
        return ONE
    qc = pushforward_form(q, proj)
    return Scalar.sigma(-c) * Scalar.sqrt(qc.det())


def pullback_measure(mu: AlmostGaussianMeasure, alpha: LinMap) -> AlmostGaussianMeasure:
    """Restriction along an injection, tagged by |det(Coker alpha)^*|."""
    if alpha.target != mu.space:
        raise SpaceMismatch(f"{alpha.name} does not land in {mu.space.name}")
    alpha.require_injective()
    q1 = restrict_form(mu.q, alpha)
    p1 = mu.p.substitute(alpha.source, alpha.matrix)
    tags = mu.tags
    if alpha.source.dim < alpha.target.dim:
        p1 = p1.scale(pullback_factor(mu.q, alpha))
        tags = tags + (coker_line(alpha),)
    return AlmostGaussianMeasure(alpha.source, q1, p1, tags)


def coker_identification(sq) -> Scalar:
    """Scalar identifying |det Coker(alpha2)^*| with |det Coker(alpha1)^*| via beta1.

    Ratio of the two cokernel factors on any form on W1 (it does not depend
    on the form).
    """
    probe = PosDefForm.standard(sq.alpha2.target)
    return pullback_factor(pushforward_form(probe, sq.beta1), sq.alpha1) / pullback_factor(probe, sq.alpha2)


def base_change_sides(mu: AlmostGaussianMeasure, sq) -> tuple:
    """(alpha1^* beta1_* mu, beta2_* alpha2^* mu) with the second retagged onto the first's line."""
    lhs = pullback_measure(pushforward_measure(mu, sq.beta1), sq.alpha1)
    rhs = pushforward_measure(pullback_measure(mu, sq.alpha2), sq.beta2)
    if sq.alpha2.source.dim < sq.alpha2.target.dim:
        rhs = rhs.retag([coker_line(sq.alpha2)], [coker_line(sq.alpha1)], coker_identification(sq))
    return lhs, rhs


def transport(mu: AlmostGaussianMeasure, g: LinMap) -> AlmostGaussianMeasure:
    """Direct image along an isomorphism (gamma_q goes to gamma_{g_* q})."""
    return pushforward_measure(mu, g)


# --- Fourier ----------------------------------------------------------------


@dataclass(frozen=True)
class AGFunction:
    """The function p(y) exp(-q(y)/2); no Haar factor."""

    space: FinVec
    q: PosDefForm
    p: Polynomial

    def __post_init__(self):
        if self.q.space != self.space or self.p.space != self.space:
            raise SpaceMismatch("function, form and polynomial live on different spaces")


def fourier(mu: AlmostGaussianMeasure) -> AGFunction:
    """y -> integral of exp(i(x, y)) dmu(x)."""
    if mu.tags:
        raise TaggedMeasure(f"Fourier transform of a tagged measure ({mu.tags})")
    qd = inverse_form(mu.q)
    dual = qd.space
    n = dual.dim
    # F(x_j nu) = -i d/dy_j F(nu); on P exp(-Q/2) this is -i (d_j P - (Q y)_j P)
    qy = [Polynomial.linear(dual, qd.matrix[j]) for j in range(n)]
    minus_i = -I
    cache: dict = {(0,) * n: Polynomial.constant(dual)}

    def image(e: tuple) -> Polynomial:
        hit = cache.get(e)
        if hit is not None:
            return hit
        j = next(k for k, x in enumerate(e) if x)
        prev = list(e)
        prev[j] -= 1
        base = image(tuple(prev))
        res = (base.derivative(j) - qy[j] * base).scale(minus_i)
        cache[e] = res
        return res

    out = Polynomial.zero(dual)
    for e, c in mu.p.items():
        out = out + image(e).scale(c)
    return AGFunction(dual, qd, out)


def function_to_measure(f: AGFunction) -> AlmostGaussianMeasure:
    """Multiply by sigma^{-dim} dVol_q of the function's own form: p * gamma_q."""
    return AlmostGaussianMeasure(f.space, f.q, f.p)


# --- Heisenberg algebra -----------------------------------------------------


@dataclass(frozen=True)
class HeisenbergOp:
    """Scalar combination of words in the generators L_v, L_f.

    A generator is ``("v", vector)`` or ``("f", covector)``.  Words act on
    measures from the right: the first letter is applied first.
    """

    terms: tuple = ()  # ((coeff, (gen, gen, ...)), ...)

    @classmethod
    def vector(cls, v: Sequence) -> "HeisenbergOp":
        return cls(((Fraction(1), (("v", tuple(Fraction(x) for x in v)),)),))

    @classmethod
    def covector(cls, f: Sequence) -> "HeisenbergOp":
        return cls(((Fraction(1), (("f", tuple(Fraction(x) for x in f)),)),))

    @classmethod
    def scalar(cls, c) -> "HeisenbergOp":
        return cls(((normalize_coeff(c), ()),))

    def __mul__(self, other: "HeisenbergOp") -> "HeisenbergOp":
        """``a * b``: apply a, then b."""
        if not isinstance(other, HeisenbergOp):
            return HeisenbergOp(tuple((c * normalize_coeff(other), w) for c, w in self.terms))
        return HeisenbergOp(tuple((c1 * c2, w1 + w2) for c1, w1 in self.terms for c2, w2 in other.terms))

    def __add__(self, other: "HeisenbergOp") -> "HeisenbergOp":
        return HeisenbergOp(self.terms + other.terms)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)


def commutator(a: HeisenbergOp, b: HeisenbergOp) -> HeisenbergOp:
    return a * b - b * a


def _apply_generator(gen, q: PosDefForm, p: Polynomial) -> Polynomial:
    kind, vec = gen
    if len(vec) != q.dim:
        raise SpaceMismatch(f"generator of length {len(vec)} on a {q.dim}-dimensional space")
    if kind == "f":
        return Polynomial.linear(q.space, vec) * p
    # derivative of the density p exp(-q/2) along v
    qv = [sum((vec[i] * q.matrix[i][j] for i in range(q.dim)), Fraction(0)) for j in range(q.dim)]
    return p.directional_derivative(vec) - Polynomial.linear(q.space, qv) * p


def apply_heisenberg(op: HeisenbergOp, mu: AlmostGaussianMeasure) -> AlmostGaussianMeasure:
    out = Polynomial.zero(mu.space)
    for c, word in op.terms:
        p = mu.p
        for gen in word:
            p = _apply_generator(gen, mu.q, p)
        out = out + p.scale(c)
    return mu.with_p(out)


# --- distributions ----------------------------------------------------------


@dataclass(frozen=True)
class DeskDistribution:
    """g(s) exp(-r(s)/2) ds on Im(support), times the transverse delta.

    ``density_q`` may be only positive semidefinite (None means 0).
    ``lines`` are the Haar lines this distribution supplies for pairing.
    """

    support: LinMap
    density_p: Polynomial
    density_q: SymBilForm | None = None
    lines: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.support.require_injective()
        if self.density_p.space != self.support.source:
            raise SpaceMismatch("density polynomial is not on the support")
        if self.density_q is not None and self.density_q.space != self.support.source:
            raise SpaceMismatch("density form is not on the support")
        object.__setattr__(self, "lines", frozenset(self.lines))

    @property
    def ambient(self) -> FinVec:
        return self.support.target

    def scale(self, c) -> "DeskDistribution":
        return DeskDistribution(self.support, self.density_p.scale(c), self.density_q, self.lines)

    def with_lines(self, lines) -> "DeskDistribution":
        return DeskDistribution(self.support, self.density_p, self.density_q, frozenset(lines))

    @classmethod
    def point_mass(cls, ambient: FinVec, c=1, supply_line: bool = False) -> "DeskDistribution":
        z = FinVec("0", ())
        sup = LinMap(z, ambient, tuple(() for _ in range(ambient.dim)))
        lines = {coker_line(sup)} if supply_line and ambient.dim else set()
        return cls(sup, Polynomial.constant(z, c), None, frozenset(lines))

    @classmethod
    def from_measure_density(cls, mu: AlmostGaussianMeasure, support: LinMap | None = None) -> "DeskDistribution":
        """Use the Lebesgue density of ``mu`` (sigma^{-n} sqrt(det q) p e^{-q/2})."""
        support = support or LinMap.identity(mu.space)
        n = mu.space.dim
        c = Scalar.sigma(-n) * Scalar.sqrt(mu.q.det())
        return cls(support, mu.p.scale(c), mu.q, frozenset())


def pair(phi: DeskDistribution, mu: AlmostGaussianMeasure) -> Scalar:
    if phi.ambient != mu.space:
        raise SpaceMismatch("distribution and measure live on different spaces")
    nu = pullback_measure(mu, phi.support)
    if sorted(nu.tags) != sorted(phi.lines):
        raise TagMismatch(f"lines {sorted(nu.tags)} vs supplied {sorted(phi.lines)}")
    prod = nu.p * phi.density_p
    if phi.density_q is None or not any(x for row in phi.density_q.matrix for x in row):
        return as_scalar(gaussian_expectation(prod, nu.q))
    total = PosDefForm(
        nu.space,
        tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(nu.q.matrix, phi.density_q.matrix)),
    )
    ratio = Scalar.sqrt(Fraction(nu.q.det()) / total.det())
    return ratio * as_scalar(gaussian_expectation(prod, total))


def distribution_pushforward(phi: DeskDistribution, alpha: LinMap) -> DeskDistribution:
    if alpha.source != phi.ambient:
        raise SpaceMismatch(f"{alpha.name} does not start at {phi.ambient.name}")
    alpha.require_injective()
    new_support = alpha @ phi.support
    lines = set(phi.lines)
    had_line = phi.support.source.dim == phi.ambient.dim or coker_line(phi.support) in lines
    lines.discard(coker_line(phi.support))
    if new_support.source.dim < new_support.target.dim and had_line:
        lines.add(coker_line(new_support))
    return DeskDistribution(new_support, phi.density_p, phi.density_q, frozenset(lines))


def distribution_pullback(phi: DeskDistribution, beta: LinMap) -> DeskDistribution:
    """beta^*: extend the density constantly along the fibres of a surjection.

    Satisfies <beta^* phi, mu> = <phi, beta_* mu>.
    """
    if beta.target != phi.ambient:
        raise SpaceMismatch(f"{beta.name} does not land in {phi.ambient.name}")
    beta.require_surjective()
    sq = pullback_square(beta, phi.support, name=f"{beta.source.name}|{phi.support.source.name}")
    a2, b2 = sq.alpha2, sq.beta2
    n = a2.source.dim
    p = phi.density_p.substitute(a2.source, b2.matrix)
    r = None
    if phi.density_q is not None:
        m = matmul(matmul(transpose(b2.matrix, n), phi.density_q.matrix), b2.matrix, out_cols=n) if n else ()
        r = SymBilForm(a2.source, m)
    # the cokernels of a2 and of the support are identified through beta;
    # compare the two cokernel factors on any form (the ratio is constant)
    probe = PosDefForm.standard(beta.source)
    ratio = pullback_factor(pushforward_form(probe, beta), phi.support) / pullback_factor(probe, a2)
    p = p.scale(ratio)
    lines = set(phi.lines)
    if coker_line(phi.support) in lines:
        lines.discard(coker_line(phi.support))
        if a2.source.dim < a2.target.dim:
            lines.add(coker_line(a2))
    return DeskDistribution(a2, p, r, frozenset(lines))


def normalize_distribution(phi: DeskDistribution) -> DeskDistribution:
    """Reparametrize the support by the row-reduced basis of its image.

    Two distributions are equal iff their normal forms are equal.
    """
    iota = phi.support
    r, piv = image_rref(iota)
    k = iota.source.dim
    src = FinVec(f"<{image_key(iota)}>", tuple(f"s{i}" for i in range(k)))
    if k == 0:
        return DeskDistribution(
            LinMap(src, iota.target, tuple(() for _ in range(iota.target.dim))),
            phi.density_p.relabel(src),
            None,
            phi.lines,
        )
    t = inverse(sub_block(iota.matrix, piv, range(k)))
    jac = abs(det(t))
    new_support = LinMap(src, iota.target, transpose(r, iota.target.dim))
    p = phi.density_p.substitute(src, t).scale(jac)
    q = None
    if phi.density_q is not None and any(x for row in phi.density_q.matrix for x in row):
        q = SymBilForm(src, matmul(matmul(transpose(t), phi.density_q.matrix), t))
    return DeskDistribution(new_support, p, q, phi.lines)


def apply_heisenberg_distribution(op: HeisenbergOp, phi: DeskDistribution) -> DeskDistribution:
    """The same right action on distributions: derivative along the support, or multiplication.

    A vector must be tangent to the support; otherwise the derivative leaves
    the class of distributions smooth along their support.
    """
    iota = phi.support
    src = iota.source
    r = phi.density_q
    out = Polynomial.zero(src)
    for c, word in op.terms:
        p = phi.density_p
        for kind, vec in word:
            if len(vec) != iota.target.dim:
                raise SpaceMismatch(f"generator of length {len(vec)} on {iota.target.name}")
            if kind == "f":
                p = Polynomial.linear(src, [sum((vec[i] * iota.matrix[i][j] for i in range(len(vec))), Fraction(0)) for j in range(src.dim)]) * p
                continue
            if not any(vec):
                p = Polynomial.zero(src)
                continue
            if src.dim == 0:
                raise VectorOutsideLattice("vector is not tangent to the support")
            s = solve_in_image(iota.matrix, vec, src.dim)
            if s is None:
                raise VectorOutsideLattice("vector is not tangent to the support")
            d = p.directional_derivative(s)
            if r is not None:
                rv = [sum((s[i] * r.matrix[i][j] for i in range(src.dim)), Fraction(0)) for j in range(src.dim)]
                d = d - Polynomial.linear(src, rv) * p
            p = d
        out = out + p.scale(c)
    return DeskDistribution(iota, out, r, phi.lines)


def pullback_composition_factor(a1: LinMap, a2: LinMap) -> Scalar:
    """Scalar of |det Coker(a1 a2)^*| = |det Coker(a2)^*| |det Coker(a1)^*|, read off a probe form."""
    probe = PosDefForm.standard(a1.target)
    whole = a1 @ a2
    return pullback_factor(probe, a1) * pullback_factor(restrict_form(probe, a1), a2) / pullback_factor(probe, whole)


def pullback_composition_sides(mu: AlmostGaussianMeasure, a1: LinMap, a2: LinMap) -> tuple:
    """(a2^* a1^* mu, (a1 a2)^* mu), the second moved onto the two separate cokernel lines."""
    lhs = pullback_measure(pullback_measure(mu, a1), a2)
    whole = a1 @ a2
    rhs = pullback_measure(mu, whole)
    if whole.source.dim < whole.target.dim:
        new = [coker_line(a) for a in (a1, a2) if a.source.dim < a.target.dim]
        rhs = rhs.retag([coker_line(whole)], new, pullback_composition_factor(a1, a2))
    return lhs, rhs


def fourier_measure(mu: AlmostGaussianMeasure) -> AlmostGaussianMeasure:
    """F(mu) read as a measure against the self-dual dy/(2 pi)^{n/2}.

    With this normalization F(F(mu)) is the image of mu under x -> -x.
    """
    f = fourier(mu)
    c = 1 / Scalar.sqrt(f.q.det())
    return AlmostGaussianMeasure(f.space, f.q, f.p.scale(c))
