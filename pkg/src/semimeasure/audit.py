"""Audit suites: seeded exact checks of the structural identities.

Each suite takes a window size and a seeded ``random.Random`` and returns a
Report; a failure key names the configuration that broke.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .agmeasures import (
    AlmostGaussianMeasure,
    HeisenbergOp,
    apply_heisenberg,
    base_change_sides,
    commutator,
    fourier,
    fourier_measure,
    function_to_measure,
    pullback_composition_sides,
    pullback_factor,
    pullback_measure,
    pushforward_measure,
)
from .derham import (
    AGForm,
    ComplexOfSpaces,
    OrientedForm,
    build_semiinf_derham,
    check_derham_coherence,
    d_oriented,
    exterior_d,
    fiber_integrate,
    form_base_change_sides,
    koszul_differential,
    koszul_direct,
)
from .errors import SingularCompression
from .generators import (
    cayley_orthogonal,
    random_gl,
    random_injection,
    random_polynomial,
    random_posdef,
    random_skew,
    random_surjection,
)
from .lattice import (
    CoordinateSeq,
    GLElement,
    WindowSpace,
    associator,
    associator_cube,
    canonical_det_theory,
    central_cocycle,
    cocycle_identity,
    coherence_failures,
    complex_orientation,
    complex_triples,
    det_dual,
    det_product,
    haar_from_det,
    orientation_from_det,
    theory_isomorphism,
)
from .linalg import FinVec, inverse, kernel, pullback_square
from .polynomial import Polynomial
from .promeasures import (
    QuadraticTheory,
    VacuumElement,
    check_coherence,
    default_haar,
    fourier_family,
    gaussian_family,
    orthogonal_invariance,
    pair_family,
    parity_family,
    regauge,
    vacuum_delta,
)
from .quadforms import (
    PosDefForm,
    fiber_minimizer,
    inverse_form,
    pushforward_form,
    pushforward_form_literal,
    restrict_form,
)
from .report import Report
from .superalg import (
    ExteriorElement,
    SuperLinMap,
    SuperMeasure,
    SuperVec,
    WedgeVector,
    berezin_integrate,
    clifford_action,
    super_base_change_sides,
    super_pullback,
    super_pullback_composition_sides,
    super_pushforward,
    wedge_basis,
    wedge_transition,
)

# --- random configurations ---------------------------------------------------


def random_measure(rng: random.Random, space: FinVec, degree: int = 3) -> AlmostGaussianMeasure:
    return AlmostGaussianMeasure(space, random_posdef(rng, space), random_polynomial(rng, space, degree))


def random_square(rng: random.Random, n1: int, name: str):
    """A Cartesian square built from a random surjection and injection."""
    w1 = FinVec.standard(n1, name)
    b1 = random_surjection(rng, w1, rng.randint(0, n1), name + "12")
    a1 = random_injection(rng, b1.target, rng.randint(0, b1.target.dim), name + "2")
    return pullback_square(b1, a1, name + "W")


def random_super_measure(rng: random.Random, w: SuperVec) -> SuperMeasure:
    terms = {
        idx: random_polynomial(rng, w.even, 2, 2)
        for k in range(w.odd.dim + 1)
        for idx in itertools.combinations(range(w.odd.dim), k)
    }
    return SuperMeasure(w, random_posdef(rng, w.even), ExteriorElement(w.odd_coords(), terms))


def random_form(rng: random.Random, space: FinVec, max_degree: int = 3) -> AGForm:
    comps = {}
    for k in range(min(space.dim, max_degree) + 1):
        for idx in itertools.combinations(range(space.dim), k):
            if rng.random() < 0.6:
                comps[idx] = random_polynomial(rng, space, 2, 2)
    return AGForm(random_posdef(rng, space), comps)


# --- the Wick oracle -----------------------------------------------------------


def matching_moment(cov, exps, cache: dict | None = None) -> Fraction:
    """E[y^e]: sum over perfect matchings of the index multiset of covariance products.

    Partial sums are shared through ``cache``, keyed by the sorted multiset
    of indices still to be matched.
    """
    cache = {} if cache is None else cache

    def rec(items):
        if not items:
            return Fraction(1)
        hit = cache.get(items)
        if hit is not None:
            return hit
        first, rest = items[0], items[1:]
        total = Fraction(0)
        for j, other in enumerate(rest):
            if cov[first][other] and (j == 0 or rest[j - 1] != other):
                mult = sum(1 for x in rest if x == other)
                total += mult * cov[first][other] * rec(rest[:j] + rest[j + 1:])
        cache[items] = total
        return total

    idx = tuple(i for i, k in enumerate(exps) for _ in range(k))
    return rec(idx) if len(idx) % 2 == 0 else Fraction(0)


def matching_expectation(p: Polynomial, q: PosDefForm, cache: dict | None = None) -> Fraction:
    cov = inverse(q.matrix) if q.dim else ()
    cache = {} if cache is None else cache
    return sum((c * matching_moment(cov, e, cache) for e, c in p.items()), Fraction(0))


def wick_agrees(mu: AlmostGaussianMeasure, beta) -> bool:
    """Moments of beta_* mu up to deg p, against the matching oracle on both sides.

    Moments of degree <= deg p determine a density of degree <= deg p, so
    this pins the pushforward down completely.
    """
    pushed = pushforward_measure(mu, beta)
    target = beta.target
    top = max(mu.p.degree(), 0)
    if pushed.p.degree() > top:
        return False
    down, up = {}, {}
    for e in itertools.product(range(top + 1), repeat=target.dim):
        if sum(e) > top:
            continue
        mono = Polynomial.monomial(target, e)
        lhs = matching_expectation(mono * pushed.p, pushed.q, down)
        rhs = matching_expectation(mono.substitute(mu.space, beta.matrix) * mu.p, mu.q, up)
        if lhs != rhs:
            return False
    return True


# --- suites -------------------------------------------------------------------


def suite_wick(window: int, rng: random.Random, count: int = 200) -> Report:
    rep = Report("wick-oracle")
    for t in range(count):
        n = rng.randint(1, 4)
        w = FinVec.standard(n, "W")
        mu = random_measure(rng, w, rng.randint(0, 6))
        beta = random_surjection(rng, w, rng.randint(0, n), "T")
        rep.record(wick_agrees(mu, beta), ("pushforward", t, n, beta.target.dim))
    return rep


def suite_images(window: int, rng: random.Random, count: int = 100) -> Report:
    rep = Report("image-functoriality")
    for t in range(count):
        kind = t % 3
        if kind == 0:
            n = rng.randint(1, 4)
            mu = random_measure(rng, FinVec.standard(n, "W"))
            b1 = random_surjection(rng, mu.space, rng.randint(0, n), "A")
            b2 = random_surjection(rng, b1.target, rng.randint(0, b1.target.dim), "B")
            ok = pushforward_measure(pushforward_measure(mu, b1), b2) == pushforward_measure(mu, b2 @ b1)
            rep.record(ok, ("push-composition", t))
        elif kind == 1:
            n = rng.randint(1, 4)
            mu = random_measure(rng, FinVec.standard(n, "W"))
            a1 = random_injection(rng, mu.space, rng.randint(0, n), "C")
            a2 = random_injection(rng, a1.source, rng.randint(0, a1.source.dim), "D")
            lhs, rhs = pullback_composition_sides(mu, a1, a2)
            rep.record(lhs == rhs, ("pull-composition", t))
        else:
            sq = random_square(rng, rng.randint(1, 4), "S")
            lhs, rhs = base_change_sides(random_measure(rng, sq.alpha2.target), sq)
            rep.record(lhs == rhs, ("base-change", t))
    return rep


def suite_schur(window: int, rng: random.Random, points: int = 50) -> Report:
    rep = Report("schur-complement")
    done = 0
    t = 0
    while done < points:
        n = rng.randint(2, 4)
        w = FinVec.standard(n, "W")
        q = random_posdef(rng, w)
        beta = random_surjection(rng, w, rng.randint(1, n - 1), "T")
        q2 = pushforward_form(q, beta)
        rep.record(q2 == pushforward_form_literal(q, beta), ("literal", t))
        y = tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(beta.target.dim))
        x = tuple(sum((r * yy for r, yy in zip(row, y)), Fraction(0)) for row in fiber_minimizer(q, beta).matrix)
        in_fiber = tuple(sum((r * xx for r, xx in zip(row, x)), Fraction(0)) for row in beta.matrix) == y
        rep.record(in_fiber and q(x) == q2(y), ("minimum-value", t))
        # the minimizer is q-orthogonal to the fibre directions
        _, kmap = kernel(beta)
        rep.record(all(q(x, col) == 0 for col in kmap.columns()), ("stationary", t))
        done += 1
        t += 1
    return rep


def suite_gaussians(window: int, rng: random.Random, count: int = 20, rotations: int = 10) -> Report:
    rep = Report("gaussian-images")
    for t in range(count):
        n = rng.randint(1, 4)
        w = FinVec.standard(n, "W")
        q = random_posdef(rng, w)
        g = AlmostGaussianMeasure.gaussian(q)
        beta = random_surjection(rng, w, rng.randint(0, n), "T")
        rep.record(pushforward_measure(g, beta) == AlmostGaussianMeasure.gaussian(pushforward_form(q, beta)), ("push", t))
        alpha = random_injection(rng, w, rng.randint(0, n), "S")
        pulled = pullback_measure(g, alpha)
        expect = AlmostGaussianMeasure.gaussian(restrict_form(q, alpha)).scale(pullback_factor(q, alpha))
        rep.record((pulled.q, pulled.p) == (expect.q, expect.p), ("pull", t))
    space = WindowSpace.window(window)
    qt = QuadraticTheory.standard(space)
    fam = gaussian_family(qt, space.u0)
    rep = rep.merge(check_coherence(fam))
    for t in range(rotations):
        g = GLElement(space, cayley_orthogonal(qt.form, random_skew(rng, space.size)))
        rep = rep.merge(orthogonal_invariance(fam, qt, g))
    return rep


def suite_fourier(window: int, rng: random.Random, count: int = 20) -> Report:
    rep = Report("fourier")
    for t in range(count):
        n = rng.randint(1, 3)
        w = FinVec.standard(n, "W")
        q = random_posdef(rng, w)
        img = function_to_measure(fourier(AlmostGaussianMeasure.gaussian(q)))
        rep.record(img == AlmostGaussianMeasure.gaussian(inverse_form(q)), ("gaussian", t))
        mu = AlmostGaussianMeasure(w, q, random_polynomial(rng, w, 3))
        once = fourier_measure(mu)
        rep.record(fourier_measure(once) == mu.parity(), ("double", t))
        rep.record(once.p.degree() == mu.p.degree(), ("degree", t))
    space = WindowSpace.window(2)
    m = [[Fraction(0)] * space.size for _ in range(space.size)]
    for i in range(space.size):
        m[i][i] = Fraction(2 + i % 2)
        if i + 1 < space.size:
            m[i][i + 1] = m[i + 1][i] = Fraction(1, 2)
    qt = QuadraticTheory.from_matrix(space, m)
    fam = gaussian_family(qt, space.u0)
    f = fourier_family(fam)
    rep = rep.merge(check_coherence(f))
    target = gaussian_family(qt.dual(), space.dual_space().u0)
    rep.record(regauge(f, target.haar) == target, "family-gaussian")
    rep.record(fourier_family(f) == parity_family(fam), "family-double")
    rep.record(f.degree() == fam.degree(), "family-degree")
    return rep


def suite_heisenberg(window: int, rng: random.Random, count: int = 100) -> Report:
    rep = Report("heisenberg-vacuum")
    for t in range(count):
        n = rng.randint(1, 3)
        mu = random_measure(rng, FinVec.standard(n, "W"), 2)
        v = [rng.randint(-2, 2) for _ in range(n)]
        f = [rng.randint(-2, 2) for _ in range(n)]
        lhs = apply_heisenberg(commutator(HeisenbergOp.covector(f), HeisenbergOp.vector(v)), mu)
        rep.record(lhs == mu.scale(sum(a * b for a, b in zip(f, v))), ("commutator", t))
    for size in range(1, window + 1):
        space = WindowSpace.window(size)
        haar = default_haar(space)
        for u in space.lattice():
            rep = rep.merge(VacuumElement.of(haar, u.indices).relations())
    space = WindowSpace.window(window)
    fam = gaussian_family(QuadraticTheory.standard(space), space.u0)
    rep.record(pair_family(fam, vacuum_delta(fam.haar, space.u0.indices)) == 1, "vacuum-pairing")
    return rep


def _blocks(indices):
    """Canonical det theories on one-coordinate windows."""
    out = []
    for i in indices:
        w = WindowSpace((i,))
        out.append(canonical_det_theory(w.point([i] if i >= 0 else [])))
    return out


def _stabilizer(rng: random.Random, space: WindowSpace) -> GLElement:
    """A random g with g(U0) = U0."""
    pos = {space.indices.index(i) for i in space.u0.indices}
    while True:
        g = random_gl(rng, space)
        m = tuple(tuple(x if (c not in pos or r in pos) else Fraction(0) for c, x in enumerate(row)) for r, row in enumerate(g.matrix))
        try:
            h = GLElement(space, m)
            central_cocycle(h, h, canonical_det_theory(space.u0))
        except SingularCompression:
            continue
        return h


def suite_theories(window: int, rng: random.Random, triples: int = 50) -> Report:
    rep = Report("theory-coherence")
    for n in range(1, window + 1):
        space = WindowSpace.window(n)
        d = canonical_det_theory(space.u0)
        named = {
            "det": d,
            "haar": haar_from_det(d),
            "haar-dual-line": haar_from_det(d, dualize=True),
            "orientation": orientation_from_det(d),
            "det-dual": det_dual(d),
        }
        for name, theory in named.items():
            bad = coherence_failures(theory)
            rep.record(not bad, (name, n, bad[:2]))
        rep.record(det_dual(det_dual(d)) == d, ("double-dual", n))
        seq = CoordinateSeq(space, tuple(i for i in space.indices if i < 0))
        a, b = seq.split(space.u0)
        prod = det_product(canonical_det_theory(a), canonical_det_theory(b), seq)
        rep.record(not coherence_failures(prod), ("product", n))
        try:
            theory_isomorphism(prod, d)
            rep.record(True, ("product-canonical", n))
        except Exception:
            rep.record(False, ("product-canonical", n))
    rep.record(all(v == 1 for v in associator(*_blocks((-2, -1, 0))).values()), "associator")
    rep.record(associator_cube(_blocks((-2, -1, 0, 1))), "cube")
    space = WindowSpace.window(min(window, 2))
    d = canonical_det_theory(space.u0)
    done = 0
    while done < triples:
        gs = [random_gl(rng, space) for _ in range(3)]
        try:
            ok = cocycle_identity(*gs, d)
        except SingularCompression:
            continue
        rep.record(ok, ("cocycle", done))
        done += 1
    for t in range(10):
        g1, g2 = _stabilizer(rng, space), _stabilizer(rng, space)
        rep.record(central_cocycle(g1, g2, d) == 1, ("stabilizer", t))
    return rep


def _super_pair(rng, w: SuperVec, name: str, surject: bool):
    pick = random_surjection if surject else random_injection
    e = pick(rng, w.even, rng.randint(0, w.even.dim), name + "e")
    o = pick(rng, w.odd, rng.randint(0, w.odd.dim), name + "o")
    return SuperLinMap(e, o)


def suite_super(window: int, rng: random.Random, count: int = 20) -> Report:
    rep = Report("super-wedge")
    e0 = FinVec.standard(0, "E0")
    g0 = AlmostGaussianMeasure.gaussian(PosDefForm(e0, ()))
    o1, o2 = FinVec.standard(1, "O1", prefix="t"), FinVec.standard(2, "O2", prefix="t")
    m1 = SuperMeasure.product(g0, ExteriorElement(SuperVec(e0, o1).odd_coords(), {(): 2, (0,): 3}), o1)
    rep.record(berezin_integrate(m1) == 3, "berezin-linear")
    m2 = SuperMeasure.product(g0, ExteriorElement(SuperVec(e0, o2).odd_coords(), {(0, 1): 5}), o2)
    rep.record(berezin_integrate(m2) == 5, "berezin-top")
    rep.record(berezin_integrate(m2.with_density(m2.density.left_derivative(0))) == 0, "berezin-derivative")
    for t in range(count):
        w = SuperVec(FinVec.standard(rng.randint(0, 2), "E"), FinVec.standard(rng.randint(0, 3), "O", prefix="t"))
        m = random_super_measure(rng, w)
        b1 = _super_pair(rng, w, "P", True)
        b2 = _super_pair(rng, b1.target, "Q", True)
        rep.record(super_pushforward(super_pushforward(m, b1), b2) == super_pushforward(m, b2 @ b1), ("push-composition", t))
        full = SuperLinMap(random_surjection(rng, w.even, 0, "Z"), random_surjection(rng, w.odd, 0, "Zo"))
        rep.record(berezin_integrate(super_pushforward(m, full)) == berezin_integrate(m), ("push-integral", t))
        a1 = _super_pair(rng, w, "A", False)
        a2 = _super_pair(rng, a1.source, "B", False)
        lhs, rhs = super_pullback_composition_sides(m, a1, a2)
        rep.record(lhs == rhs, ("pull-composition", t))
        es, os_ = random_square(rng, rng.randint(0, 2), "E"), random_square(rng, rng.randint(0, 3), "O")
        lhs, rhs = super_base_change_sides(random_super_measure(rng, SuperVec(es.alpha2.target, os_.alpha2.target)), es, os_)
        rep.record(lhs == rhs, ("base-change", t))
    rep.record(super_pullback(m1, SuperLinMap.identity(m1.space)) == m1, "pull-identity")
    space = WindowSpace.window(min(window, 2))
    d = canonical_det_theory(space.u0)
    lattice = space.lattice()
    for v in wedge_basis(canonical_det_theory(space.u0))[:4] + [WedgeVector.vacuum(d)]:
        for a in lattice:
            if not v.stage <= a.indices:
                continue
            va = wedge_transition(v, v.stage, a.indices)
            rep.record(va.degrees() == v.degrees(), ("grading", sorted(a.indices)))
            for b in lattice:
                if a.indices <= b.indices:
                    two = wedge_transition(va, a.indices, b.indices)
                    one = wedge_transition(v, v.stage, b.indices)
                    rep.record(two.terms == one.terms, ("transitivity", sorted(a.indices), sorted(b.indices)))
    vac = WedgeVector.vacuum(d)
    for w in [vac] + wedge_basis(d)[::3]:
        for i in space.indices:
            for j in space.indices:
                ac = clifford_action("create", i, clifford_action("annihilate", j, w))
                ca = clifford_action("annihilate", j, clifford_action("create", i, w))
                rep.record((ac + ca).equals(w if i == j else w.scale(0)), ("create-annihilate", i, j))
                cc = clifford_action("create", i, clifford_action("create", j, w))
                cc = cc + clifford_action("create", j, clifford_action("create", i, w))
                aa = clifford_action("annihilate", i, clifford_action("annihilate", j, w))
                aa = aa + clifford_action("annihilate", j, clifford_action("annihilate", i, w))
                rep.record(cc.is_zero() and aa.is_zero(), ("create-create", i, j))
    return rep


def suite_complexes(window: int, rng: random.Random, count: int = 20) -> Report:
    rep = Report("complexes")
    for t in range(count):
        form = random_form(rng, FinVec.standard(rng.randint(1, 4), "W"))
        rep.record(exterior_d(exterior_d(form)).is_zero(), ("d-squared", t))
        beta = random_surjection(rng, form.space, rng.randint(0, form.space.dim), "T")
        w = OrientedForm(form)
        rep.record(fiber_integrate(d_oriented(w), beta) == d_oriented(fiber_integrate(w, beta)), ("d-commutes-push", t))
        sq = random_square(rng, rng.randint(1, 3), "F")
        lhs, rhs = form_base_change_sides(OrientedForm(random_form(rng, sq.alpha2.target)), sq)
        rep.record(lhs == rhs, ("form-base-change", t))
    space = WindowSpace.window(2)
    orient = complex_orientation(space)
    rep.record(not coherence_failures(orient, complex_triples(space)), "complex-orientation")
    qt = QuadraticTheory.from_matrix(space, ((2, 1, 0, 0), (1, 2, 0, 0), (0, 0, 3, 1), (0, 0, 1, 1)))
    for power in (0, 1):
        fam = build_semiinf_derham(orient, qt, power)
        rep = rep.merge(check_derham_coherence(fam))
        dfam = fam.map_entries(d_oriented)
        rep = rep.merge(check_derham_coherence(dfam))
        for key, x in dfam.entries.items():
            rep.record(d_oriented(x).form.is_zero(), ("family-d-squared", power, sorted(key[0]), sorted(key[1])))
    cv = ComplexOfSpaces.cone_of_identity(FinVec.standard(1, "V"))
    sup = cv.sup()
    example = SuperMeasure(sup, PosDefForm.standard(sup.even), ExteriorElement(sup.odd_coords(), {(): 2, (0,): 3}))
    dex = koszul_differential(cv, None, example)
    x = Polynomial.variable(sup.even, 0)
    rep.record(dex.density == ExteriorElement(sup.odd_coords(), {(): x.scale(-3)}), "cone-example")
    for t in range(count // 2):
        m = random_super_measure(rng, sup)
        dm = koszul_differential(cv, None, m)
        rep.record(dm == koszul_direct(cv, m), ("koszul-transport", t))
        rep.record(koszul_differential(cv, None, dm).density.is_zero(), ("koszul-squared", t))
        rep.record(berezin_integrate(dm) == 0, ("koszul-exact", t))
    return rep


def suite_persistence(window: int, rng: random.Random) -> Report:
    from .serialize import CODECS, dumps, loads, sample_workspace, type_name

    rep = Report("persistence")
    ws = sample_workspace(min(window, 2))
    text = dumps(ws)
    back = loads(text)
    rep.record({type_name(o) for o in ws.objects.values()} == set(CODECS), "every-type")
    rep.record(back == ws, "round-trip")
    rep.record(dumps(back) == text, "stable-bytes")
    rep.record(dumps(sample_workspace(min(window, 2))) == text, "deterministic")
    return rep


SUITES = {
    "wick": suite_wick,
    "images": suite_images,
    "schur": suite_schur,
    "gaussians": suite_gaussians,
    "fourier": suite_fourier,
    "heisenberg": suite_heisenberg,
    "theories": suite_theories,
    "super": suite_super,
    "complexes": suite_complexes,
    "persistence": suite_persistence,
}


def run_suite(name: str, window: int = 3, seed: int = 0) -> Report:
    if name not in SUITES:
        raise KeyError(f"unknown audit suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](window, random.Random(seed))


def run_audit(names=None, window: int = 3, seed: int = 0) -> list[Report]:
    return [run_suite(name, window, seed) for name in (names or SUITES)]
