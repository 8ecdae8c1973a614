import random
from fractions import Fraction

from hypothesis import given, settings

from conftest import seeds
from semimeasure.agmeasures import HeisenbergOp
from semimeasure.generators import random_posdef
from semimeasure.lattice import WindowSpace
from semimeasure.polynomial import Polynomial
from semimeasure.promeasures import (
    QuadraticTheory,
    VacuumElement,
    check_coherence,
    default_haar,
    forms_from_theory,
    fourier_family,
    full_space,
    gaussian_family,
    germ_move,
    heisenberg_on_family,
    heisenberg_on_germ,
    pair_family,
    parity_family,
    perturb_entry,
    q_trivialize_haar,
    reassemble_form,
    vacuum_delta,
    window_vector,
    zero_germ,
)

W1, W2 = WindowSpace.window(1), WindowSpace.window(2)


def test_forms_from_theory_examples():
    std = QuadraticTheory.standard(W2)
    f = forms_from_theory(std, W2.whole, W2.point([0]))
    assert f.matrix == tuple(tuple(int(i == j) for j in range(3)) for i in range(3))
    q = QuadraticTheory.from_matrix(W1, ((1, 1), (1, 3)))
    # U/U' is the first coordinate (index -1)
    assert forms_from_theory(q, W1.whole, W1.point([0])).matrix == ((Fraction(2, 3),),)


def test_haar_trivialization():
    assert q_trivialize_haar(QuadraticTheory.standard(W2), W2.point([0]), W2.point([0, 1])) == 1
    assert q_trivialize_haar(QuadraticTheory.standard(W1, 4), W1.empty, W1.point([0])) == 2


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_forms_bijection(seed):
    space = WindowSpace.window(random.Random(seed).randint(1, 2))
    q = QuadraticTheory(space, random_posdef(random.Random(seed), full_space(space)))
    forms = {}
    for a, b in space.nested_pairs():
        forms[(b.indices, a.indices)] = forms_from_theory(q, b, a)
    assert reassemble_form(space, forms) == q.form


def test_standard_gaussian_family():
    fam = gaussian_family(QuadraticTheory.standard(W2), W2.u0)
    assert set(fam.haar.table.values()) == {1}
    for m in fam.entries.values():
        assert all(m.q.matrix[i][j] == (i == j) for i in range(m.q.dim) for j in range(m.q.dim))
        assert m.p.degree() <= 0
    assert check_coherence(fam).passed
    assert check_coherence(gaussian_family(QuadraticTheory.standard(W1), W1.u0)).passed


def test_perturbation_breaks_only_incident_edges():
    fam = gaussian_family(QuadraticTheory.standard(W1), W1.u0)
    whole, empty = frozenset(W1.indices), frozenset()
    space = fam.entry(whole, empty).space
    bad = perturb_entry(fam, whole, empty, Polynomial.variable(space, 0))
    rep = check_coherence(bad)
    assert not rep.passed
    for kind, u, up, other in rep.failures:
        assert (frozenset(u), frozenset(up)) == (whole, empty)


def test_fourier_family():
    q = QuadraticTheory.from_matrix(W1, ((2, 1), (1, 2)))
    fam = gaussian_family(q, W1.u0)
    f = fourier_family(fam)
    assert check_coherence(f).passed
    assert fourier_family(f) == parity_family(fam)
    assert f.space == W1.dual_space()


def test_vacuum_relations_and_nonzero_germ():
    haar = default_haar(W2)
    for u in W2.lattice():
        assert VacuumElement.of(haar, u.indices).relations().passed
    delta = vacuum_delta(haar, W2.u0.indices)
    assert heisenberg_on_germ(HeisenbergOp.vector(window_vector(W2, {0: 1})), delta).is_zero()
    assert heisenberg_on_germ(HeisenbergOp.covector(window_vector(W2, {-1: 1})), delta).is_zero()
    assert not heisenberg_on_germ(HeisenbergOp.covector(window_vector(W2, {0: 1})), delta).is_zero()


def test_pairing():
    fam = gaussian_family(QuadraticTheory.standard(W2), W2.u0)
    delta = vacuum_delta(fam.haar, W2.u0.indices)
    assert pair_family(fam, delta) == 1
    moved = germ_move(delta, frozenset(W2.indices), frozenset())
    assert moved == delta
    assert pair_family(fam, moved) == pair_family(fam, delta)
    assert pair_family(fam, zero_germ(fam.haar, W2.u0.indices)) == 0
    assert pair_family(fam, delta.scale(3)) == 3


def test_heisenberg_commutes_with_structure_maps():
    fam = gaussian_family(QuadraticTheory.from_matrix(W1, ((2, 1), (1, 2))), W1.u0)
    for op in (HeisenbergOp.covector(window_vector(W1, {-1: 1})), HeisenbergOp.vector(window_vector(W1, {0: 2}))):
        assert check_coherence(heisenberg_on_family(op, fam)).passed
