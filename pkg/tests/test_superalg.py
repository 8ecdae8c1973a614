import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import seeds
from semimeasure.agmeasures import AlmostGaussianMeasure, integrate
from semimeasure.audit import random_super_measure
from semimeasure.errors import ParityViolation
from semimeasure.lattice import WindowSpace, canonical_det_theory
from semimeasure.linalg import FinVec, LinMap
from semimeasure.polynomial import Polynomial
from semimeasure.quadforms import PosDefForm
from semimeasure.superalg import (
    ExteriorElement,
    SuperLinMap,
    SuperMeasure,
    SuperVec,
    WedgeVector,
    berezin_integrate,
    clifford_action,
    super_pullback,
    super_pushforward,
    wedge_basis,
    wedge_transition,
)

E0, E1 = FinVec.standard(0, "E0"), FinVec.standard(1, "E1")
O1, O2 = FinVec.standard(1, "O1", prefix="t"), FinVec.standard(2, "O2", prefix="t")
G0 = AlmostGaussianMeasure.gaussian(PosDefForm(E0, ()))


def odd(space, terms):
    return ExteriorElement(SuperVec(E0, space).odd_coords(), terms)


def test_exterior_algebra_signs():
    c = SuperVec(E0, O2).odd_coords()
    t0, t1 = ExteriorElement.generator(c, 0), ExteriorElement.generator(c, 1)
    assert t0.wedge(t1) == t1.wedge(t0).scale(-1)
    assert t0.wedge(t0).is_zero()
    assert t0.wedge(t1).left_derivative(0) == t1


def test_berezin_examples():
    m1 = SuperMeasure.product(G0, odd(O1, {(): 2, (0,): 3}), O1)
    assert berezin_integrate(m1) == 3
    m2 = SuperMeasure.product(G0, odd(O2, {(0, 1): 5, (0,): 7}), O2)
    assert berezin_integrate(m2) == 5
    x = Polynomial.variable(E1, 0)
    even = AlmostGaussianMeasure(E1, PosDefForm.standard(E1), x ** 2 + 1)
    m3 = SuperMeasure.product(even, ExteriorElement(SuperVec(E1, E0).odd_coords(), {(): 1}), E0)
    assert berezin_integrate(m3) == integrate(even) == 2


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(-3, 3))
def test_berezin_sees_only_the_top_cell(seed, c):
    rng = random.Random(seed)
    w = SuperVec(FinVec.standard(rng.randint(0, 2), "E"), FinVec.standard(rng.randint(1, 3), "O", prefix="t"))
    m = random_super_measure(rng, w)
    coords = w.odd_coords()
    lower = ExteriorElement(coords, {(0,): Polynomial.constant(w.even, c)}) if w.odd.dim > 1 else ExteriorElement(coords, {})
    assert berezin_integrate(m.with_density(m.density + lower)) == berezin_integrate(m)
    assert berezin_integrate(m.with_density(m.density.scale(c))) == berezin_integrate(m) * c


def test_pushforward_examples():
    m = SuperMeasure.product(G0, odd(O1, {(): 2, (0,): 3}), O1)
    w = m.space
    to_zero = SuperLinMap(LinMap(E0, E0, ()), LinMap(O1, FinVec.standard(0, "Z", prefix="t"), ()))
    pushed = super_pushforward(m, to_zero)
    assert berezin_integrate(pushed) == berezin_integrate(m) == 3
    assert super_pushforward(m, SuperLinMap.identity(w)) == m
    # fibre of odd dimension one inside a two-dimensional odd space
    m2 = SuperMeasure.product(G0, odd(O2, {(): 1, (0,): 4, (0, 1): 6}), O2)
    proj = SuperLinMap(LinMap.identity(E0), LinMap(O2, O1, ((0, 1),)))
    pushed = super_pushforward(m2, proj).normalized()
    assert pushed.density.component(()) == Polynomial.constant(E0, 4)
    assert pushed.density.component((0,)) == Polynomial.constant(E0, 6)
    # listing the fibre second reverses the orientation of det(W^1)
    swap = SuperLinMap(LinMap.identity(E0), LinMap(O2, O1, ((1, 0),)))
    m3 = SuperMeasure.product(G0, odd(O2, {(1,): 4}), O2)
    assert super_pushforward(m3, swap).normalized().density.component(()) == Polynomial.constant(E0, -4)


def test_pullback_examples():
    m = SuperMeasure.product(G0, odd(O2, {(): 1, (0, 1): 5}), O2)
    same = super_pullback(m, SuperLinMap.identity(m.space))
    assert same == m and same.tags == () and same.odd_tags == ()
    first = SuperLinMap(LinMap.identity(E0), LinMap(O1, O2, ((1,), (0,))))
    restricted = super_pullback(m, first)
    assert (0,) not in restricted.density.terms and len(restricted.odd_tags) == 1
    with pytest.raises(ParityViolation):
        super_pullback(m, SuperLinMap.identity(SuperVec(E1, O2)))


def test_wedge_transition_examples():
    space = WindowSpace.window(2)
    d = canonical_det_theory(space.u0)
    vac = WedgeVector.vacuum(d)
    step = space.chain(-1)
    moved = wedge_transition(vac, vac.stage, step)
    assert moved.as_dict() == {(-1,): d.transition(space.u0, step)}
    assert moved.degrees() == vac.degrees() == {0}
    top = frozenset(space.indices)
    assert wedge_transition(moved, step.indices, top).terms == wedge_transition(vac, vac.stage, top).terms


def test_clifford_examples():
    d = canonical_det_theory(WindowSpace.window(2).u0)
    vac = WedgeVector.vacuum(d)
    assert clifford_action("annihilate", -1, vac).is_zero()
    assert clifford_action("create", 0, vac).is_zero()
    assert clifford_action("create", -1, clifford_action("create", -1, vac)).is_zero()
    for w in wedge_basis(d):
        for i in (-2, 0, 1):
            anti = clifford_action("create", i, clifford_action("annihilate", i, w))
            anti = anti + clifford_action("annihilate", i, clifford_action("create", i, w))
            assert anti.equals(w)


def test_charge_grading_of_creation():
    d = canonical_det_theory(WindowSpace.window(2).u0)
    vac = WedgeVector.vacuum(d)
    assert clifford_action("create", -1, vac).degrees() == {1}
    assert clifford_action("annihilate", 0, vac).degrees() == {-1}
