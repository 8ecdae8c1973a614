import random

import pytest
from hypothesis import given, settings

from conftest import seeds
from semimeasure import Scalar
from semimeasure.audit import random_form, random_super_measure
from semimeasure.derham import (
    AGForm,
    ComplexOfSpaces,
    OrientedForm,
    build_semiinf_derham,
    check_derham_coherence,
    d_oriented,
    exterior_d,
    fiber_integrate,
    koszul_differential,
    koszul_direct,
    restrict_form_deRham,
)
from semimeasure.errors import NotAComplex
from semimeasure.generators import random_surjection
from semimeasure.lattice import WindowSpace, complex_orientation
from semimeasure.linalg import FinVec, LinMap
from semimeasure.polynomial import Polynomial
from semimeasure.promeasures import QuadraticTheory
from semimeasure.quadforms import PosDefForm
from semimeasure.superalg import ExteriorElement, SuperMeasure, berezin_integrate

X, XY = FinVec.standard(1, "X"), FinVec.standard(2, "XY")


def test_d_examples():
    q = PosDefForm.standard(X)
    d = exterior_d(AGForm.gaussian(q))
    assert d == AGForm(q, {(0,): -Polynomial.variable(X, 0)})
    top = AGForm.gaussian(PosDefForm.standard(XY), (0, 1), 3)
    assert exterior_d(top).is_zero()


def test_fibre_integration_example():
    q = PosDefForm.standard(XY)
    w = OrientedForm(AGForm.gaussian(q, (1,)))
    pushed = fiber_integrate(w, LinMap(XY, X, ((1, 0),)))
    assert pushed == OrientedForm(AGForm.gaussian(PosDefForm.standard(X), (), Scalar.sigma(1)))


def test_restriction_examples():
    q = PosDefForm.standard(XY)
    w = OrientedForm(AGForm.gaussian(q, (1,)))
    assert restrict_form_deRham(w, LinMap.identity(XY)) == w
    on_x = restrict_form_deRham(w, LinMap(X, XY, ((1,), (0,))))
    assert on_x.form.is_zero() and len(on_x.tags) == 1


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_d_squared_and_push(seed):
    rng = random.Random(seed)
    form = random_form(rng, FinVec.standard(rng.randint(1, 3), "W"))
    assert exterior_d(exterior_d(form)).is_zero()
    b1 = random_surjection(rng, form.space, rng.randint(0, form.space.dim), "A")
    b2 = random_surjection(rng, b1.target, rng.randint(0, b1.target.dim), "B")
    w = OrientedForm(form)
    assert fiber_integrate(d_oriented(w), b1) == d_oriented(fiber_integrate(w, b1))
    assert fiber_integrate(fiber_integrate(w, b1), b2) == fiber_integrate(w, b2 @ b1)


def test_semiinfinite_family():
    space = WindowSpace.window(2)
    o = complex_orientation(space)
    q = QuadraticTheory.standard(space)
    degrees = []
    for power in (0, 1, 2):
        fam = build_semiinf_derham(o, q, power)
        assert check_derham_coherence(fam).passed
        dfam = fam.map_entries(d_oriented)
        assert check_derham_coherence(dfam).passed
        assert all(d_oriented(x).form.is_zero() for x in dfam.entries.values())
        (deg,) = fam.degrees()
        degrees.append(deg)
    # each Kahler factor raises the degree by 2 = 2 dim_C of a complex pair
    assert [b - a for a, b in zip(degrees, degrees[1:])] == [2, 2]


def test_koszul_cone_example():
    cv = ComplexOfSpaces.cone_of_identity(FinVec.standard(1, "V"))
    sup = cv.sup()
    m = SuperMeasure(sup, PosDefForm.standard(sup.even), ExteriorElement(sup.odd_coords(), {(): 2, (0,): 3}))
    dm = koszul_differential(cv, None, m)
    assert dm.density == ExteriorElement(sup.odd_coords(), {(): Polynomial.variable(sup.even, 0).scale(-3)})


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_koszul_properties(seed):
    rng = random.Random(seed)
    cv = ComplexOfSpaces.cone_of_identity(FinVec.standard(rng.randint(1, 2), "V"))
    m = random_super_measure(rng, cv.sup())
    dm = koszul_differential(cv, None, m)
    assert dm == koszul_direct(cv, m)
    assert koszul_differential(cv, None, dm).density.is_zero()
    assert berezin_integrate(dm) == 0


def test_not_a_complex():
    v = FinVec.standard(1, "V")
    one = LinMap.identity(v)
    with pytest.raises(NotAComplex):
        ComplexOfSpaces((v, v, v), (one, one))
