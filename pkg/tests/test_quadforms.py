import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

import oracles
from conftest import posdef_forms, seeds
from semimeasure import Scalar
from semimeasure.errors import NotPositiveDefinite
from semimeasure.generators import random_surjection
from semimeasure.linalg import FinVec, LinMap
from semimeasure.quadforms import (
    PosDefForm,
    SymBilForm,
    fiber_minimizer,
    induced_haar,
    inverse_form,
    is_positive_definite,
    pushforward_form,
    pushforward_form_literal,
    restrict_form,
)

V2 = FinVec.standard(2, "V")
V1 = FinVec.standard(1, "L")
B = PosDefForm(V2, ((1, 1), (1, 3)))


def test_sylvester():
    assert is_positive_definite(SymBilForm(V2, ((1, 0), (0, 1))))
    assert is_positive_definite(SymBilForm(V2, ((1, 1), (1, 3))))
    assert not is_positive_definite(SymBilForm(V2, ((1, 2), (2, 1))))
    with pytest.raises(NotPositiveDefinite):
        PosDefForm(V2, ((1, 2), (2, 1)))


def test_restrict():
    assert restrict_form(B, LinMap(V1, V2, ((1,), (0,)))).matrix == ((1,),)
    assert restrict_form(B, LinMap(V1, V2, ((1,), (1,)))).matrix == ((6,),)
    std = PosDefForm.standard(V2)
    assert restrict_form(std, LinMap(V1, V2, ((0,), (1,)))).matrix == ((1,),)


def test_pushforward_examples():
    proj = LinMap(V2, V1, ((1, 0),))
    assert pushforward_form(B, proj).matrix == ((Fraction(2, 3),),)
    diag = PosDefForm(V2, ((2, 0), (0, 5)))
    assert pushforward_form(diag, proj).matrix == ((2,),)
    zero = LinMap(V2, FinVec.standard(0, "Z"), ())
    assert pushforward_form(B, zero).matrix == ()


def test_induced_haar():
    assert induced_haar(PosDefForm.standard(V2)).coefficient == 1
    assert induced_haar(PosDefForm(V1, ((4,),))).coefficient == 2
    assert induced_haar(B).coefficient == Scalar.sqrt(2)


def test_inverse():
    assert inverse_form(PosDefForm.standard(V2)).matrix == ((1, 0), (0, 1))
    assert inverse_form(PosDefForm(V1, ((2,),))).matrix == ((Fraction(1, 2),),)
    h = Fraction(1, 2)
    assert inverse_form(B).matrix == ((3 * h, -h), (-h, h))
    assert inverse_form(inverse_form(B)) == B


@settings(max_examples=40, deadline=None)
@given(posdef_forms(2, 4), seeds)
def test_schur_matches_literal_and_fibre_minimum(q, seed):
    rng = random.Random(seed)
    beta = random_surjection(rng, q.space, rng.randint(1, q.dim - 1))
    pushed = pushforward_form(q, beta)
    assert pushed == pushforward_form_literal(q, beta)
    y = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(beta.target.dim)]
    value, x = oracles.fiber_minimum(q.matrix, beta.matrix, y)
    assert pushed(y) == value
    assert list(fiber_minimizer(q, beta)(y)) == x


@settings(max_examples=30, deadline=None)
@given(posdef_forms(1, 4), seeds)
def test_pushforward_composes(q, seed):
    rng = random.Random(seed)
    b1 = random_surjection(rng, q.space, rng.randint(0, q.dim), "A")
    b2 = random_surjection(rng, b1.target, rng.randint(0, b1.target.dim), "B")
    assert pushforward_form(pushforward_form(q, b1), b2) == pushforward_form(q, b2 @ b1)
