import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

import oracles
from conftest import measures_data, seeds
from semimeasure import I, Scalar
from semimeasure.agmeasures import (
    AGFunction,
    AlmostGaussianMeasure,
    DeskDistribution,
    HeisenbergOp,
    MomentTable,
    apply_heisenberg,
    commutator,
    distribution_pullback,
    fourier,
    fourier_measure,
    function_to_measure,
    integrate,
    pair,
    pullback_measure,
    pushforward_measure,
)
from semimeasure.errors import TaggedMeasure, TagMismatch
from semimeasure.generators import random_posdef, random_surjection
from semimeasure.linalg import FinVec, LinMap
from semimeasure.polynomial import Polynomial
from semimeasure.quadforms import PosDefForm, inverse_form

X = FinVec.standard(1, "X")
XY = FinVec.standard(2, "XY")
x, y = Polynomial.variable(XY, 0), Polynomial.variable(XY, 1)
STD1, STD2 = PosDefForm.standard(X), PosDefForm.standard(XY)
PROJ = LinMap(XY, X, ((1, 0),))
INCL = LinMap(X, XY, ((1,), (0,)))


def gauss(q, p=None):
    return AlmostGaussianMeasure(q.space, q, p if p is not None else Polynomial.constant(q.space))


def test_integrate_examples():
    assert integrate(gauss(PosDefForm(XY, ((2, 1), (1, 3))))) == 1
    t = Polynomial.variable(X, 0)
    assert integrate(gauss(STD1, t ** 2)) == 1
    assert integrate(gauss(STD1, t ** 4)) == 3
    with pytest.raises(TaggedMeasure):
        integrate(pullback_measure(gauss(STD2), INCL))


def test_moment_table_matches_oracles():
    cov = ((Fraction(2), Fraction(1, 2), Fraction(0)), (Fraction(1, 2), Fraction(1), Fraction(-1)), (Fraction(0), Fraction(-1), Fraction(3)))
    table = MomentTable(cov)
    for e in itertools.product(range(4), repeat=3):
        if sum(e) <= 6:
            expected = oracles.naive_moment(cov, e)
            assert table(e) == expected == oracles.isserlis_moment(cov, e) == oracles.generating_moment(cov, e)


def test_pushforward_examples():
    q = PosDefForm(XY, ((2, 1), (1, 3)))
    pushed = pushforward_measure(gauss(q), PROJ)
    assert pushed.q.matrix == ((Fraction(5, 3),),) and pushed.p == Polynomial.constant(X)
    assert pushforward_measure(gauss(STD2, y), PROJ).is_zero()
    assert pushforward_measure(gauss(STD2, y ** 2), PROJ) == gauss(STD1)


def test_pullback_examples():
    mu = gauss(STD2, x + y)
    same = pullback_measure(mu, LinMap.identity(XY))
    assert same == mu and same.tags == ()
    pulled = pullback_measure(gauss(STD2), INCL)
    # unit dVol on the cokernel line; the gamma normalisation leaves sigma^-1
    assert pulled.q == STD1 and len(pulled.tags) == 1
    assert pulled.p == Polynomial.constant(X, Scalar.sigma(-1))
    assert pullback_measure(gauss(STD2, x * y), INCL).is_zero()


def test_fourier_examples():
    q = PosDefForm(XY, ((2, 1), (1, 3)))
    f = fourier(gauss(q))
    assert f.q == inverse_form(q) and f.p == Polynomial.constant(f.space)
    t = Polynomial.variable(X, 0)
    g = fourier(gauss(STD1, t))
    assert g.p == Polynomial.variable(g.space, 0).scale(I)
    twice = fourier_measure(fourier_measure(gauss(STD1, t)))
    assert twice == gauss(STD1, -t)


def test_function_to_measure_examples():
    s = Polynomial.variable(X, 0)
    assert function_to_measure(AGFunction(X, STD1, Polynomial.constant(X))) == gauss(STD1)
    assert function_to_measure(AGFunction(X, STD1, Polynomial.zero(X))).is_zero()
    assert function_to_measure(AGFunction(X, STD1, s ** 2)) == gauss(STD1, s ** 2)


def test_heisenberg_examples():
    lv = apply_heisenberg(HeisenbergOp.vector([1, 0]), gauss(STD2))
    assert lv == gauss(STD2, -x)
    t = Polynomial.variable(X, 0)
    assert apply_heisenberg(HeisenbergOp.covector([1]), gauss(STD1)) == gauss(STD1, t)
    mu = gauss(STD1, t ** 3 + 2)
    assert apply_heisenberg(commutator(HeisenbergOp.covector([1]), HeisenbergOp.vector([1])), mu) == mu


def test_pair_examples():
    q = PosDefForm(X, ((1,),))
    full = DeskDistribution.from_measure_density(gauss(q))
    # integral of gamma_1 * gamma_1 density: sigma^-1 * sqrt(1/2)
    assert pair(full, gauss(q)) == Scalar.sigma(-1) * Scalar.sqrt(Fraction(1, 2))
    zero = DeskDistribution.point_mass(XY)
    with pytest.raises(TagMismatch):
        pair(zero, gauss(STD2, x + 3))
    got = pair(DeskDistribution.point_mass(XY, supply_line=True), gauss(STD2, x + 3))
    assert got == Scalar.sigma(-2) * 3
    assert pair(full, gauss(q, Polynomial.zero(X))) == 0


@settings(max_examples=30, deadline=None)
@given(measures_data(1, 3, 4), seeds)
def test_pushforward_preserves_moments(data, seed):
    q, p = data
    rng = random.Random(seed)
    beta = random_surjection(rng, q.space, rng.randint(0, q.dim))
    mu = AlmostGaussianMeasure(q.space, q, p)
    assert integrate(pushforward_measure(mu, beta)) == integrate(mu)
    pushed = pushforward_measure(mu, beta)
    cov = oracles.invert(pushed.q.matrix) if beta.target.dim else []
    for i in range(beta.target.dim):
        e = tuple(int(j == i) for j in range(beta.target.dim))
        lhs = oracles.expectation(oracles.poly_mul({e: Fraction(1)}, dict(pushed.p.items())), cov)
        rhs = oracles.expectation(
            oracles.poly_mul(oracles.monomial_of_images(beta.matrix, e, q.dim), dict(p.items())),
            oracles.invert(q.matrix),
        )
        assert lhs == rhs


@settings(max_examples=30, deadline=None)
@given(measures_data(1, 3, 3))
def test_fourier_twice_is_parity(data):
    q, p = data
    mu = AlmostGaussianMeasure(q.space, q, p)
    assert fourier_measure(fourier_measure(mu)) == mu.parity()


@settings(max_examples=20, deadline=None)
@given(measures_data(1, 2, 2), seeds)
def test_distribution_pullback_is_adjoint(data, seed):
    q, p = data
    rng = random.Random(seed)
    beta = random_surjection(rng, q.space, rng.randint(0, q.dim))
    mu = AlmostGaussianMeasure(q.space, q, p)
    target = beta.target
    phi = DeskDistribution.from_measure_density(gauss(random_posdef(rng, target)))
    assert pair(distribution_pullback(phi, beta), mu) == pair(phi, pushforward_measure(mu, beta))
