from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_fractions
from semimeasure import ONE, I, Scalar
from semimeasure.errors import DivisionUnsupported, NotInjective
from semimeasure.linalg import (
    CartesianSquare,
    FinVec,
    LinMap,
    check_cartesian,
    cokernel,
    dual_map,
    kernel,
    pullback_square,
)

Q1, Q2 = FinVec.standard(1, "A"), FinVec.standard(2, "B")


def test_radical_reduction():
    assert Scalar.sqrt(2) * Scalar.sqrt(8) == 4
    assert Scalar.sqrt(12) == Scalar.sqrt(3) * 2
    assert Scalar.sqrt(Fraction(1, 2)) == Scalar.sqrt(2) / 2


def test_sigma_cancels():
    assert Scalar.sigma(2) * Scalar.sigma(-2) == ONE


def test_gaussian_rational_norm():
    assert (1 + I) * (1 - I) == 2
    assert I * I == -1


def test_division_by_sum_with_radicals_is_refused():
    with pytest.raises(DivisionUnsupported):
        ONE / (Scalar.sqrt(2) + Scalar.sigma(1))


def test_parse_round_trip():
    x = Scalar.sqrt(6) * Scalar.sigma(-3) * Fraction(5, 7) + I
    assert Scalar.parse(str(x)) == x
    assert Scalar.from_json(x.to_json()) == x


@given(small_fractions, small_fractions, st.integers(-3, 3))
def test_ring_laws(a, b, k):
    x, y = Scalar(a) + Scalar.sigma(k), Scalar(b) * Scalar.sqrt(3) + I
    assert x * y == y * x
    assert (x + y) - y == x
    assert x * (y + 1) == x * y + x


@given(st.fractions(min_value=Fraction(1, 20), max_value=50, max_denominator=20))
def test_sqrt_squares_back(q):
    assert Scalar.sqrt(q) ** 2 == q


def test_kernel_examples():
    proj = LinMap(Q2, Q1, ((1, 0),))
    _, inc = kernel(proj)
    assert inc.matrix == ((0,), (1,))
    space, _ = kernel(LinMap.identity(Q2))
    assert space.dim == 0
    _, inc = kernel(LinMap(Q2, Q1, ((1, 1),)))
    (col,) = inc.columns()
    assert col[0] == -col[1] != 0


def test_cokernel_examples():
    space, proj = cokernel(LinMap(Q1, Q2, ((1,), (0,))))
    assert space.dim == 1 and proj.matrix == ((0, 1),)
    assert cokernel(LinMap.identity(Q2))[0].dim == 0
    space, proj = cokernel(LinMap(Q1, Q2, ((1,), (1,))))
    assert proj.matrix == ((-1, 1),)  # (x, y) -> y - x


def test_dual_map_is_transpose():
    m = LinMap(Q2, FinVec.standard(2, "C"), ((1, 2), (3, 4)))
    assert dual_map(m).matrix == ((1, 3), (2, 4))
    assert dual_map(LinMap(Q2, Q1, ((1, 0),))).matrix == ((1,), (0,))
    assert dual_map(dual_map(m)) == m


def test_cartesian_squares():
    b1 = LinMap(Q2, Q1, ((1, 0),))
    a1 = LinMap(FinVec.standard(0, "Z"), Q1, ((),))
    sq = pullback_square(b1, a1)
    assert check_cartesian(sq)
    # a commuting square that is not a pullback: W has an extra kernel coordinate
    extra = FinVec.standard(3, "W3")
    bad = CartesianSquare(
        LinMap(extra, Q2, ((1, 0, 0), (0, 1, 0))),
        LinMap(extra, Q1, ((1, 0, 0),)),
        LinMap(Q2, Q1, ((1, 0),)),
        LinMap.identity(Q1),
    )
    assert not check_cartesian(bad)


def test_non_commuting_square_rejected():
    b1 = LinMap(Q2, Q1, ((1, 0),))
    sq = pullback_square(b1, LinMap.identity(Q1))
    broken = CartesianSquare(sq.alpha2, sq.beta2, sq.beta1, LinMap(Q1, Q1, ((2,),)))
    assert not check_cartesian(broken)


def test_require_injective():
    with pytest.raises(NotInjective):
        LinMap(Q2, Q1, ((1, 1),)).require_injective()


@settings(max_examples=40)
@given(st.lists(st.integers(-2, 2), min_size=6, max_size=6))
def test_kernel_and_cokernel_dimensions(entries):
    m = LinMap(FinVec.standard(3, "S"), Q2, (tuple(entries[:3]), tuple(entries[3:])))
    k, inc = kernel(m)
    c, proj = cokernel(m)
    assert k.dim == 3 - m.rank and c.dim == 2 - m.rank
    assert all(x == 0 for row in (m @ inc).matrix for x in row)
    assert all(x == 0 for row in (proj @ m).matrix for x in row)
