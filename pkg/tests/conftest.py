"""Shared hypothesis strategies and fixtures."""
from __future__ import annotations

import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from semimeasure.generators import random_polynomial, random_posdef  # noqa: E402
from semimeasure.linalg import FinVec  # noqa: E402

small_fractions = st.fractions(min_value=-3, max_value=3, max_denominator=3)
seeds = st.integers(min_value=0, max_value=10**6)


@st.composite
def posdef_forms(draw, min_dim=1, max_dim=3):
    n = draw(st.integers(min_dim, max_dim))
    return random_posdef(random.Random(draw(seeds)), FinVec.standard(n, "W"))


@st.composite
def measures_data(draw, min_dim=1, max_dim=3, degree=3):
    """(q, p) on a fresh space."""
    q = draw(posdef_forms(min_dim, max_dim))
    p = random_polynomial(random.Random(draw(seeds)), q.space, degree)
    return q, p


def frac_matrix(rows):
    return tuple(tuple(Fraction(x) for x in r) for r in rows)


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
