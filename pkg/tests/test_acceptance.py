"""The ten acceptance criteria, each at exact equality.

Every test prints one ``criterion N: PASS|FAIL`` line; the conftest hook
repeats them in the terminal summary.
"""
from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction

import oracles
from semimeasure.agmeasures import AlmostGaussianMeasure, pushforward_measure
from semimeasure.audit import random_measure, run_suite
from semimeasure.generators import random_posdef, random_surjection
from semimeasure.linalg import FinVec
from semimeasure.quadforms import fiber_minimizer, pushforward_form, pushforward_form_literal
from semimeasure.serialize import CODECS, dump, load, sample_workspace, type_name

RESULTS: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = "criterion {}: {} {}".format(n, "PASS" if ok else "FAIL", detail)
    RESULTS.append(line)
    print(line)


def suite(name: str, window: int, seed: int = 0):
    start = time.perf_counter()
    rep = run_suite(name, window, seed)
    return rep, time.perf_counter() - start


def as_dict(p) -> dict:
    return {e: Fraction(c) for e, c in p.items()}


def oracle_agrees(mu: AlmostGaussianMeasure, beta) -> bool:
    """Every moment of beta_* mu up to deg p, both sides from the independent oracle."""
    pushed = pushforward_measure(mu, beta)
    n, k = mu.space.dim, beta.target.dim
    top = max(mu.p.degree(), 0)
    cov_src = oracles.invert(mu.q.matrix) if n else []
    cov_tgt = oracles.invert(pushed.q.matrix) if k else []
    src_p, tgt_p = as_dict(mu.p), as_dict(pushed.p)
    for e in itertools.product(range(top + 1), repeat=k):
        if sum(e) > top:
            continue
        lhs = oracles.expectation(oracles.poly_mul({e: Fraction(1)}, tgt_p), cov_tgt)
        rhs = oracles.expectation(oracles.poly_mul(oracles.monomial_of_images(beta.matrix, e, n), src_p), cov_src)
        if lhs != rhs:
            return False
    return True


def test_criterion_1_wick_oracle():
    rng = random.Random(2024)
    start = time.perf_counter()
    bad = []
    for t in range(200):
        n = rng.randint(1, 4)
        w = FinVec.standard(n, "W")
        mu = random_measure(rng, w, rng.randint(0, 6))
        beta = random_surjection(rng, w, rng.randint(0, n), "T")
        if not oracle_agrees(mu, beta):
            bad.append(t)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60
    report(1, ok, "200 triples, {} mismatches, {:.1f}s".format(len(bad), elapsed))
    assert not bad
    assert elapsed < 60


def test_criterion_2_composition_and_base_change():
    rep, elapsed = suite("images", 3)
    ok = rep.passed and rep.checked == 100 and elapsed < 30
    report(2, ok, "{} configurations, {} failures, {:.1f}s".format(rep.checked, len(rep.failures), elapsed))
    assert rep.passed, rep.failures[:5]
    assert rep.checked == 100
    assert elapsed < 30


def test_criterion_3_schur_complement():
    rng = random.Random(77)
    bad = 0
    for t in range(50):
        n = rng.randint(2, 4)
        w = FinVec.standard(n, "W")
        q = random_posdef(rng, w)
        beta = random_surjection(rng, w, rng.randint(1, n - 1), "T")
        q2 = pushforward_form(q, beta)
        y = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(beta.target.dim)]
        value, x = oracles.fiber_minimum(q.matrix, beta.matrix, y)
        section = fiber_minimizer(q, beta)
        ok = (
            q2 == pushforward_form_literal(q, beta)
            and q2(tuple(y)) == value
            and tuple(section(tuple(y))) == tuple(x)
        )
        bad += not ok
    report(3, bad == 0, "50 rational points, {} failures".format(bad))
    assert bad == 0


def test_criterion_4_gaussian_images():
    rep, elapsed = suite("gaussians", 3)
    ok = rep.passed and elapsed < 60
    report(4, ok, "{} checks, {} failures, {:.1f}s".format(rep.checked, len(rep.failures), elapsed))
    assert rep.passed, rep.failures[:5]
    assert elapsed < 60


def test_criterion_5_fourier():
    rep, elapsed = suite("fourier", 3)
    report(5, rep.passed, "{} checks, {} failures".format(rep.checked, len(rep.failures)))
    assert rep.passed, rep.failures[:5]


def test_criterion_6_heisenberg_vacuum():
    rep, elapsed = suite("heisenberg", 3)
    report(6, rep.passed, "{} checks, {} failures".format(rep.checked, len(rep.failures)))
    assert rep.passed, rep.failures[:5]


def test_criterion_7_theory_coherence():
    rep, elapsed = suite("theories", 4)
    ok = rep.passed and elapsed < 120
    report(7, ok, "{} checks up to N=4, {} failures, {:.1f}s".format(rep.checked, len(rep.failures), elapsed))
    assert rep.passed, rep.failures[:5]
    assert elapsed < 120


def test_criterion_8_super_and_wedge():
    rep, elapsed = suite("super", 3)
    report(8, rep.passed, "{} checks, {} failures".format(rep.checked, len(rep.failures)))
    assert rep.passed, rep.failures[:5]


def test_criterion_9_differentials():
    rep, elapsed = suite("complexes", 3)
    report(9, rep.passed, "{} checks, {} failures".format(rep.checked, len(rep.failures)))
    assert rep.passed, rep.failures[:5]


def test_criterion_10_persistence(tmp_path):
    ws = sample_workspace(2)
    path = tmp_path / "ws.json"
    dump(ws, path)
    first = path.read_bytes()
    back = load(path)
    dump(back, path)
    second = path.read_bytes()
    dump(sample_workspace(2), path)
    third = path.read_bytes()
    every = {type_name(o) for o in ws.objects.values()} == set(CODECS)
    ok = every and back == ws and first == second == third
    report(10, ok, "{} objects, every type: {}".format(len(ws.objects), every))
    assert every
    assert back == ws
    assert first == second == third
