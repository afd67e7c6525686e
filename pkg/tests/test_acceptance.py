"""The ten acceptance criteria, each at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line, printed in the terminal
summary (and immediately with ``-s``).
"""

import math
import random
import time

import numpy as np
import pytest
from scipy.stats import chisquare, geom, poisson

from arw.analysis.activity import estimate_critical_curve, monotone_path_mc, sandwich_check, slope_bound_check
from arw.analysis.events import get_event
from arw.analysis.exact import ExactEvent, diff_inequality, monotone_path_exact, semiline_boundary
from arw.engine import CAP_JUMPS, HALT_BUDGET, Domain, stabilize
from arw.essential import JumpThresholdEvent, SweepCounts, lemma_sweep
from arw.randomness import TAG_GAPS, TAG_PARTICLES, ParticleLaw, RandomSource, decode_particles, decode_sleep_count
from arw.state import LazySource, sample_config
from arw.topology import Topology
from conftest import ACCEPTANCE_LINES

LINE = Topology("line")
GRID = Topology("grid2d")

RUSSO_EVENTS = ["one-site", "one-site-cap3", "path-pair", "line-triple", "line-triple-all", "grid-pair-sum"]
RUSSO_POINTS = [(0.5, 0.3), (1.0, 0.5), (2.0, 0.7), (4.0, 0.9)]


def record(n, ok, text):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def exact_events():
    return {name: ExactEvent(get_event(name)) for name in RUSSO_EVENTS}


def test_criterion_01_abelian():
    t0 = time.perf_counter()
    rng = random.Random(101)
    mismatches = inconclusive = 0
    for _ in range(1000):
        topo = rng.choice([LINE, GRID])
        dom = Domain.ball(topo, rng.randint(0, 3))
        src = RandomSource(rng.getrandbits(32))
        eta = sample_config(dom.sites, src, ParticleLaw("poisson", rng.choice([0.3, 0.8])))
        tau = LazySource(topo, src, rng.choice([0.2, 1.0, 4.0]))
        ref = stabilize(dom, eta, tau)
        if ref.halt_reason == HALT_BUDGET:
            inconclusive += 1
            continue
        for _ in range(20):
            res = stabilize(dom, eta, tau, policy=random.Random(rng.getrandbits(64)))
            if res.halt_reason == HALT_BUDGET:
                inconclusive += 1
            elif res.key() != ref.key():
                mismatches += 1
    dt = time.perf_counter() - t0
    record(1, mismatches == 0 and inconclusive == 0,
           f"abelian: 1000 instances x 20 policies, {mismatches} mismatches, {inconclusive} inconclusive, {dt:.1f}s")


def test_criterion_02_russo_lambda(exact_events):
    t0 = time.perf_counter()
    worst, cases = 0.0, 0
    for ev in exact_events.values():
        for lam, mu in RUSSO_POINTS:
            for law in (ParticleLaw("bernoulli", mu), ParticleLaw("poisson", mu)):
                worst = max(worst, ev.russo(lam, law, 1e-4).lam_residual)
                cases += 1
    hand = exact_events["one-site"].russo(1.0, ParticleLaw("bernoulli", 0.5), 1e-4)
    hand_ok = abs(-hand.d_lam - 0.125) < 1e-6 and abs(hand.s_sum / 4 - 0.125) < 1e-12
    dt = time.perf_counter() - t0
    record(2, worst < 1e-6 and hand_ok and dt < 60,
           f"russo-lambda: {len(exact_events)} events, {cases} cases, worst residual {worst:.2e} < 1e-6, "
           f"one-site -dP/dlam = {-hand.d_lam:.9f}, {dt:.1f}s")


def test_criterion_03_russo_mu(exact_events):
    worst = {"bernoulli": 0.0, "poisson": 0.0}
    for ev in exact_events.values():
        for lam, mu in RUSSO_POINTS:
            for fam in worst:
                worst[fam] = max(worst[fam], ev.russo(lam, ParticleLaw(fam, mu), 1e-4).mu_residual)
    hand = exact_events["one-site"].russo(1.0, ParticleLaw("bernoulli", 0.5), 1e-4)
    ok = worst["bernoulli"] < 1e-6 and worst["poisson"] < 1e-5 and abs(hand.d_mu - 0.5) < 1e-6
    record(3, ok, f"russo-mu: worst residual bernoulli {worst['bernoulli']:.2e} < 1e-6, "
                  f"poisson {worst['poisson']:.2e} < 1e-5, one-site dP/dmu = {hand.d_mu:.9f}")


def test_criterion_04_differential_inequality(exact_events):
    passed = total = 0
    for name in ("one-site", "path-pair", "line-triple-all"):
        for lam in (0.5, 1.0, 2.0):
            for mu in (0.3, 0.8, 1.5):
                row = diff_inequality(exact_events[name], lam, ParticleLaw("poisson", mu), 1e-4)
                passed += row["pass"]
                total += 1
    record(4, passed == total == 27, f"differential inequality: {passed}/{total} at slack 10 h^2")


def test_criterion_05_lemmas():
    t0 = time.perf_counter()
    rng = random.Random(505)
    total = SweepCounts()
    for i in range(10_000):
        topo = rng.choice([LINE, GRID])
        K = tuple(topo.ball(topo.origin, rng.randint(0, 2)))
        caps = dict.fromkeys(K, rng.randint(2, 4)) if rng.random() < 0.25 else {}
        dom = Domain(topo, K, caps, CAP_JUMPS)
        src = RandomSource(rng.getrandbits(32))
        eta = sample_config(K, src, ParticleLaw("poisson", rng.choice([0.5, 1.0, 1.5])))
        A = JumpThresholdEvent(dom, {topo.origin: rng.randint(1, 3)})
        total.add(lemma_sweep(A, eta, LazySource(topo, src, rng.choice([0.5, 1.0, 2.0]))))
    dt = time.perf_counter() - t0
    ok = (total.instances >= 10_000 and total.inconclusive == 0 and total.emptiness_violations == 0
          and total.inclusion_violations == 0 and total.removal_violations == 0 and total.strict_violations == 0
          and total.uniqueness_violations == 0 and total.strict_qualifying >= 200 and dt < 300)
    record(5, ok, f"lemmas: {total.instances} instances, {total.violations} violations "
                  f"({total.removal_checked} removal checks), {total.strict_qualifying} strict-increase "
                  f"qualifying, {total.inconclusive} inconclusive, {dt:.1f}s")


def test_criterion_06_monotone_semiline(exact_events):
    pairs = []
    for name, (lam, mu) in [("one-site", (1.0, 0.3)), ("one-site", (0.5, 0.2)), ("path-pair", (1.0, 0.3)),
                            ("path-pair", (2.0, 0.5)), ("one-site-cap3", (1.0, 0.4)),
                            ("one-site-cap3", (0.5, 1.0)), ("line-triple-all", (1.0, 0.5)),
                            ("line-triple", (2.0, 0.6)), ("grid-pair-sum", (0.5, 0.3)),
                            ("grid-pair-sum", (1.0, 0.8))]:
        q = semiline_boundary((lam, mu), lam * 1.5)
        pairs.append(monotone_path_exact(exact_events[name], (lam, mu), q, "poisson")["pass"])
    mc = monotone_path_mc(LINE, (1.0, 0.7), (1.2, 0.8), 64, 10, 10_000, seed=606)
    ok = sum(pairs) == 10 and mc.passed
    record(6, ok, f"monotone semi-line: exact {sum(pairs)}/10 boundary pairs; MC P_p = {mc.p_hat:.4f}, "
                  f"P_q = {mc.q_hat:.4f}, 2 SE = {2 * mc.se:.4f}")


@pytest.fixture(scope="module")
def curve():
    return estimate_critical_curve(LINE, [0.25, 0.5, 1.0, 2.0], L=64, H=10, samples=1000, tol=0.05, seed=2024)


def test_criterion_07_sandwich(curve):
    rows = sandwich_check(curve)
    ok = all(r["pass"] for r in rows) and all(p.half_width <= 0.05 for p in curve.points)
    desc = ", ".join(f"{r['lam']:g}: {r['lower']:.3f} <= {r['zeta']:.3f} +- {r['half_width']:.3f}" for r in rows)
    record(7, ok, f"sandwich: {desc}")


def test_criterion_08_slope(curve):
    rows = slope_bound_check(curve)
    ok = len(rows) == 3 and all(r["pass"] for r in rows)
    desc = ", ".join(f"{r['rise']:+.3f} <= {r['allowed']:.3f}" for r in rows)
    record(8, ok, f"slope bound: {desc}")


def _chi2(observed_values, pmf, kmax):
    counts = np.bincount(np.minimum(observed_values, kmax), minlength=kmax + 1).astype(float)
    probs = np.array([pmf(k) for k in range(kmax)] + [1 - sum(pmf(k) for k in range(kmax))])
    return chisquare(counts, probs * counts.sum()).pvalue


def test_criterion_09_coupling_marginals():
    n = 100_000
    src = RandomSource(909)
    law = ParticleLaw("poisson", 1.0)
    verts = np.arange(n)
    u = src.uniforms(TAG_PARTICLES, verts, 0)
    particles = np.array([decode_particles(float(x), law) for x in u])
    y = 1.0 - src.uniforms(TAG_GAPS, verts % 1000, verts // 1000)
    sleeps = np.array([decode_sleep_count(float(v), 1.0) for v in y])
    p_part = _chi2(particles, lambda k: poisson.pmf(k, 1.0), 6)
    p_sleep = _chi2(sleeps, lambda k: geom.pmf(k + 1, 0.5), 10)
    record(9, p_part > 1e-3 and p_sleep > 1e-3,
           f"coupling marginals at (1, 1): chi-square p = {p_part:.3f} (particles), {p_sleep:.3f} (sleep counts)")


def test_criterion_10_frog_mode():
    dom = Domain.ball(LINE, 32)
    law = ParticleLaw("poisson", 1.0)
    bad = sleeps = occupied = 0
    for rep in range(100):
        src = RandomSource(1010, rep)
        eta = sample_config(dom.sites, src, law, {x: float(x == LINE.origin) for x in dom.sites})
        res = stabilize(dom, eta, LazySource(LINE, src, 0.0))
        sleeps += res.sleeps_used
        if eta[LINE.origin] >= 1:
            occupied += 1
            bad += res.M[LINE.origin] < 1 or res.halt_reason != "stable"
    record(10, bad == 0 and sleeps == 0,
           f"frog mode: 100 instances, {occupied} with eta(o) >= 1, {bad} with M(o) = 0, {sleeps} sleeps consumed")
