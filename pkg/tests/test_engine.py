import random

import numpy as np
import pytest

from arw import _kernel
from arw.analysis.activity import LocalGraph
from arw.engine import (
    CAP_INSTRUCTIONS, CAP_JUMPS, HALT_BUDGET, HALT_CAPPED, HALT_STABLE, HALT_TARGET, Domain, check_abelian,
    check_monotone, stabilize,
)
from arw.randomness import ParticleLaw, RandomSource
from arw.state import ExplicitSource, LazySource, ParticleConfig, sample_config
from arw.topology import Topology

LINE = Topology("line")
GRID = Topology("grid2d")
PLUS, MINUS = LINE.encode(1), LINE.encode(-1)


def random_instance(rng, topo=None, radius=None, lam=None, mu=None, family="poisson"):
    topo = topo or rng.choice([LINE, GRID])
    radius = rng.randint(0, 3) if radius is None else radius
    lam = rng.choice([0.2, 1.0, 4.0]) if lam is None else lam
    mu = rng.choice([0.3, 0.8]) if mu is None else mu
    dom = Domain.ball(topo, radius)
    src = RandomSource(rng.getrandbits(32))
    eta = sample_config(dom.sites, src, ParticleLaw(family, mu), 1.0)
    return dom, eta, LazySource(topo, src, lam)


def total_particles(res, eta):
    return sum(abs(c) for _, c in res.final.items())


def test_empty_configuration():
    res = stabilize(Domain(LINE, (0,)), ParticleConfig(), ExplicitSource({}))
    assert res.halt_reason == HALT_STABLE
    assert res.m == {0: 0} and res.M == {0: 0}
    assert res.final.total() == 0


def test_single_particle_sleeps():
    res = stabilize(Domain(LINE, (0,)), ParticleConfig({0: 1}), ExplicitSource({0: ["s"]}))
    assert res.m == {0: 1} and res.M == {0: 0}
    assert res.final[0] == -1
    assert res.sleeps_used == 1


def test_two_particles_sleep_jump_sleep():
    res = stabilize(Domain(LINE, (0,)), ParticleConfig({0: 2}), ExplicitSource({0: ["s", 1, "s"]}))
    assert res.m == {0: 3} and res.M == {0: 1}
    assert res.final[0] == -1
    assert res.final[PLUS] == 1


def test_adjacent_active_sites_any_order():
    dom = Domain(LINE, (0, PLUS))
    eta = ParticleConfig({0: 1, PLUS: 1})
    tau = ExplicitSource({0: [1, "s"], PLUS: [0, "s", "s"]})
    ref = stabilize(dom, eta, tau)
    for seed in range(30):
        assert stabilize(dom, eta, tau, policy=random.Random(seed)).key() == ref.key()
    assert ref.M == {0: 1, PLUS: 1}
    assert ref.final[0] == -1 and ref.final[PLUS] == -1


def test_abelian_random_instances():
    rng = random.Random(7)
    for _ in range(100):
        dom, eta, tau = random_instance(rng)
        assert check_abelian(dom, eta, tau, trials=5, seed=rng.getrandbits(32)).passed


def test_conservation():
    rng = random.Random(8)
    for _ in range(100):
        dom, eta, tau = random_instance(rng)
        res = stabilize(dom, eta, tau)
        assert total_particles(res, eta) == eta.total()
        # every particle that jumped out of K sits on the outer boundary
        for x, c in res.final.items():
            if x in dom.sites:
                assert c <= 0 or res.halt_reason != HALT_STABLE


def test_instruction_caps():
    rng = random.Random(9)
    for _ in range(100):
        dom, eta, tau = random_instance(rng, lam=1.0, mu=0.8)
        caps = {x: rng.randint(0, 4) for x in dom.sites}
        res = stabilize(dom.with_caps(caps, CAP_INSTRUCTIONS), eta, tau)
        for x in dom.sites:
            assert res.m[x] <= caps[x]
        for x in res.capped:
            assert res.m[x] == caps[x]
        assert res.halt_reason in (HALT_STABLE, HALT_CAPPED)
        if res.capped:
            assert res.halt_reason == HALT_CAPPED


def test_jump_caps():
    rng = random.Random(10)
    for _ in range(100):
        dom, eta, tau = random_instance(rng, lam=1.0, mu=0.8)
        caps = {x: rng.randint(0, 3) for x in dom.sites}
        for relevant in (False, True):
            res = stabilize(dom.with_caps(caps, CAP_JUMPS), eta, tau, relevant=relevant)
            assert all(res.M[x] <= caps[x] for x in dom.sites)
            assert all(res.M[x] == caps[x] for x in res.capped)


def test_uncapped_equals_large_cap():
    rng = random.Random(11)
    for _ in range(50):
        dom, eta, tau = random_instance(rng)
        a = stabilize(dom, eta, tau)
        b = stabilize(dom.with_caps(dict.fromkeys(dom.sites, 10**6)), eta, tau)
        assert a.key() == b.key()


def test_instruction_caps_rejected_in_relevant_mode():
    dom = Domain(LINE, (0,), {0: 1}, CAP_INSTRUCTIONS)
    with pytest.raises(ValueError):
        stabilize(dom, ParticleConfig({0: 1}), ExplicitSource({0: [0]}), relevant=True)


def test_monotone_add_particle_and_bigger_domain():
    rng = random.Random(12)
    for _ in range(100):
        dom, eta, tau = random_instance(rng, radius=2)
        y = rng.choice(dom.sites)
        assert check_monotone(dom, eta, tau, dom, eta.add_one(y), tau).passed
        big = Domain.ball(dom.topology, 3)
        assert check_monotone(dom, eta, tau, big, eta, tau).passed


def test_monotone_gamma_minus():
    rng = random.Random(13)
    for _ in range(100):
        dom, eta, tau = random_instance(rng, radius=1, lam=1.0)
        y = rng.choice(dom.sites)
        assert check_monotone(dom, eta, tau, dom, eta, tau.gamma_minus(y, rng.randint(0, 2))).passed


def test_monotone_identical_inputs():
    dom, eta, tau = random_instance(random.Random(14), radius=2)
    assert check_monotone(dom, eta, tau, dom, eta, tau).passed


def test_monotone_rejects_incomparable():
    dom = Domain(LINE, (0,))
    with pytest.raises(ValueError):
        check_monotone(dom, ParticleConfig({0: 2}), ExplicitSource({0: [0, 0]}),
                       dom, ParticleConfig({0: 1}), ExplicitSource({0: [0, 0]}))
    with pytest.raises(ValueError):
        check_monotone(dom, ParticleConfig({0: 1}), ExplicitSource({0: [0]}),
                       dom, ParticleConfig({0: 1}), ExplicitSource({0: [1]}))


def test_relevant_mode_matches_full_mode():
    rng = random.Random(15)
    for _ in range(200):
        dom, eta, tau = random_instance(rng)
        a = stabilize(dom, eta, tau)
        b = stabilize(dom, eta, tau, relevant=True)
        assert a.M == b.M and a.final == b.final
        assert b.m is None


def test_stop_at_target():
    dom = Domain(LINE, (0,))
    tau = ExplicitSource({0: [0, 1, 0, 1]})
    res = stabilize(dom, ParticleConfig({0: 4}), tau, stop_at={0: 2})
    assert res.halt_reason == HALT_TARGET and res.M[0] == 2


def test_budget_exhaustion():
    res = stabilize(Domain.ball(LINE, 3), ParticleConfig({0: 50}), LazySource(LINE, RandomSource(1), 0.0), budget=10)
    assert res.halt_reason == HALT_BUDGET and res.steps == 10
    with pytest.raises(ValueError):
        stabilize(Domain(LINE, (0,)), ParticleConfig(), ExplicitSource({}), budget=0)


@pytest.mark.parametrize("topo", [LINE, GRID])
def test_kernel_matches_python(topo):
    L = 3
    graph = LocalGraph.ball(topo, L)
    dom = Domain.ball(topo, L)
    law = ParticleLaw("poisson", 0.8)
    for rep in range(60):
        for lam in (0.2, 1.0, 4.0):
            src = RandomSource(99, rep)
            state = np.empty(len(graph.vertices), dtype=np.int64)
            jumps = np.empty_like(state)
            _kernel.init_state(state, graph.vertices, graph.in_k, graph.activity_weights(1.0), law.code, law.mu,
                               np.uint64(99), rep)
            code, _ = _kernel.stabilize_relevant(graph.nbr, graph.deg, graph.vertices, graph.in_k, state, jumps,
                                                 np.uint64(99), rep, lam, -1, 0, 10**6)
            eta = sample_config(dom.sites, src, law, 1.0)
            res = stabilize(dom, eta, LazySource(topo, src, lam), relevant=True)
            assert code == _kernel.HALT_STABLE
            for i, v in enumerate(graph.vertices.tolist()):
                if graph.in_k[i]:
                    assert jumps[i] == res.M[v]
                assert state[i] == res.final[v]


def test_frog_mode():
    dom = Domain.ball(GRID, 2)
    law = ParticleLaw("poisson", 1.0)
    for rep in range(50):
        src = RandomSource(5, rep)
        xi = {x: float(x == GRID.origin) for x in dom.sites}
        eta = sample_config(dom.sites, src, law, xi)
        res = stabilize(dom, eta, LazySource(GRID, src, 0.0))
        assert res.sleeps_used == 0
        if eta[GRID.origin] >= 1:
            assert res.M[GRID.origin] >= 1
