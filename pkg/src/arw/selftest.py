"""Fast consistency checks behind ``arw selftest``."""

from __future__ import annotations

import random

from . import _kernel
from .analysis.events import one_site
from .analysis.exact import ExactEvent
from .engine import Domain, check_abelian, stabilize
from .randomness import ParticleLaw, RandomSource, decode_sleep_count, key_uniform
from .state import ExplicitSource, LazySource, ParticleConfig, sample_config
from .topology import Topology


def _check(name, ok, **detail):
    return {"name": name, "pass": bool(ok), **detail}


def run_selftest() -> list[dict]:
    out = []
    rng = random.Random(0)
    keys = [(rng.getrandbits(63), rng.getrandbits(20), rng.randrange(4), rng.getrandbits(63), rng.getrandbits(20))
            for _ in range(200)]
    out.append(_check("hash-twin", all(key_uniform(*k) == _kernel.key_uniform(*k) for k in keys)))

    out.append(_check("sleep-decoder", [decode_sleep_count(u, 1.0) for u in (0.6, 0.3, 0.2)] == [0, 1, 2]))

    line = Topology("line")
    res = stabilize(Domain(line, (0,)), ParticleConfig({0: 2}), ExplicitSource({0: ["s", 1, "s"]}))
    out.append(_check("engine-example", res.m[0] == 3 and res.M[0] == 1 and res.final[0] == -1
                      and res.final[line.encode(1)] == 1))

    dom = Domain.ball(line, 3)
    statuses = set()
    for i in range(20):
        src = RandomSource(1, i)
        eta = sample_config(dom.sites, src, ParticleLaw("poisson", 0.8))
        statuses.add(check_abelian(dom, eta, LazySource(line, src, 1.0), 5, i).status)
    out.append(_check("abelian", statuses == {"pass"}))

    r = ExactEvent(one_site()).russo(1.0, ParticleLaw("bernoulli", 0.5))
    out.append(_check("russo-one-site", r.lam_residual < 1e-6 and r.mu_residual < 1e-6 and abs(r.prob - 0.25) < 1e-15,
                      lam_residual=r.lam_residual, mu_residual=r.mu_residual))
    return out
