"""Monte Carlo activity estimates and the critical-curve tracer.

The activity proxy is the event ``M_{B_L}(o) > H``: the origin emits more
than H jumps while the ball of radius L is stabilised. Replicates share the
keyed random source, so estimates at different ``(lam, mu)`` are coupled
replicate by replicate.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .. import _kernel
from ..randomness import ParticleLaw
from ..topology import Topology

DEFAULT_BUDGET = 10**6
MU_RANGE = (0.0, 1.5)
CROSSING = 0.5


def set_threads_from_env(var: str = "ARW_THREADS") -> int | None:
    """Apply a thread count from the environment to the compiled kernels."""
    value = os.environ.get(var)
    if not value:
        return None
    import numba

    n = max(1, min(int(value), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@dataclass(frozen=True)
class LocalGraph:
    """Ball B_L(o) plus its outer boundary, as flat arrays for the kernel.

    Rows of ``nbr`` for boundary sites are -1: they receive particles but are
    never toppled.
    """

    topology: Topology
    radius: int
    vertices: np.ndarray
    nbr: np.ndarray
    deg: np.ndarray
    in_k: np.ndarray
    origin_index: int

    @classmethod
    def ball(cls, topology: Topology, radius: int) -> "LocalGraph":
        K = topology.ball(topology.origin, radius)
        outer = topology.boundary(K)
        verts = K + outer
        index = {v: i for i, v in enumerate(verts)}
        dmax = max(topology.degree(v) for v in K)
        nbr = np.full((len(verts), dmax), -1, dtype=np.int64)
        deg = np.zeros(len(verts), dtype=np.int64)
        for v in K:
            ns = topology.neighbors(v)
            deg[index[v]] = len(ns)
            nbr[index[v], : len(ns)] = [index[u] for u in ns]
        in_k = np.zeros(len(verts), dtype=np.bool_)
        in_k[: len(K)] = True
        return cls(topology, radius, np.asarray(verts, dtype=np.int64), nbr, deg, in_k, index[topology.origin])

    @property
    def size(self) -> int:
        return int(self.in_k.sum())

    def activity_weights(self, xi) -> np.ndarray:
        """Per-site activity probability; ``xi`` is a number or a callable of the vertex."""
        if callable(xi):
            return np.array([float(xi(int(v))) for v in self.vertices])
        return np.full(len(self.vertices), float(xi))


def activity_indicators(graph: LocalGraph, lam: float, law: ParticleLaw, H: int, replicates, seed: int,
                        xi=1.0, budget: int = DEFAULT_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    """Per-replicate indicator of ``M_{B_L}(o) > H`` and the budget-exhaustion flags."""
    if H < 0:
        raise ValueError("H must be >= 0")
    if lam < 0:
        raise ValueError("sleep rate must be >= 0")
    reps = np.asarray(replicates, dtype=np.int64)
    return _kernel.activity_batch(
        graph.nbr, graph.deg, graph.vertices, graph.in_k, graph.activity_weights(xi),
        law.code, law.mu, float(lam), np.uint64(seed), reps, graph.origin_index, H + 1, budget,
    )


@dataclass
class ActivityEstimate:
    lam: float
    mu: float
    hits: int
    samples: int
    exhausted: int
    lo: float
    hi: float

    @property
    def p(self) -> float:
        return self.hits / self.samples


def wilson(hits: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(hits, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_activity(topology: Topology, lam: float, mu: float, L: int, H: int, samples: int, seed: int,
                      family: str = "poisson", xi=1.0, budget: int = DEFAULT_BUDGET,
                      graph: LocalGraph | None = None) -> ActivityEstimate:
    """Fraction of replicates in which the origin jumps more than ``H`` times."""
    if L < 0 or samples < 1:
        raise ValueError("need L >= 0 and samples >= 1")
    law = ParticleLaw(family, mu)
    g = graph or LocalGraph.ball(topology, L)
    hit, exh = activity_indicators(g, lam, law, H, np.arange(samples), seed, xi, budget)
    k = int(hit.sum())
    lo, hi = wilson(k, samples)
    return ActivityEstimate(lam, mu, k, samples, int(exh.sum()), lo, hi)


@dataclass
class CurvePoint:
    lam: float
    zeta: float
    lo: float
    hi: float
    censored: str = ""  # "", "above" (no crossing below the range top)

    @property
    def half_width(self) -> float:
        return (self.hi - self.lo) / 2


@dataclass
class CurveEstimate:
    points: list
    meta: dict = field(default_factory=dict)


def bisect_crossing(graph: LocalGraph, lam: float, H: int, samples: int, seed: int, tol: float,
                    family: str = "poisson", xi=1.0, budget: int = DEFAULT_BUDGET,
                    mu_range=MU_RANGE, level: float = CROSSING) -> CurvePoint:
    """Bisect mu until the bracket of the level crossing is no wider than ``tol``."""
    lo, hi = mu_range
    reps = np.arange(samples)

    def frac(mu):
        hit, _ = activity_indicators(graph, lam, ParticleLaw(family, mu), H, reps, seed, xi, budget)
        return hit.mean()

    if frac(hi) < level:
        return CurvePoint(lam, math.inf, hi, math.inf, "above")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if frac(mid) >= level:
            hi = mid
        else:
            lo = mid
    return CurvePoint(lam, (lo + hi) / 2, lo, hi)


def estimate_critical_curve(topology: Topology, lams, L: int, H: int, samples: int, tol: float, seed: int,
                            family: str = "poisson", xi=1.0, budget: int = DEFAULT_BUDGET) -> CurveEstimate:
    """Crossing of the finite-size activity proxy at level 1/2, per lambda.

    This estimates where the proxy crosses 1/2, not a certified critical
    density. The same replicates are used at every grid point.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    lams = sorted(float(v) for v in lams)
    if not lams or lams[0] <= 0:
        raise ValueError("lambda grid must be non-empty and positive")
    graph = LocalGraph.ball(topology, L)
    pts = [bisect_crossing(graph, lam, H, samples, seed, tol, family, xi, budget) for lam in lams]
    meta = {
        "topology": topology.spec(), "L": L, "H": H, "samples": samples, "tol": tol, "seed": seed,
        "family": family, "budget": budget, "crossing_level": CROSSING, "mu_range": list(MU_RANGE),
        "note": "crossing of the finite-size proxy M_{B_L}(o) > H, not a certified critical density",
    }
    return CurveEstimate(pts, meta)


def sandwich_check(curve: CurveEstimate) -> list[dict]:
    """lam/(1+lam) - hw <= zeta <= 1 + hw for each point."""
    rows = []
    for p in curve.points:
        lower = p.lam / (1 + p.lam)
        if p.censored:
            ok = False
        else:
            ok = lower - p.half_width <= p.zeta <= 1 + p.half_width
        rows.append({"lam": p.lam, "zeta": p.zeta, "lower": lower, "upper": 1.0, "half_width": p.half_width,
                     "pass": ok})
    return rows


def slope_bound_check(curve: CurveEstimate) -> list[dict]:
    """Rise between neighbours against delta / (lam (1 + lam)) plus both half-widths."""
    rows = []
    pts = curve.points
    for a, b in zip(pts, pts[1:]):
        delta = b.lam - a.lam
        allowed = delta / (a.lam * (1 + a.lam)) + a.half_width + b.half_width
        if a.censored or b.censored:
            rows.append({"lam": a.lam, "next": b.lam, "rise": None, "allowed": allowed, "pass": True,
                         "note": "censored point skipped"})
            continue
        rise = b.zeta - a.zeta
        rows.append({"lam": a.lam, "next": b.lam, "rise": rise, "allowed": allowed, "pass": rise <= allowed,
                     "note": ""})
    return rows


def isotonic_flags(curve: CurveEstimate) -> list[bool]:
    """For each adjacent pair, whether the estimate decreases beyond the half-widths."""
    pts = curve.points
    return [b.zeta < a.zeta - a.half_width - b.half_width for a, b in zip(pts, pts[1:])]


def in_semiline(p: tuple, q: tuple, slope: float | None = None) -> bool:
    """Whether q lies in the region above the semi-line from p."""
    lam, mu = p
    lq, mq = q
    if lq < lam:
        return False
    if slope is None:
        if lq == lam:
            return mq >= mu
        slope = 1 / (lam * (1 + lam))
    return mq >= mu + slope * (lq - lam) - 1e-12


@dataclass
class PathCheck:
    p_hat: float
    q_hat: float
    se: float
    passed: bool
    samples: int


def monotone_path_mc(topology: Topology, p: tuple, q: tuple, L: int, H: int, samples: int, seed: int,
                     family: str = "poisson", budget: int = DEFAULT_BUDGET) -> PathCheck:
    """Coupled estimate of P_p and P_q; passes iff P_p <= P_q + 2 SE of the paired difference."""
    if not in_semiline(p, q):
        raise ValueError(f"{q} is not in the region above the semi-line from {p}")
    g = LocalGraph.ball(topology, L)
    reps = np.arange(samples)
    a, _ = activity_indicators(g, p[0], ParticleLaw(family, p[1]), H, reps, seed, budget=budget)
    b, _ = activity_indicators(g, q[0], ParticleLaw(family, q[1]), H, reps, seed, budget=budget)
    d = a.astype(float) - b.astype(float)
    se = float(d.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    pa, pb = float(a.mean()), float(b.mean())
    return PathCheck(pa, pb, se, pa <= pb + 2 * se, samples)


def staircase(p: tuple, q: tuple, step: float = 0.05) -> list[tuple]:
    """Axis-parallel path from p to q: alternating mu and lambda moves of size <= ``step``."""
    (l0, m0), (l1, m1) = p, q
    n = max(1, math.ceil(max(abs(l1 - l0), abs(m1 - m0)) / step - 1e-9))
    path = [(l0, m0)]
    for i in range(1, n + 1):
        lam, mu = l0 + (l1 - l0) * i / n, m0 + (m1 - m0) * i / n
        path.append((path[-1][0], mu))
        path.append((lam, mu))
    return path


def staircase_check(topology: Topology, path: list, L: int, H: int, samples: int, seed: int,
                    family: str = "poisson", budget: int = DEFAULT_BUDGET) -> dict:
    """Per replicate: mu steps never lower the indicator, lambda steps never raise it."""
    g = LocalGraph.ball(topology, L)
    reps = np.arange(samples)
    inds = [activity_indicators(g, lam, ParticleLaw(family, mu), H, reps, seed, budget=budget)[0].astype(int)
            for lam, mu in path]
    violations = 0
    for (a, ia), (b, ib) in zip(zip(path, inds), zip(path[1:], inds[1:])):
        if b[1] > a[1]:
            violations += int((ib < ia).sum())
        if b[0] > a[0]:
            violations += int((ib > ia).sum())
    return {"steps": len(path) - 1, "samples": samples, "violations": violations,
            "means": [float(i.mean()) for i in inds]}
