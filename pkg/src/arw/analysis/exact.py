"""Exact probabilities of bounded events, by enumerating the relevant coordinates.

Every site of K carries a jump cap N(x), so a run reads at most N(x) gap
bits ``1{S^{x,m} > 0}`` and N(x) jump targets at x. The enumerator builds,
for each initial particle class vector, the decision tree of one relevant-mode
stabilisation: internal nodes are the coordinates the run asks for, leaves
hold the jump odometer.

Particle counts are lumped into classes 0..N(x)+1, where class N(x)+1 stands
for "more than N(x)". A site holding more than N(x) particles never sleeps
before its cap, so all such counts give the same odometer; the lumping is
exact and needs no truncation of the Poisson law.

Results are kept symbolic: a sum of monomials ``q**n0 * p**n1 * prod(nu)``
with ``q = 1/(1+lam)``, ``p = lam/(1+lam)``, so any (lam, mu) is evaluated
without re-enumerating.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

from ..engine import CAP_JUMPS, stabilize
from ..essential import Event
from ..randomness import ParticleLaw
from ..state import InstructionSource, ParticleConfig

MAX_STATES = 10**8
FREE = None  # particle class that carries no weight (the edited site of a p-essential pair)


class EnumerationTooLarge(ValueError):
    pass


class _Need(Exception):
    def __init__(self, coord):
        self.coord = coord


class _TreeSource(InstructionSource):
    """Serves assigned coordinates and raises ``_Need`` on the first unassigned one."""

    def __init__(self, assign):
        self.assign = assign

    def gap_positive(self, x, m):
        c = ("b", x, m)
        v = self.assign.get(c)
        if v is None:
            raise _Need(c)
        return v

    def gap(self, x, m):
        return int(self.gap_positive(x, m))

    def jump(self, x, m):
        c = ("j", x, m)
        v = self.assign.get(c)
        if v is None:
            raise _Need(c)
        return v


class _Node:
    __slots__ = ("coord", "children")

    def __init__(self, coord, children):
        self.coord = coord
        self.children = children


def size_estimate(A: Event) -> int:
    """Upper bound on the enumeration size: prod (2 d)^N * prod (N + 2)."""
    dom = A.domain
    n = 1
    for x in dom.sites:
        N = dom.cap(x)
        n *= (2 * dom.topology.degree(x)) ** N * (N + 2)
    return n


class Enumeration:
    """Decision trees of a jump-capped event for every particle class vector."""

    def __init__(self, A: Event, max_states: int = MAX_STATES):
        dom = A.domain
        if dom.cap_style != CAP_JUMPS or any(dom.cap(x) is None for x in dom.sites):
            raise ValueError("exact enumeration needs a jump cap at every site of K")
        est = size_estimate(A)
        if est > max_states:
            raise EnumerationTooLarge(f"enumeration size estimate {est} exceeds {max_states}")
        self.event = A
        self.sites = dom.sites
        self.caps = tuple(dom.cap(x) for x in dom.sites)
        self.degree = {x: dom.topology.degree(x) for x in dom.sites}
        self.index = {x: i for i, x in enumerate(self.sites)}
        self._trees = {}

    # -- trees ---------------------------------------------------------------------

    def classes(self):
        return itertools.product(*(range(N + 2) for N in self.caps))

    def tree(self, e: tuple):
        t = self._trees.get(e)
        if t is None:
            eta = ParticleConfig({x: k for x, k in zip(self.sites, e) if k})
            t = self._trees[e] = self._build(eta, {})
        return t

    def _build(self, eta, assign):
        try:
            res = stabilize(self.event.domain, eta, _TreeSource(assign), self.event.budget, relevant=True)
        except _Need as need:
            c = need.coord
            values = (False, True) if c[0] == "b" else range(self.degree[c[1]])
            children = {}
            for v in values:
                assign[c] = v
                children[v] = self._build(eta, assign)
            del assign[c]
            return _Node(c, children)
        if res.halt_reason == "budget-exhausted":
            raise RuntimeError("enumeration run exhausted its budget")
        return tuple(res.M[x] for x in self.sites)

    def holds(self, leaf) -> bool:
        return self.event.holds(dict(zip(self.sites, leaf)))

    # -- joint traversal -----------------------------------------------------------

    def joint(self, walkers, accept, out, ekey):
        """Sum the weights of all coordinate assignments accepted by ``accept``.

        ``walkers`` is a list of ``(tree, overrides)``; all walkers share one
        assignment of the coordinates they do not override. ``accept`` gets
        the list of leaves. Monomials ``(n0, n1, ekey)`` are added into ``out``.
        """
        assign = {}
        ovs = [ov for _, ov in walkers]
        degree = self.degree

        def advance(node, ov):
            while type(node) is _Node:
                c = node.coord
                v = ov.get(c)
                if v is None:
                    v = assign.get(c)
                    if v is None:
                        return node
                node = node.children[v]
            return node

        def rec(nodes, n0, n1, w):
            nodes = [advance(n, ov) for n, ov in zip(nodes, ovs)]
            for n in nodes:
                if type(n) is _Node:
                    c = n.coord
                    if c[0] == "b":
                        assign[c] = False
                        rec(nodes, n0 + 1, n1, w)
                        assign[c] = True
                        rec(nodes, n0, n1 + 1, w)
                    else:
                        d = degree[c[1]]
                        for v in range(d):
                            assign[c] = v
                            rec(nodes, n0, n1, w / d)
                    del assign[c]
                    return
            if accept(nodes):
                out[(n0, n1, ekey)] += w

        rec([t for t, _ in walkers], 0, 0, 1.0)

    # -- symbolic quantities -------------------------------------------------------

    def prob(self) -> "Polynomial":
        out = defaultdict(float)
        for e in self.classes():
            self.joint([(self.tree(e), {})], lambda ls: self.holds(ls[0]), out, e)
        return Polynomial(out, self)

    def s_essential(self, y, m) -> "Polynomial":
        """P((y, m) is sleeping-essential); the gap bit at (y, m) is never weighted."""
        out = defaultdict(float)
        c = ("b", y, m)
        for e in self.classes():
            t = self.tree(e)
            self.joint([(t, {c: False}), (t, {c: True})],
                       lambda ls: self.holds(ls[0]) and not self.holds(ls[1]), out, e)
        return Polynomial(out, self)

    def s_essential_total(self) -> "Polynomial":
        """Sum over (y, m) of P((y, m) is sleeping-essential); gaps m >= N(y) are never read."""
        out = defaultdict(float)
        for y, N in zip(self.sites, self.caps):
            for m in range(N):
                for k, v in self.s_essential(y, m).terms.items():
                    out[k] += v
        return Polynomial(out, self)

    def s_essential_at_odometer(self) -> "Polynomial":
        """Sum over y of P((y, M(y)) sleeping-essential and S^{y, M(y)} > 0)."""
        out = defaultdict(float)
        for y, N in zip(self.sites, self.caps):
            i = self.index[y]
            for m in range(N):
                c = ("b", y, m)
                for e in self.classes():
                    t = self.tree(e)

                    def accept(ls, m=m, i=i):
                        return ls[0][i] == m and self.holds(ls[1]) and not self.holds(ls[2])

                    # the first walker sees the true bit; it must be True (a positive gap)
                    self._joint_with_bit(t, c, accept, out, e)
        return Polynomial(out, self)

    def _joint_with_bit(self, t, c, accept, out, e):
        sub = defaultdict(float)
        self.joint([(t, {c: True}), (t, {c: False}), (t, {c: True})], accept, sub, e)
        for (n0, n1, ek), w in sub.items():
            out[(n0, n1 + 1, ek)] += w

    def p_essential(self, y, k) -> "Polynomial":
        """P((y, k) is particle-essential); the class of y is never weighted."""
        i = self.index[y]
        N = self.caps[i]
        out = defaultdict(float)
        lo, hi = min(k, N + 1), min(k + 1, N + 1)
        if lo == hi:
            return Polynomial(out, self)
        for e in self.classes():
            if e[i] != 0:
                continue
            e0 = e[:i] + (lo,) + e[i + 1:]
            e1 = e[:i] + (hi,) + e[i + 1:]
            ekey = e[:i] + (FREE,) + e[i + 1:]
            self.joint([(self.tree(e0), {}), (self.tree(e1), {})],
                       lambda ls: not self.holds(ls[0]) and self.holds(ls[1]), out, ekey)
        return Polynomial(out, self)


class Polynomial:
    """A symbolic probability: monomials ``(n0, n1, classes) -> coefficient``."""

    def __init__(self, terms, enum: Enumeration):
        self.terms = dict(terms)
        self.caps = enum.caps

    def __call__(self, lam: float, law: ParticleLaw) -> float:
        q = 1.0 / (1.0 + lam)
        p = lam / (1.0 + lam)
        weights = []
        for N in self.caps:
            w = [law.pmf(k) for k in range(N + 1)]
            w.append(law.tail(N))
            weights.append(w)
        vals = []
        for (n0, n1, e), c in self.terms.items():
            v = c * q**n0 * p**n1
            for w, k in zip(weights, e):
                if k is not FREE:
                    v *= w[k]
            vals.append(v)
        return math.fsum(vals)

    def degree(self) -> int:
        return max((n0 + n1 for n0, n1, _ in self.terms), default=0)


# -- Russo formulas and the differential inequality ------------------------------


@dataclass
class RussoReport:
    lam: float
    mu: float
    family: str
    h: float
    prob: float
    d_lam: float
    d_mu: float
    s_sum: float
    s_single: float
    p_sum: float
    lam_residual: float
    mu_residual: float
    alt_residual: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class ExactEvent:
    """An enumerated event with its derived symbolic quantities."""

    def __init__(self, A: Event, max_states: int = MAX_STATES):
        self.event = A
        self.enum = Enumeration(A, max_states)
        self.P = self.enum.prob()
        self._s = None
        self._s1 = None
        self._p = {}

    @property
    def s_total(self) -> Polynomial:
        if self._s is None:
            self._s = self.enum.s_essential_total()
        return self._s

    @property
    def s_single(self) -> Polynomial:
        if self._s1 is None:
            self._s1 = self.enum.s_essential_at_odometer()
        return self._s1

    def p_terms(self):
        """{(y, k): P((y, k) p-essential)} for k <= N(y); larger k are never essential."""
        if not self._p:
            for y, N in zip(self.enum.sites, self.enum.caps):
                for k in range(N + 1):
                    self._p[(y, k)] = self.enum.p_essential(y, k)
        return self._p

    def prob(self, lam: float, law: ParticleLaw) -> float:
        return self.P(lam, law)

    def d_lam(self, lam, law, h):
        return (self.P(lam + h, law) - self.P(lam - h, law)) / (2 * h)

    def d_mu(self, lam, law, h):
        return (self.P(lam, law.at(law.mu + h)) - self.P(lam, law.at(law.mu - h))) / (2 * h)

    def p_sum(self, lam, law):
        return math.fsum(poly(lam, law) * law.tail_derivative(k) for (y, k), poly in self.p_terms().items())

    def russo(self, lam: float, law: ParticleLaw, h: float = 1e-4) -> RussoReport:
        if not 1e-6 <= h <= 1e-3:
            raise ValueError("finite-difference step must lie in [1e-6, 1e-3]")
        if lam - h <= 0:
            raise ValueError("lambda must exceed the step")
        d_lam = self.d_lam(lam, law, h)
        d_mu = self.d_mu(lam, law, h)
        s = self.s_total(lam, law)
        s1 = self.s_single(lam, law)
        ps = self.p_sum(lam, law)
        return RussoReport(
            lam, law.mu, law.family, h, self.prob(lam, law), d_lam, d_mu, s, s1, ps,
            abs(d_lam + s / (1 + lam) ** 2), abs(d_mu - ps), abs(s - (1 + lam) / lam * s1),
        )


def diff_inequality(ev: ExactEvent, lam: float, law: ParticleLaw, h: float = 1e-4) -> dict:
    """-dP/dlam <= dP/dmu / (lam (1 + lam)) up to a slack of 10 h**2."""
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    lhs = -ev.d_lam(lam, law, h)
    rhs = ev.d_mu(lam, law, h) / (lam * (1 + lam))
    slack = 10 * h * h
    return {"lam": lam, "mu": law.mu, "lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "slack": slack,
            "pass": lhs <= rhs + slack}


def semiline_boundary(p: tuple, lam_q: float) -> tuple:
    """The point above lam_q on the boundary of the region from p."""
    lam, mu = p
    return (lam_q, mu + (lam_q - lam) / (lam * (1 + lam)))


def monotone_path_exact(ev: ExactEvent, p: tuple, q: tuple, family: str) -> dict:
    """P_p <= P_q with no slack, for q in the region above the semi-line from p."""
    from .activity import in_semiline

    if not in_semiline(p, q):
        raise ValueError(f"{q} is not in the region above the semi-line from {p}")
    a = ev.prob(p[0], ParticleLaw(family, p[1]))
    b = ev.prob(q[0], ParticleLaw(family, q[1]))
    return {"p": list(p), "q": list(q), "P_p": a, "P_q": b, "pass": a <= b}
