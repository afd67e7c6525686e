"""Particle- and sleeping-essential pairs, and checks of the lemmas about them.

An event here is increasing and decided by stabilising a bounded domain. The
detectors only compare the event on two edited instances; they never look at
the masked coordinate (the gap S^{y,m} or the count eta(y)) themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .engine import CAP_INSTRUCTIONS, DEFAULT_BUDGET, HALT_BUDGET, HALT_TARGET, Domain, StabilizationResult, stabilize
from .state import InstructionSource, ParticleConfig
from .topology import VertexId


class Inconclusive(RuntimeError):
    """A stabilisation ran out of budget, so membership is undecided."""


class Event:
    domain: Domain
    budget: int = DEFAULT_BUDGET

    @property
    def relevant(self) -> bool:
        return not (self.domain.caps and self.domain.cap_style == CAP_INSTRUCTIONS)

    def occurs(self, eta: ParticleConfig, tau: InstructionSource) -> bool:
        raise NotImplementedError

    def holds(self, M: Mapping) -> bool:
        """Membership given the jump odometer of a full stabilisation."""
        raise NotImplementedError

    def run(self, eta: ParticleConfig, tau: InstructionSource) -> StabilizationResult:
        """Full stabilisation of the domain (no early stop)."""
        res = stabilize(self.domain, eta, tau, self.budget, relevant=self.relevant)
        if res.halt_reason == HALT_BUDGET:
            raise Inconclusive("stabilisation exhausted its budget")
        return res


@dataclass
class JumpThresholdEvent(Event):
    """{M(x) >= H(x) for every x with a threshold}."""

    domain: Domain
    H: Mapping
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        K = set(self.domain.sites)
        for x, h in self.H.items():
            if x not in K:
                raise ValueError(f"threshold vertex {x} outside K")
            if h < 0:
                raise ValueError("thresholds must be >= 0")
        self.H = dict(self.H)

    def occurs(self, eta, tau):
        res = stabilize(self.domain, eta, tau, self.budget, relevant=self.relevant, stop_at=self.H)
        if res.halt_reason == HALT_BUDGET:
            raise Inconclusive("stabilisation exhausted its budget")
        return res.halt_reason == HALT_TARGET

    def holds(self, M):
        return all(M[x] >= h for x, h in self.H.items())

    def describe(self) -> dict:
        return {"kind": "jump-threshold", "H": {str(k): v for k, v in sorted(self.H.items())}}


@dataclass
class PredicateEvent(Event):
    """Membership decided by ``fn(M)`` after stabilising a jump-capped domain.

    ``M`` is the jump odometer as a dict over K. The caller is responsible
    for ``fn`` being nondecreasing in ``M``.
    """

    domain: Domain
    fn: Callable[[Mapping], bool]
    name: str = "predicate"
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.domain.caps and self.domain.cap_style == CAP_INSTRUCTIONS:
            raise ValueError("predicate events need jump caps")

    def occurs(self, eta, tau):
        return self.holds(self.run(eta, tau).M)

    def holds(self, M):
        return bool(self.fn(M))

    def describe(self) -> dict:
        return {"kind": "predicate", "name": self.name}


def always_true(domain: Domain) -> PredicateEvent:
    return PredicateEvent(domain, lambda M: True, "always-true")


def always_false(domain: Domain) -> PredicateEvent:
    return PredicateEvent(domain, lambda M: False, "always-false")


def is_s_essential(A: Event, eta: ParticleConfig, tau: InstructionSource, y: VertexId, m: int) -> bool:
    """(eta, Gamma_-^{y,m} tau) in A and (eta, Gamma_1^{y,m} tau) not in A."""
    return A.occurs(eta, tau.gamma_minus(y, m)) and not A.occurs(eta, tau.gamma_one(y, m))


def is_p_essential(A: Event, eta: ParticleConfig, tau: InstructionSource, y: VertexId, k: int) -> bool:
    """(eta^{(y,k)}, tau) not in A and (eta^{(y,k+1)}, tau) in A."""
    return not A.occurs(eta.with_count(y, k), tau) and A.occurs(eta.with_count(y, k + 1), tau)


def gap_window(A: Event, y: VertexId, M_y: int, margin: int = 2) -> range:
    """Gap indices at y worth scanning.

    With a jump cap Z(y) no gap at or past Z(y) is ever read. Without one,
    gaps past M(y) are never read by the original run; ``margin`` extra
    indices past M(y) are scanned anyway so that this is checked, not assumed.
    """
    z = A.domain.cap(y) if A.domain.cap_style != CAP_INSTRUCTIONS else None
    hi = M_y + 1 + margin
    if z is not None:
        hi = min(hi, z)
    return range(hi)


# -- lemma checks ------------------------------------------------------------------

PASS = "pass"
FAIL = "fail"
EXCLUDED = "excluded"
VACUOUS = "vacuous"
INCONCLUSIVE = "inconclusive"


@dataclass
class LemmaReport:
    status: str
    detail: dict = field(default_factory=dict)


def _check_domain(dom: Domain):
    if dom.caps and dom.cap_style == CAP_INSTRUCTIONS:
        raise ValueError("lemma checks need an uncapped or jump-capped domain")


def check_removal_invariance(dom: Domain, eta: ParticleConfig, tau: InstructionSource, y: VertexId, n: int,
                             budget: int = DEFAULT_BUDGET) -> LemmaReport:
    """M is unchanged by emptying gap n at y whenever n != M(y)."""
    _check_domain(dom)
    try:
        r0 = _run(dom, eta, tau, budget)
        r1 = _run(dom, eta, tau.gamma_minus(y, n), budget)
    except Inconclusive:
        return LemmaReport(INCONCLUSIVE)
    changed = r0.M != r1.M
    if n == r0.M[y]:
        return LemmaReport(EXCLUDED, {"changed": changed})
    return LemmaReport(FAIL if changed else PASS, {"M": r0.M, "M_surgered": r1.M} if changed else {})


def check_strict_increase(A: JumpThresholdEvent, eta: ParticleConfig, tau: InstructionSource,
                          y: VertexId) -> LemmaReport:
    """If (y, M(y)) is s-essential with S^{y,M(y)} > 0, adding a particle at y raises M(y)."""
    _check_domain(A.domain)
    try:
        M_y = A.run(eta, tau).M[y]
        if not (tau.gap_positive(y, M_y) and is_s_essential(A, eta, tau, y, M_y)):
            return LemmaReport(VACUOUS)
        M_new = A.run(eta.add_one(y), tau).M[y]
    except Inconclusive:
        return LemmaReport(INCONCLUSIVE)
    return LemmaReport(PASS if M_new > M_y else FAIL, {"M": M_y, "M_added": M_new})


def _run(dom, eta, tau, budget):
    relevant = not (dom.caps and dom.cap_style == CAP_INSTRUCTIONS)
    res = stabilize(dom, eta, tau, budget, relevant=relevant)
    if res.halt_reason == HALT_BUDGET:
        raise Inconclusive("stabilisation exhausted its budget")
    return res


@dataclass
class SweepCounts:
    """Tallies of one or more lemma sweeps."""

    instances: int = 0
    inconclusive: int = 0
    emptiness_checked: int = 0
    emptiness_violations: int = 0
    inclusion_checked: int = 0
    inclusion_violations: int = 0
    removal_checked: int = 0
    removal_violations: int = 0
    removal_excluded_changed: int = 0
    strict_qualifying: int = 0
    strict_violations: int = 0
    uniqueness_violations: int = 0

    def add(self, other: "SweepCounts"):
        for k in self.__dataclass_fields__:
            setattr(self, k, getattr(self, k) + getattr(other, k))

    @property
    def violations(self) -> int:
        return (self.emptiness_violations + self.inclusion_violations + self.removal_violations
                + self.strict_violations + self.uniqueness_violations)


def lemma_sweep(A: JumpThresholdEvent, eta: ParticleConfig, tau: InstructionSource,
                rows: list | None = None) -> SweepCounts:
    """Check every lemma at every (y, n) in the scan window of one instance.

    ``eta`` must be all-active (plain counts). When ``rows`` is a list, one
    dict per scanned pair is appended to it.
    """
    _check_domain(A.domain)
    c = SweepCounts(instances=1)
    try:
        base = A.run(eta, tau)
        for y in A.domain.sites:
            M_y = base.M[y]
            j = eta.count(y)
            n_pos_ess = 0
            for n in gap_window(A, y, M_y):
                s_ess = is_s_essential(A, eta, tau, y, n)
                pos = tau.gap_positive(y, n)
                p_ess = is_p_essential(A, eta, tau, y, n)
                if rows is not None:
                    rows.append({"vertex": y, "index": n, "s_essential": s_ess, "p_essential": p_ess,
                                 "gap_positive": pos, "M": M_y})
                if s_ess and pos:
                    n_pos_ess += 1
                # emptiness: s-essential with a positive gap only at n = M(y)
                if n != M_y and pos:
                    c.emptiness_checked += 1
                    c.emptiness_violations += s_ess
                # removal invariance away from n = M(y)
                surg = A.run(eta, tau.gamma_minus(y, n)).M
                if n == M_y:
                    c.removal_excluded_changed += surg != base.M
                else:
                    c.removal_checked += 1
                    c.removal_violations += surg != base.M
                if n == M_y and s_ess and pos:
                    c.inclusion_checked += 1
                    c.inclusion_violations += not is_p_essential(A, eta, tau, y, j)
                    c.strict_qualifying += 1
                    c.strict_violations += not (A.run(eta.add_one(y), tau).M[y] > M_y)
            c.uniqueness_violations += n_pos_ess > 1
    except Inconclusive:
        return SweepCounts(instances=1, inconclusive=1)
    return c
