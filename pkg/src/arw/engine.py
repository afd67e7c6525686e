"""Legal toppling of finite domains and the Abelian / monotonicity harnesses."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .state import InstructionSource, ParticleConfig, add_particle, compare
from .topology import Topology, VertexId

DEFAULT_BUDGET = 10**6

CAP_INSTRUCTIONS = "instructions"
CAP_JUMPS = "jumps"

HALT_STABLE = "stable"
HALT_CAPPED = "capped"
HALT_BUDGET = "budget-exhausted"
HALT_TARGET = "target-reached"


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class Domain:
    """A finite set ``K`` with optional per-site caps.

    ``caps`` maps a site of K to a cap (``None`` or absence means no cap).
    With ``cap_style="instructions"`` a site stops after ``Z(x)`` slots,
    with ``"jumps"`` after ``Z(x)`` jump instructions.
    """

    topology: Topology
    sites: tuple
    caps: Mapping = field(default_factory=dict)
    cap_style: str = CAP_INSTRUCTIONS

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(dict.fromkeys(self.sites)))
        if self.cap_style not in (CAP_INSTRUCTIONS, CAP_JUMPS):
            raise ValueError(f"unknown cap style {self.cap_style!r}")
        K = set(self.sites)
        for v in self.sites:
            self.topology.validate(v)
        caps = {}
        for x, z in dict(self.caps).items():
            if x not in K:
                raise ValueError(f"cap given for vertex {x} outside K")
            if z is not None:
                if z < 0:
                    raise ValueError("caps must be >= 0")
                caps[x] = int(z)
        object.__setattr__(self, "caps", caps)

    @classmethod
    def ball(cls, topology: Topology, radius: int, center: VertexId | None = None, **kw) -> "Domain":
        o = topology.origin if center is None else center
        return cls(topology, tuple(topology.ball(o, radius)), **kw)

    def cap(self, x: VertexId):
        return self.caps.get(x)

    def with_caps(self, caps: Mapping, cap_style: str | None = None) -> "Domain":
        return Domain(self.topology, self.sites, caps, cap_style or self.cap_style)

    def uncapped(self) -> "Domain":
        return Domain(self.topology, self.sites, {}, self.cap_style)

    def boundary(self) -> list:
        return self.topology.boundary(self.sites)


@dataclass
class StabilizationResult:
    """Odometers and final configuration of one run.

    ``m`` is ``None`` in relevant mode, where only the positivity of each
    sleep gap is read and instruction counts are not defined.
    """

    m: dict | None
    M: dict
    final: ParticleConfig
    halt_reason: str
    capped: tuple = ()
    steps: int = 0
    sleeps_used: int | None = None

    def key(self):
        """Hashable summary used for exact equality comparisons."""
        m = None if self.m is None else tuple(sorted(self.m.items()))
        return (m, tuple(sorted(self.M.items())), self.final)

    def as_dict(self) -> dict:
        return {
            "m": None if self.m is None else {str(k): v for k, v in sorted(self.m.items())},
            "M": {str(k): v for k, v in sorted(self.M.items())},
            "final": {str(k): v for k, v in self.final.items()},
            "halt_reason": self.halt_reason,
            "capped": list(self.capped),
            "steps": self.steps,
        }


def stabilize(dom: Domain, eta: ParticleConfig, tau: InstructionSource, budget: int = DEFAULT_BUDGET,
              relevant: bool = False, policy: random.Random | None = None,
              stop_at: Mapping[VertexId, int] | None = None) -> StabilizationResult:
    """Stabilise ``eta`` in ``dom`` using the instructions of ``tau``.

    The default policy is a FIFO queue that topples a site until it is stable
    or capped. Passing a ``random.Random`` as ``policy`` instead topples one
    instruction at a uniformly chosen unstable, uncapped site each step.

    ``relevant=True`` reads each jump gap only through ``gap_positive``.
    ``stop_at`` halts early once ``M(x) >= stop_at[x]`` for every listed x.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if relevant and dom.caps and dom.cap_style == CAP_INSTRUCTIONS:
        raise ValueError("instruction caps are not defined in relevant mode; use jump caps")
    K = dom.sites
    Kset = set(K)
    nbrs = {x: dom.topology.neighbors(x) for x in K}
    caps = dom.caps
    jump_caps = dom.cap_style == CAP_JUMPS

    state = eta.as_dict()
    m = dict.fromkeys(K, 0)
    M = dict.fromkeys(K, 0)
    pos = dict.fromkeys(K, 0)  # sleeps read in the current gap (full) / consumed flag (relevant)

    pending = {}
    if stop_at:
        pending = {x: h for x, h in stop_at.items() if h > 0}
        for x in pending:
            if x not in Kset:
                raise ValueError(f"stop_at vertex {x} outside K")
    steps = 0
    sleeps = 0

    def capped(x):
        z = caps.get(x)
        if z is None:
            return False
        return (M[x] if jump_caps else m[x]) >= z

    def finish(reason):
        cap_sites = tuple(x for x in K if state.get(x, 0) >= 1 and capped(x))
        if reason == HALT_STABLE and cap_sites:
            reason = HALT_CAPPED
        return StabilizationResult(
            None if relevant else m, M, ParticleConfig(state), reason, cap_sites, steps,
            None if relevant else sleeps,
        )

    if stop_at is not None and not pending:
        return finish(HALT_TARGET)

    def topple(x):
        """Apply one instruction at x. Returns the destination of a jump or None."""
        nonlocal steps, sleeps
        j = M[x]
        n = state[x]
        if relevant:
            if n == 1 and not pos[x]:
                pos[x] = 1
                if tau.gap_positive(x, j):
                    state[x] = -1
                    steps += 1
                    return None
        else:
            if tau.sleep_at(x, j, pos[x]):
                pos[x] += 1
                m[x] += 1
                sleeps += 1
                steps += 1
                if n == 1:
                    state[x] = -1
                return None
            m[x] += 1
        y = nbrs[x][tau.jump(x, j)]
        state[x] = n - 1 if n > 1 else 0
        if n == 1:
            del state[x]
        M[x] = j + 1
        pos[x] = 0
        steps += 1
        state[y] = add_particle(state.get(y, 0))
        return y

    def reached(x):
        h = pending.get(x)
        if h is not None and M[x] >= h:
            del pending[x]
        return not pending

    if policy is None:
        queue = deque(x for x in K if state.get(x, 0) >= 1)
        inq = set(queue)
        while queue:
            x = queue.popleft()
            inq.discard(x)
            while state.get(x, 0) >= 1 and not capped(x):
                if steps >= budget:
                    return finish(HALT_BUDGET)
                y = topple(x)
                if y is None:
                    continue
                if y in Kset and y not in inq and y != x:
                    queue.append(y)
                    inq.add(y)
                if pending and reached(x):
                    return finish(HALT_TARGET)
        return finish(HALT_STABLE)

    # random policy: a list of topplable sites with O(1) removal
    live = [x for x in K if state.get(x, 0) >= 1 and not capped(x)]
    where = {x: i for i, x in enumerate(live)}

    def drop(x):
        i = where.pop(x)
        last = live.pop()
        if last != x:
            live[i] = last
            where[last] = i

    while live:
        if steps >= budget:
            return finish(HALT_BUDGET)
        x = live[policy.randrange(len(live))]
        y = topple(x)
        if state.get(x, 0) < 1 or capped(x):
            drop(x)
        if y is None:
            continue
        if y in Kset and y not in where and state[y] >= 1 and not capped(y):
            where[y] = len(live)
            live.append(y)
        if pending and reached(x):
            return finish(HALT_TARGET)
    return finish(HALT_STABLE)


# -- harnesses ---------------------------------------------------------------------

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class CheckReport:
    status: str
    witness: object = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS


def check_abelian(dom: Domain, eta: ParticleConfig, tau: InstructionSource, trials: int, seed: int,
                  budget: int = DEFAULT_BUDGET, relevant: bool = False) -> CheckReport:
    """Compare the FIFO run with ``trials`` uniformly random toppling orders."""
    ref = stabilize(dom, eta, tau, budget, relevant=relevant)
    if ref.halt_reason == HALT_BUDGET:
        return CheckReport(INCONCLUSIVE, detail="reference run exhausted its budget")
    rng = random.Random(seed)
    key = ref.key()
    for t in range(trials):
        res = stabilize(dom, eta, tau, budget, relevant=relevant, policy=random.Random(rng.getrandbits(64)))
        if res.halt_reason == HALT_BUDGET:
            return CheckReport(INCONCLUSIVE, detail=f"trial {t} exhausted its budget")
        if res.key() != key:
            return CheckReport(FAIL, witness={"trial": t, "reference": ref.as_dict(), "other": res.as_dict()})
    return CheckReport(PASS)


def check_monotone(dom1: Domain, eta1: ParticleConfig, tau1: InstructionSource,
                   dom2: Domain, eta2: ParticleConfig, tau2: InstructionSource,
                   budget: int = DEFAULT_BUDGET) -> CheckReport:
    """Check M1 <= M2 on K1 (and m1 <= m2 when the arrays agree on the used window).

    Inputs must satisfy K1 within K2, Z1 <= Z2 on K1, eta1 <= eta2 and
    tau1 <= tau2; the array order is checked on every gap either run reads.
    Incomparable inputs raise ``ValueError``.
    """
    K1, K2 = set(dom1.sites), set(dom2.sites)
    if not K1 <= K2:
        raise ValueError("K1 must be a subset of K2")
    if dom1.cap_style != dom2.cap_style and (dom1.caps or dom2.caps):
        raise ValueError("domains use different cap styles")
    for x in K1:
        z1, z2 = dom1.cap(x), dom2.cap(x)
        if z2 is not None and (z1 is None or z1 > z2):
            raise ValueError(f"cap at {x} violates Z1 <= Z2")
    window = K2 | set(eta1.support()) | set(eta2.support())
    if compare(eta1, eta2, window) not in ("<=", "equal"):
        raise ValueError("configurations are not ordered")
    r1 = stabilize(dom1, eta1, tau1, budget)
    r2 = stabilize(dom2, eta2, tau2, budget)
    if HALT_BUDGET in (r1.halt_reason, r2.halt_reason):
        return CheckReport(INCONCLUSIVE, detail="budget exhausted")
    horizon = 1 + max([r1.M.get(x, 0) for x in K2] + [r2.M.get(x, 0) for x in K2])
    order = compare(tau1, tau2, (sorted(K2), horizon))
    if order not in ("<=", "equal"):
        raise ValueError("instruction arrays are not ordered on the used window")
    bad = [x for x in K1 if r1.M[x] > r2.M[x]]
    if order == "equal":
        bad += [x for x in K1 if r1.m[x] > r2.m[x]]
    if bad:
        return CheckReport(FAIL, witness={"sites": sorted(set(bad)), "first": r1.as_dict(), "second": r2.as_dict()})
    return CheckReport(PASS)
