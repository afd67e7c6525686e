"""Particle configurations, instruction arrays and the partial orders on them.

Site states are small integers:

    0        empty
    n >= 1   n active particles
    -1       one sleeping particle (rho)
    -k       k dormant particles, k >= 2; only produced by activity flags at
             initialisation and woken all at once by the first arrival

The total order is 0 < rho < 1 < 2 < ...; a dormant pile of k sits between
k - 1 and k active particles.

An instruction array at a vertex is described by its jump gaps: for every
jump index m, ``gap(x, m)`` sleep instructions followed by the jump
``jump(x, m)`` (a neighbour index). Slot-level views (``slot``, ``counters``)
are derived from that description.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .randomness import ParticleLaw, RandomSource, activity_flag, decode_particles, decode_sleep_count
from .randomness import gap_uniform, jump_target, uniform_site
from .topology import Topology, VertexId

EMPTY = 0
SLEEPING = -1
SLEEP = -1  # instruction slot code for a sleep; jumps are neighbour indices >= 0


def is_stable(code: int) -> bool:
    return code <= 0


def rank(code: int) -> float:
    """Position of a site state in the total order (rho -> 0.5)."""
    return code if code >= 0 else -code - 0.5


def add_particle(code: int) -> int:
    """State after one active particle arrives (1 + rho = 2)."""
    return -code + 1 if code < 0 else code + 1


def format_state(code: int) -> str:
    if code >= 0:
        return str(code)
    return "s" if code == -1 else f"s{-code}"


def parse_state(text: str) -> int:
    text = text.strip()
    if text.startswith("s"):
        k = int(text[1:]) if len(text) > 1 else 1
        if k < 1:
            raise ValueError(f"bad dormant state {text!r}")
        return -k
    n = int(text)
    if n < 0:
        raise ValueError(f"bad state {text!r}")
    return n


class ParticleConfig:
    """Sparse map from vertices to site states; absent vertices are empty."""

    __slots__ = ("_sites",)

    def __init__(self, sites: Mapping[VertexId, int] | None = None):
        self._sites = {x: int(c) for x, c in (sites or {}).items() if c != 0}

    @classmethod
    def from_counts(cls, counts: Mapping[VertexId, int], active: Mapping[VertexId, bool] | None = None):
        """Counts per vertex; ``active[x] = False`` makes the pile dormant."""
        sites = {}
        for x, k in counts.items():
            if k < 0:
                raise ValueError("particle counts must be >= 0")
            if k:
                sites[x] = k if active is None or active.get(x, True) else -k
        return cls(sites)

    def __getitem__(self, x: VertexId) -> int:
        return self._sites.get(x, EMPTY)

    def __eq__(self, other):
        return isinstance(other, ParticleConfig) and self._sites == other._sites

    def __hash__(self):
        return hash(frozenset(self._sites.items()))

    def __repr__(self):
        body = ", ".join(f"{x}: {format_state(c)}" for x, c in sorted(self._sites.items()))
        return f"ParticleConfig({{{body}}})"

    def items(self):
        return sorted(self._sites.items())

    def as_dict(self) -> dict:
        return dict(self._sites)

    def support(self) -> list:
        return sorted(self._sites)

    def count(self, x: VertexId) -> int:
        return abs(self._sites.get(x, 0))

    def total(self, sites: Iterable[VertexId] | None = None) -> int:
        if sites is None:
            return sum(abs(c) for c in self._sites.values())
        return sum(self.count(x) for x in sites)

    def with_count(self, x: VertexId, k: int) -> "ParticleConfig":
        """eta^{(x,k)}: exactly ``k`` active particles at ``x``."""
        if k < 0:
            raise ValueError("particle count must be >= 0")
        sites = dict(self._sites)
        if k:
            sites[x] = k
        else:
            sites.pop(x, None)
        return ParticleConfig(sites)

    def add_one(self, x: VertexId) -> "ParticleConfig":
        """eta^x: one more active particle at ``x``."""
        sites = dict(self._sites)
        sites[x] = add_particle(sites.get(x, EMPTY))
        return ParticleConfig(sites)

    def restrict(self, sites: Iterable[VertexId]) -> "ParticleConfig":
        keep = set(sites)
        return ParticleConfig({x: c for x, c in self._sites.items() if x in keep})

    def to_text(self) -> str:
        return "".join(f"{x} {format_state(c)}\n" for x, c in self.items())

    @classmethod
    def from_text(cls, text: str) -> "ParticleConfig":
        sites = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            x, st = line.split()
            sites[int(x)] = parse_state(st)
        return cls(sites)


def edit_config(eta: ParticleConfig, x: VertexId, op) -> ParticleConfig:
    """Apply ``("set", k)`` or ``"add"`` at ``x``."""
    if op == "add" or op == ("add",):
        return eta.add_one(x)
    kind, k = op
    if kind != "set":
        raise ValueError(f"unknown edit {op!r}")
    return eta.with_count(x, k)


def sample_config(sites: Iterable[VertexId], src: RandomSource, law: ParticleLaw,
                  xi: float | Mapping[VertexId, float] = 1.0) -> ParticleConfig:
    """Decode eta_mu (and the activity flags for activity function ``xi``)."""
    counts, active = {}, {}
    for x in sites:
        counts[x] = decode_particles(uniform_site(src, x), law)
        a = xi.get(x, 1.0) if isinstance(xi, Mapping) else xi
        active[x] = activity_flag(src, x, a)
    return ParticleConfig.from_counts(counts, active)


# -- instruction sources -------------------------------------------------------


class PrefixExhausted(LookupError):
    pass


class InstructionSource:
    """An instruction array, addressed by jump gaps.

    Subclasses implement :meth:`gap` and :meth:`jump`.
    """

    def gap(self, x: VertexId, m: int) -> int:
        raise NotImplementedError

    def jump(self, x: VertexId, m: int) -> int:
        raise NotImplementedError

    def gap_positive(self, x: VertexId, m: int) -> bool:
        return self.gap(x, m) > 0

    def sleep_at(self, x: VertexId, m: int, p: int) -> bool:
        """Whether slot ``p`` of jump gap ``m`` is a sleep (that is, ``p < S^{x,m}``)."""
        return p < self.gap(x, m)

    def counters(self, x: VertexId, m: int) -> tuple[int, int, int]:
        """(t^{x,m}, J^{x,m}, S^{x,m}); ``t^{x,-1} = -1``."""
        if m < 0:
            if m == -1:
                return (-1, None, None)
            raise ValueError("jump index must be >= -1")
        t = -1
        for i in range(m + 1):
            t += self.gap(x, i) + 1
        return t, self.jump(x, m), self.gap(x, m)

    def slot(self, x: VertexId, j: int) -> int:
        """tau^{x,j}: ``SLEEP`` or a neighbour index."""
        m = 0
        while True:
            s = self.gap(x, m)
            if j < s:
                return SLEEP
            if j == s:
                return self.jump(x, m)
            j -= s + 1
            m += 1

    def slots(self, x: VertexId, n: int) -> list[int]:
        out = []
        m = 0
        while len(out) < n:
            out.extend([SLEEP] * self.gap(x, m))
            out.append(self.jump(x, m))
            m += 1
        return out[:n]

    def gamma_minus(self, y: VertexId, m: int) -> "InstructionSource":
        return self._surgery(y, m, 0)

    def gamma_one(self, y: VertexId, m: int) -> "InstructionSource":
        return self._surgery(y, m, 1)

    def _surgery(self, y, m, gap):
        if m < 0:
            raise ValueError("jump index must be >= 0")
        return SurgeredSource(self, {(y, m): gap})


class SurgeredSource(InstructionSource):
    """A base array with some gaps rewritten; the base is never copied."""

    def __init__(self, base: InstructionSource, overrides: Mapping):
        if isinstance(base, SurgeredSource):
            overrides = {**base.overrides, **overrides}
            base = base.base
        self.base = base
        self.overrides = dict(overrides)

    def gap(self, x, m):
        g = self.overrides.get((x, m))
        return self.base.gap(x, m) if g is None else g

    def gap_positive(self, x, m):
        g = self.overrides.get((x, m))
        return self.base.gap_positive(x, m) if g is None else g > 0

    def sleep_at(self, x, m, p):
        g = self.overrides.get((x, m))
        return self.base.sleep_at(x, m, p) if g is None else p < g

    def jump(self, x, m):
        return self.base.jump(x, m)


class LazySource(InstructionSource):
    """tau_lam decoded from the keyed uniforms Y (gaps) and A (jumps)."""

    def __init__(self, topology: Topology, src: RandomSource, lam: float):
        if lam < 0:
            raise ValueError("sleep rate must be >= 0")
        self.topology = topology
        self.src = src
        self.lam = float(lam)
        self._r = self.lam / (1.0 + self.lam)
        self._gaps = {}
        self._jumps = {}
        self._deg = {}

    def gap(self, x, m):
        key = (x, m)
        g = self._gaps.get(key)
        if g is None:
            g = self._gaps[key] = decode_sleep_count(gap_uniform(self.src, x, m), self.lam)
        return g

    def gap_positive(self, x, m):
        g = self._gaps.get((x, m))
        if g is not None:
            return g > 0
        return gap_uniform(self.src, x, m) <= self._r

    def jump(self, x, m):
        key = (x, m)
        j = self._jumps.get(key)
        if j is None:
            d = self._deg.get(x)
            if d is None:
                d = self._deg[x] = self.topology.degree(x)
            j = self._jumps[key] = jump_target(self.src, x, m, d)
        return j


class ExplicitSource(InstructionSource):
    """Explicit finite slot prefixes per vertex, optionally followed by a tail.

    Slot ``j >= len(prefix[x])`` is ``tail.slot(x, j - len(prefix[x]))``.
    Without a tail, reading past a prefix raises :class:`PrefixExhausted`.
    """

    def __init__(self, prefixes: Mapping[VertexId, Iterable], tail: InstructionSource | None = None):
        self.prefixes = {x: [_parse_slot(s) for s in slots] for x, slots in prefixes.items()}
        self.tail = tail
        self._parsed = {}

    def _raw_slot(self, x, j):
        pre = self.prefixes.get(x, ())
        if j < len(pre):
            return pre[j]
        if self.tail is None:
            raise PrefixExhausted(f"explicit array at vertex {x} exhausted at slot {j}")
        return self.tail.slot(x, j - len(pre))

    def _gaps_until(self, x, m):
        gaps, jumps, pos = self._parsed.get(x, ([], [], 0))
        while len(gaps) <= m:
            s = 0
            while self._raw_slot(x, pos) == SLEEP:
                s += 1
                pos += 1
            gaps.append(s)
            jumps.append(self._raw_slot(x, pos))
            pos += 1
        self._parsed[x] = (gaps, jumps, pos)
        return gaps, jumps

    def gap(self, x, m):
        return self._gaps_until(x, m)[0][m]

    def jump(self, x, m):
        return self._gaps_until(x, m)[1][m]

    def sleep_at(self, x, m, p):
        # reads only the slots up to p, so a prefix may end inside a gap
        if m:
            gaps, _ = self._gaps_until(x, m - 1)
            start = sum(gaps[:m]) + m
        else:
            start = 0
        return self._raw_slot(x, start + p) == SLEEP

    def slot(self, x, j):
        return self._raw_slot(x, j)

    def to_text(self) -> str:
        return "".join(
            f"{x} " + " ".join(_format_slot(s) for s in slots) + "\n" for x, slots in sorted(self.prefixes.items())
        )

    @classmethod
    def from_text(cls, text: str, tail: InstructionSource | None = None) -> "ExplicitSource":
        prefixes = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            head, *slots = line.split()
            prefixes[int(head)] = slots
        return cls(prefixes, tail)


def _parse_slot(s) -> int:
    if isinstance(s, int):
        if s < SLEEP:
            raise ValueError(f"bad slot {s}")
        return s
    s = str(s).strip()
    if s == "s":
        return SLEEP
    if s.startswith("J"):
        s = s[1:]
    i = int(s)
    if i < 0:
        raise ValueError(f"bad jump index {s}")
    return i


def _format_slot(s: int) -> str:
    return "s" if s == SLEEP else str(s)


def from_gaps(gaps: Mapping[VertexId, Iterable[tuple[int, int]]], tail: InstructionSource | None = None) -> ExplicitSource:
    """Build an explicit array from per-vertex ``(S, J)`` gap lists."""
    prefixes = {}
    for x, pairs in gaps.items():
        slots = []
        for s, j in pairs:
            slots.extend([SLEEP] * s)
            slots.append(j)
        prefixes[x] = slots
    return ExplicitSource(prefixes, tail)


def gamma_minus(src: InstructionSource, y: VertexId, m: int) -> InstructionSource:
    return src.gamma_minus(y, m)


def gamma_one(src: InstructionSource, y: VertexId, m: int) -> InstructionSource:
    return src.gamma_one(y, m)


# -- partial orders --------------------------------------------------------------


def compare(a, b, window) -> str:
    """Order relation of ``a`` to ``b`` on a finite window.

    Configurations: ``window`` is a vertex set; pointwise state order.
    Arrays: ``window`` is ``(vertices, horizon)``; a <= b iff all jumps
    J^{x,m} agree and S_a^{x,m} >= S_b^{x,m} for m < horizon (b has fewer
    sleeps). Returns ``"equal"``, ``"<="``, ``">="`` or ``"incomparable"``.
    """
    if window is None:
        raise ValueError("comparison needs an explicit finite window")
    if isinstance(a, ParticleConfig) and isinstance(b, ParticleConfig):
        pairs = [(rank(a[x]), rank(b[x])) for x in window]
    elif isinstance(a, InstructionSource) and isinstance(b, InstructionSource):
        vertices, horizon = window
        pairs = []
        for x in vertices:
            for m in range(horizon):
                if a.jump(x, m) != b.jump(x, m):
                    return "incomparable"
                # fewer sleeps is larger
                pairs.append((-a.gap(x, m), -b.gap(x, m)))
    else:
        raise TypeError("compare needs two configurations or two instruction arrays")
    le = all(p <= q for p, q in pairs)
    ge = all(p >= q for p, q in pairs)
    if le and ge:
        return "equal"
    if le:
        return "<="
    if ge:
        return ">="
    return "incomparable"
