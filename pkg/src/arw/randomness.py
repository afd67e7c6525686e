"""Keyed (counter-based) uniforms and the decoders of the coupled space.

Every random quantity is a pure function of the key
``(seed, replicate, tag, vertex, slot)``. Nothing is drawn sequentially, so the
particle configuration at density ``mu`` and the instruction array at sleep
rate ``lam`` are decoded from the *same* uniforms for every ``(lam, mu)``.
That is the monotone coupling: raising ``mu`` can only add particles and
raising ``lam`` can only add sleep instructions, realisation by realisation.

Key derivation (bit-exact, all arithmetic mod 2**64)::

    GOLDEN = 0x9E3779B97F4A7C15
    mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
              z ^= z >> 27; z *= 0x94D049BB133111EB
              z ^= z >> 31
    h = mix64(seed + GOLDEN)
    for w in (replicate, tag, vertex, slot):
        h = mix64((h ^ w) + GOLDEN)
    u = (h >> 11) * 2**-53                       # u in [0, 1)

Stream tags: 0 particle counts (slot 0), 1 sleep gaps (slot = jump index m),
2 jump targets (slot = m), 3 activity flags (slot 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from . import _kernel

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

TAG_PARTICLES = 0
TAG_GAPS = 1
TAG_JUMPS = 2
TAG_ACTIVITY = 3

POISSON_TAIL_CUTOFF = 1e-15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def key_hash(seed: int, replicate: int, tag: int, vertex: int, slot: int) -> int:
    h = mix64(seed + GOLDEN)
    for w in (replicate, tag, vertex, slot):
        h = mix64(((h ^ (w & MASK64)) + GOLDEN) & MASK64)
    return h


def key_uniform(seed: int, replicate: int, tag: int, vertex: int, slot: int) -> float:
    return (key_hash(seed, replicate, tag, vertex, slot) >> 11) * 2.0**-53


@dataclass(frozen=True)
class RandomSource:
    seed: int
    replicate: int = 0

    def uniform(self, tag: int, vertex: int, slot: int = 0) -> float:
        return key_uniform(self.seed, self.replicate, tag, vertex, slot)

    def uniforms(self, tag: int, vertices, slots=0) -> np.ndarray:
        """Vectorised :meth:`uniform` over arrays of vertices and slots."""
        v = np.asarray(vertices, dtype=np.int64)
        s = np.broadcast_to(np.asarray(slots, dtype=np.int64), v.shape)
        return _kernel.uniform_array(self.seed, self.replicate, tag, v.ravel(), s.ravel()).reshape(v.shape)

    def with_replicate(self, replicate: int) -> "RandomSource":
        return RandomSource(self.seed, replicate)


def uniform_site(src: RandomSource, v: int) -> float:
    """The particle-count uniform X_v."""
    return src.uniform(TAG_PARTICLES, v, 0)


def gap_uniform(src: RandomSource, v: int, m: int) -> float:
    """The sleep-gap variable Y_{v,m}, mapped into (0, 1]."""
    return 1.0 - src.uniform(TAG_GAPS, v, m)


def jump_target(src: RandomSource, v: int, m: int, degree: int) -> int:
    """Neighbour index of the m-th jump instruction at ``v``; ignores lam and mu."""
    return int(src.uniform(TAG_JUMPS, v, m) * degree)


def activity_flag(src: RandomSource, v: int, xi: float) -> bool:
    """Bernoulli(xi) activity flag of ``v``; True means the site starts active."""
    if xi >= 1.0:
        return True
    if xi <= 0.0:
        return False
    return src.uniform(TAG_ACTIVITY, v, 0) < xi


class ParticleLaw:
    """Product law of the initial particle counts.

    ``family`` is ``"poisson"`` (any ``mu >= 0``) or ``"bernoulli"``
    (``0 < mu < 1``).
    """

    FAMILIES = ("poisson", "bernoulli")

    def __init__(self, family: str, mu: float):
        if family not in self.FAMILIES:
            raise ValueError(f"unknown particle law {family!r}")
        mu = float(mu)
        if family == "poisson" and not mu >= 0:
            raise ValueError(f"poisson density must be >= 0, got {mu}")
        if family == "bernoulli" and not 0 < mu < 1:
            raise ValueError(f"bernoulli density must lie in (0, 1), got {mu}")
        self.family = family
        self.mu = mu

    def __repr__(self):
        return f"ParticleLaw({self.family!r}, {self.mu!r})"

    def __eq__(self, other):
        return isinstance(other, ParticleLaw) and (self.family, self.mu) == (other.family, other.mu)

    def __hash__(self):
        return hash((self.family, self.mu))

    def at(self, mu: float) -> "ParticleLaw":
        return ParticleLaw(self.family, mu)

    @property
    def code(self) -> int:
        return self.FAMILIES.index(self.family)

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        if self.family == "bernoulli":
            return (1.0 - self.mu, self.mu)[k] if k <= 1 else 0.0
        return math.exp(-self.mu + k * math.log(self.mu) - math.lgamma(k + 1)) if self.mu > 0 else float(k == 0)

    def tail(self, k: int) -> float:
        """nu_{>k}: probability of more than ``k`` particles."""
        if k < 0:
            return 1.0
        if self.family == "bernoulli":
            return self.mu if k == 0 else 0.0
        if self.mu == 0:
            return 0.0
        # regularised lower gamma: P(Poisson(mu) > k) = P(k+1, mu)
        return float(gammainc(k + 1, self.mu))

    def tail_derivative(self, k: int) -> float:
        """d/dmu nu_{>k}. Poisson: nu_k; Bernoulli: 1 for k = 0, else 0."""
        if k < 0:
            return 0.0
        if self.family == "bernoulli":
            return 1.0 if k == 0 else 0.0
        return self.pmf(k)

    def decode(self, u: float) -> int:
        return decode_particles(u, self)


def decode_particles(u: float, law: ParticleLaw) -> int:
    """Inverse CDF: the unique k with u in [nu_{<k}, nu_{<k+1})."""
    return _kernel.decode_particles(u, law.code, law.mu)


def decode_sleep_count(y: float, lam: float) -> int:
    """Number of sleep instructions before a jump, from Y in (0, 1].

    Returns l such that Y lies in (r**(l+1), r**l] with r = lam / (1 + lam),
    so the count is Geometric: P(l) = (1 / (1 + lam)) * r**l.
    """
    if not 0.0 < y <= 1.0:
        raise ValueError(f"gap uniform must lie in (0, 1], got {y}")
    if lam < 0:
        raise ValueError("sleep rate must be >= 0")
    return _kernel.decode_sleep_count(y, lam)
