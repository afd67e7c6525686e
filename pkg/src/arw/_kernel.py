"""Compiled primitives: keyed hash, law decoders and the Monte Carlo toppler.

The hash here must agree bit-for-bit with :func:`arw.randomness.key_hash`;
``tests/test_randomness.py`` checks both on random keys.

Site-state codes are shared with :mod:`arw.state`: 0 empty, n >= 1 active
particles, -k k dormant particles (-1 is a single sleeping particle).
"""

import math
import os

import numba as nb
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled workqueue layer avoids probing an incompatible system TBB
    nb.config.THREADING_LAYER = "workqueue"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

HALT_STABLE = 0
HALT_BUDGET = 2
HALT_TARGET = 3


@nb.njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def key_uniform(seed, replicate, tag, vertex, slot):
    h = _mix64(np.uint64(seed) + _GOLDEN)
    h = _mix64((h ^ np.uint64(replicate)) + _GOLDEN)
    h = _mix64((h ^ np.uint64(tag)) + _GOLDEN)
    h = _mix64((h ^ np.uint64(vertex)) + _GOLDEN)
    h = _mix64((h ^ np.uint64(slot)) + _GOLDEN)
    return float(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True)
def uniform_array(seed, replicate, tag, vertices, slots):
    out = np.empty(vertices.shape[0], dtype=np.float64)
    for i in range(vertices.shape[0]):
        out[i] = key_uniform(seed, replicate, tag, vertices[i], slots[i])
    return out


@nb.njit(cache=True)
def decode_particles(u, family, mu):
    # family 0 = poisson, 1 = bernoulli
    if family == 1:
        return 1 if u >= 1.0 - mu else 0
    if mu <= 0.0:
        return 0
    p = math.exp(-mu)
    cum = p
    comp = 0.0
    k = 0
    while u >= cum:
        if 1.0 - cum < 1e-15:
            break
        k += 1
        p *= mu / k
        # Kahan-compensated running CDF
        yv = p - comp
        t = cum + yv
        comp = (t - cum) - yv
        cum = t
    return k


@nb.njit(cache=True)
def decode_sleep_count(y, lam):
    if lam <= 0.0:
        return 0
    r = lam / (1.0 + lam)
    if y > r:
        return 0
    ell = int(math.floor(math.log(y) / math.log(r)))
    if ell < 1:
        ell = 1
    # settle boundary rounding against the interval rule directly
    while r ** (ell + 1) >= y:
        ell += 1
    while ell > 1 and r ** ell < y:
        ell -= 1
    return ell


@nb.njit(cache=True)
def init_state(state, gid, in_k, xi, family, mu, seed, replicate):
    for x in range(state.shape[0]):
        if not in_k[x]:
            state[x] = 0
            continue
        k = decode_particles(key_uniform(seed, replicate, 0, gid[x], 0), family, mu)
        a = xi[x]
        if a >= 1.0:
            active = True
        elif a <= 0.0:
            active = False
        else:
            active = key_uniform(seed, replicate, 3, gid[x], 0) < a
        state[x] = k if active else -k


@nb.njit(cache=True)
def stabilize_relevant(nbr, deg, gid, in_k, state, jumps, seed, replicate, lam,
                       target, target_count, budget):
    """Stabilise the sites flagged ``in_k`` in place, lazily decoding gaps.

    Consumes at most one effective sleep per jump gap. Returns
    ``(halt_code, instructions_used)``; with ``target >= 0`` it stops as soon
    as ``jumps[target] >= target_count``.
    """
    n = state.shape[0]
    r = lam / (1.0 + lam)
    consumed = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    head = 0
    size = 0
    for x in range(n):
        jumps[x] = 0
        if in_k[x] and state[x] >= 1:
            queue[(head + size) % n] = x
            size += 1
            inq[x] = True
    if target >= 0 and target_count <= 0:
        return HALT_TARGET, 0
    steps = 0
    while size > 0:
        x = queue[head]
        head = (head + 1) % n
        size -= 1
        inq[x] = False
        while state[x] >= 1:
            if steps >= budget:
                return HALT_BUDGET, steps
            g = jumps[x]
            if state[x] == 1 and not consumed[x]:
                consumed[x] = True
                yv = 1.0 - key_uniform(seed, replicate, 1, gid[x], g)
                if yv <= r:
                    state[x] = -1
                    steps += 1
                    break
            i = int(key_uniform(seed, replicate, 2, gid[x], g) * deg[x])
            dest = nbr[x, i]
            state[x] -= 1
            jumps[x] = g + 1
            consumed[x] = False
            steps += 1
            s = state[dest]
            state[dest] = -s + 1 if s < 0 else s + 1
            if in_k[dest] and not inq[dest]:
                queue[(head + size) % n] = dest
                size += 1
                inq[dest] = True
            if x == target and jumps[x] >= target_count:
                return HALT_TARGET, steps
    return HALT_STABLE, steps


@nb.njit(cache=True, parallel=True)
def activity_batch(nbr, deg, gid, in_k, xi, family, mu, lam, seed, replicates,
                   origin, threshold, budget):
    """Indicator of ``jumps[origin] >= threshold`` per replicate.

    Budget exhaustion counts as the event occurring and is flagged.
    Replicates are independent, so the result does not depend on the thread count.
    """
    n = nbr.shape[0]
    nrep = replicates.shape[0]
    hit = np.zeros(nrep, dtype=np.uint8)
    exhausted = np.zeros(nrep, dtype=np.uint8)
    for i in nb.prange(nrep):
        state = np.empty(n, dtype=np.int64)
        jumps = np.empty(n, dtype=np.int64)
        init_state(state, gid, in_k, xi, family, mu, seed, replicates[i])
        code, _ = stabilize_relevant(nbr, deg, gid, in_k, state, jumps, seed,
                                     replicates[i], lam, origin, threshold, budget)
        if code == HALT_TARGET:
            hit[i] = 1
        elif code == HALT_BUDGET:
            hit[i] = 1
            exhausted[i] = 1
    return hit, exhausted
