"""Named bounded events used by the CLI and the verification suite."""

from __future__ import annotations

from ..engine import CAP_JUMPS, Domain
from ..essential import Event, JumpThresholdEvent, PredicateEvent, always_false, always_true
from ..topology import Topology


def _line_triple(caps):
    line = Topology("line")
    l1, r1 = line.encode(-1), line.encode(1)
    sites = (l1, 0, r1)
    return line, sites, dict(zip(sites, caps))


def one_site() -> Event:
    """{M(0) >= 1} on K = {0} of the line, jump cap 1."""
    line = Topology("line")
    return JumpThresholdEvent(Domain(line, (0,), {0: 1}, CAP_JUMPS), {0: 1})


def one_site_cap3() -> Event:
    """{M(0) >= 2} on K = {0} of the line, jump cap 3."""
    line = Topology("line")
    return JumpThresholdEvent(Domain(line, (0,), {0: 3}, CAP_JUMPS), {0: 2})


def path_pair() -> Event:
    """{M >= (1, 1)} on the two-vertex path, jump caps 2."""
    p = Topology("path", 2)
    return JumpThresholdEvent(Domain(p, (0, 1), {0: 2, 1: 2}, CAP_JUMPS), {0: 1, 1: 1})


def line_triple() -> Event:
    """{M(0) >= 2} on {-1, 0, 1} of the line, jump caps 2."""
    line, sites, caps = _line_triple((2, 2, 2))
    return JumpThresholdEvent(Domain(line, sites, caps, CAP_JUMPS), {0: 2})


def line_triple_all() -> Event:
    """{M >= 1 on all of {-1, 0, 1}}, jump caps (1, 3, 1)."""
    line, sites, caps = _line_triple((1, 3, 1))
    return JumpThresholdEvent(Domain(line, sites, caps, CAP_JUMPS), dict.fromkeys(sites, 1))


def grid_pair_sum() -> Event:
    """{M(0,0) + M(1,0) >= 2} on Z^2, jump caps 2."""
    grid = Topology("grid2d")
    a, b = 0, grid.encode((1, 0))
    return PredicateEvent(Domain(grid, (a, b), {a: 2, b: 2}, CAP_JUMPS), lambda M: M[a] + M[b] >= 2, "grid-pair-sum")


def trivially_true() -> Event:
    line = Topology("line")
    return always_true(Domain(line, (0,), {0: 1}, CAP_JUMPS))


def trivially_false() -> Event:
    line = Topology("line")
    return always_false(Domain(line, (0,), {0: 1}, CAP_JUMPS))


EVENTS = {
    "one-site": one_site,
    "one-site-cap3": one_site_cap3,
    "path-pair": path_pair,
    "line-triple": line_triple,
    "line-triple-all": line_triple_all,
    "grid-pair-sum": grid_pair_sum,
    "always-true": trivially_true,
    "always-false": trivially_false,
}


def get_event(name: str) -> Event:
    try:
        return EVENTS[name]()
    except KeyError:
        raise ValueError(f"unknown event {name!r}; choose from {', '.join(sorted(EVENTS))}") from None
