"""Command line interface: ``arw <subcommand> [options]``.

Every subcommand accepts ``--seed``, ``--budget``, ``--out`` and
``--config FILE``. The config file is a JSON object whose keys are option
names (dashes or underscores); explicit flags win over config values.

Exit codes: 0 success or pass, 1 a check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import __version__
from .analysis import activity, exact
from .analysis.events import EVENTS, get_event
from .engine import CAP_INSTRUCTIONS, CAP_JUMPS, Domain, stabilize
from .essential import JumpThresholdEvent, SweepCounts, lemma_sweep
from .randomness import ParticleLaw, RandomSource
from .state import LazySource, sample_config
from .topology import Topology

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# -- output helpers ------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, bool):
        return str(int(v))
    return "" if v is None else str(v)


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def dump_csv(meta: dict, columns: list, rows: list) -> str:
    buf = io.StringIO()
    for k in sorted(meta):
        buf.write(f"# {k}: {json.dumps(_clean(meta[k]), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def emit(args, text: str):
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(args, **extra) -> dict:
    meta = {"command": args.command, "seed": args.seed, "budget": args.budget, "version": __version__}
    meta.update(extra)
    return meta


# -- argument parsing --------------------------------------------------------------


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _point(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected lam,mu")
    return tuple(vals)


def _law(family, mu) -> ParticleLaw:
    try:
        return ParticleLaw(family, mu)
    except ValueError as exc:
        raise InputError(f"law: {exc}") from None


def _topology(text) -> Topology:
    try:
        return Topology.parse(text)
    except (ValueError, KeyError) as exc:
        raise InputError(f"topology: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=10**6)
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument("--config", help="JSON file of option values; flags override it")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--topology", default="line", help="line | grid2d | 'tree r=3' | 'cycle n=8' | 'path n=4'")
    model.add_argument("--law", choices=ParticleLaw.FAMILIES, default="poisson")
    model.add_argument("--lam", type=float, default=1.0)
    model.add_argument("--mu", type=float, default=0.5)

    p = argparse.ArgumentParser(prog="arw", description="Activated random walk toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stabilize", parents=[common, model], help="stabilise a ball and report odometers")
    s.add_argument("--radius", type=int, default=2)
    s.add_argument("--cap", type=int, help="cap at every site of K")
    s.add_argument("--cap-style", choices=(CAP_INSTRUCTIONS, CAP_JUMPS), default=CAP_INSTRUCTIONS)
    s.add_argument("--relevant", action="store_true", help="read sleep gaps only through their positivity")
    s.add_argument("--replicate", type=int, default=0)

    s = sub.add_parser("essential-scan", parents=[common, model], help="essential pairs and lemma checks")
    s.add_argument("--radius", type=int, default=1)
    s.add_argument("--cap", type=int, help="jump cap at every site of K")
    s.add_argument("--threshold", type=int, default=1, help="H at the origin")
    s.add_argument("--instances", type=int, default=10)

    for name, helptext in (("russo-check", "Russo formula residuals"), ("diff-ineq", "differential inequality")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--event", choices=sorted(EVENTS), default="one-site")
        s.add_argument("--law", choices=ParticleLaw.FAMILIES, default="poisson" if name == "diff-ineq" else "bernoulli")
        s.add_argument("--lam", type=_floats, default=[1.0], help="one value or a comma list")
        s.add_argument("--mu", type=_floats, default=[0.5], help="one value or a comma list")
        s.add_argument("--h", type=float, default=1e-4)
        if name == "russo-check":
            s.add_argument("--tol", type=float, help="residual tolerance (default 1e-6 Bernoulli, 1e-5 Poisson)")

    s = sub.add_parser("monotone-path", parents=[common], help="P_p <= P_q along the semi-line")
    s.add_argument("--p", type=_point, required=False, default=(1.0, 0.3))
    s.add_argument("--q", type=_point, required=False, default=(2.0, 0.8))
    s.add_argument("--law", choices=ParticleLaw.FAMILIES, default="poisson")
    s.add_argument("--event", choices=sorted(EVENTS), help="exact event; omit for the Monte Carlo proxy")
    s.add_argument("--topology", default="line")
    s.add_argument("--L", type=int, default=64)
    s.add_argument("--H", type=int, default=10)
    s.add_argument("--samples", type=int, default=10**4)

    s = sub.add_parser("critical-curve", parents=[common], help="bisection estimate of the activity crossing")
    s.add_argument("--lams", type=_floats, default=[0.25, 0.5, 1.0, 2.0])
    s.add_argument("--topology", default="line")
    s.add_argument("--law", choices=ParticleLaw.FAMILIES, default="poisson")
    s.add_argument("--L", type=int, default=64)
    s.add_argument("--H", type=int, default=10)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--tol", type=float, default=0.05)

    sub.add_parser("selftest", parents=[common], help="quick consistency checks")
    return p


def _apply_config(parser, argv):
    """Parse, then re-parse with config values as defaults so that flags win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"config: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError("config: top level must be an object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("config", "help") or dest not in actions:
            raise InputError(f"config.{key}: unknown option for {args.command}")
        act = actions[dest]
        if act.type is not None and value is not None:
            try:
                value = act.type(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise InputError(f"config.{key}: {exc}") from None
        if act.choices is not None and value not in act.choices:
            raise InputError(f"config.{key}: {value!r} not in {sorted(act.choices)}")
        defaults[dest] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


# -- subcommands -------------------------------------------------------------------


def cmd_stabilize(args) -> int:
    topo = _topology(args.topology)
    law = _law(args.law, args.mu)
    if args.radius < 0:
        raise InputError("radius: must be >= 0")
    K = topo.ball(topo.origin, args.radius)
    caps = {} if args.cap is None else dict.fromkeys(K, args.cap)
    style = CAP_JUMPS if args.relevant and caps else args.cap_style
    dom = Domain(topo, tuple(K), caps, style)
    src = RandomSource(args.seed, args.replicate)
    eta = sample_config(K, src, law)
    res = stabilize(dom, eta, LazySource(topo, src, args.lam), args.budget, relevant=args.relevant)
    meta = _meta(args, topology=topo.spec(), radius=args.radius, lam=args.lam, law=args.law, mu=args.mu,
                 caps=args.cap, cap_style=style, relevant=args.relevant, replicate=args.replicate)
    emit(args, dump_json({"meta": meta, "initial": {str(k): v for k, v in eta.items()}, "result": res.as_dict()}))
    return EXIT_OK


def cmd_essential_scan(args) -> int:
    topo = _topology(args.topology)
    law = _law(args.law, args.mu)
    K = tuple(topo.ball(topo.origin, args.radius))
    caps = {} if args.cap is None else dict.fromkeys(K, args.cap)
    dom = Domain(topo, K, caps, CAP_JUMPS)
    A = JumpThresholdEvent(dom, {topo.origin: args.threshold}, args.budget)
    total = SweepCounts()
    rows = []
    for i in range(args.instances):
        src = RandomSource(args.seed, i)
        inst = []
        total.add(lemma_sweep(A, sample_config(K, src, law), LazySource(topo, src, args.lam), inst))
        rows.extend(dict(r, instance=i) for r in inst)
    meta = _meta(args, topology=topo.spec(), radius=args.radius, cap=args.cap, threshold=args.threshold,
                 lam=args.lam, law=args.law, mu=args.mu, instances=args.instances, counts=total.__dict__)
    cols = ["instance", "vertex", "index", "s_essential", "p_essential", "gap_positive", "M"]
    emit(args, dump_csv(meta, cols, rows))
    if total.inconclusive:
        return EXIT_FAIL
    return EXIT_FAIL if total.violations else EXIT_OK


def _grid(args):
    for lam in args.lam:
        for mu in args.mu:
            yield lam, _law(args.law, mu)


def cmd_russo(args) -> int:
    ev = exact.ExactEvent(get_event(args.event))
    tol = args.tol if args.tol is not None else (1e-6 if args.law == "bernoulli" else 1e-5)
    reports, ok = [], True
    for lam, law in _grid(args):
        r = ev.russo(lam, law, args.h).as_dict()
        r["pass"] = r["lam_residual"] < tol and r["mu_residual"] < tol
        ok &= r["pass"]
        reports.append(r)
    emit(args, dump_json({"meta": _meta(args, event=args.event, law=args.law, tol=tol, h=args.h), "reports": reports}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_diff_ineq(args) -> int:
    ev = exact.ExactEvent(get_event(args.event))
    rows = [exact.diff_inequality(ev, lam, law, args.h) for lam, law in _grid(args)]
    emit(args, dump_json({"meta": _meta(args, event=args.event, law=args.law, h=args.h), "checks": rows}))
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def cmd_monotone_path(args) -> int:
    _law(args.law, args.p[1])
    _law(args.law, args.q[1])
    if not activity.in_semiline(args.p, args.q):
        raise InputError(f"q: {args.q} is not in the region above the semi-line from {args.p}")
    if args.event:
        res = exact.monotone_path_exact(exact.ExactEvent(get_event(args.event)), args.p, args.q, args.law)
        meta = _meta(args, mode="exact", event=args.event, law=args.law)
    else:
        topo = _topology(args.topology)
        chk = activity.monotone_path_mc(topo, args.p, args.q, args.L, args.H, args.samples, args.seed, args.law,
                                        args.budget)
        res = {"p": list(args.p), "q": list(args.q), "P_p": chk.p_hat, "P_q": chk.q_hat, "se": chk.se,
               "pass": chk.passed}
        meta = _meta(args, mode="monte-carlo", topology=topo.spec(), L=args.L, H=args.H, samples=args.samples,
                     law=args.law)
    emit(args, dump_json({"meta": meta, "result": res}))
    return EXIT_OK if res["pass"] else EXIT_FAIL


def cmd_critical_curve(args) -> int:
    topo = _topology(args.topology)
    if args.tol <= 0:
        raise InputError("tol: must be > 0")
    if not args.lams or min(args.lams) <= 0:
        raise InputError("lams: values must be > 0")
    curve = activity.estimate_critical_curve(topo, args.lams, args.L, args.H, args.samples, args.tol, args.seed,
                                             args.law, budget=args.budget)
    sand = activity.sandwich_check(curve)
    slope = activity.slope_bound_check(curve) + [{"pass": True}]
    rows = []
    for p, s, sl in zip(curve.points, sand, slope):
        rows.append({"lam": p.lam, "zeta": p.zeta, "ci_lo": p.lo, "ci_hi": p.hi, "censored": p.censored,
                     "sandwich_pass": s["pass"], "slope_pass": sl["pass"]})
    meta = dict(_meta(args), **curve.meta, lams=args.lams)
    cols = ["lam", "zeta", "ci_lo", "ci_hi", "censored", "sandwich_pass", "slope_pass"]
    emit(args, dump_csv(meta, cols, rows))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest()
    emit(args, dump_json({"meta": _meta(args), "checks": results}))
    return EXIT_OK if all(r["pass"] for r in results) else EXIT_FAIL


COMMANDS = {
    "stabilize": cmd_stabilize,
    "essential-scan": cmd_essential_scan,
    "russo-check": cmd_russo,
    "diff-ineq": cmd_diff_ineq,
    "monotone-path": cmd_monotone_path,
    "critical-curve": cmd_critical_curve,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.budget < 1:
            raise InputError("budget: must be >= 1")
        activity.set_threads_from_env()
        return COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"arw: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
