"""Command line entry point: ``afrac <subcommand> [options]``.

Every run writes its outputs and a ``manifest.json`` (resolved config, seed,
library versions, wall time) into ``--out``.  Exit codes: 0 success, 1 usage
or input error, 2 a checked bound or property was violated.

Options may also come from a config file (``--config``) with one section per
subcommand plus an optional ``[common]`` section of ``key = value`` lines;
command-line flags take precedence.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import os
import platform
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np
import scipy

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    """Bad flags, malformed literals or violated preconditions."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# output bookkeeping


class Run:
    """Tracks written files so a failed run can remove its partial outputs."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[Path] = []
        self.created_dir = not out.exists()

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.files.append(p)
        return p

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def write_json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def cleanup(self):
        for p in self.files:
            for q in (p, Path(str(p) + ".json")):
                if q.exists():
                    q.unlink()
        if self.created_dir and self.out.exists() and not any(self.out.iterdir()):
            self.out.rmdir()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _emit(args, summary):
    if args.json:
        print(json.dumps(_jsonable(summary), sort_keys=True))
    else:
        for k, v in summary.items():
            if not isinstance(v, (dict, list)):
                print(f"{k}: {v}")


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text, n=None):
    vals = [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _domain(args, default):
    from .geometry import parse_domain

    try:
        return parse_domain(args.domain or default)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _measure(args):
    from .spectral import parse_measure

    try:
        return parse_measure(args.measure or "axis")
    except (ValueError, SyntaxError) as exc:
        raise UsageError(str(exc)) from exc


def _rhs(text):
    kind, _, val = str(text).partition(":")
    if kind == "const":
        try:
            return float(val)
        except ValueError as exc:
            raise UsageError(f"bad right-hand side {text!r}") from exc
    raise UsageError(f"right-hand side must be const:<value>, got {text!r}")


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


# ---------------------------------------------------------------------------
# subcommands


def cmd_barrier(args, run):
    from .geometry import Ball
    from .operator import apply_L_point, barrier, barrier_breaks, barrier_constant_1d

    s = args.s if args.s is not None else 0.5
    a = _measure(args)
    if args.n == 1:
        c = barrier_constant_1d(s)
        summary = {"s": s, "n": 1, "constant": c, "oracle": math.gamma(1 + 2 * s)}
        run.write_json("summary.json", summary)
        _emit(args, summary)
        return abs(c / summary["oracle"] - 1) <= 1e-6
    if a.dim != 2:
        raise UsageError("measure dimension must be 2 for --n 2")
    rng = np.random.default_rng(args.seed)
    rad = 0.9 * np.sqrt(rng.random(args.points))
    ang = 2 * np.pi * rng.random(args.points)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    u = lambda x: barrier(x, s)
    vals = np.array([apply_L_point(u, x, a, s, breaks=barrier_breaks, support_radius=1.0)
                     for x in pts])
    mean, rel = float(vals.mean()), float(vals.std() / abs(vals.mean()))
    run.write_csv("barrier.csv", ["x", "y", "value"], [(*x, v) for x, v in zip(pts, vals)])
    summary = {"s": s, "n": 2, "points": args.points, "mean": mean, "rel_std": rel,
               "domain": str(Ball())}
    ok = rel <= 1e-3
    if a.is_axis():
        # each axis contributes its weight times the one-dimensional constant
        oracle = float(np.sum(a.axis_coefficients())) * barrier_constant_1d(s)
        summary.update(oracle=oracle, rel_err=abs(mean / oracle - 1))
        ok &= summary["rel_err"] <= 5e-3
    summary["pass"] = bool(ok)
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return ok


def _solve(args, default_domain="ball(0,0,1)"):
    from .solver import solve_problem

    _require(args, "s", "h")
    dom = _domain(args, default_domain)
    try:
        return dom, solve_problem(dom, args.s, _rhs(args.g), args.h, _measure(args),
                                  lin_tol=args.tol or 1e-10)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_solve(args, run):
    dom, u = _solve(args)
    u.write_csv(run.path("solution.csv"), extra={"domain": args.domain, "s": args.s})
    g = _rhs(args.g)
    summary = dict(u.meta)
    summary.update(min=float(u.values[u.mask].min()), max=float(u.values[u.mask].max()))
    ok = True
    if g >= 0:
        # discrete maximum principle
        summary["max_principle"] = ok = bool(summary["min"] >= -1e-12 * max(summary["max"], 1.0))
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return ok


def cmd_norms(args, run):
    from .holder import holder_norm, weighted_norm

    dom, u = _solve(args)
    w = weighted_norm(u, dom, args.alpha, args.sigma, args.seed)
    summary = {"weighted": w.to_dict(), "holder_s": holder_norm(u, args.s, seed=args.seed),
               "solver": dict(u.meta)}
    summary["total"] = w.total
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return True


def cmd_exponent(args, run):
    from .holder import local_exponent_fit

    dom, u = _solve(args)
    x0 = _floats(args.x0, 2)
    ts = args.scale0 or 4 * args.h
    scales = ts * math.sqrt(2) ** np.arange(args.nscales)
    try:
        fit = local_exponent_fit(u, x0, _floats(args.direction, 2), scales, order=args.order,
                                 boundary_exponent=args.s if args.boundary else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    run.write_csv("fit.csv", ["t", "diff", "log_t", "log_diff"], fit.rows())
    summary = {"gamma": fit.gamma, "r2": fit.r2, "order": args.order, "x0": x0}
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return True


def cmd_verify_lemmas(args, run):
    from . import verify

    s_list = [args.s] if args.s is not None else None
    try:
        rows, maxima = verify.run_suite(args.suite, s_list=s_list, trials=args.trials,
                                        seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    run.write_csv("lemmas.csv", verify.HEADER, [r.as_row() for r in rows])
    ok = all(r.passed for r in rows)
    summary = {"suite": args.suite, "checks": len(rows),
               "failures": sum(not r.passed for r in rows), "battery_maxima": maxima,
               "pass": ok}
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return ok


def cmd_counterexample(args, run):
    from .experiments import counterexample_experiment

    s = args.s if args.s is not None else 0.25
    h = args.h or 2.0 ** -6
    etas = _floats(args.etas) if args.etas else None
    dom = _domain(args, "counterexample(0.05)")
    try:
        rep = counterexample_experiment(s, etas, h, dom=dom)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    t = rep.tables
    run.write_csv("counterexample.csv", ["eta", "J1", "J2", "u_at_(-7,-eta)"],
                  zip(t["eta"], t["J1"], t["J2"], t["u_boundary"]))
    sm = rep.summary
    checks = {"boundary": abs(sm["gamma_boundary"] - s) <= 0.1,
              "gamma1": abs(sm["gamma1"] - s) <= 0.1 and sm["J1_positive"],
              "gamma2": sm["gamma2"] >= sm["gamma1"] + 0.05,
              "r2": all(v >= 0.9 for v in sm["r2"].values())}
    summary = dict(sm, r2s=sm["r2"], checks=checks, solver=rep.solver, pass_=all(checks.values()))
    summary["pass"] = summary.pop("pass_")
    run.write_json("summary.json", summary)
    if args.svg:
        _loglog_svg(run.path("counterexample.svg"), t["eta"],
                    {"J1": t["J1"], "|J2|": np.abs(t["J2"]), "u(-7,-eta)": t["u_boundary"]})
    _emit(args, summary)
    return summary["pass"]


def cmd_convex(args, run):
    from .experiments import convex_regularity_experiment

    s = args.s if args.s is not None else 0.25
    hl = _floats(args.h_list) if args.h_list else [args.h] if args.h else [2.0 ** -7, 2.0 ** -8]
    rep = convex_regularity_experiment(s, hl, args.probes, args.seed)
    run.write_csv("fits.csv", ["h", "x", "y", "dx", "dy", "gamma", "r2", "reliable"],
                  [(r.h, *r.x0, *r.direction, r.gamma, r.r2, r.reliable) for r in rep.records])
    floor = min(2.0, 1 + 3 * s) - 0.15
    ok = all(v["min_gamma"] >= floor for v in rep.summary.values())
    summary = {"s": s, "floor": floor, "per_h": rep.summary, "flagged": len(rep.flagged),
               "solver": rep.solver, "pass": ok}
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return ok


def cmd_geometry(args, run):
    from .geometry import write_boundary_csv

    dom = _domain(args, "counterexample(0.05)")
    lo, hi = dom.bbox()
    summary = {"domain": args.domain or "counterexample(0.05)", "convex": bool(dom.convex),
               "smooth": bool(dom.smooth), "bbox": [lo.tolist(), hi.tolist()],
               "bounding_radius": float(dom.bounding_radius)}
    if hasattr(dom, "perimeter"):
        summary["perimeter"] = dom.perimeter
    try:
        write_boundary_csv(dom, run.path("boundary.csv"), n=args.points)
    except NotImplementedError:
        summary["boundary"] = "unavailable"
    if args.x0:
        x = np.array([_floats(args.x0, 2)])
        summary.update(contains=bool(dom.contains(x)[0]), dist=float(dom.dist(x)[0]))
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return True


def cmd_ellipticity(args, run):
    from .spectral import ellipticity_lambda, total_mass

    a = _measure(args)
    s = args.s if args.s is not None else 0.5
    lam = ellipticity_lambda(a, s, args.samples)
    summary = {"s": s, "lambda": lam, "Lambda": total_mass(a), "elliptic": bool(lam > 0),
               "even": bool(a.is_even())}
    run.write_json("summary.json", summary)
    _emit(args, summary)
    return True


def _loglog_svg(path, x, series, w=480, hgt=320, pad=48):
    """Minimal log-log line plot."""
    lx = np.log10(np.asarray(x, float))
    ys = {k: np.log10(np.maximum(np.asarray(v, float), 1e-300)) for k, v in series.items()}
    ally = np.concatenate(list(ys.values()))
    x0, x1, y0, y1 = lx.min(), lx.max(), ally.min(), ally.max()
    sx = lambda v: pad + (v - x0) / (x1 - x0 or 1) * (w - 2 * pad)
    sy = lambda v: hgt - pad - (v - y0) / (y1 - y0 or 1) * (hgt - 2 * pad)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{hgt}">',
           f'<rect x="{pad}" y="{pad}" width="{w - 2 * pad}" height="{hgt - 2 * pad}" '
           'fill="none" stroke="black"/>']
    for k, (name, v) in enumerate(ys.items()):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, v))
        c = colors[k % len(colors)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}"/>')
        out.append(f'<text x="{pad + 4}" y="{pad + 14 * (k + 1)}" fill="{c}" '
                   f'font-size="12">{name}</text>')
    out.append(f'<text x="{w / 2}" y="{hgt - 8}" font-size="12">log10 eta</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


COMMANDS = {
    "barrier": cmd_barrier, "solve": cmd_solve, "norms": cmd_norms, "exponent": cmd_exponent,
    "verify-lemmas": cmd_verify_lemmas, "counterexample": cmd_counterexample,
    "convex": cmd_convex, "geometry": cmd_geometry, "ellipticity": cmd_ellipticity,
}

HELP = {
    "barrier": "check that L maps the barrier (1-|x|^2)^s to a constant",
    "solve": "solve L u = g in a domain with zero exterior data",
    "norms": "weighted Hoelder norm of a discrete solution",
    "exponent": "fit a local regularity exponent at a point",
    "verify-lemmas": "run lemma check suites and write lemmas.csv",
    "counterexample": "J1/J2 scaling on the non-convex domain",
    "convex": "interior exponent fits on the unit ball",
    "geometry": "distance, normals and boundary data for a domain",
    "ellipticity": "ellipticity constants of a spectral measure",
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--s", type=float, help="fractional order in (0, 1)")
    common.add_argument("--domain", help="domain literal, e.g. 'ball(0,0,1)'")
    common.add_argument("--measure", help="'axis', 'uniform' or 'atoms=[(deg,w)]; density=[...]'")
    common.add_argument("--h", type=float, help="grid spacing")
    common.add_argument("--out", help="output directory (default out/<command>)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--threads", type=int, help="cap on BLAS/FFT threads (default 1)")
    common.add_argument("--tol", type=float, help="linear solver tolerance")
    common.add_argument("--json", action="store_true", default=None,
                        help="print a JSON summary")
    common.add_argument("--config", help="config file with [common] and per-command sections")

    p = _Parser(prog="afrac", description="Anisotropic fractional operators: solver, "
                "regularity experiments and lemma checks.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sp = {name: sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
          for name in COMMANDS}
    sp["barrier"].add_argument("--n", type=int, choices=(1, 2))
    sp["barrier"].add_argument("--points", type=int)
    for name in ("solve", "norms", "exponent"):
        sp[name].add_argument("--g", help="right-hand side, const:<value>")
    sp["norms"].add_argument("--alpha", type=float)
    sp["norms"].add_argument("--sigma", type=float)
    sp["exponent"].add_argument("--x0", help="probe point 'x,y'")
    sp["exponent"].add_argument("--direction", help="direction 'dx,dy'")
    sp["exponent"].add_argument("--order", type=int, choices=(1, 2))
    sp["exponent"].add_argument("--nscales", type=int)
    sp["exponent"].add_argument("--scale0", type=float)
    sp["exponent"].add_argument("--boundary", action="store_true", default=None,
                                help="boundary-adapted interpolation")
    sp["verify-lemmas"].add_argument("--suite")
    sp["verify-lemmas"].add_argument("--trials", type=int)
    sp["counterexample"].add_argument("--etas", help="comma-separated eta values")
    sp["counterexample"].add_argument("--svg", action="store_true", default=None)
    sp["convex"].add_argument("--h-list", help="comma-separated grid spacings")
    sp["convex"].add_argument("--probes", type=int)
    sp["geometry"].add_argument("--points", type=int)
    sp["geometry"].add_argument("--x0", help="query point 'x,y'")
    sp["ellipticity"].add_argument("--samples", type=int)
    return p


DEFAULTS = {
    "common": {"seed": 0, "threads": 1, "json": False},
    "barrier": {"n": 2, "points": 20},
    "solve": {"g": "const:1"}, "norms": {"g": "const:1", "alpha": 1.5, "sigma": -0.25},
    "exponent": {"g": "const:1", "x0": "0,0", "direction": "0,1", "order": 2, "nscales": 8,
                 "boundary": False},
    "verify-lemmas": {"suite": "quick", "trials": 20},
    "counterexample": {"svg": False}, "convex": {"probes": 4},
    "geometry": {"points": 4096}, "ellipticity": {"samples": 720},
}


def _coerce(parser_action, text):
    if parser_action.type is not None:
        return parser_action.type(text)
    if isinstance(parser_action, argparse._StoreTrueAction):
        return str(text).strip().lower() in ("1", "true", "yes", "on")
    return text


def resolve(argv):
    """Parse argv and merge defaults < config file < flags."""
    p = build_parser()
    args = p.parse_args(argv)
    if not args.command:
        raise UsageError("missing subcommand; try afrac --help")
    sp = p._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sp._actions}
    merged = dict(DEFAULTS["common"])
    merged.update(DEFAULTS.get(args.command, {}))
    if args.config:
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config!r}")
        for section in ("common", args.command):
            if cp.has_section(section):
                for key, val in cp.items(section):
                    dest = key.replace("-", "_")
                    if dest not in actions:
                        raise UsageError(f"unknown config key {key!r} in [{section}]")
                    try:
                        merged[dest] = _coerce(actions[dest], val)
                    except ValueError as exc:
                        raise UsageError(f"bad value for {key}: {val!r}") from exc
    for k, v in vars(args).items():
        if v is not None:
            merged[k] = v
    for k in vars(args):
        merged.setdefault(k, None)
    return argparse.Namespace(**merged)


def _versions():
    from importlib import metadata

    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "afrac": own}


def _thread_limit(n):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=n)


def run(argv=None):
    """Run the CLI and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = resolve(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    out = Path(args.out or os.path.join("out", args.command))
    r = Run(out)
    t0 = time.perf_counter()
    try:
        with _thread_limit(args.threads):
            ok = COMMANDS[args.command](args, r)
        code = EXIT_OK if ok else EXIT_VIOLATION
    except UsageError as exc:
        r.cleanup()
        print(f"afrac {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        r.cleanup()
        print(f"afrac {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = {k: v for k, v in vars(args).items() if k not in ("config",)}
    manifest = {"command": args.command, "argv": argv, "config": config, "seed": args.seed,
                "versions": _versions(), "wall_time_s": time.perf_counter() - t0,
                "outputs": sorted(p.name for p in r.files), "exit_code": code}
    r.write_json("manifest.json", manifest)
    if code == EXIT_VIOLATION:
        print(f"afrac {args.command}: a checked bound was violated", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
