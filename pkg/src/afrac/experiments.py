"""Regularity experiments: convex interior regularity and the non-convex ceiling.

All experiments solve L u = 1 in a domain with the coordinate-atom measure
and fit power laws to finite differences of the discrete solution.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import linregress

from .geometry import Ball, CounterexampleDomain, Domain
from .grid import GridFunction
from .holder import FlatFunctionError, holder_norm, local_exponent_fit, weighted_norm
from .lemma_lab import cutoff
from .solver import solve_problem

MIN_R2 = 0.9


@dataclass
class FitRecord:
    """One exponent fit at a probe point."""

    x0: tuple
    direction: tuple
    order: int
    gamma: float
    r2: float
    window: tuple
    h: float
    label: str = ""

    @property
    def reliable(self):
        return self.r2 >= MIN_R2


@dataclass
class RegularityReport:
    """Fit records, summary exponents and solver metadata.

    Only records with r^2 >= 0.9 enter the summary; the others are kept and
    flagged unreliable.
    """

    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    solver: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def flagged(self):
        return [r for r in self.records if not r.reliable]

    def reliable(self, label=None):
        return [r for r in self.records if r.reliable and (label is None or r.label == label)]

    def to_dict(self):
        recs = [dict(asdict(r), reliable=r.reliable) for r in self.records]
        return {"records": recs, "summary": self.summary, "solver": self.solver,
                "tables": self.tables}


def _solver_meta(u: GridFunction):
    keep = ("s", "h", "residual", "iterations", "method", "wall_time_ms", "unknowns")
    return {k: u.meta[k] for k in keep if k in u.meta}


def power_fit(x, y):
    """Slope and r^2 of log|y| against log x."""
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise FlatFunctionError("cannot fit a power law through zero values")
    f = linregress(np.log(x), np.log(y))
    return float(f.slope), float(f.rvalue ** 2)


def dyadic_scales(lo, hi, ratio=math.sqrt(2)):
    """Geometric scales lo, lo*ratio, ... not exceeding hi."""
    n = int(math.floor(math.log(hi / lo) / math.log(ratio) + 1e-9)) + 1
    return lo * ratio ** np.arange(n)


# ---------------------------------------------------------------------------
# convex domains


def convex_regularity_experiment(s=0.25, h_list=(2.0 ** -7, 2.0 ** -8), probe_count=4, seed=0,
                                 probe_radius=0.5, g=1.0):
    """Order-2 exponent fits at interior points of the unit ball.

    Probes lie in B_probe_radius (distance >= 0.5 from the boundary by default)
    and are fitted along both axes and both diagonals over scales from 4h to
    (1 - probe_radius)/2.  The summary holds the minimum reliable exponent per
    h and the ratio ||u||^{(-s)}_{beta+2s} / (||g||^{(s)}_beta + ||u||_{C^s})
    with beta = 1 + s - 0.05.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    top = 0.5 * (1 - probe_radius)
    if max(h_list) * 32 > top * (1 + 1e-12):
        raise ValueError(f"h must be at most {top / 32:g} for 3 octaves of scales from 4h to {top:g}")
    dom = Ball((0.0, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    rad = probe_radius * np.sqrt(rng.random(probe_count))
    ang = 2 * np.pi * rng.random(probe_count)
    probes = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    dirs = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)]
    beta = 1 + s - 0.05
    rep = RegularityReport()
    for h in h_list:
        u = solve_problem(dom, s, g, h)
        if not np.any(np.abs(u.values) > 1e-14):
            raise FlatFunctionError("the solution vanishes identically")
        rep.solver.append(_solver_meta(u))
        ts = dyadic_scales(4 * h, 0.5 * (1 - probe_radius))
        for x0 in probes:
            for e in dirs:
                fit = local_exponent_fit(u, x0, e, ts, order=2)
                rep.records.append(FitRecord(tuple(x0), e, 2, fit.gamma, fit.r2,
                                             (float(ts[0]), float(ts[-1])), h, f"h={h:g}"))
        gg = u.with_values(np.where(u.mask, g, 0.0))
        num = weighted_norm(u, dom, beta + 2 * s, -s, seed).total
        den = weighted_norm(gg, dom, beta, s, seed).total + holder_norm(u, s, seed=seed)
        good = [r.gamma for r in rep.reliable(f"h={h:g}")]
        rep.summary[f"h={h:g}"] = {"min_gamma": min(good) if good else math.nan,
                                   "reliable": len(good), "ratio": num / den,
                                   "beta": beta}
    return rep


# ---------------------------------------------------------------------------
# the non-convex counterexample


def _line_w(u, xs, y, s, r0, r1):
    P = np.column_stack([xs, np.full_like(xs, y)])
    return (1.0 - cutoff(P, r0, r1)) * u(P, boundary_exponent=s)


def j_integrals(u: GridFunction, eta_list, s, r0=1.0, r1=2.0):
    """J1 and J2 by grid-line quadrature.

    J1(eta) = 2 sum_{|x|>=1/2} (w(x,-eta) - w(x,0)) |x|^{-1-2s} h along the
    horizontal grid line, w = (1 - theta) u.  For J2 the shift rho -> rho - eta
    moves it onto grid nodes: J2 = 2 sum_y w(0,y) [K(y+eta) - K(y)] h with
    K(y) = |y|^{-1-2s} 1{|y| >= 1/2}; this is exact because w vanishes on B_1.
    """
    h = u.h
    xs = u.axes()[0]
    ys = u.axes()[1]
    sel = np.abs(xs) >= 0.5
    kx = np.abs(xs[sel]) ** (-1 - 2 * s)
    w0 = _line_w(u, xs, 0.0, s, r0, r1)
    col = np.column_stack([np.zeros_like(ys), ys])
    wy = (1.0 - cutoff(col, r0, r1)) * u(col, boundary_exponent=s)

    def K(y):
        a = np.abs(y)
        far = a >= 0.5
        return np.where(far, np.where(far, a, 1.0) ** (-1 - 2 * s), 0.0)

    J1, J2 = [], []
    for eta in eta_list:
        we = _line_w(u, xs, -eta, s, r0, r1)
        J1.append(2 * h * float(np.sum((we - w0)[sel] * kx)))
        J2.append(2 * h * float(np.sum(wy * (K(ys + eta) - K(ys)))))
    return np.array(J1), np.array(J2)


def counterexample_experiment(s=0.25, eta_list=None, h=2.0 ** -6, cutoff_radii=(1.0, 2.0),
                              dom: Domain | None = None, u: GridFunction | None = None):
    """J1/J2 tables and boundary growth on the counterexample domain.

    Parameters
    ----------
    eta_list : sequence of float
        At least 5 values in [h/2, 0.25]; default 2^-3 ... 2^-7.
    u : GridFunction, optional
        A precomputed solution (skips the solve).

    Returns
    -------
    RegularityReport
        ``summary`` holds gamma1, gamma2, gamma_boundary and their r^2;
        ``tables`` holds eta, J1, J2 and u(-7, -eta).
    """
    eta = np.asarray(2.0 ** -np.arange(3, 8) if eta_list is None else eta_list, dtype=float)
    if len(eta) < 5:
        raise ValueError("need at least 5 eta values")
    if np.any(eta < h / 2) or np.any(eta > 0.25):
        raise ValueError("eta values must lie in [h/2, 0.25]")
    dom = dom or CounterexampleDomain()
    if u is None:
        u = solve_problem(dom, s, 1.0, h)
    rep = RegularityReport(solver=[_solver_meta(u)])
    J1, J2 = j_integrals(u, eta, s, *cutoff_radii)
    pts = np.column_stack([np.full_like(eta, -7.0), -eta])
    ub = np.atleast_1d(u(pts, boundary_exponent=s))
    g1, r1 = power_fit(eta, J1)
    g2, r2 = power_fit(eta, J2)
    gb, rb = power_fit(eta, ub)
    win = (float(eta.min()), float(eta.max()))
    rep.records += [FitRecord((0.0, 0.0), (1.0, 0.0), 0, g1, r1, win, h, "J1"),
                    FitRecord((0.0, 0.0), (0.0, 1.0), 0, g2, r2, win, h, "J2"),
                    FitRecord((-7.0, 0.0), (0.0, -1.0), 0, gb, rb, win, h, "boundary")]
    rep.summary = {"gamma1": g1, "gamma2": g2, "gamma_boundary": gb,
                   "r2": {"J1": r1, "J2": r2, "boundary": rb},
                   "J1_positive": bool(np.all(J1 > 0))}
    rep.tables = {"eta": eta.tolist(), "J1": J1.tolist(), "J2": J2.tolist(),
                  "u_boundary": ub.tolist()}
    return rep


def gap_scales(h):
    """Scales 4h * sqrt(2)^j, j = 0..7, for the vertical gap fit."""
    return 4 * h * math.sqrt(2) ** np.arange(8)


def regularity_gap_probe(s=0.25, h=2.0 ** -6, x0=(0.0, -0.05), convex: Domain | None = None,
                         nonconvex: Domain | None = None):
    """Order-2 vertical exponents at x0 for a convex and a non-convex domain.

    Returns
    -------
    dict
        ``convex`` and ``nonconvex`` exponent fits (gamma, r2) and their gap.
    """
    convex = convex or Ball((0.0, 0.0), 4.0)
    nonconvex = nonconvex or CounterexampleDomain()
    ts = gap_scales(h)
    out = {}
    for name, dom in (("convex", convex), ("nonconvex", nonconvex)):
        u = solve_problem(dom, s, 1.0, h)
        fit = local_exponent_fit(u, x0, (0.0, 1.0), ts, order=2)
        out[name] = {"gamma": fit.gamma, "r2": fit.r2, "scales": ts.tolist(),
                     "diffs": fit.diffs.tolist(), "solver": _solver_meta(u)}
    out["gap"] = out["convex"]["gamma"] - out["nonconvex"]["gamma"]
    return out
