"""Check suites: each check yields a row ``lemma, domain, params, value, bound, ratio, pass``.

Suites with frozen constants read them from :mod:`afrac.calibration`; each
suite also returns its battery maxima so the constants can be regenerated.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import calibration as cal
from . import lemma_lab as lab
from .geometry import (Ball, CounterexampleDomain, GraphPatch, Stadium, annulus_boundary_area,
                       band_measure, inner_sphere_center, level_set_lipschitz_probe,
                       verify_inner_ball)
from .grid import GridFunction
from .holder import norm_monotonicity_check

HEADER = ["lemma", "domain", "params", "value", "bound", "ratio", "pass"]
REL = 1e-3  # regression tolerance on frozen constants


@dataclass
class CheckRow:
    lemma: str
    domain: str
    params: dict
    value: float
    bound: float
    ratio: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def as_row(self):
        return [self.lemma, self.domain, json.dumps(self.params, sort_keys=True), self.value,
                self.bound, self.ratio, bool(self.passed)]


def _row(lemma, domain, params, value, bound, passed=None):
    ratio = value / bound if bound else (0.0 if value == 0 else math.inf)
    if passed is None:
        passed = value <= bound * (1 + REL)
    return CheckRow(lemma, domain, params, float(value), float(bound), float(ratio), bool(passed))


# ---------------------------------------------------------------------------
# explicit and closed-form checks


def check_at1_ball():
    rows = []
    for R, r, s in ((1.0, 0.1, 0.5), (2.0, 0.3, 0.25)):
        v = lab.at1_integral(Ball((0.0, 0.0), 3 * R), (0.0, 0.0), R, r, (1.0, 0.0), s)
        c = ((3 * R - r) ** (-2 * s) - (3 * R) ** (-2 * s)) / (2 * s)
        row = _row("AT1-ball", f"ball(0,0,{3 * R:g})", {"R": R, "r": r, "s": s}, v, c,
                   abs(v / c - 1) <= 1e-6)
        rows.append(row)
    return rows


def check_at1_battery(s_list=(0.25, 0.5), trials=200, seed=0):
    rows, maxima = [], {}
    for s in s_list:
        b = lab.at1_battery(s, trials, seed)
        C = lab.at1_constant(s)
        maxima[f"AT1 s={s:g}"] = b.max_ratio
        rows.append(_row("AT1", "random convex", {"s": s, "trials": trials, "seed": seed},
                         b.max_ratio, C, b.violations == 0))
    return rows, maxima


def check_cusp(R=1.0, s=0.5, rs=(2.0 ** -8, 2.0 ** -12, 2.0 ** -16)):
    rows, prev = [], None
    for r in rs:
        integral, bound = lab.at1_cusp_lower_bound(R, r, s)
        ratio = integral / (r * R ** (-1 - 2 * s))
        grows = prev is None or ratio >= 4 * prev
        # here the bound is a lower bound: pass when integral >= bound
        row = CheckRow("AT1-cusp", f"cusp({R:g})", {"R": R, "r": r, "s": s}, integral, bound,
                       integral / bound, integral >= bound * (1 - 1e-12) and grows,
                       {"ratio_to_rR": ratio})
        rows.append(row)
        prev = ratio
    return rows


def check_psi(cases=((0.5, 1.2), (0.25, 0.6))):
    rows = []
    for s, a in cases:
        one = lab.psi(1.0, s, a)
        rows.append(CheckRow("psi(1)", "-", {"s": s, "alpha": a}, one, 0.0, 0.0, one == 0.0))
        v = lab.psi(1e-4, s, a)
        lim = 1 / (2 * s)
        rows.append(CheckRow("psi-limit", "-", {"s": s, "alpha": a, "mu": 1e-4}, v, lim, v / lim,
                             abs(v / lim - 1) <= 0.02))
    return rows


def check_at2_sharp(cases=((1.0, 0.5, 0.5), (1.0, 0.9, 0.5), (2.0, 0.6, 0.25), (0.5, 0.3, 0.25))):
    rows = []
    for R, a, s in cases:
        res = lab.at2_sharpness(R, a, s)
        lo, c, full = res["lower_bound"], res["closed_form"], res["integral"]
        ok = abs(lo / c - 1) <= 1e-5 and full >= lo * (1 - 1e-9)
        rows.append(CheckRow("AT2-sharp", f"ball(0,0,{3 * R:g})", {"R": R, "alpha": a, "s": s},
                             lo, c, lo / c, ok, {"integral": full}))
    return rows


def check_at2_battery(s_list=cal.S_GRID, trials=200, seed=0):
    rows, maxima = [], {}
    for s in s_list:
        if s not in cal.AT2:
            raise ValueError(f"no frozen AT2 constant for s={s:g}; use one of {cal.S_GRID}")
        b = lab.at2_battery(s, trials, seed)
        maxima[f"AT2 s={s:g}"] = b.max_ratio
        rows.append(_row("AT2", "random convex", {"s": s, "trials": trials, "seed": seed},
                         b.max_ratio, cal.AT2[s]))
    return rows, maxima


def check_dist_battery(s_list=cal.S_GRID, trials=100, seed=0):
    rows, maxima = [], {}
    for s in s_list:
        b = lab.dist_battery(s, trials, seed)
        maxima[f"dist s={s:g}"] = b.max_ratio
        rows.append(_row("dist", "random convex", {"s": s, "trials": trials, "seed": seed},
                         b.max_ratio, lab.dist_constant(s), b.violations == 0))
    return rows, maxima


# ---------------------------------------------------------------------------
# plane integrals, cutoff and loss checks

BIS_CASES = (
    ("AT1bis", (0.0, 0.0), None, 0.5, None, 0.05),
    ("AT1bis", (0.5, 0.2), None, 0.5, None, 0.1),
    ("AT2simple_bis", (0.0, 0.0), None, 0.5, 0.5, None),
    ("AT2simple_bis", (0.5, 0.2), None, 0.5, 0.75, None),
    ("AT2bis", (0.0, 0.0), (0.4, 0.1), 0.5, 0.5, None),
    ("dist_bis", (0.1, 0.1), None, 0.5, None, None),
    ("dist_bis", (-0.3, 0.2), None, 1.0, None, None),
)


def _bis_scale(mode, R, alpha, s, r):
    if mode == "AT1bis":
        return r * R ** (-1 - 2 * s)
    if mode == "dist_bis":
        return R ** (-s)
    return R ** (-s - alpha)


def bis_ratios(s=0.25, angles=64):
    """Ratios integral / scale for the fixed plane-integral cases on a stadium."""
    dom = Stadium(1.0, 1.0)
    out = []
    for mode, p, q, R, da, r in BIS_CASES:
        alpha = None if da is None else s + da
        v = lab.bis_integrals(dom, p, q, R, alpha, s, mode, r=r, angles=angles)
        out.append((mode, p, q, R, alpha, r, v, v / _bis_scale(mode, R, alpha, s, r)))
    return out


def check_bis(s=0.25, angles=64):
    rows, maxima = [], {}
    for mode, p, q, R, alpha, r, v, ratio in bis_ratios(s, angles):
        bound = cal.BIS[mode] * _bis_scale(mode, R, alpha, s, r)
        rows.append(_row(mode, "stadium(1,1)", {"p": p, "q": q, "R": R, "alpha": alpha, "r": r,
                                                "s": s}, v, bound))
        maxima[mode] = max(maxima.get(mode, 0.0), ratio)
    v, m = lab.at2bis_majorant(Stadium(1.0, 1.0), (0.0, 0.0), (0.4, 0.1), 0.5, s + 0.5, s,
                               angles=angles)
    rows.append(_row("AT2bis-majorant", "stadium(1,1)", {"s": s}, v, m))
    return rows, maxima


def check_w1(trials=2, probes=10, seed=0):
    rows = []
    for s in (0.25, 0.5):
        res = lab.cutoff_w1_check(Ball((0.0, 0.0), 4.0), cal.W1_R, s, trials, probes, seed)
        rows.append(_row("W1", "ball(0,0,4)", {"R": cal.W1_R, "s": s, "trials": trials},
                         res.ratio, cal.W1[s]))
    return rows, {f"W1 s={r.params['s']:g}": r.value for r in rows}


def check_loss(beta=0.4, s=0.25, h_L=1 / 16, h_v=1 / 32):
    worst = 0.0
    for v in lab.loss_2s_family():
        worst = max(worst, lab.loss_2s_check(v, beta, s, 3.0, h_v=h_v, h_L=h_L).ratio)
    return [_row("loss-2s", "R^2", {"beta": beta, "s": s}, worst, cal.LOSS_2S)], {"loss-2s": worst}


# ---------------------------------------------------------------------------
# geometry and norms


def check_inner_balls(cases=1000, seed=0, samples=1000):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(cases):
        c2, c1 = rng.uniform(-2, 2), rng.uniform(-1, 1)
        h = GraphPatch.quadratic(c2, c1, 0.0, L=2.0, kappa=1.0)
        while True:
            x = rng.uniform(-1, 1)
            p = np.array([x, float(h.h(x))])
            if np.linalg.norm(p) <= 1.0:
                break
        q, r = inner_sphere_center(h, p, 1.0, max(h.K, 1e-12))
        bad += not verify_inner_ball(h, q, r, samples, int(rng.integers(2 ** 31)))
    return [CheckRow("inner-ball", "quadratic graphs", {"cases": cases}, bad, 0, 0.0, bad == 0)]


BAND_CASES = (
    ("ball(0,0,3)", lambda: Ball((0.0, 0.0), 3.0), (0.0, 0.0), 1.0, 5.0),
    ("stadium(1,1)", lambda: Stadium(1.0, 1.0), (0.5, 0.0), 0.5, 3.0),
    ("counterexample(0.05)", CounterexampleDomain, (-7.0, 0.0), 0.5, 3.0),
    ("counterexample(0.05)", CounterexampleDomain, (0.0, 0.0), 2.0, 6.0),
)


def band_ratios(mus=(0.02, 0.05, 0.1), samples=10 ** 5, seed=0):
    out = []
    for name, make, P, R1, R2 in BAND_CASES:
        dom = make()
        for mu in mus:
            b = band_measure(dom, P, R1, R2, mu, samples, seed)
            out.append((name, P, R1, R2, mu, b.band_volume / (mu * b.boundary_area)))
    return out


def check_band(samples=10 ** 5, seed=0):
    rows = []
    for name, P, R1, R2, mu, ratio in band_ratios(samples=samples, seed=seed):
        rows.append(_row("band", name, {"P": P, "R1": R1, "R2": R2, "mu": mu}, ratio, cal.BAND))
    return rows, {"band": max(r.value for r in rows)}


def annulus_ratios(Rs=(0.5, 1.0, 2.0, 4.0)):
    dom = CounterexampleDomain()
    return [(R, annulus_boundary_area(dom, R) / R) for R in Rs]


def check_annulus():
    rows = [_row("annulus", "counterexample(0.05)", {"R": R}, v, cal.ANNULUS)
            for R, v in annulus_ratios()]
    return rows, {"annulus": max(r.value for r in rows)}


def check_level_set():
    h = GraphPatch.quadratic(0.5, 0.0, 0.0, L=2.0, kappa=1.0)
    v = level_set_lipschitz_probe(h, cal.LEVEL_SET_T, probes=200)
    return [_row("level-set", "quadratic graph", {"t": cal.LEVEL_SET_T}, v, cal.LEVEL_SET_K)]


def norm_family(h=1 / 32, count=20):
    """Twenty smooth functions on the unit ball, vanishing on its boundary."""
    dom = Ball((0.0, 0.0), 1.0)
    out = []
    for k in range(count):
        rng = np.random.default_rng(1000 + k)
        a = rng.uniform(-4, 4, 2)
        ph, c = rng.uniform(0, 2 * np.pi), rng.uniform(-1, 1)
        z = rng.uniform(-0.5, 0.5, 2)

        def f(x, a=a, ph=ph, c=c, z=z):
            r2 = np.sum(x * x, axis=1)
            g = np.sin(x @ a + ph) + c * r2 + np.exp(-4 * np.sum((x - z) ** 2, axis=1))
            return (1 - r2) * g

        out.append(GridFunction.sample(dom, h, f))
    return out


def norm_ratio_max(alpha1=0.3, alpha2=0.9, sigma=-0.25, h=1 / 32):
    return max(norm_monotonicity_check(u, None, alpha1, alpha2, sigma) for u in norm_family(h))


def check_norms():
    v = norm_ratio_max()
    ok = abs(v / cal.NORMS - 1) <= REL
    return [_row("NORMS", "ball(0,0,1)", {"alpha1": 0.3, "alpha2": 0.9, "sigma": -0.25},
                 v, cal.NORMS, ok)]


# ---------------------------------------------------------------------------
# suite runner

SUITES = ("quick", "at1-ball", "at1", "cusp", "psi", "at2-sharp", "at2", "dist", "bis", "w1",
          "loss", "geometry", "norms", "all")


def run_suite(name, s_list=None, trials=20, seed=0):
    """Run a named suite; returns (rows, battery maxima)."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    rows, maxima = [], {}

    def add(res):
        if isinstance(res, tuple):
            rows.extend(res[0])
            maxima.update(res[1])
        else:
            rows.extend(res)

    want = lambda k: name in (k, "all") or (name == "quick" and k in QUICK)
    if want("at1-ball"):
        add(check_at1_ball())
    if want("at1"):
        add(check_at1_battery(tuple(s_list or (0.25, 0.5)), trials, seed))
    if want("cusp"):
        add(check_cusp())
    if want("psi"):
        add(check_psi())
    if want("at2-sharp"):
        add(check_at2_sharp())
    if want("at2"):
        add(check_at2_battery(tuple(s_list or cal.S_GRID), trials, seed))
    if want("dist"):
        add(check_dist_battery(tuple(s_list or cal.S_GRID), trials, seed))
    if want("bis"):
        add(check_bis())
    if want("w1"):
        add(check_w1(seed=seed))
    if want("loss"):
        add(check_loss())
    if want("geometry"):
        add(check_inner_balls(seed=seed))
        add(check_band())
        add(check_annulus())
        add(check_level_set())
    if want("norms"):
        add(check_norms())
    return rows, maxima


QUICK = ("at1-ball", "at1", "cusp", "psi", "at2-sharp")
