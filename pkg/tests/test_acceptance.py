"""Acceptance criteria 1-12, each at its stated tolerance and time budget."""
import math
import time

import numpy as np
import pytest

from afrac import calibration as cal
from afrac import verify
from afrac.experiments import counterexample_experiment, regularity_gap_probe
from afrac.geometry import Ball, ConvexPolygon, CounterexampleDomain, Interval
from afrac.grid import GridFunction
from afrac.holder import local_exponent_fit, split_alpha
from afrac.lemma_lab import at1_battery, at1_constant, at1_integral
from afrac.operator import apply_L_point, barrier, barrier_breaks, barrier_constant_1d
from afrac.solver import assemble, solve, solve_problem
from afrac.spectral import SpectralMeasure


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _finish(report, number, ok, detail, clock, budget):
    in_time = clock.elapsed <= budget
    report(number, ok and in_time, f"{detail}; {clock.elapsed:.1f}s of {budget:g}s")
    assert ok, detail
    assert in_time, f"took {clock.elapsed:.1f}s, budget {budget}s"


def test_criterion_01_barrier_constancy(acceptance_report):
    a = SpectralMeasure.axis(2)
    rng = np.random.default_rng(0)
    rad = 0.9 * np.sqrt(rng.random(20))
    ang = 2 * np.pi * rng.random(20)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    with Clock() as c:
        stats = {}
        for s in (0.25, 0.5, 0.75):
            u = lambda x, s=s: barrier(x, s)
            v = np.array([apply_L_point(u, x, a, s, breaks=barrier_breaks, support_radius=1.0)
                          for x in pts])
            stats[s] = (v.mean(), v.std() / abs(v.mean()))
        c0 = barrier_constant_1d(0.5)
    ok = (all(r <= 1e-3 for _, r in stats.values()) and abs(stats[0.5][0] - 2.0) <= 5e-3
          and abs(c0 - 1.0) <= 1e-6)
    detail = ", ".join(f"s={s}: mean {m:.6f} rel_std {r:.1e}" for s, (m, r) in stats.items())
    _finish(acceptance_report, 1, ok, f"{detail}, c_o(0.5)={c0:.9f}", c, 30)


def test_criterion_02_at1_ball_closed_form(acceptance_report):
    with Clock() as c:
        errs = []
        for R, r, s in ((1.0, 0.1, 0.5), (2.0, 0.3, 0.25)):
            v = at1_integral(Ball((0, 0), 3 * R), (0, 0), R, r, (1.0, 0.0), s)
            exact = ((3 * R - r) ** (-2 * s) - (3 * R) ** (-2 * s)) / (2 * s)
            errs.append(abs(v / exact - 1))
    _finish(acceptance_report, 2, max(errs) <= 1e-6, f"max rel err {max(errs):.1e}", c, 5)


def test_criterion_03_at1_explicit_constant(acceptance_report):
    with Clock() as c:
        res = {s: at1_battery(s, trials=200, seed=0) for s in (0.25, 0.5)}
    ok = all(b.violations == 0 and len(b.rows) == 200 for b in res.values())
    detail = ", ".join(f"s={s}: max ratio {b.max_ratio:.4f} vs {at1_constant(s):.4f}, "
                       f"{b.violations} violations" for s, b in res.items())
    _finish(acceptance_report, 3, ok, detail, c, 120)


def test_criterion_04_cusp(acceptance_report):
    with Clock() as c:
        rows = verify.check_cusp()
    ratios = [r.extra["ratio_to_rR"] for r in rows]
    ok = all(r.passed for r in rows) and len(rows) == 3
    detail = "integral/bound " + ", ".join(f"{r.ratio:.3f}" for r in rows)
    detail += "; ratio to rR^(-1-2s) " + ", ".join(f"{v:.3g}" for v in ratios)
    _finish(acceptance_report, 4, ok, detail, c, 60)


def test_criterion_05_psi(acceptance_report):
    with Clock() as c:
        rows = verify.check_psi()
    ok = all(r.passed for r in rows)
    detail = ", ".join(f"{r.lemma}{tuple(r.params.values())[:2]}={r.value:.5f}" for r in rows)
    _finish(acceptance_report, 5, ok, detail, c, 5)


def test_criterion_06_at2_sharpness(acceptance_report):
    with Clock() as c:
        rows = verify.check_at2_sharp()
    err = max(abs(r.ratio - 1) for r in rows)
    ok = all(r.passed for r in rows) and err <= 1e-5
    _finish(acceptance_report, 6, ok, f"max rel err {err:.1e} over {len(rows)} cases", c, 5)


def test_criterion_07_solver_oracle(acceptance_report):
    s = 0.5
    with Clock() as c:
        errs = []
        for k in (7, 8, 9, 10):
            u = solve_problem(Interval(-1.0, 1.0), s, math.gamma(1 + 2 * s), 2.0 ** -k)
            x = np.asarray(u.nodes()).reshape(u.values.size, -1)[:, 0]
            sel = np.abs(x) <= 0.5
            errs.append(float(np.max(np.abs(u.values[sel] - np.sqrt(1 - x[sel] ** 2)))))
    ok = errs[-1] <= 1e-2 and all(a > b for a, b in zip(errs, errs[1:]))
    _finish(acceptance_report, 7, ok, "errors " + ", ".join(f"{e:.2e}" for e in errs), c, 60)


def _max_principle_cases():
    tri = ConvexPolygon(((0.0, 0.0), (2.0, 0.0), (0.5, 1.5)))
    hexagon = ConvexPolygon(tuple((math.cos(k * math.pi / 3), math.sin(k * math.pi / 3))
                                  for k in range(6)))
    needle = ConvexPolygon(((-2.0, -0.2), (2.0, -0.25), (2.0, 0.25), (-2.0, 0.2)))
    ce = CounterexampleDomain()
    cases = []
    for s in (0.25, 0.5):
        cases += [(Ball((0, 0), 1), s, 1 / 16, "one"), (Ball((0, 0), 1), s, 1 / 32, "random"),
                  (Ball((0.3, -0.2), 0.7), s, 1 / 32, "point"),
                  (ConvexPolygon(((-1, -1), (1, -1), (1, 1), (-1, 1))), s, 1 / 16, "one"),
                  (tri, s, 1 / 32, "random"), (hexagon, s, 1 / 32, "sparse"),
                  (needle, s, 1 / 32, "random"), (ce, s, 1 / 8, "one"), (ce, s, 1 / 8, "random"),
                  (ce, s, 1 / 8, "sparse")]
    return cases


def test_criterion_08_maximum_principle(acceptance_report):
    rng = np.random.default_rng(8)
    cases = _max_principle_cases()
    with Clock() as c:
        bad, worst = 0, 0.0
        for dom, s, h, kind in cases:
            sys = assemble(dom, None, s, h)
            m = sys.grid.mask
            if kind == "one":
                g = np.where(m, 1.0, 0.0)
            elif kind == "random":
                g = np.where(m, rng.random(sys.shape), 0.0)
            elif kind == "sparse":
                g = np.where(m & (rng.random(sys.shape) < 0.02), rng.random(sys.shape), 0.0)
            else:
                g = np.zeros(sys.shape)
                g.reshape(-1)[sys.index[sys.n // 2]] = 1.0
            u = solve(sys, g)
            vals = u.values[m]
            worst = min(worst, float(vals.min()))
            bad += int(np.any(vals < 0))
    ok = bad == 0 and len(cases) == 20
    _finish(acceptance_report, 8, ok, f"{len(cases)} cases, {bad} violations, min u {worst:.3g}",
            c, 300)


def test_criterion_09_counterexample_scaling(acceptance_report):
    with Clock() as c:
        rep = counterexample_experiment(0.25, 2.0 ** -np.arange(3, 8), 2.0 ** -6)
    sm = rep.summary
    ok = (abs(sm["gamma_boundary"] - 0.25) <= 0.1 and abs(sm["gamma1"] - 0.25) <= 0.1
          and sm["J1_positive"] and sm["gamma2"] >= sm["gamma1"] + 0.05
          and all(v >= 0.9 for v in sm["r2"].values()))
    detail = (f"gamma_boundary {sm['gamma_boundary']:.4f}, gamma1 {sm['gamma1']:.4f}, "
              f"gamma2 {sm['gamma2']:.4f}, r2 " + ", ".join(f"{k} {v:.4f}"
                                                        for k, v in sm["r2"].items()))
    _finish(acceptance_report, 9, ok, detail, c, 900)


def test_criterion_10_regularity_gap(acceptance_report):
    with Clock() as c:
        res = [regularity_gap_probe(0.25, h) for h in (2.0 ** -6, 2.0 ** -7)]
    gc = [r["convex"]["gamma"] for r in res]
    gn = [r["nonconvex"]["gamma"] for r in res]
    ok = (all(g <= 0.95 for g in gn) and all(g >= 1.3 for g in gc)
          and all(r["gap"] >= 0.3 for r in res)
          and abs(gc[0] - gc[1]) <= 0.1 and abs(gn[0] - gn[1]) <= 0.1)
    detail = (f"convex {gc[0]:.4f}/{gc[1]:.4f}, counterexample {gn[0]:.4f}/{gn[1]:.4f}, "
              f"gap {res[0]['gap']:.4f}/{res[1]['gap']:.4f} at h=2^-6/2^-7")
    _finish(acceptance_report, 10, ok, detail, c, 1200)


def test_criterion_11_appendix_geometry(acceptance_report):
    with Clock() as c:
        inner = verify.check_inner_balls(cases=1000, seed=0)[0]
        band = verify.band_ratios()
        ann = verify.annulus_ratios()
    band_max = max(r for *_, r in band)
    ann_max = max(v for _, v in ann)
    ok = (inner.passed and inner.value == 0
          and all(r <= cal.BAND * (1 + verify.REL) for *_, r in band)
          and abs(band_max / cal.BAND - 1) <= verify.REL
          and ann_max <= cal.ANNULUS * (1 + verify.REL) and len(ann) == 4)
    detail = (f"inner-ball violations {int(inner.value)}/1000, band max {band_max:.6f} "
              f"(C_cal {cal.BAND:.6f}), annulus/R max {ann_max:.4f} over R=0.5..4")
    _finish(acceptance_report, 11, ok, detail, c, 180)


def test_criterion_12_norm_machinery(acceptance_report):
    with Clock() as c:
        ratio = verify.norm_ratio_max()
        k, ap = split_alpha(1.0)
        dom = Ball((0, 0), 2)
        fits = {}
        for g in (0.3, 0.75, 1.5):
            u = GridFunction.sample(dom, 1 / 64, lambda x, g=g: np.abs(x[:, 0]) ** g)
            fits[g] = local_exponent_fit(u, (0.0, 0.0), (1.0, 0.0), 2.0 ** -np.arange(0, 5)).gamma
    ok = (abs(ratio / cal.NORMS - 1) <= verify.REL and (k, ap) == (0, 1.0)
          and all(abs(v - g) <= 0.02 for g, v in fits.items()))
    detail = (f"NORMS ratio {ratio:.6f} (frozen {cal.NORMS:.6f}), split_alpha(1)=({k}, {ap}), "
              "fits " + ", ".join(f"{g}->{v:.4f}" for g, v in fits.items()))
    _finish(acceptance_report, 12, ok, detail, c, 60)
