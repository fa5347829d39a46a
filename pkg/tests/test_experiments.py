import math

import numpy as np
import pytest

from afrac.experiments import (FitRecord, RegularityReport, convex_regularity_experiment,
                               counterexample_experiment, dyadic_scales, gap_scales, j_integrals,
                               power_fit, regularity_gap_probe)
from afrac.geometry import Ball, CounterexampleDomain
from afrac.holder import FlatFunctionError
from afrac.solver import solve_problem


@pytest.fixture(scope="module")
def coarse_counterexample():
    return solve_problem(CounterexampleDomain(), 0.25, 1.0, 2.0 ** -5)


ETA = 2.0 ** -np.arange(2, 7)


def test_power_fit_and_scales():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    g, r2 = power_fit(x, 3 * x ** 0.6)
    assert g == pytest.approx(0.6, abs=1e-12) and r2 == pytest.approx(1.0)
    with pytest.raises(FlatFunctionError):
        power_fit(x, [1.0, 0.0, 1.0, 1.0])
    sc = dyadic_scales(1.0, 8.0)
    assert sc[0] == 1.0 and sc[-1] == pytest.approx(8.0) and len(sc) == 7
    assert len(gap_scales(2.0 ** -6)) == 8


def test_report_flags_unreliable_records():
    rep = RegularityReport(records=[FitRecord((0, 0), (1, 0), 2, 1.8, 0.95, (0.1, 1), 0.1, "a"),
                                    FitRecord((0, 0), (0, 1), 2, 0.2, 0.5, (0.1, 1), 0.1, "a")])
    assert len(rep.flagged) == 1 and len(rep.reliable("a")) == 1
    assert rep.to_dict()["records"][1]["reliable"] is False


def test_convex_experiment_flat_rhs():
    with pytest.raises(FlatFunctionError):
        convex_regularity_experiment(0.25, (2.0 ** -7,), probe_count=1, g=0.0)


def test_convex_experiment_rejects_coarse_grid():
    with pytest.raises(ValueError):
        convex_regularity_experiment(0.25, (2.0 ** -6,), probe_count=1)


def test_convex_experiment_interior_exponents():
    rep = convex_regularity_experiment(0.25, (2.0 ** -7, 2.0 ** -8), probe_count=2)
    a, b = rep.summary["h=0.0078125"], rep.summary["h=0.00390625"]
    assert a["reliable"] == 8 and b["reliable"] == 8
    assert min(a["min_gamma"], b["min_gamma"]) >= 1.6
    assert abs(b["ratio"] / a["ratio"] - 1) <= 0.2
    assert len(rep.solver) == 2


def test_eta_guards(coarse_counterexample):
    u = coarse_counterexample
    with pytest.raises(ValueError):
        counterexample_experiment(eta_list=ETA[:4], h=u.h, u=u)
    with pytest.raises(ValueError):
        counterexample_experiment(eta_list=2.0 ** -np.arange(3, 8), h=u.h, u=u)


def test_counterexample_signal_at_coarse_grid(coarse_counterexample):
    u = coarse_counterexample
    rep = counterexample_experiment(eta_list=ETA, h=u.h, u=u)
    sm = rep.summary
    assert sm["J1_positive"]
    assert sm["gamma_boundary"] == pytest.approx(0.25, abs=0.1)
    assert sm["gamma2"] >= sm["gamma1"] + 0.05
    assert set(rep.tables) == {"eta", "J1", "J2", "u_boundary"}


def test_cutoff_perturbation_keeps_gamma1(coarse_counterexample):
    u = coarse_counterexample
    g_a = counterexample_experiment(eta_list=ETA, h=u.h, u=u).summary["gamma1"]
    g_b = counterexample_experiment(eta_list=ETA, h=u.h, u=u,
                                    cutoff_radii=(1.2, 1.8)).summary["gamma1"]
    assert abs(g_a - g_b) < 0.05


def test_j_integrals_vanish_for_zero_solution(coarse_counterexample):
    z = coarse_counterexample.with_values(np.zeros(coarse_counterexample.shape))
    J1, J2 = j_integrals(z, ETA, 0.25)
    assert np.all(J1 == 0) and np.all(J2 == 0)


def test_gap_probe_same_domain_twice():
    ball = Ball((0.0, 0.0), 4.0)
    g = regularity_gap_probe(h=2.0 ** -4, convex=ball, nonconvex=ball)
    assert g["gap"] == pytest.approx(0.0, abs=1e-12)
    assert math.isfinite(g["convex"]["gamma"])
