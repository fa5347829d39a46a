import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afrac.geometry import Ball
from afrac.grid import GridFunction
from afrac.holder import (FlatFunctionError, holder_norm, holder_seminorm, local_exponent_fit,
                          norm_monotonicity_check, split_alpha, weighted_norm)
from afrac.operator import barrier
from afrac.solver import solve_problem

B1 = Ball((0, 0), 1)
SCALES = 2.0 ** -np.arange(2, 10)


def test_split_alpha_examples():
    assert split_alpha(0.7) == (0, 0.7)
    assert split_alpha(1.0) == (0, 1.0)
    k, ap = split_alpha(1.75)
    assert k == 1 and ap == pytest.approx(0.75)
    assert split_alpha(2.0) == (1, 1.0)
    with pytest.raises(ValueError):
        split_alpha(0.0)


@given(st.floats(1e-3, 10))
def test_split_alpha_property(alpha):
    k, ap = split_alpha(alpha)
    assert isinstance(k, int) and k >= 0
    assert 0 < ap <= 1
    assert k + ap == pytest.approx(alpha, rel=1e-12)


def test_holder_norm_constant():
    u = GridFunction.sample(B1, 1 / 16, lambda x: np.full(len(x), 5.0))
    assert holder_norm(u, 0.5, region=B1.contains) == pytest.approx(5.0, abs=1e-12)


def test_holder_norm_linear_approaches_closed_form():
    exact = 1 + math.sqrt(2)
    vals = [holder_norm(GridFunction.sample(B1, h, lambda x: x[:, 0]), 0.5, region=B1.contains)
            for h in (1 / 16, 1 / 32)]
    # sampled suprema approach the closed-ball value from below
    assert vals[0] < vals[1] < exact
    assert vals[1] == pytest.approx(exact, rel=0.03)


def test_holder_norm_barrier_stable_under_refinement():
    vals = [holder_norm(GridFunction.sample(B1, h, lambda x: barrier(x, 0.5)), 0.5,
                        region=B1.contains) for h in (1 / 16, 1 / 32)]
    assert abs(vals[1] / vals[0] - 1) <= 0.1


def test_holder_norm_errors():
    u = GridFunction.sample(B1, 1 / 8, lambda x: x[:, 0])
    with pytest.raises(ValueError):
        holder_norm(u, 3.5)
    with pytest.raises(ValueError):
        holder_norm(u, 0.5, region=lambda x: np.zeros(len(x), dtype=bool))


def test_weighted_norm_unweighted_case_matches_classical():
    u = GridFunction.sample(B1, 1 / 16, lambda x: barrier(x, 0.5))
    w = weighted_norm(u, B1, 0.5, -0.5)
    assert w.seminorm == pytest.approx(holder_seminorm(u, 0.5, region=B1.contains), rel=1e-12)


def test_weighted_norm_constant():
    u = GridFunction.sample(B1, 1 / 16, lambda x: np.ones(len(x)))
    w = weighted_norm(u, B1, 0.5, 1.0)
    assert w.sup_terms == [pytest.approx(1.0)]
    assert w.seminorm == 0.0 and w.total == pytest.approx(1.0)


def test_weighted_norm_of_solution_is_finite():
    s = 0.25
    u = solve_problem(B1, s, 1.0, 1 / 16)
    w = weighted_norm(u, B1, 0.75 + 2 * s - 1e-3, -s)
    assert w.k == 1 and math.isfinite(w.total) and w.total > 0
    assert len(w.sup_terms) == 2


def test_weighted_norm_validation():
    u = GridFunction.sample(B1, 1 / 16, lambda x: x[:, 0])
    with pytest.raises(ValueError):
        weighted_norm(u, B1, 0.5, 3.0)
    with pytest.raises(ValueError):
        weighted_norm(u, B1, 3.5, 0.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10))
def test_weighted_norm_is_homogeneous(c):
    u = GridFunction.sample(B1, 1 / 8, lambda x: barrier(x, 0.5) * (1 + x[:, 0]))
    n1 = weighted_norm(u, B1, 0.6, -0.25).total
    n2 = weighted_norm(u.with_values(c * u.values), B1, 0.6, -0.25).total
    assert n2 == pytest.approx(c * n1, rel=1e-12)


def test_norm_monotonicity_guards():
    z = GridFunction.sample(B1, 1 / 16)
    assert norm_monotonicity_check(z, B1, 0.3, 0.9, -0.25) == 0.0
    u = GridFunction.sample(B1, 1 / 16, lambda x: barrier(x, 0.5))
    assert norm_monotonicity_check(u, B1, 0.5, 0.5, -0.25) == 1.0
    with pytest.raises(ValueError):
        norm_monotonicity_check(u, B1, 0.9, 0.3, -0.25)


@pytest.mark.parametrize("g", [0.3, 0.75, 1.5])
def test_exponent_fit_recovers_powers(g):
    fit = local_exponent_fit(lambda x: abs(x[0]) ** g, (0.0, 0.0), (1.0, 0.0), SCALES)
    assert fit.gamma == pytest.approx(g, abs=0.02)
    assert fit.r2 >= 0.99


def test_exponent_fit_second_order_quadratic():
    gamma, r2 = local_exponent_fit(lambda x: x[0] ** 2 + x[1], (0.1, 0.0), (1.0, 0.0), SCALES,
                                   order=2)
    assert gamma == pytest.approx(2.0, abs=0.02)


def test_exponent_fit_barrier_near_boundary():
    # distance to the sphere at x0 = (1, 0); the barrier behaves like d^s
    g = local_exponent_fit(lambda x: barrier(x, 0.25), (1.0, 0.0), (-1.0, 0.0), SCALES).gamma
    assert g == pytest.approx(0.25, abs=0.02)


def test_exponent_fit_on_grid():
    u = GridFunction.sample(Ball((0, 0), 2), 1 / 64, lambda x: np.abs(x[:, 0]) ** 0.75)
    fit = local_exponent_fit(u, (0.0, 0.0), (1.0, 0.0), 2.0 ** -np.arange(0, 5))
    assert fit.gamma == pytest.approx(0.75, abs=0.02)
    with pytest.raises(ValueError):
        local_exponent_fit(u, (0.0, 0.0), (1.0, 0.0), 2.0 ** -np.arange(3, 8))


def test_exponent_fit_errors():
    with pytest.raises(FlatFunctionError):
        local_exponent_fit(lambda x: 1.0, (0.0, 0.0), (1.0, 0.0), SCALES)
    with pytest.raises(ValueError):
        local_exponent_fit(lambda x: x[0], (0.0, 0.0), (1.0, 0.0), SCALES[:3])
    with pytest.raises(ValueError):
        local_exponent_fit(lambda x: x[0], (0.0, 0.0), (1.0, 0.0), SCALES, order=3)
