import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afrac.geometry import Ball, ConvexPolygon, CounterexampleDomain, Stadium, Strip
from afrac.lemma_lab import (at1_battery, at1_bound_check, at1_constant,
                             at1_cusp_lower_bound, at1_integral, at2_battery, at2_integral,
                             at2_sharpness, at2_simple_integral, at2bis_majorant, bis_integrals,
                             bis_integrals_mc, bump, cutoff, dist_constant, dist_tail_integral,
                             loss_2s_check, loss_2s_family, psi, smooth_step, w1_ratio)

B3 = Ball((0.0, 0.0), 3.0)
E1 = (1.0, 0.0)
STADIUM = Stadium(1.0, 1.0)


# AT1 ---------------------------------------------------------------------------


def test_at1_ball_closed_form():
    assert at1_integral(B3, (0, 0), 1.0, 0.1, E1, 0.5) == pytest.approx(0.0114943, abs=1e-7)
    v = at1_integral(Ball((0, 0), 6.0), (0, 0), 2.0, 0.3, E1, 0.25)
    exact = (5.7 ** -0.5 - 6.0 ** -0.5) / 0.5
    assert v == pytest.approx(exact, rel=1e-6)


def test_at1_degenerate_cases():
    assert at1_integral(B3, (0, 0), 1.0, 0.0, E1, 0.5) == 0.0
    assert at1_bound_check(B3, (0, 0), 1.0, 0.0, E1, 0.5) == 0.0
    # the axis ray never leaves the strip
    assert at1_integral(Strip(0.7), (0, 0), 0.5, 0.1, E1, 0.5) == 0.0


def test_at1_errors():
    with pytest.raises(ValueError):
        at1_integral(CounterexampleDomain(), (0, 0), 1.0, 0.1, E1, 0.5)
    with pytest.raises(ValueError):
        at1_integral(B3, (0, 0), 1.0, 0.6, E1, 0.5)
    with pytest.raises(ValueError):
        at1_integral(B3, (2.5, 0), 1.0, 0.1, E1, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.3, 1.0), st.floats(0.01, 0.14),
       st.sampled_from([0.25, 0.5, 0.75]))
def test_at1_monotone_in_R_and_r(t, R, r, s):
    dom = ConvexPolygon(((-3.0, -2.0), (4.0, -2.5), (3.0, 3.0), (-2.0, 2.0)))
    w = (math.cos(t), math.sin(t))
    base = at1_integral(dom, (0, 0), R, r, w, s)
    assert at1_integral(dom, (0, 0), 1.1 * R, r, w, s) <= base * (1 + 1e-9) + 1e-15
    assert at1_integral(dom, (0, 0), R, 1.05 * r, w, s) >= base * (1 - 1e-9)
    assert base <= at1_constant(s) * r * R ** (-1 - 2 * s) * (1 + 1e-3)


def test_at1_small_battery_has_no_violation():
    b = at1_battery(0.5, trials=20, seed=5)
    assert b.violations == 0 and 0 < b.max_ratio <= 4 * (1 + 1e-3)
    assert len(b.rows) == 20


def test_cusp_lower_bound():
    integral, bound = at1_cusp_lower_bound(1.0, 2.0 ** -8, 0.5)
    assert bound == pytest.approx(1 / math.log(256), abs=1e-4)
    assert integral >= bound
    integral, _ = at1_cusp_lower_bound(1.0, 2.0 ** -16, 0.5)
    assert integral / 2.0 ** -16 > 1e3
    # the convex ball keeps the ratio below the explicit constant
    assert at1_bound_check(B3, (0, 0), 1.0, 2.0 ** -16, E1, 0.5) <= 4
    with pytest.raises(ValueError):
        at1_cusp_lower_bound(1.0, 0.5, 0.5)


# AT2 and psi -------------------------------------------------------------------


@pytest.mark.parametrize("s", [0.25, 0.5])
def test_at2_zero_exponent_is_plain_kernel(s):
    assert at2_simple_integral(B3, (0, 0), 1.0, s, E1, s) == pytest.approx(
        (1 - 3.0 ** (-2 * s)) / (2 * s), rel=1e-10)


@pytest.mark.parametrize("R,alpha,s", [(1.0, 0.5, 0.5), (1.0, 0.9, 0.5), (2.0, 0.6, 0.25)])
def test_at2_sharpness(R, alpha, s):
    res = at2_sharpness(R, alpha, s)
    assert res["lower_bound"] == pytest.approx(res["closed_form"], rel=1e-5)
    assert res["integral"] >= res["lower_bound"]


def test_at2_weight_increases_integral():
    dom = ConvexPolygon(((-5.0, -0.9), (5.0, -0.9), (5.0, 0.9), (-5.0, 0.9)))
    w = (0.995, 0.0995)
    vals = [at2_integral(dom, (0, 0), (0.2, 0.1), 0.5, 0.25 + e, w, 0.25) for e in (0.0, 0.3, 0.6)]
    # d <= 0.9 everywhere, so larger exponents weigh more
    assert vals[0] < vals[1] < vals[2]
    assert at2_simple_integral(dom, (0, 0), 0.5, 0.5, w, 0.25) == pytest.approx(
        at2_integral(dom, (0, 0), (0, 0), 0.5, 0.5, w, 0.25))


def test_at2_errors():
    with pytest.raises(ValueError):
        at2_integral(B3, (0, 0), (0, 0), 1.0, 0.1, E1, 0.25)
    with pytest.raises(ValueError):
        at2_integral(B3, (0, 0), (0, 0), 1.0, 1.3, E1, 0.25)
    with pytest.raises(ValueError):
        at2_integral(CounterexampleDomain(), (0, 0), (0, 0), 1.0, 0.5, E1, 0.25)


def test_psi_values():
    assert psi(1.0, 0.5, 1.2) == 0.0
    assert psi(1e-4, 0.5, 1.2) == pytest.approx(1.0, rel=0.02)
    assert psi(1e-4, 0.25, 0.6) == pytest.approx(2.0, rel=0.02)
    with pytest.raises(ValueError):
        psi(0.0, 0.5, 1.2)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0, 0.99), st.floats(1e-3, 1.0))
def test_psi_nonnegative_and_bounded(s, e, mu):
    v = psi(mu, s, s + e)
    assert v >= 0
    assert math.isfinite(v)


# distance tail -----------------------------------------------------------------


def test_dist_tail_ball_closed_form():
    assert dist_tail_integral(B3, (0, 0), 1.0, E1, 0.5) == pytest.approx(1.6593452237, rel=1e-9)


def test_dist_tail_nearby_boundary_gives_smaller_value():
    dom = Ball((1.0, 0.0), 3.0)
    w = (-1.0, 0.0)
    near = dist_tail_integral(dom, (-0.99, 0.0), 1.0, w, 0.5)
    far = dist_tail_integral(dom, (0.99, 0.0), 1.0, w, 0.5)
    assert near < far


def test_dist_tail_errors():
    with pytest.raises(ValueError):
        dist_tail_integral(B3, (0, 0), 0.5, E1, 0.5)
    with pytest.raises(ValueError):
        dist_tail_integral(B3, (1.5, 0), 1.0, E1, 0.5)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_dist_constant_bounds_ball(s):
    for R in (1.0, 1.5, 2.5):
        assert dist_tail_integral(B3, (0.3, 0.2), R, (0.6, 0.8), s) * R ** s <= dist_constant(s)


def test_small_at2_battery_runs():
    b = at2_battery(0.5, trials=10, seed=1)
    assert len(b.rows) == 10 and math.isfinite(b.max_ratio) and b.max_ratio > 0


# plane integrals ---------------------------------------------------------------


@pytest.mark.parametrize("s", [0.25, 0.5])
def test_bis_dist_matches_radial(s):
    v = bis_integrals(B3, (0, 0), None, 1.0, None, s, "dist_bis", angles=16)
    assert v == pytest.approx(2 * math.pi * dist_tail_integral(B3, (0, 0), 1.0, E1, s), rel=1e-8)


def test_bis_unit_weight_matches_radial():
    s = 0.25
    v = bis_integrals(B3, (0, 0), None, 1.0, s, s, "AT2simple_bis", angles=16)
    assert v == pytest.approx(2 * math.pi * (1 - 3.0 ** (-2 * s)) / (2 * s), rel=1e-8)


@pytest.mark.parametrize("mode,alpha,r", [("AT1bis", None, 0.05), ("AT2simple_bis", 0.25, None),
                                          ("dist_bis", None, None)])
def test_bis_matches_monte_carlo(mode, alpha, r):
    v = bis_integrals(STADIUM, (0, 0), None, 0.5, alpha, 0.25, mode, r=r, angles=64)
    est, err = bis_integrals_mc(STADIUM, (0, 0), None, 0.5, alpha, 0.25, mode, r=r,
                                samples=4 * 10 ** 5)
    assert abs(v - est) <= 4 * err


def test_bis_majorant():
    v, m = at2bis_majorant(STADIUM, (0, 0), (0.4, 0.1), 0.5, 0.75, 0.25, angles=32)
    assert 0 < v <= m


def test_bis_errors():
    square = ConvexPolygon(((-2.0, -2.0), (2.0, -2.0), (2.0, 2.0), (-2.0, 2.0)))
    with pytest.raises(ValueError):
        bis_integrals(square, (0, 0), None, 0.5, None, 0.25, "dist_bis")
    with pytest.raises(ValueError):
        bis_integrals(STADIUM, (0, 0), None, 0.5, None, 0.25, "nope")
    with pytest.raises(ValueError):
        bis_integrals(STADIUM, (0, 0), None, 0.5, None, 0.25, "AT1bis", r=0.3)


# cutoff and loss ---------------------------------------------------------------


def test_smooth_step_and_cutoff():
    assert smooth_step(-1.0) == 0.0 and smooth_step(2.0) == 1.0
    assert smooth_step(0.5) == pytest.approx(0.5)
    x = np.array([[0.5, 0.0], [3.0, 0.0]])
    assert np.allclose(cutoff(x), [1.0, 0.0])


def test_w1_zero_function():
    res = w1_ratio(Ball((0, 0), 4.0), 1.5, 0.5, lambda x: np.zeros(len(np.atleast_2d(x))))
    assert res.ratio == 0.0


def test_loss_zero_function():
    res = loss_2s_check(lambda x: np.zeros(len(np.atleast_2d(x))), 0.4, 0.25, 1.0, h_L=1 / 8,
                        h_v=1 / 8)
    assert res.ratio == 0.0


def test_loss_guards():
    with pytest.raises(ValueError):
        loss_2s_check(bump(), 0.5, 0.25, 1.0)
    with pytest.raises(ValueError):
        loss_2s_check(bump(), 1.2, 0.25, 1.0)


def test_loss_smooth_bump_is_finite():
    res = loss_2s_check(bump((0, 0), 1.5), 0.4, 0.25, 1.5)
    assert 0 < res.ratio < 10


def test_loss_critical_power_far_away():
    beta, s = 0.4, 0.25
    x0 = np.array([2.5, 0.0])
    cut = bump((2.5, 0.0), 1.0)
    v = lambda x: np.linalg.norm(np.atleast_2d(x) - x0, axis=1) ** (beta + 2 * s) * cut(x)
    res = loss_2s_check(v, beta, s, 3.5)
    assert math.isfinite(res.ratio) and res.ratio > 0


def test_loss_family_is_compactly_supported():
    fam = loss_2s_family()
    assert len(fam) == 10
    far = np.array([[3.01, 0.0], [0.0, -3.2], [2.2, 2.2]])
    for f in fam:
        assert np.all(f(far) == 0.0)
