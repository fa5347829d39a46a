import math

import numpy as np
import pytest

from afrac.geometry import Ball, ConvexPolygon, Interval
from afrac.grid import GridFunction
from afrac.operator import apply_RI_grid
from afrac.solver import (StallError, assemble, conjugate_gradient, solve, solve_problem)
from afrac.spectral import SpectralMeasure

SQUARE = ConvexPolygon(((-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)))


def _x(u):
    return np.asarray(u.nodes()).reshape(u.values.size, -1)[:, 0]


def test_one_dimensional_interval_size_and_signs():
    sys = assemble(Interval(-1.0, 1.0), None, 0.5, 1 / 64)
    assert sys.n == 127
    A = sys.A.toarray()
    assert np.all(np.diag(A) > 0)
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0)
    # strict diagonal dominance from the exterior tail
    assert np.all(np.diag(A) > -off.sum(axis=1))
    assert np.allclose(A, A.T, rtol=0, atol=1e-13)


def test_barrier_solution_in_one_dimension():
    errs = []
    for k in (7, 8, 9, 10):
        u = solve_problem(Interval(-1.0, 1.0), 0.5, 1.0, 2.0 ** -k)
        x = _x(u)
        sel = np.abs(x) <= 0.5
        errs.append(np.max(np.abs(u.values[sel] - np.sqrt(1 - x[sel] ** 2))))
    assert errs[-1] <= 1e-2
    assert all(a > b for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_assembled_matrix_matches_grid_operator(s):
    dom = Ball((0, 0), 1)
    sys = assemble(dom, None, s, 1 / 16)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(sys.n)
    g = sys.grid.with_values(sys.to_grid(x))
    ref = apply_RI_grid(g, s).values.reshape(-1)[sys.index]
    assert np.max(np.abs(sys.A @ x - ref)) <= 1e-12 * np.max(np.abs(ref))
    assert np.max(np.abs(sys.matvec(x) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_zero_rhs_gives_zero():
    u = solve_problem(Ball((0, 0), 1), 0.4, 0.0, 1 / 16)
    assert np.all(u.values == 0.0)


def test_direct_and_cg_agree():
    dom = SQUARE
    u1 = solve_problem(dom, 0.3, 1.0, 1 / 16, method="direct")
    u2 = solve_problem(dom, 0.3, 1.0, 1 / 16, method="cg")
    assert np.max(np.abs(u1.values - u2.values)) <= 1e-8
    assert u2.meta["residual"] <= 1e-10


def test_solution_symmetric_on_symmetric_domain():
    u = solve_problem(SQUARE, 0.5, 1.0, 1 / 16)
    assert np.allclose(u.values, u.values[::-1, :], atol=1e-12)
    assert np.allclose(u.values, u.values.T, atol=1e-12)


def test_monotone_in_rhs():
    rng = np.random.default_rng(3)
    dom = Ball((0, 0), 1)
    sys = assemble(dom, None, 0.25, 1 / 16)
    g1 = np.where(sys.grid.mask, rng.random(sys.shape), 0.0)
    g2 = g1 + np.where(sys.grid.mask, rng.random(sys.shape), 0.0)
    u1, u2 = solve(sys, g1), solve(sys, g2)
    assert np.all(u2.values >= u1.values - 1e-13)
    assert np.all(u1.values >= -1e-13)


def test_weighted_axes_scale_solution():
    dom = Ball((0, 0), 1)
    u1 = solve_problem(dom, 0.5, 1.0, 1 / 16)
    a = SpectralMeasure(atoms=[((1.0, 0.0), 2.0), ((-1.0, 0.0), 2.0),
                               ((0.0, 1.0), 2.0), ((0.0, -1.0), 2.0)])
    u2 = solve_problem(dom, 0.5, 1.0, 1 / 16, a=a)
    assert np.allclose(u2.values, 0.5 * u1.values, atol=1e-12)


def test_assemble_errors():
    dom = Ball((0, 0), 1)
    with pytest.raises(ValueError):
        assemble(dom, SpectralMeasure.uniform(), 0.5, 1 / 8)
    with pytest.raises(ValueError):
        assemble(dom, SpectralMeasure.from_degrees([(30, 1.0), (210, 1.0)]), 0.5, 1 / 8)
    with pytest.raises(ValueError):
        assemble(dom, SpectralMeasure(atoms=[((1.0, 0.0), 1.0), ((-1.0, 0.0), 1.0)]), 0.5, 1 / 8)
    with pytest.raises(ValueError):
        assemble(dom, None, 1.0, 1 / 8)
    with pytest.raises(ValueError):
        assemble(Ball((0, 0), 0.1), None, 0.5, 1 / 8)


def test_solve_rejects_wrong_grid_and_nan():
    sys = assemble(Ball((0, 0), 1), None, 0.5, 1 / 8)
    with pytest.raises(ValueError):
        solve(sys, np.ones((3, 3)))
    bad = np.full(sys.shape, np.nan)
    with pytest.raises(ValueError):
        solve(sys, bad)
    with pytest.raises(ValueError):
        solve(sys, np.ones(sys.shape), method="lu")


def test_cg_stall_guard():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((200, 200))
    A = M @ M.T + 1e-6 * np.eye(200)
    b = rng.standard_normal(200)
    with pytest.raises(StallError):
        conjugate_gradient(lambda v: A @ v, b, maxiter=5)
    # no tenfold drop over the window
    with pytest.raises(StallError):
        conjugate_gradient(lambda v: A @ v, b, maxiter=10 ** 4, stall_window=2)


def test_cg_solves_spd():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((30, 30))
    A = M @ M.T + 30 * np.eye(30)
    b = rng.standard_normal(30)
    x, res, it = conjugate_gradient(lambda v: A @ v, b)
    assert res <= 1e-10 and it > 0
    assert np.allclose(A @ x, b, atol=1e-8)
    assert conjugate_gradient(lambda v: A @ v, np.zeros(30))[2] == 0


def test_metadata_recorded():
    u = solve_problem(Ball((0, 0), 1), 0.5, 1.0, 1 / 8)
    for key in ("s", "h", "residual", "iterations", "method", "wall_time_ms", "unknowns"):
        assert key in u.meta
    assert u.meta["method"] == "direct"
    assert math.isfinite(u.meta["residual"])
