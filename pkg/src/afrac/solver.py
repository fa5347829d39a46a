"""Dirichlet problem L u = g in Omega, u = 0 outside, for the directional operator.

The discrete operator couples every pair of interior nodes on a common grid
line, so the matrix is dense along lines.  Large systems are therefore never
stored: products are computed with FFT convolutions along the lines and the
system is solved by conjugate gradients.  Small systems can be assembled
explicitly in CSR form and solved directly.
"""
from __future__ import annotations

import time

import numpy as np
import scipy.linalg
from scipy import sparse

from .geometry import Domain
from .grid import GridFunction, aligned_grid
from .operator import LineOperator, fractional_constant
from .spectral import SpectralMeasure

DIRECT_LIMIT = 5000
CSR_LIMIT = 40000


class StallError(RuntimeError):
    """Conjugate gradients made no progress."""


class LinearSystem:
    """Discrete operator restricted to the interior nodes of a grid.

    Attributes
    ----------
    grid : GridFunction
        Template grid (zero values) holding origin, spacing and mask.
    index : ndarray
        Flat grid indices of the unknowns, in row-major order.
    coeffs : ndarray
        Per-axis weights of the measure.
    """

    def __init__(self, dom: Domain, s: float, h: float, coeffs):
        self.dom, self.s, self.h = dom, float(s), float(h)
        origin, shape = aligned_grid(dom, h)
        self.grid = GridFunction(origin, h, np.zeros(shape), dom)
        self.index = np.flatnonzero(self.grid.mask)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.scale = fractional_constant(self.s, 1)
        self.lines = [LineOperator(self.s, self.h, n) for n in shape]
        self._csr = None

    @property
    def n(self):
        return self.index.size

    @property
    def shape(self):
        return self.grid.shape

    def diagonal(self):
        d = sum(c * op.diag for c, op in zip(self.coeffs, self.lines))
        return np.full(self.n, self.scale * d)

    def to_grid(self, x):
        v = np.zeros(self.grid.values.size)
        v[self.index] = x
        return v.reshape(self.shape)

    def matvec(self, x):
        v = self.to_grid(x)
        out = np.zeros_like(v)
        for ax, (c, op) in enumerate(zip(self.coeffs, self.lines)):
            if c != 0:
                out += c * op.apply(v, ax)
        return self.scale * out.reshape(-1)[self.index]

    @property
    def A(self):
        """The system matrix in CSR form (built on first use)."""
        if self._csr is None:
            self._csr = self._assemble_csr()
        return self._csr

    def _assemble_csr(self):
        if self.n > CSR_LIMIT:
            raise MemoryError(f"{self.n} unknowns: too large for an explicit matrix")
        pos = -np.ones(self.grid.values.size, dtype=np.int64)
        pos[self.index] = np.arange(self.n)
        pos = pos.reshape(self.shape)
        rows, cols, vals = [np.arange(self.n)], [np.arange(self.n)], [self.diagonal()]
        for ax, (c, op) in enumerate(zip(self.coeffs, self.lines)):
            if c == 0:
                continue
            moved = np.moveaxis(pos, ax, -1).reshape(-1, self.shape[ax])
            for line in moved:
                k = np.flatnonzero(line >= 0)
                if k.size < 2:
                    continue
                I, J = np.meshgrid(k, k, indexing="ij")
                off = I != J
                rows.append(line[I[off]])
                cols.append(line[J[off]])
                vals.append(-self.scale * c * op.W[np.abs(I - J)[off] - 1])
        A = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(self.n, self.n))
        return A.tocsr()


def assemble(dom: Domain, a: SpectralMeasure | None, s: float, h: float) -> LinearSystem:
    """Discrete directional operator on the interior nodes of dom.

    Raises
    ------
    ValueError
        For measures with atoms off the coordinate axes, density parts, or
        grids with fewer than 10 interior nodes.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    a = a or SpectralMeasure.axis(dom.dim)
    if a.dim != dom.dim:
        raise ValueError("measure and domain dimensions differ")
    if not a.is_axis():
        raise ValueError("the grid solver only supports atoms at +-e_i; use apply_L_point")
    coeffs = a.axis_coefficients()
    if not np.all(coeffs > 0):
        raise ValueError("degenerate measure: some axis carries no mass")
    sys = LinearSystem(dom, s, h, coeffs)
    if sys.n < 10:
        raise ValueError("fewer than 10 interior nodes; refine h")
    return sys


def conjugate_gradient(matvec, b, tol=1e-10, maxiter=20000, stall_window=500, x0=None):
    """Plain CG with a stall guard.

    Returns the solution, the final relative residual and the iteration count.
    Raises StallError if the residual fails to drop 10x over ``stall_window``
    iterations.
    """
    nb = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    if nb == 0:
        return np.zeros_like(b), 0.0, 0
    r = b - matvec(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = r @ r
    history = [np.sqrt(rr) / nb]
    for it in range(1, maxiter + 1):
        Ap = matvec(p)
        alpha = rr / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        res = np.sqrt(rr_new) / nb
        history.append(res)
        if res <= tol:
            # confirm against the true residual
            true = np.linalg.norm(b - matvec(x)) / nb
            if true <= tol:
                return x, true, it
            r = b - matvec(x)
            rr_new = r @ r
            p = r.copy()
            rr = rr_new
            continue
        if it >= stall_window and res > 0.1 * history[it - stall_window]:
            raise StallError(f"CG stalled at relative residual {res:.3e} after {it} iterations")
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise StallError(f"CG did not converge in {maxiter} iterations")


def solve(sys: LinearSystem, g: GridFunction | np.ndarray, lin_tol=1e-10, method="auto"):
    """Solve the system for right-hand side g; returns a GridFunction.

    ``method`` is ``"direct"``, ``"cg"`` or ``"auto"`` (direct below 5000
    unknowns).
    """
    vals = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    if vals.shape != sys.shape:
        raise ValueError("right-hand side lives on a different grid")
    b = vals.reshape(-1)[sys.index]
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite on interior nodes")
    t0 = time.perf_counter()
    if method == "auto":
        method = "direct" if sys.n < DIRECT_LIMIT else "cg"
    if method == "direct":
        x = scipy.linalg.solve(sys.A.toarray(), b, assume_a="pos")
        nb = np.linalg.norm(b)
        res = np.linalg.norm(b - sys.matvec(x)) / nb if nb > 0 else 0.0
        iters = 0
    elif method == "cg":
        x, res, iters = conjugate_gradient(sys.matvec, b, tol=lin_tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = sys.grid.with_values(sys.to_grid(x), s=sys.s, h=sys.h, residual=float(res),
                               iterations=int(iters), method=method,
                               wall_time_ms=1000.0 * (time.perf_counter() - t0))
    return out


def solve_problem(dom: Domain, s: float, g, h: float, a: SpectralMeasure | None = None,
                  lin_tol=1e-10, method="auto") -> GridFunction:
    """Assemble, sample g on the interior nodes and solve.

    ``g`` is a callable on arrays of points or a constant.
    """
    sys = assemble(dom, a, s, h)
    pts = sys.grid.nodes()[sys.grid.mask]
    rhs = np.zeros(sys.shape)
    gv = g(pts) if callable(g) else g
    rhs[sys.grid.mask] = np.broadcast_to(np.asarray(gv, dtype=float), (len(pts),))
    u = solve(sys, rhs, lin_tol=lin_tol, method=method)
    u.meta.update(unknowns=int(sys.n))
    return u
