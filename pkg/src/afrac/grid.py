"""Uniform grids carrying sampled fields extended by zero outside a domain."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import Domain


def aligned_grid(dom: Domain, h: float, pad: int = 1):
    """Origin and extent of a grid of spacing h covering dom's bounding box.

    Nodes sit at integer multiples of h, so coordinate axes are grid lines.
    """
    lo, hi = dom.bbox()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("domain is unbounded; a grid cannot cover it")
    i0 = np.floor(lo / h + 1e-9).astype(int) - pad
    i1 = np.ceil(hi / h - 1e-9).astype(int) + pad
    return i0 * h, tuple(int(n) for n in (i1 - i0 + 1))


@dataclass
class GridFunction:
    """Values on a uniform grid, zero outside the domain.

    Parameters
    ----------
    origin : array_like
        Coordinates of node (0, ..., 0).
    h : float
        Grid spacing.
    values : ndarray
        One entry per node; ``values.shape`` is the grid extent.
    domain : Domain
        Nodes inside the domain are interior; all other values are zero.
    """

    origin: np.ndarray
    h: float
    values: np.ndarray
    domain: Domain
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(-1)
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim != self.origin.size:
            raise ValueError("values dimension does not match origin")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        self.mask = np.asarray(self.domain.contains(self.nodes()), dtype=bool)
        self.values[~self.mask] = 0.0

    @classmethod
    def sample(cls, dom: Domain, h: float, f=None, pad: int = 1):
        """Sample a callable f(points) on the interior nodes of dom."""
        origin, shape = aligned_grid(dom, h, pad)
        g = cls(origin, h, np.zeros(shape), dom)
        if f is not None:
            vals = np.zeros(shape)
            pts = g.nodes()[g.mask]
            vals[g.mask] = np.broadcast_to(np.asarray(f(pts), dtype=float), (len(pts),))
            g.values = vals
        return g

    @property
    def shape(self):
        return self.values.shape

    @property
    def dim(self):
        return self.values.ndim

    def axes(self):
        return [self.origin[k] + self.h * np.arange(n) for k, n in enumerate(self.shape)]

    def nodes(self):
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def with_values(self, values, **meta):
        out = GridFunction(self.origin, self.h, values, self.domain, dict(self.meta))
        out.meta.update(meta)
        return out

    def index_of(self, x):
        """Nearest node index of x and whether x is exactly a node."""
        k = (np.asarray(x, dtype=float) - self.origin) / self.h
        kr = np.rint(k)
        return tuple(int(v) for v in kr), bool(np.all(np.abs(k - kr) < 1e-9))

    def __call__(self, x, boundary_exponent=None):
        """Evaluate by multilinear interpolation, exactly zero outside Omega.

        With ``boundary_exponent = s`` the quotient u / d^s is interpolated
        from interior nodes and multiplied back by d(x)^s.  This keeps the
        boundary behaviour u ~ d^s between the boundary and the first node.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        single = np.ndim(x) == 2 and x.shape[0] == 1
        k = (x - self.origin) / self.h
        base = np.floor(k + 1e-12).astype(int)
        frac = np.clip(k - base, 0.0, 1.0)
        vals, mask = self.values, self.mask
        if boundary_exponent is not None:
            d = np.zeros(self.shape)
            d[mask] = self.domain.dist(self.nodes()[mask])
            # nodes lying exactly on the boundary carry no quotient information
            mask = mask & (d > 0)
            vals = np.zeros(self.shape)
            vals[mask] = self.values[mask] / d[mask] ** boundary_exponent
        num = np.zeros(len(x))
        den = np.zeros(len(x))
        for corner in np.ndindex(*([2] * self.dim)):
            idx = base + np.array(corner)
            w = np.prod(np.where(np.array(corner), frac, 1.0 - frac), axis=1)
            ok = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=1)
            ii = tuple(np.where(ok, idx[:, a], 0) for a in range(self.dim))
            inside = ok & mask[ii]
            num += np.where(inside, w * vals[ii], 0.0)
            den += np.where(inside, w, 0.0)
        if boundary_exponent is None:
            out = num
        else:
            out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
            out = out * self.domain.dist(x) ** boundary_exponent
        out = np.where(self.domain.contains(x), out, 0.0)
        return float(out[0]) if single else out

    # serialization ----------------------------------------------------------
    def write_csv(self, path, extra=None):
        """Write ``i,j,x,y,value,interior_flag`` rows and a JSON sidecar."""
        pts = self.nodes().reshape(-1, self.dim)
        idx = np.stack(np.meshgrid(*[np.arange(n) for n in self.shape], indexing="ij"),
                       axis=-1).reshape(-1, self.dim)
        vals = self.values.reshape(-1)
        flag = self.mask.reshape(-1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if self.dim == 2:
                w.writerow(["i", "j", "x", "y", "value", "interior_flag"])
            else:
                w.writerow(["i", "x", "value", "interior_flag"])
            for k in range(len(vals)):
                row = [int(v) for v in idx[k]] + [f"{v:.17g}" for v in pts[k]]
                w.writerow(row + [f"{vals[k]:.17g}", int(flag[k])])
        side = {"origin": self.origin.tolist(), "h": self.h,
                "shape": list(self.shape)}
        if self.dim == 2:
            side.update(nx=self.shape[0], ny=self.shape[1])
        side.update(extra or {})
        with open(str(path) + ".json", "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)
