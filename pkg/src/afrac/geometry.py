"""Domains, distance functions and boundary geometry.

Every domain answers membership and distance-to-boundary queries on arrays
of points with shape ``(..., dim)``.  Distances are to the boundary, so
they are finite and meaningful for points outside the domain as well.

Planar domains whose boundary is a closed C^1 chain of segments and
circular arcs share :class:`CurveDomain`, which evaluates distances exactly
piece by piece.
"""
from __future__ import annotations

import ast
import csv
import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import PPoly, make_interp_spline

TWO_PI = 2.0 * np.pi


def _pts(x, dim=2):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}")
    return x


class Domain:
    """Base class.  Subclasses implement ``contains`` and ``dist``."""

    dim = 2
    convex = False
    smooth = False  # C^{1,1} boundary parametrization available
    bounding_radius = np.inf

    def contains(self, x):
        raise NotImplementedError

    def dist(self, x):
        raise NotImplementedError

    def signed_distance(self, x):
        """Distance to the boundary, positive inside and negative outside."""
        d = self.dist(x)
        return np.where(self.contains(x), d, -d)

    def bbox(self):
        r = self.bounding_radius
        return -r * np.ones(self.dim), r * np.ones(self.dim)

    def boundary_polyline(self, n=2 ** 16):
        raise NotImplementedError(f"{type(self).__name__} has no boundary polyline")


# ---------------------------------------------------------------------------
# simple analytic domains


@dataclass(frozen=True)
class Interval(Domain):
    """Open interval (a, b) on the line."""

    a: float = -1.0
    b: float = 1.0
    dim = 1
    convex = True
    smooth = True

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("interval needs a < b")

    @property
    def bounding_radius(self):
        return max(abs(self.a), abs(self.b))

    def contains(self, x):
        x = _pts(x, 1)[..., 0]
        return (x > self.a) & (x < self.b)

    def dist(self, x):
        x = _pts(x, 1)[..., 0]
        return np.minimum(np.abs(x - self.a), np.abs(x - self.b))

    def bbox(self):
        return np.array([self.a]), np.array([self.b])


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    convex = True
    smooth = True

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self):
        return len(self.center)

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def contains(self, x):
        x = _pts(x, self.dim)
        return np.linalg.norm(x - np.array(self.center), axis=-1) < self.radius

    def dist(self, x):
        x = _pts(x, self.dim)
        return np.abs(self.radius - np.linalg.norm(x - np.array(self.center), axis=-1))

    def bbox(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def boundary_polyline(self, n=2 ** 16):
        t = np.linspace(0.0, TWO_PI, n + 1)
        c = np.array(self.center)
        return c + self.radius * np.stack([np.cos(t), np.sin(t)], axis=1)


@dataclass(frozen=True)
class Strip(Domain):
    """Unbounded convex strip |x_2| < half_width."""

    half_width: float = 1.0
    convex = True
    smooth = True

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def contains(self, x):
        return np.abs(_pts(x)[..., 1]) < self.half_width

    def dist(self, x):
        return np.abs(self.half_width - np.abs(_pts(x)[..., 1]))

    def bbox(self):
        w = self.half_width
        return np.array([-np.inf, -w]), np.array([np.inf, w])


def _segment_distance(x, a, b):
    """Distance from points x to the segment [a, b] and the clamped foot."""
    ab = b - a
    t = np.clip(((x - a) @ ab) / (ab @ ab), 0.0, 1.0)
    foot = a + t[..., None] * ab
    return np.linalg.norm(x - foot, axis=-1), foot


@dataclass(frozen=True)
class ConvexPolygon(Domain):
    """Convex polygon with counterclockwise vertices."""

    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    convex = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three planar vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross <= 0):
            raise ValueError("vertices must be counterclockwise and strictly convex")
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))

    @property
    def bounding_radius(self):
        return float(np.max(np.linalg.norm(np.asarray(self.vertices), axis=1)))

    def _edges(self):
        v = np.asarray(self.vertices)
        return v, np.roll(v, -1, axis=0)

    def contains(self, x):
        x = _pts(x)
        a, b = self._edges()
        inside = np.ones(x.shape[:-1], dtype=bool)
        for p, q in zip(a, b):
            e = q - p
            inside &= e[0] * (x[..., 1] - p[1]) - e[1] * (x[..., 0] - p[0]) > 0
        return inside

    def dist(self, x):
        x = _pts(x)
        out = np.full(x.shape[:-1], np.inf)
        for p, q in zip(*self._edges()):
            out = np.minimum(out, _segment_distance(x, p, q)[0])
        return out

    def bbox(self):
        v = np.asarray(self.vertices)
        return v.min(axis=0), v.max(axis=0)

    def boundary_polyline(self, n=2 ** 16):
        v = np.asarray(self.vertices)
        return np.vstack([v, v[:1]])


# ---------------------------------------------------------------------------
# closed chains of segments and arcs


@dataclass(frozen=True)
class Segment:
    a: tuple
    b: tuple

    @property
    def length(self):
        return float(np.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1]))

    def start(self):
        return np.array(self.a, dtype=float)

    def end(self):
        return np.array(self.b, dtype=float)

    def project(self, x):
        """Distance, foot point and outward normal at the foot."""
        a, b = self.start(), self.end()
        d, foot = _segment_distance(x, a, b)
        t = (b - a) / self.length
        n = np.broadcast_to(np.array([t[1], -t[0]]), foot.shape)
        return d, foot, n

    def sample(self, m):
        t = np.linspace(0.0, 1.0, m + 1)[:, None]
        return self.start() + t * (self.end() - self.start())

    def project_point(self, x0, x1):
        """Scalar project: distance and (x - foot) . outward normal."""
        (a0, a1), (b0, b1) = self.a, self.b
        e0, e1 = b0 - a0, b1 - a1
        L2 = e0 * e0 + e1 * e1
        t = min(max(((x0 - a0) * e0 + (x1 - a1) * e1) / L2, 0.0), 1.0)
        r0, r1 = x0 - a0 - t * e0, x1 - a1 - t * e1
        L = math.sqrt(L2)
        return math.hypot(r0, r1), (r0 * e1 - r1 * e0) / L


@dataclass(frozen=True)
class Arc:
    """Circular arc from angle theta0 sweeping dtheta (ccw when positive)."""

    center: tuple
    radius: float
    theta0: float
    dtheta: float

    @property
    def length(self):
        return abs(self.dtheta) * self.radius

    def point(self, theta):
        c = np.asarray(self.center, dtype=float)
        return c + self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def start(self):
        return self.point(np.float64(self.theta0))

    def end(self):
        return self.point(np.float64(self.theta0 + self.dtheta))

    def project(self, x):
        c = np.asarray(self.center, dtype=float)
        rel = x - c
        phi = np.arctan2(rel[..., 1], rel[..., 0])
        sgn = np.sign(self.dtheta)
        u = np.mod(sgn * (phi - self.theta0), TWO_PI)
        inside = u <= abs(self.dtheta)
        p0, p1 = self.start(), self.end()
        d0 = np.linalg.norm(x - p0, axis=-1)
        d1 = np.linalg.norm(x - p1, axis=-1)
        use0 = d0 <= d1
        ang = np.where(inside, phi, np.where(use0, self.theta0, self.theta0 + self.dtheta))
        foot = self.point(ang)
        radial = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        d = np.where(inside, np.abs(np.linalg.norm(rel, axis=-1) - self.radius),
                     np.minimum(d0, d1))
        # ccw arcs bound the region from outside, cw arcs from inside
        return d, foot, sgn * radial

    def sample(self, m):
        return self.point(self.theta0 + np.linspace(0.0, 1.0, m + 1) * self.dtheta)

    def project_point(self, x0, x1):
        """Scalar project: distance and (x - foot) . outward normal."""
        c0, c1 = self.center
        r0, r1 = x0 - c0, x1 - c1
        phi = math.atan2(r1, r0)
        sgn = 1.0 if self.dtheta > 0 else -1.0
        u = (sgn * (phi - self.theta0)) % TWO_PI
        if u <= abs(self.dtheta):
            ang = phi
        else:
            a0, a1 = self.theta0, self.theta0 + self.dtheta
            p0 = (c0 + self.radius * math.cos(a0), c1 + self.radius * math.sin(a0))
            p1 = (c0 + self.radius * math.cos(a1), c1 + self.radius * math.sin(a1))
            d0 = math.hypot(x0 - p0[0], x1 - p0[1])
            d1 = math.hypot(x0 - p1[0], x1 - p1[1])
            ang = a0 if d0 <= d1 else a1
        ca, sa = math.cos(ang), math.sin(ang)
        f0, f1 = c0 + self.radius * ca, c1 + self.radius * sa
        return math.hypot(x0 - f0, x1 - f1), sgn * ((x0 - f0) * ca + (x1 - f1) * sa)


class CurveDomain(Domain):
    """Region enclosed by a counterclockwise closed C^1 chain of pieces."""

    smooth = True

    def __init__(self, pieces, convex=False):
        self.pieces = tuple(pieces)
        self.convex = convex
        for p, q in zip(self.pieces, self.pieces[1:] + self.pieces[:1]):
            if np.linalg.norm(p.end() - q.start()) > 1e-9:
                raise ValueError("boundary pieces do not join")
        pts = self.boundary_polyline(4096)
        self._lo, self._hi = pts.min(axis=0), pts.max(axis=0)
        self.bounding_radius = float(np.max(np.linalg.norm(pts, axis=1)))

    def _nearest(self, x, chunk=1 << 18):
        x = _pts(x)
        shape = x.shape[:-1]
        flat = x.reshape(-1, 2)
        if len(flat) == 1:
            # scalar fast path: numpy overhead dominates for single points
            x0, x1 = float(flat[0, 0]), float(flat[0, 1])
            best, sgn = math.inf, 0.0
            for piece in self.pieces:
                d, s = piece.project_point(x0, x1)
                if d < best:
                    best, sgn = d, s
            return np.full(shape, best), np.full(shape, sgn)
        dist = np.empty(len(flat))
        side = np.empty(len(flat))
        for k in range(0, len(flat), chunk):
            xs = flat[k:k + chunk]
            best = np.full(len(xs), np.inf)
            sgn = np.zeros(len(xs))
            for piece in self.pieces:
                d, foot, n = piece.project(xs)
                better = d < best
                best = np.where(better, d, best)
                # at a nearest point x - foot is parallel to the normal,
                # so its sign against the outward normal decides membership
                s = np.einsum("ij,ij->i", xs - foot, n)
                sgn = np.where(better, s, sgn)
            dist[k:k + chunk] = best
            side[k:k + chunk] = sgn
        return dist.reshape(shape), side.reshape(shape)

    def dist(self, x):
        return self._nearest(x)[0]

    def contains(self, x):
        return self._nearest(x)[1] < 0

    def signed_distance(self, x):
        d, side = self._nearest(x)
        return np.where(side < 0, d, -d)

    def bbox(self):
        return self._lo.copy(), self._hi.copy()

    @property
    def perimeter(self):
        return float(sum(p.length for p in self.pieces))

    def boundary_polyline(self, n=2 ** 16):
        total = sum(p.length for p in self.pieces)
        chunks = []
        for p in self.pieces:
            m = max(64 if isinstance(p, Arc) else 1, int(np.ceil(n * p.length / total)))
            chunks.append(p.sample(m)[:-1])
        pts = np.vstack(chunks)
        return np.vstack([pts, pts[:1]])


class Stadium(CurveDomain):
    """Convex stadium: segment [-a, a] x {0} thickened by radius r."""

    def __init__(self, a=1.0, r=0.5):
        if a <= 0 or r <= 0:
            raise ValueError("stadium needs positive half-length and radius")
        self.a, self.r = float(a), float(r)
        pieces = [
            Segment((-a, -r), (a, -r)),
            Arc((a, 0.0), r, -0.5 * np.pi, np.pi),
            Segment((a, r), (-a, r)),
            Arc((-a, 0.0), r, 0.5 * np.pi, np.pi),
        ]
        super().__init__(pieces, convex=True)


class CounterexampleDomain(CurveDomain):
    """Non-convex domain with a flat boundary segment hidden from the origin.

    The domain is the ball of radius 4 joined on the left to a channel and a
    lobe.  The lobe lies below the flat segment [-8, -6] x {0}, so the
    horizontal line through the origin grazes the boundary along that
    segment.  Convex corners are rounded and concave corners are filleted
    with radius ``eps_geom``; the boundary is C^{1,1}.

    Parameters
    ----------
    eps_geom : float
        Fillet radius of the concave corners.
    top, bottom : float
        Heights of the channel's upper edge and of the lobe floor.
    left : float
        Abscissa of the lobe's left wall.
    """

    def __init__(self, eps_geom=0.05, top=3.5, bottom=-3.0, left=-8.5,
                 corner=1.0, wall_round=0.5):
        e = float(eps_geom)
        if not 0 < e < 0.5:
            raise ValueError("eps_geom must lie in (0, 0.5)")
        rc = -8.0 - left  # radius of the convex corner where the flat part ends
        if not 0.5 <= rc <= -bottom - 0.5 or corner > -bottom - rc:
            raise ValueError("inconsistent lobe dimensions")
        self.eps_geom, self.top, self.bottom, self.left = e, top, bottom, left
        xw = -6.0 + e  # wall abscissa, so the flat part ends exactly at -6
        R = 4.0
        # concave fillets between the channel edges and the big circle
        xt = -np.sqrt((R + e) ** 2 - (top + e) ** 2)
        ct = np.array([xt, top + e])
        xb = -np.sqrt((R + e) ** 2 - (-bottom + e) ** 2)
        cb = np.array([xb, bottom - e])
        ang_t = np.arctan2(ct[1], ct[0])  # direction of the fillet centre
        ang_b = np.arctan2(cb[1], cb[0]) + TWO_PI
        pieces = [
            Arc((0.0, 0.0), R, ang_b - TWO_PI, ang_t - ang_b + TWO_PI),
            Arc(tuple(ct), e, ang_t + np.pi, -(ang_t + np.pi - 1.5 * np.pi)),
            Segment((xt, top), (xw + wall_round, top)),
            Arc((xw + wall_round, top - wall_round), wall_round, 0.5 * np.pi, 0.5 * np.pi),
            Segment((xw, top - wall_round), (xw, e)),
            Arc((xw - e, e), e, 0.0, -0.5 * np.pi),
            Segment((-6.0, 0.0), (-8.0, 0.0)),
            Arc((-8.0, -rc), rc, 0.5 * np.pi, 0.5 * np.pi),
            Segment((left, -rc), (left, bottom + corner)),
            Arc((left + corner, bottom + corner), corner, np.pi, 0.5 * np.pi),
            Segment((left + corner, bottom), (xb, bottom)),
            Arc(tuple(cb), e, 0.5 * np.pi, -(0.5 * np.pi - (ang_b - np.pi))),
        ]
        super().__init__(pieces, convex=False)


# ---------------------------------------------------------------------------
# graph-type domains


def _argmin_graph(g, a, b, lo, hi, nsample=64, iters=60):
    """Minimize (t - a)^2 + (g(t) - b)^2 over t in [lo, hi], vectorized.

    A dense sample brackets the minimum and golden-section search refines
    it inside the bracket.
    """
    a, b, lo, hi = (np.asarray(v, dtype=float) for v in np.broadcast_arrays(a, b, lo, hi))
    frac = np.linspace(0.0, 1.0, nsample)
    t = lo[..., None] + frac * (hi - lo)[..., None]
    f = (t - a[..., None]) ** 2 + (g(t) - b[..., None]) ** 2
    k = np.argmin(f, axis=-1)
    step = (hi - lo) / (nsample - 1)
    left = np.maximum(lo, np.take_along_axis(t, k[..., None], -1)[..., 0] - step)
    right = np.minimum(hi, left + 2 * step)
    phi = 0.5 * (np.sqrt(5.0) - 1.0)

    def fun(u):
        return (u - a) ** 2 + (g(u) - b) ** 2

    c = right - phi * (right - left)
    d = left + phi * (right - left)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        m = fc < fd
        right = np.where(m, d, right)
        left = np.where(m, left, c)
        c_new = right - phi * (right - left)
        d_new = left + phi * (right - left)
        c, d = c_new, d_new
        fc, fd = fun(c), fun(d)
    tb = 0.5 * (left + right)
    cand = np.stack([tb, lo, hi, np.take_along_axis(t, k[..., None], -1)[..., 0]])
    vals = fun(cand)
    return np.sqrt(vals.min(axis=0))


class CuspDomain(Domain):
    """Ball of radius R joined with the exponential cusp |x_2| < R exp(-|x_1|/R).

    The set is unbounded along the first axis and not convex.
    """

    T0 = 0.9165625831055907  # t0^2 + exp(-2 t0) = 1: where cusp meets circle

    def __init__(self, R=1.0):
        if R <= 0:
            raise ValueError("R must be positive")
        self.R = float(R)

    def contains(self, x):
        x = _pts(x)
        R = self.R
        return (np.linalg.norm(x, axis=-1) < R) | (np.abs(x[..., 1]) < R * np.exp(-np.abs(x[..., 0]) / R))

    def _graph(self, t):
        return self.R * np.exp(-t / self.R)

    def dist(self, x):
        x = _pts(x)
        a, b = np.abs(x[..., 0]), np.abs(x[..., 1])
        R = self.R
        t0 = self.T0 * R
        th0 = np.arctan2(self._graph(t0), t0)
        # the boundary in the closed first quadrant: circle arc plus graph
        phi = np.arctan2(b, a)
        r = np.hypot(a, b)
        p0 = np.array([t0, self._graph(t0)])
        d_arc = np.where(phi >= th0, np.abs(r - R),
                         np.minimum(np.hypot(a - p0[0], b - p0[1]), np.hypot(a, b - R)))
        anchor = np.maximum(a, t0)
        span = np.abs(self._graph(anchor) - b) + (anchor - a) + 1e-12
        lo = np.maximum(t0, a - span)
        hi = np.maximum(lo + 1e-12, a + span)
        d_graph = _argmin_graph(self._graph, a, b, lo, hi)
        return np.minimum(d_arc, d_graph)

    def bbox(self):
        return np.array([-np.inf, -self.R]), np.array([np.inf, self.R])


class GraphPatch(Domain):
    """Epigraph {x_2 > h(x_1)} over |x_1| <= L with h a quadratic spline.

    Parameters
    ----------
    h : scipy.interpolate.PPoly
        Piecewise quadratic with continuous first derivative.
    L : float
        Half-width of the patch's box.
    kappa : float
        Patch radius.
    """

    smooth = True

    def __init__(self, h: PPoly, L=2.0, kappa=1.0):
        if h.c.shape[0] > 3:
            raise ValueError("h must be piecewise quadratic")
        self.h = h
        self.dh = h.derivative()
        self.L, self.kappa = float(L), float(kappa)
        self.K = float(np.max(np.abs(self.dh.derivative().c))) if h.c.shape[0] == 3 else 0.0
        hi = float(np.max(np.abs(h(np.linspace(-L, L, 257)))))
        self.bounding_radius = float(np.hypot(L, hi + 2 * L))

    @classmethod
    def quadratic(cls, c2=0.5, c1=0.0, c0=0.0, L=2.0, kappa=1.0):
        c = np.array([[c2], [c1 - 2 * c2 * L], [c2 * L * L - c1 * L + c0]])
        return cls(PPoly(c, [-L, L]), L, kappa)

    @classmethod
    def flat(cls, L=2.0, kappa=1.0):
        return cls.quadratic(0.0, 0.0, 0.0, L, kappa)

    @classmethod
    def huber(cls, eps=0.05, L=2.0, kappa=1.0):
        """Smoothed |x|: quadratic on [-eps, eps], linear outside."""
        c = np.array([[0.0, 0.5 / eps, 0.0],
                      [-1.0, -1.0, 1.0],
                      [L - 0.5 * eps, 0.5 * eps, 0.5 * eps]])
        return cls(PPoly(c, [-L, -eps, eps, L]), L, kappa)

    @classmethod
    def from_function(cls, f, L=2.0, kappa=1.0, n=201):
        x = np.linspace(-L, L, n)
        spl = make_interp_spline(x, f(x), k=2)
        return cls(PPoly.from_spline(spl), L, kappa)

    def kappa_star(self):
        return min(0.1, 1.0 / (4.0 * self.K)) if self.K > 0 else 0.1

    def contains(self, x):
        x = _pts(x)
        inbox = np.abs(x[..., 0]) <= self.L
        return inbox & (x[..., 1] > self.h(np.clip(x[..., 0], -self.L, self.L)))

    def dist(self, x):
        """Distance to the graph of h over [-L, L]."""
        x = _pts(x)
        a, b = x[..., 0], x[..., 1]
        ac = np.clip(a, -self.L, self.L)
        span = np.abs(self.h(ac) - b) + np.abs(ac - a) + 1e-12
        lo = np.clip(a - span, -self.L, self.L)
        hi = np.clip(a + span, -self.L, self.L)
        hi = np.maximum(hi, lo + 1e-15)
        return _argmin_graph(self.h, a, b, lo, hi)

    def bbox(self):
        x = np.linspace(-self.L, self.L, 1025)
        y = self.h(x)
        return np.array([-self.L, y.min()]), np.array([self.L, y.max() + 2 * self.L])


# ---------------------------------------------------------------------------
# queries


def dist_to_boundary(dom: Domain, x) -> np.ndarray:
    """Distance from x to the boundary of dom (defined inside and outside)."""
    d = dom.dist(x)
    return float(d) if np.ndim(d) == 0 else d


class JointDistance(NamedTuple):
    value: float


def joint_distance(dom: Domain, x, y) -> JointDistance:
    """The joint distance min(d(x), d(y))."""
    return JointDistance(float(min(dom.dist(np.asarray(x, float)), dom.dist(np.asarray(y, float)))))


def inner_sphere_center(h: GraphPatch, p, kappa, K):
    """Centre and radius of the interior ball touching the graph at p.

    q = p - r (h'(p1), -1) / sqrt(h'(p1)^2 + 1) and r = min(kappa, 1/K) / 2.
    """
    p = np.asarray(p, dtype=float)
    if np.linalg.norm(p) > kappa:
        raise ValueError("boundary point lies outside the patch ball B_kappa")
    if abs(p[1] - h.h(p[0])) > 1e-9:
        raise ValueError("p is not on the graph")
    if K < h.K - 1e-12:
        raise ValueError("K is smaller than the Lipschitz constant of the gradient")
    g = float(h.dh(p[0]))
    r = 0.5 * min(kappa, 1.0 / K) if K > 0 else 0.5 * kappa
    q = p - r * np.array([g, -1.0]) / np.sqrt(g * g + 1.0)
    return q, r


def verify_inner_ball(h: GraphPatch, q, r, samples=10000, seed=0, kappa=None) -> bool:
    """Sample B_r(q) uniformly and check it lies above the graph and in B_{2 kappa}."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    kappa = h.kappa if kappa is None else kappa
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0.0, TWO_PI, samples)
    rad = r * np.sqrt(rng.uniform(0.0, 1.0, samples))
    x = np.asarray(q, dtype=float) + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    if np.any(np.abs(x[:, 0]) > h.L):
        return False
    above = x[:, 1] > h.h(x[:, 0])
    return bool(np.all(above) and np.all(np.linalg.norm(x, axis=1) < 2 * kappa))


def polyline_length_in_annulus(poly, center, r1, r2):
    """Exact length of a polyline inside the open annulus r1 < |x - c| < r2."""
    p = np.asarray(poly, dtype=float) - np.asarray(center, dtype=float)
    a, b = p[:-1], p[1:]
    d = b - a
    A = np.einsum("ij,ij->i", d, d)
    B = 2 * np.einsum("ij,ij->i", a, d)
    C = np.einsum("ij,ij->i", a, a)
    ok = A > 0
    cuts = [np.zeros(len(a)), np.ones(len(a))]
    for r in (r1, r2):
        disc = B * B - 4 * A * (C - r * r)
        sq = np.sqrt(np.maximum(disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            for sgn in (-1.0, 1.0):
                t = np.where(ok & (disc > 0), (-B + sgn * sq) / (2 * A), 0.0)
                cuts.append(np.clip(t, 0.0, 1.0))
    T = np.sort(np.stack(cuts, axis=1), axis=1)
    mid = 0.5 * (T[:, 1:] + T[:, :-1])
    pos = a[:, None, :] + mid[..., None] * d[:, None, :]
    rr = np.linalg.norm(pos, axis=-1)
    inside = (rr > r1) & (rr < r2)
    seglen = np.sqrt(A)
    return float(np.sum(np.diff(T, axis=1) * inside * seglen[:, None]))


def boundary_length_in_annulus(dom: Domain, center, r1, r2, n=2 ** 16):
    return polyline_length_in_annulus(dom.boundary_polyline(n), center, max(r1, 0.0), r2)


class BandMeasure(NamedTuple):
    band_volume: float
    boundary_area: float
    stderr: float


def band_measure(dom: Domain, P, R1, R2, mu, samples=10 ** 5, seed=0) -> BandMeasure:
    """Area of {x in dom, R1 < |x - P| < R2, d(x) <= mu} and nearby boundary length.

    The area is a Monte Carlo estimate over the bounding rectangle; the
    boundary length is measured inside the enlarged annulus
    R1 - mu < |x - P| < R2 + mu.
    """
    if R1 >= R2:
        raise ValueError("need R1 < R2")
    if not (mu > 0 and R2 - R1 > 2 * mu):
        raise ValueError("need R2 - R1 > 2 mu > 0")
    if samples < 10 ** 4:
        raise ValueError("need at least 10^4 samples")
    P = np.asarray(P, dtype=float)
    lo, hi = dom.bbox()
    lo = np.maximum(lo, P - R2)
    hi = np.minimum(hi, P + R2)
    if np.any(hi <= lo):
        return BandMeasure(0.0, 0.0, 0.0)
    area = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.uniform(size=(samples, 2))
    r = np.linalg.norm(x - P, axis=1)
    hit = (r > R1) & (r < R2)
    idx = np.nonzero(hit)[0]
    sd = dom.signed_distance(x[idx])
    ind = np.zeros(samples)
    ind[idx] = (sd > 0) & (sd <= mu)
    p = ind.mean()
    vol = area * p
    se = area * np.sqrt(p * (1 - p) / samples)
    blen = boundary_length_in_annulus(dom, P, R1 - mu, R2 + mu)
    return BandMeasure(float(vol), blen, float(se))


def annulus_boundary_area(dom: Domain, R) -> float:
    """Length of the boundary inside B_{8R} minus B_R around the origin."""
    if R <= 0:
        raise ValueError("R must be positive")
    return boundary_length_in_annulus(dom, (0.0, 0.0), R, 8 * R)


def level_set_lipschitz_probe(dom: GraphPatch, t, probes=200, half_width=None):
    """Max slope of the level set {d = t} above the graph.

    For each abscissa the height with d = t is found by bisection; the
    maximum difference quotient over adjacent abscissae is returned.
    """
    if not isinstance(dom, GraphPatch):
        raise TypeError("level_set_lipschitz_probe needs a GraphPatch")
    ks = dom.kappa_star()
    if not 0 < t <= 0.5 * ks + 1e-15:
        raise ValueError(f"need 0 < t <= kappa*/2 = {0.5 * ks}")
    if probes < 100:
        raise ValueError("need at least 100 probes")
    w = dom.kappa if half_width is None else half_width
    xs = np.linspace(-w, w, probes)
    base = dom.h(xs)
    grad = float(np.max(np.abs(dom.dh(np.linspace(-dom.L, dom.L, 2049)))))
    lo = base.copy()
    hi = base + 2 * t * np.sqrt(1 + grad * grad) + t
    f_hi = dom.dist(np.stack([xs, hi], axis=1)) - t
    if np.any(f_hi < 0) or np.any(np.abs(xs) + 2 * t > dom.L):
        raise ValueError("level set leaves the patch; bisection cannot bracket")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f = dom.dist(np.stack([xs, mid], axis=1)) - t
        lo = np.where(f < 0, mid, lo)
        hi = np.where(f < 0, hi, mid)
    y = 0.5 * (lo + hi)
    return float(np.max(np.abs(np.diff(y)) / np.diff(xs)))


# ---------------------------------------------------------------------------
# literals and export

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_domain(text: str) -> Domain:
    """Parse ``ball(cx, cy, r)``, ``polygon((x,y),...)``, ``counterexample([eps])``,
    ``cusp(R)``, ``stadium(a, r)`` or ``interval(a, b)``."""
    m = re.fullmatch(r"\s*([a-z]+)\s*\((.*)\)\s*", text)
    if not m:
        raise ValueError(f"malformed domain literal: {text!r}")
    name, body = m.groups()
    try:
        args = ast.literal_eval(f"({body},)") if body.strip() else ()
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"malformed domain arguments: {body!r}") from exc
    if name == "polygon":
        return ConvexPolygon(tuple(tuple(map(float, v)) for v in args))
    if not all(isinstance(a, (int, float)) for a in args):
        raise ValueError(f"domain {name} takes numeric arguments")
    table = {"ball": ((3,), lambda a: Ball((a[0], a[1]), a[2])),
             "counterexample": ((0, 1), lambda a: CounterexampleDomain(*a)),
             "cusp": ((1,), lambda a: CuspDomain(a[0])),
             "stadium": ((2,), lambda a: Stadium(a[0], a[1])),
             "interval": ((2,), lambda a: Interval(a[0], a[1]))}
    if name not in table or len(args) not in table[name][0]:
        raise ValueError(f"unknown domain or wrong arity: {text!r}")
    return table[name][1](args)


def write_boundary_csv(dom: Domain, path, n=4096):
    pts = dom.boundary_polyline(n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in pts:
            w.writerow([f"{x:.17g}", f"{y:.17g}"])
