"""Numerical checks of the ray and plane integral estimates near the boundary.

Every estimate has the form ``integral <= C * (power of R and r)``.  Where an
explicit constant is known it is used directly; otherwise a frozen calibration
constant (see :mod:`afrac.calibration`) stands in for it and the batteries
here regenerate it.

Conventions: ``d`` is the distance to the boundary, defined on the whole
plane; rays start at a base point ``p`` and have unit direction ``w``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull

from .geometry import Ball, ConvexPolygon, CuspDomain, Domain
from .grid import GridFunction
from .holder import holder_seminorm
from .operator import QuadratureConfig, apply_L_point, apply_L_points
from .spectral import SpectralMeasure

MODES = ("AT1bis", "AT2simple_bis", "AT2bis", "dist_bis")


class NonIntegrableError(ValueError):
    """The weight d^{-(alpha-s)} is not integrable along the ray."""


def _check_s(s):
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")


def _unit(w):
    w = np.asarray(w, dtype=float).reshape(-1)
    n = np.linalg.norm(w)
    if n == 0:
        raise ValueError("direction must be nonzero")
    return w / n


def _quad(f, a, b, tol=1e-10, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, epsrel=tol, epsabs=0.0, limit=400, **kw)
    return val


def _d(dom, x):
    return float(dom.dist(np.asarray(x, dtype=float)[None])[0])


def _inside(dom, x):
    return bool(dom.contains(np.asarray(x, dtype=float)[None])[0])


def _require_ball_inside(dom, p, R):
    if not _inside(dom, p) or _d(dom, p) < R * (1 - 1e-12):
        raise ValueError("B_R(p) is not contained in the domain")


def _bisect(pred, lo, hi, iters=200):
    """Boundary of pred on [lo, hi] with pred(lo) True and pred(hi) False."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def exit_radius(dom: Domain, p, w, rho_max=1e8):
    """First rho > 0 with p + rho w outside dom, for a convex dom; inf if none."""
    p, w = np.asarray(p, float), _unit(w)
    hi = max(2.0 * dom.bounding_radius + np.linalg.norm(p), 1.0) if np.isfinite(dom.bounding_radius) else 1.0
    while _inside(dom, p + hi * w):
        hi *= 2.0
        if hi > rho_max:
            return math.inf
    return _bisect(lambda r: _inside(dom, p + r * w), 0.0, hi)


def ray_crossings(dom: Domain, p, w, a, b, n=2048):
    """Radii in (a, b) where p + rho w crosses the boundary (sampled, then bisected)."""
    p, w = np.asarray(p, float), _unit(w)
    rho = np.linspace(a, b, n + 1)
    ins = dom.contains(p + rho[:, None] * w)
    out = []
    for k in np.flatnonzero(ins[1:] != ins[:-1]):
        first = bool(ins[k])
        out.append(_bisect(lambda r: _inside(dom, p + r * w) == first, rho[k], rho[k + 1]))
    return out


# ---------------------------------------------------------------------------
# AT1: band integral along a ray of a convex domain


def at1_constant(s):
    """Explicit constant 2^{2s+1} of the convex band estimate."""
    return 2.0 ** (2 * s + 1)


def at1_integral(dom: Domain, p, R, r, w, s, tol=1e-10):
    """int_R^inf chi_Omega(p + rho w) chi_[0,r](d(p + rho w)) rho^{-1-2s} drho.

    By convexity the ray leaves Omega once and d is concave along it, so the
    integrand is supported on the single interval [max(R, rho_r), rho_*]
    between the band entry rho_r and the exit rho_*; both are found by
    bisection and the indicator is integrated by quadrature.
    """
    _check_s(s)
    if not dom.convex:
        raise ValueError("domain is not convex; use bis_integrals instead")
    if not (R > 2 * r >= 0):
        raise ValueError("need R > 2r >= 0")
    p, w = np.asarray(p, float), _unit(w)
    _require_ball_inside(dom, p, R)
    if r == 0:
        return 0.0
    rho_star = exit_radius(dom, p, w)
    if not np.isfinite(rho_star):
        # d is concave and nonnegative on the half line, hence nondecreasing: d >= R > r
        return 0.0
    rho_r = _bisect(lambda t: _d(dom, p + t * w) > r, 0.0, rho_star)
    lo = max(R, rho_r)
    if lo >= rho_star:
        return 0.0

    def f(t):
        x = p + t * w
        return float(_inside(dom, x) and _d(dom, x) <= r) * t ** (-1 - 2 * s)

    # the indicator is 1 on (lo, rho_star) up to round-off at the ends
    return _quad(f, lo, rho_star, tol)


def at1_bound_check(dom, p, R, r, w, s):
    """at1_integral / (r R^{-1-2s})."""
    if r == 0:
        return 0.0
    return at1_integral(dom, p, R, r, w, s) / (r * R ** (-1 - 2 * s))


def at1_cusp_lower_bound(R, r, s, tol=1e-10):
    """Band integral on the cusp domain along the positive first axis.

    Returns ``(integral, bound)`` with bound = (R log(R/r))^{-2s} / (2s): on
    [R log(R/r), inf) the cusp is thinner than 2r, so the indicator is 1.
    """
    _check_s(s)
    if not 0 < r < R / math.e:
        raise ValueError("need 0 < r < R/e")
    dom = CuspDomain(R)
    e1 = np.array([1.0, 0.0])
    rho_hi = R * math.log(R / r)
    band = lambda t: _d(dom, t * e1) <= r
    # first band point: sample, then bisect
    grid = np.linspace(R, rho_hi, 513)
    dv = dom.dist(grid[:, None] * e1)
    k = int(np.argmax(dv <= r))
    rho_r = grid[0] if k == 0 else _bisect(lambda t: not band(t), grid[k - 1], grid[k])
    f = lambda t: float(band(t)) * t ** (-1 - 2 * s)
    head = _quad(f, rho_r, rho_hi, tol) if rho_r < rho_hi else 0.0
    bound = rho_hi ** (-2 * s) / (2 * s)
    return head + bound, bound


# ---------------------------------------------------------------------------
# AT2: distance-weighted ray integral


def at2_integral(dom: Domain, p, q, R, alpha, w, s, tol=1e-10):
    """int_R^inf chi chi / (d^{alpha-s}(p + rho w, q + rho w) rho^{1+2s}) drho.

    d(x, y) = min(d(x), d(y)).  The weight blows up like (rho_end - rho)^{s-alpha}
    at the first exit rho_end; that end piece uses an algebraic-weight rule.
    """
    _check_s(s)
    if not dom.convex:
        raise ValueError("domain is not convex; use bis_integrals instead")
    if not s <= alpha < 1 + s:
        raise ValueError("alpha must lie in [s, 1+s)")
    p, q, w = np.asarray(p, float), np.asarray(q, float), _unit(w)
    _require_ball_inside(dom, p, R)
    _require_ball_inside(dom, q, R)
    e = alpha - s
    end = min(exit_radius(dom, p, w), exit_radius(dom, q, w))
    dd = lambda t: min(_d(dom, p + t * w), _d(dom, q + t * w))
    kern = lambda t: t ** (-1 - 2 * s)
    if not np.isfinite(end):
        return _quad(lambda t: dd(t) ** (-e) * kern(t), R, math.inf, tol)
    if end <= R:
        return 0.0
    ts = np.linspace(R, end, 257)[:-1]
    dv = np.minimum(dom.dist(p + ts[:, None] * w), dom.dist(q + ts[:, None] * w))
    tiny = dv <= 1e-13 * max(end, 1.0)
    if e > 0 and np.any(tiny[1:] & tiny[:-1]):
        raise NonIntegrableError("d vanishes on an interval: the ray runs along the boundary")
    if e == 0:
        return _quad(kern, R, end, tol)
    ks = _kinks(ts, dv)
    mid = max([end - 0.25 * (end - R)] + [k for k in ks if k < end])
    body = _quad(lambda t: dd(t) ** (-e) * kern(t), R, mid, tol,
                 points=[k for k in ks if R < k < mid][:100] or None)
    ratio = _end_ratio(dd, end, end - mid, -1.0)
    tail = _quad(lambda t: ratio(t) ** e * kern(t), mid, end, tol, weight="alg", wvar=(0.0, -e))
    return body + tail


def _kinks(ts, vals):
    """Sample points where a sampled, piecewise smooth function bends sharply."""
    d2 = np.abs(np.diff(vals, 2))
    if d2.size == 0:
        return []
    thr = 20 * np.median(d2) + 1e-12 * np.max(np.abs(vals))
    return [float(x) for x in ts[1:-1][d2 > thr]]


def _end_ratio(dd, end, width, side):
    """t -> |end - t| / dd(t), continued by its value at a reference point once
    dd underflows next to the end (points within an ulp round onto the boundary)."""
    t_ref = end + side * 1e-7 * width
    ref = abs(end - t_ref) / max(dd(t_ref), 1e-300)

    def ratio(t):
        v = dd(t)
        if v <= 1e-12 * max(abs(end), 1.0):
            return ref
        return abs(end - t) / v

    return ratio


def at2_simple_integral(dom, p, R, alpha, w, s, tol=1e-10):
    """at2_integral with q = p."""
    return at2_integral(dom, p, p, R, alpha, w, s, tol)


def at2_sharpness(R, alpha, s, tol=1e-12):
    """Lower bound for the weighted integral on B_{3R} with p = q = 0.

    On [R, 2R] the distance 3R - rho is at most 2R, so the integral is at
    least int_R^{2R} (2R)^{s-alpha} rho^{-1-2s} drho.  Returns a dict with
    that lower bound by quadrature, its closed form and the full integral.
    """
    _check_s(s)
    dom = Ball((0.0, 0.0), 3 * R)
    w = np.array([1.0, 0.0])
    ts = np.linspace(R, 2 * R, 1025)
    dmax = float(np.max(dom.dist(ts[:, None] * w)))
    lower = _quad(lambda t: dmax ** (s - alpha) * t ** (-1 - 2 * s), R, 2 * R, tol)
    closed = R ** (-s - alpha) * 2.0 ** (s - alpha) * (1 - 2.0 ** (-2 * s)) / (2 * s)
    full = at2_integral(dom, (0.0, 0.0), (0.0, 0.0), R, alpha, w, s)
    return {"lower_bound": lower, "closed_form": closed, "integral": full}


def psi(mu, s, alpha, tol=1e-12):
    """psi(mu) = mu^{2s} int_mu^1 (1-t)^{s-alpha} t^{-1-2s} dt, psi(1) = 0.

    The limit at mu -> 0 is 1/(2s).
    """
    _check_s(s)
    if not s <= alpha < 1 + s:
        raise ValueError("alpha must lie in [s, 1+s)")
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    if mu == 1:
        return 0.0
    kern = lambda t: t ** (-1 - 2 * s)
    e = s - alpha
    split = max(mu, 0.5)
    head = 0.0
    if mu < split:
        pts = [x for x in np.geomspace(mu, split, 12)[1:-1]]
        head = _quad(lambda t: (1 - t) ** e * kern(t), mu, split, tol, points=pts)
    tail = _quad(kern, split, 1.0, tol, weight="alg", wvar=(0.0, e))
    return mu ** (2 * s) * (head + tail)


# ---------------------------------------------------------------------------
# distance tail


def dist_constant(s):
    """int_1^inf (t + 4)^s t^{-1-2s} dt: d(p + x) <= |x| + 4R when |p| < R."""
    return _quad(lambda t: (t + 4) ** s * t ** (-1 - 2 * s), 1.0, math.inf, 1e-12)


def dist_tail_integral(dom: Domain, p, R, w, s, tol=1e-10):
    """int_R^inf d^s(p + rho w) rho^{-1-2s} drho, d the distance to the boundary."""
    _check_s(s)
    p, w = np.asarray(p, float), _unit(w)
    if not np.linalg.norm(p) < R:
        raise ValueError("p must lie in B_R")
    if _d(dom, np.zeros(dom.dim)) > 3 * R * (1 + 1e-12) or not np.isfinite(dom.bounding_radius):
        raise ValueError("B_3R must meet the boundary of a bounded domain")
    far = np.linalg.norm(p) + 2 * dom.bounding_radius + R
    cuts = [R] + [c for c in ray_crossings(dom, p, w, R, far) if c > R] + [far]
    f = lambda t: _d(dom, p + t * w) ** s * t ** (-1 - 2 * s)
    total = sum(_quad(f, a, b, tol) for a, b in zip(cuts[:-1], cuts[1:]))
    return total + _quad(f, far, math.inf, tol)


# ---------------------------------------------------------------------------
# plane integrals over R^2 \ B_R for C^{1,1} domains


def _intervals(flags, rho, test):
    """Maximal intervals of [rho[0], rho[-1]] where test holds, with refined ends."""
    out = []
    k = 0
    n = len(rho)
    while k < n:
        if not flags[k]:
            k += 1
            continue
        j = k
        while j + 1 < n and flags[j + 1]:
            j += 1
        a = rho[0] if k == 0 else _bisect(lambda t: not test(t), rho[k - 1], rho[k])
        b = rho[-1] if j == n - 1 else _bisect(test, rho[j], rho[j + 1])
        out.append((a, b, k > 0, j < n - 1))
        k = j + 1
    return out


def _weighted_piece(dd, a, b, ea, eb, e, s, tol):
    """int_a^b dd^{-e} rho^{-1-2s} with algebraic end weights where dd -> 0."""
    kern = lambda t: t ** (-1 - 2 * s)
    if e == 0:
        return (a ** (-2 * s) - b ** (-2 * s)) / (2 * s)
    if not (ea or eb):
        return _quad(lambda t: dd(t) ** (-e) * kern(t), a, b, tol)
    L = b - a
    ra = _end_ratio(dd, a, L, 1.0) if ea else None
    rb = _end_ratio(dd, b, L, -1.0) if eb else None

    # g times the weight (t-a)^{-e}(b-t)^{-e} (only at boundary ends) is dd^{-e} rho^{-1-2s}
    def g(t):
        if ea and eb:
            near_a = t - a < b - t
            q = (ra(t) if near_a else rb(t)) * ((b - t) if near_a else (t - a))
        else:
            q = ra(t) if ea else rb(t)
        return q ** e * kern(t)

    return _quad(g, a, b, tol, weight="alg", wvar=(-e if ea else 0.0, -e if eb else 0.0))


def _ray_value(dom, p, q, w, R, far, alpha, s, mode, r, tol, n):
    rho = np.linspace(R, far, n + 1)
    P = p + rho[:, None] * w
    kern_tail = lambda a: a ** (-2 * s) / (2 * s)
    if mode == "dist_bis":
        cuts = [R] + [c for c in ray_crossings(dom, p, w, R, far, n) if c > R] + [far]
        f = lambda t: _d(dom, p + t * w) ** s * t ** (-1 - 2 * s)
        total = sum(_quad(f, a, b, tol) for a, b in zip(cuts[:-1], cuts[1:]))
        return total + _quad(f, far, math.inf, tol)
    if mode == "AT1bis":
        test = lambda t: _inside(dom, p + t * w) and _d(dom, p + t * w) <= r
        flags = dom.contains(P) & (dom.dist(P) <= r)
        return sum(kern_tail(a) - kern_tail(b) for a, b, _, _ in _intervals(flags, rho, test))
    e = alpha - s
    if mode == "AT2simple_bis":
        test = lambda t: _inside(dom, p + t * w)
        flags = dom.contains(P)
        dd = lambda t: _d(dom, p + t * w)
    else:
        Q = q + rho[:, None] * w
        test = lambda t: _inside(dom, p + t * w) and _inside(dom, q + t * w)
        flags = dom.contains(P) & dom.contains(Q)
        dd = lambda t: min(_d(dom, p + t * w), _d(dom, q + t * w))
    return sum(_weighted_piece(dd, a, b, ea, eb, e, s, tol)
               for a, b, ea, eb in _intervals(flags, rho, test))


def _bis_pre(dom, p, q, R, alpha, s, mode, r):
    _check_s(s)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not dom.smooth or not np.isfinite(dom.bounding_radius):
        raise ValueError("domain needs a bounded C^{1,1} boundary (no polygon corners)")
    p = np.asarray(p, float)
    q = p if q is None else np.asarray(q, float)
    if mode == "dist_bis":
        if not np.linalg.norm(p) < R:
            raise ValueError("p must lie in B_R")
        if _d(dom, np.zeros(2)) > 3 * R * (1 + 1e-12):
            raise ValueError("B_3R must meet the boundary")
    else:
        _require_ball_inside(dom, p, R)
        if mode == "AT2bis":
            _require_ball_inside(dom, q, R)
        if mode != "AT1bis" and not s <= alpha < 1 + s:
            raise ValueError("alpha must lie in [s, 1+s)")
    if mode == "AT1bis" and (r is None or not R > 2 * r >= 0):
        raise ValueError("AT1bis needs R > 2r >= 0")
    return p, q


def bis_integrals(dom: Domain, p, q, R, alpha, s, mode, r=None, angles=256, tol=1e-9,
                  samples=2048):
    """Integral over R^2 \\ B_R of the chosen integrand, in polar coordinates.

    Modes: ``AT1bis`` chi_Omega(p+x) chi_[0,r](d(p+x)); ``AT2simple_bis``
    chi_Omega(p+x) d^{s-alpha}(p+x); ``AT2bis`` chi_Omega(p+x) chi_Omega(q+x)
    d^{s-alpha}(p+x, q+x); ``dist_bis`` d^s(p+x); each times |x|^{-2-2s}.

    Each of ``angles`` equispaced rays is integrated exactly in rho: support
    intervals are located on ``samples`` radial nodes and refined by
    bisection, then integrated in closed form or by adaptive quadrature with
    algebraic end weights.  The angular rule is the periodic trapezoid rule.
    """
    p, q = _bis_pre(dom, p, q, R, alpha, s, mode, r)
    far = max(np.linalg.norm(p), np.linalg.norm(q)) + dom.bounding_radius * 1.001 + R
    th = 2 * np.pi * np.arange(angles) / angles
    total = 0.0
    for t in th:
        w = np.array([math.cos(t), math.sin(t)])
        total += _ray_value(dom, p, q, w, R, far, alpha, s, mode, r, tol, samples)
    return total * 2 * np.pi / angles


def bis_integrals_mc(dom: Domain, p, q, R, alpha, s, mode, r=None, samples=10 ** 6, seed=0,
                     chunk=1 << 17):
    """Independent Monte Carlo estimate of :func:`bis_integrals`.

    Samples x = rho (cos t, sin t) with rho = R U^{-1/(2s)} (density
    proportional to rho^{-1-2s} on [R, inf)) and t uniform, so the integral
    is 2 pi R^{-2s} / (2s) times the mean of the remaining factor.

    Returns
    -------
    (estimate, stderr)
    """
    p, q = _bis_pre(dom, p, q, R, alpha, s, mode, r)
    rng = np.random.default_rng(seed)
    acc, acc2, n = 0.0, 0.0, 0
    e = None if alpha is None else alpha - s
    while n < samples:
        m = min(chunk, samples - n)
        rho = R * rng.random(m) ** (-1.0 / (2 * s))
        t = 2 * np.pi * rng.random(m)
        x = rho[:, None] * np.stack([np.cos(t), np.sin(t)], axis=1)
        X = p + x
        if mode == "AT1bis":
            f = (dom.contains(X) & (dom.dist(X) <= r)).astype(float)
        elif mode == "dist_bis":
            f = dom.dist(X) ** s
        else:
            inside = dom.contains(X)
            dd = dom.dist(X)
            if mode == "AT2bis":
                Y = q + x
                inside &= dom.contains(Y)
                dd = np.minimum(dd, dom.dist(Y))
            f = np.where(inside, np.maximum(dd, 1e-300) ** (-e), 0.0)
        acc += f.sum()
        acc2 += (f * f).sum()
        n += m
    mean = acc / n
    var = max(acc2 / n - mean * mean, 0.0)
    scale = 2 * np.pi * R ** (-2 * s) / (2 * s)
    return scale * mean, scale * math.sqrt(var / n)


def at2bis_majorant(dom: Domain, p, q, R, alpha, s, **kw):
    """Joint-distance integral and its majorant from 1/min(a,b)^e <= a^-e + b^-e.

    Returns ``(value, majorant)``; the check is value <= majorant.
    """
    v = bis_integrals(dom, p, q, R, alpha, s, "AT2bis", **kw)
    m = (bis_integrals(dom, p, None, R, alpha, s, "AT2simple_bis", **kw)
         + bis_integrals(dom, q, None, R, alpha, s, "AT2simple_bis", **kw))
    return v, m


# ---------------------------------------------------------------------------
# cutoff estimate


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    f = lambda u: np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    a, b = f(t), f(1.0 - t)
    return a / (a + b)


def cutoff(x, r0=1.0, r1=2.0):
    """Radial cutoff: 1 on B_{r0}, 0 outside B_{r1}, smooth in between."""
    x = np.asarray(x, dtype=float)
    return smooth_step((r1 - np.linalg.norm(x, axis=-1)) / (r1 - r0))


@dataclass
class CheckResult:
    """Outcome of a lemma check: the quantity, its bound and the ratio."""

    value: float
    bound: float
    ratio: float
    details: dict = field(default_factory=dict)


def _line_breaks(dom, extra_radii):
    """Break points for apply_L_point: boundary crossings and circle crossings."""
    rmax = 2 * dom.bounding_radius + 1.0

    def breaks(x, w):
        out = []
        for sgn in (1.0, -1.0):
            out += ray_crossings(dom, x, sgn * w, 1e-9, rmax, 1024)
        for rad in extra_radii:
            b, c = x @ w, x @ x - rad * rad
            disc = b * b - c
            if disc > 0:
                out += [abs(-b - math.sqrt(disc)), abs(-b + math.sqrt(disc))]
        return out

    return breaks


def w1_ratio(dom: Domain, R, s, w, probes=50, seed=0, h=None, a=None, radii=()):
    """max over probes in B_{R/2} of |L w| / ([w]_{C^s} R^{-s}).

    ``w`` maps (N, 2) points to values and must vanish on B_R and off Omega.
    The seminorm is sampled on a grid of spacing h (default R/16).
    """
    a = a or SpectralMeasure.axis(2)
    h = h or R / 16
    g = GridFunction.sample(dom, h, w)
    if not np.any(g.values):
        return CheckResult(0.0, 0.0, 0.0, {"probes": probes})
    semi = holder_seminorm(g, s, seed=seed)
    rng = np.random.default_rng(seed)
    rad = 0.5 * R * np.sqrt(rng.random(probes))
    ang = 2 * np.pi * rng.random(probes)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    u = lambda y: float(w(np.asarray(y, float)[None])[0])
    brk = _line_breaks(dom, (R, 2 * R) + tuple(radii))
    q = QuadratureConfig(rel_tol=1e-8)
    vals = [abs(apply_L_point(u, x, a, s, q, breaks=brk, support_radius=dom.bounding_radius))
            for x in pts]
    value = max(vals)
    bound = semi * R ** (-s)
    return CheckResult(value, bound, value / bound, {"seminorm": semi, "probes": probes})


def random_w(dom: Domain, R, s, rng, bumps=3):
    """(1 - cutoff(x/R)) d_+^s(x) (1 + sum c_i |x - z_i|^s), zero off Omega."""
    lo, hi = dom.bbox()
    z = lo + (hi - lo) * rng.random((bumps, 2))
    c = rng.uniform(-0.5, 0.5, bumps)

    def w(x):
        x = np.atleast_2d(x)
        bump = 1.0 + sum(ci * np.linalg.norm(x - zi, axis=1) ** s for ci, zi in zip(c, z))
        val = (1.0 - cutoff(x / R)) * dom.dist(x) ** s * bump
        return np.where(dom.contains(x), val, 0.0)

    return w


def cutoff_w1_check(dom: Domain, R, s, trials=3, probes=50, seed=0, h=None):
    """Largest w1_ratio over random C^s functions vanishing on B_R and off Omega.

    Requires B_2R inside Omega and B_3R meeting the boundary.
    """
    _check_s(s)
    d0 = _d(dom, np.zeros(2))
    if not _inside(dom, np.zeros(2)) or d0 < 2 * R:
        raise ValueError("B_2R must lie in the domain")
    if d0 > 3 * R * (1 + 1e-12):
        raise ValueError("B_3R must meet the boundary")
    best = CheckResult(0.0, 0.0, 0.0)
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(ss)
        res = w1_ratio(dom, R, s, random_w(dom, R, s, rng), probes, seed + k, h)
        if res.ratio >= best.ratio:
            best = res
    return best


# ---------------------------------------------------------------------------
# loss of 2s derivatives


def loss_2s_check(v, beta, s, support_radius, h_v=1 / 32, h_L=1 / 16, seed=0, a=None):
    """[L v]_{C^beta(B_1)} / [v]_{C^{beta+2s}(R^2)}.

    ``v`` maps (N, 2) points to values and vanishes outside B(0, support_radius).
    Both seminorms are sampled on grids (spacing h_L on B_1, h_v on the
    support box).  A vanishing v returns 0.
    """
    _check_s(s)
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    gam = beta + 2 * s
    if abs(gam - round(gam)) < 1e-12:
        raise ValueError("beta + 2s must not be an integer")
    a = a or SpectralMeasure.axis(2)
    big = Ball((0.0, 0.0), support_radius + 4 * h_v)
    gv = GridFunction.sample(big, h_v, v)
    semi_v = holder_seminorm(gv, gam, seed=seed)
    unit = Ball((0.0, 0.0), 1.0)
    gl = GridFunction.sample(unit, h_L)
    pts = gl.nodes()[gl.mask]
    Lv = np.zeros(gl.shape)
    Lv[gl.mask] = apply_L_points(v, pts, a, s, support_radius)
    semi_L = holder_seminorm(gl.with_values(Lv), beta, region=gl.mask, seed=seed)
    if semi_v == 0:
        return CheckResult(semi_L, 0.0, 0.0 if semi_L == 0 else math.inf)
    return CheckResult(semi_L, semi_v, semi_L / semi_v, {"gamma": gam})


def bump(center=(0.0, 0.0), radius=1.0, amp=1.0):
    """amp * exp(1 - 1/(1 - |x - c|^2 / radius^2)) inside the ball, 0 outside."""
    c = np.asarray(center, float)

    def f(x):
        x = np.atleast_2d(x)
        t = np.sum((x - c) ** 2, axis=1) / radius ** 2
        inside = t < 1
        return np.where(inside, amp * np.exp(1.0 - 1.0 / np.where(inside, 1.0 - t, 1.0)), 0.0)

    return f


def loss_2s_family():
    """Ten compactly supported smooth test functions, all supported in B_3."""
    out = []
    for k, (cx, cy, rad) in enumerate([(0, 0, 1.5), (0.3, -0.2, 1.0), (0, 0, 2.5), (0.5, 0.5, 0.8),
                                       (-0.4, 0.1, 2.0)]):
        out.append(bump((cx, cy), rad, 1.0 + 0.25 * k))

    def prod(f, g):
        return lambda x: f(x) * g(x)

    lin = lambda x: np.atleast_2d(x)[:, 0]
    quad = lambda x: np.sum(np.atleast_2d(x) ** 2, axis=1)
    out.append(prod(bump((0, 0), 2.0), lin))
    out.append(prod(bump((0.2, 0), 1.8), quad))
    out.append(prod(bump((0, 0), 2.5), lambda x: np.cos(3 * np.atleast_2d(x)[:, 1])))
    out.append(lambda x: bump((0, 0), 1.2)(x) - 0.5 * bump((0.5, 0), 0.7)(x))
    out.append(prod(bump((0, 0), 2.2), lambda x: np.sin(2 * np.atleast_2d(x)[:, 0] + 1)))
    return out


# ---------------------------------------------------------------------------
# batteries


@dataclass
class Battery:
    """Result of a randomized battery."""

    name: str
    s: float
    max_ratio: float
    violations: int
    rows: list = field(default_factory=list)


def random_convex_domain(rng):
    """A random convex polygon (possibly a thin needle) or ball."""
    kind = rng.random()
    if kind < 0.2:
        return Ball(tuple(rng.uniform(-1, 1, 2)), float(rng.uniform(0.5, 3.0)))
    m = int(rng.integers(3, 13))
    aspect = 40.0 if kind > 0.9 else float(rng.uniform(1, 4))
    pts = rng.normal(size=(m + 3, 2)) * np.array([aspect, 1.0]) * rng.uniform(0.5, 2.0)
    hull = ConvexHull(pts)
    v = pts[hull.vertices]
    return ConvexPolygon(tuple(map(tuple, v)))


def _random_inside(dom, rng, min_frac=0.05):
    lo, hi = dom.bbox()
    for _ in range(100):
        x = lo + (hi - lo) * rng.random((256, 2))
        x = x[dom.contains(x)]
        if len(x):
            d = dom.dist(x)
            ok = d >= min_frac * d.max()
            pick = x[ok][rng.integers(ok.sum())]
            return pick, _d(dom, pick)
    raise RuntimeError("could not sample an interior point")


def at1_battery(s, trials=200, seed=0):
    """at1_bound_check over random convex domains; compares with 2^{2s+1}."""
    C = at1_constant(s)
    rows, worst, bad = [], 0.0, 0
    for ss in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(ss)
        dom = random_convex_domain(rng)
        p, dp = _random_inside(dom, rng)
        R = dp * rng.uniform(0.2, 1.0)
        r = R * 2.0 ** (-rng.uniform(1.05, 10))
        t = rng.uniform(0, 2 * np.pi)
        w = (math.cos(t), math.sin(t))
        ratio = at1_bound_check(dom, p, R, r, w, s)
        rows.append({"R": R, "r": r, "ratio": ratio})
        worst = max(worst, ratio)
        bad += ratio > C * (1 + 1e-3)
    return Battery("AT1", s, worst, bad, rows)


AT2_ALPHA_OFFSETS = (0.0, 0.25, 0.5, 0.75)


def at2_battery(s, trials=100, seed=0):
    """max of at2_integral * R^{s+alpha} over random convex domains and alpha - s in AT2_ALPHA_OFFSETS."""
    rows, worst = [], 0.0
    for ss in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(ss)
        dom = random_convex_domain(rng)
        p, dp = _random_inside(dom, rng)
        q, dq = p, dp
        if rng.random() < 0.5:
            q, dq = _random_inside(dom, rng)
        R = min(dp, dq) * 10.0 ** (-rng.uniform(0.0, 3.0))
        t = rng.uniform(0, 2 * np.pi)
        w = (math.cos(t), math.sin(t))
        off = AT2_ALPHA_OFFSETS[int(rng.integers(len(AT2_ALPHA_OFFSETS)))]
        ratio = at2_integral(dom, p, q, R, s + off, w, s) * R ** (2 * s + off)
        rows.append({"R": R, "offset": off, "ratio": ratio})
        worst = max(worst, ratio)
    return Battery("AT2", s, worst, 0, rows)


def battery_max_by(rows, key):
    """Largest ratio per value of ``key`` among battery rows."""
    out = {}
    for r in rows:
        out[r[key]] = max(out.get(r[key], 0.0), r["ratio"])
    return dict(sorted(out.items()))


def dist_battery(s, trials=100, seed=0):
    """dist_tail_integral * R^s over random domains; compares with dist_constant."""
    C = dist_constant(s)
    rows, worst, bad = [], 0.0, 0
    for ss in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(ss)
        dom = random_convex_domain(rng)
        # shift so the origin is inside, then pick R with B_3R meeting the boundary
        c, dc = _random_inside(dom, rng, 0.0)
        dom = _shifted(dom, -c)
        R = dc / 3 * rng.uniform(1.01, 3.0)
        rad = R * math.sqrt(rng.random()) * 0.999
        t0, t = rng.uniform(0, 2 * np.pi, 2)
        p = rad * np.array([math.cos(t0), math.sin(t0)])
        ratio = dist_tail_integral(dom, p, R, (math.cos(t), math.sin(t)), s) * R ** s
        rows.append({"R": R, "ratio": ratio})
        worst = max(worst, ratio)
        bad += ratio > C * (1 + 1e-3)
    return Battery("dist", s, worst, bad, rows)


def _shifted(dom, v):
    if isinstance(dom, Ball):
        return Ball(tuple(np.asarray(dom.center) + v), dom.radius)
    return ConvexPolygon(tuple(map(tuple, np.asarray(dom.vertices) + v)))
