"""Classical and distance-weighted Hoelder norms of grid functions.

Suprema are sampled: derivatives come from centred differences and
difference quotients are scanned over a fixed family of node pairs (all
short offsets, a dyadic star of long offsets, every pair of a coarse
sub-lattice and seeded random pairs).  Weighted norms and classical norms
share the same pair family, so they agree exactly when the weight is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .geometry import Domain
from .grid import GridFunction

LOCAL_RADIUS = 4
STAR_DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2))
RANDOM_PAIRS = 10 ** 4
COARSE_NODES = 1500


class FlatFunctionError(ValueError):
    """Differences vanish to round-off, so no exponent can be fitted."""


def split_alpha(alpha):
    """Return (k, alpha') with alpha = k + alpha' and alpha' in (0, 1]."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    k = math.ceil(alpha) - 1
    return k, alpha - k


# ---------------------------------------------------------------------------
# derivatives


def derivative_fields(values, h, order):
    """Centred-difference derivatives of a 2-D array.

    Returns an array with one channel per multi-index of the given order
    (1: u_x, u_y; 2: u_xx, u_xy, u_yy) on the full grid; entries whose stencil
    leaves the array are NaN.
    """
    u = np.asarray(values, dtype=float)
    if order == 0:
        return u[..., None]
    out = np.full(u.shape + ((2,) if order == 1 else (3,)), np.nan)
    c = (slice(1, -1), slice(1, -1))
    if order == 1:
        out[c + (0,)] = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h)
        out[c + (1,)] = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h)
    elif order == 2:
        out[c + (0,)] = (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / h ** 2
        out[c + (1,)] = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h * h)
        out[c + (2,)] = (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / h ** 2
    else:
        raise ValueError("derivative order must be 0, 1 or 2")
    return out


def _stencil_ok(mask, order):
    """Nodes whose 3x3 neighbourhood lies inside mask (order >= 1)."""
    if order == 0:
        return mask.copy()
    ok = np.zeros_like(mask)
    inner = np.ones((mask.shape[0] - 2, mask.shape[1] - 2), dtype=bool)
    for di in (0, 1, 2):
        for dj in (0, 1, 2):
            inner &= mask[di:di + inner.shape[0], dj:dj + inner.shape[1]]
    ok[1:-1, 1:-1] = inner
    return ok


def _tensor_norm(F, order):
    """Euclidean norm of the derivative tensor from its independent channels."""
    if order == 2:
        return np.sqrt(F[..., 0] ** 2 + 2 * F[..., 1] ** 2 + F[..., 2] ** 2)
    return np.sqrt(np.sum(F * F, axis=-1))


# ---------------------------------------------------------------------------
# pair scanning


def pair_offsets(shape, local=LOCAL_RADIUS):
    """Half-plane set of node offsets with length >= 2 (in grid units)."""
    offs = set()
    for di in range(0, local + 1):
        for dj in range(-local, local + 1):
            if (di > 0 or dj > 0) and di * di + dj * dj >= 4:
                offs.add((di, dj))
    top = max(shape)
    for a, b in STAR_DIRECTIONS:
        m = 8
        while m * max(abs(a), abs(b)) < top:
            offs.add((a * m, b * m))
            m *= 2
    return sorted(offs)


@dataclass
class PairScan:
    """Maximizer record of a sampled difference quotient."""

    value: float = 0.0
    pair: tuple = field(default=None)


def _scan_pairs(F, valid, h, expo, weight=None, wpow=0.0, seed=0, diameter=np.inf):
    """sup over sampled pairs of w(x,y) |F(x) - F(y)| / |x - y|^expo.

    F has shape (nx, ny, c); ``weight`` is a per-node array and the pair
    weight is min(weight(x), weight(y))^wpow.
    """
    nx, ny = valid.shape
    best = PairScan()
    diff_norm = lambda A, B: np.sqrt(np.sum((A - B) ** 2, axis=-1))

    def consider(vals, pairs):
        if vals.size == 0:
            return
        k = int(np.argmax(vals))
        if vals[k] > best.value:
            best.value = float(vals[k])
            best.pair = pairs(k)

    for di, dj in pair_offsets(valid.shape):
        dist = h * math.hypot(di, dj)
        if di >= nx or abs(dj) >= ny or dist > diameter:
            continue
        xs = slice(0, nx - di)
        xe = slice(di, nx)
        ys, ye = (slice(0, ny - dj), slice(dj, ny)) if dj >= 0 else (slice(-dj, ny), slice(0, ny + dj))
        m = valid[xs, ys] & valid[xe, ye]
        if not np.any(m):
            continue
        q = diff_norm(F[xs, ys][m], F[xe, ye][m]) / dist ** expo
        if weight is not None:
            q = q * np.minimum(weight[xs, ys][m], weight[xe, ye][m]) ** wpow
        idx = np.argwhere(m)
        consider(q, lambda k: (tuple(idx[k]), (di, dj)))

    nodes = np.argwhere(valid)
    if len(nodes) < 2:
        return best
    # all pairs of a coarse sub-lattice, always including extreme nodes
    stride = max(1, int(math.ceil(math.sqrt(len(nodes) / COARSE_NODES))))
    coarse = nodes[(nodes[:, 0] % stride == 0) & (nodes[:, 1] % stride == 0)]
    extremes = nodes[[np.argmin(nodes[:, 0]), np.argmax(nodes[:, 0]),
                      np.argmin(nodes[:, 1]), np.argmax(nodes[:, 1]),
                      np.argmin(nodes.sum(1)), np.argmax(nodes.sum(1)),
                      np.argmin(nodes[:, 0] - nodes[:, 1]), np.argmax(nodes[:, 0] - nodes[:, 1])]]
    coarse = np.unique(np.vstack([coarse, extremes]), axis=0)
    rng = np.random.default_rng(seed)
    ia = rng.integers(0, len(nodes), RANDOM_PAIRS)
    ib = rng.integers(0, len(nodes), RANDOM_PAIRS)
    A = np.vstack([np.repeat(coarse, len(coarse), axis=0), nodes[ia]])
    B = np.vstack([np.tile(coarse, (len(coarse), 1)), nodes[ib]])
    for lo in range(0, len(A), 1 << 20):
        a, b = A[lo:lo + 1 << 20], B[lo:lo + 1 << 20]
        sep = h * np.hypot(*(a - b).T)
        keep = (sep >= 2 * h * (1 - 1e-12)) & (sep <= diameter)
        a, b, sep = a[keep], b[keep], sep[keep]
        q = diff_norm(F[a[:, 0], a[:, 1]], F[b[:, 0], b[:, 1]]) / sep ** expo
        if weight is not None:
            q = q * np.minimum(weight[a[:, 0], a[:, 1]], weight[b[:, 0], b[:, 1]]) ** wpow
        consider(q, lambda k: (tuple(a[k]), tuple(b[k] - a[k])))
    return best


# ---------------------------------------------------------------------------
# norms


def _region_mask(u: GridFunction, region):
    if region is None:
        return np.ones(u.shape, dtype=bool)
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    return np.asarray(region(u.nodes()), dtype=bool)


def holder_norm(u: GridFunction, beta, region=None, seed=0):
    """Sampled classical C^beta norm over the nodes selected by ``region``.

    Parameters
    ----------
    u : GridFunction
    beta : float
        k + beta' with k in {0, 1, 2}.
    region : callable, boolean array or None
        Point predicate; None means every grid node (the zero extension).
    """
    if u.dim != 2:
        raise ValueError("holder_norm expects a two-dimensional grid")
    k, bp = split_alpha(beta)
    if k > 2:
        raise ValueError("derivative order above 2 is not supported")
    mask = _region_mask(u, region)
    if mask.sum() < 10:
        raise ValueError("region contains fewer than 10 nodes")
    total = 0.0
    for j in range(k + 1):
        F = derivative_fields(u.values, u.h, j)
        ok = _stencil_ok(mask, j)
        if not np.any(ok):
            raise ValueError("no node admits the derivative stencil")
        total += float(np.sum(np.max(np.abs(F[ok]), axis=0)))
    return total + _seminorm(u, k, bp, mask, seed)


def _seminorm(u, k, bp, mask, seed):
    F = derivative_fields(u.values, u.h, k)
    ok = _stencil_ok(mask, k)
    if not np.any(ok):
        raise ValueError("no node admits the derivative stencil")
    pts = u.nodes()[mask]
    diam = float(np.max(np.ptp(pts, axis=0)) * math.sqrt(2)) if len(pts) else 0.0
    semi = 0.0
    for c in range(F.shape[-1]):
        semi += _scan_pairs(F[..., c:c + 1], ok, u.h, bp, seed=seed, diameter=diam).value
    return semi


def holder_seminorm(u: GridFunction, beta, region=None, seed=0):
    """Sampled top-order seminorm [u]_{C^beta}: Hoelder quotient of the k-th derivatives."""
    if u.dim != 2:
        raise ValueError("holder_seminorm expects a two-dimensional grid")
    k, bp = split_alpha(beta)
    if k > 2:
        raise ValueError("derivative order above 2 is not supported")
    mask = _region_mask(u, region)
    if mask.sum() < 10:
        raise ValueError("region contains fewer than 10 nodes")
    return _seminorm(u, k, bp, mask, seed)


@dataclass
class WeightedNormResult:
    sup_terms: list
    seminorm: float
    total: float
    alpha: float
    sigma: float
    k: int
    alpha_prime: float

    def to_dict(self):
        return {"alpha": self.alpha, "sigma": self.sigma, "k": self.k,
                "alpha_prime": self.alpha_prime, "sup_terms": list(self.sup_terms),
                "seminorm": self.seminorm, "total": self.total}


def weighted_norm(u: GridFunction, dom: Domain | None, alpha, sigma, seed=0) -> WeightedNormResult:
    """Distance-weighted norm with weights d^{j+sigma} and d(x,y)^{alpha+sigma}.

    A node enters the order-j terms (j >= 1) only if its stencil lies in the
    domain and h <= d(x)/4.
    """
    if not -2 <= sigma <= 2:
        raise ValueError("sigma must lie in [-2, 2]")
    dom = dom or u.domain
    k, ap = split_alpha(alpha)
    if k > 2:
        raise ValueError("derivative order above 2 is not supported")
    inside = np.asarray(dom.contains(u.nodes()), dtype=bool)
    d = np.zeros(u.shape)
    d[inside] = dom.dist(u.nodes()[inside])
    sups = []
    admissible = {}
    for j in range(k + 1):
        ok = inside.copy() if j == 0 else _stencil_ok(inside, j) & (u.h <= d / 4)
        if not np.any(ok):
            raise ValueError("no admissible node at this resolution")
        admissible[j] = ok
        F = derivative_fields(u.values, u.h, j)
        mag = np.abs(F[..., 0]) if j == 0 else _tensor_norm(F, j)
        sups.append(float(np.max(d[ok] ** (j + sigma) * mag[ok])))
    F = derivative_fields(u.values, u.h, k)
    if k == 2:
        # weight the mixed channel so channel differences give the tensor norm
        F = F * np.array([1.0, math.sqrt(2.0), 1.0])
    semi = _scan_pairs(F, admissible[k], u.h, ap, weight=np.where(inside, d, 0.0),
                       wpow=alpha + sigma, seed=seed).value
    return WeightedNormResult(sups, semi, float(sum(sups) + semi), alpha, sigma, k, ap)


def norm_monotonicity_check(u: GridFunction, dom: Domain | None, alpha1, alpha2, sigma, seed=0):
    """Ratio of the weighted norms at alpha1 <= alpha2 (0 when both vanish)."""
    if alpha1 > alpha2:
        raise ValueError("need alpha1 <= alpha2")
    n1 = weighted_norm(u, dom, alpha1, sigma, seed).total
    if alpha1 == alpha2:
        return 1.0 if n1 > 0 else 0.0
    n2 = weighted_norm(u, dom, alpha2, sigma, seed).total
    if n2 == 0.0:
        if n1 != 0.0:
            raise ZeroDivisionError("second norm vanishes while the first does not")
        return 0.0
    return n1 / n2


# ---------------------------------------------------------------------------
# exponent fits


@dataclass
class ExponentFit:
    gamma: float
    r2: float
    scales: np.ndarray
    diffs: np.ndarray

    def __iter__(self):
        return iter((self.gamma, self.r2))

    def rows(self):
        return [(t, d, math.log(t), math.log(d)) for t, d in zip(self.scales, self.diffs)]


def local_exponent_fit(u, x0, direction, scales, order=1, boundary_exponent=None,
                       check_scales=True):
    """Slope of log |difference| against log t.

    Parameters
    ----------
    u : GridFunction or callable
        Grid functions are evaluated by interpolation (exact at nodes).
    x0, direction : array_like
    scales : sequence of float
        At least 5 values spanning at least 3 octaves; for grids each scale
        must be at least 4h.
    order : {1, 2}
        First difference u(x0) - u(x0 + t e) or centred second difference.
    boundary_exponent : float, optional
        Passed to the grid interpolation near the boundary.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    t = np.asarray(scales, dtype=float)
    if check_scales:
        if len(t) < 5 or t.max() / t.min() < 8 * (1 - 1e-12):
            raise ValueError("need at least 5 scales spanning 3 octaves")
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    x0 = np.asarray(x0, dtype=float)
    plus = x0 + t[:, None] * e
    minus = x0 - t[:, None] * e
    if isinstance(u, GridFunction):
        if check_scales and t.min() < 4 * u.h * (1 - 1e-12):
            raise ValueError("scales below 4h are under-resolved")
        probes = plus if order == 1 else np.vstack([plus, minus])
        if not np.all(u.domain.contains(probes)):
            raise ValueError("probe points must lie inside the domain")
        ev = lambda p: np.atleast_1d(u(p, boundary_exponent=boundary_exponent))
    else:
        ev = lambda p: np.array([float(u(q)) for q in p])
    u0 = ev(x0[None, :])[0]
    if order == 1:
        diff = np.abs(u0 - ev(plus))
    else:
        diff = np.abs(ev(plus) - 2 * u0 + ev(minus))
    if np.any(diff < 1e-14):
        raise FlatFunctionError("differences underflow 1e-14; exponent undefined")
    fit = linregress(np.log(t), np.log(diff))
    return ExponentFit(float(fit.slope), float(fit.rvalue ** 2), t, diff)
