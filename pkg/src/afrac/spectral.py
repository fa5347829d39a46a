"""Spectral measures on the unit circle.

A measure is a finite list of Dirac atoms plus a piecewise-constant angular
density (the density part is only available in two dimensions).  Instances
are immutable and stored in a canonical form, so equality of fields means
equality of measures.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * np.pi
_NORM_TOL = 1e-12
_MERGE_TOL = 1e-12


def _wrap(theta):
    t = np.mod(theta, TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    return 0.0 if t >= TWO_PI else float(t)


def _canonical_density(pieces):
    """Sum overlapping pieces and merge equal neighbours on [0, 2*pi)."""
    if not pieces:
        return ()
    cuts = {0.0, TWO_PI}
    spans = []
    for a, b, v in pieces:
        if v < 0:
            raise ValueError("density values must be nonnegative")
        if not b > a:
            raise ValueError("density interval must satisfy a < b")
        if b - a >= TWO_PI - _MERGE_TOL:
            spans.append((0.0, TWO_PI, v))
            continue
        a0, b0 = _wrap(a), _wrap(b)
        if b0 == 0.0:
            b0 = TWO_PI
        if a0 < b0:
            spans.append((a0, b0, v))
        else:
            spans.append((a0, TWO_PI, v))
            spans.append((0.0, b0, v))
    for a, b, _ in spans:
        cuts.update((a, b))
    cuts = np.unique(np.round(np.array(sorted(cuts)), 12))
    # snap nearly coincident cuts so that round-off never makes slivers
    keep = np.concatenate([[True], np.diff(cuts) > _MERGE_TOL])
    cuts = cuts[keep]
    cuts[-1] = TWO_PI
    vals = np.zeros(len(cuts) - 1)
    for a, b, v in spans:
        lo = np.searchsorted(cuts, round(a, 12) - _MERGE_TOL)
        hi = np.searchsorted(cuts, round(b, 12) - _MERGE_TOL)
        vals[lo:hi] += v
    out = []
    for i, v in enumerate(vals.tolist()):
        if v == 0.0:
            continue
        a, b = float(cuts[i]), float(cuts[i + 1])
        if out and out[-1][1] == a and out[-1][2] == v:
            out[-1] = (out[-1][0], b, v)
        else:
            out.append((a, b, v))
    return tuple(out)


def _canonical_atoms(atoms, dim):
    merged = []
    for direction, weight in atoms:
        w = np.asarray(direction, dtype=float).reshape(-1)
        if w.size != dim:
            raise ValueError("atom direction has wrong dimension")
        if abs(np.linalg.norm(w) - 1.0) > _NORM_TOL:
            raise ValueError("atom directions must be unit vectors")
        if weight < 0:
            raise ValueError("atom weights must be nonnegative")
        if weight == 0:
            continue
        for k, (d, c) in enumerate(merged):
            if np.max(np.abs(np.asarray(d) - w)) <= _MERGE_TOL:
                merged[k] = (d, c + float(weight))
                break
        else:
            # snap round-off (cos 90 deg etc.) so equal measures compare equal
            merged.append((tuple(float(t) + 0.0 for t in np.round(w, 14)), float(weight)))
    merged.sort()
    return tuple(merged)


@dataclass(frozen=True)
class SpectralMeasure:
    """Nonnegative finite measure on the unit sphere.

    Parameters
    ----------
    atoms : sequence of (direction, weight)
        Dirac masses.  Directions must have unit norm within 1e-12.
    density : sequence of (a, b, value)
        Piecewise-constant density in the angle variable, in radians,
        with respect to arc length.  Two dimensions only.
    dim : int
        Ambient dimension.
    """

    atoms: tuple = ()
    density: tuple = ()
    dim: int = 2

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.density and self.dim != 2:
            raise ValueError("density pieces are only supported for dim=2")
        object.__setattr__(self, "atoms", _canonical_atoms(self.atoms, self.dim))
        object.__setattr__(self, "density", _canonical_density(self.density))

    # constructors -------------------------------------------------------
    @classmethod
    def axis(cls, dim=2, weight=1.0):
        """Atoms of equal weight at every signed coordinate direction."""
        atoms = []
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = 1.0
            atoms += [(e, weight), (-e, weight)]
        return cls(atoms=atoms, dim=dim)

    @classmethod
    def uniform(cls, value=1.0):
        return cls(density=[(0.0, TWO_PI, value)])

    @classmethod
    def from_degrees(cls, atoms=(), density=()):
        """Build a planar measure from angles given in degrees."""
        at = [((np.cos(np.radians(t)), np.sin(np.radians(t))), w) for t, w in atoms]
        de = [(np.radians(a), np.radians(b), v) for a, b, v in density]
        return cls(atoms=at, density=de, dim=2)

    # queries ------------------------------------------------------------
    def total_mass(self):
        return float(sum(w for _, w in self.atoms)
                     + sum((b - a) * v for a, b, v in self.density))

    def density_at(self, theta):
        t = _wrap(theta)
        for a, b, v in self.density:
            if a <= t < b:
                return v
        return 0.0

    def is_even(self):
        return self == symmetrize(self)

    def is_axis(self):
        """True when the measure only charges signed coordinate directions."""
        if self.density:
            return False
        for d, _ in self.atoms:
            if np.count_nonzero(np.abs(np.asarray(d)) > _MERGE_TOL) != 1:
                return False
        return True

    def axis_coefficients(self):
        """Per-axis weights (w(+e_i) + w(-e_i)) / 2 for an axis measure."""
        if not self.is_axis():
            raise ValueError("measure has non-axis atoms or a density part")
        c = np.zeros(self.dim)
        for d, w in self.atoms:
            i = int(np.argmax(np.abs(d)))
            c[i] += 0.5 * w
        return c

    def is_elliptic(self, s, sample_count=720):
        """Validity query: positive directional coercivity on all probes."""
        if self.total_mass() == 0.0:
            return False
        if self.dim != 2:
            return bool(np.all(self.axis_coefficients() > 0)) if self.is_axis() else True
        return ellipticity_lambda(self, s, sample_count) > 1e-12


def total_mass(a: SpectralMeasure) -> float:
    """Total mass: atom weights plus the exact integral of the density."""
    return a.total_mass()


def _density_projection(a, s, theta_p):
    total = 0.0
    for lo, hi, v in a.density:
        # zeros of cos(theta - theta_p) make the integrand non-smooth
        pts = [t for t in (theta_p + 0.5 * np.pi + k * np.pi for k in range(-3, 4))
               if lo < t < hi]
        val, _ = integrate.quad(lambda t: abs(np.cos(t - theta_p)) ** (2 * s),
                                lo, hi, points=pts or None,
                                epsrel=1e-10, epsabs=1e-14, limit=200)
        total += v * val
    return total


def ellipticity_lambda(a: SpectralMeasure, s: float, sample_count: int) -> float:
    """Minimum of the directional coercivity integral over probe directions.

    The probes are ``sample_count`` equispaced angles in [0, pi).  The
    result is an upper estimate of the ellipticity constant.
    """
    if a.dim != 2:
        raise ValueError("ellipticity_lambda requires dim=2")
    if sample_count < 16:
        raise ValueError("sample_count must be at least 16")
    if a.total_mass() == 0.0:
        raise ValueError("measure has zero total mass")
    thetas = np.arange(sample_count) * np.pi / sample_count
    probes = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    vals = np.zeros(sample_count)
    for d, w in a.atoms:
        vals += w * np.abs(probes @ np.asarray(d)) ** (2 * s)
    if a.density:
        vals += np.array([_density_projection(a, s, t) for t in thetas])
    return float(vals.min())


def symmetrize(a: SpectralMeasure) -> SpectralMeasure:
    """Even part (a(w) + a(-w)) / 2, which preserves total mass."""
    atoms = []
    for d, w in a.atoms:
        atoms.append((d, 0.5 * w))
        atoms.append((tuple(-t for t in d), 0.5 * w))
    dens = []
    for lo, hi, v in a.density:
        dens.append((lo, hi, 0.5 * v))
        dens.append((lo + np.pi, hi + np.pi, 0.5 * v))
    return SpectralMeasure(atoms=atoms, density=dens, dim=a.dim)


def parse_measure(text: str) -> SpectralMeasure:
    """Parse ``atoms = [(deg, w), ...]; density = [(a_deg, b_deg, v), ...]``.

    The keyword ``axis`` gives the four coordinate atoms.
    """
    text = text.strip()
    if text == "axis":
        return SpectralMeasure.axis()
    if text == "uniform":
        return SpectralMeasure.uniform()
    fields = {"atoms": [], "density": []}
    for part in text.replace("\n", ";").split(";"):
        if not part.strip():
            continue
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in fields:
            raise ValueError(f"bad measure literal: {part!r}")
        fields[key] = list(ast.literal_eval(val.strip()))
    return SpectralMeasure.from_degrees(fields["atoms"], fields["density"])
