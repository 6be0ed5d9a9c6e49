"""Littlewood-Paley blocks built from one smooth radial cutoff.

``chi`` equals 1 on |xi| <= 3/4 and vanishes for |xi| >= 1.  The annular
symbols are ``h_j(xi) = chi(2**-(j+1) xi) - chi(2**-j xi)``; the inhomogeneous
calculus uses bands j >= 0 plus the low-pass block ``chi`` at j = -1, the
homogeneous one uses ``h_j`` for every integer j.  All blocks act by exact
symbol multiplication on the lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .core import to_physical

PLATEAU = 0.75


def _glue(t):
    """Smooth step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) gluing in between."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    if np.any(inside):
        ti = t[inside]
        # theta(t) / (theta(t) + theta(1-t)) with theta(t) = exp(-1/t)
        out[inside] = expit(1.0 / (1.0 - ti) - 1.0 / ti)
    return out


@dataclass(frozen=True)
class BumpProfile:
    """Radial cutoff chi with transition on [3/4, 1].

    ``name`` identifies the closed form; swapping profiles is only meant for
    the verification harness.
    """

    transition: tuple = (PLATEAU, 1.0)
    name: str = "exp-glue"

    def chi(self, r):
        r = np.abs(np.asarray(r, dtype=np.float64))
        a, b = self.transition
        out = np.where(r <= a, 1.0, 0.0)
        mid = (r > a) & (r < b)
        if np.any(mid):
            out[mid] = _glue((b - r[mid]) / (b - a))
        return out[()] if out.ndim == 0 else out

    def band(self, j, r):
        """h_j at radius r (physical |xi|)."""
        r = np.asarray(r, dtype=np.float64)
        return self.chi(r * 2.0 ** (-j - 1)) - self.chi(r * 2.0 ** (-j))


DEFAULT_PROFILE = BumpProfile()


def make_profile():
    """The canonical cutoff used throughout the package."""
    return DEFAULT_PROFILE


def band_symbol(profile, j, xi):
    """Value of h_j at physical frequency ``xi`` (vector or radius)."""
    xi = np.asarray(xi, dtype=np.float64)
    r = np.abs(xi) if xi.ndim == 0 else np.linalg.norm(xi, axis=-1)
    return profile.band(j, r)


def support_annulus(j):
    """Closed annulus (inner, outer) outside which h_j vanishes."""
    return 3.0 * 2.0 ** (j - 2), 2.0 ** (j + 1)


def in_range(grid, j, homogeneous):
    lo, hi = grid.band_range(homogeneous)
    return lo <= j <= hi


@lru_cache(maxsize=512)
def block_symbol(grid, j, homogeneous=False, profile=DEFAULT_PROFILE):
    """Lattice multiplier of the j-th block (read-only array)."""
    r = grid.radius
    if not homogeneous and j == -1:
        sym = profile.chi(r)
    elif not homogeneous and j < -1:
        sym = np.zeros(grid.shape)
    else:
        sym = profile.band(j, r)
    sym = np.asarray(sym, dtype=np.float64)
    sym.setflags(write=False)
    return sym


@lru_cache(maxsize=512)
def lowpass_symbol(grid, k, homogeneous=False, profile=DEFAULT_PROFILE):
    """Lattice multiplier of S_k, via the telescoped form chi(2**-(k+1) xi).

    In the inhomogeneous calculus S_k = 0 for k <= -2.  In the homogeneous
    calculus the zero mode is kept for every k: on the torus constants are the
    j -> -infinity end of the band sum.
    """
    if not homogeneous and k <= -2:
        sym = np.zeros(grid.shape)
    else:
        sym = np.asarray(profile.chi(grid.radius * 2.0 ** (-k - 1)), dtype=np.float64)
    sym.setflags(write=False)
    return sym


def delta_j(f, j, homogeneous=False, profile=DEFAULT_PROFILE):
    """Dyadic block Delta_j f (or its homogeneous version).

    Works for scalar and vector fields.  A block outside the resolved range is
    returned as the zero field with ``truncated=True``.
    """
    if not in_range(f.grid, j, homogeneous):
        return replace(f, coeffs=np.zeros_like(f.coeffs), truncated=True)
    return f.with_coeffs(f.coeffs * block_symbol(f.grid, j, homogeneous, profile))


def partial_sum(f, k, homogeneous=False, profile=DEFAULT_PROFILE):
    """Low-pass S_k f = sum of blocks j <= k."""
    return f.with_coeffs(f.coeffs * lowpass_symbol(f.grid, k, homogeneous, profile))


@dataclass
class DyadicDecomposition:
    profile: BumpProfile
    homogeneous: bool
    bands: dict = field(default_factory=dict)
    j_min: int = 0
    j_max: int = 0
    reconstruction_error: float = 0.0

    def total(self):
        fields = list(self.bands.values())
        out = fields[0].coeffs.copy()
        for b in fields[1:]:
            out += b.coeffs
        return fields[0].with_coeffs(out)

    def nonzero_bands(self, tol=0.0):
        return [j for j, b in self.bands.items() if np.max(np.abs(b.coeffs)) > tol]


def decompose(f, homogeneous=False, profile=DEFAULT_PROFILE):
    """All resolved blocks of ``f``; checks the partition of unity on the way.

    The homogeneous blocks sum to ``f`` minus its mean mode.
    """
    lo, hi = f.grid.band_range(homogeneous)
    bands = {j: delta_j(f, j, homogeneous, profile) for j in range(lo, hi + 1)}
    dec = DyadicDecomposition(profile, homogeneous, bands, lo, hi)
    target = f.coeffs.copy()
    if homogeneous:
        target[(..., ) + (0,) * f.grid.d] = 0.0
    diff = to_physical(dec.total().coeffs - target, f.grid)
    scale = np.max(np.abs(to_physical(f.coeffs, f.grid)))
    err = float(np.max(np.abs(diff)))
    dec.reconstruction_error = err / scale if scale > 0 else err
    return dec


def band_physical(f, j, homogeneous=False, profile=DEFAULT_PROFILE):
    """Physical samples of Delta_j f (no symmetry check)."""
    return to_physical(f.coeffs * block_symbol(f.grid, j, homogeneous, profile), f.grid)


def partition_defect(grid, profile=DEFAULT_PROFILE):
    """max over the lattice of |chi + sum_{j=0}^{j_max} h_j - 1|."""
    total = np.array(block_symbol(grid, -1, False, profile))
    for j in range(0, grid.j_max + 1):
        total = total + block_symbol(grid, j, False, profile)
    return float(np.max(np.abs(total - 1.0)))


def resolved_bands(grid, homogeneous=False):
    lo, hi = grid.band_range(homogeneous)
    return range(lo, hi + 1)

