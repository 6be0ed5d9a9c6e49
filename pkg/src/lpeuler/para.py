"""Bony paraproducts, remainders and the transport commutator.

T_f g = sum_j S_{j-4} f Delta_j g and R(f, g) = sum_{|i-j|<=3} Delta_i f Delta_j g,
summed over the resolved band range.  Products are dealiased (2/3 rule), so
``T_f g + T_g f + R(f, g)`` reproduces the dealiased product exactly and every
frequency-support statement is exact up to round-off.

In the homogeneous calculus the mean mode of a factor plays the role of the
j -> -infinity band: it sits inside every low-pass S_k, and the product of the
two means is booked in the remainder.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpectralField, dealiased_product, to_physical, to_spectral
from .errors import DivergenceError
from .lp import DEFAULT_PROFILE, block_symbol, lowpass_symbol
from .ops import divergence_defect, partial

PARA_OFFSET = 4
REMAINDER_WIDTH = 3


def _bands(grid, homogeneous):
    lo, hi = grid.band_range(homogeneous)
    return range(lo, hi + 1)


def _finish(acc, grid):
    return SpectralField(grid, to_spectral(acc, grid) * grid.dealias_mask)


def paraproduct(f, g, homogeneous=False, profile=DEFAULT_PROFILE):
    """T_f g: low frequencies of ``f`` times the j-th block of ``g``."""
    grid = f.grid
    mask = grid.dealias_mask
    fc, gc = f.coeffs * mask, g.coeffs * mask
    acc = np.zeros(grid.shape)
    for j in _bands(grid, homogeneous):
        low = lowpass_symbol(grid, j - PARA_OFFSET, homogeneous, profile)
        band = block_symbol(grid, j, homogeneous, profile)
        if not np.any(low) or not np.any(band):
            continue
        acc += to_physical(fc * low, grid) * to_physical(gc * band, grid)
    return _finish(acc, grid)


def remainder(f, g, homogeneous=False, profile=DEFAULT_PROFILE):
    """R(f, g): products of blocks with comparable frequencies, |i - j| <= 3."""
    grid = f.grid
    mask = grid.dealias_mask
    fc, gc = f.coeffs * mask, g.coeffs * mask
    acc = np.zeros(grid.shape)
    for i in _bands(grid, homogeneous):
        band = block_symbol(grid, i, homogeneous, profile)
        # sum_{j=i-3}^{i+3} Delta_j = S_{i+3} - S_{i-4}
        window = lowpass_symbol(grid, i + REMAINDER_WIDTH, homogeneous, profile) - lowpass_symbol(
            grid, i - REMAINDER_WIDTH - 1, homogeneous, profile
        )
        if not np.any(band) or not np.any(window):
            continue
        acc += to_physical(fc * band, grid) * to_physical(gc * window, grid)
    if homogeneous:
        zero = (0,) * grid.d
        acc += (fc[zero] * gc[zero]).real
    return _finish(acc, grid)


@dataclass
class BonyDecomposition:
    para_fg: SpectralField
    para_gf: SpectralField
    remainder: SpectralField
    residual: float

    def total(self):
        return self.para_fg + self.para_gf + self.remainder


def bony(f, g, homogeneous=False, profile=DEFAULT_PROFILE):
    """Split the dealiased product fg into T_f g + T_g f + R(f, g).

    ``residual`` is the max-norm distance to the directly computed dealiased
    product, relative to ``max|f| max|g|`` (absolute when that vanishes).
    """
    tfg = paraproduct(f, g, homogeneous, profile)
    tgf = paraproduct(g, f, homogeneous, profile)
    rem = remainder(f, g, homogeneous, profile)
    direct = dealiased_product(f, g)
    grid = f.grid
    diff = to_physical(tfg.coeffs + tgf.coeffs + rem.coeffs - direct.coeffs, grid)
    scale = np.max(np.abs(to_physical(f.coeffs, grid))) * np.max(np.abs(to_physical(g.coeffs, grid)))
    err = float(np.max(np.abs(diff)))
    return BonyDecomposition(tfg, tgf, rem, err / scale if scale > 0 else err)


def para_block(f, g, j, k, homogeneous=False, profile=DEFAULT_PROFILE):
    """Delta_k (S_{j-4} f Delta_j g), one term of the paraproduct seen by block k."""
    grid = f.grid
    low = f.with_coeffs(f.coeffs * lowpass_symbol(grid, j - PARA_OFFSET, homogeneous, profile))
    band = g.with_coeffs(g.coeffs * block_symbol(grid, j, homogeneous, profile))
    prod = dealiased_product(low, band)
    return prod.with_coeffs(prod.coeffs * block_symbol(grid, k, homogeneous, profile))


def remainder_block(f, g, j, l, k, homogeneous=False, profile=DEFAULT_PROFILE):
    """Delta_k (Delta_j f Delta_{j+l} g)."""
    grid = f.grid
    a = f.with_coeffs(f.coeffs * block_symbol(grid, j, homogeneous, profile))
    b = g.with_coeffs(g.coeffs * block_symbol(grid, j + l, homogeneous, profile))
    prod = dealiased_product(a, b)
    return prod.with_coeffs(prod.coeffs * block_symbol(grid, k, homogeneous, profile))


def _max_abs(f):
    return float(np.max(np.abs(to_physical(f.coeffs, f.grid))))


def para_support_scan(f, g, homogeneous=False, profile=DEFAULT_PROFILE):
    """Exhaustive (j, k) scan of Delta_k(S_{j-4} f Delta_j g).

    Returns the largest block seen with |j - k| >= 3 (``leak``) and with
    |j - k| <= 2 (``active``), both relative to max|f| max|g|.
    """
    scale = _max_abs(f) * _max_abs(g) or 1.0
    leak = active = 0.0
    bands = list(_bands(f.grid, homogeneous))
    for j in bands:
        for k in bands:
            v = _max_abs(para_block(f, g, j, k, homogeneous, profile)) / scale
            if abs(j - k) >= 3:
                leak = max(leak, v)
            else:
                active = max(active, v)
    return {"leak": leak, "active": active, "pairs": len(bands) ** 2}


def remainder_support_scan(f, g, homogeneous=False, profile=DEFAULT_PROFILE):
    """Scan Delta_k(Delta_j f Delta_{j+l} g) over |l| <= 3 and all (j, k).

    ``leak`` is the largest term with j <= k - 6, ``active`` the largest with
    j >= k - 5, both relative to max|f| max|g|.
    """
    scale = _max_abs(f) * _max_abs(g) or 1.0
    leak = active = 0.0
    bands = list(_bands(f.grid, homogeneous))
    count = 0
    for k in bands:
        for j in bands:
            for l in range(-REMAINDER_WIDTH, REMAINDER_WIDTH + 1):
                if j + l not in bands:
                    continue
                count += 1
                v = _max_abs(remainder_block(f, g, j, l, k, homogeneous, profile)) / scale
                if j <= k - 6:
                    leak = max(leak, v)
                else:
                    active = max(active, v)
    return {"leak": leak, "active": active, "terms": count}


# ---------------------------------------------------------------- commutator

def _check_div_free(u, tol):
    defect = divergence_defect(u)
    if defect > tol:
        raise DivergenceError(f"velocity is not divergence-free (defect {defect:.3e})")


def _hblock(f, j, profile=DEFAULT_PROFILE):
    return f.with_coeffs(f.coeffs * block_symbol(f.grid, j, True, profile))


def commutator(u, f, j, div_tol=1e-8, profile=DEFAULT_PROFILE):
    """([u, Delta_j], grad) f = u . grad(Delta_j f) - Delta_j(u . grad f).

    Homogeneous block, dealiased products.
    """
    _check_div_free(u, div_tol)
    grid = f.grid
    out = np.zeros(grid.shape, dtype=np.complex128)
    for l, ul in enumerate(u.components):
        df = partial(f, l)
        out += dealiased_product(ul, _hblock(df, j, profile)).coeffs
        out -= _hblock(dealiased_product(ul, df), j, profile).coeffs
    return SpectralField(grid, out)


@dataclass
class CommutatorSplit:
    """The five paraproduct pieces of the commutator (summed over components)."""

    terms: tuple
    j: int

    @property
    def total(self):
        out = self.terms[0]
        for t in self.terms[1:]:
            out = out + t
        return out

    def __getitem__(self, i):
        return self.terms[i]


def commutator_split(u, f, j, div_tol=1e-8, profile=DEFAULT_PROFILE):
    """Homogeneous Bony split of the commutator into terms I..V.

    I   = sum_l T_{Delta_j d_l f} u^l
    II  = sum_l R(u^l, Delta_j d_l f)
    III = sum_l [T_{u^l}, Delta_j] d_l f
    IV  = -sum_l Delta_j T_{d_l f} u^l
    V   = -sum_l Delta_j R(u^l, d_l f)
    """
    _check_div_free(u, div_tol)
    grid = f.grid
    acc = [np.zeros(grid.shape, dtype=np.complex128) for _ in range(5)]
    for l, ul in enumerate(u.components):
        df = partial(f, l)
        bdf = _hblock(df, j, profile)
        acc[0] += paraproduct(bdf, ul, True, profile).coeffs
        acc[1] += remainder(ul, bdf, True, profile).coeffs
        acc[2] += paraproduct(ul, bdf, True, profile).coeffs
        acc[2] -= _hblock(paraproduct(ul, df, True, profile), j, profile).coeffs
        acc[3] -= _hblock(paraproduct(df, ul, True, profile), j, profile).coeffs
        acc[4] -= _hblock(remainder(ul, df, True, profile), j, profile).coeffs
    return CommutatorSplit(tuple(SpectralField(grid, a) for a in acc), j)
