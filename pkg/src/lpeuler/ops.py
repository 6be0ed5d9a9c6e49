"""Maximal functions, Fourier multipliers, Leray projection and pressure.

Symbol conventions: d_k <-> i xi_k (Nyquist index zeroed), Delta^{-1} <->
-1/|xi|^2, and every homogeneous multiplier is 0 on the zero mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .core import (
    SpectralField,
    VectorField,
    to_physical,
    to_spectral,
)
from .errors import DivergenceError, MeanModeError, SupportError

# mean modes below this (relative to the largest coefficient) count as zero
MEAN_TOL = 1e-12


def _zero_safe_inverse(x):
    out = np.zeros_like(x, dtype=np.float64)
    nz = x != 0
    out[nz] = 1.0 / x[nz]
    return out


@lru_cache(maxsize=64)
def _inv_radius2(grid):
    inv = _zero_safe_inverse(np.asarray(grid.radius2))
    inv.setflags(write=False)
    return inv


@lru_cache(maxsize=64)
def _inv_deriv_radius2(grid):
    r2 = np.broadcast_to(sum(x**2 for x in grid.xi_deriv), grid.shape)
    inv = _zero_safe_inverse(np.asarray(r2))
    inv.setflags(write=False)
    return inv


# ------------------------------------------------------------ maximal function

@dataclass(frozen=True)
class MaximalConfig:
    """Ball radii in grid cells; a radius of 1 is the single centre cell."""

    radii: tuple = field(default=())

    def __post_init__(self):
        r = tuple(float(x) for x in self.radii)
        if not r:
            raise ValueError("at least one radius is required")
        if any(x <= 0 for x in r) or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("radii must be positive and strictly increasing")
        if r[0] > 1:
            raise ValueError("the smallest ball must not exceed one grid cell")
        object.__setattr__(self, "radii", r)

    @classmethod
    def dyadic(cls, grid):
        radii = []
        rho = 1
        while rho <= grid.n // 2:
            radii.append(rho)
            rho *= 2
        return cls(tuple(radii))


def _min_image_offsets(grid):
    m = np.rint(sfft.fftfreq(grid.n, 1.0 / grid.n))
    mesh = np.meshgrid(*([m] * grid.d), indexing="ij")
    return np.sqrt(sum(a**2 for a in mesh))


@lru_cache(maxsize=64)
def _ball_kernel_hat(grid, radius):
    dist = _min_image_offsets(grid)
    ball = (dist < radius).astype(np.float64)
    ball /= ball.sum()
    k = sfft.rfftn(ball)
    k.setflags(write=False)
    return k


def ball_average(samples, grid, radius):
    """Average of ``samples`` over the open periodic ball of ``radius`` cells."""
    if radius <= 1:
        return np.array(samples, dtype=np.float64)
    avg = sfft.irfftn(sfft.rfftn(samples) * _ball_kernel_hat(grid, radius), s=grid.shape)
    return np.maximum(avg, 0.0)


def maximal(samples, grid, cfg=None):
    """Discrete Hardy-Littlewood maximal function of ``|samples|``.

    Supremum over the configured radii of the ball average of ``|f|``; the
    smallest ball is the centre cell, so ``|f| <= Mf`` holds exactly.
    """
    cfg = cfg or MaximalConfig.dyadic(grid)
    a = np.abs(np.asarray(samples, dtype=np.float64))
    out = None
    for rho in cfg.radii:
        avg = ball_average(a, grid, rho)
        out = avg if out is None else np.maximum(out, avg)
    return out


# --------------------------------------------------------------- Peetre sup

def weighted_translate_sup(a, grid, t, power, stop_below=None):
    """sup over lattice translates z of a(x - z) / (1 + t|z|)^power.

    Translates are visited in order of increasing |z| and the scan stops once
    ``max(a) * weight`` cannot raise the running minimum any more, so the
    result equals the full sup over all translates.
    """
    dist = _min_image_offsets(grid) * grid.dx
    order = np.argsort(dist, axis=None, kind="stable")
    shifts = np.array(np.unravel_index(order, grid.shape)).T
    dist_sorted = dist.ravel()[order]
    w = (1.0 + t * dist_sorted) ** (-power)
    amax = float(np.max(a))
    out = np.array(a, dtype=np.float64)
    axes = tuple(range(grid.d))
    for i in range(1, len(order)):
        if amax * w[i] <= float(out.min()):
            break
        shift = tuple(int(s) for s in shifts[i])
        cand = np.roll(a, shift, axis=axes) * w[i]
        np.maximum(out, cand, out=out)
    return out


@dataclass
class PeetreReport:
    """Pointwise ratios of the Peetre chain, maximised over x."""

    t: float
    r: float
    max_ratio: float | None = None
    grad_ratio: float | None = None
    lhs: float | None = None
    rhs: float | None = None
    grad_lhs: float | None = None
    grad_rhs: float | None = None
    empty: bool = False

    def to_dict(self):
        return dict(self.__dict__)


def frequency_extent(f, rel_tol=1e-12):
    """Largest |xi| carrying a coefficient above ``rel_tol`` of the maximum."""
    mag = np.abs(f.coeffs)
    if mag.ndim > f.grid.d:
        mag = mag.max(axis=0)
    top = mag.max()
    if top == 0:
        return 0.0
    return float(f.grid.radius[mag > rel_tol * top].max())


def peetre_ratio(u, t, r=0.5, support_factor=2.0, cfg=None):
    """Both Peetre inequalities for a band-limited ``u`` with |xi| <~ t.

    ``max_ratio`` is max_x of sup_z |u(x-z)|/(1+t|z|)^{d/r} over
    M(|u|^r)(x)^{1/r}; ``grad_ratio`` compares the gradient variant
    t^{-1} sup_z |grad u(x-z)|/(1+t|z|)^{d/r} with the middle term.
    """
    grid = u.grid
    if frequency_extent(u) > support_factor * t:
        raise SupportError(
            f"frequency support {frequency_extent(u):.4g} exceeds {support_factor} * t = {support_factor * t:.4g}"
        )
    report = PeetreReport(t=t, r=r)
    a = np.abs(to_physical(u.coeffs, grid))
    if not np.any(a):
        report.empty = True
        return report
    power = grid.d / r
    middle = weighted_translate_sup(a, grid, t, power)
    rhs = maximal(a**r, grid, cfg) ** (1.0 / r)
    grad = np.sqrt(sum(to_physical(u.coeffs * 1j * x, grid) ** 2 for x in grid.xi_deriv)) / t
    grad_sup = weighted_translate_sup(grad, grid, t, power)
    ratio = middle / rhs
    i = int(np.argmax(ratio))
    report.max_ratio = float(ratio.ravel()[i])
    report.lhs = float(middle.ravel()[i])
    report.rhs = float(rhs.ravel()[i])
    gratio = grad_sup / middle
    i = int(np.argmax(gratio))
    report.grad_ratio = float(gratio.ravel()[i])
    report.grad_lhs = float(grad_sup.ravel()[i])
    report.grad_rhs = float(middle.ravel()[i])
    return report


# -------------------------------------------------------------- multipliers

def _check_mean_free(f):
    c = f.coeffs
    scale = np.max(np.abs(c))
    zero = c[(...,) + (0,) * f.grid.d]
    if scale > 0 and np.max(np.abs(zero)) > MEAN_TOL * scale:
        raise MeanModeError("homogeneous multiplier on non-mean-free field")


def riesz_multiplier(f, axis):
    """d_axis Delta^{-1} f, symbol -i xi_axis / |xi|^2 (0 at xi = 0).

    ``axis`` is 0-based.  Requires a mean-free field.
    """
    _check_mean_free(f)
    grid = f.grid
    sym = -1j * grid.xi_deriv[axis] * _inv_radius2(grid)
    return f.with_coeffs(f.coeffs * sym)


def frac_deriv(f, s):
    """D^s f = F^{-1}(|xi|^s F f); the zero mode is dropped for s < 0."""
    grid = f.grid
    if s == 0:
        return f.with_coeffs(f.coeffs.copy())
    r = np.asarray(grid.radius)
    sym = np.zeros(grid.shape)
    nz = r > 0
    sym[nz] = r[nz] ** s
    return f.with_coeffs(f.coeffs * sym)


def partial(f, axis):
    """Spectral derivative along ``axis`` (0-based)."""
    return f.with_coeffs(f.coeffs * (1j * f.grid.xi_deriv[axis]))


def gradient(f):
    return VectorField(f.grid, np.stack([f.coeffs * (1j * x) for x in f.grid.xi_deriv]))


def divergence(u):
    grid = u.grid
    c = sum(u.coeffs[k] * (1j * grid.xi_deriv[k]) for k in range(grid.d))
    return SpectralField(grid, c)


def divergence_defect(u):
    """max |xi . u_hat| relative to max |u_hat| (0 for the zero field)."""
    grid = u.grid
    scale = np.max(np.abs(u.coeffs))
    if scale == 0:
        return 0.0
    dot = sum(u.coeffs[k] * grid.xi_deriv[k] for k in range(grid.d))
    return float(np.max(np.abs(dot)) / scale)


def curl_free_part(u):
    """grad Delta^{-1} div u."""
    grid = u.grid
    dot = sum(u.coeffs[k] * grid.xi_deriv[k] for k in range(grid.d)) * _inv_deriv_radius2(grid)
    return VectorField(grid, np.stack([x * dot for x in grid.xi_deriv]))


def leray(u):
    """Leray projection u - grad Delta^{-1} div u onto divergence-free fields.

    Mean modes pass through unchanged.
    """
    return u.with_coeffs(u.coeffs - curl_free_part(u).coeffs)


def convective_term(u, dealias=True):
    """(u . grad) u formed pseudo-spectrally.

    With ``dealias=False`` the product is taken as is, which is exact only
    when ``u`` occupies the lower half of the spectrum (e.g. after zero_pad).
    """
    grid = u.grid
    mask = grid.dealias_mask if dealias else np.ones(grid.shape, dtype=bool)
    c = u.coeffs * mask
    vel = to_physical(c, grid)
    out = np.zeros_like(vel)
    for l in range(grid.d):
        d_l = to_physical(c * (1j * grid.xi_deriv[l]), grid)
        out += vel[l] * d_l
    return VectorField(grid, to_spectral(out, grid) * mask)


def pressure_gradient(u, div_tol=1e-8, dealias=True):
    """grad p = grad (-Delta)^{-1} div((u . grad) u) for divergence-free u."""
    defect = divergence_defect(u)
    if defect > div_tol:
        raise DivergenceError(f"velocity is not divergence-free (defect {defect:.3e})")
    conv = convective_term(u, dealias)
    grad_p = curl_free_part(conv)
    # (u.grad)u + grad p is the projection of the convective term
    return grad_p.with_coeffs(-grad_p.coeffs)
