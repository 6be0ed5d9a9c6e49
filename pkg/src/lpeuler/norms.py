"""Lebesgue, Sobolev, Triebel-Lizorkin and Besov norms on the lattice.

Vector fields are measured through the pointwise Euclidean length of their
samples (and the pointwise Frobenius norm of the Jacobian for W^{1,inf}).
Dyadic suprema and sums run over the resolved band range only; every
:class:`NormValue` records that range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    VectorField,
    conjugate_symmetry_defect,
    lattice_integral,
    to_physical,
    zero_pad,
    REAL_TOL,
)
from .errors import NonRealFieldError
from .lp import DEFAULT_PROFILE, block_symbol

# relative size below which a block is treated as round-off when oversampling
SKIP_TOL = 1e-15

SPACES = ("Lp", "Linf", "W1inf", "TL_inhom", "TL_hom", "Besov")


@dataclass(frozen=True)
class NormSpec:
    space: str
    s: float | None = None
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        if self.p is not None and self.p < 1:
            raise ValueError(f"p={self.p} must be >= 1")

    def to_dict(self):
        return {"space": self.space, "s": self.s, "p": _jsonable(self.p), "q": _jsonable(self.q)}


def _jsonable(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


@dataclass(frozen=True)
class NormValue:
    value: float
    spec: NormSpec
    truncation: tuple | None = None

    def __float__(self):
        return float(self.value)

    def to_dict(self):
        out = {"value": self.value, "spec": self.spec.to_dict()}
        if self.truncation is not None:
            out["bands"] = {"j_min": self.truncation[0], "j_max": self.truncation[1]}
        return out


def _require_real(f):
    defect = conjugate_symmetry_defect(f.coeffs, f.grid)
    if defect > REAL_TOL:
        raise NonRealFieldError(f"non-real field: conjugate symmetry defect {defect:.3e}")


def magnitude(samples, vector):
    if vector:
        return np.sqrt(np.sum(samples**2, axis=0))
    return np.abs(samples)


def _lp_of_samples(mag, p, grid):
    if math.isinf(p):
        return float(np.max(mag)) if mag.size else 0.0
    return lattice_integral(mag**p, grid) ** (1.0 / p)


def lp_norm(f, p):
    """L^p norm by lattice quadrature (p = inf gives the max)."""
    _require_real(f)
    vec = isinstance(f, VectorField)
    mag = magnitude(to_physical(f.coeffs, f.grid), vec)
    spec = NormSpec("Linf") if math.isinf(p) else NormSpec("Lp", p=p)
    return NormValue(_lp_of_samples(mag, p, f.grid), spec)


def linf_norm(f):
    return lp_norm(f, math.inf)


def jacobian_samples(f):
    """Spectral gradient of a scalar (shape (d, ...)) or Jacobian of a vector field
    (shape (d, d, ...), entry [i, k] = d_k u_i)."""
    grid = f.grid
    ik = [1j * x for x in grid.xi_deriv]
    if isinstance(f, VectorField):
        return np.stack([np.stack([to_physical(c * m, grid) for m in ik]) for c in f.coeffs])
    return np.stack([to_physical(f.coeffs * m, grid) for m in ik])


def w1inf_norm(u):
    """||u||_inf + ||grad u||_inf with spectral derivatives."""
    _require_real(u)
    vec = isinstance(u, VectorField)
    sup_u = float(np.max(magnitude(to_physical(u.coeffs, u.grid), vec)))
    jac = jacobian_samples(u)
    if vec:
        grad_mag = np.sqrt(np.sum(jac**2, axis=(0, 1)))
    else:
        grad_mag = np.sqrt(np.sum(jac**2, axis=0))
    return NormValue(sup_u + float(np.max(grad_mag)), NormSpec("W1inf"))


def tl_integrand(f, s, homogeneous=False, oversample=1, profile=DEFAULT_PROFILE):
    """Pointwise sup_j 2^{js} |Delta_j f|(x) over resolved bands.

    Returns ``(samples, grid)``; with ``oversample > 1`` each band is evaluated
    by exact spectral interpolation on a finer lattice before the sup is taken,
    which sharpens the quadrature of the (non band-limited) supremum.
    """
    grid = f.grid
    vec = isinstance(f, VectorField)
    lo, hi = grid.band_range(homogeneous)
    blocks = {j: f.coeffs * block_symbol(grid, j, homogeneous, profile) for j in range(lo, hi + 1)}
    # 2^{js} * sum|c_j| bounds sup_x 2^{js}|Delta_j f|; on a refined lattice,
    # blocks holding only round-off relative to the largest bound are skipped
    bounds = {j: 2.0 ** (j * s) * float(np.sum(np.abs(c))) for j, c in blocks.items()}
    floor = SKIP_TOL * max(bounds.values(), default=0.0) if oversample > 1 else 0.0
    sup = None
    fine = grid
    for j, c in blocks.items():
        if bounds[j] <= floor or not np.any(c):
            continue
        c, fine = zero_pad(c, grid, oversample)
        term = (2.0 ** (j * s)) * magnitude(to_physical(c, fine), vec)
        sup = term if sup is None else np.maximum(sup, term)
    if sup is None:
        _, fine = zero_pad(np.zeros(grid.shape, complex), grid, oversample)
        sup = np.zeros(fine.shape)
    return sup, fine


def tl_norm(f, s, homogeneous=False, oversample=1, profile=DEFAULT_PROFILE):
    """Triebel-Lizorkin F^s_{1,inf} norm: integral of sup_j 2^{js}|Delta_j f|.

    ``homogeneous=True`` uses the homogeneous blocks, which ignore the mean
    mode (the torus analogue of working modulo polynomials).
    """
    _require_real(f)
    sup, fine = tl_integrand(f, s, homogeneous, oversample, profile)
    space = "TL_hom" if homogeneous else "TL_inhom"
    return NormValue(
        lattice_integral(sup, fine), NormSpec(space, s=s, p=1, q=math.inf), f.grid.band_range(homogeneous)
    )


def sup_family_integral(family, s, grid, vector=False):
    """Integral of sup_j 2^{js}|g_j|(x) for a family {j: samples}."""
    sup = np.zeros(grid.shape)
    for j, g in family.items():
        sup = np.maximum(sup, (2.0 ** (j * s)) * magnitude(g, vector))
    return lattice_integral(sup, grid)


def besov_norm(f, s, p, q, homogeneous=False, profile=DEFAULT_PROFILE):
    """B^s_{p,q} norm: l^q over j of 2^{js} ||Delta_j f||_{L^p}."""
    if not (p >= 1 and q >= 1):
        raise ValueError(f"Besov exponents must satisfy p, q >= 1 (got p={p}, q={q})")
    _require_real(f)
    grid = f.grid
    vec = isinstance(f, VectorField)
    lo, hi = grid.band_range(homogeneous)
    terms = []
    for j in range(lo, hi + 1):
        c = f.coeffs * block_symbol(grid, j, homogeneous, profile)
        if not np.any(c):
            continue
        mag = magnitude(to_physical(c, grid), vec)
        terms.append(2.0 ** (j * s) * _lp_of_samples(mag, p, grid))
    terms = np.asarray(terms)
    if terms.size == 0:
        value = 0.0
    elif math.isinf(q):
        value = float(np.max(terms))
    else:
        value = float(np.sum(terms**q) ** (1.0 / q))
    return NormValue(value, NormSpec("Besov", s=s, p=p, q=q), (lo, hi))


def norm_equivalence_check(f, s, oversample=1):
    """Compare ||f||_{F^s} with ||f||_{L^1} + ||f||_{F-dot^s} (s > 0).

    The ratio of a zero field is defined as 1.
    """
    if not s > 0:
        raise ValueError(f"norm equivalence needs s > 0 (got s={s})")
    inhom = tl_norm(f, s, False, oversample).value
    l1 = lp_norm(f, 1).value
    hom = tl_norm(f, s, True, oversample).value
    other = l1 + hom
    if inhom == 0 and other == 0:
        ratio = 1.0
    else:
        ratio = inhom / other
    return {"tl_inhom": inhom, "l1": l1, "tl_hom": hom, "l1_plus_hom": other, "ratio": ratio}


def equivalence_bracket(fields, s):
    """min/max of the equivalence ratio over an ensemble."""
    ratios = [norm_equivalence_check(f, s)["ratio"] for f in fields]
    return {"min_ratio": float(min(ratios)), "max_ratio": float(max(ratios)), "n": len(ratios)}
