"""Periodic grids, spectral fields, transforms, quadrature and field files.

The whole space R^d is modelled by the periodic box [0, 2*pi*L)^d sampled on
``n`` points per axis.  A lattice multi-index ``k`` corresponds to the physical
frequency ``xi = k / L``.  Coefficients are normalized so that the pure mode
``exp(i k.x / L)`` has coefficient 1 at index ``k``; with this convention every
Fourier multiplier acts exactly, coefficient by coefficient.
"""
from __future__ import annotations

import json
import math
import os
import zlib
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .errors import (
    ChecksumError,
    GridError,
    HeaderError,
    NonRealFieldError,
    PayloadLengthError,
    ShapeError,
    UnsupportedDimensionError,
)

SUPPORTED_DIMS = (1, 2, 3)
FORMAT_VERSION = 1

# tolerance on the conjugate-symmetry defect accepted by inverse_transform
REAL_TOL = 1e-9


def _is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on [0, 2*pi*L)^d.

    Parameters
    ----------
    d : int
        Spatial dimension (1, 2 or 3).
    n : int
        Points per axis; a power of two, at least 8.
    L : float
        Box scale.  Enlarging ``L`` resolves lower frequencies.
    """

    d: int
    n: int
    L: float = 1.0

    def __post_init__(self):
        if self.d not in SUPPORTED_DIMS:
            raise GridError(f"unsupported dimension d={self.d}; expected one of {SUPPORTED_DIMS}")
        if not _is_power_of_two(self.n) or self.n < 8:
            raise GridError(f"n={self.n} must be a power of two >= 8")
        L = float(self.L)
        if not (math.isfinite(L) and L > 0):
            raise GridError(f"box scale L={self.L} must be positive and finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", L)

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n**self.d

    @property
    def dx(self):
        return 2 * math.pi * self.L / self.n

    @property
    def volume(self):
        return (2 * math.pi * self.L) ** self.d

    @property
    def nyquist(self):
        """Largest resolved physical frequency per axis, n / (2L)."""
        return self.n / (2 * self.L)

    @property
    def j_min(self):
        """Lowest dyadic band that can see a nonzero lattice frequency."""
        return math.floor(math.log2(1.0 / self.L)) - 1

    @property
    def j_max(self):
        """Highest dyadic band that can see a lattice frequency."""
        return math.ceil(math.log2(self.nyquist)) + 1

    def band_range(self, homogeneous=False):
        lo = self.j_min if homogeneous else -1
        return lo, self.j_max

    def _axis_shape(self, axis):
        s = [1] * self.d
        s[axis] = self.n
        return tuple(s)

    @cached_property
    def wavenumbers(self):
        """Integer lattice indices per axis, in FFT order, broadcastable."""
        k = np.rint(sfft.fftfreq(self.n, 1.0 / self.n)).astype(np.int64)
        return tuple(_readonly(k.reshape(self._axis_shape(a)).copy()) for a in range(self.d))

    @cached_property
    def xi(self):
        """Physical frequencies xi = k / L per axis."""
        return tuple(_readonly(k / self.L) for k in self.wavenumbers)

    @cached_property
    def xi_deriv(self):
        """Frequencies used by odd multipliers (derivatives).

        The Nyquist index is set to zero: a real field sampled on the lattice
        has no well-defined odd derivative at that frequency.
        """
        out = []
        for k in self.wavenumbers:
            x = np.where(np.abs(k) == self.n // 2, 0, k) / self.L
            out.append(_readonly(x))
        return tuple(out)

    @cached_property
    def radius(self):
        """|xi| on the full lattice."""
        r2 = sum(x**2 for x in self.xi)
        return _readonly(np.sqrt(np.broadcast_to(r2, self.shape)).copy())

    @cached_property
    def radius2(self):
        return _readonly(self.radius**2)

    @cached_property
    def coords(self):
        """Physical sample positions per axis, broadcastable."""
        x = np.arange(self.n) * self.dx
        return tuple(_readonly(x.reshape(self._axis_shape(a)).copy()) for a in range(self.d))

    @cached_property
    def dealias_mask(self):
        """2/3-rule mask: keep modes with 3|k_i| < n on every axis."""
        m = np.ones(self.shape, dtype=bool)
        for k in self.wavenumbers:
            m = m & (3 * np.abs(k) < self.n)
        return _readonly(m)

    @cached_property
    def nyquist_mask(self):
        """True on modes with some |k_i| = n/2."""
        m = np.zeros(self.shape, dtype=bool)
        for k in self.wavenumbers:
            m = m | (np.abs(k) == self.n // 2)
        return _readonly(m)

    def mode_index(self, k):
        """Array index of the integer lattice frequency ``k``."""
        if len(k) != self.d:
            raise ShapeError(f"mode {k} does not have {self.d} components")
        return tuple(int(ki) % self.n for ki in k)

    def to_dict(self):
        return {"d": self.d, "n": self.n, "L": self.L}


def _spatial_axes(grid):
    return tuple(range(-grid.d, 0))


def to_physical(coeffs, grid):
    """Raw inverse transform of conjugate-symmetric coefficients (no check).

    Only the non-negative half of the last axis is read, as in a real FFT.
    """
    half = coeffs[..., : grid.n // 2 + 1]
    return sfft.irfftn(half, s=grid.shape, axes=_spatial_axes(grid), norm="forward")


def to_spectral(samples, grid):
    """Raw forward transform with the mode-amplitude normalization."""
    return sfft.fftn(samples, axes=_spatial_axes(grid), norm="forward")


def conjugate_symmetry_defect(coeffs, grid):
    """max |c(-k) - conj c(k)| relative to max |c|; zero for real fields."""
    axes = _spatial_axes(grid)
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0:
        return 0.0
    reflected = np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)
    return float(np.max(np.abs(reflected - np.conj(coeffs))) / scale)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a scalar function on a :class:`Grid`."""

    grid: Grid
    coeffs: np.ndarray
    kind: str = "scalar"
    truncated: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ShapeError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid, kind="scalar"):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), kind)

    @classmethod
    def mode(cls, grid, k, amplitude=1.0):
        """Single complex exponential with integer lattice index ``k``."""
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[grid.mode_index(k)] = amplitude
        return cls(grid, c)

    @property
    def mean(self):
        return float(self.coeffs[(0,) * self.grid.d].real)

    def samples(self, check=True):
        return inverse_transform(self, check=check)

    def with_coeffs(self, coeffs):
        return replace(self, coeffs=coeffs, truncated=False)

    def _combine(self, other, op):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise ShapeError("fields live on different grids")
            return self.with_coeffs(op(self.coeffs, other.coeffs))
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, a):
        if np.isscalar(a):
            return self.with_coeffs(a * self.coeffs)
        return NotImplemented

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """d-component vector field; coefficients stacked along axis 0."""

    grid: Grid
    coeffs: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        want = (self.grid.d,) + self.grid.shape
        if c.shape != want:
            raise ShapeError(f"vector coefficient shape {c.shape} does not match {want}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_components(cls, components):
        components = list(components)
        grid = components[0].grid
        if any(c.grid != grid for c in components):
            raise ShapeError("vector components must share one grid")
        if len(components) != grid.d:
            raise ShapeError(f"expected {grid.d} components, got {len(components)}")
        return cls(grid, np.stack([c.coeffs for c in components]))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.d,) + grid.shape, dtype=np.complex128))

    @property
    def components(self):
        return tuple(SpectralField(self.grid, c, "component") for c in self.coeffs)

    def samples(self, check=True):
        return inverse_transform(self, check=check)

    def with_coeffs(self, coeffs):
        return replace(self, coeffs=coeffs, truncated=False)

    def __add__(self, other):
        if isinstance(other, VectorField):
            return self.with_coeffs(self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, VectorField):
            return self.with_coeffs(self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, a):
        if np.isscalar(a):
            return self.with_coeffs(a * self.coeffs)
        return NotImplemented

    __rmul__ = __mul__


def _check_shape(samples, expected):
    if samples.ndim != len(expected):
        raise ShapeError(f"samples have {samples.ndim} axes, expected {len(expected)}")
    for axis, (got, want) in enumerate(zip(samples.shape, expected)):
        if got != want:
            raise ShapeError(f"axis {axis} has length {got}, expected {want}")


def forward_transform(samples, grid, kind="scalar"):
    """Real lattice samples to a :class:`SpectralField`.

    Samples of shape ``(d, n, ..., n)`` with ``kind="vector"`` give a
    :class:`VectorField`.
    """
    samples = np.asarray(samples)
    if kind == "vector":
        _check_shape(samples, (grid.d,) + grid.shape)
        return VectorField(grid, to_spectral(samples.astype(np.float64), grid))
    _check_shape(samples, grid.shape)
    return SpectralField(grid, to_spectral(samples.astype(np.float64), grid), kind)


def inverse_transform(f, check=True):
    """Exact inverse of :func:`forward_transform`; returns real samples.

    Raises
    ------
    NonRealFieldError
        If the coefficients violate conjugate symmetry by more than 1e-9
        (relative to the largest coefficient).
    """
    if check:
        defect = conjugate_symmetry_defect(f.coeffs, f.grid)
        if defect > REAL_TOL:
            raise NonRealFieldError(f"non-real field: conjugate symmetry defect {defect:.3e}")
    return to_physical(f.coeffs, f.grid)


def lattice_integral(samples, grid):
    """Box quadrature dx^d * sum(samples)."""
    return float(grid.dx**grid.d * np.sum(samples))


def inner_product(f, g):
    """Lattice L^2 inner product of two real fields (scalar or vector)."""
    return lattice_integral(f.samples(check=False) * g.samples(check=False), f.grid)


def dealias(f):
    """Zero every mode outside the 2/3-rule box."""
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def dealiased_product(f, g):
    """Alias-free pointwise product of two scalar fields.

    Both factors are truncated to the 2/3 box, multiplied in physical space and
    the result truncated again; the retained modes are then exactly those of
    the true product of the truncated factors.
    """
    grid = f.grid
    mask = grid.dealias_mask
    a = to_physical(f.coeffs * mask, grid)
    b = to_physical(g.coeffs * mask, grid)
    return SpectralField(grid, to_spectral(a * b, grid) * mask)


def zero_pad(coeffs, grid, factor):
    """Embed coefficients in a grid ``factor`` times finer (spectral interpolation).

    Nyquist coefficients are split evenly between +n/2 and -n/2 so that real
    fields stay real.  Returns ``(coeffs_fine, fine_grid)``.
    """
    if factor == 1:
        return coeffs, grid
    if not _is_power_of_two(factor):
        raise GridError(f"oversampling factor {factor} must be a power of two")
    n, m = grid.n, grid.n * factor
    h = n // 2
    out = coeffs
    lead = coeffs.ndim - grid.d
    for a in range(grid.d):
        axis = lead + a
        shape = list(out.shape)
        shape[axis] = m
        fine = np.zeros(shape, dtype=np.complex128)

        def sl(lo, hi, ax=axis, nd=out.ndim):
            s = [slice(None)] * nd
            s[ax] = slice(lo, hi)
            return tuple(s)

        fine[sl(0, h)] = out[sl(0, h)]
        fine[sl(m - h + 1, m)] = out[sl(h + 1, n)]
        nyq = out[sl(h, h + 1)]
        fine[sl(h, h + 1)] = 0.5 * nyq
        fine[sl(m - h, m - h + 1)] = 0.5 * nyq
        out = fine
    return out, Grid(grid.d, m, grid.L)


# ---------------------------------------------------------------- field files

_HEADER_KEYS = ("d", "n", "L", "kind", "layout", "scalar", "crc32")


def write_field(field, path, kind="spectral"):
    """Write a scalar field; ``kind="spectral"`` round-trips bit for bit."""
    grid = field.grid
    if kind == "spectral":
        payload = np.ascontiguousarray(field.coeffs, dtype="<c16").view("<f8").tobytes()
    elif kind == "real":
        payload = np.ascontiguousarray(inverse_transform(field), dtype="<f8").tobytes()
    else:
        raise HeaderError(f"unknown field kind {kind!r}")
    header = {
        "d": grid.d,
        "n": grid.n,
        "L": grid.L,
        "kind": kind,
        "layout": "row-major",
        "scalar": "f64le",
        "crc32": format(zlib.crc32(payload) & 0xFFFFFFFF, "08x"),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        fh.write(payload)


def _parse_header(line):
    try:
        header = json.loads(line.decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"malformed header: {exc}") from None
    if not isinstance(header, dict):
        raise HeaderError("malformed header: not a JSON object")
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise HeaderError(f"malformed header: missing {', '.join(missing)}")
    if header["d"] not in SUPPORTED_DIMS:
        raise UnsupportedDimensionError(f"unsupported dimension d={header['d']}")
    if header["kind"] not in ("real", "spectral"):
        raise HeaderError(f"malformed header: kind {header['kind']!r}")
    if header["layout"] != "row-major" or header["scalar"] != "f64le":
        raise HeaderError("malformed header: only row-major f64le payloads are supported")
    try:
        grid = Grid(header["d"], header["n"], header["L"])
    except (GridError, TypeError) as exc:
        raise HeaderError(f"malformed header: {exc}") from None
    return header, grid


def read_field(path):
    """Read a field file written by :func:`write_field`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise HeaderError("malformed header: no header line")
    header, grid = _parse_header(blob[:nl])
    payload = blob[nl + 1:]
    per_point = 2 if header["kind"] == "spectral" else 1
    expected = 8 * per_point * grid.size
    if len(payload) != expected:
        raise PayloadLengthError(f"payload length {len(payload)} bytes, expected {expected}")
    crc = format(zlib.crc32(payload) & 0xFFFFFFFF, "08x")
    if crc != str(header["crc32"]).lower():
        raise ChecksumError(f"checksum mismatch: header {header['crc32']}, payload {crc}")
    data = np.frombuffer(payload, dtype="<f8")
    if per_point == 2:
        coeffs = data.view("<c16").reshape(grid.shape).astype(np.complex128)
        return SpectralField(grid, coeffs)
    return forward_transform(data.reshape(grid.shape), grid)


def write_vector_field(u, directory):
    """Store a vector field as one file per component plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, comp in enumerate(u.components):
        name = f"u{i}.fld"
        write_field(comp, directory / name)
        names.append(name)
    manifest = dict(u.grid.to_dict(), components=names, format_version=FORMAT_VERSION)
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_vector_field(directory):
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise HeaderError(f"{os.fspath(directory)}: no manifest.json")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        names = manifest["components"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise HeaderError(f"malformed vector manifest: {exc}") from None
    comps = [read_field(directory / name) for name in names]
    return VectorField.from_components(comps)
