"""Pseudo-spectral 2D incompressible Euler solver with norm diagnostics.

The flow is advanced in vorticity form, d_t omega + u . grad omega = 0, with
u = (d_2 psi, -d_1 psi) and psi = (-Delta)^{-1} omega.  Products are
dealiased with the 2/3 rule, which makes the scheme a Galerkin truncation:
energy and enstrophy are then conserved up to the time-stepping error.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Grid, SpectralField, VectorField, lattice_integral, read_field, to_physical, to_spectral
from .errors import BlowUpError, ConfigError, HorizonError, MeanModeError
from .norms import besov_norm, tl_norm
from .ops import _inv_radius2

PRESETS = ("taylor-green", "shear", "random-smooth", "vortex-pair")
CSV_COLUMNS = ("t", "energy", "enstrophy", "linf_u", "linf_grad_u", "f_norm", "besov_1_inf_1", "envelope")

CFL_MAX = 0.5
BLOWUP_FACTOR = 1e6
MEAN_TOL = 1e-12

# random-smooth preset: band range and target RMS velocity
RANDOM_BANDS = (0, 3)
RANDOM_RMS = 0.5
# vortex-pair preset: blob width, centre offset and peak vorticity
PAIR_WIDTH = 0.3
PAIR_OFFSET = 0.6
PAIR_PEAK = 10.0


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    ``initial_condition`` is a preset name or the path of a scalar vorticity
    field file.  ``C0=None`` means the envelope constant is fitted after the
    run.
    """

    grid: Grid = field(default_factory=lambda: Grid(2, 128))
    dt: float = 1e-3
    t_end: float = 1.0
    s: float = 3.0
    C0: float | None = None
    initial_condition: str = "taylor-green"
    seed: int = 0
    slope: float | None = None
    dealias: bool = True
    monitor_period: int = 10

    def __post_init__(self):
        if self.grid.d != 2:
            raise ConfigError(f"the Euler solver is two-dimensional (got d={self.grid.d})")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt={self.dt} must be positive")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigError(f"t_end={self.t_end} must be non-negative")
        if self.monitor_period < 1:
            raise ConfigError("monitor_period must be at least 1")
        if self.C0 is not None and not self.C0 > 0:
            raise ConfigError("C0 must be positive")
        if self.s < self.grid.d + 1:
            warnings.warn(f"s={self.s} is below d+1={self.grid.d + 1}; persistence is not covered", stacklevel=2)

    def to_dict(self):
        return {
            "grid": self.grid.to_dict(),
            "dt": self.dt,
            "t_end": self.t_end,
            "s": self.s,
            "C0": self.C0,
            "initial_condition": self.initial_condition,
            "seed": self.seed,
            "slope": self.slope,
            "dealias": self.dealias,
            "monitor_period": self.monitor_period,
        }


# ------------------------------------------------------------ Biot-Savart

def stream_function(omega):
    """psi with -Delta psi = omega (zero mean)."""
    return omega.with_coeffs(omega.coeffs * _inv_radius2(omega.grid))


def velocity(omega):
    """u = (d_2 psi, -d_1 psi); divergence-free by construction."""
    grid = omega.grid
    psi = omega.coeffs * _inv_radius2(grid)
    k1, k2 = grid.xi_deriv
    return VectorField(grid, np.stack([1j * k2 * psi, -1j * k1 * psi]))


def vorticity(u):
    """omega = d_1 u_2 - d_2 u_1."""
    grid = u.grid
    k1, k2 = grid.xi_deriv
    return SpectralField(grid, 1j * k1 * u.coeffs[1] - 1j * k2 * u.coeffs[0])


@dataclass(frozen=True)
class EulerState:
    t: float
    omega: SpectralField

    @property
    def u(self):
        return velocity(self.omega)


# ------------------------------------------------------------------- RHS

def _rhs_coeffs(w, grid, mask):
    psi = w * _inv_radius2(grid)
    k1, k2 = grid.xi_deriv
    u1 = to_physical(1j * k2 * psi, grid)
    u2 = to_physical(-1j * k1 * psi, grid)
    w1 = to_physical(1j * k1 * w, grid)
    w2 = to_physical(1j * k2 * w, grid)
    out = -to_spectral(u1 * w1 + u2 * w2, grid)
    if mask is not None:
        out *= mask
    # the mean of u . grad omega vanishes analytically
    out[0, 0] = 0.0
    return out


def _check_mean_free(omega):
    c = omega.coeffs
    scale = np.max(np.abs(c))
    if scale > 0 and abs(c[0, 0]) > MEAN_TOL * scale:
        raise MeanModeError("vorticity must be mean-free")


def rhs(omega, dealias=True):
    """d omega / dt = -(u . grad omega), dealiased, in coefficient space."""
    _check_mean_free(omega)
    grid = omega.grid
    mask = grid.dealias_mask if dealias else None
    w = omega.coeffs * mask if dealias else omega.coeffs
    return omega.with_coeffs(_rhs_coeffs(w, grid, mask))


def _rk4(w, dt, grid, mask):
    k1 = _rhs_coeffs(w, grid, mask)
    k2 = _rhs_coeffs(w + 0.5 * dt * k1, grid, mask)
    k3 = _rhs_coeffs(w + 0.5 * dt * k2, grid, mask)
    k4 = _rhs_coeffs(w + dt * k3, grid, mask)
    return w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _linf(coeffs, grid):
    return float(np.max(np.abs(to_physical(coeffs, grid))))


def cfl_number(omega, dt):
    u = to_physical(velocity(omega).coeffs, omega.grid)
    return dt * float(np.max(np.abs(u))) / omega.grid.dx


def step_rk4(state, dt, dealias=True, omega_limit=None, check_cfl=True):
    """One classical Runge-Kutta step.

    Raises
    ------
    BlowUpError
        On non-finite coefficients or when ``max|omega|`` exceeds ``omega_limit``.
    ConfigError
        When ``check_cfl`` is set and dt * max|u| / dx exceeds 0.5.
    """
    if dt == 0:
        return state
    grid = state.omega.grid
    if check_cfl and cfl_number(state.omega, dt) > CFL_MAX:
        raise ConfigError(f"CFL number {cfl_number(state.omega, dt):.3g} exceeds {CFL_MAX}")
    mask = grid.dealias_mask if dealias else None
    w = state.omega.coeffs * mask if dealias else state.omega.coeffs
    w = _rk4(w, dt, grid, mask)
    _guard(w, grid, omega_limit)
    return EulerState(state.t + dt, state.omega.with_coeffs(w))


def _guard(w, grid, omega_limit):
    if not np.all(np.isfinite(w)):
        raise BlowUpError("numerical blow-up: non-finite coefficients")
    if omega_limit is not None and _linf(w, grid) > omega_limit:
        raise BlowUpError(f"numerical blow-up: max|omega| exceeds {omega_limit:.3g}")


# --------------------------------------------------------------- presets

def initial_vorticity(name, grid, seed=0, slope=None):
    """Mean-free initial vorticity for a preset (or a field file path)."""
    if grid.d != 2:
        raise ConfigError("presets are two-dimensional")
    x1, x2 = (c / grid.L for c in grid.coords)
    L = grid.L
    if name == "taylor-green":
        # psi = sin x1 sin x2, omega = 2 psi: a steady state
        w = 2.0 / L**2 * np.sin(x1) * np.sin(x2)
        return _mean_free(SpectralField(grid, to_spectral(w, grid)))
    if name == "shear":
        # u = (sin x2, 0)
        w = -np.cos(x2) / L + 0.0 * x1
        return _mean_free(SpectralField(grid, to_spectral(w, grid)))
    if name == "random-smooth":
        return _random_smooth(grid, seed, slope)
    if name == "vortex-pair":
        return _vortex_pair(grid)
    path = Path(name)
    if path.suffix == ".fld" or path.exists():
        f = read_field(path)
        if not isinstance(f, SpectralField) or f.grid != grid:
            raise ConfigError(f"{path}: expected a scalar vorticity field on {grid.to_dict()}")
        return _mean_free(f)
    raise ConfigError(f"unknown initial condition {name!r}; presets are {PRESETS}")


def _mean_free(f):
    # sampled presets carry round-off in the mean mode
    c = f.coeffs.copy()
    c[0, 0] = 0.0
    return f.with_coeffs(c)


def _random_smooth(grid, seed, slope):
    from .verify import FieldGenSpec, generate

    spec = FieldGenSpec(seed=seed, band_range=RANDOM_BANDS, slope=3.5 if slope is None else slope)
    w = generate(spec, grid)
    u = to_physical(velocity(w).coeffs, grid)
    rms = math.sqrt(lattice_integral(np.sum(u**2, axis=0), grid) / grid.volume)
    return w * (RANDOM_RMS / rms) if rms > 0 else w


def _vortex_pair(grid):
    # two Gaussian blobs of opposite sign written directly in frequency space
    k1, k2 = grid.xi
    c = math.pi * grid.L
    centres = ((c - PAIR_OFFSET, c), (c + PAIR_OFFSET, c))
    gauss = np.exp(-0.5 * PAIR_WIDTH**2 * np.asarray(grid.radius2))
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    for sign, (a, b) in zip((1.0, -1.0), centres):
        coeffs += sign * gauss * np.exp(-1j * (k1 * a + k2 * b))
    coeffs *= grid.dealias_mask
    coeffs[0, 0] = 0.0
    w = SpectralField(grid, coeffs)
    return w * (PAIR_PEAK / _linf(coeffs, grid))


# ----------------------------------------------------------- diagnostics

def diagnostics(omega, s):
    grid = omega.grid
    u = velocity(omega)
    us = to_physical(u.coeffs, grid)
    ws = to_physical(omega.coeffs, grid)
    k1, k2 = grid.xi_deriv
    jac = [to_physical(c * 1j * k, grid) for c in u.coeffs for k in (k1, k2)]
    return {
        "energy": 0.5 * lattice_integral(np.sum(us**2, axis=0), grid),
        "enstrophy": 0.5 * lattice_integral(ws**2, grid),
        "linf_u": float(np.max(np.sqrt(np.sum(us**2, axis=0)))),
        "linf_grad_u": float(np.max(np.sqrt(sum(j**2 for j in jac)))),
        "f_norm": tl_norm(u, s).value,
        "besov_1_inf_1": besov_norm(u, 1, math.inf, 1).value,
    }


@dataclass
class EulerTrajectory:
    config: SimConfig
    records: list = field(default_factory=list)
    stopped: bool = False
    stop_reason: str | None = None
    final_state: EulerState | None = None
    wall_time: float = 0.0

    def column(self, name):
        return np.array([r[name] for r in self.records], dtype=np.float64)

    @property
    def times(self):
        return self.column("t")

    @property
    def u0_f_norm(self):
        return self.records[0]["f_norm"]

    def set_envelope(self, C0):
        """Fill the envelope column for constant ``C0`` (inf past the horizon)."""
        a = self.u0_f_norm
        for r in self.records:
            try:
                r["envelope"] = gronwall_envelope(a, C0, r["t"])
            except HorizonError:
                r["envelope"] = math.inf

    def rows(self):
        return [[r[c] for c in CSV_COLUMNS] for r in self.records]


def simulate(config, progress=None):
    """Run ``config`` to ``t_end`` or to a blow-up stop.

    Diagnostics are recorded every ``monitor_period`` steps and at the final
    time.  A blow-up stop keeps all samples recorded before it.
    """
    grid = config.grid
    t0 = time.perf_counter()
    omega = initial_vorticity(config.initial_condition, grid, config.seed, config.slope)
    _check_mean_free(omega)
    if config.dealias:
        omega = omega.with_coeffs(omega.coeffs * grid.dealias_mask)
    cfl = cfl_number(omega, config.dt)
    if cfl > CFL_MAX:
        raise ConfigError(f"CFL number {cfl:.3g} exceeds {CFL_MAX}; reduce dt")
    limit = BLOWUP_FACTOR * _linf(omega.coeffs, grid)
    traj = EulerTrajectory(config)

    def record(t, w):
        rec = {"t": float(t)}
        rec.update(diagnostics(omega.with_coeffs(w), config.s))
        rec["envelope"] = math.nan
        traj.records.append(rec)

    nsteps = math.ceil(config.t_end / config.dt - 1e-9) if config.t_end > 0 else 0
    mask = grid.dealias_mask if config.dealias else None
    w = omega.coeffs
    t = 0.0
    record(t, w)
    for i in range(1, nsteps + 1):
        dt = min(config.dt, config.t_end - t) if i == nsteps else config.dt
        try:
            w_new = _rk4(w, dt, grid, mask)
            _guard(w_new, grid, limit if limit > 0 else None)
        except BlowUpError as exc:
            traj.stopped, traj.stop_reason = True, str(exc)
            break
        w = w_new
        t = config.t_end if i == nsteps else i * config.dt
        if i % config.monitor_period == 0 or i == nsteps:
            record(t, w)
            if not all(math.isfinite(v) for k, v in traj.records[-1].items() if k != "envelope"):
                traj.stopped, traj.stop_reason = True, "numerical blow-up: non-finite diagnostics"
                traj.records.pop()
                break
            if progress is not None:
                progress(traj.records[-1])
    traj.final_state = EulerState(t, omega.with_coeffs(w))
    if config.C0 is not None:
        C0 = config.C0
    else:
        # a single sample constrains nothing beyond the floor
        C0 = fit_C0(traj) if len(traj.records) >= 2 else 1.0
    traj.set_envelope(C0)
    traj.wall_time = time.perf_counter() - t0
    return traj


# ---------------------------------------------------------------- Gronwall

def blowup_time(u0_norm, C0):
    """T0 = 1 / (C0^2 ||u0||); infinite for zero data."""
    if u0_norm == 0:
        return math.inf
    return 1.0 / (C0**2 * u0_norm)


def gronwall_envelope(u0_norm, C0, t):
    """y(t) = C0 ||u0|| / (1 - t C0^2 ||u0||) for 0 <= t < T0."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t >= blowup_time(u0_norm, C0):
        raise HorizonError(f"past envelope horizon: t={t} >= T0={blowup_time(u0_norm, C0)}")
    return C0 * u0_norm / (1.0 - t * C0**2 * u0_norm)


def _monotone_fit(feasible, tol=1e-6, cap=1e12):
    """Smallest C >= 1 with feasible(C), for a predicate monotone in C."""
    if feasible(1.0):
        return 1.0
    hi = 2.0
    while not feasible(hi):
        hi *= 2.0
        if hi > cap:
            return math.inf
    lo = hi / 2.0 if hi > 2.0 else 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def fit_C0(trajectory):
    """Smallest C0 >= 1 (to 1e-6) whose envelope bounds the running sup of
    the F^s norm at every recorded time before the horizon T0(C0).

    Feasibility is monotone in C0 (larger C0 raises the envelope and shortens
    the horizon), so bisection applies.  Samples after a blow-up stop are
    never recorded, so a stopped run is fitted on its pre-stop samples.
    """
    recs = trajectory.records
    if len(recs) < 2:
        raise ConfigError("fit_C0 needs at least two samples")
    t = np.array([r["t"] for r in recs])
    m = np.maximum.accumulate(np.array([r["f_norm"] for r in recs]))
    a = recs[0]["f_norm"]
    if a == 0:
        return 1.0

    def feasible(C):
        inside = t < blowup_time(a, C)
        env = C * a / (1.0 - t[inside] * C**2 * a)
        return bool(np.all(m[inside] <= env))

    return _monotone_fit(feasible)


@dataclass
class GlobalCheck:
    passed: bool
    C: float
    exponent_integral: float
    max_grad_u: float
    samples: int

    def to_dict(self):
        return dict(self.__dict__)


def two_d_global_check(trajectory):
    """Fit the smallest C >= 1 with ||u(t)||_F <= C ||u0||_F exp(C int_0^t ||u||_{W^{1,inf}})
    along the run; pass when that C is finite, grad u stayed finite and the
    run was not stopped."""
    t = trajectory.column("t")
    f = trajectory.column("f_norm")
    w1 = trajectory.column("linf_u") + trajectory.column("linf_grad_u")
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (w1[1:] + w1[:-1]) * np.diff(t))])
    a = f[0] if f.size else 0.0
    max_grad = float(np.max(trajectory.column("linf_grad_u"))) if f.size else 0.0
    if a == 0:
        C = 1.0 if np.all(f == 0) else math.inf
    else:
        C = _monotone_fit(lambda C: bool(np.all(f <= C * a * np.exp(C * integral))))
    passed = math.isfinite(C) and math.isfinite(max_grad) and not trajectory.stopped
    return GlobalCheck(passed, C, float(integral[-1]) if f.size else 0.0, max_grad, int(f.size))


# -------------------------------------------------------------- utilities

def richardson_order(config, dt, t_end):
    """Observed temporal order from runs with dt, dt/2 and the dt/4 reference.

    Returns ``(order, e1, e2)`` where e1, e2 are the max-norm vorticity errors
    of the dt and dt/2 runs at ``t_end``.
    """
    grid = config.grid
    w0 = initial_vorticity(config.initial_condition, grid, config.seed, config.slope)
    mask = grid.dealias_mask
    w0 = w0.coeffs * mask

    def run(h):
        w = w0
        for _ in range(int(round(t_end / h))):
            w = _rk4(w, h, grid, mask)
        return w

    ref = run(dt / 4)
    e1 = _linf(run(dt) - ref, grid)
    e2 = _linf(run(dt / 2) - ref, grid)
    return math.log2(e1 / e2), e1, e2
