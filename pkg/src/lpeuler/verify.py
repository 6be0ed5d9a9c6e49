"""Randomised verification of the harmonic-analysis estimates.

Each estimate has an id, an input sampler and an evaluator returning the two
sides ``(lhs, rhs)`` of the inequality for one trial.  The runner draws
``n_trials`` independent inputs, drops trials whose right-hand side vanishes
and summarises the observed ratios lhs / rhs.

Random fields are generated on a lattice box that depends only on the band
range, never on ``n``: the same seed yields the same trigonometric polynomial
on every grid that resolves it.  Resolution sweeps therefore compare one
ensemble of functions, and differences between resolutions are purely
discretisation effects.

Products that enter an estimate are formed exactly on a grid refined by a
factor 2 (no aliasing, no truncation), so no estimate is tested against a
dealiased surrogate of the product.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Grid, SpectralField, VectorField, lattice_integral, to_physical, to_spectral, zero_pad
from .errors import ConfigError, DegenerateEnsembleError
from .lp import DEFAULT_PROFILE, block_symbol
from .norms import jacobian_samples, magnitude, sup_family_integral, tl_norm, w1inf_norm
from .ops import (
    curl_free_part,
    convective_term,
    frac_deriv,
    leray,
    maximal,
    peetre_ratio,
    riesz_multiplier,
)

# free parameters of the maximal-function estimates
R_EXP = 0.5
GAMMA = DELTA = 0.5
R1 = R2 = 0.5
# refinement before the pointwise Peetre comparison
PEETRE_REFINE = 4
# coro1: admissible offsets k - j (the estimate needs j > k - L0)
CORO1_L0 = 3
# share of zero-RHS trials above which a report is flagged degenerate
DEGENERATE_SHARE = 0.10

KINDS = ("scalar", "vector", "divfree")


# ------------------------------------------------------------------ fields

@dataclass(frozen=True)
class FieldGenSpec:
    """Random band-limited field model.

    Coefficients are complex Gaussians windowed by sum_j 2^{-slope j} h_j(xi)
    over ``band_range`` (homogeneous bands), so they are real, mean-free and
    supported in |xi| < 2^{j_hi + 1}.  ``band_range=None`` and ``slope=None``
    are resolved by the runner (see :func:`default_band_range`).
    """

    seed: int = 0
    band_range: tuple | None = None
    slope: float | None = None
    kind: str = "scalar"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown field kind {self.kind!r}; expected one of {KINDS}")
        if self.band_range is not None:
            lo, hi = (int(b) for b in self.band_range)
            if lo > hi:
                raise ConfigError(f"empty band range {self.band_range}")
            object.__setattr__(self, "band_range", (lo, hi))
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    def resolved(self, grid, s):
        bands = self.band_range or default_band_range(grid)
        slope = s + 0.5 if self.slope is None else self.slope
        return replace(self, band_range=bands, slope=slope)


def default_band_range(grid):
    return (0, grid.j_max - 2)


def _box_half_width(bands, L):
    # h_j vanishes for |xi| >= 2^{j+1}, so |k_i| < 2^{j_hi+1} L suffices
    return max(math.ceil(2.0 ** (bands[1] + 1) * L) - 1, 0)


def _box_coefficients(rng, K, d):
    side = 2 * K + 1
    a = rng.standard_normal((side,) * d) + 1j * rng.standard_normal((side,) * d)
    # the box is symmetric about 0, so flipping every axis maps k to -k
    return 0.5 * (a + np.conj(np.flip(a)))


def generate(spec, grid, profile=DEFAULT_PROFILE):
    """Draw the field described by ``spec`` on ``grid``.

    Raises
    ------
    ConfigError
        If the band range reaches beyond the Nyquist frequency of ``grid``.
    """
    if spec.band_range is None or spec.slope is None:
        spec = spec.resolved(grid, grid.d + 1)
    lo, hi = spec.band_range
    if 2.0 ** (hi + 1) > grid.nyquist:
        raise ConfigError(
            f"band range {spec.band_range} exceeds the Nyquist frequency {grid.nyquist:g} of n={grid.n}"
        )
    K = _box_half_width(spec.band_range, grid.L)
    d = grid.d
    ks = np.arange(-K, K + 1)
    mesh = np.meshgrid(*([ks / grid.L] * d), indexing="ij")
    radius = np.sqrt(sum(m**2 for m in mesh))
    window = sum(2.0 ** (-spec.slope * j) * profile.band(j, radius) for j in range(lo, hi + 1))
    rng = np.random.default_rng(int(spec.seed))
    ncomp = 1 if spec.kind == "scalar" else d
    idx = np.ix_(*([ks % grid.n] * d))
    out = np.zeros((ncomp,) + grid.shape, dtype=np.complex128)
    for c in range(ncomp):
        out[c][idx] = spec.amplitude * window * _box_coefficients(rng, K, d)
    if spec.kind == "scalar":
        return SpectralField(grid, out[0])
    u = VectorField(grid, out)
    return leray(u) if spec.kind == "divfree" else u


def band_energy_fraction(f, j_lo):
    """Share of sum |c|^2 carried by modes with |xi| >= 3 * 2^{j_lo - 2}."""
    c2 = np.abs(f.coeffs) ** 2
    if c2.ndim > f.grid.d:
        c2 = c2.sum(axis=0)
    total = c2.sum()
    if total == 0:
        return 0.0
    return float(c2[f.grid.radius >= 3.0 * 2.0 ** (j_lo - 2)].sum() / total)


# --------------------------------------------------------------- helpers

def _padded(f, factor=2):
    c, fine = zero_pad(f.coeffs, f.grid, factor)
    if isinstance(f, VectorField):
        return VectorField(fine, c)
    return SpectralField(fine, c)


def exact_product(f, g):
    """fg without aliasing, on the grid refined by 2 (both factors must
    occupy at most half the spectrum, which every generated field does)."""
    a, b = _padded(f), _padded(g)
    fine = a.grid
    return SpectralField(fine, to_spectral(to_physical(a.coeffs, fine) * to_physical(b.coeffs, fine), fine))


def _sup_ratio(lhs, rhs):
    """max_x lhs/rhs over points with rhs > 0, plus the two sides there."""
    pos = rhs > 0
    if not np.any(pos):
        return float(np.max(lhs)), 0.0
    q = np.where(pos, lhs / np.where(pos, rhs, 1.0), 0.0)
    i = int(np.argmax(q))
    return float(lhs.ravel()[i]), float(rhs.ravel()[i])


def _hom(f, s):
    return tl_norm(f, s, homogeneous=True).value


def _maximal_product_rhs(g, f, grid):
    """M(g) [M(|f|^r1)]^{gamma/r1} [M(|f|^r2)]^{delta/r2} on ``grid``."""
    mg = maximal(g, grid)
    af = np.abs(f)
    m1 = maximal(af**R1, grid) ** (GAMMA / R1)
    m2 = maximal(af**R2, grid) ** (DELTA / R2)
    return mg * m1 * m2


# ------------------------------------------------------------- evaluators

def bernstein_trial(f, s, k=1):
    """||D^k f||_{F-dot^s} against ||f||_{F-dot^{s+k}}."""
    return _hom(frac_deriv(f, k), s), _hom(f, s + k)


def peetre_trial(u, t, refine=PEETRE_REFINE):
    """Worse of the two Peetre inequalities for band-limited ``u``; the
    pointwise ratio is maximised over x.

    The discrete maximal function only sees balls of whole cells, so ``u``
    is first interpolated onto a grid ``refine`` times finer.
    """
    rep = peetre_ratio(_padded(u, refine), t, r=R_EXP)
    if rep.empty:
        return 0.0, 0.0
    if rep.grad_ratio > rep.max_ratio:
        return rep.grad_lhs, rep.grad_rhs
    return rep.lhs, rep.rhs


def conv_bound_trial(g, f, t, scale, profile=DEFAULT_PROFILE):
    """|[psi]_scale * (gf)|(x) against (t/scale)^{d/r} M(g) M(|f|^r1)... .

    ``psi`` is the kernel of h_0, so [psi]_scale acts by the symbol
    h_0(xi / scale).
    """
    prod = exact_product(g, f)
    fine = prod.grid
    sym = profile.band(0, np.asarray(fine.radius) / scale)
    lhs = np.abs(to_physical(prod.coeffs * sym, fine))
    gs = to_physical(_padded(g).coeffs, fine)
    fs = to_physical(_padded(f).coeffs, fine)
    rhs = (t / scale) ** (fine.d / R_EXP) * _maximal_product_rhs(gs, fs, fine)
    return _sup_ratio(lhs, rhs)


def coro1_trial(g, f, j, k, profile=DEFAULT_PROFILE):
    """|Delta_k(gf)|(x) against 2^{(j-k)d/r} M(g) M(|f|^r1)... for f with
    |xi| <~ 2^j."""
    prod = exact_product(g, f)
    fine = prod.grid
    lhs = np.abs(to_physical(prod.coeffs * block_symbol(fine, k, True, profile), fine))
    gs = to_physical(_padded(g).coeffs, fine)
    fs = to_physical(_padded(f).coeffs, fine)
    rhs = 2.0 ** ((j - k) * fine.d / R_EXP) * _maximal_product_rhs(gs, fs, fine)
    return _sup_ratio(lhs, rhs)


def coro2_trial(family, profile=DEFAULT_PROFILE):
    """||sup_k |[psi]_{2^k} * Delta_k f_k| ||_{L^1} against ||sup_k |Delta_k f_k| ||_{L^1}.

    ``family`` maps k to a scalar field; psi is the kernel of h_0 (l = 0),
    so [psi]_{2^k} acts by h_k.
    """
    grid = next(iter(family.values())).grid
    inner, outer = {}, {}
    for k, f in family.items():
        b = f.coeffs * block_symbol(grid, k, True, profile)
        inner[k] = to_physical(b, grid)
        outer[k] = to_physical(b * block_symbol(grid, k, True, profile), grid)
    return sup_family_integral(outer, 0.0, grid), sup_family_integral(inner, 0.0, grid)


def moser_trial(f, g, s):
    """||fg||_{F^s} against ||f||_inf ||g||_{F^s} + ||g||_inf ||f||_{F^s}."""
    lhs = tl_norm(exact_product(f, g), s).value
    fi = float(np.max(np.abs(to_physical(f.coeffs, f.grid))))
    gi = float(np.max(np.abs(to_physical(g.coeffs, g.grid))))
    rhs = fi * tl_norm(g, s).value + gi * tl_norm(f, s).value
    return lhs, rhs


def commutator_family(u, f, profile=DEFAULT_PROFILE):
    """{j: samples of ([u, Delta_j], grad) f} over every homogeneous band of
    the refined grid, with exact products."""
    up, fp = _padded(u), _padded(f)
    fine = fp.grid
    ik = [1j * x for x in fine.xi_deriv]
    vel = to_physical(up.coeffs, fine)
    transport = sum(vel[l] * to_physical(fp.coeffs * ik[l], fine) for l in range(fine.d))
    transport_hat = to_spectral(transport, fine)
    lo, hi = fine.band_range(True)
    family = {}
    for j in range(lo, hi + 1):
        h = block_symbol(fine, j, True, profile)
        if not np.any(h):
            continue
        term = sum(vel[l] * to_physical(fp.coeffs * h * ik[l], fine) for l in range(fine.d))
        family[j] = term - to_physical(transport_hat * h, fine)
    return family, fine


def commutator_trial(u, f, s):
    """int sup_j 2^{js}|([u, Delta_j], grad) f| against
    ||grad u||_inf ||f||_{F-dot^s} + ||u||_{F-dot^s} ||grad f||_inf."""
    family, fine = commutator_family(u, f)
    lhs = sup_family_integral(family, s, fine)
    jac = jacobian_samples(u)
    grad_u = float(np.max(np.sqrt(np.sum(jac**2, axis=(0, 1)))))
    grad_f = float(np.max(magnitude(jacobian_samples(f), True)))
    rhs = grad_u * _hom(f, s) + _hom(u, s) * grad_f
    return lhs, rhs


def riesz_trial(f, s):
    """max_k ||d_k Delta^{-1} f||_{F-dot^s} against ||f||_{F-dot^{s-1}}."""
    lhs = max(_hom(riesz_multiplier(f, k), s) for k in range(f.grid.d))
    return lhs, _hom(f, s - 1)


def leray_trial(u, s):
    """||P u||_{F-dot^s} against ||u||_{F-dot^s}."""
    return _hom(leray(u), s), _hom(u, s)


def pressure_trial(u, s):
    """||grad p||_{L^1} against ||u||_{W^{1,inf}} ||u||_{F-dot^s}."""
    up = _padded(u)
    grad_p = curl_free_part(convective_term(up, dealias=False))
    lhs = lattice_integral(magnitude(to_physical(grad_p.coeffs, up.grid), True), up.grid)
    rhs = w1inf_norm(u).value * _hom(u, s)
    return lhs, rhs


# --------------------------------------------------------------- samplers

def _field_seeds(seed, trial, count):
    ss = np.random.SeedSequence([int(seed), int(trial)])
    return [int(x) for x in ss.generate_state(count, dtype=np.uint64)]


def _draw(spec, grid, seed, kind):
    return generate(replace(spec, seed=seed, kind=kind), grid)


def _band(f, j, profile=DEFAULT_PROFILE):
    return f.with_coeffs(f.coeffs * block_symbol(f.grid, j, True, profile))


def sample_inputs(inequality_id, spec, grid, trial):
    """Arguments (besides ``s``) passed to the evaluator for one trial."""
    seeds = _field_seeds(spec.seed, trial, 4)
    lo, hi = spec.band_range
    if inequality_id in ("bernstein", "riesz"):
        return (_draw(spec, grid, seeds[0], "scalar"),)
    if inequality_id == "peetre":
        f = _draw(spec, grid, seeds[0], "scalar")
        return (_band(f, hi), 2.0 ** (hi + 1))
    if inequality_id in ("conv_bound", "coro1"):
        rng = np.random.default_rng(seeds[2])
        g = _draw(spec, grid, seeds[0], "scalar")
        # f band-limited to |xi| < 2^{j+1}, one band below the top so that
        # the shifted blocks below stay resolved
        j = int(rng.integers(lo, hi)) if hi > lo else hi
        f = _band(_draw(spec, grid, seeds[1], "scalar"), j)
        if inequality_id == "conv_bound":
            return (g, f, 2.0 ** (j + 1), 2.0**j)
        k = j + int(rng.integers(-2, CORO1_L0))
        return (g, f, j, k)
    if inequality_id == "coro2":
        ks = range(lo, hi + 1)
        sub = _field_seeds(seeds[0], trial, len(ks))
        return ({k: _draw(spec, grid, sd, "scalar") for k, sd in zip(ks, sub)},)
    if inequality_id == "moser":
        return (_draw(spec, grid, seeds[0], "scalar"), _draw(spec, grid, seeds[1], "scalar"))
    if inequality_id == "commutator":
        return (_draw(spec, grid, seeds[0], "divfree"), _draw(spec, grid, seeds[1], "scalar"))
    if inequality_id == "leray":
        return (_draw(spec, grid, seeds[0], "vector"),)
    if inequality_id == "pressure":
        return (_draw(spec, grid, seeds[0], "divfree"),)
    raise ConfigError(f"unknown inequality id {inequality_id!r}")


_EVALUATORS = {
    "bernstein": lambda args, s: bernstein_trial(*args, s),
    "peetre": lambda args, s: peetre_trial(*args),
    "conv_bound": lambda args, s: conv_bound_trial(*args),
    "coro1": lambda args, s: coro1_trial(*args),
    "coro2": lambda args, s: coro2_trial(*args),
    "moser": lambda args, s: moser_trial(*args, s),
    "commutator": lambda args, s: commutator_trial(*args, s),
    "riesz": lambda args, s: riesz_trial(*args, s),
    "leray": lambda args, s: leray_trial(*args, s),
    "pressure": lambda args, s: pressure_trial(*args, s),
}

INEQUALITY_IDS = tuple(_EVALUATORS)


def evaluate(inequality_id, args, s):
    if inequality_id not in _EVALUATORS:
        raise ConfigError(f"unknown inequality id {inequality_id!r}")
    lhs, rhs = _EVALUATORS[inequality_id](args, s)
    return float(lhs), float(rhs)


# ----------------------------------------------------------------- reports

@dataclass(frozen=True)
class TrialRecord:
    trial: int
    lhs: float
    rhs: float
    ratio: float | None

    @property
    def excluded(self):
        return self.ratio is None

    def to_dict(self):
        return {"trial": self.trial, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}


@dataclass
class InequalityReport:
    inequality_id: str
    grid: Grid
    seed: int
    s: float
    band_range: tuple
    slope: float
    per_trial: list = field(default_factory=list)

    @property
    def n_trials(self):
        return len(self.per_trial)

    @property
    def ratios(self):
        return np.array([t.ratio for t in self.per_trial if not t.excluded], dtype=np.float64)

    @property
    def excluded(self):
        return sum(t.excluded for t in self.per_trial)

    @property
    def degenerate(self):
        return self.n_trials == 0 or self.excluded > DEGENERATE_SHARE * self.n_trials

    @property
    def max_ratio(self):
        r = self.ratios
        return float(r.max()) if r.size else None

    @property
    def mean_ratio(self):
        r = self.ratios
        return float(r.mean()) if r.size else None

    @property
    def p95_ratio(self):
        r = self.ratios
        return float(np.percentile(r, 95)) if r.size else None

    def to_dict(self):
        return {
            "id": self.inequality_id,
            "grid": self.grid.to_dict(),
            "seed": self.seed,
            "s": self.s,
            "bands": list(self.band_range),
            "slope": self.slope,
            "trials": self.n_trials,
            "excluded": self.excluded,
            "degenerate": self.degenerate,
            "max_ratio": self.max_ratio,
            "mean_ratio": self.mean_ratio,
            "p95_ratio": self.p95_ratio,
            "per_trial": [t.to_dict() for t in self.per_trial],
        }


def _run_trial(inequality_id, spec, grid, trial, s):
    lhs, rhs = evaluate(inequality_id, sample_inputs(inequality_id, spec, grid, trial), s)
    ok = rhs > 0 and math.isfinite(rhs) and math.isfinite(lhs)
    return TrialRecord(trial, lhs, rhs, lhs / rhs if ok else None)


def run_inequality(inequality_id, ensemble=None, n_trials=100, grid=None, s=None, workers=1, strict=False):
    """Run one estimate over a random ensemble.

    Parameters
    ----------
    inequality_id : str
        One of :data:`INEQUALITY_IDS`.
    ensemble : FieldGenSpec, optional
        Seed and field model; unset band range and slope take the defaults
        [0, j_max - 2] and ``s + 1/2``.
    grid : Grid, optional
        Defaults to d = 2, n = 64.
    s : float, optional
        Smoothness index, default ``d + 1``.
    workers : int
        Threads used for trials.  Per-trial seeds depend only on the master
        seed and the trial index, so the report does not depend on it.
    strict : bool
        Raise :class:`DegenerateEnsembleError` when every trial is excluded.
    """
    if inequality_id not in _EVALUATORS:
        raise ConfigError(f"unknown inequality id {inequality_id!r}; expected one of {INEQUALITY_IDS}")
    if n_trials < 1:
        raise ConfigError("n_trials must be positive")
    grid = grid or Grid(2, 64)
    s = float(grid.d + 1 if s is None else s)
    spec = (ensemble or FieldGenSpec()).resolved(grid, s)

    def one(i):
        return _run_trial(inequality_id, spec, grid, i, s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, range(n_trials)))
    else:
        records = [one(i) for i in range(n_trials)]
    report = InequalityReport(inequality_id, grid, int(spec.seed), s, spec.band_range, spec.slope, records)
    if strict and report.excluded == report.n_trials:
        raise DegenerateEnsembleError(f"{inequality_id}: every trial has a vanishing right-hand side")
    return report


@dataclass
class StabilityReport:
    inequality_id: str
    reports: list
    max_growth: float = 2.0

    @property
    def resolutions(self):
        return [r.grid.n for r in self.reports]

    @property
    def max_ratios(self):
        return [r.max_ratio for r in self.reports]

    @property
    def growth(self):
        first, last = self.max_ratios[0], self.max_ratios[-1]
        if first is None or last is None:
            return None
        if first == 0:
            return 1.0 if last == 0 else math.inf
        return last / first

    @property
    def passed(self):
        g = self.growth
        finite = all(m is not None and math.isfinite(m) for m in self.max_ratios)
        return finite and g is not None and g <= self.max_growth

    def to_dict(self):
        return {
            "id": self.inequality_id,
            "resolutions": self.resolutions,
            "max_ratios": self.max_ratios,
            "growth": self.growth,
            "passed": self.passed,
        }


def stability_sweep(inequality_id, ensemble=None, resolutions=(64, 128), n_trials=100, d=2, L=1.0, s=None, workers=1):
    """Run one ensemble at several resolutions and compare max ratios.

    The band range defaults to that of the coarsest grid, so every resolution
    sees the same functions.
    """
    res = sorted(set(int(n) for n in resolutions))
    if len(res) < 2:
        raise ConfigError("a stability sweep needs at least two distinct resolutions")
    coarse = Grid(d, res[0], L)
    ens = ensemble or FieldGenSpec()
    if ens.band_range is None:
        ens = replace(ens, band_range=default_band_range(coarse))
    reports = [run_inequality(inequality_id, ens, n_trials, Grid(d, n, L), s, workers) for n in res]
    return StabilityReport(inequality_id, reports)
