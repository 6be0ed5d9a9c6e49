import numpy as np
import pytest

from lpeuler.core import Grid, SpectralField, VectorField, forward_transform

# (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES = []


def random_real(grid, seed, mean_free=False, smooth=True):
    """Random real field; ``smooth`` damps the spectrum like |k|^-2."""
    rng = np.random.default_rng(seed)
    f = forward_transform(rng.standard_normal(grid.shape), grid)
    c = f.coeffs
    if smooth:
        c = c / (1.0 + np.asarray(grid.radius2))
    if mean_free:
        c = c.copy()
        c[(0,) * grid.d] = 0.0
    return SpectralField(grid, c)


def random_vector(grid, seed, mean_free=False):
    comps = [random_real(grid, seed * 101 + i, mean_free) for i in range(grid.d)]
    return VectorField.from_components(comps)


def cos_x1(grid):
    x = grid.coords
    return forward_transform(np.cos(x[0] / grid.L) + 0.0 * sum(x), grid)


@pytest.fixture
def g2():
    return Grid(2, 64)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for crit, ok, detail in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
