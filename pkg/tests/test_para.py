import numpy as np
import pytest

from lpeuler.core import Grid, SpectralField, VectorField, dealiased_product, to_physical
from lpeuler.errors import DivergenceError
from lpeuler.lp import delta_j
from lpeuler.norms import lp_norm
from lpeuler.ops import gradient, partial
from lpeuler.para import (
    bony,
    commutator,
    commutator_split,
    para_support_scan,
    paraproduct,
    remainder,
    remainder_support_scan,
)

from conftest import random_real


def div_free(grid, seed):
    psi = random_real(grid, seed, mean_free=True)
    return VectorField.from_components([partial(psi, 1), partial(psi, 0) * -1.0])


def rel(a, b):
    scale = np.abs(b).max()
    return np.abs(a - b).max() / scale if scale else np.abs(a).max()


class TestParaproduct:
    def test_constant_low_factor(self):
        g = Grid(2, 64)
        f = random_real(g, 0, mean_free=True)
        c = SpectralField.mode(g, (0, 0), 1.75)
        out = paraproduct(c, f, homogeneous=True)
        assert rel(out.coeffs, 1.75 * f.coeffs * g.dealias_mask) < 1e-12

    def test_zero(self):
        g = Grid(2, 32)
        f = random_real(g, 1)
        assert not np.any(paraproduct(f, SpectralField.zeros(g)).coeffs)

    def test_support_scan(self):
        g = Grid(2, 64)
        scan = para_support_scan(random_real(g, 2), random_real(g, 3, smooth=False))
        assert scan["leak"] <= 1e-12
        assert scan["active"] > 1e-3


class TestRemainder:
    def test_separated_bands(self):
        g = Grid(2, 128)
        f = random_real(g, 4, smooth=False)
        a, b = delta_j(f, 0), delta_j(f, 5)
        assert np.abs(remainder(a, b).coeffs).max() < 1e-14

    def test_single_mode_square(self):
        g = Grid(2, 64)
        f = SpectralField.mode(g, (3, 1), 0.5) + SpectralField.mode(g, (-3, -1), 0.5)
        dec = bony(f, f)
        assert dec.residual <= 1e-9
        expected = dealiased_product(f, f).coeffs - dec.para_fg.coeffs - dec.para_gf.coeffs
        assert rel(dec.remainder.coeffs, expected) < 1e-12

    def test_support_scan(self):
        g = Grid(2, 64)
        scan = remainder_support_scan(random_real(g, 5, smooth=False), random_real(g, 6, smooth=False))
        assert scan["leak"] <= 1e-12
        assert scan["active"] > 1e-3


class TestBony:
    @pytest.mark.parametrize("hom", [False, True])
    def test_random_pair(self, hom):
        g = Grid(2, 64)
        f, h = random_real(g, 7), random_real(g, 8, smooth=False)
        dec = bony(f, h, homogeneous=hom)
        assert dec.residual <= 1e-9
        diff = dec.total().with_coeffs(dec.total().coeffs - dealiased_product(f, h).coeffs)
        fmax = np.abs(to_physical(f.coeffs, g)).max()
        hmax = np.abs(to_physical(h.coeffs, g)).max()
        assert lp_norm(diff, 1).value <= 1e-9 * fmax * hmax * g.volume

    def test_unit_times_field(self):
        g = Grid(2, 32)
        one = SpectralField.mode(g, (0, 0))
        assert bony(one, random_real(g, 9)).residual <= 1e-9

    def test_zero(self):
        g = Grid(2, 32)
        z = SpectralField.zeros(g)
        dec = bony(z, z)
        for part in (dec.para_fg, dec.para_gf, dec.remainder):
            assert not np.any(part.coeffs)
        assert dec.residual == 0.0


class TestCommutator:
    def test_constant_velocity(self):
        g = Grid(2, 64)
        u = VectorField.from_components([SpectralField.mode(g, (0, 0), 0.3), SpectralField.mode(g, (0, 0), -1.2)])
        f = random_real(g, 10)
        for j in (0, 2, 4):
            assert np.abs(commutator(u, f, j).coeffs).max() <= 1e-12
            split = commutator_split(u, f, j)
            assert np.abs(split.total.coeffs).max() <= 1e-10
            assert np.abs(split[2].coeffs).max() <= 1e-10

    def test_zero_velocity(self):
        g = Grid(2, 32)
        assert not np.any(commutator(VectorField.zeros(g), random_real(g, 11), 1).coeffs)

    def test_direct_oracle(self):
        # low-frequency u, f a single high mode outside band j = 0
        g = Grid(2, 64)
        u = VectorField.from_components(
            [SpectralField.mode(g, (0, 1), 0.5) + SpectralField.mode(g, (0, -1), 0.5), SpectralField.zeros(g)]
        )
        f = SpectralField.mode(g, (12, 0), 0.5) + SpectralField.mode(g, (-12, 0), 0.5)
        c = commutator(u, f, 0)
        # Delta_0 f = 0 and u . grad f lives near |xi| = 12, far from band 0
        assert np.abs(c.coeffs).max() < 1e-14
        direct = dealiased_product(u.components[0], partial(delta_j(f, 3, True), 0)).coeffs
        direct -= delta_j(dealiased_product(u.components[0], partial(f, 0)), 3, True).coeffs
        assert rel(commutator(u, f, 3).coeffs, direct) < 1e-12

    @pytest.mark.parametrize("seed,j", [(0, 1), (1, 3), (2, 5)])
    def test_split_matches_direct(self, seed, j):
        g = Grid(2, 64)
        u, f = div_free(g, seed), random_real(g, 100 + seed, mean_free=True)
        split = commutator_split(u, f, j)
        assert len(split.terms) == 5
        assert rel(split.total.coeffs, commutator(u, f, j).coeffs) <= 1e-8

    def test_rejects_compressible(self):
        g = Grid(2, 32)
        u = gradient(random_real(g, 12, mean_free=True))
        with pytest.raises(DivergenceError):
            commutator(u, random_real(g, 13), 1)
        with pytest.raises(DivergenceError):
            commutator_split(u, random_real(g, 13), 1)
