"""
Dyadic blocks of a periodic field
=================================

Split a random field into Littlewood-Paley blocks, check that the blocks add
back up, and measure a few norms.
"""

import math

import numpy as np

from lpeuler import Grid, decompose, tl_norm
from lpeuler.core import forward_transform, to_physical
from lpeuler.lp import DEFAULT_PROFILE, partition_defect
from lpeuler.norms import besov_norm, lp_norm

# A 2D grid with 128 points per side on [0, 2 pi)^2
grid = Grid(2, 128)
x1, x2 = grid.coords

###############################################################################
# The cutoff and the band symbols
r = np.linspace(0, 4, 9)
print("chi(r)      ", np.round(DEFAULT_PROFILE.chi(r), 4))
print("h_0(r)      ", np.round(DEFAULT_PROFILE.band(0, r), 4))
print("partition defect on the lattice:", partition_defect(grid))

###############################################################################
# A field with structure at several scales
f = forward_transform(np.cos(x1) + 0.3 * np.sin(5 * x1 + 2 * x2) + 0.05 * np.cos(23 * x2) + 0 * x1, grid)
dec = decompose(f)
print(f"bands {dec.j_min}..{dec.j_max}, reconstruction error {dec.reconstruction_error:.2e}")
for j in dec.nonzero_bands():
    samples = to_physical(dec.bands[j].coeffs, grid)
    print(f"  j={j:+d}  max|Delta_j f| = {np.abs(samples).max():.4f}")

###############################################################################
# Norms.  cos(x1) sits in the single band j = 0, so its F^s_{1,inf} norm is
# the L^1 norm of |cos|, 8 pi on this box, whatever s is.
c = forward_transform(np.cos(x1) + 0 * x2, grid)
for s in (1.0, 3.0):
    print(f"||cos||_F^{s:g} = {tl_norm(c, s, oversample=8).value:.9f}  (8 pi = {8 * math.pi:.9f})")
print("||f||_L1      ", lp_norm(f, 1).value)
print("||f||_F^3     ", tl_norm(f, 3).value)
print("||f||_B^1_inf,1", besov_norm(f, 1, math.inf, 1).value)
