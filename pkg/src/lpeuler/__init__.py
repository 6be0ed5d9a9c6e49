"""Littlewood-Paley calculus on periodic grids, estimate verification and a
2D Euler solver with Triebel-Lizorkin diagnostics."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Grid,
    SpectralField,
    VectorField,
    dealiased_product,
    forward_transform,
    inverse_transform,
    lattice_integral,
    read_field,
    read_vector_field,
    write_field,
    write_vector_field,
)
from .lp import BumpProfile, DyadicDecomposition, decompose, delta_j, partial_sum  # noqa: E402
from .norms import NormValue, besov_norm, lp_norm, tl_norm, w1inf_norm  # noqa: E402

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "dealiased_product",
    "forward_transform",
    "inverse_transform",
    "lattice_integral",
    "read_field",
    "read_vector_field",
    "write_field",
    "write_vector_field",
    "BumpProfile",
    "DyadicDecomposition",
    "decompose",
    "delta_j",
    "partial_sum",
    "NormValue",
    "besov_norm",
    "lp_norm",
    "tl_norm",
    "w1inf_norm",
]
