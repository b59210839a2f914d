"""Exact diagonalization of two electrons in a square box at zero field."""

from .coulomb import CoulombTensor, load_or_compute, orbital_index
from .solver import (
    ChargeDensity,
    DeltaEstimate,
    EDConfig,
    EDHamiltonian,
    EDState,
    SINGLET,
    SizeError,
    SpectrumResult,
    TRIPLET,
    build_h,
    center_ratio,
    charge_density,
    diagonal_basis_densities,
    extract_delta,
    noninteracting_levels,
    pair_dimension,
    solve_ed,
    solve_lowest,
)

__all__ = [
    "ChargeDensity",
    "CoulombTensor",
    "DeltaEstimate",
    "EDConfig",
    "EDHamiltonian",
    "EDState",
    "SINGLET",
    "SizeError",
    "SpectrumResult",
    "TRIPLET",
    "build_h",
    "center_ratio",
    "charge_density",
    "diagonal_basis_densities",
    "extract_delta",
    "noninteracting_levels",
    "pair_dimension",
    "load_or_compute",
    "orbital_index",
    "solve_ed",
    "solve_lowest",
]
