"""Physical constants and unit conventions.

Energies are in micro-electronvolts (ueV), times in picoseconds (ps) and
lengths in nanometres (nm) throughout the effective-model code.  The exact
diagonalization works in effective atomic units and converts at its
interface only.
"""

#: Reduced Planck constant in ueV * ps.
HBAR = 658.2119569

#: Bohr magneton in ueV / T.
MU_B = 57.8838

#: Flux quantum h/e in T * nm^2.
FLUX_QUANTUM = 4135.667696

#: Coulomb constant e^2 / (4 pi eps0) in ueV * nm (1.4400 eV nm).
COULOMB_K = 1.4400e6

#: Hartree energy in ueV.
HARTREE = 27.211386245988e6

#: Bohr radius in nm.
BOHR_RADIUS = 0.052917721090


def effective_hartree(effective_mass_ratio: float, relative_permittivity: float) -> float:
    """Effective Hartree energy e^2/(4 pi eps a*) in ueV."""
    return HARTREE * effective_mass_ratio / relative_permittivity**2


def effective_bohr_radius(effective_mass_ratio: float, relative_permittivity: float) -> float:
    """Effective Bohr radius a* in nm."""
    return BOHR_RADIUS * relative_permittivity / effective_mass_ratio

