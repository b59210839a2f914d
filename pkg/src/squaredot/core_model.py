"""Single-dot effective Hamiltonians for the two-electron square dot.

The low-lying manifold of two electrons sitting on diagonally opposite
corners is described by four corner site energies, a tunnelling energy
``delta`` and a Peierls phase ``phi``.  Within one spin channel this reduces
to a 2x2 matrix between the two diagonal charge configurations
``|0>`` (corners 1 and 3) and ``|1>`` (corners 2 and 4); corners are
numbered clockwise from the top-left.

Energies are in ueV.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import FLUX_QUANTUM, MU_B


@dataclass(frozen=True)
class MaterialParams:
    """Host material: effective mass ratio m*/m_e, relative permittivity, g factor."""

    effective_mass_ratio: float = 0.067
    relative_permittivity: float = 12.9
    g_factor: float = 0.44

    def __post_init__(self):
        if not self.effective_mass_ratio > 0:
            raise ValueError("effective_mass_ratio must be positive")
        if not self.relative_permittivity >= 1:
            raise ValueError("relative_permittivity must be >= 1")
        if not math.isfinite(self.g_factor):
            raise ValueError("g_factor must be finite")


@dataclass(frozen=True)
class DotGeometry:
    """Dot side length (nm), effective flux area (nm^2) and corner gate biases (uV)."""

    side_length_L: float
    effective_area_A: float | None = None
    corner_bias: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.side_length_L > 0:
            raise ValueError("side_length_L must be positive")
        if self.effective_area_A is None:
            object.__setattr__(self, "effective_area_A", self.side_length_L**2)
        if not 0 < self.effective_area_A <= self.side_length_L**2:
            raise ValueError("effective_area_A must lie in (0, L^2]")
        if len(self.corner_bias) != 4:
            raise ValueError("corner_bias needs four entries")
        object.__setattr__(self, "corner_bias", tuple(float(b) for b in self.corner_bias))

    def flux_quanta(self, B: float) -> float:
        """Flux through the effective area in units of h/e, for a field ``B`` in tesla."""
        return B * self.effective_area_A / FLUX_QUANTUM

    def site_energies(self) -> tuple[float, float, float, float]:
        """Zero-field corner energies in ueV; a positive bias attracts the electron."""
        return tuple(-b for b in self.corner_bias)


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters of the four-corner effective Hamiltonian.

    ``eps0`` are the zero-field corner energies, ``delta`` the tunnelling
    energy, ``phi`` the Peierls phase in radians and ``zeeman_EB`` the Zeeman
    energy g mu_B B.  The field dependence of ``delta`` is neglected.
    """

    eps0: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    delta: float = 1.0
    phi: float = 0.0
    zeeman_EB: float = 0.0

    def __post_init__(self):
        if len(self.eps0) != 4:
            raise ValueError("eps0 needs four corner energies")
        object.__setattr__(self, "eps0", tuple(float(e) for e in self.eps0))
        if not all(math.isfinite(e) for e in self.eps0):
            raise ValueError("eps0 entries must be finite")
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    def with_flux(self, flux_in_quanta: float) -> EffectiveParams:
        return EffectiveParams(self.eps0, self.delta, flux_phase(flux_in_quanta), self.zeeman_EB)


class Spin(enum.Enum):
    SINGLET = "singlet"
    TRIPLET = "triplet"


@dataclass(frozen=True)
class SpinChannel:
    kind: Spin
    sz: int | None = None

    def __post_init__(self):
        if self.kind is Spin.TRIPLET:
            if self.sz not in (-1, 0, 1):
                raise ValueError("triplet channel needs sz in {-1, 0, 1}")
        elif self.sz is not None:
            raise ValueError("singlet channel carries no sz")

    @property
    def label(self) -> str:
        if self.kind is Spin.SINGLET:
            return "singlet"
        return f"triplet_sz{self.sz:+d}"


SINGLET = SpinChannel(Spin.SINGLET)


def triplet(sz: int) -> SpinChannel:
    return SpinChannel(Spin.TRIPLET, sz)


@dataclass(frozen=True)
class TwoLevelH:
    """The real symmetric matrix [[e0, gamma], [gamma, e1]] in ueV."""

    e0: float
    e1: float
    gamma: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.e0, self.gamma], [self.gamma, self.e1]], dtype=float)


def flux_phase(flux_in_quanta: float) -> float:
    """Peierls phase for one hop between adjacent corners.

    Four hops encircle the dot, so 4 phi = 2 pi Phi/Phi0.
    """
    if not math.isfinite(flux_in_quanta):
        raise ValueError("flux must be finite")
    return 0.5 * math.pi * flux_in_quanta


def zeeman_energy(material: MaterialParams, B: float) -> float:
    """Zeeman energy g mu_B B in ueV for a field ``B`` in tesla."""
    if not math.isfinite(B):
        raise ValueError("B must be finite")
    return material.g_factor * MU_B * B


def build_channel_h(p: EffectiveParams, ch: SpinChannel) -> TwoLevelH:
    """2x2 Hamiltonian of one spin channel.

    Singlets (symmetric orbitals) couple through 2 delta cos(2 phi), triplets
    (antisymmetric orbitals) through 2 delta sin(2 phi).  The Zeeman term is
    diagonal in total S_z and enters triplets as a uniform shift sz * E_B.
    """
    e1, e2, e3, e4 = p.eps0
    shift = 0.0
    if ch.kind is Spin.SINGLET:
        gamma = 2.0 * p.delta * math.cos(2.0 * p.phi)
    else:
        gamma = 2.0 * p.delta * math.sin(2.0 * p.phi)
        shift = ch.sz * p.zeeman_EB
    return TwoLevelH(e1 + e3 + shift, e2 + e4 + shift, gamma)


def eigenenergies(h: TwoLevelH) -> tuple[float, float]:
    """Closed-form eigenvalues (E_minus, E_plus) of a :class:`TwoLevelH`."""
    mean = 0.5 * (h.e0 + h.e1)
    half_gap = math.hypot(0.5 * (h.e0 - h.e1), h.gamma)
    return mean - half_gap, mean + half_gap


def pseudo_spin(h: TwoLevelH) -> tuple[float, float, float]:
    """Decompose ``h`` as Ebar + eps * sz + gamma * sx.

    The pseudo-spin z axis points along ``|1>``: sz = diag(-1, +1) in the
    (|0>, |1>) basis, so that eps = (e1 - e0)/2.
    """
    return 0.5 * (h.e0 + h.e1), 0.5 * (h.e1 - h.e0), h.gamma


def from_pseudo_spin(ebar: float, eps: float, gamma: float) -> TwoLevelH:
    return TwoLevelH(ebar - eps, ebar + eps, gamma)


CHANNELS: tuple[SpinChannel, ...] = (SINGLET, triplet(-1), triplet(0), triplet(1))


@dataclass(frozen=True)
class FluxSpectrum:
    """Eight labelled energies per flux point (ueV)."""

    flux: np.ndarray
    labels: tuple[str, ...]
    energies: np.ndarray = field(repr=False)

    def column(self, label: str) -> np.ndarray:
        return self.energies[:, self.labels.index(label)]


def spectrum_vs_flux(
    p: EffectiveParams,
    flux_grid: Sequence[float],
    diamagnetic_coeff: float = 0.0,
) -> FluxSpectrum:
    """Singlet and triplet energies over a grid of flux values (units of h/e).

    ``diamagnetic_coeff`` adds a phenomenological ``coeff * flux**2`` to every
    level; the Zeeman energy in ``p`` is held fixed across the grid.
    """
    flux = np.asarray(flux_grid, dtype=float)
    if flux.ndim != 1 or flux.size == 0:
        raise ValueError("flux grid must be a nonempty 1-d sequence")
    labels = []
    for ch in CHANNELS:
        labels += [f"{ch.label}_minus", f"{ch.label}_plus"]
    energies = np.empty((flux.size, len(labels)))
    for row, f in enumerate(flux):
        pf = p.with_flux(f)
        rise = diamagnetic_coeff * f * f
        vals = []
        for ch in CHANNELS:
            vals.extend(eigenenergies(build_channel_h(pf, ch)))
        energies[row] = np.asarray(vals) + rise
    return FluxSpectrum(flux, tuple(labels), energies)
