"""Two electrons in a square hard-wall box at zero magnetic field.

Lengths are in effective Bohr radii a and energies in effective Hartrees
e^2/(4 pi eps a), so the problem depends on L/a alone (plus the corner
biases).  The spatial wavefunction is expanded in symmetrized (singlet) or
antisymmetrized (triplet) products of box orbitals and diagonalized
exactly.  Reflection symmetries of the box that the corner biases leave
intact split the matrix into independent parity blocks.

Corner biases act through quadrant wells: corner c (clockwise from the
top-left) lowers the potential by ``corner_bias[c]`` over its quadrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from ..constants import effective_hartree
from ..core_model import MaterialParams
from .coulomb import CoulombTensor, load_or_compute, orbital_quantum_numbers

MAX_PAIR_DIM = 20000
RESIDUAL_TOL = 1e-8
ROW_CHUNK = 512

SINGLET = "singlet"
TRIPLET = "triplet"


class SizeError(ValueError):
    """The requested basis exceeds the desk-scale cap."""


@dataclass(frozen=True)
class EDConfig:
    L_over_a: float
    sp_cutoff: int = 12
    channel: str = SINGLET
    quadrature_order: int = 16
    corner_bias: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    coulomb_scale: float = 1.0

    def __post_init__(self):
        if not self.L_over_a > 0:
            raise ValueError("L_over_a must be positive")
        if self.sp_cutoff < 2:
            raise ValueError("sp_cutoff must be >= 2")
        if self.quadrature_order < 8:
            raise ValueError("quadrature_order must be >= 8")
        if self.channel not in (SINGLET, TRIPLET):
            raise ValueError(f"channel must be {SINGLET!r} or {TRIPLET!r}")
        if len(self.corner_bias) != 4:
            raise ValueError("corner_bias needs four entries")
        object.__setattr__(self, "corner_bias", tuple(float(b) for b in self.corner_bias))

    def with_channel(self, channel: str) -> EDConfig:
        return EDConfig(self.L_over_a, self.sp_cutoff, channel, self.quadrature_order, self.corner_bias, self.coulomb_scale)

    def with_cutoff(self, cutoff: int) -> EDConfig:
        return EDConfig(self.L_over_a, cutoff, self.channel, self.quadrature_order, self.corner_bias, self.coulomb_scale)


def pair_basis(cutoff: int, channel: str) -> np.ndarray:
    """Orbital pairs (i, j): i <= j for singlets, i < j for triplets."""
    n = cutoff * cutoff
    i, j = np.triu_indices(n, k=0 if channel == SINGLET else 1)
    return np.stack([i, j], axis=1)


def pair_dimension(cutoff: int, channel: str) -> int:
    n = cutoff * cutoff
    return n * (n + 1) // 2 if channel == SINGLET else n * (n - 1) // 2


def _half_overlap(n: np.ndarray, m: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """int_lo^hi 2 sin(n pi x) sin(m pi x) dx on the unit interval."""

    def cos_int(k):
        safe = np.where(k == 0, 1, k)
        val = (np.sin(k * math.pi * hi) - np.sin(k * math.pi * lo)) / (safe * math.pi)
        return np.where(k == 0, hi - lo, val)

    return cos_int(n - m) - cos_int(n + m)


# corner quadrants as (x interval, y interval), clockwise from top-left
QUADRANTS = (((0.0, 0.5), (0.5, 1.0)), ((0.5, 1.0), (0.5, 1.0)), ((0.5, 1.0), (0.0, 0.5)), ((0.0, 0.5), (0.0, 0.5)))


def one_body_matrix(cfg: EDConfig) -> np.ndarray:
    """Kinetic energy plus corner-bias wells in the orbital basis."""
    nx, ny = orbital_quantum_numbers(cfg.sp_cutoff)
    h = np.diag(0.5 * math.pi**2 * (nx**2 + ny**2) / cfg.L_over_a**2)
    for bias, ((x0, x1), (y0, y1)) in zip(cfg.corner_bias, QUADRANTS):
        if bias:
            ox = _half_overlap(nx[:, None], nx[None, :], x0, x1)
            oy = _half_overlap(ny[:, None], ny[None, :], y0, y1)
            h = h - bias * ox * oy
    return h


def conserved_parities(corner_bias: Sequence[float]) -> tuple[str, ...]:
    """Reflection parities left intact by the corner biases."""
    b1, b2, b3, b4 = corner_bias
    x_mirror = b1 == b2 and b3 == b4
    y_mirror = b1 == b4 and b2 == b3
    if x_mirror and y_mirror:
        return ("x", "y")
    if x_mirror:
        return ("x",)
    if y_mirror:
        return ("y",)
    if b1 == b3 and b2 == b4:
        return ("inversion",)
    return ()


def pair_parities(pairs: np.ndarray, cutoff: int, symmetries: Sequence[str]) -> list[tuple]:
    nx, ny = orbital_quantum_numbers(cutoff)
    # sin(n pi x) is even about x = 1/2 for odd n
    px = 1 - 2 * ((nx[pairs[:, 0]] + nx[pairs[:, 1]]) % 2)
    py = 1 - 2 * ((ny[pairs[:, 0]] + ny[pairs[:, 1]]) % 2)
    cols = []
    for sym in symmetries:
        cols.append({"x": px, "y": py, "inversion": px * py}[sym])
    if not cols:
        return [()] * len(pairs)
    return [tuple(int(v) for v in row) for row in np.stack(cols, axis=1)]


@dataclass(eq=False)
class HamiltonianBlock:
    sector: tuple
    pairs: np.ndarray
    matrix: np.ndarray


@dataclass(eq=False)
class EDHamiltonian:
    """Block-diagonal dense Hamiltonian of one spin channel."""

    cfg: EDConfig
    symmetries: tuple[str, ...]
    blocks: list[HamiltonianBlock]
    tensor: CoulombTensor

    @property
    def dim(self) -> int:
        return sum(len(b.pairs) for b in self.blocks)

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Full matrix and its pair ordering."""
        pairs = np.concatenate([b.pairs for b in self.blocks])
        H = scipy.linalg.block_diag(*[b.matrix for b in self.blocks])
        return H, pairs


def _pair_norm(pairs: np.ndarray, channel: str) -> np.ndarray:
    same = pairs[:, 0] == pairs[:, 1]
    if channel == SINGLET:
        return np.where(same, 0.5, 1.0 / math.sqrt(2.0))
    return np.full(len(pairs), 1.0 / math.sqrt(2.0))


def _assemble(pairs: np.ndarray, cfg: EDConfig, h1: np.ndarray, tensor: CoulombTensor) -> np.ndarray:
    sign = 1.0 if cfg.channel == SINGLET else -1.0
    norm = _pair_norm(pairs, cfg.channel)
    coul = cfg.coulomb_scale / cfg.L_over_a
    k = pairs[:, 0][None, :]
    l = pairs[:, 1][None, :]
    n = len(pairs)
    H = np.empty((n, n))

    def direct(i, j, kk, ll):
        val = h1[i, kk] * (j == ll) + (i == kk) * h1[j, ll]
        if coul:
            val = val + coul * tensor.elements(i, j, kk, ll)
        return val

    for start in range(0, n, ROW_CHUNK):
        rows = slice(start, start + ROW_CHUNK)
        i = pairs[rows, 0][:, None]
        j = pairs[rows, 1][:, None]
        block = direct(i, j, k, l) + sign * direct(i, j, l, k)
        H[rows] = 2.0 * norm[rows, None] * norm[None, :] * block
    return 0.5 * (H + H.T)


def build_h(cfg: EDConfig, tensor: CoulombTensor | None = None, cache_dir: str | Path | None = None,
            max_dim: int = MAX_PAIR_DIM) -> EDHamiltonian:
    """Assemble the two-electron Hamiltonian for ``cfg.channel``."""
    dim = pair_dimension(cfg.sp_cutoff, cfg.channel)
    if dim > max_dim:
        raise SizeError(f"pair basis dimension {dim} exceeds the cap of {max_dim}")
    if tensor is None:
        tensor = load_or_compute(cfg.sp_cutoff, cfg.quadrature_order, cache_dir)
    if tensor.cutoff != cfg.sp_cutoff:
        raise ValueError("Coulomb tensor cutoff does not match the configuration")
    h1 = one_body_matrix(cfg)
    pairs = pair_basis(cfg.sp_cutoff, cfg.channel)
    symmetries = conserved_parities(cfg.corner_bias)
    labels = pair_parities(pairs, cfg.sp_cutoff, symmetries)
    blocks = []
    for sector in sorted(set(labels), reverse=True):
        members = pairs[[lab == sector for lab in labels]]
        blocks.append(HamiltonianBlock(sector, members, _assemble(members, cfg, h1, tensor)))
    return EDHamiltonian(cfg, symmetries, blocks, tensor)


@dataclass(eq=False)
class EDState:
    """An eigenvector in the pair basis of one spin channel."""

    channel: str
    cutoff: int
    pairs: np.ndarray
    coeffs: np.ndarray
    energy: float = float("nan")
    sector: tuple = ()

    def orbital_matrix(self) -> np.ndarray:
        """Coefficient matrix C with Psi(r1, r2) = sum_ij C_ij phi_i(r1) phi_j(r2)."""
        n = self.cutoff * self.cutoff
        C = np.zeros((n, n))
        norm = _pair_norm(self.pairs, self.channel)
        i, j = self.pairs[:, 0], self.pairs[:, 1]
        sign = 1.0 if self.channel == SINGLET else -1.0
        np.add.at(C, (i, j), norm * self.coeffs)
        np.add.at(C, (j, i), sign * norm * self.coeffs)
        return C


@dataclass(eq=False)
class SpectrumResult:
    """Ascending energies with channel and parity-sector labels."""

    energies: np.ndarray
    channels: list[str]
    sectors: list[tuple] = field(default_factory=list)
    states: list[EDState | None] = field(default_factory=list)
    cutoff: int | None = None
    residual: float = 0.0
    units: str = "effective Hartree"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.argsort(self.energies, kind="stable")
        self.energies = np.asarray(self.energies, dtype=float)[order]
        self.channels = [self.channels[k] for k in order]
        self.sectors = [self.sectors[k] for k in order] if self.sectors else [()] * len(order)
        self.states = [self.states[k] for k in order] if self.states else [None] * len(order)

    def channel_energies(self, channel: str) -> np.ndarray:
        return np.array([e for e, c in zip(self.energies, self.channels) if c == channel])

    def channel_states(self, channel: str) -> list[EDState]:
        return [s for s, c in zip(self.states, self.channels) if c == channel]

    def merged(self, other: SpectrumResult) -> SpectrumResult:
        return SpectrumResult(
            np.concatenate([self.energies, other.energies]),
            self.channels + other.channels,
            self.sectors + other.sectors,
            self.states + other.states,
            self.cutoff,
            max(self.residual, other.residual),
            self.units,
            {**self.metadata, **other.metadata},
        )


def solve_lowest(h: EDHamiltonian, k: int) -> SpectrumResult:
    """The ``k`` lowest eigenpairs across all parity blocks."""
    if not 1 <= k <= h.dim:
        raise ValueError(f"k must lie in [1, {h.dim}]")
    energies, sectors, states = [], [], []
    worst = 0.0
    for block in h.blocks:
        m = min(k, len(block.pairs))
        w, v = scipy.linalg.eigh(block.matrix, subset_by_index=[0, m - 1], driver="evr")
        resid = np.linalg.norm(block.matrix @ v - v * w, axis=0) / np.maximum(1.0, np.abs(w))
        worst = max(worst, float(resid.max()))
        for e, vec in zip(w, v.T):
            energies.append(e)
            sectors.append(block.sector)
            states.append(EDState(h.cfg.channel, h.cfg.sp_cutoff, block.pairs, vec, float(e), block.sector))
    order = np.argsort(energies, kind="stable")[:k]
    if worst > RESIDUAL_TOL:
        raise ArithmeticError(f"eigen-residual {worst:g} exceeds {RESIDUAL_TOL:g}")
    return SpectrumResult(
        np.asarray(energies)[order],
        [h.cfg.channel] * len(order),
        [sectors[o] for o in order],
        [states[o] for o in order],
        h.cfg.sp_cutoff,
        worst,
        metadata={"symmetries": h.symmetries},
    )


def solve_ed(cfg: EDConfig, k: int = 6, cache_dir: str | Path | None = None,
             tensor: CoulombTensor | None = None) -> SpectrumResult:
    """Lowest ``k`` levels of both spin channels, merged and sorted."""
    if tensor is None:
        tensor = load_or_compute(cfg.sp_cutoff, cfg.quadrature_order, cache_dir)
    result = None
    for channel in (SINGLET, TRIPLET):
        h = build_h(cfg.with_channel(channel), tensor)
        part = solve_lowest(h, min(k, h.dim))
        result = part if result is None else result.merged(part)
    result.metadata.update(
        {
            "tensor_from_cache": tensor.from_cache,
            "quadrature_flagged": tensor.n_flagged,
            "quadrature_max_change": tensor.max_order_change,
        }
    )
    return result


def noninteracting_levels(cfg: EDConfig, channel: str, k: int) -> np.ndarray:
    """Analytic two-particle box energies without Coulomb or bias."""
    nx, ny = orbital_quantum_numbers(cfg.sp_cutoff)
    e = 0.5 * math.pi**2 * (nx**2 + ny**2) / cfg.L_over_a**2
    pairs = pair_basis(cfg.sp_cutoff, channel)
    return np.sort(e[pairs[:, 0]] + e[pairs[:, 1]])[:k]


# -- densities -------------------------------------------------------------


@dataclass(eq=False)
class ChargeDensity:
    """Electron density on a cell-centred n x n grid over the unit box.

    Coordinates are in units of L with y pointing up; ``values[ix, iy]`` is
    the density per unit (L^2) area, integrating to 2.
    """

    x: np.ndarray
    values: np.ndarray

    @property
    def integral(self) -> float:
        return float(self.values.sum() / self.values.size)


def _sine_grid(cutoff: int, x: np.ndarray) -> np.ndarray:
    n = np.arange(1, cutoff + 1)
    return math.sqrt(2.0) * np.sin(math.pi * np.outer(n, x))


def charge_density(state: EDState | np.ndarray, grid_n: int = 64, cutoff: int | None = None) -> ChargeDensity:
    """One-body density rho(r) = 2 int |Psi(r, r2)|^2 dr2.

    ``state`` is an :class:`EDState` or an orbital coefficient matrix C (then
    ``cutoff`` is required).  A cell-centred grid with ``grid_n`` > cutoff
    integrates the density exactly.
    """
    if isinstance(state, EDState):
        C, cutoff = state.orbital_matrix(), state.cutoff
    else:
        C = np.asarray(state, dtype=float)
    if cutoff is None:
        raise ValueError("cutoff is required with a bare coefficient matrix")
    norm = np.linalg.norm(C)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state is not normalized (norm {norm:g})")
    x = (np.arange(grid_n) + 0.5) / grid_n
    S = _sine_grid(cutoff, x)  # (cutoff, grid_n); phi = S[nx] * S[ny]
    Ck = C.reshape(cutoff, cutoff, -1)
    # Psi_j(x, y) = sum_{nx, ny} C[(nx, ny), j] S[nx, x] S[ny, y]
    psi = np.einsum("abj,ax,by->jxy", Ck, S, S, optimize=True)
    rho = 2.0 * np.einsum("jxy,jxy->xy", psi, psi)
    return ChargeDensity(x, rho)


def combine_states(states: Sequence[EDState], coeffs: Sequence[float]) -> np.ndarray:
    """Normalized orbital coefficient matrix of sum_k coeffs[k] * states[k]."""
    C = sum(c * s.orbital_matrix() for s, c in zip(states, coeffs))
    return C / np.linalg.norm(C)


def diagonal_basis_densities(spec: SpectrumResult, grid_n: int = 64) -> tuple[ChargeDensity, ChargeDensity]:
    """Densities of (S1 + S2)/sqrt2 and (S1 - S2)/sqrt2 built from the two lowest singlets."""
    s1, s2 = spec.channel_states(SINGLET)[:2]
    return tuple(charge_density(combine_states([s1, s2], [1.0, sign]), grid_n, s1.cutoff) for sign in (1.0, -1.0))


def quadrant_means(rho: ChargeDensity) -> np.ndarray:
    """Mean density per corner quadrant, clockwise from the top-left."""
    n = rho.values.shape[0]
    h = n // 2
    v = rho.values
    lo, hi = slice(0, h), slice(n - h, n)
    return np.array([v[lo, hi].mean(), v[hi, hi].mean(), v[hi, lo].mean(), v[lo, lo].mean()])


def local_maxima(rho: ChargeDensity) -> list[tuple[int, int]]:
    v = np.pad(rho.values, 1, constant_values=-np.inf)
    core = v[1:-1, 1:-1]
    mask = np.ones_like(core, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx or dy:
                mask &= core >= v[1 + dx : v.shape[0] - 1 + dx, 1 + dy : v.shape[1] - 1 + dy]
    return [tuple(int(a) for a in idx) for idx in np.argwhere(mask)]


def center_ratio(rho: ChargeDensity) -> float:
    """Density at the box centre (average of the central cells) over the peak density."""
    n = rho.values.shape[0]
    c = rho.values[(n - 1) // 2 : n // 2 + 1, (n - 1) // 2 : n // 2 + 1].mean()
    return float(c / rho.values.max())


# -- effective-model calibration --------------------------------------------


@dataclass(frozen=True)
class DeltaEstimate:
    delta: float
    midway_ratio: float
    isolated: bool | None
    delta_ueV: float | None = None
    note: str = ""


def extract_delta(spec: SpectrumResult, material: MaterialParams | None = None) -> DeltaEstimate:
    """Tunnelling energy from the singlet splitting (4 delta at zero field).

    Also returns the midway ratio r = (E_t - (E_s1 + E_s2)/2) / (E_s2 - E_s1)
    of the lowest triplet, and whether the next singlet lies at least twice
    the splitting above the pair (None when no third singlet was computed).
    """
    s = spec.channel_energies(SINGLET)
    t = spec.channel_energies(TRIPLET)
    if s.size < 2 or t.size < 1:
        raise ValueError("need at least two singlet levels and one triplet level")
    split = s[1] - s[0]
    delta = split / 4.0
    r = (t[0] - 0.5 * (s[0] + s[1])) / split
    isolated = None
    note = ""
    if s.size >= 3:
        isolated = bool(s[2] - s[1] >= 2.0 * split)
        if not isolated:
            note = "third singlet lies within twice the ground splitting; manifold not isolated"
    delta_ueV = None
    if material is not None:
        delta_ueV = delta * effective_hartree(material.effective_mass_ratio, material.relative_permittivity)
    return DeltaEstimate(float(delta), float(r), isolated, delta_ueV, note)
