"""Concurrence of pure two-qubit states and the two-dot entangling protocols.

All protocols work with two dots coupled by the inter-dot Coulomb term.
Starting from |+,-> (one dot in its excited, the other in its ground
energy state) the coupling swaps population into |-,+> and entangles the
dots; detuning one dot's tunnelling energy suppresses or freezes this.

Every trace carries the full numerical evolution as its ``concurrence``
and ``transfer_prob`` columns and the analytic curves in ``reference``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import HBAR
from .coupling import build_array_h, two_qubit_energy_basis
from .dynamics import QState, evolve_nqubit

COMPUTATIONAL = np.eye(2, dtype=complex)

# index of |+,-> and |-,+> in the energy-basis ordering of two_qubit_energy_basis
PLUS_MINUS = 2
MINUS_PLUS = 1

POINTS_PER_PERIOD = 2000


@dataclass
class ProtocolTrace:
    times: np.ndarray
    concurrence: np.ndarray
    transfer_prob: np.ndarray
    label: str
    reference: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if len(self.concurrence) != n or len(self.transfer_prob) != n:
            raise ValueError("trace columns must have equal lengths")
        if np.any(self.concurrence < -1e-10) or np.any(self.concurrence > 1 + 1e-10):
            raise ValueError("concurrence outside [0, 1]")

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t_ps": self.times, "concurrence": self.concurrence, "transfer_prob": self.transfer_prob}
        cols.update(self.reference)
        return cols


def _amplitudes(s) -> np.ndarray:
    amps = s.amplitudes if isinstance(s, QState) else np.asarray(s, dtype=complex)
    if amps.shape[-1] != 4:
        raise ValueError("concurrence needs a two-qubit state")
    norm = np.linalg.norm(amps, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-10):
        raise ValueError("state is not normalized")
    return amps


def concurrence_pure(s, basis: np.ndarray = COMPUTATIONAL) -> float | np.ndarray:
    """c = 2 |<aa|psi><bb|psi> - <ab|psi><ba|psi>| for an orthonormal pair a, b.

    ``basis`` holds |a> and |b> as columns, expressed in the basis the
    amplitudes of ``s`` refer to.  ``s`` may also be a ``(..., 4)`` array of
    amplitude vectors.
    """
    amps = _amplitudes(s)
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (2, 2) or not np.allclose(basis.conj().T @ basis, np.eye(2), atol=1e-10):
        raise ValueError("basis must be an orthonormal pair of single-qubit vectors")
    psi = amps.reshape(amps.shape[:-1] + (2, 2))
    # m[..., i, j] = <e_i, e_j | psi> with e_0 = a, e_1 = b
    m = np.einsum("ki,...kl,lj->...ij", basis.conj(), psi, basis.conj())
    c = 2.0 * np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    return float(c) if c.ndim == 0 else c


def default_time_grid(period: float, n_periods: float = 2.0) -> np.ndarray:
    npts = int(round(POINTS_PER_PERIOD * n_periods)) + 1
    return np.linspace(0.0, n_periods * period, npts)


def _energy_basis_start() -> QState:
    amps = np.zeros(4, dtype=complex)
    amps[PLUS_MINUS] = 1.0
    return QState(amps)


def _transfer(amps: np.ndarray) -> np.ndarray:
    return np.abs(amps[..., MINUS_PLUS]) ** 2


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t < 0):
        raise ValueError("time grid must be a nonempty 1-d array of non-negative times")
    return t


def root_swap_trace(v: float, t_grid: Sequence[float] | None = None, gamma: float = 1.0) -> ProtocolTrace:
    """Free evolution of |+,-> with equal tunnelling on both dots.

    The concurrence is |sin(2 v t / hbar)| independently of ``gamma``; it
    first reaches 1 at t = pi hbar / (4 v).
    """
    if not v > 0:
        raise ValueError("v must be positive")
    t = default_time_grid(math.pi * HBAR / (2 * v)) if t_grid is None else _check_grid(t_grid)
    amps = evolve_nqubit(_energy_basis_start(), two_qubit_energy_basis(gamma, gamma, v), t)
    c = concurrence_pure(amps)
    closed = np.abs(np.sin(2 * v * t / HBAR))
    return ProtocolTrace(
        t,
        c,
        _transfer(amps),
        f"rootswap v={v:g}",
        {"concurrence_closed_form": closed, "transfer_closed_form": np.sin(v * t / HBAR) ** 2},
        {"max_closed_form_deviation": float(np.abs(c - closed).max()), "t_first_max_ps": math.pi * HBAR / (4 * v)},
    )


def computational_start_trace(
    v: float,
    gamma: float | tuple[float, float],
    start: str = "00",
    t_grid: Sequence[float] | None = None,
) -> ProtocolTrace:
    """Evolution from a computational product state under the two-dot H.

    ``gamma`` is either shared or given per dot.  ``transfer_prob`` is the
    probability of having left the start state.
    """
    g1, g2 = (gamma, gamma) if np.isscalar(gamma) else gamma
    if v < 0 or g1 < 0 or g2 < 0:
        raise ValueError("v and gamma must be non-negative")
    if len(start) != 2 or set(start) - {"0", "1"}:
        raise ValueError("start must be a two-bit string")
    if t_grid is None:
        scale = max(v, 1e-300)
        t = default_time_grid(math.pi * HBAR / (2 * scale))
    else:
        t = _check_grid(t_grid)
    H = build_array_h([0.0, 0.0], [g1, g2], np.array([[0.0, v], [v, 0.0]]))
    psi0 = QState.basis(start)
    amps = evolve_nqubit(psi0, H, t)
    c = concurrence_pure(amps)
    left = 1.0 - np.abs(amps[:, int(start, 2)]) ** 2
    return ProtocolTrace(t, c, left, f"computational start={start} v={v:g} gamma=({g1:g},{g2:g})")


def detuned_theta(gamma: float, v: float) -> tuple[float, float]:
    """Mixing angle theta (tan theta = v / (gamma + eps)) and eps = sqrt(gamma^2 + v^2)."""
    eps = math.hypot(gamma, v)
    return math.atan2(v, gamma + eps), eps


def detuned_trace(gamma: float, v: float, t_grid: Sequence[float] | None = None) -> ProtocolTrace:
    """|+,-> evolving with tunnelling ``gamma`` on one dot and none on the other.

    Closed forms with s = sin(2 theta) = v / eps:
    transfer probability s^2 sin^2(eps t / hbar) and concurrence
    2 |s sin(eps t / hbar)| sqrt(1 - s^2 sin^2(eps t / hbar)).
    """
    if gamma < 0 or not v > 0:
        raise ValueError("need gamma >= 0 and v > 0")
    theta, eps = detuned_theta(gamma, v)
    t = default_time_grid(math.pi * HBAR / eps) if t_grid is None else _check_grid(t_grid)
    amps = evolve_nqubit(_energy_basis_start(), two_qubit_energy_basis(gamma, 0.0, v), t)
    c = concurrence_pure(amps)
    p = _transfer(amps)
    s2 = math.sin(2 * theta)
    osc = np.sin(eps * t / HBAR)
    p_closed = s2**2 * osc**2
    c_closed = 2 * np.abs(s2 * osc) * np.sqrt(1 - p_closed)
    return ProtocolTrace(
        t,
        c,
        p,
        f"detuned gamma={gamma:g} v={v:g}",
        {"concurrence_closed_form": c_closed, "transfer_closed_form": p_closed},
        {
            "theta": theta,
            "eps_ueV": eps,
            "max_concurrence_deviation": float(np.abs(c - c_closed).max()),
            "max_transfer_deviation": float(np.abs(p - p_closed).max()),
            "note": "transfer probability follows sin^2(eps t), derived from the evolved state",
        },
    )


def preservation_trace(gamma: float, v: float, t_grid: Sequence[float] | None = None) -> ProtocolTrace:
    """Entangle by free evolution up to t* = pi hbar / (4 v), then detune one dot.

    Before t* both dots carry ``gamma``; afterwards one dot's tunnelling is
    switched off.  The evolved state is authoritative; the reference column
    ``concurrence_closed_form`` evaluates
    sqrt(1 - sin^2(2 theta) sin^2(2 eps (t - t*) / hbar)) after t*.
    """
    if gamma < 0 or not v > 0:
        raise ValueError("need gamma >= 0 and v > 0")
    theta, eps = detuned_theta(gamma, v)
    t_switch = math.pi * HBAR / (4 * v)
    if t_grid is None:
        t = np.linspace(0.0, t_switch + 2 * math.pi * HBAR / (2 * eps), 2 * POINTS_PER_PERIOD + 1)
        t = np.union1d(t, [t_switch])
    else:
        t = _check_grid(t_grid)
    before = t <= t_switch
    amps = np.empty((t.size, 4), dtype=complex)
    start = _energy_basis_start()
    amps[before] = evolve_nqubit(start, two_qubit_energy_basis(gamma, gamma, v), t[before])
    entangled = evolve_nqubit(start, two_qubit_energy_basis(gamma, gamma, v), t_switch)
    amps[~before] = evolve_nqubit(entangled, two_qubit_energy_basis(gamma, 0.0, v), t[~before] - t_switch)
    c = concurrence_pure(amps)
    s2 = math.sin(2 * theta)
    closed = np.where(
        before,
        np.abs(np.sin(2 * v * t / HBAR)),
        np.sqrt(1 - s2**2 * np.sin(2 * eps * np.clip(t - t_switch, 0, None) / HBAR) ** 2),
    )
    after = ~before
    return ProtocolTrace(
        t,
        c,
        _transfer(amps),
        f"preserve gamma={gamma:g} v={v:g}",
        {"concurrence_closed_form": closed},
        {
            "t_switch_ps": t_switch,
            "theta": theta,
            "eps_ueV": eps,
            "min_concurrence_after_switch": float(c[after].min()) if after.any() else float("nan"),
            "max_closed_form_deviation": float(np.abs(c - closed).max()),
        },
    )
