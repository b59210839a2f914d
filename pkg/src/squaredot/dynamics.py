"""State propagation, gate synthesis, initialization and readout.

Hamiltonians are piecewise constant, so every segment is propagated
exactly: 2x2 blocks through the closed-form SU(2) exponential, larger
ones through an eigendecomposition.  Times are in ps, energies in ueV.

Computational basis states are ordered with qubit 0 as the most
significant bit, i.e. amplitude index ``b0 b1 ... b_{n-1}`` read as binary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .constants import HBAR
from .core_model import EffectiveParams, SINGLET, TwoLevelH, build_channel_h, flux_phase

NORM_TOL = 1e-10
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QState:
    """Normalized pure state of ``n_qubits`` pseudo-spins."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        n = amps.size.bit_length() - 1
        if amps.size < 2 or 1 << n != amps.size:
            raise ValueError(f"state length {amps.size} is not a power of two >= 2")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, bits: str) -> QState:
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    @classmethod
    def normalized(cls, amplitudes) -> QState:
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def fidelity(self, other: QState | np.ndarray) -> float:
        """Global-phase-insensitive overlap |<other|self>|^2."""
        other_amps = other.amplitudes if isinstance(other, QState) else np.asarray(other, dtype=complex)
        return float(abs(np.vdot(other_amps, self.amplitudes)) ** 2)


Hamiltonian = Union[TwoLevelH, np.ndarray]


@dataclass(frozen=True)
class ScheduleSegment:
    duration: float
    h: Hamiltonian
    label: str = ""

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError("segment duration must be non-negative")


@dataclass(frozen=True)
class GateSchedule:
    segments: tuple[ScheduleSegment, ...]

    @property
    def total_time(self) -> float:
        return sum(seg.duration for seg in self.segments)


def _as_matrix(h: Hamiltonian) -> np.ndarray:
    if isinstance(h, TwoLevelH):
        return h.matrix()
    m = np.asarray(h)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    return m


def two_level_propagator(h: TwoLevelH, t: float) -> np.ndarray:
    """exp(-i H t / hbar) for a 2x2 real symmetric H, in closed form."""
    mean = 0.5 * (h.e0 + h.e1)
    nz = 0.5 * (h.e0 - h.e1)  # coefficient of the standard Pauli z = diag(1, -1)
    nx = h.gamma
    omega = math.hypot(nz, nx)
    theta = omega * t / HBAR
    c = math.cos(theta)
    # sin(theta)/omega, regular at omega -> 0
    s_over = math.sin(theta) / omega if omega > 0 else t / HBAR
    phase = np.exp(-1j * mean * t / HBAR)
    u = np.array(
        [[c - 1j * s_over * nz, -1j * s_over * nx], [-1j * s_over * nx, c + 1j * s_over * nz]],
        dtype=complex,
    )
    return phase * u


def evolve_two_level(s: QState, h: TwoLevelH, t: float) -> QState:
    """Propagate a single-qubit state under ``h`` for ``t`` ps."""
    if s.n_qubits != 1:
        raise ValueError("evolve_two_level needs a single-qubit state")
    if t < 0:
        raise ValueError("t must be non-negative")
    return QState.normalized(two_level_propagator(h, t) @ s.amplitudes)


def propagator(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t / hbar) by eigendecomposition of the Hermitian ``H``."""
    H = _as_matrix(H)
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * t / HBAR)) @ v.conj().T


def evolve_nqubit(s: QState, H: np.ndarray, t: float | Sequence[float]):
    """Propagate ``s`` under ``H`` for time ``t`` (ps).

    A scalar ``t`` returns a :class:`QState`; an array of times returns a
    ``(len(t), dim)`` complex array of amplitudes, sharing one
    eigendecomposition.
    """
    H = _as_matrix(H)
    if H.shape[0] != s.dim:
        raise ValueError(f"Hamiltonian dimension {H.shape[0]} does not match state dimension {s.dim}")
    if not np.allclose(H, H.conj().T, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ValueError("Hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(H)
    coeff = v.conj().T @ s.amplitudes
    times = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(times, w) / HBAR)
    out = (phases * coeff) @ v.T
    if times.ndim == 0:
        return QState.normalized(out)
    return out


def _evolve_segment(s: QState, seg: ScheduleSegment) -> QState:
    if seg.duration == 0:
        if not isinstance(seg.h, TwoLevelH) and _as_matrix(seg.h).shape[0] != s.dim:
            raise ValueError("segment Hamiltonian dimension does not match state")
        return s
    if isinstance(seg.h, TwoLevelH) and s.n_qubits == 1:
        return evolve_two_level(s, seg.h, seg.duration)
    return evolve_nqubit(s, _as_matrix(seg.h), seg.duration)


def run_schedule(s: QState, sched: GateSchedule) -> QState:
    for seg in sched.segments:
        s = _evolve_segment(s, seg)
    return s


def symmetric_h(delta: float, e0: float = 0.0) -> TwoLevelH:
    """Zero-field singlet Hamiltonian [[e0, 2 delta], [2 delta, e0]]."""
    return build_channel_h(EffectiveParams((0.5 * e0,) * 4, delta), SINGLET)


def hadamard_time(delta: float) -> float:
    return math.pi * HBAR / (8.0 * delta)


def not_time(delta: float) -> float:
    return math.pi * HBAR / (4.0 * delta)


def oscillation_period(delta: float) -> float:
    """Period pi hbar / (2 delta) of the |0> <-> |1> oscillation."""
    return math.pi * HBAR / (2.0 * delta)


def named_gate(name: str, delta: float) -> GateSchedule:
    """One-segment schedule for ``"hadamard"``, ``"not"`` or ``"identity"``."""
    h = symmetric_h(delta)
    times = {"hadamard": hadamard_time(delta), "not": not_time(delta), "identity": oscillation_period(delta)}
    try:
        t = times[name]
    except KeyError:
        raise ValueError(f"unknown gate {name!r}; expected one of {sorted(times)}") from None
    return GateSchedule((ScheduleSegment(t, h, name),))


def synthesize_rotation(target: tuple[float, float], delta: float, gate_energy: float) -> GateSchedule:
    """Two-segment schedule realising a general single-qubit rotation of |0>.

    Segment 1 runs the symmetric Hamiltonian for ``theta * hbar / (2 delta)``,
    giving cos(theta)|0> - i sin(theta)|1>.  Segment 2 holds half a flux
    quantum (no tunnelling) with a gate splitting ``E1 - E0 = gate_energy``
    for ``phase * hbar / gate_energy``, which multiplies the |1> amplitude by
    exp(-i phase).  The result on |0> is, up to global phase,

        cos(theta)|0> - i exp(-i phase) sin(theta)|1>.

    A negative ``gate_energy`` is handled by wrapping ``phase`` so that the
    second duration stays non-negative.
    """
    theta, phase = (float(x) for x in target)
    if not (math.isfinite(theta) and math.isfinite(phase)):
        raise ValueError("target angles must be finite")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if gate_energy == 0 or not math.isfinite(gate_energy):
        raise ValueError("gate_energy must be finite and nonzero")
    if not -1e-12 <= theta <= 0.5 * math.pi + 1e-12:
        raise ValueError(
            f"theta = {theta} is outside [0, pi/2]; cos(theta)|0> + e^(i phi) sin(theta)|1> with theta in "
            "(pi/2, pi) equals theta' = pi - theta with phi shifted by pi, so pass the reduced angle"
        )
    theta = min(max(theta, 0.0), 0.5 * math.pi)
    if gate_energy > 0:
        t2 = (phase % (2 * math.pi)) * HBAR / gate_energy
    else:
        t2 = ((-phase) % (2 * math.pi)) * HBAR / -gate_energy
    rotate = ScheduleSegment(theta * HBAR / (2.0 * delta), symmetric_h(delta), "rotate")
    dephase = ScheduleSegment(t2, TwoLevelH(0.0, gate_energy, 0.0), "phase")
    return GateSchedule((rotate, dephase))


def rotation_target_state(theta: float, phase: float) -> QState:
    """Closed-form result of :func:`synthesize_rotation` acting on |0>."""
    return QState([math.cos(theta), -1j * np.exp(-1j * phase) * math.sin(theta)])


def synthesize_state(theta: float, phi: float, delta: float, gate_energy: float) -> GateSchedule:
    """Schedule taking |0> to cos(theta)|0> + exp(i phi) sin(theta)|1> up to global phase."""
    return synthesize_rotation((theta, -0.5 * math.pi - phi), delta, gate_energy)


@dataclass(frozen=True)
class GroundState:
    state: QState
    energy: float
    degenerate: bool
    degeneracy: int


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-8))
    return v * (abs(v[k]) / v[k])


def initialize_ground(h: Hamiltonian, subspace: Sequence[int] | None = None) -> GroundState:
    """Ground state of ``h`` after relaxation.

    ``subspace`` restricts the relaxation to the listed basis indices (the
    result is embedded back in the full space).  When the ground level is
    degenerate the returned state is the normalized projection of the
    lowest-index basis vector with nonzero weight, and the result is flagged.
    The overall phase makes the first nonzero amplitude real and positive.
    """
    H = _as_matrix(h)
    idx = np.arange(H.shape[0]) if subspace is None else np.asarray(subspace, dtype=int)
    w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
    scale = max(1.0, float(np.abs(w).max()))
    ground = np.flatnonzero(w - w[0] <= DEGENERACY_TOL * scale)
    if ground.size == 1:
        vec = v[:, 0]
    else:
        span = v[:, ground]
        for k in range(idx.size):
            vec = span @ span[k].conj()
            if np.linalg.norm(vec) > 1e-6:
                break
        vec = vec / np.linalg.norm(vec)
    full = np.zeros(H.shape[0], dtype=complex)
    full[idx] = _fix_phase(vec.astype(complex))
    return GroundState(QState.normalized(full), float(w[0]), ground.size > 1, int(ground.size))


def prepare_plus_minus(delta_a: float, delta_b: float) -> QState:
    """Prepare |+,-> by the one-flux-quantum swap on dot A.

    Both dots relax into their singlet ground state |-> with dot A threaded
    by one flux quantum, which flips the sign of its tunnelling coupling and
    makes |+> its ground state.  Removing the field leaves dot A excited.
    The returned amplitudes are (1, -1, 1, -1)/2 in the computational basis.
    """
    if not (delta_a > 0 and delta_b > 0):
        raise ValueError("tunnelling energies must be positive")
    dot_a = build_channel_h(EffectiveParams(delta=delta_a, phi=flux_phase(1.0)), SINGLET)
    dot_b = build_channel_h(EffectiveParams(delta=delta_b), SINGLET)
    a = initialize_ground(dot_a).state.amplitudes
    b = initialize_ground(dot_b).state.amplitudes
    return QState.normalized(np.kron(a, b))


def measure_computational(s: QState, shots: int, seed: int) -> dict[str, int]:
    """Sample ``shots`` projective measurements in the computational basis.

    Sampling uses numpy's PCG64 bit generator seeded with ``seed`` and a
    single multinomial draw, so the counts are reproducible across
    platforms for a given seed.  Keys are bit strings (qubit 0 leftmost);
    outcomes with zero counts are omitted.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    p = s.probabilities()
    counts = rng.multinomial(shots, p / p.sum())
    n = s.n_qubits
    return {format(k, f"0{n}b"): int(c) for k, c in enumerate(counts) if c}
