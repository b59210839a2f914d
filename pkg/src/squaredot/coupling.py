"""Inter-dot Coulomb coupling and multi-dot pseudo-spin Hamiltonians.

Dots sit on a line with spacing ``d``; each holds two electrons on one of
its diagonals.  ``v_n`` is half the difference of the inter-dot Coulomb
energy between anti-parallel and parallel pseudo-spin configurations of
two dots ``n`` sites apart.

Pseudo-spin convention: z_i = +1 when dot i is in ``|1>`` and -1 in ``|0>``,
matching ``core_model.pseudo_spin``.  Basis order follows ``dynamics``
(qubit 0 is the most significant bit).
"""

from __future__ import annotations

import decimal
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import COULOMB_K

MAX_QUBITS = 12


class CouplingModel(enum.Enum):
    EXACT = "exact"
    DIPOLE = "dipole"
    SCREENED = "screened"


@dataclass(frozen=True)
class ArrayGeometry:
    """Linear array of ``n_dots`` square dots; lengths in nm."""

    n_dots: int
    spacing_d: float
    side_L: float
    image_distance_delta: float | None = None
    permittivity: float = 12.9

    def __post_init__(self):
        if self.n_dots < 1:
            raise ValueError("n_dots must be positive")
        if not (self.spacing_d > 0 and self.side_L > 0):
            raise ValueError("lengths must be positive")
        if not self.spacing_d > self.side_L:
            raise ValueError(f"dots overlap: spacing d = {self.spacing_d} nm must exceed side L = {self.side_L} nm")
        if self.image_distance_delta is not None and not self.image_distance_delta > 0:
            raise ValueError("image_distance_delta must be positive")
        if not self.permittivity >= 1:
            raise ValueError("relative permittivity must be >= 1")

    @property
    def coulomb_k(self) -> float:
        """e^2 / (4 pi eps) in ueV nm."""
        return COULOMB_K / self.permittivity


def _check_order(n: int, g: ArrayGeometry) -> float:
    if n < 1:
        raise ValueError("neighbour order n must be >= 1")
    D = n * g.spacing_d
    if not D > g.side_L:
        raise ValueError(f"n*d = {D} nm must exceed L = {g.side_L} nm")
    return D


def v_exact(n: int, g: ArrayGeometry) -> float:
    """Point-charge corner model, no screening (ueV).

    The six terms are each of order 1/D while their sum is of order
    L^4 / D^5, so the sum is formed in 60-digit decimal arithmetic; double
    precision would lose about four digits per decade of D/L.
    """
    D = _check_order(n, g)
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        d, l = decimal.Decimal(D), decimal.Decimal(g.side_L)
        one, two = decimal.Decimal(1), decimal.Decimal(2)
        s = (
            one / (d - l)
            + two / (d * d + l * l).sqrt()
            + one / (d + l)
            - two / d
            - one / ((d - l) ** 2 + l * l).sqrt()
            - one / ((d + l) ** 2 + l * l).sqrt()
        )
        return float(decimal.Decimal(0.5 * g.coulomb_k) * s)


def v_dipole(n: int, g: ArrayGeometry) -> float:
    """Leading term of ``v_exact`` in L/(n d) (ueV)."""
    D = _check_order(n, g)
    return 3.0 * g.coulomb_k / D * (g.side_L / D) ** 4


def v_screened(n: int, g: ArrayGeometry) -> float:
    """Coupling screened by image charges in the corner gates (ueV)."""
    D = _check_order(n, g)
    if g.image_distance_delta is None:
        raise ValueError("screened model needs image_distance_delta")
    return 10.0 * g.coulomb_k * (g.image_distance_delta / D) ** 2 * (g.side_L / D) ** 4


V_MODELS = {
    CouplingModel.EXACT: v_exact,
    CouplingModel.DIPOLE: v_dipole,
    CouplingModel.SCREENED: v_screened,
}


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("coupling matrix must be square")
        if not np.array_equal(v, v.T) or np.any(np.diag(v) != 0):
            raise ValueError("coupling matrix must be symmetric with zero diagonal")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.shape[0]


def coupling_matrix(
    g: ArrayGeometry, model: CouplingModel | str, truncate_order: int | None = None
) -> CouplingMatrix:
    """v_ij = v_model(|i - j|) for every pair.

    ``truncate_order`` drops couplings beyond that neighbour distance; it is
    meant for studying the error of nearest-neighbour truncation only.
    """
    fn = V_MODELS[CouplingModel(model)]
    n = g.n_dots
    per_order = [0.0] + [fn(k, g) for k in range(1, n)]
    if truncate_order is not None:
        per_order = [v if k <= truncate_order else 0.0 for k, v in enumerate(per_order)]
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    return CouplingMatrix(np.asarray(per_order)[dist])


def pseudo_spin_z(n_qubits: int) -> np.ndarray:
    """(2^n, n) array of z_i = +/-1 for every computational basis state."""
    states = np.arange(1 << n_qubits)
    shifts = n_qubits - 1 - np.arange(n_qubits)
    bits = (states[:, None] >> shifts[None, :]) & 1
    return 2 * bits - 1


def build_array_h(
    eps: Sequence[float],
    gammas: Sequence[float],
    vm: CouplingMatrix | np.ndarray,
    max_qubits: int = MAX_QUBITS,
) -> np.ndarray:
    """Dense H = sum_i (eps_i z_i + gamma_i x_i) - sum_{i<j} v_ij z_i z_j.

    The pair sum over i < j equals the half-sum over ordered pairs.
    """
    v = vm.v if isinstance(vm, CouplingMatrix) else np.asarray(vm, dtype=float)
    eps = np.asarray(eps, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    n = eps.size
    if gammas.size != n or v.shape != (n, n):
        raise ValueError("eps, gammas and the coupling matrix disagree on the number of dots")
    if n > max_qubits:
        raise ValueError(f"{n} dots exceed the dense-matrix cap of {max_qubits}")
    z = pseudo_spin_z(n)
    diag = z @ eps - 0.5 * np.einsum("si,ij,sj->s", z, v, z)
    H = np.diag(diag)
    states = np.arange(1 << n)
    for i in range(n):
        flipped = states ^ (1 << (n - 1 - i))
        H[states, flipped] += gammas[i]
    return H


def two_qubit_energy_basis(gamma1: float, gamma2: float, v: float) -> np.ndarray:
    """Two-dot Hamiltonian in the per-dot energy basis.

    Basis order |-,->, |-,+>, |+,->, |+,+> with |+-> = (|0> +- |1>)/sqrt(2)
    carrying energy +-gamma.  The z z coupling flips both dots in this basis,
    giving -v on the anti-diagonal.
    """
    H = np.diag([-gamma1 - gamma2, -gamma1 + gamma2, gamma1 - gamma2, gamma1 + gamma2]).astype(float)
    H[0, 3] = H[3, 0] = H[1, 2] = H[2, 1] = -v
    return H


#: Columns are |-> and |+> in the computational basis.
ENERGY_BASIS = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2.0)


def to_energy_basis(H: np.ndarray) -> np.ndarray:
    """Rotate an N-dot computational-basis operator into the per-dot |+-> basis."""
    n = H.shape[0].bit_length() - 1
    U = np.ones((1, 1))
    for _ in range(n):
        U = np.kron(U, ENERGY_BASIS)
    return U.T @ H @ U
