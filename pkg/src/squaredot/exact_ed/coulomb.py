"""Coulomb matrix elements in the hard-wall box sine basis.

Orbitals are phi_{nx,ny}(x, y) = (2/L) sin(nx pi x/L) sin(ny pi y/L) with
1 <= nx, ny <= cutoff, flattened as ``(nx - 1) * cutoff + (ny - 1)``.
Elements use the physicists' ordering

    <ij|V|kl> = int phi_i(r1) phi_j(r2) |r1 - r2|^-1 phi_k(r1) phi_l(r2)

in effective Hartree units with L measured in effective Bohr radii.  They
scale as 1/L, so the tensor stores unit-box values.

Cache file layout (little-endian)::

    8 bytes   magic b"SQDCOUL\\0"
    4 bytes   uint32 header length H
    H bytes   UTF-8 JSON header {version, cutoff, order, panels, n_cos, hash,
              check_order, max_order_change, n_flagged}
    rest      float64 table T[p1, p2, q1, q2], C order, n_cos^4 values
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quadrature import cosine_moment_table, default_panels

log = logging.getLogger(__name__)

CACHE_VERSION = 1
MAGIC = b"SQDCOUL\0"
#: tolerance on the change of a moment between quadrature orders
CONVERGENCE_TOL = 1e-10
CHECK_ORDER_STEP = 4


def orbital_quantum_numbers(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(1, cutoff + 1)
    nx, ny = np.meshgrid(n, n, indexing="ij")
    return nx.ravel(), ny.ravel()


def orbital_index(nx: int, ny: int, cutoff: int) -> int:
    if not (1 <= nx <= cutoff and 1 <= ny <= cutoff):
        raise IndexError(f"orbital ({nx}, {ny}) outside cutoff {cutoff}")
    return (nx - 1) * cutoff + (ny - 1)


def tensor_key(cutoff: int, order: int, panels: int) -> str:
    blob = json.dumps({"version": CACHE_VERSION, "cutoff": cutoff, "order": order, "panels": panels}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class CoulombTensor:
    """Indexed store of unit-box Coulomb elements for one basis cutoff.

    Elements are assembled on demand from the cosine-moment table, which
    has ``(2 cutoff + 1)^4`` entries instead of ``cutoff^8``.
    """

    cutoff: int
    order: int
    panels: int
    table: np.ndarray
    max_order_change: float = 0.0
    n_flagged: int = 0
    from_cache: bool = False

    @property
    def n_orbitals(self) -> int:
        return self.cutoff * self.cutoff

    @property
    def converged(self) -> bool:
        return self.n_flagged == 0

    @classmethod
    def compute(cls, cutoff: int, order: int, panels: int | None = None, check: bool = True) -> CoulombTensor:
        """Evaluate the moment table, optionally re-evaluating at a higher order.

        Moments that move by more than ``CONVERGENCE_TOL`` between ``order``
        and ``order + 4`` are counted as flagged; the higher-order table is kept.
        """
        panels = default_panels(cutoff) if panels is None else panels
        n_cos = 2 * cutoff + 1
        table = cosine_moment_table(n_cos, order, panels)
        change, flagged = 0.0, 0
        if check:
            finer = cosine_moment_table(n_cos, order + CHECK_ORDER_STEP, panels)
            diff = np.abs(finer - table)
            change = float(diff.max())
            flagged = int(np.count_nonzero(diff > CONVERGENCE_TOL))
            table = finer
            if flagged:
                log.warning("%d Coulomb moments changed by more than %g between quadrature orders", flagged, CONVERGENCE_TOL)
        table.setflags(write=False)
        return cls(cutoff, order, panels, table, change, flagged)

    @property
    def key(self) -> str:
        return tensor_key(self.cutoff, self.order, self.panels)

    def elements(self, i, j, k, l) -> np.ndarray:
        """Vectorized unit-box <ij|V|kl> for broadcastable orbital index arrays."""
        nx, ny = orbital_quantum_numbers(self.cutoff)
        i, j, k, l = np.broadcast_arrays(*(np.asarray(a, dtype=np.intp) for a in (i, j, k, l)))
        # (difference, sum) cosine labels per axis for each electron's orbital pair
        x1 = (np.abs(nx[i] - nx[k]), nx[i] + nx[k])
        x2 = (np.abs(nx[j] - nx[l]), nx[j] + nx[l])
        y1 = (np.abs(ny[i] - ny[k]), ny[i] + ny[k])
        y2 = (np.abs(ny[j] - ny[l]), ny[j] + ny[l])
        flat = self.table.ravel()
        P = self.table.shape[0]
        # flat offset of T[p1, p2, q1, q2] splits into an x part and a y part
        xs = [((x1[a] * P + x2[b]) * P * P, (-1) ** (a + b)) for a in (0, 1) for b in (0, 1)]
        ys = [(y1[c] * P + y2[d], (-1) ** (c + d)) for c in (0, 1) for d in (0, 1)]
        out = np.zeros(i.shape)
        for xoff, xsign in xs:
            for yoff, ysign in ys:
                if xsign * ysign > 0:
                    out += np.take(flat, xoff + yoff)
                else:
                    out -= np.take(flat, xoff + yoff)
        return out

    def element(self, i: int, j: int, k: int, l: int) -> float:
        return float(self.elements(i, j, k, l))

    # -- cache -----------------------------------------------------------

    def header(self) -> dict:
        return {
            "version": CACHE_VERSION,
            "cutoff": self.cutoff,
            "order": self.order,
            "panels": self.panels,
            "n_cos": int(self.table.shape[0]),
            "hash": self.key,
            "check_order": self.order + CHECK_ORDER_STEP,
            "max_order_change": self.max_order_change,
            "n_flagged": self.n_flagged,
        }

    def save(self, path: str | Path) -> None:
        header = json.dumps(self.header(), sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.table, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> CoulombTensor:
        with open(path, "rb") as fh:
            if fh.read(len(MAGIC)) != MAGIC:
                raise ValueError(f"{path} is not a Coulomb tensor cache")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen))
            data = np.frombuffer(fh.read(), dtype="<f8")
        if header["version"] != CACHE_VERSION:
            raise ValueError(f"cache version {header['version']} is not supported")
        n = header["n_cos"]
        if data.size != n**4:
            raise ValueError(f"{path} is truncated")
        if header["hash"] != tensor_key(header["cutoff"], header["order"], header["panels"]):
            raise ValueError(f"{path} header hash does not match its parameters")
        table = data.reshape(n, n, n, n).astype(float)
        table.setflags(write=False)
        return cls(
            header["cutoff"],
            header["order"],
            header["panels"],
            table,
            header["max_order_change"],
            header["n_flagged"],
            from_cache=True,
        )


def cache_path(cache_dir: str | Path, cutoff: int, order: int, panels: int | None = None) -> Path:
    panels = default_panels(cutoff) if panels is None else panels
    return Path(cache_dir) / f"coulomb_{tensor_key(cutoff, order, panels)}.bin"


def load_or_compute(cutoff: int, order: int, cache_dir: str | Path | None = None) -> CoulombTensor:
    """Fetch the tensor from ``cache_dir`` if present, otherwise compute and store it."""
    if cache_dir is None:
        return CoulombTensor.compute(cutoff, order)
    path = cache_path(cache_dir, cutoff, order)
    if path.exists():
        try:
            return CoulombTensor.load(path)
        except (ValueError, KeyError, struct.error) as exc:
            log.warning("ignoring unreadable cache %s: %s", path, exc)
    tensor = CoulombTensor.compute(cutoff, order)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tensor.save(tmp)
    tmp.replace(path)
    return tensor
