"""Cosine moments of the Coulomb kernel over the unit square.

Products of box eigenfunctions reduce, axis by axis, to cosines:
2 sin(n pi x) sin(m pi x) = cos((n-m) pi x) - cos((n+m) pi x).
Every Coulomb matrix element in the sine basis is therefore a signed sum of

    T[p1, p2, q1, q2] = int_{[0,1]^4} cos(p1 pi x1) cos(p2 pi x2)
                        cos(q1 pi y1) cos(q2 pi y2) / |r1 - r2|.

The x integral depends on x1 - x2 only through the kernel, so it folds to
one dimension, int_0^1 g_{p1 p2}(u) h(u) du, with g known in closed form.
The remaining 2-d integral over (u, w) = (|x1-x2|, |y1-y2|) has the 1/r
point singularity at the origin; splitting the square along its diagonal
and substituting w = u t (and u = w t) cancels it exactly (Duffy), leaving
smooth integrands that composite Gauss-Legendre handles to near machine
precision.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

NODE_CHUNK = 4096


def _cos_integral(c: np.ndarray, phase: np.ndarray, s: np.ndarray) -> np.ndarray:
    """int_0^s cos(c x + phase) dx, with c an exact multiple of pi (or 0)."""
    safe = np.where(c == 0, 1.0, c)
    general = (np.sin(c * s + phase) - np.sin(phase)) / safe
    return np.where(c == 0, s * np.cos(phase), general)


def fold_table(n_cos: int, u: np.ndarray) -> np.ndarray:
    """g_{p1 p2}(u) for p1, p2 < n_cos at separations ``u`` in [0, 1].

    g_{p1 p2}(u) = int_0^{1-u} [cos(a(x+u)) cos(b x) + cos(a x) cos(b(x+u))] dx
    with a = p1 pi, b = p2 pi.  Shape ``(n_cos * n_cos, len(u))``.
    """
    p = np.arange(n_cos) * math.pi
    a = p[:, None, None]
    b = p[None, :, None]
    uu = np.asarray(u, dtype=float)[None, None, :]
    s = 1.0 - uu
    first = _cos_integral(a + b, a * uu, s) + _cos_integral(a - b, a * uu, s)
    second = _cos_integral(a + b, b * uu, s) + _cos_integral(b - a, b * uu, s)
    return (0.5 * (first + second)).reshape(n_cos * n_cos, -1)


@lru_cache(maxsize=None)
def composite_gauss(order: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    widths = np.diff(edges)
    nodes = (edges[:-1, None] + widths[:, None] * 0.5 * (x[None, :] + 1.0)).ravel()
    weights = (widths[:, None] * 0.5 * w[None, :]).ravel()
    return nodes, weights


def default_panels(cutoff: int) -> int:
    return max(1, math.ceil(cutoff / 2))


def cosine_moment_table(n_cos: int, order: int, panels: int) -> np.ndarray:
    """The table T[p1, p2, q1, q2] for 0 <= p, q < ``n_cos``.

    Moments whose x (or y) cosine indices have odd sum vanish by reflection
    symmetry of the square and are set to exactly zero.
    """
    x, w = composite_gauss(order, panels)
    U, S = np.meshgrid(x, x, indexing="ij")
    u = U.ravel()
    t = S.ravel()
    weight = (np.outer(w, w) / np.sqrt(1.0 + S**2)).ravel()
    # triangle w <= u: (u, w) = (u, u t), Jacobian u cancels 1/r = 1/(u sqrt(1+t^2))
    m = np.zeros((n_cos * n_cos, n_cos * n_cos))
    for start in range(0, u.size, NODE_CHUNK):
        sl = slice(start, start + NODE_CHUNK)
        along = fold_table(n_cos, u[sl])
        across = fold_table(n_cos, u[sl] * t[sl])
        m += (along * weight[sl]) @ across.T
    # the triangle u <= w is the mirror image
    m = m + m.T
    T = m.reshape(n_cos, n_cos, n_cos, n_cos)
    p = np.arange(n_cos)
    odd = (p[:, None] + p[None, :]) % 2 == 1
    T[odd, :, :] = 0.0
    T[:, :, odd] = 0.0
    # exact particle-swap and x<->y symmetry
    T = 0.5 * (T + T.transpose(1, 0, 3, 2))
    T = 0.5 * (T + T.transpose(2, 3, 0, 1))
    return T
