"""Fiber integral of ω_ij ∧ ω_ik over the position of point i in R³.

The result is a 1-form on the positions of j and k.  Its six components are
estimated by Monte Carlo: x_i is drawn around x_j or x_k (probability ½ each)
at a half-Cauchy radius with scale |x_k - x_j|, whose density ``~ρ⁻²`` near
the anchors and ``~ρ⁻⁴`` at infinity bounds the weighted integrand.
"""
from __future__ import annotations

import numpy as np

from .domain import Estimate
from .errors import CoincidentPoints
from .forms import edge_one_forms
from .integrate import ChunkStats, _chunk_sizes, philox_stream

# tangent frame: x_i axes (fiber), then x_j axes, then x_k axes
_T = np.zeros((3, 9, 3))
for _p in range(3):
    for _a in range(3):
        _T[_p, 3 * _p + _a, _a] = 1.0


class AnchoredCauchy:
    """Equal mixture of half-Cauchy radial laws centred on fixed anchors."""

    def __init__(self, anchors, scale: float):
        self.anchors = np.asarray(anchors, dtype=float)
        self.scale = float(scale)

    def density(self, x: np.ndarray) -> np.ndarray:
        a = self.scale
        rho = np.linalg.norm(x[:, None, :] - self.anchors[None], axis=-1)
        return np.mean(a / (2 * np.pi ** 2 * rho ** 2 * (a * a + rho * rho)), axis=1)

    def draw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        pick = rng.integers(0, len(self.anchors), size=size)
        d = rng.standard_normal((size, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        rho = self.scale * np.tan(0.5 * np.pi * rng.random(size))
        return self.anchors[pick] + rho[:, None] * d


def fiber_integrand(xi: np.ndarray, xj, xk) -> np.ndarray:
    """(ω_ij∧ω_ik)(∂x_i¹, ∂x_i², ∂x_i³, b) for the six base directions b; shape (N, 6)."""
    N = len(xi)
    pos = np.stack([xi, np.broadcast_to(xj, xi.shape), np.broadcast_to(xk, xi.shape)], axis=1)
    T = np.broadcast_to(_T, (N,) + _T.shape)
    a1, b1 = edge_one_forms(pos, T, 0, 1)
    a2, b2 = edge_one_forms(pos, T, 0, 2)
    rows = np.stack([a1, b1, a2, b2], axis=1)          # (N, 4, 9)
    out = np.empty((N, 6))
    for c in range(6):
        out[:, c] = np.linalg.det(rows[:, :, [0, 1, 2, 3 + c]])
    return out


def kontsevich_residual(xj, xk, n_samples: int, seed: int = 0) -> list[tuple[float, float]]:
    """Six (value, std_error) pairs: components along x_j then x_k axes."""
    xj, xk = np.asarray(xj, dtype=float), np.asarray(xk, dtype=float)
    sep = float(np.linalg.norm(xk - xj))
    if sep == 0.0:
        raise CoincidentPoints("x_j and x_k coincide")
    law = AnchoredCauchy([xj, xk], sep)
    totals = [ChunkStats(0, 0.0, 0.0, 0) for _ in range(6)]
    for index, size in enumerate(_chunk_sizes(n_samples)):
        rng = philox_stream(seed, index)
        x = law.draw(size, rng)
        ok = np.minimum(np.linalg.norm(x - xj, axis=1), np.linalg.norm(x - xk, axis=1)) > 1e-9 * sep
        vals = fiber_integrand(x[ok], xj, xk) / law.density(x[ok])[:, None]
        for c in range(6):
            v = vals[:, c]
            m = float(v.mean())
            totals[c] = totals[c].merge(ChunkStats(len(v), m, float(np.sum((v - m) ** 2)),
                                                   int(np.count_nonzero(~ok))))
    return [(e.value, e.std_error) for e in (t.estimate(seed) for t in totals)]


def residual_estimates(xj, xk, n_samples: int, seed: int = 0) -> list[Estimate]:
    return [Estimate(v, s, n_samples, seed) for v, s in kontsevich_residual(xj, xk, n_samples, seed)]
