"""The vacuum integral B_Γ over configurations of n + 2 points in R³.

Points are labelled 0, 1..n and ∞ (stored last).  The integrand
``ω_{0∞} ∧ ∏_{(ij)∈E} ω_{ij0}``, with ``ω_{ij0} = ω_ij + ω_j0 + ω_0i``, is
invariant under translations and scalings, so it is integrated over the slice
``{Σ x_p = 0, Σ |x_p|² = 1}``: a round sphere of dimension 3n + 2 in the
centroid-free subspace.  Each factor is a sum of three decomposable forms, so
the product expands into determinants of stacked 1-forms.

In flat R³ this integrand vanishes identically: ∏ ω_{ij0} only involves the
points 0..n and is basic for their translations and dilations, a quotient of
dimension 3n - 1 carrying a 3n-form.  The same holds for every term of the
expansion separately.  Arbitrary products of pair forms can be
evaluated too (``PairProduct``), which gives the parity check something
non-degenerate to bite on.
"""
from __future__ import annotations

import itertools
from math import gamma, pi

import numpy as np

from .domain import Estimate
from .errors import DegreeMismatch, NotTrivalent
from .forms import edge_one_forms
from .graphs import LabeledGraph, is_trivalent
from .integrate import ChunkStats, _chunk_sizes, philox_stream


def _centroid_free_basis(P: int) -> np.ndarray:
    """Orthonormal basis (columns) of {v ∈ R^{3P}: Σ_p v_p = 0}, fixed once and for all."""
    H = np.zeros((P, P - 1))
    for k in range(1, P):
        H[:k, k - 1] = 1.0
        H[k, k - 1] = -k
        H[:, k - 1] /= np.sqrt(k * (k + 1))
    return np.kron(H, np.eye(3))


def slice_frame(x: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Oriented orthonormal tangent frames of the slice at ``x`` (N, 3P) → (N, 3P, d).

    Orientation: (outward normal, frame) is positive with respect to ``Q``.
    """
    xi = x @ Q                                   # (N, m) unit vectors
    N, m = xi.shape
    e1 = np.zeros(m)
    e1[0] = 1.0
    w = e1 - xi
    nw = np.linalg.norm(w, axis=1, keepdims=True)
    w = np.where(nw > 1e-12, w / np.where(nw > 0, nw, 1), 0.0)
    Hm = np.eye(m)[None] - 2 * w[:, :, None] * w[:, None, :]   # reflection, e1 ↦ ξ
    tang = Hm[:, :, 1:].copy()
    # a reflection reverses orientation; flip one vector (none when ξ = e1)
    flip = np.where(nw[:, 0] > 1e-12, -1.0, 1.0)
    tang[:, :, 0] *= flip[:, None]
    return np.einsum("am,nmk->nak", Q, tang)


def _pieces(edge):
    """ω_ij + ω_j0 + ω_0i as (sign, a, b) with a < b."""
    i, j = edge
    return [(1, i, j), (-1, 0, j), (1, 0, i)]


def _terms(g: LabeledGraph):
    """Signed choices of one piece per edge, dropping repeated point pairs."""
    out = []
    for choice in itertools.product(*(_pieces(e) for e in g.edges)):
        pairs = [(a, b) for _, a, b in choice]
        if len(set(pairs)) < len(pairs):
            continue
        out.append((int(np.prod([s for s, _, _ in choice])), pairs))
    return out


class PairProduct:
    """Signed sum of products of pair forms ω_ab on the slice of P points in R³.

    ``terms`` is a list of ``(sign, [(a, b), ...])`` with 0-based points.
    """

    def __init__(self, P: int, terms):
        self.P = P
        self.dim = 3 * P - 4
        self.terms = [(s, list(pairs)) for s, pairs in terms]
        for _, pairs in self.terms:
            if 2 * len(pairs) != self.dim:
                raise DegreeMismatch("integrand degree does not match the slice dimension")
        self.Q = _centroid_free_basis(P)

    def on_frames(self, x: np.ndarray, frames: np.ndarray) -> np.ndarray:
        """Integrand at points ``x`` (N, 3P) on tangent frames (N, 3P, d)."""
        N = len(x)
        pos = x.reshape(N, self.P, 3)
        T = frames.reshape(N, self.P, 3, self.dim).transpose(0, 1, 3, 2)   # (N, P, d, 3)
        cache = {}

        def one_forms(a, b):
            if (a, b) not in cache:
                cache[(a, b)] = edge_one_forms(pos, T, a, b)
            return cache[(a, b)]

        total = np.zeros(N)
        for sign, pairs in self.terms:
            rows = []
            for a, b in pairs:
                rows.extend(one_forms(a, b))
            total += sign * np.linalg.det(np.stack(rows, axis=1))
        return total

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.on_frames(x, slice_frame(x, self.Q))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points on the slice sphere."""
        z = rng.standard_normal((size, self.Q.shape[1]))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return z @ self.Q.T

    @property
    def slice_volume(self) -> float:
        d = self.dim
        return 2 * pi ** ((d + 1) / 2) / gamma((d + 1) / 2)

    def parity_sign(self) -> int:
        """Expected ratio f(-x)/f(x): form parity times the antipodal degree of the slice."""
        k = self.dim // 2
        return (-1) ** (k + self.dim + 1)


class VacuumIntegrand(PairProduct):
    """ω_{0∞} ∧ ∏ ω_{ij0} for a trivalent closed graph; ∞ is the last point."""

    def __init__(self, g: LabeledGraph):
        if not is_trivalent(g):
            raise NotTrivalent("B_Γ needs a trivalent closed graph")
        self.g = g
        self.n = g.n_vertices
        inf = self.n + 1
        super().__init__(self.n + 2, [(s, [(0, inf)] + pairs) for s, pairs in _terms(g)])


def b_gamma_estimate(g: LabeledGraph, n_samples: int, seed: int = 0) -> Estimate:
    """Monte-Carlo B_Γ with uniform sampling of the slice sphere."""
    f = VacuumIntegrand(g)
    vol = f.slice_volume
    total = ChunkStats(0, 0.0, 0.0, 0)
    for index, size in enumerate(_chunk_sizes(n_samples)):
        rng = philox_stream(seed, index)
        v = vol * f(f.sample(size, rng))
        m = float(v.mean())
        total = total.merge(ChunkStats(len(v), m, float(np.sum((v - m) ** 2)), 0))
    est = total.estimate(seed)
    return est


def parity_check(g, n_configs: int = 1000, seed: int = 0, rtol: float = 1e-8):
    """Compare f(-x) with parity_sign·f(x) at random slice points.

    ``g`` is a closed graph or a ``PairProduct``.  Returns
    ``(passed, max_abs_deviation, max_abs_value)``.
    """
    f = g if isinstance(g, PairProduct) else VacuumIntegrand(g)
    x = f.sample(n_configs, philox_stream(seed, 0))
    a, b = f(x), f(-x)
    dev = np.abs(b - f.parity_sign() * a)
    scale = np.maximum(np.abs(a), 1e-300)
    ok = bool(np.all(dev <= rtol * scale + 1e-12))
    return ok, float(dev.max()), float(np.abs(a).max())
