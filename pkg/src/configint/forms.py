"""The normalised Gauss 2-form on pairs of points in R³ and its pullbacks.

For an edge ``(a, b)`` the form is ``(1/4π) u*(vol_S²)`` with
``u = (x_b - x_a)/|x_b - x_a|``.  On tangent vectors it evaluates to
``det[u, w1, w2] / (4π r²)`` where ``w = δx_b - δx_a``; hence every edge form
is decomposable, ``α ∧ β`` with ``α, β = (e1·w, e2·w)/(√(4π) r)`` for an
oriented orthonormal frame ``(e1, e2, u)``.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import CoincidentPoints, DimensionMismatch

FOUR_PI = 4.0 * np.pi

#: Separations at or below this count as coincident.
COINCIDENCE_TOL = 0.0


def unit_map(x, y) -> np.ndarray:
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(r <= COINCIDENCE_TOL):
        raise CoincidentPoints("unit map undefined on the diagonal")
    return d / r


def gauss_form_eval(x, y, v1, v2) -> float:
    """Gauss form at ``(x, y)`` on tangent vectors ``v = (δx, δy)`` of R³ × R³."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    u = unit_map(x, y)
    r2 = float(np.sum((y - x) ** 2))
    w1 = v1[3:] - v1[:3]
    w2 = v2[3:] - v2[:3]
    return float(np.dot(u, np.cross(w1, w2)) / (FOUR_PI * r2))


def frame(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``e1, e2`` with ``e1 × e2 = u`` (batched over leading axes)."""
    a = np.zeros_like(u)
    use_x = np.abs(u[..., 0]) < 0.9
    a[..., 0] = use_x
    a[..., 1] = ~use_x
    e1 = np.cross(a, u)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(u, e1)
    return e1, e2


# -- configurations ---------------------------------------------------------

def point_tangents(knot_tangents: np.ndarray, n_free: int) -> np.ndarray:
    """Displacement of every point per domain coordinate.

    ``knot_tangents`` has shape ``(N, n_knot, 3)``.  Returns ``(N, P, D, 3)`` with
    ``P = n_knot + n_free`` and ``D = n_knot + 3 n_free``; knot point ``i`` moves
    along its tangent in coordinate ``i``, free point ``j`` along the axes in
    coordinates ``n_knot + 3j .. n_knot + 3j + 2``.
    """
    N, n, _ = knot_tangents.shape
    P, D = n + n_free, n + 3 * n_free
    T = np.zeros((N, P, D, 3))
    idx = np.arange(n)
    T[:, idx, idx, :] = knot_tangents
    for j in range(n_free):
        for a in range(3):
            T[:, n + j, n + 3 * j + a, a] = 1.0
    return T


def edge_one_forms(positions: np.ndarray, T: np.ndarray, a: int, b: int):
    """1-forms ``(α, β)`` with ``ω_ab = α ∧ β``; points are 0-based here.

    ``positions`` is ``(N, P, 3)``; returns two ``(N, D)`` arrays.
    """
    d = positions[:, b] - positions[:, a]
    r = np.linalg.norm(d, axis=-1)
    if np.any(r <= COINCIDENCE_TOL):
        raise CoincidentPoints(f"points {a} and {b} coincide")
    u = d / r[:, None]
    e1, e2 = frame(u)
    W = T[:, b] - T[:, a]
    scale = 1.0 / (np.sqrt(FOUR_PI) * r)
    alpha = np.einsum("ndk,nk->nd", W, e1) * scale[:, None]
    beta = np.einsum("ndk,nk->nd", W, e2) * scale[:, None]
    return alpha, beta


def two_form_matrix(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return alpha[..., :, None] * beta[..., None, :] - beta[..., :, None] * alpha[..., None, :]


def _config_arrays(cfg, knot):
    s = np.atleast_1d(cfg.s)
    y = np.asarray(cfg.y, dtype=float).reshape(-1, 3)
    p, t = knot.eval(s) if len(s) else (np.zeros((0, 3)), np.zeros((0, 3)))
    positions = np.concatenate([p, y])[None]
    T = point_tangents(t[None], len(y))
    return positions, T


def edge_form_on_configuration(cfg, knot, edge) -> np.ndarray:
    """D×D coefficient matrix of the pulled-back Gauss form of ``edge`` (1-based)."""
    positions, T = _config_arrays(cfg, knot)
    al, be = edge_one_forms(positions, T, edge[0] - 1, edge[1] - 1)
    return two_form_matrix(al, be)[0]


def cyclic_sum_form(cfg, knot, i, j, k) -> np.ndarray:
    """``ω_ij + ω_jk + ω_ki`` as a D×D matrix (1-based point labels)."""
    out = 0.0
    for a, b in ((i, j), (j, k), (k, i)):
        if a < b:
            out = out + edge_form_on_configuration(cfg, knot, (a, b))
        else:
            out = out - edge_form_on_configuration(cfg, knot, (b, a))
    return out


# -- top-degree products ----------------------------------------------------

@lru_cache(maxsize=64)
def _pair_assignments(k: int, support: tuple | None):
    """Signed terms of ω¹∧…∧ωᵏ on e_1..e_2k as (sign, ((m, a, b), ...)).

    The lowest unused coordinate is paired with a later one and handed to an
    unused factor; the sign is the Pfaffian crossing sign of the matching.
    ``support[m]`` optionally lists the coordinate pairs where factor m can be
    nonzero, which prunes the expansion.
    """
    D = 2 * k
    allowed = None if support is None else [set(s) for s in support]
    terms = []

    def rec(free, factors, sign, acc):
        if not free:
            terms.append((sign, tuple(acc)))
            return
        a = free[0]
        for pos in range(1, len(free)):
            b = free[pos]
            s2 = sign if (pos - 1) % 2 == 0 else -sign
            rest = free[1:pos] + free[pos + 1:]
            for m in factors:
                if allowed is not None and (a, b) not in allowed[m]:
                    continue
                acc.append((m, a, b))
                rec(rest, tuple(f for f in factors if f != m), s2, acc)
                acc.pop()

    rec(tuple(range(D)), tuple(range(k)), 1, [])
    return terms


def wedge_top_evaluate(forms) -> np.ndarray | float:
    """Value of ω¹∧…∧ωᵏ on the ordered standard basis of R^{2k}.

    ``forms`` is a sequence of k antisymmetric ``(..., D, D)`` arrays with D = 2k.
    """
    mats = [np.asarray(f, dtype=float) for f in forms]
    k = len(mats)
    if k == 0:
        return 1.0
    D = mats[0].shape[-1]
    if any(m.shape[-2:] != (D, D) for m in mats) or D != 2 * k:
        raise DimensionMismatch(f"need {k} forms of size {2 * k}x{2 * k}")
    support = tuple(
        tuple((a, b) for a in range(D) for b in range(a + 1, D)
              if np.any(m[..., a, b] != 0))
        for m in mats)
    total = np.zeros(mats[0].shape[:-2])
    for sign, picks in _pair_assignments(k, support):
        prod = sign * np.ones_like(total)
        for m, a, b in picks:
            prod = prod * mats[m][..., a, b]
        total = total + prod
    return total if total.ndim else float(total)


def wedge_decomposable(alphas, betas) -> np.ndarray:
    """∧_m (α_m ∧ β_m) on the standard basis: a single determinant."""
    rows = []
    for al, be in zip(alphas, betas):
        rows.extend([al, be])
    M = np.stack(rows, axis=-2)
    if M.shape[-1] != M.shape[-2]:
        raise DimensionMismatch(f"{M.shape[-2]} one-forms on a {M.shape[-1]}-dim space")
    return np.linalg.det(M)


def wedge_permutation_oracle(forms) -> float:
    """Full antisymmetrisation over S_{2k}; exponential, for testing only."""
    mats = [np.asarray(f, dtype=float) for f in forms]
    k = len(mats)
    D = 2 * k
    total = 0.0
    for perm in itertools.permutations(range(D)):
        inv = sum(1 for i in range(D) for j in range(i + 1, D) if perm[i] > perm[j])
        prod = 1.0
        for m in range(k):
            prod *= mats[m][perm[2 * m], perm[2 * m + 1]]
        total += (-1) ** inv * prod
    return total / 2 ** k
