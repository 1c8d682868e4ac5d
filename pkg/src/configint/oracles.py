"""Combinatorial checks from planar projections: Gauss codes, v₂, linking, writhe.

Curves are replaced by fine polylines and projected along a direction ``d``;
the viewer sits at ``+∞·d``.  A crossing is positive when
``(over tangent × under tangent) · d > 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Curve
from .domain import Estimate
from .errors import DegenerateProjection, MalformedCode

RETRY_BUDGET = 16
JITTER = 1e-3


@dataclass(frozen=True)
class Crossing:
    label: int
    over: bool
    sign: int


@dataclass(frozen=True)
class GaussCode:
    """Crossing passages in the order met along the curve from s = 0."""

    entries: tuple

    def __post_init__(self):
        seen: dict[int, list[Crossing]] = {}
        for e in self.entries:
            seen.setdefault(e.label, []).append(e)
        for label, occ in seen.items():
            if len(occ) != 2:
                raise MalformedCode(f"crossing {label} appears {len(occ)} times")
            if occ[0].over == occ[1].over:
                raise MalformedCode(f"crossing {label} needs one over and one under passage")
            if occ[0].sign != occ[1].sign or occ[0].sign not in (1, -1):
                raise MalformedCode(f"crossing {label} has inconsistent signs")

    @classmethod
    def parse(cls, text: str) -> "GaussCode":
        """From tokens like ``O1+ U2+ O3+ U1+ O2+ U3+``."""
        out = []
        for tok in text.split():
            if len(tok) < 3 or tok[0] not in "OU" or tok[-1] not in "+-":
                raise MalformedCode(f"bad token {tok!r}")
            try:
                label = int(tok[1:-1])
            except ValueError as exc:
                raise MalformedCode(f"bad token {tok!r}") from exc
            out.append(Crossing(label, tok[0] == "O", 1 if tok[-1] == "+" else -1))
        return cls(tuple(out))

    def __str__(self):
        return " ".join(f"{'O' if e.over else 'U'}{e.label}{'+' if e.sign > 0 else '-'}"
                        for e in self.entries)

    def __len__(self):
        return len(self.entries) // 2

    @property
    def writhe(self) -> int:
        return sum(e.sign for e in self.entries) // 2


def pv_v2(gc: GaussCode) -> int:
    """Degree-2 invariant by the arrow-diagram count.

    Sums ε_a ε_b over pairs of interleaved crossings a, b (met as a … b … a … b
    from the base point) where the first passage through a is under and the
    first passage through b is over.
    """
    if not isinstance(gc, GaussCode):
        raise MalformedCode("expected a GaussCode")
    first: dict[int, int] = {}
    second: dict[int, int] = {}
    info: dict[int, Crossing] = {}
    for pos, e in enumerate(gc.entries):
        if e.label in first:
            second[e.label] = pos
        else:
            first[e.label] = pos
            info[e.label] = e
    total = 0
    labels = sorted(first, key=first.get)
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            if first[a] < first[b] < second[a] < second[b]:
                if not info[a].over and info[b].over:
                    total += info[a].sign * info[b].sign
    return total


# -- projection geometry --------------------------------------------------------

def _basis(direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    a = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, d)
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(d, e1), d])


def _segment_crossings(P, Q, pairs):
    """Proper 2D intersections between segments P[i]→P[i+1] and Q[j]→Q[j+1].

    ``P, Q`` are closed polylines of shape (M, 2); returns the pair subset and
    the fractional positions along each segment.
    """
    i, j = pairs
    a0, a1 = P[i], P[(i + 1) % len(P)]
    b0, b1 = Q[j], Q[(j + 1) % len(Q)]
    r, s = a1 - a0, b1 - b0
    denom = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    w = b0 - a0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * s[:, 1] - w[:, 1] * s[:, 0]) / denom
        u = (w[:, 0] * r[:, 1] - w[:, 1] * r[:, 0]) / denom
    hit = (denom != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    return i[hit], j[hit], t[hit], u[hit]


def _crossings(c1: Curve, c2: Curve | None, direction, m: int):
    """(s1, s2, sign, over1, depth gap, |cos| of the crossing angle) per projected crossing."""
    B = _basis(direction)
    s = np.arange(m) * (2 * np.pi / m)
    p1, t1 = c1.eval(s)
    p2, t2 = (p1, t1) if c2 is None else c2.eval(s)
    q1, q2 = p1 @ B.T, p2 @ B.T
    if c2 is None:
        i, j = np.triu_indices(m, 2)
        keep = ~((i == 0) & (j == m - 1))
        pairs = (i[keep], j[keep])
    else:
        pairs = tuple(a.ravel() for a in np.meshgrid(np.arange(m), np.arange(m), indexing="ij"))
    i, j, a, b = _segment_crossings(q1[:, :2], q2[:, :2], pairs)
    h = 2 * np.pi / m
    s1, s2 = (i + a) * h, (j + b) * h
    x1, d1 = c1.eval(s1)
    x2, d2 = (c1 if c2 is None else c2).eval(s2)
    height = (x1 - x2) @ B[2]
    over1 = height > 0
    n = np.cross(d1, d2) @ B[2]
    sign = np.where(over1, np.sign(n), -np.sign(n)).astype(int)
    # genericity diagnostics: separation in depth and crossing angle in the plane
    pd1, pd2 = d1 @ B[:2].T, d2 @ B[:2].T
    cos = np.abs(np.sum(pd1 * pd2, axis=1)) / (np.linalg.norm(pd1, axis=1) * np.linalg.norm(pd2, axis=1))
    return s1, s2, sign, over1, np.abs(height), cos


def _generic(height, cos, params, scale) -> bool:
    if len(height) == 0:
        return True
    if np.min(height) < 1e-6 * scale or np.max(cos) > 1 - 1e-8:
        return False
    p = np.sort(np.mod(params, 2 * np.pi))
    gaps = np.diff(np.concatenate([p, p[:1] + 2 * np.pi]))
    return bool(np.min(gaps) > 1e-9)


def _jittered(direction, attempt: int, rng):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if attempt == 0:
        return d
    d = d + JITTER * rng.standard_normal(3)
    return d / np.linalg.norm(d)


def project_gauss_code(c: Curve, direction=(0.0, 0.0, 1.0), m: int = 2048) -> GaussCode:
    rng = np.random.default_rng(12345)
    for attempt in range(RETRY_BUDGET):
        d = _jittered(direction, attempt, rng)
        s1, s2, sign, over1, height, cos = _crossings(c, None, d, m)
        if not _generic(height, cos, np.concatenate([s1, s2]), c.diameter):
            continue
        events = []
        for k in range(len(s1)):
            events.append((s1[k], Crossing(k, bool(over1[k]), int(sign[k]))))
            events.append((s2[k], Crossing(k, not over1[k], int(sign[k]))))
        events.sort(key=lambda e: e[0])
        # relabel by order of first appearance
        relabel: dict[int, int] = {}
        out = []
        for _, e in events:
            relabel.setdefault(e.label, len(relabel) + 1)
            out.append(Crossing(relabel[e.label], e.over, e.sign))
        return GaussCode(tuple(out))
    raise DegenerateProjection(f"no generic projection near {tuple(direction)} "
                               f"after {RETRY_BUDGET} attempts")


def crossing_linking(c1: Curve, c2: Curve, direction=(0.3, 0.5, 0.8), m: int = 1024) -> int:
    """Half the signed count of crossings between the two projected curves."""
    rng = np.random.default_rng(54321)
    scale = max(c1.diameter, c2.diameter)
    for attempt in range(RETRY_BUDGET):
        d = _jittered(direction, attempt, rng)
        s1, s2, sign, _, height, cos = _crossings(c1, c2, d, m)
        if len(height) and (np.min(height) < 1e-6 * scale or np.max(cos) > 1 - 1e-8):
            continue
        total = int(np.sum(sign))
        if total % 2:
            continue
        return total // 2
    raise DegenerateProjection("no generic projection found")


def writhe_oracle(c: Curve, n_directions: int = 10000, seed: int = 0, m: int = 512) -> Estimate:
    """Mean signed crossing number over uniformly random projection directions."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_directions, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    _, P, _ = c.sample(m)
    i, j = np.triu_indices(m, 2)
    keep = ~((i == 0) & (j == m - 1))
    i, j = i[keep], j[keep]
    a0, r = P[i], P[(i + 1) % m] - P[i]
    b0, q = P[j], P[(j + 1) % m] - P[j]
    w = b0 - a0
    # segments i, j can only overlap in projection along d if d lies in the cone
    # of directions between them: |d·ŵ| ≥ cos of the half-angle they subtend
    wn = np.linalg.norm(w, axis=1)
    what = w / wn[:, None]
    reach = np.linalg.norm(r, axis=1) + np.linalg.norm(q, axis=1)
    cone = np.sqrt(np.clip(1 - (reach / wn) ** 2, 0, 1)) * (reach < wn)
    vals = np.empty(n_directions)
    for k, d in enumerate(dirs):
        cand = np.nonzero(np.abs(what @ d) >= cone)[0]
        B = _basis(d)[:2]
        r2, q2, w2 = r[cand] @ B.T, q[cand] @ B.T, w[cand] @ B.T
        den = r2[:, 0] * q2[:, 1] - r2[:, 1] * q2[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w2[:, 0] * q2[:, 1] - w2[:, 1] * q2[:, 0]) / den
            u = (w2[:, 0] * r2[:, 1] - w2[:, 1] * r2[:, 0]) / den
        hit = (den != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
        ci = cand[hit]
        height = (a0[ci] + t[hit, None] * r[ci] - b0[ci] - u[hit, None] * q[ci]) @ d
        n = np.cross(r[ci], q[ci]) @ d
        vals[k] = np.sum(np.sign(height) * np.sign(n))
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_directions)),
                    n_directions, seed)
