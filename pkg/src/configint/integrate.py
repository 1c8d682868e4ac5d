"""Integration of edge-form products over configurations of points on a knot.

Knot parameters are drawn from a mixture of the uniform law on the cyclic-order
cell and a close-pair law: ``n - 1`` uniform points plus one placed at offset
``δ`` from a random one of them, ``|δ| = π U²``, so that ``δ`` has density
``1 / (4 √(π |δ|))`` on ``(-π, π]``.  This puts enough mass on the collapse of
two knot points, where the integrand of a graph with free points blows up.
Free points
come from a mixture: with probability ``1 - tail_mass`` uniform in the curve's
bounding box inflated by ``box_inflation``, otherwise placed around an anchor
(a knot point of the same sample, or an earlier free point) at a half-Cauchy
radius in a uniform direction.  For scale ``a`` the radial law has 3D density
``a / (2π² ρ² (a² + ρ²))``, which cancels the ``ρ⁻²`` singularity of an edge
form and decays as ``ρ⁻⁴`` against the ``ρ⁻⁶`` integrand tail; a few scales
are mixed so that every distance band near the knot gets samples.

Monte-Carlo runs are split into fixed-size chunks; chunk ``c`` draws from
``Philox(seed)`` jumped ``c`` times, and chunk statistics are merged in chunk
order, so results do not depend on how many workers shared the work.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .curves import TWO_PI, Curve, curve_distance
from .domain import ConfigBatch, ConfigDomain, Configuration, Estimate
from .errors import (CoincidentPoints, CurvesIntersect, DegreeMismatch, NotChordDiagram,
                     SizeLimit)
from .forms import FOUR_PI, edge_one_forms, point_tangents
from .graphs import KnotGraph

CHUNK = 8192


@dataclass(frozen=True)
class SamplerSettings:
    tail_mass: float = 0.9
    pair_mass: float = 0.3
    box_inflation: float = 3.0
    tail_scales: tuple = (0.02, 0.1)   # half-Cauchy scales, fractions of the curve diameter
    reject_cutoff: float = 1e-9

    def __post_init__(self):
        if not (0.0 <= self.tail_mass <= 1.0 and 0.0 <= self.pair_mass <= 1.0):
            raise ValueError("mixture masses must lie in [0, 1]")
        if self.box_inflation < 1.0 or min(self.tail_scales) <= 0 or self.reject_cutoff < 0:
            raise ValueError("invalid sampler settings")


DEFAULT_SAMPLER = SamplerSettings()


def philox_stream(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for chunk ``index`` of substream ``stream``."""
    key = np.random.SeedSequence([seed, stream]) if stream else seed
    return np.random.Generator(np.random.Philox(key).jumped(index))


# -- sampling ----------------------------------------------------------------

def sample_cyclic(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``(size, n)`` parameters in cyclic order starting anywhere on the circle."""
    if n == 0:
        return np.zeros((size, 0))
    start = rng.uniform(0.0, TWO_PI, size=(size, 1))
    gaps = np.sort(rng.uniform(0.0, TWO_PI, size=(size, n - 1)), axis=1)
    return np.mod(np.concatenate([start, start + gaps], axis=1), TWO_PI)


def _pair_offset_density(delta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 1.0 / (4.0 * np.sqrt(np.pi * np.abs(delta)))


def knot_density(s: np.ndarray, pair_mass: float) -> np.ndarray:
    """Density of the knot-parameter mixture at cyclically ordered ``s`` (N, n)."""
    N, n = s.shape
    uniform = np.full(N, factorial(n - 1) / TWO_PI ** n) if n else np.ones(N)
    if n < 2 or pair_mass == 0.0:
        return uniform
    i, j = np.triu_indices(n, 1)
    delta = np.mod(s[:, j] - s[:, i] + np.pi, TWO_PI) - np.pi
    pair = 2 * _pair_offset_density(delta).sum(axis=1) * factorial(n - 2) / TWO_PI ** (n - 1) / n
    return (1 - pair_mass) * uniform + pair_mass * pair


def sample_knot_params(n: int, size: int, rng: np.random.Generator, pair_mass: float):
    """Cyclically ordered parameters from the uniform ⊕ close-pair mixture."""
    s = sample_cyclic(n, size, rng)
    if n < 2 or pair_mass == 0.0:
        return s
    use_pair = rng.random(size) < pair_mass
    base = sample_cyclic(n - 1, size, rng)
    q = base[np.arange(size), rng.integers(0, n - 1, size=size)]
    delta = np.pi * rng.random(size) ** 2 * rng.choice([-1.0, 1.0], size=size)
    t = np.sort(np.mod(np.concatenate([base, (q + delta)[:, None]], axis=1), TWO_PI), axis=1)
    t = np.take_along_axis(t, (np.arange(n)[None] + rng.integers(0, n, size=(size, 1))) % n, axis=1)
    return np.where(use_pair[:, None], t, s)


class FreePointLaw:
    """Box ⊕ anchored half-Cauchy mixture for one free point."""

    def __init__(self, knot: Curve, settings: SamplerSettings = DEFAULT_SAMPLER):
        lo, hi = knot.bbox
        centre, half = (lo + hi) / 2, (hi - lo) / 2
        half = np.maximum(half, 1e-3 * knot.diameter)
        self.lo = centre - settings.box_inflation * half
        self.hi = centre + settings.box_inflation * half
        self.box_volume = float(np.prod(self.hi - self.lo))
        self.scales = np.asarray(settings.tail_scales, dtype=float) * knot.diameter
        self.tail_mass = settings.tail_mass

    def radial_density(self, rho):
        """3D density of the anchored law at distance ``rho``, averaged over scales."""
        a = self.scales.reshape((-1,) + (1,) * np.ndim(rho))
        return np.mean(a / (2 * np.pi ** 2 * rho ** 2 * (a * a + rho * rho)), axis=0)

    def density(self, y: np.ndarray, anchors: np.ndarray) -> np.ndarray:
        """Mixture density at ``y`` (N, 3) given anchors (N, m, 3)."""
        inside = np.all((y >= self.lo) & (y <= self.hi), axis=-1)
        box = inside / self.box_volume
        if anchors.shape[1] == 0:
            return box
        rho = np.linalg.norm(y[:, None, :] - anchors, axis=-1)
        with np.errstate(divide="ignore"):
            tail = self.radial_density(rho).mean(axis=1)
        return (1 - self.tail_mass) * box + self.tail_mass * tail

    def draw(self, anchors: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        N, m, _ = anchors.shape
        y = rng.uniform(self.lo, self.hi, size=(N, 3))
        if m == 0:
            return y
        use_tail = rng.random(N) < self.tail_mass
        pick = rng.integers(0, m, size=N)
        d = rng.standard_normal((N, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        a = self.scales[rng.integers(0, len(self.scales), size=N)]
        rho = a * np.tan(0.5 * np.pi * rng.random(N))
        near = anchors[np.arange(N), pick] + rho[:, None] * d
        return np.where(use_tail[:, None], near, y)


def _positions(knot: Curve, s: np.ndarray, y: np.ndarray):
    if s.shape[1]:
        p, t = knot.eval(s)
    else:
        p = t = np.zeros((len(s), 0, 3))
    return np.concatenate([p, y], axis=1), t


def _min_separation(pos: np.ndarray) -> np.ndarray:
    P = pos.shape[1]
    if P < 2:
        return np.full(len(pos), np.inf)
    i, j = np.triu_indices(P, 1)
    return np.linalg.norm(pos[:, j] - pos[:, i], axis=-1).min(axis=1)


def sample_batch(domain: ConfigDomain, knot: Curve, size: int, rng: np.random.Generator,
                 settings: SamplerSettings = DEFAULT_SAMPLER, law: FreePointLaw | None = None
                 ) -> ConfigBatch:
    """``size`` accepted configurations; near-coincident draws are redrawn and counted."""
    law = law or (FreePointLaw(knot, settings) if domain.n_free else None)
    parts, rejected, have = [], 0, 0
    while have < size:
        need = size - have
        s = sample_knot_params(domain.n_knot, need, rng, settings.pair_mass)
        density = knot_density(s, settings.pair_mass)
        anchors = knot.eval(s)[0] if domain.n_knot else np.zeros((need, 0, 3))
        ys = []
        for _ in range(domain.n_free):
            if anchors.shape[1] == 0:
                anchors = np.broadcast_to((law.lo + law.hi) / 2, (need, 1, 3))
            yj = law.draw(anchors, rng)
            density = density * law.density(yj, anchors)
            ys.append(yj)
            anchors = np.concatenate([anchors, yj[:, None, :]], axis=1)
        y = np.stack(ys, axis=1) if ys else np.zeros((need, 0, 3))
        pos, _ = _positions(knot, s, y)
        ok = _min_separation(pos) > settings.reject_cutoff
        rejected += int(np.count_nonzero(~ok))
        parts.append((s[ok], y[ok], 1.0 / density[ok]))
        have += int(np.count_nonzero(ok))
    s, y, w = (np.concatenate(a) for a in zip(*parts))
    return ConfigBatch(s[:size], y[:size], w[:size], rejected)


def sample_configuration(domain: ConfigDomain, knot: Curve, rng: np.random.Generator,
                         settings: SamplerSettings = DEFAULT_SAMPLER) -> Configuration:
    return sample_batch(domain, knot, 1, rng, settings)[0]


# -- integrands ----------------------------------------------------------------

def graph_domain(g: KnotGraph) -> ConfigDomain:
    d = ConfigDomain(g.n_ext, g.n_int)
    if 2 * len(g.internal_edges) != d.dim:
        raise DegreeMismatch(f"{len(g.internal_edges)} edge forms on a {d.dim}-dim domain")
    return d


def integrand_batch(g: KnotGraph, knot: Curve, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """∧ of the internal-edge forms on the coordinate basis, per configuration."""
    graph_domain(g)
    s = np.atleast_2d(s)
    y = np.asarray(y, dtype=float).reshape(len(s), -1, 3)
    if len(set(g.internal_edges)) < len(g.internal_edges):
        return np.zeros(len(s))      # a repeated edge form wedges to zero
    pos, tan = _positions(knot, s, y)
    T = point_tangents(tan, y.shape[1])
    rows = []
    for a, b in g.internal_edges:
        al, be = edge_one_forms(pos, T, a - 1, b - 1)
        rows.extend([al, be])
    return np.linalg.det(np.stack(rows, axis=1))


def integrand_value(g: KnotGraph, knot: Curve, cfg: Configuration) -> float:
    if cfg.domain != graph_domain(g):
        raise DegreeMismatch("configuration does not match the graph's point counts")
    pos, _ = _positions(knot, cfg.s[None], np.asarray(cfg.y, dtype=float).reshape(1, -1, 3))
    if _min_separation(pos)[0] == 0.0:
        raise CoincidentPoints("configuration has a repeated point")
    return float(integrand_batch(g, knot, cfg.s[None], cfg.y[None])[0])


# -- Monte Carlo -------------------------------------------------------------

@dataclass
class ChunkStats:
    n: int
    mean: float
    m2: float
    rejected: int

    def merge(self, other: "ChunkStats") -> "ChunkStats":
        n = self.n + other.n
        if n == 0:
            return ChunkStats(0, 0.0, 0.0, self.rejected + other.rejected)
        d = other.mean - self.mean
        mean = self.mean + d * other.n / n
        m2 = self.m2 + other.m2 + d * d * self.n * other.n / n
        return ChunkStats(n, mean, m2, self.rejected + other.rejected)

    def estimate(self, seed) -> Estimate:
        var = self.m2 / (self.n - 1) if self.n > 1 else 0.0
        total = self.n + self.rejected
        return Estimate(self.mean, float(np.sqrt(var / self.n)) if self.n else 0.0, self.n, seed,
                        self.rejected / total if total else 0.0)


def _stats(values: np.ndarray, rejected: int) -> ChunkStats:
    n = len(values)
    mean = float(np.mean(values)) if n else 0.0
    return ChunkStats(n, mean, float(np.sum((values - mean) ** 2)), rejected)


class GraphSampler:
    """Weighted integrand samples for one graph; picklable for worker processes."""

    def __init__(self, g: KnotGraph, knot: Curve, settings: SamplerSettings = DEFAULT_SAMPLER):
        self.g, self.knot, self.settings = g, knot, settings
        self.domain = graph_domain(g)
        self.law = FreePointLaw(knot, settings) if self.domain.n_free else None

    def __call__(self, size: int, rng: np.random.Generator):
        b = sample_batch(self.domain, self.knot, size, rng, self.settings, self.law)
        return integrand_batch(self.g, self.knot, b.s, b.y) * b.weight, b.rejected


def _chunk_sizes(n_samples: int) -> list[int]:
    full, rest = divmod(n_samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _run_chunks(sampler, seed: int, jobs: list[tuple[int, int]], stream: int = 0
                ) -> list[ChunkStats]:
    out = []
    for index, size in jobs:
        vals, rej = sampler(size, philox_stream(seed, index, stream))
        out.append(_stats(vals, rej))
    return out


def run_chunked(sampler, n_samples: int, seed: int, workers: int = 1,
                checkpoints: bool = False, stream: int = 0):
    """Merge chunk statistics in chunk order; optionally with running checkpoints."""
    if n_samples < 1 or workers < 1:
        raise ValueError("n_samples and workers must be positive")
    jobs = list(enumerate(_chunk_sizes(n_samples)))
    t0 = time.perf_counter()
    if workers == 1 or len(jobs) == 1:
        stats = _run_chunks(sampler, seed, jobs, stream)
    else:
        split = [jobs[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunks, [sampler] * workers, [seed] * workers, split,
                                [stream] * workers))
        by_index = {}
        for part, js in zip(parts, split):
            for st, (index, _) in zip(part, js):
                by_index[index] = st
        stats = [by_index[i] for i, _ in jobs]
    wall_ms = (time.perf_counter() - t0) * 1e3
    total = ChunkStats(0, 0.0, 0.0, 0)
    rows = []
    for k, st in enumerate(stats, start=1):
        total = total.merge(st)
        if checkpoints and (k & (k - 1) == 0 or k == len(stats)):
            e = total.estimate(seed)
            rows.append({"n_samples": e.n_samples, "value": e.value, "std_error": e.std_error,
                         "rejection_rate": e.rejection_rate})
    est = total.estimate(seed)
    est.meta["wall_time_ms"] = wall_ms
    if checkpoints:
        est.meta["convergence"] = rows
    return est


def mc_estimate(g: KnotGraph, knot: Curve, n_samples: int, seed: int = 0, workers: int = 1,
                settings: SamplerSettings = DEFAULT_SAMPLER, checkpoints: bool = False,
                stream: int = 0) -> Estimate:
    """Importance-sampled integral of the graph's edge-form product."""
    sampler = GraphSampler(g, knot, settings)
    return run_chunked(sampler, n_samples, seed, workers, checkpoints, stream)


def write_convergence_csv(est: Estimate, path) -> None:
    fields = ["n_samples", "value", "std_error", "rejection_rate"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in est.meta.get("convergence", []):
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})


# -- quadrature --------------------------------------------------------------

def pair_kernel(p1, t1, p2, t2) -> np.ndarray:
    """Coefficient of ds₁∧ds₂ in the pulled-back Gauss form, 0 where points coincide."""
    d = p2 - p1
    r2 = np.sum(d * d, axis=-1)
    num = -np.sum(d * np.cross(t1, t2), axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        k = num / (FOUR_PI * r2 ** 1.5)
    return np.where(r2 > 0, k, 0.0)


def _kernel_matrix(knot: Curve, m: int, other: Curve | None = None) -> np.ndarray:
    s = np.arange(m) * (TWO_PI / m)
    p, t = knot.eval(s)
    q, u = (p, t) if other is None else other.eval(s)
    return pair_kernel(p[:, None], t[:, None], q[None], u[None])


def _richardson(f, mesh: int, order: int = 2) -> Estimate:
    coarse, fine = f(mesh), f(2 * mesh)
    c = 2 ** order
    value = (c * fine - coarse) / (c - 1)
    return Estimate(float(value), float(abs(fine - coarse) / (c - 1)), 2 * mesh, None,
                    meta={"coarse": float(coarse), "fine": float(fine)})


def linking_number(c1: Curve, c2: Curve, mesh: int = 256) -> Estimate:
    """Gauss double integral by the periodic trapezoid rule; error from mesh halving."""
    gap = curve_distance(c1, c2)
    if gap < 1e-6 * max(c1.diameter, c2.diameter):
        raise CurvesIntersect(f"curves come within {gap:.3g}")
    h = TWO_PI / mesh

    def at(m):
        return float(np.sum(_kernel_matrix(c1, m, c2)) * (TWO_PI / m) ** 2)

    fine, coarse = at(mesh), at(mesh // 2)
    return Estimate(fine, abs(fine - coarse), mesh * mesh, None, meta={"h": h})


def self_linking(c: Curve, mesh: int = 512) -> Estimate:
    """Gauss self-integral over both orderings of two knot points (the writhe)."""
    def at(m):
        return float(np.sum(_kernel_matrix(c, m)) * (TWO_PI / m) ** 2)

    return _richardson(at, mesh)


def _chord4_sum(K: np.ndarray, chords) -> float:
    """Iterated trapezoid over s1 ≤ s2 ≤ s3 ≤ s4 ≤ s1 + 2π for a 4-point chord diagram.

    Works on the unrolled 2m×2m kernel; every inner integral is a difference of
    cumulative trapezoid tables, so the cost is O(m²).
    """
    m = len(K)
    h = TWO_PI / m
    idx = np.arange(2 * m) % m
    Kb = K[np.ix_(idx, idx)]
    R = cumulative_trapezoid(Kb, dx=h, axis=1, initial=0)    # along the second argument
    Cc = cumulative_trapezoid(Kb, dx=h, axis=0, initial=0)   # along the first argument
    C2 = cumulative_trapezoid(Cc, dx=h, axis=1, initial=0)
    i1 = np.arange(m)[:, None]
    i3 = i1 + np.arange(m + 1)[None, :]
    end = i1 + m
    pairs = {frozenset(c) for c in chords}
    if pairs == {frozenset((1, 3)), frozenset((2, 4))}:
        rect = C2[i3, end] - C2[i1, end] - C2[i3, i3] + C2[i1, i3]
        outer = Kb[i1, i3] * rect
    elif pairs == {frozenset((1, 2)), frozenset((3, 4))}:
        outer = (R[i1, i3] - R[i1, i1]) * (R[i3, end] - R[i3, i3])
    elif pairs == {frozenset((1, 4)), frozenset((2, 3))}:
        outer = (Cc[i3, i3] - Cc[i1, i3]) * (R[i1, end] - R[i1, i3])
    else:
        raise NotChordDiagram(f"unsupported chord pattern {sorted(map(sorted, pairs))}")
    return float(np.sum(np.trapezoid(outer, dx=h, axis=1)) * h)


def _chord_pattern_sign(chords) -> int:
    """Sign of ∧ (ds_a∧ds_b) over the chords relative to ds1∧ds2∧ds3∧ds4."""
    perm = [v - 1 for c in chords for v in c]
    inv = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
    return -1 if inv % 2 else 1


def chord_quadrature(g: KnotGraph, knot: Curve, mesh: int = 128) -> Estimate:
    """Trapezoid quadrature over the cyclic-order cell for chord diagrams on ≤ 4 points.

    The result at ``mesh`` and ``2·mesh`` is Richardson-extrapolated; the error
    is the extrapolation correction.
    """
    if g.n_int:
        raise NotChordDiagram("quadrature handles graphs without internal vertices")
    graph_domain(g)
    chords = list(g.internal_edges)
    if g.n_ext == 2:
        return self_linking(knot, mesh) if chords[0] == (1, 2) else self_linking(knot, mesh).scaled(-1)
    if g.n_ext != 4:
        raise SizeLimit("chord quadrature implemented for at most 4 knot points")
    if len(set(chords)) < 2:
        return Estimate(0.0, 0.0, 0, None)
    sign = _chord_pattern_sign(chords)

    def at(m):
        return sign * _chord4_sum(_kernel_matrix(knot, m), chords)

    return _richardson(at, mesh)
