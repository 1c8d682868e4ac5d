"""Self-checks shared by the command line and the test-suite.

Each check returns a plain dict with ``"check"``, ``"status"`` ("pass" or
"fail") and the measured quantities.
"""
from __future__ import annotations

import itertools
import time
from math import factorial, pi

import numpy as np
from scipy.spatial.transform import Rotation

from .curves import builtin_knot
from .domain import ConfigDomain
from .fiber import kontsevich_residual
from .forms import gauss_form_eval
from .graphs import LabeledGraph, delta, enumerate_trivalent
from .integrate import (DEFAULT_SAMPLER, FreePointLaw, knot_density, philox_stream,
                        sample_batch)
from .vacuum import PairProduct, b_gamma_estimate, parity_check

THETA = LabeledGraph(2, ((1, 2), (1, 2), (1, 2)))
K4 = LabeledGraph(4, ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)))


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# -- δ² = 0 --------------------------------------------------------------------

def check_delta(max_n: int = 6) -> dict:
    t0 = time.perf_counter()
    counts, failures = {}, []
    for variant in ("closed", "knot"):
        for n in range(2, max_n + 1, 2):
            graphs = enumerate_trivalent(n, variant)
            counts[f"{variant}_{n}"] = len(graphs)
            for g in graphs:
                if delta(delta(g)):
                    failures.append(f"{variant}:{g}")
    return {"check": "delta", "status": _status(not failures), "graph_counts": counts,
            "failures": failures[:10], "seconds": time.perf_counter() - t0}


# -- Gauss form identities ---------------------------------------------------------

def _form_matrix(x, y) -> np.ndarray:
    E = np.eye(6)
    return np.array([[gauss_form_eval(x, y, E[a], E[b]) for b in range(6)] for a in range(6)])


def closedness_residual(x, y, h: float = 1e-3) -> float:
    """Largest |dω| component at (x, y) from Richardson-extrapolated central differences."""
    z = np.concatenate([x, y]).astype(float)

    def deriv(a, step):
        e = np.zeros(6)
        e[a] = step
        return (_form_matrix((z + e)[:3], (z + e)[3:]) - _form_matrix((z - e)[:3], (z - e)[3:])) / (2 * step)

    D = [(4 * deriv(a, h / 2) - deriv(a, h)) / 3 for a in range(6)]
    worst = 0.0
    for a, b, c in itertools.combinations(range(6), 3):
        worst = max(worst, abs(D[a][b, c] - D[b][a, c] + D[c][a, b]))
    return worst


def sphere_normalization(x, radius: float = 0.7, n_theta: int = 64, n_phi: int = 64) -> float:
    """∫ over the sphere of directions of y around x of the pulled-back form."""
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.5 * pi * (nodes + 1)
    wt = 0.5 * pi * weights
    phi = np.arange(n_phi) * (2 * pi / n_phi)
    total = 0.0
    for th, w in zip(theta, wt):
        for ph in phi:
            n = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            dth = radius * np.array([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)])
            dph = radius * np.array([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), 0.0])
            v1 = np.concatenate([np.zeros(3), dth])
            v2 = np.concatenate([np.zeros(3), dph])
            total += w * (2 * pi / n_phi) * gauss_form_eval(x, x + radius * n, v1, v2)
    return total


def check_forms(n_points: int = 20, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    anti, closed, rot = 0.0, 0.0, 0.0
    for _ in range(n_points):
        x, y = rng.normal(size=3), rng.normal(size=3) + np.array([1.5, 0, 0])
        v1, v2 = rng.normal(size=6), rng.normal(size=6)
        val = gauss_form_eval(x, y, v1, v2)
        swapped = gauss_form_eval(y, x, np.r_[v1[3:], v1[:3]], np.r_[v2[3:], v2[:3]])
        anti = max(anti, abs(val + swapped))
        R = Rotation.random(random_state=rng).as_matrix()
        rv = gauss_form_eval(R @ x, R @ y, np.r_[R @ v1[:3], R @ v1[3:]], np.r_[R @ v2[:3], R @ v2[3:]])
        rot = max(rot, abs(rv - val))
        closed = max(closed, closedness_residual(x, y))
    norm = sphere_normalization(rng.normal(size=3))
    ok = anti == 0.0 and closed < 1e-6 and abs(norm - 1) < 1e-6 and rot < 1e-12
    return {"check": "forms", "status": _status(ok), "antisymmetry_max": anti,
            "closedness_max": closed, "sphere_integral": norm, "rotation_max": rot}


# -- sampler -------------------------------------------------------------------

def check_sampler(n_samples: int = 400_000, seed: int = 0, knot: str = "trefoil") -> dict:
    """Weights integrate indicators of known-measure sets to their measures within 3σ."""
    k = builtin_knot(knot)
    rows, ok = [], True
    for n in (2, 3, 4):
        b = sample_batch(ConfigDomain(n, 0), k, n_samples, philox_stream(seed, n))
        exact = (2 * pi) ** n / factorial(n - 1)
        rows.append(("cyclic_cell_%d" % n, float(b.weight.mean()),
                     float(b.weight.std() / np.sqrt(len(b))), exact))
    b = sample_batch(ConfigDomain(3, 1), k, n_samples, philox_stream(seed, 10))
    kv = (2 * pi) ** 3 / 2
    y = b.y[:, 0]
    r = np.linalg.norm(y - np.array([1.0, 0.0, 0.0]), axis=1)
    sets = [("ball", np.linalg.norm(y, axis=1) < 0.5, 4 / 3 * pi * 0.125),
            ("shell", (r > 1) & (r < 2), 4 / 3 * pi * 7),
            ("box", np.all(np.abs(y) < [1.0, 2.0, 0.5], axis=1), 8.0)]
    for name, ind, vol in sets:
        v = ind * b.weight
        rows.append((name, float(v.mean()), float(v.std() / np.sqrt(len(v))), vol * kv))
    out = []
    for name, val, se, exact in rows:
        good = abs(val - exact) <= 3 * se
        ok &= good
        out.append({"set": name, "value": val, "std_error": se, "exact": exact, "ok": good})
    # the recorded weight is the reciprocal of the mixture density at the sampled point
    law = FreePointLaw(k, DEFAULT_SAMPLER)
    dens = knot_density(b.s, DEFAULT_SAMPLER.pair_mass) * law.density(y, k.eval(b.s)[0])
    recon = 1.0 / dens
    consistency = float(np.max(np.abs(recon / b.weight - 1)))
    ok &= consistency < 1e-12
    return {"check": "sampler", "status": _status(bool(ok)), "sets": out,
            "weight_consistency": consistency, "rejection_rate": b.rejected / (len(b) + b.rejected)}


# -- fiber integral over a collapsing pair ----------------------------------

DEFAULT_PAIRS = (((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
                 ((0.3, -0.2, 0.5), (-0.4, 0.7, 0.1)))


def check_lemma_k(n_samples: int = 400_000, seed: int = 0, pairs=DEFAULT_PAIRS,
                  max_std_error: float = 5e-4) -> dict:
    out, ok = [], True
    for p, (xj, xk) in enumerate(pairs):
        comps = kontsevich_residual(xj, xk, n_samples, seed + p)
        for c, (v, s) in enumerate(comps):
            good = abs(v) <= 3 * s and s <= max_std_error
            ok &= good
            out.append({"pair": p, "component": c, "value": v, "std_error": s, "ok": good})
    return {"check": "lemma-k", "status": _status(ok), "n_samples": n_samples,
            "components": out}


# -- B_Γ -------------------------------------------------------------------------

def check_b_gamma(n_samples: int = 200_000, seed: int = 0, n_parity: int = 1000,
                  max_std_error: float = 1e-3) -> dict:
    est = b_gamma_estimate(THETA, n_samples, seed)
    zero_ok = abs(est.value) <= 3 * est.std_error + 1e-12 and est.std_error <= max_std_error
    parity = {}
    probe = PairProduct(4, [(1, [(0, 1), (1, 2), (2, 3), (0, 3)])])
    for name, g in (("theta", THETA), ("k4", K4), ("four_cycle", probe)):
        passed, dev, scale = parity_check(g, n_parity, seed)
        parity[name] = {"ok": passed, "max_deviation": dev, "max_value": scale}
    ok = zero_ok and all(p["ok"] for p in parity.values())
    return {"check": "b-gamma", "status": _status(ok), "value": est.value,
            "std_error": est.std_error, "n_samples": est.n_samples, "parity": parity}


CHECKS = {
    "delta": check_delta,
    "forms": check_forms,
    "sampler": check_sampler,
    "lemma-k": check_lemma_k,
    "b-gamma": check_b_gamma,
}
