"""Knot quantities built from configuration-space integrals.

``A_Γ(K)`` is the coefficient-weighted sum of the integrals of a knot-graph
cocycle's terms; ``I_Γ = A_Γ + μ·sln`` adds the self-linking counterterm,
with ``μ = 0`` forced for even order.  Overall scale is fixed by calibration
against a reference knot.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .curves import Curve, curve_to_dict
from .domain import Estimate
from .errors import InsufficientSignal, NotCocycle, NotTrivalent, UnknownAnomaly
from .graphs import (GraphSum, KnotGraph, canonical_key, cocycle_from_json, cocycle_to_json,
                     delta, is_prime, is_trivalent, order)
from .integrate import (DEFAULT_SAMPLER, SamplerSettings, chord_quadrature, linking_number,
                        mc_estimate, self_linking)

__all__ = ["CocycleSpec", "linking_number", "self_linking", "a_gamma", "i_gamma",
           "calibrate_cocycle", "result_document", "file_ref", "format_number"]


@dataclass
class CocycleSpec:
    """A knot-variant cocycle with its anomaly coefficient and calibration."""

    cocycle: GraphSum
    mu: Fraction | None = None
    calibration: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mu is not None:
            self.mu = Fraction(self.mu)

    @property
    def order(self) -> Fraction:
        orders = {order(g) for g, _ in self.cocycle.items()}
        if len(orders) != 1:
            raise NotTrivalent("cocycle terms disagree on order")
        return orders.pop()

    def validate(self, require_prime: bool = True) -> "CocycleSpec":
        if not self.cocycle:
            raise NotCocycle("empty combination")
        for g, _ in self.cocycle.items():
            if not isinstance(g, KnotGraph):
                raise NotCocycle("invariant assembly needs knot-variant graphs")
            if not is_trivalent(g):
                raise NotTrivalent(f"term {g} is not trivalent")
            if require_prime and not is_prime(g):
                raise NotCocycle(f"term {g} is not prime")
        if delta(self.cocycle):
            raise NotCocycle("δ of the combination is nonzero")
        return self

    def scaled(self, factor) -> "CocycleSpec":
        return CocycleSpec(self.cocycle.scaled(factor), self.mu, None, dict(self.meta))

    def to_json(self) -> str:
        doc = json.loads(cocycle_to_json(self.cocycle))
        doc["mu"] = None if self.mu is None else f"{self.mu.numerator}/{self.mu.denominator}"
        doc["calibration"] = self.calibration
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CocycleSpec":
        doc = json.loads(text)
        mu = doc.get("mu")
        return cls(cocycle_from_json(text), None if mu is None else Fraction(mu),
                   doc.get("calibration"))


def _term_estimate(g: KnotGraph, knot: Curve, n_samples: int, seed: int, stream: int,
                   workers: int, mesh: int, settings: SamplerSettings,
                   quadrature: bool, checkpoints: bool = False) -> Estimate:
    if len(set(g.internal_edges)) < len(g.internal_edges):
        return Estimate(0.0, 0.0, 0, seed, meta={"method": "zero"})
    if quadrature and g.n_int == 0 and g.n_ext <= 4:
        est = chord_quadrature(g, knot, mesh)
        est.meta["method"] = "quadrature"
        return est
    est = mc_estimate(g, knot, n_samples, seed, workers, settings, checkpoints, stream)
    est.meta["method"] = "mc"
    return est


def a_gamma(spec: CocycleSpec, knot: Curve, n_samples: int = 1_000_000, seed: int = 0,
            workers: int = 1, mesh: int = 128, settings: SamplerSettings = DEFAULT_SAMPLER,
            quadrature: bool = True, calibrated: bool = True,
            checkpoints: bool = False) -> Estimate:
    """Σ_Γ c_Γ ∫ ∏ ω over the terms, times the stored calibration when present.

    Chord diagrams use quadrature unless ``quadrature=False``; term ``k`` draws
    Monte-Carlo samples from substream ``k + 1`` of ``seed``.  With
    ``checkpoints`` each Monte-Carlo term carries its convergence rows.
    """
    value, var, n_total, terms = 0.0, 0.0, 0, []
    for k, (g, c) in enumerate(spec.cocycle.items()):
        if not isinstance(g, KnotGraph):
            raise NotCocycle("invariant assembly needs knot-variant graphs")
        est = _term_estimate(g, knot, n_samples, seed, k + 1, workers, mesh, settings,
                             quadrature, checkpoints)
        value += float(c) * est.value
        var += (float(c) * est.std_error) ** 2
        n_total += est.n_samples
        terms.append({"coeff": str(c), "value": est.value, "std_error": est.std_error,
                      "method": est.meta["method"], "graph": canonical_key(g)})
        if "convergence" in est.meta:
            terms[-1]["convergence"] = est.meta["convergence"]
    out = Estimate(value, float(np.sqrt(var)), n_total, seed, meta={"terms": terms})
    if calibrated and spec.calibration is not None:
        out = out.scaled(spec.calibration)
        out.meta["terms"] = terms
    return out


def i_gamma(spec: CocycleSpec, knot: Curve, n_samples: int = 1_000_000, seed: int = 0,
            sln_mesh: int = 512, **kw) -> Estimate:
    """A_Γ + μ·sln; even order forces μ = 0 and returns A_Γ unchanged."""
    a = a_gamma(spec, knot, n_samples, seed, **kw)
    if spec.order.denominator == 1 and spec.order.numerator % 2 == 0:
        return a
    if spec.mu is None:
        raise UnknownAnomaly(f"order {spec.order} is odd and no μ was supplied")
    sln = self_linking(knot, sln_mesh)
    scale = spec.calibration if spec.calibration is not None else 1.0
    mu = float(spec.mu) * scale
    return Estimate(a.value + mu * sln.value, float(np.hypot(a.std_error, mu * sln.std_error)),
                    a.n_samples, seed, meta={"a_gamma": a.value, "sln": sln.value})


def calibrate_cocycle(spec: CocycleSpec, reference: Curve, reference_value=1,
                      n_samples: int = 1_000_000, seed: int = 0, **kw) -> float:
    """Scalar c with c·A_Γ(reference) = reference_value; stored on ``spec``."""
    raw = a_gamma(spec, reference, n_samples, seed, calibrated=False, **kw)
    if raw.std_error > 0 and abs(raw.value) < 5 * raw.std_error or raw.value == 0:
        raise InsufficientSignal(f"A_Γ(reference) = {raw.value:.3g} ± {raw.std_error:.2g}")
    c = float(Fraction(reference_value)) / raw.value
    spec.calibration = c
    spec.meta["calibration_rel_error"] = raw.std_error / abs(raw.value)
    return c


# -- result documents ---------------------------------------------------------

def format_number(x):
    """Round floats to 12 significant digits; leave everything else alone."""
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: format_number(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [format_number(v) for v in x]
    return x


def file_ref(path=None, obj=None) -> dict | None:
    """``{"path", "sha256"}`` of a file, or of the canonical JSON of an in-memory object."""
    if path is not None:
        data = Path(path).read_bytes()
        return {"path": str(path), "sha256": hashlib.sha256(data).hexdigest()}
    if obj is None:
        return None
    if isinstance(obj, Curve):
        text = json.dumps(curve_to_dict(obj), sort_keys=True)
    elif isinstance(obj, CocycleSpec):
        text = obj.to_json()
    else:
        text = json.dumps(obj, sort_keys=True)
    return {"path": None, "sha256": hashlib.sha256(text.encode()).hexdigest()}


def result_document(quantity: str, est: Estimate, cocycle=None, knot=None,
                    calibration: float | None = None, config: dict | None = None,
                    extra: dict | None = None) -> dict:
    doc = {
        "quantity": quantity,
        "value": est.value,
        "std_error": est.std_error,
        "n_samples": est.n_samples,
        "seed": est.seed,
        "cocycle": cocycle,
        "knot": knot,
        "calibration": calibration,
    }
    if config is not None:
        doc["config"] = config
    if extra:
        doc.update(extra)
    return format_number(doc)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
