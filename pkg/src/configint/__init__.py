"""Trivalent graph cocycles and configuration-space integrals for knots in R³."""
from .curves import (FourierCurve, PolylineCurve, Reparametrized, builtin_knot, circle,
                     hopf_pair, load_curve, perturb_isotopy, save_curve, torus_link_pair)
from .domain import ConfigDomain, Configuration, Estimate
from .errors import ConfigIntError
from .forms import gauss_form_eval, wedge_top_evaluate
from .graphs import (GraphSum, KnotGraph, LabeledGraph, cocycle_basis, delta,
                     enumerate_trivalent, order)
from .integrate import (chord_quadrature, linking_number, mc_estimate, sample_configuration,
                        self_linking)
from .invariants import CocycleSpec, a_gamma, calibrate_cocycle, i_gamma
from .oracles import GaussCode, project_gauss_code, pv_v2, writhe_oracle
from .vacuum import b_gamma_estimate, parity_check

__all__ = [
    "FourierCurve", "PolylineCurve", "Reparametrized", "builtin_knot", "circle", "hopf_pair",
    "load_curve", "perturb_isotopy", "save_curve", "torus_link_pair",
    "ConfigDomain", "Configuration", "Estimate", "ConfigIntError",
    "gauss_form_eval", "wedge_top_evaluate",
    "GraphSum", "KnotGraph", "LabeledGraph", "cocycle_basis", "delta", "enumerate_trivalent",
    "order", "chord_quadrature", "linking_number", "mc_estimate", "sample_configuration",
    "self_linking", "CocycleSpec", "a_gamma", "calibrate_cocycle", "i_gamma",
    "GaussCode", "project_gauss_code", "pv_v2", "writhe_oracle",
    "b_gamma_estimate", "parity_check",
]
