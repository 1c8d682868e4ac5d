import json
from fractions import Fraction

import pytest

from configint.curves import builtin_knot, circle
from configint.domain import Estimate
from configint.errors import InsufficientSignal, NotCocycle, NotTrivalent, UnknownAnomaly
from configint.graphs import GraphSum, KnotGraph, cocycle_basis
from configint.integrate import self_linking
from configint.invariants import (CocycleSpec, a_gamma, calibrate_cocycle, dumps, file_ref,
                                  format_number, i_gamma, result_document)

TREFOIL = builtin_knot("trefoil")
X = KnotGraph(4, 0, ((1, 3), (2, 4)))


@pytest.fixture(scope="module")
def order_two():
    return CocycleSpec(cocycle_basis(4, "knot", "prime")[0]).validate()


@pytest.fixture(scope="module")
def order_one():
    return CocycleSpec(cocycle_basis(2, "knot", "prime")[0]).validate()


def test_validation(order_two):
    assert order_two.order == 2
    with pytest.raises(NotCocycle):
        CocycleSpec(GraphSum([(X, 1)], quotient=True)).validate()
    with pytest.raises(NotCocycle):
        CocycleSpec(GraphSum()).validate()
    with pytest.raises(NotTrivalent):
        CocycleSpec(GraphSum([(KnotGraph(3, 0, ((1, 2),)), 1)])).validate()


def test_json_round_trip(order_two):
    spec = CocycleSpec(order_two.cocycle, mu=Fraction(1, 3), calibration=0.52)
    back = CocycleSpec.from_json(spec.to_json())
    assert back.cocycle == spec.cocycle
    assert back.mu == Fraction(1, 3) and back.calibration == 0.52


def test_order_one_anomaly_cancels_self_linking(order_one):
    # the lone chord integrates to sln, so μ = -1 cancels it exactly
    spec = CocycleSpec(order_one.cocycle, mu=-1)
    for knot in (TREFOIL, builtin_knot("figure8")):
        est = i_gamma(spec, knot)
        assert abs(est.value) < 1e-8
    with pytest.raises(UnknownAnomaly):
        i_gamma(CocycleSpec(order_one.cocycle), TREFOIL)


def test_even_order_ignores_anomaly(order_two):
    spec = CocycleSpec(order_two.cocycle, mu=5)
    a = a_gamma(spec, TREFOIL, n_samples=20_000, seed=1)
    i = i_gamma(spec, TREFOIL, n_samples=20_000, seed=1)
    assert a.value == i.value


def test_term_methods(order_two):
    est = a_gamma(order_two, TREFOIL, n_samples=20_000, seed=2)
    methods = {t["graph"]: t["method"] for t in est.meta["terms"]}
    assert methods == {"K|2|2|(1,3),(2,4),(3,4)x2": "zero", "K|3|1|(1,4),(2,4),(3,4)": "mc",
                       "K|4|0|(1,3),(2,4)": "quadrature"}
    assert est.std_error > 0


def test_calibration_scales_results(order_two):
    spec = CocycleSpec(order_two.cocycle)
    c = calibrate_cocycle(spec, TREFOIL, 1, n_samples=50_000, seed=3)
    assert spec.calibration == c
    assert 0 < spec.meta["calibration_rel_error"] < 0.05
    again = a_gamma(spec, TREFOIL, n_samples=50_000, seed=3)
    assert again.value == pytest.approx(1.0, abs=1e-12)
    raw = a_gamma(spec, TREFOIL, n_samples=50_000, seed=3, calibrated=False)
    assert raw.value * c == pytest.approx(again.value)


def test_calibration_needs_signal(order_one):
    with pytest.raises(InsufficientSignal):
        calibrate_cocycle(CocycleSpec(order_one.cocycle), circle())


def test_planar_unknot_self_linking_is_zero():
    assert abs(self_linking(circle()).value) < 1e-8


def test_format_and_documents():
    assert format_number(1 / 3) == 0.333333333333
    assert format_number({"a": [2 / 3, "x", 4]}) == {"a": [0.666666666667, "x", 4]}
    est = Estimate(1.23456789012345, 0.001, 100, 7)
    doc = result_document("a_gamma", est, None, file_ref(obj=TREFOIL), 0.5, {"seed": 7})
    assert doc["value"] == 1.23456789012 and doc["calibration"] == 0.5
    assert doc["knot"]["sha256"] == file_ref(obj=builtin_knot("trefoil"))["sha256"]
    text = dumps(doc)
    assert json.loads(text) == doc and text == dumps(json.loads(text))


def test_file_ref_tracks_content(tmp_path):
    p = tmp_path / "f.json"
    p.write_text("abc")
    h1 = file_ref(path=p)["sha256"]
    p.write_text("abd")
    assert file_ref(path=p)["sha256"] != h1
