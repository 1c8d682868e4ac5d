import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import configint.oracles as oracles
from configint.curves import builtin_knot, circle, perturb_isotopy
from configint.errors import DegenerateProjection, MalformedCode
from configint.integrate import self_linking
from configint.oracles import (Crossing, GaussCode, project_gauss_code, pv_v2,
                              writhe_oracle)

TREFOIL_CODE = "O1+ U2+ O3+ U1+ O2+ U3+"
FIGURE8_CODE = "O1- U2+ O3+ U1- O4- U3+ O2+ U4-"


def test_parse_round_trip():
    gc = GaussCode.parse(TREFOIL_CODE)
    assert str(gc) == TREFOIL_CODE
    assert len(gc) == 3 and gc.writhe == 3
    assert GaussCode.parse(FIGURE8_CODE).writhe == 0


@pytest.mark.parametrize("text", ["O1+ O1+", "O1+ U1-", "O1+", "X1+ U1+", "Oa+ Ua+"])
def test_malformed_codes(text):
    with pytest.raises(MalformedCode):
        GaussCode.parse(text)


def test_v2_on_known_codes():
    assert pv_v2(GaussCode.parse(TREFOIL_CODE)) == 1
    assert pv_v2(GaussCode.parse(FIGURE8_CODE)) == -1
    assert pv_v2(GaussCode(())) == 0
    assert pv_v2(GaussCode.parse("O1+ U1+")) == 0
    # mirror trefoil: swap over/under and signs
    assert pv_v2(GaussCode.parse("U1- O2- U3- O1- U2- O3-")) == 1
    with pytest.raises(MalformedCode):
        pv_v2("O1+ U1+")


# -- Reidemeister moves on codes -----------------------------------------------------

def _insert(entries, pos, new):
    return entries[:pos] + tuple(new) + entries[pos:]


@st.composite
def r1_move(draw, base):
    entries = GaussCode.parse(base).entries
    pos = draw(st.integers(0, len(entries)))
    sign = draw(st.sampled_from([1, -1]))
    over_first = draw(st.booleans())
    lab = 99
    new = [Crossing(lab, over_first, sign), Crossing(lab, not over_first, sign)]
    return GaussCode(_insert(entries, pos, new))


@st.composite
def r2_move(draw, base):
    entries = GaussCode.parse(base).entries
    i = draw(st.integers(0, len(entries)))
    j = draw(st.integers(0, len(entries)))
    sign = draw(st.sampled_from([1, -1]))
    same_direction = draw(st.booleans())
    top = [Crossing(98, True, sign), Crossing(99, True, -sign)]
    bottom = [Crossing(98, False, sign), Crossing(99, False, -sign)]
    if not same_direction:
        bottom = bottom[::-1]
    # insert the later position first so the earlier index stays valid
    lo, hi = sorted((i, j))
    first, second = (top, bottom) if i <= j else (bottom, top)
    out = _insert(entries, hi, second)
    out = _insert(out, lo, first)
    return GaussCode(out)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([TREFOIL_CODE, FIGURE8_CODE]).flatmap(r1_move))
def test_v2_invariant_under_r1(gc):
    base = TREFOIL_CODE if len(gc) == 4 else FIGURE8_CODE
    assert pv_v2(gc) == pv_v2(GaussCode.parse(base))


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([TREFOIL_CODE, FIGURE8_CODE]).flatmap(r2_move))
def test_v2_invariant_under_r2(gc):
    base = TREFOIL_CODE if len(gc) == 5 else FIGURE8_CODE
    assert pv_v2(gc) == pv_v2(GaussCode.parse(base))


def test_r3_triangle_move():
    # strands O1 O2 (top), U1 O3 (middle), U2 U3 (bottom); R3 reverses each adjacent pair
    before = GaussCode.parse("O1+ O2+ U1+ O3+ U2+ U3+")
    after = GaussCode.parse("O2+ O1+ O3+ U1+ U3+ U2+")
    assert pv_v2(before) == pv_v2(after)


# -- projections ----------------------------------------------------------------

@pytest.mark.parametrize("direction", [(0, 0, 1), (0.3, 0.2, 0.9), (1, 0.1, 0.2), (-0.4, 0.8, 0.3)])
def test_projected_v2_of_builtins(direction):
    assert pv_v2(project_gauss_code(builtin_knot("trefoil"), direction)) == 1
    assert pv_v2(project_gauss_code(builtin_knot("figure8"), direction)) == -1
    assert pv_v2(project_gauss_code(builtin_knot("unknot"), direction)) == 0


def test_projected_v2_after_perturbation():
    c = builtin_knot("trefoil")
    for seed in range(3):
        p = perturb_isotopy(c, 0.3, seed)
        assert pv_v2(project_gauss_code(p, (0.2, -0.3, 0.9))) == 1


def test_projection_code_writhe_is_integer_and_standard():
    gc = project_gauss_code(builtin_knot("trefoil"))
    assert len(gc) == 3 and abs(gc.writhe) == 3


def test_edge_on_circle_is_jittered_to_a_generic_view():
    gc = project_gauss_code(circle(), (1.0, 0.0, 0.0))
    assert len(gc) == 0


def test_degenerate_projection_raises(monkeypatch):
    monkeypatch.setattr(oracles, "_generic", lambda *a: False)
    with pytest.raises(DegenerateProjection):
        project_gauss_code(builtin_knot("trefoil"))


def test_writhe_oracle_tracks_self_linking():
    c = builtin_knot("trefoil")
    w = writhe_oracle(c, 1500, seed=2)
    s = self_linking(c)
    assert abs(w.value - s.value) <= 3 * np.hypot(w.std_error, s.std_error)


def test_writhe_of_planar_circle():
    w = writhe_oracle(circle(), 200)
    assert w.value == 0.0
