from math import factorial, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from configint.checks import check_sampler
from configint.curves import builtin_knot, circle, hopf_pair, torus_link_pair
from configint.domain import ConfigDomain, Configuration
from configint.errors import (CoincidentPoints, CurvesIntersect, DegreeMismatch,
                              NotChordDiagram)
from configint.forms import gauss_form_eval, wedge_permutation_oracle
from configint.graphs import KnotGraph
from configint.integrate import (DEFAULT_SAMPLER, ChunkStats, FreePointLaw, SamplerSettings,
                                 _pair_offset_density, chord_quadrature, integrand_batch,
                                 integrand_value, knot_density, linking_number, mc_estimate,
                                 philox_stream, sample_batch, sample_configuration,
                                 sample_knot_params, self_linking, write_convergence_csv)
from configint.oracles import crossing_linking

X = KnotGraph(4, 0, ((1, 3), (2, 4)))
Y = KnotGraph(3, 1, ((1, 4), (2, 4), (3, 4)))
TREFOIL = builtin_knot("trefoil")


# -- sampling ---------------------------------------------------------------------

def test_pair_offset_density_is_normalized():
    val, _ = quad(lambda d: _pair_offset_density(np.array([d]))[0], -pi, pi, points=[0.0],
                  limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_radial_law_is_normalized():
    law = FreePointLaw(TREFOIL)
    for a in law.scales:
        f = lambda r: 4 * pi * r * r * a / (2 * pi ** 2 * r * r * (a * a + r * r))
        val, _ = quad(f, 0, np.inf)
        assert val == pytest.approx(1.0, abs=1e-9)


def test_uniform_knot_density_without_pair_mixture():
    rng = philox_stream(1, 0)
    s = sample_knot_params(4, 100, rng, 0.0)
    assert np.allclose(knot_density(s, 0.0), factorial(3) / (2 * pi) ** 4)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_knot_params_are_cyclically_ordered(n):
    s = sample_knot_params(n, 2000, philox_stream(0, 0), DEFAULT_SAMPLER.pair_mass)
    assert np.all((s >= 0) & (s < 2 * pi))
    # exactly one descent when read cyclically: the sequence wraps once
    descents = np.sum(np.diff(np.concatenate([s, s[:, :1]], axis=1), axis=1) < 0, axis=1)
    assert np.all(descents == 1)


def test_sampler_indicator_measures():
    assert check_sampler(n_samples=200_000)["status"] == "pass"


def test_configuration_invariants():
    rng = philox_stream(5, 0)
    for dom in (ConfigDomain(4, 0), ConfigDomain(3, 1), ConfigDomain(2, 2)):
        cfg = sample_configuration(dom, TREFOIL, rng)
        assert cfg.weight > 0
        assert cfg.domain == dom
        pts = np.concatenate([TREFOIL.point(cfg.s), cfg.y.reshape(-1, 3)])
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(len(pts))
        assert d.min() > 0


def test_rejection_counts_near_coincident_draws():
    b = sample_batch(ConfigDomain(3, 1), TREFOIL, 5000, philox_stream(0, 0),
                     SamplerSettings(reject_cutoff=0.05))
    assert b.rejected > 0 and len(b) == 5000


def test_settings_validation():
    with pytest.raises(ValueError):
        SamplerSettings(tail_mass=1.5)


# -- integrands -------------------------------------------------------------------

def integrand_oracle(g, knot, s, y):
    """Permutation-sum wedge of edge forms built straight from the Gauss form."""
    n = len(s)
    y = np.asarray(y, dtype=float).reshape(-1, 3)
    p, t = knot.eval(np.asarray(s))
    pts = np.concatenate([p, y])
    D = n + 3 * len(y)
    moves = np.zeros((len(pts), D, 3))
    for i in range(n):
        moves[i, i] = t[i]
    for j in range(len(y)):
        moves[n + j, n + 3 * j:n + 3 * j + 3] = np.eye(3)
    forms = []
    for a, b in g.internal_edges:
        M = np.zeros((D, D))
        for c in range(D):
            for d in range(D):
                M[c, d] = gauss_form_eval(pts[a - 1], pts[b - 1],
                                          np.r_[moves[a - 1, c], moves[b - 1, c]],
                                          np.r_[moves[a - 1, d], moves[b - 1, d]])
        forms.append(M)
    return wedge_permutation_oracle(forms)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_integrand_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    for g, dom in ((X, ConfigDomain(4, 0)), (Y, ConfigDomain(3, 1))):
        cfg = sample_configuration(dom, TREFOIL, rng)
        assert integrand_value(g, TREFOIL, cfg) == pytest.approx(
            integrand_oracle(g, TREFOIL, cfg.s, cfg.y), rel=1e-9, abs=1e-12)


def test_integrand_errors():
    cfg = Configuration(np.array([0.1, 0.1, 2.0, 3.0]), np.zeros((0, 3)), 1.0)
    with pytest.raises(CoincidentPoints):
        integrand_value(X, TREFOIL, cfg)
    with pytest.raises(DegreeMismatch):
        integrand_value(Y, TREFOIL, cfg)
    with pytest.raises(DegreeMismatch):
        integrand_batch(KnotGraph(4, 0, ((1, 3),)), TREFOIL, np.zeros((1, 4)), np.zeros((1, 0, 3)))


def test_repeated_edge_integrand_vanishes():
    D = KnotGraph(2, 2, ((1, 3), (2, 4), (3, 4), (3, 4)))
    s = np.array([[0.5, 3.0]])
    y = np.array([[[0.1, 0.2, 0.3], [1.0, -0.5, 0.2]]])
    assert integrand_batch(D, TREFOIL, s, y)[0] == 0.0


# -- Monte-Carlo driver -------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), min_size=1,
                max_size=6))
def test_chunk_merge_matches_pooled_statistics(chunks):
    total = ChunkStats(0, 0.0, 0.0, 0)
    for c in chunks:
        v = np.array(c)
        m = v.mean()
        total = total.merge(ChunkStats(len(v), m, float(np.sum((v - m) ** 2)), 0))
    pooled = np.concatenate([np.array(c) for c in chunks])
    assert total.n == len(pooled)
    assert total.mean == pytest.approx(pooled.mean(), rel=1e-9, abs=1e-9)
    assert total.m2 == pytest.approx(np.sum((pooled - pooled.mean()) ** 2), rel=1e-8, abs=1e-6)


def test_mc_is_deterministic_and_worker_independent():
    a = mc_estimate(X, TREFOIL, 20_000, seed=7)
    b = mc_estimate(X, TREFOIL, 20_000, seed=7)
    c = mc_estimate(X, TREFOIL, 20_000, seed=7, workers=2)
    d = mc_estimate(X, TREFOIL, 20_000, seed=8)
    assert a.value == b.value == c.value and a.std_error == c.std_error
    assert a.value != d.value


def test_convergence_rows_and_csv(tmp_path):
    est = mc_estimate(X, TREFOIL, 5 * 8192, seed=1, checkpoints=True)
    rows = est.meta["convergence"]
    assert [r["n_samples"] for r in rows] == [8192, 16384, 32768, 40960]
    assert rows[-1]["value"] == est.value
    path = tmp_path / "conv.csv"
    write_convergence_csv(est, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n_samples,value,std_error,rejection_rate" and len(lines) == 5


def test_form_degree_must_fill_the_domain():
    with pytest.raises(DegreeMismatch):
        mc_estimate(KnotGraph(1, 0, ()), TREFOIL, 10)


# -- quadrature -------------------------------------------------------------------

def test_hopf_linking():
    a, b = hopf_pair()
    est = linking_number(a, b)
    assert abs(est.value - 1) < 1e-6
    assert crossing_linking(a, b) == 1
    assert linking_number(a, b.reversed()).value == pytest.approx(-1, abs=1e-6)


def test_distant_circles_do_not_link():
    est = linking_number(circle(), circle(center=(10.0, 0.0, 0.0), normal_axis="y"))
    assert abs(est.value) < 1e-9


def test_torus_link():
    a, b = torus_link_pair()
    assert linking_number(a, b).value == pytest.approx(-2, abs=1e-6)
    assert crossing_linking(a, b) == -2


def test_intersecting_curves_rejected():
    with pytest.raises(CurvesIntersect):
        linking_number(circle(), circle(center=(1.0, 0.0, 0.0)))


def test_self_linking_values():
    assert abs(self_linking(circle()).value) < 1e-8
    est = self_linking(TREFOIL)
    assert est.value == pytest.approx(-3.3541262, abs=1e-6)
    assert est.std_error < 1e-6
    R = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert self_linking(TREFOIL.transformed(R, shift=(1, 2, 3))).value == pytest.approx(
        est.value, abs=1e-9)


def test_self_linking_flips_under_mirror():
    mirror = TREFOIL.transformed(np.diag([1.0, 1.0, -1.0]))
    assert self_linking(mirror).value == pytest.approx(-self_linking(TREFOIL).value, abs=1e-9)


def test_chord_quadrature_frozen():
    assert chord_quadrature(X, TREFOIL).value == pytest.approx(-4.11281, abs=2e-4)
    assert chord_quadrature(X, builtin_knot("figure8")).value == pytest.approx(3.80046,
                                                                               abs=2e-4)


@pytest.mark.parametrize("name", ["trefoil", "figure8"])
def test_chord_patterns_sum_to_squared_writhe(name):
    # over the six cyclic cells, (∫K)² = 2(P₁₂,₃₄ + P₁₄,₂₃ + P₁₃,₂₄) with unsigned cell integrals
    k = builtin_knot(name)
    q = [chord_quadrature(KnotGraph(4, 0, c), k).value
         for c in (((1, 2), (3, 4)), ((1, 4), (2, 3)), ((1, 3), (2, 4)))]
    assert q[0] == pytest.approx(q[1], abs=1e-9)
    assert 2 * (q[0] + q[1] - q[2]) == pytest.approx(self_linking(k).value ** 2, abs=1e-6)


def test_chord_quadrature_on_planar_circle_vanishes():
    assert abs(chord_quadrature(X, circle()).value) < 1e-12


def test_chord_quadrature_errors():
    with pytest.raises(NotChordDiagram):
        chord_quadrature(Y, TREFOIL)


def test_quadrature_agrees_with_mc():
    q = chord_quadrature(X, TREFOIL)
    m = mc_estimate(X, TREFOIL, 200_000, seed=3)
    assert abs(q.value - m.value) <= 3 * np.hypot(q.std_error, m.std_error)
