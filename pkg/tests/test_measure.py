import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint
from scipy import stats

from skl.errors import EmptyTruncationError, EvaluationError, MeasureError, NodeCollisionError
from skl.measure import (
    AcPart,
    DiscretizedSpace,
    SpectralMeasure,
    atomic,
    discretize,
    gaussian,
    integrate,
    lognormal,
    refine,
    spectral_gap_at_zero,
    truncate,
    uniform,
)
from skl.quadrature import normal_mass, standard_normal_rule


def test_uniform_moments_exact():
    sp = discretize(uniform(0.0, 1.0, nodes=16))
    for n in range(12):
        assert math.isclose(sp.inner(sp.ones(), sp.nodes ** n), 1.0 / (n + 1), rel_tol=1e-14)


def test_lognormal_second_moment_matches_quad():
    mu = lognormal()
    ref, _ = sint.quad(lambda x: x ** 2 * stats.lognorm.pdf(x, 1.0), 0, np.inf, limit=200)
    assert math.isclose(integrate(mu, lambda x: x ** 2), ref, rel_tol=1e-8)


def test_truncated_gaussian_mass():
    mu = truncate(gaussian(), 1.0)
    assert math.isclose(mu.total_mass, math.erf(1 / math.sqrt(2)), rel_tol=1e-14)
    sp = discretize(mu)
    assert math.isclose(float(np.sum(sp.weights)), math.erf(1 / math.sqrt(2)), rel_tol=1e-12)


def test_refined_gaussian_tail_mass():
    sp = discretize(refine(gaussian(), [-1, 1], nodes=24))
    tail = math.fsum(sp.weights[~sp.mask(1.0)])
    assert math.isclose(tail, 2 * stats.norm.sf(1.0), rel_tol=1e-10)


def test_normal_mass_far_tail():
    assert math.isclose(normal_mass(10.0, math.inf), stats.norm.sf(10.0), rel_tol=1e-12)


def test_half_line_rule_integrates_density():
    z, w, _ = standard_normal_rule(2.0, math.inf, 64)
    assert np.all(z > 2.0)
    assert math.isclose(w.sum(), stats.norm.sf(2.0), rel_tol=1e-8)


def test_json_round_trip():
    doc = ('{"atoms": [{"x": 0.5, "w": 0.25}], '
           '"ac": [{"kind": "gaussian", "support": ["-inf", 3], "params": {"std": 2}, "nodes": 40}]}')
    mu = SpectralMeasure.from_json(doc)
    again = SpectralMeasure.from_json(mu.to_json())
    assert again.to_dict() == mu.to_dict()
    assert again.to_json() == mu.to_json()


@pytest.mark.parametrize("bad", [
    {"atoms": [{"x": 1, "w": 0}]},
    {"atoms": [{"x": 1, "w": 1}, {"x": 1, "w": 2}]},
    {"ac": [{"kind": "uniform", "support": [1, 1], "nodes": 4}]},
    {"ac": [{"kind": "uniform", "support": [0, "inf"], "nodes": 4}]},
    {"ac": [{"kind": "triangle", "support": [0, 1], "nodes": 4}]},
    {"ac": [{"kind": "custom_poly_density", "support": [0, 1], "params": {"coeffs": [-1]}, "nodes": 4}]},
    {"ac": [{"kind": "lognormal", "support": [-1, "inf"], "nodes": 4}]},
])
def test_invalid_measures_rejected(bad):
    with pytest.raises(MeasureError):
        SpectralMeasure.from_dict(bad)


def test_empty_truncation():
    with pytest.raises(EmptyTruncationError):
        truncate(atomic([2.0, 3.0], [1.0, 1.0]), 1.0)


def test_node_collision():
    mu = SpectralMeasure((), (AcPart("uniform", (0, 1), None, 3), AcPart("uniform", (0, 1), None, 3)))
    with pytest.raises(NodeCollisionError):
        discretize(mu)


def test_values_reports_bad_node():
    sp = discretize(atomic([0.0, 1.0], [1.0, 1.0]))
    with pytest.raises(EvaluationError, match="lambda = 0.0"):
        with np.errstate(divide="ignore"):
            sp.values(lambda x: 1.0 / x)


def test_space_validation():
    with pytest.raises(MeasureError):
        DiscretizedSpace(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(MeasureError):
        DiscretizedSpace(np.array([0.0, 1.0]), np.array([1.0, 0.0]))


def test_gap_at_zero():
    assert spectral_gap_at_zero(uniform(1, 2)).gap_lower_bound == 1.0
    assert not spectral_gap_at_zero(gaussian()).zero_in_resolvent


def test_symmetry():
    assert gaussian().is_symmetric()
    assert not lognormal().is_symmetric()


atom_lists = st.lists(
    st.tuples(st.floats(-5, 5, allow_nan=False), st.floats(0.01, 3.0)),
    min_size=1, max_size=6, unique_by=lambda t: t[0])


@given(atom_lists)
@settings(max_examples=60, deadline=None)
def test_atomic_round_trip_and_mass(atoms):
    xs, ws = zip(*atoms)
    mu = atomic(xs, ws)
    assert SpectralMeasure.from_json(mu.to_json()).to_dict() == mu.to_dict()
    assert math.isclose(mu.total_mass, math.fsum(ws), rel_tol=1e-14)
    sp = discretize(mu)
    assert np.all(np.diff(sp.nodes) > 0)


@given(st.floats(-3, 3), st.floats(0.1, 4), st.integers(2, 40))
@settings(max_examples=40, deadline=None)
def test_uniform_integration_linear(a, width, n):
    mu = uniform(a, a + width, nodes=n)
    f = lambda x: x ** 2 - 3 * x
    g = lambda x: np.cos(x)
    lhs = integrate(mu, lambda x: 2 * f(x) + g(x))
    rhs = 2 * integrate(mu, f) + integrate(mu, g)
    assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-12)


def test_integrate_examples():
    assert math.isclose(integrate(uniform(0.0, 1.0), lambda x: x), 0.5, rel_tol=1e-14)
    assert math.isclose(integrate(lognormal(), lambda x: x ** 2), math.e ** 2, rel_tol=1e-10)


def test_gauss_exactness_to_degree_31():
    sp = discretize(uniform(0.0, 1.0, nodes=16))
    for n in range(32):
        assert math.isclose(math.fsum(sp.weights * sp.nodes ** n), 1.0 / (n + 1), rel_tol=1e-12)


def test_projection_tail_needs_breakpoint():
    from skl.krylov import truncation_projection
    ref = 1 - math.erf(1 / math.sqrt(2))
    # a plain Gauss-Hermite rule smears the indicator of [-1, 1]
    plain = discretize(gaussian(nodes=64))
    v = plain.ones()
    assert abs(plain.norm(truncation_projection(plain, v, 1.0) - v) ** 2 - ref) > 0.05
    sp = discretize(refine(gaussian(nodes=64), [-1, 1], nodes=21))
    assert sp.D <= 64
    v = sp.ones()
    assert math.isclose(sp.norm(truncation_projection(sp, v, 1.0) - v) ** 2, ref, rel_tol=1e-10)
