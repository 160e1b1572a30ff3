import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from skl.measure import atomic, discretize, gaussian, refine, uniform
from skl.truncation import lspace_frame, monotone_norm_check, run_truncation_study

TAILS = [2 * stats.norm.sf(n) for n in (1, 2, 3, 4)]


@pytest.fixture(scope="module")
def gauss_study():
    return run_truncation_study(gaussian(), 1.0, (1, 2, 3, 4), None,
                                {"one": lambda x: np.ones_like(x)})


def test_projection_errors_match_tail_mass(gauss_study):
    errs = np.array(gauss_study.projection_errors["one"]) ** 2
    assert np.max(np.abs(errs - TAILS)) < 1e-3
    # sharper than the acceptance tolerance
    assert np.max(np.abs(errs - TAILS)) < 1e-10
    assert np.allclose(errs, [0.3173, 0.0455, 0.0027, 6.3e-5], atol=1e-3)


def test_gaussian_study_verdicts(gauss_study):
    st_ = gauss_study
    assert all(st_.verdicts.values()), st_.verdicts
    assert max(st_.nesting_residual) <= 1e-8
    assert np.all(np.diff(st_.mass_captured) >= 0)
    assert math.isclose(st_.mass_captured[0], special.erf(1 / math.sqrt(2)), rel_tol=1e-10)
    tol = 3 * st_.weak_gap_params["inner_tol"]
    assert np.all(np.diff(st_.dhat_to_L) <= tol)


def test_tail_bounds_independent(gauss_study):
    assert np.allclose(gauss_study.tail_bounds["one"], np.sqrt(TAILS), rtol=1e-8)


def test_uniform_study_small_space():
    st_ = run_truncation_study(uniform(-1.0, 1.0, nodes=1), 1.0, (0.25, 0.5, 1.0), 4, None,
                               None, piece_nodes=1)
    assert st_.D <= 8
    assert all(st_.verdicts.values()), st_.verdicts


def test_empty_step_is_skipped():
    st_ = run_truncation_study(atomic([0.5, 2.0], [1.0, 1.0]), 1.0, (0.25, 1.0, 3.0))
    assert any("empty truncation" in n for n in st_.notices)
    assert all(st_.verdicts.values())


def test_lspace_frame_gram():
    sp = discretize(uniform(0.0, 1.0, nodes=6))
    for ip in ("ambient", "graph"):
        L = lspace_frame(sp, ip)
        assert L.dim == sp.D
        assert L.gram_defect() < 1e-13


def test_norm_monotonicity_gaussian_constant():
    sp = discretize(refine(gaussian(), [-1, 1, -2, 2, -3, 3], nodes=24))
    tab = monotone_norm_check(sp, 1.0, (1, 2, 3), {"one": [1.0]})["one"]
    assert tab.bounded
    assert np.all(np.diff(tab.h_norms) >= 0) and np.all(np.diff(tab.a_norms) >= 0)
    for n, h in zip((1, 2, 3), tab.h_norms):
        assert math.isclose(h, math.sqrt(special.erf(n / math.sqrt(2))), rel_tol=1e-10)


def test_norm_monotonicity_uniform_lambda_sq():
    sp = discretize(uniform(-1.0, 1.0, nodes=16))
    tab = monotone_norm_check(sp, 1.0, (2.0,), {"sq": [0.0, 0.0, 1.0]})["sq"]
    # E[x^4] = 1/5 on uniform[-1, 1]
    assert math.isclose(tab.full_h, math.sqrt(0.2), rel_tol=1e-14)
    assert tab.h_norms[-1] == tab.full_h
    assert tab.final_gap == 0.0


@given(st.lists(st.floats(0.05, 5.0), min_size=1, max_size=6),
       st.lists(st.floats(-2, 2), min_size=1, max_size=4))
@settings(max_examples=60, deadline=None)
def test_truncated_norms_nondecreasing(grid, coeffs):
    sp = discretize(uniform(-3.0, 3.0, nodes=24))
    grid = sorted(grid)
    tab = monotone_norm_check(sp, 1.0, grid, {"p": coeffs})["p"]
    assert tab.bounded
    assert all(b >= a for a, b in zip(tab.h_norms, tab.h_norms[1:]))
    assert all(b >= a for a, b in zip(tab.a_norms, tab.a_norms[1:]))
