"""Acceptance criteria 1-11, each checked against an independent oracle.

Criteria 1-10 read the reports written by the first of two full preset runs;
criterion 11 compares the two runs byte for byte.
"""
import json
import math

import mpmath
import numpy as np
import pytest
from scipy import integrate as sint
from scipy import stats

from conftest import record
from skl.presets import list_presets

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def reports(preset_runs):
    (root, _), codes = preset_runs
    assert codes[0][0] == 0, codes[0][1]

    def load(name):
        return json.loads((root / name / "report.json").read_text())["result"]
    return load


def double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def mp_series_terms(s, K):
    """|p_k(i)|^2, k < K, from a 300-digit Cholesky factor of the Hankel matrix of ``s``."""
    with mpmath.workdps(300):
        H = mpmath.matrix(K, K)
        for i in range(K):
            for j in range(K):
                H[i, j] = s(i + j)
        Linv = mpmath.inverse(mpmath.cholesky(H))
        out = []
        for k in range(K):
            val = mpmath.fsum(Linv[k, j] * mpmath.mpc(0, 1) ** j for j in range(k + 1))
            out.append(abs(val) ** 2)
    return out


def fitted_ratio(terms, window):
    tail = np.log([float(t) for t in terms[-window:]])
    return math.exp(np.polyfit(np.arange(window), tail, 1)[0])


def test_criterion_01_moment_fidelity(reports):
    g = reports("gaussian_moments")["s"]
    ln = reports("lognormal_moments")["s"]
    g_err = max(abs(g[2 * n] - double_factorial(2 * n - 1)) / double_factorial(2 * n - 1)
                for n in range(11))
    ln_err = max(abs(ln[n] - math.exp(n * n / 2)) / math.exp(n * n / 2) for n in range(11))
    # adaptive quadrature in log space as a second oracle
    quad_err = 0.0
    for n in range(11):
        ref, _ = sint.quad(lambda y: math.exp(n * y) * stats.norm.pdf(y), -40, 60,
                           points=[n], limit=500, epsrel=1e-13)
        quad_err = max(quad_err, abs(ln[n] - ref) / ref)
    ok = g_err <= 1e-8 and ln_err <= 1e-8 and quad_err <= 1e-8
    assert record(1, "moment fidelity", ok,
                  f"gauss {g_err:.1e}, lognormal {ln_err:.1e}, vs quad {quad_err:.1e}")


def test_criterion_02_hamburger(reports):
    r = reports("hamburger_random")
    ok = (r["trials"] == 100 and r["all_atom_measures_pass"]
          and r["all_perturbed_fail_at_expected_size"])
    assert record(2, "Hamburger existence", ok, f"{r['trials']} trials each way")


def test_criterion_03_carleman(reports):
    ln = reports("lognormal_carleman")
    g = reports("gaussian_carleman")
    err = abs(ln["final_partial_sum"] - 1 / (math.e - 1))
    ok = (ln["verdict"] == "convergent-tail" and err <= 1e-6
          and g["verdict"] == "satisfied-at-horizon" and g["final_partial_sum"] > 100
          and g["N"] // 2 >= 10 ** 4)
    assert record(3, "Carleman dichotomy", ok,
                  f"lognormal err {err:.1e}, gaussian sum {g['final_partial_sum']:.1f}")


def test_criterion_04_determinacy(reports):
    g = reports("gaussian_determinacy")
    ln = reports("lognormal_determinacy")
    g_ref = fitted_ratio(mp_series_terms(lambda n: 0 if n % 2 else double_factorial(n - 1), 40),
                         g["tail_window"])
    ln_ref = fitted_ratio(mp_series_terms(lambda n: mpmath.e ** (mpmath.mpf(n) ** 2 / 2), 12),
                          ln["tail_window"])
    g_rel = abs(g["ratio"] - g_ref) / g_ref
    ln_rel = abs(ln["ratio"] - ln_ref) / ln_ref
    ok = (g["trend"] == "divergent-trend" and ln["trend"] == "convergent-tail"
          and g_rel <= 0.1 and ln_rel <= 0.1)
    assert record(4, "determinacy surrogate", ok,
                  f"ratio rel err gauss {g_rel:.1e}, lognormal {ln_rel:.1e}")


def test_criterion_05_recurrences(reports):
    k = np.arange(1, 20)
    leg = np.max(np.abs(np.array(reports("legendre_recurrence")["beta"][:19])
                        - k / np.sqrt(4 * k * k - 1)))
    her = np.max(np.abs(np.array(reports("hermite_recurrence")["beta"][:19]) - np.sqrt(k)))
    ok = leg <= 1e-10 and her <= 1e-10
    assert record(5, "classical recurrences", ok, f"legendre {leg:.1e}, hermite {her:.1e}")


def test_criterion_06_solvability(reports):
    r = reports("uniform12_solve")
    rel = np.array(r["relative_residuals"])
    res = np.array(r["residuals"])
    cheb = (SQRT2 - 1) / (SQRT2 + 1)
    ok = (rel[15] <= 1e-10 and r["asymptotic_ratio"] <= 0.2 and bool(np.all(np.diff(res) <= 0.0)))
    assert record(6, "Krylov solvability", ok,
                  f"residual(15) {rel[15]:.1e}, ratio {r['asymptotic_ratio']:.4f} "
                  f"vs Chebyshev {cheb:.4f}")


def test_criterion_07_kint(reports):
    r = reports("uniform12_kint")
    pc = r["plane_check"]
    expected = math.sqrt(2 * (1 - math.cos(pc["theta"])))
    err = abs(pc["min_separation"] - expected)
    ok = (r["meta"]["D"] == 64 and r["min_separation"] >= SQRT2 - 1e-6 and err <= 1e-10)
    assert record(7, "Krylov-intersection indicator", ok,
                  f"sqrt2 - min_sep {SQRT2 - r['min_separation']:.1e}, plane err {err:.1e}")


def test_criterion_08_witness(reports):
    w = reports("lognormal_witness")
    u = reports("uniform12_core")
    inner = w["witness"]["max_relative_inner"]
    flat = min(w["tests"]["sin_2pi_log"]["relative_residuals"])
    decay = u["tests"]["inv_lambda"]["final"]
    ok = inner <= 1e-6 and w["witness"]["n_max"] >= 12 and flat >= 1 - 1e-6 and decay <= 1e-8
    assert record(8, "indeterminate witness", ok,
                  f"max rel inner {inner:.1e}, witness residual {flat:.6f}, uniform {decay:.1e}")


def test_criterion_09_truncation(reports):
    r = reports("gaussian_truncation")
    tails = [2 * stats.norm.sf(n) for n in r["n_grid"]]
    err2 = max(abs(e * e - t) for e, t in zip(r["projection_errors"]["one"], tails))
    nest = max(r["nesting_residual"])
    tol = 3 * r["weak_gap_params"]["inner_tol"]
    dh = r["dhat_to_L"]
    dh_ok = all(b <= a + tol for a, b in zip(dh, dh[1:]))
    mono = all(t["bounded"] and all(b >= a for a, b in zip(t["h_norms"], t["h_norms"][1:]))
               and all(b >= a for a, b in zip(t["a_norms"], t["a_norms"][1:]))
               for t in r["norm_monotonicity"].values())
    ok = err2 <= 1e-3 and nest <= 1e-8 and dh_ok and mono
    assert record(9, "truncation program", ok,
                  f"errors^2 vs tails {err2:.1e}, nesting {nest:.1e}, dhat "
                  + ", ".join(f"{v:.4f}" for v in dh))


def test_criterion_10_weak_gap(reports):
    r = reports("weakgap_properties")
    tol = r["inner_tol"]
    ok = (r["D"] <= 8 and r["self_distance"] <= 1e-6 and r["nested_distance"] <= 1e-6
          and r["triangle_worst_excess"] <= 3 * tol and r["oracle_max_abs_err"] <= 1e-3)
    assert record(10, "weak-gap metric properties", ok,
                  f"self {r['self_distance']:.1e}, nested {r['nested_distance']:.1e}, "
                  f"triangle excess {r['triangle_worst_excess']:.2e}, "
                  f"oracle {r['oracle_max_abs_err']:.1e}")


def test_criterion_11_determinism(preset_runs):
    roots, codes = preset_runs
    names = [n for n, _ in list_presets()]
    differ = [n for n in names
              if (roots[0] / n / "report.json").read_bytes()
              != (roots[1] / n / "report.json").read_bytes()]
    ok = all(c == 0 for c, _ in codes) and not differ
    assert record(11, "determinism", ok,
                  f"{len(names) - len(differ)}/{len(names)} presets byte-identical")
