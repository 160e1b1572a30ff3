"""Scenario documents: validation, task dispatch and report files."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import krylov, metrics, moments, orthopoly, truncation
from .errors import SchemaError
from .measure import SpectralMeasure, discretize

# named functions of the spectral variable usable in scenarios
FUNCTIONS: dict[str, Callable] = {
    "one": lambda x: np.ones_like(x),
    "lambda": lambda x: np.asarray(x, dtype=float),
    "lambda_sq": lambda x: np.asarray(x, dtype=float) ** 2,
    "inv_lambda": lambda x: 1.0 / np.asarray(x, dtype=float),
    "sin_2pi_log": lambda x: np.where(np.asarray(x) > 0,
                                      np.sin(2 * np.pi * np.log(np.where(np.asarray(x) > 0, x, 1.0))),
                                      0.0),
    "exp_neg_abs": lambda x: np.exp(-np.abs(x)),
}

ESTIMATOR_TASKS = ("hamburger", "kint", "weakgap", "truncation")


def load_schema() -> dict:
    text = resources.files("skl").joinpath("schema/scenario.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc: Any) -> dict:
    """Check a scenario document against the schema and the measure constructor."""
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(map(str, e.absolute_path)) or "<root>"
        raise SchemaError(f"{where}: {e.message}")
    return doc


def load_scenario(path: str | os.PathLike) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read scenario: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from exc
    return validate(doc)


# -- serialization ------------------------------------------------------------------

def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


@dataclass
class TaskResult:
    report: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows)


# -- tasks ----------------------------------------------------------------------------

def _func(name: str | None, default: str = "one") -> Callable:
    return FUNCTIONS[name or default]


def _moments(mu, N, source):
    if source == "closed_form":
        return moments.closed_form_moments(mu, N)
    return moments.compute_moments(discretize(mu), N)


def task_moments(mu, p, seed):
    N = p["N"]
    ms = _moments(mu, N, p.get("source", "quadrature"))
    rep = {"N": N, "source": ms.source, "s": ms.s, "log_abs": ms.log_abs, "notes": list(ms.notes)}
    header = ["n", "s_n"]
    rows = [[n, v] for n, v in ms.to_rows()]
    if p.get("oracle", False):
        ref = moments.closed_form_moments(mu, N)
        rel = []
        for n in range(N + 1):
            if ref.sign[n] == 0:
                rel.append(abs(ms.s[n]))
            else:
                rel.append(abs(ms.s[n] - ref.s[n]) / abs(ref.s[n]))
            rows[n] += [ref.s[n], rel[-1]]
        header += ["closed_form", "rel_err"]
        rep["closed_form"] = ref.s
        rep["max_rel_err"] = max(rel)
    return TaskResult(rep, {"moments": (header, rows)})


def task_hamburger(mu, p, seed):
    trials = p.get("trials", 100)
    kmax = p.get("max_atoms", 6)
    N = p.get("N", 10)
    tol = p.get("tol", 1e-10)
    rng = np.random.default_rng(seed)
    base = moments.hankel_psd_check(_moments(mu, N, "quadrature"), tol)
    rows = []
    for t in range(trials):
        k = int(rng.integers(1, kmax + 1))
        x = np.sort(rng.uniform(-2.0, 2.0, k))
        w = rng.uniform(0.1, 1.0, k)
        s = np.array([np.sum(w * x ** n) for n in range(N + 1)])
        rep = moments.hankel_psd_check(moments.MomentSequence.from_values(s), tol)
        rows.append(["atoms", t, k, -1, rep.is_moment_sequence, rep.first_failure_size or 0])
    for t in range(trials):
        k = int(rng.integers(1, kmax + 1))
        x = rng.uniform(-2.0, 2.0, k)
        w = rng.uniform(0.1, 1.0, k)
        s = np.array([np.sum(w * x ** n) for n in range(N + 1)])
        j = int(rng.integers(1, N // 2 + 1))
        s[2 * j] = -abs(s[2 * j]) - rng.uniform(0.1, 1.0)
        rep = moments.hankel_psd_check(moments.MomentSequence.from_values(s), tol)
        rows.append(["perturbed", t, k, j + 1, rep.is_moment_sequence, rep.first_failure_size or 0])
    atoms_ok = all(r[4] for r in rows if r[0] == "atoms")
    pert_ok = all((not r[4]) and r[5] == r[3] for r in rows if r[0] == "perturbed")
    report = {
        "trials": trials, "N": N, "tol": tol,
        "measure_is_moment_sequence": base.is_moment_sequence,
        "measure_min_eigenvalues": base.min_eigenvalues,
        "all_atom_measures_pass": atoms_ok,
        "all_perturbed_fail_at_expected_size": pert_ok,
    }
    header = ["family", "trial", "atoms", "expected_failure_size", "passed", "first_failure_size"]
    return TaskResult(report, {"trials": (header, rows)})


def task_carleman(mu, p, seed):
    ms = _moments(mu, p["N"], p.get("source", "closed_form"))
    cr = moments.carleman(ms, p.get("tol", 1e-8))
    final = float(cr.partial_sums[-1]) if cr.partial_sums.size else 0.0
    report = {"N": p["N"], "source": ms.source, "verdict": cr.verdict, "ratio": cr.ratio,
              "exponent": cr.exponent, "tail_bound": cr.tail_bound, "final_partial_sum": final,
              "limit_estimate": final + cr.tail_bound if cr.verdict == "convergent-tail" else math.inf}
    rows = [[n + 1, t, s] for n, (t, s) in enumerate(zip(cr.terms, cr.partial_sums))]
    return TaskResult(report, {"carleman": (["n", "term", "partial_sum"], rows)})


def task_determinacy(mu, p, seed):
    rc = orthopoly.stieltjes_recurrence(discretize(mu), p["K"])
    z = p.get("z0", [0.0, 1.0])
    dr = orthopoly.determinacy_series_test(rc, complex(z[0], z[1]), p.get("tail_window"),
                                           p.get("tail_tol", 1e-4))
    report = {"K": dr.K, "z0": dr.z0, "ratio": dr.ratio, "tail_bound": dr.tail_bound,
              "trend": dr.trend, "verdict": dr.verdict, "tail_window": dr.tail_window,
              "final_partial_sum": dr.partial_sums[-1], "notice": rc.notice}
    rows = [[k, t, s] for k, (t, s) in enumerate(zip(dr.terms, dr.partial_sums))]
    return TaskResult(report, {"series": (["k", "term", "partial_sum"], rows)})


def reference_beta(kind: str, K: int) -> np.ndarray:
    k = np.arange(1, K, dtype=float)
    if kind == "legendre":
        return k / np.sqrt(4 * k ** 2 - 1)
    if kind == "hermite":
        return np.sqrt(k)
    raise ValueError(f"unknown reference family {kind!r}")


def task_recurrence(mu, p, seed):
    rc = orthopoly.stieltjes_recurrence(discretize(mu), p["K"])
    rows = [list(r) for r in rc.to_rows()]
    header = ["k", "alpha", "beta"]
    report = {"K": rc.K, "alpha": rc.alpha, "beta": rc.beta, "s0": rc.s0,
              "orthogonality_defect": float(rc.cond_log.max()), "notice": rc.notice}
    ref = p.get("reference")
    if ref:
        rb = np.concatenate([[0.0], reference_beta(ref, rc.K)])
        b = np.concatenate([[0.0], rc.beta])
        err = np.abs(b - rb)
        for r, x, e in zip(rows, rb, err):
            r += [x, e]
        header += ["reference_beta", "abs_err"]
        report["reference"] = ref
        report["max_beta_err"] = float(err.max())
        report["max_alpha_err"] = float(np.abs(rc.alpha).max())
    return TaskResult(report, {"recurrence": (header, rows)})


def task_classify(mu, p, seed):
    ms = _moments(mu, p["N"], p.get("source", "closed_form"))
    vc = moments.classify_vector(ms)
    report = {"N": p["N"], "source": ms.source, "verdict": vc.verdict,
              "carleman_verdict": vc.carleman_verdict, "qa_partial_sum": vc.qa_partial_sum,
              "bounded_diag": vc.bounded_diag, "analytic_diag": vc.analytic_diag,
              "finite_horizon_caveat": vc.finite_horizon_caveat}
    rows = [[n, v] for n, v in enumerate(vc.log_norms)]
    return TaskResult(report, {"log_norms": (["n", "log_norm"], rows)})


def task_solve(mu, p, seed):
    space = discretize(mu)
    sr = krylov.solve_krylov(space, _func(p.get("g")), p["m_max"], p.get("tol", 1e-10))
    rel = sr.relative_residuals
    report = {"m_max": p["m_max"], "D": space.D, "tol": sr.tol, "converged": sr.converged,
              "g_norm": sr.g_norm, "residuals": sr.residuals, "relative_residuals": rel,
              "graph_increments": sr.graph_increments,
              "asymptotic_ratio": sr.asymptotic_ratio(),
              "nonincreasing": bool(np.all(np.diff(sr.residuals) <= 1e-14 * sr.residuals[0])),
              "first_degree_below_tol": next((int(m) for m, r in zip(sr.degrees, rel)
                                              if r <= sr.tol), None),
              "gap_at_zero": None if sr.gap_report is None else sr.gap_report.gap_lower_bound,
              "notices": list(sr.notices)}
    return TaskResult(report, {"solvability": (["m", "residual", "graph_increment"],
                                               [list(r) for r in sr.to_rows()])})


def _separation_report(rep: metrics.SeparationReport) -> dict:
    return {"sigma_max": rep.sigma_max, "min_separation": rep.min_separation,
            "gap_to_sqrt2": metrics.SQRT2 - rep.min_separation,
            "trivial_intersection_indicated": rep.trivial_intersection_indicated,
            "threshold": rep.threshold, "degenerate": rep.degenerate, "meta": rep.meta,
            "sampled_range": rep.sampled_range}


def task_kint(mu, p, seed):
    space = discretize(mu)
    g = _func(p.get("g"))
    threshold = p.get("threshold", metrics.KINT_THRESHOLD)
    if p["M_big"] > space.D - 1:
        rep = metrics.kint_degenerate_check(space, g, p["m"], threshold)
    else:
        rep = metrics.kint_indicator(space, g, p["m"], p["M_big"], threshold,
                                     p.get("samples", 32), seed)
    rows = [[i, v] for i, v in enumerate(rep.sampled_range)]
    report = _separation_report(rep)
    if "plane_angle" in p:
        report["plane_check"] = plane_check(p["plane_angle"], seed)
    return TaskResult(report, {"sampled_range": (["sample", "separation"], rows)})


def plane_check(theta: float, seed: int = 0) -> dict:
    """Two lines at angle theta in a two-node space with unit weights."""
    from .measure import DiscretizedSpace

    plane = DiscretizedSpace.from_arrays([1.0, 2.0], [1.0, 1.0])
    M = krylov.frame_from_vectors(plane, np.array([1.0, 0.0]))
    N = krylov.frame_from_vectors(plane, np.array([math.cos(theta), math.sin(theta)]))
    rep = metrics.separation_range(M, N, 16, seed)
    expected = math.sqrt(2.0 * (1.0 - abs(math.cos(theta))))
    return {"theta": theta, "sigma_max": rep.sigma_max, "min_separation": rep.min_separation,
            "expected": expected, "abs_err": abs(rep.min_separation - expected)}


def task_core(mu, p, seed):
    space = discretize(mu)
    g = _func(p.get("g"))
    tests = p.get("tests", ["inv_lambda"])
    cg = krylov.core_condition_gap(space, g, p["m"], {t: FUNCTIONS[t] for t in tests})
    report = {"m": p["m"], "D": space.D, "tests": {}}
    rows = []
    for t in tests:
        rel = cg.relative(t)
        report["tests"][t] = {"relative_residuals": rel, "final": float(rel[-1])}
        rows += [[t, int(j), float(r)] for j, r in zip(cg.degrees, rel)]
    tables = {"core_gap": (["test", "degree", "relative_residual"], rows)}
    if p.get("witness"):
        h = space.values(FUNCTIONS[p["witness"]])
        n_max = p.get("n_max", 12)
        wrows, worst = [], 0.0
        for n in range(n_max + 1):
            pn = space.nodes ** n
            amb = abs(space.inner(pn, h)) / (space.norm(pn) * space.norm(h))
            gr = abs(space.inner(pn, h, "graph")) / (space.norm(pn, "graph") * space.norm(h, "graph"))
            worst = max(worst, amb, gr)
            wrows.append([n, amb, gr])
        report["witness"] = {"name": p["witness"], "n_max": n_max, "max_relative_inner": worst}
        tables["witness"] = (["n", "ambient_rel", "graph_rel"], wrows)
    return TaskResult(report, tables)


def _frame(space, spec, probes, rng_seed):
    kind = spec["type"]
    if kind == "probes":
        return krylov.frame_from_vectors(space, probes.basis[:, spec["indices"]])
    if kind == "krylov":
        return krylov.krylov_frame(space, _func(spec.get("g")), spec["degree"])
    rng = np.random.default_rng(spec.get("seed", rng_seed))
    return krylov.frame_from_vectors(space, rng.standard_normal((space.D, spec["dim"])))


def grid_oracle_1d(u, v, probes, n=20001):
    """Brute-force d_w between the unit balls of two lines: dense grids on both coefficients."""
    cu = probes.coefficients(u)
    cv = probes.coefficients(v)
    w = 0.5 ** np.arange(1, cu.size + 1)
    b = np.linspace(-1.0, 1.0, n)
    best = 0.0
    for a in (1.0, -1.0):
        vals = np.abs(a * cu[:, None] - cv[:, None] * b[None, :]).T @ w
        best = max(best, float(vals.min()))
    return best


def task_weakgap(mu, p, seed):
    space = discretize(mu)
    probes = metrics.probe_frame(space)
    samples = p.get("samples", 8)
    tol = p.get("inner_tol", 1e-6)
    if p.get("mode", "pair") == "pair":
        C = _frame(space, p.get("C", {"type": "probes", "indices": [0]}), probes, seed)
        Dfr = _frame(space, p.get("D", {"type": "krylov", "degree": 1}), probes, seed + 1)
        est = metrics.dw_estimate(C, Dfr, probes, samples, tol, seed)
        report = {"mode": "pair", "D": space.D, "dim_C": C.dim, "dim_D": Dfr.dim,
                  **{k: getattr(est, k) for k in ("dw_CD", "dw_DC", "dhat", "samples", "inner_tol",
                                                  "seed", "max_inner_gap", "n_probes")}}
        return TaskResult(report, {"estimate": (["quantity", "value"],
                                                [["dw_CD", est.dw_CD], ["dw_DC", est.dw_DC],
                                                 ["dhat", est.dhat]])})
    rng = np.random.default_rng(seed)
    kmax = min(p.get("max_dim", 3), space.D - 1)

    def rand_frame(k):
        return krylov.frame_from_vectors(space, rng.standard_normal((space.D, k)))

    def est(a, b):
        return metrics.dw_estimate(a, b, probes, samples, tol, seed)

    rows = []
    C = rand_frame(int(rng.integers(1, kmax + 1)))
    self_d = est(C, C).dhat
    rows.append(["self", 0, self_d, 0.0])
    sub = rand_frame(int(rng.integers(1, kmax + 1)))
    sup = krylov.frame_from_vectors(space, np.column_stack([sub.basis, rng.standard_normal(space.D)]))
    nested = est(sub, sup).dw_CD
    rows.append(["nested", 0, nested, 0.0])
    worst = -math.inf
    for t in range(p.get("triples", 50)):
        A, B, E = (rand_frame(int(rng.integers(1, kmax + 1))) for _ in range(3))
        ab, be, ae = est(A, B).dhat, est(B, E).dhat, est(A, E).dhat
        excess = ae - ab - be
        worst = max(worst, excess)
        rows.append(["triangle", t, ae, ab + be])
    oracle_err = 0.0
    for t in range(5):
        u, v = rand_frame(1), rand_frame(1)
        e = est(u, v).dw_CD
        o = grid_oracle_1d(u.basis[:, 0], v.basis[:, 0], probes)
        oracle_err = max(oracle_err, abs(e - o))
        rows.append(["oracle", t, e, o])
    report = {"mode": "properties", "D": space.D, "samples": samples, "inner_tol": tol,
              "seed": seed, "self_distance": self_d, "nested_distance": nested,
              "triangle_worst_excess": worst, "triangle_ok": bool(worst <= 3 * tol),
              "oracle_max_abs_err": oracle_err}
    return TaskResult(report, {"checks": (["check", "index", "value", "reference"], rows)})


def task_truncation(mu, p, seed):
    panel = {name: FUNCTIONS[name] for name in p.get("panel", ["one"])}
    st = truncation.run_truncation_study(
        mu, 1.0, p["n_grid"], p.get("m"), panel,
        {"samples": p.get("samples", 8), "seed": seed, "inner_tol": p.get("inner_tol", 1e-6)},
        p.get("piece_nodes", 24))
    report = {"D": st.D, "n_grid": st.n_grid, "degree": st.degree,
              "mass_captured": st.mass_captured, "graph_norm_gap": st.graph_norm_gap,
              "nesting_residual": st.nesting_residual, "l_residual": st.l_residual,
              "dhat_to_L": st.dhat_to_L, "complement_dhat": st.complement_dhat,
              "complement_dim": st.complement_dim,
              "projection_errors": st.projection_errors, "tail_bounds": st.tail_bounds,
              "projection_identity_gap": st.projection_identity_gap,
              "verdicts": st.verdicts, "notices": st.notices, "weak_gap_params": st.weak_gap_params}
    tables = {"truncation": (["n", "m", "mass_captured", "graph_norm_gap", "nesting_residual",
                              "dhat_to_L", "complement_dhat"], [list(r) for r in st.rows()])}
    prow = []
    for name in panel:
        for n, e, b in zip(st.n_grid, st.projection_errors[name], st.tail_bounds[name]):
            prow.append([name, n, e, b])
    tables["projection_errors"] = (["vector", "n", "error", "tail_bound"], prow)
    polys = p.get("polynomials")
    if polys and st.n_grid:
        from .measure import refine
        space = discretize(refine(mu, [c for n in st.n_grid for c in (-n, n)],
                                  p.get("piece_nodes", 24) if mu.ac else None))
        tabs = truncation.monotone_norm_check(space, 1.0, st.n_grid, polys)
        report["norm_monotonicity"] = {k: {"h_norms": t.h_norms, "a_norms": t.a_norms,
                                           "full_h": t.full_h, "full_a": t.full_a,
                                           "bounded": t.bounded, "final_gap": t.final_gap}
                                       for k, t in tabs.items()}
        tables["norms"] = (["poly", "n", "h_norm", "a_norm"],
                           [[k, n, h, a] for k, t in tabs.items()
                            for n, h, a in zip(t.n_grid, t.h_norms, t.a_norms)])
    return TaskResult(report, tables)


TASKS = {
    "moments": task_moments,
    "hamburger": task_hamburger,
    "carleman": task_carleman,
    "determinacy": task_determinacy,
    "recurrence": task_recurrence,
    "classify": task_classify,
    "solve": task_solve,
    "kint": task_kint,
    "core": task_core,
    "weakgap": task_weakgap,
    "truncation": task_truncation,
}


def execute(doc: dict, seed: int | None = None) -> TaskResult:
    """Validate and run a scenario in memory."""
    doc = validate(dict(doc) if seed is None else {**doc, "seed": int(seed)})
    mu = SpectralMeasure.from_dict(doc["measure"])
    result = TASKS[doc["task"]](mu, doc.get("params", {}), doc.get("seed", 0))
    result.report = {"scenario": doc["name"], "task": doc["task"], "seed": doc.get("seed"),
                     "measure": mu.to_dict(), "params": doc.get("params", {}),
                     "result": result.report}
    return result


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                    for v in jsonable(r)])
    return buf.getvalue()


def run_scenario(doc: dict, out_root: str | os.PathLike, seed: int | None = None,
                 figures: bool = False, meta: dict | None = None) -> Path:
    """Run a scenario and write ``<out_root>/<name>/`` atomically.

    The directory holds ``report.json`` (deterministic), one CSV per table,
    ``meta.json`` (timestamp and environment, excluded from determinism) and
    optional PNG figures. Everything is staged in a temporary directory and
    moved into place only on success.
    """
    result = execute(doc, seed)
    name = result.report["scenario"]
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    final = root / name
    stage = Path(tempfile.mkdtemp(prefix=f".{name}.", dir=root))
    try:
        (stage / "report.json").write_text(dumps(result.report), encoding="utf-8")
        want_csv = doc.get("output", {}).get("csv", True)
        if want_csv:
            for tname, (header, rows) in result.tables.items():
                (stage / f"{tname}.csv").write_text(_csv_text(header, rows), encoding="utf-8")
        if figures or doc.get("output", {}).get("figures", False):
            from .plotting import render_tables
            render_tables(result.tables, stage / "figures", name)
        (stage / "meta.json").write_text(json.dumps(jsonable(meta or {}), sort_keys=True, indent=2)
                                         + "\n", encoding="utf-8")
        if final.exists():
            shutil.rmtree(final)
        os.replace(stage, final)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    return final
