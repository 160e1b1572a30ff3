"""Separation range, Krylov-intersection indicator and weak-gap estimators."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

from ._linalg import complement, lanczos
from .krylov import (
    SubspaceFrame,
    apply_A,
    frame_from_vectors,
    graph_complement_frame,
    krylov_frame,
    projection_residual,
)
from .measure import DiscretizedSpace

SQRT2 = math.sqrt(2.0)
KINT_THRESHOLD = SQRT2 - 1e-3


@dataclass(frozen=True)
class SeparationReport:
    sigma_max: float
    min_separation: float
    sampled_range: list
    trivial_intersection_indicated: bool
    threshold: float
    degenerate: bool = False
    meta: dict = field(default_factory=dict)


def _separations(Ym, Yn, A):
    """Separation of each unit vector Yn @ a (columns of A) from the unit sphere of M."""
    V = Yn @ A
    PV = Ym @ (Ym.conj().T @ V)
    p = np.linalg.norm(PV, axis=0)
    q2 = np.linalg.norm(V - PV, axis=0) ** 2
    # 2 (1 - p) written without cancellation
    return np.sqrt(2.0 * q2 / (1.0 + p))


def separation_range(M: SubspaceFrame, N: SubspaceFrame, samples: int = 64, seed: int = 0,
                     threshold: float = 1e-8) -> SeparationReport:
    """Range of distances from unit vectors of N to the unit sphere of M.

    ``sigma_max`` is the largest singular value of the cross-Gram matrix of
    the two orthonormal frames (the cosine of the smallest principal angle)
    and the smallest separation is ``sqrt(2 (1 - sigma_max))``.
    """
    if M.space is not N.space:
        raise ValueError("frames live on different spaces")
    if M.ip != "ambient" or N.ip != "ambient":
        raise ValueError("separation range uses ambient-orthonormal frames")
    if M.dim == 0 or N.dim == 0:
        raise ValueError("separation range of a zero frame is undefined")
    Ym, Yn = M.scaled(), N.scaled()
    C = Ym.conj().T @ Yn
    _, sv, Vh = np.linalg.svd(C)
    sigma = min(float(sv[0]), 1.0)
    if sigma > 0.7:
        s = np.linalg.svd(Yn - Ym @ C, compute_uv=False)
        theta = math.asin(min(float(s[-1]), 1.0))
    else:
        theta = math.acos(sigma)
    min_sep = 2.0 * math.sin(theta / 2.0)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N.dim, samples))
    A /= np.linalg.norm(A, axis=0)
    A = np.column_stack([Vh[0].conj(), A])
    sampled = [float(v) for v in _separations(Ym, Yn, A)]
    sampled[0] = min(sampled[0], min_sep)
    return SeparationReport(math.cos(theta), min_sep, sampled, min_sep > threshold, threshold)


def kint_indicator(space: DiscretizedSpace, g_rep, m: int, M_big: int,
                   threshold: float = KINT_THRESHOLD, samples: int = 32,
                   seed: int = 0) -> SeparationReport:
    """Separation between K_m and A applied to the graph complement of K_{M_big}.

    The graph-orthogonal complement of the degree-``M_big`` graph Krylov frame
    inside the discretized space stands in for the complement of the whole
    Krylov space. Both sides are orthonormalized in the ambient inner product.
    """
    if not m < M_big <= space.D - 1:
        raise ValueError(f"need m < M_big <= D-1, got m={m}, M_big={M_big}, D={space.D}")
    meta = {"D": space.D, "m": m, "M_big": M_big}
    Km = krylov_frame(space, g_rep, m, "ambient")
    Kbig = krylov_frame(space, g_rep, M_big, "graph")
    comp = graph_complement_frame(space, Kbig)
    meta["complement_dim"] = comp.dim
    if comp.dim == 0:
        return SeparationReport(math.nan, math.nan, [], False, threshold, True, meta)
    N = frame_from_vectors(space, apply_A(space, comp), "ambient")
    if N.dim == 0:
        return SeparationReport(math.nan, math.nan, [], False, threshold, True, meta)
    rep = separation_range(Km, N, samples, seed, threshold)
    return SeparationReport(rep.sigma_max, rep.min_separation, rep.sampled_range,
                            rep.min_separation >= threshold, threshold, False, meta)


def kint_degenerate_check(space: DiscretizedSpace, g_rep, m: int, threshold=KINT_THRESHOLD):
    """Degenerate report when no room is left for a complement (M_big would exceed D-1)."""
    meta = {"D": space.D, "m": m, "M_big": None, "complement_dim": 0}
    return SeparationReport(math.nan, math.nan, [], False, threshold, True, meta)


# -- weak norm -------------------------------------------------------------------

MAX_PROBES = 60  # 2**-61 is below double-precision resolution of any weak norm


def probe_frame(space: DiscretizedSpace) -> SubspaceFrame:
    """Orthonormal polynomials of the space in degree order, completed to a full basis."""
    Q, _, _, _ = lanczos(space.nodes, space.weights, np.ones(space.D), space.D)
    Y = np.column_stack([Q, complement(Q)])
    return SubspaceFrame(space, Y / np.sqrt(space.weights)[:, None], "ambient")


def _weights(n: int) -> np.ndarray:
    return 0.5 ** np.arange(1, n + 1)


def _check_probes(probes: SubspaceFrame):
    if probes.ip != "ambient":
        raise ValueError("probes must be ambient-orthonormal")
    cached = probes.__dict__.get("_probe_defect")
    if cached is None:
        cached = probes.gram_defect()
        probes.__dict__["_probe_defect"] = cached
    if cached > 1e-8:
        raise ValueError(f"probe frame is not orthonormal (defect {cached:.2e})")


def weak_norm(x, probes: SubspaceFrame) -> float:
    """sum_n 2**-(n+1) |<v_n, x>| over the probe sequence v_0, v_1, ..."""
    _check_probes(probes)
    coef = probes.coefficients(np.asarray(x))
    return math.fsum(_weights(coef.size) * np.abs(coef))


@dataclass(frozen=True)
class WeakGapEstimate:
    dw_CD: float
    dw_DC: float
    dhat: float
    samples: int
    inner_tol: float
    seed: int
    max_inner_gap: float = 0.0
    n_probes: int = 0


def _objective(t, P, c, b):
    return float(np.sum(c * np.abs(t - P @ b)))


def _ball(b):
    nb = np.linalg.norm(b)
    return b / nb if nb > 1.0 else b


def _inner_slsqp(t, P, c, b0):
    """Smooth reformulation: min c.s subject to |t - P b| <= s and |b| <= 1."""
    n, k = P.shape
    b0 = _ball(b0) * (1.0 - 1e-9)
    x0 = np.concatenate([b0, np.abs(t - P @ b0) + 1e-6])
    eye = np.eye(n)
    cons = [
        {"type": "ineq", "fun": lambda x: x[k:] - (t - P @ x[:k]), "jac": lambda x: np.hstack([P, eye])},
        {"type": "ineq", "fun": lambda x: x[k:] + (t - P @ x[:k]), "jac": lambda x: np.hstack([-P, eye])},
        {"type": "ineq", "fun": lambda x: np.array([1.0 - x[:k] @ x[:k]]),
         "jac": lambda x: np.concatenate([-2.0 * x[:k], np.zeros(n)])[None, :]},
    ]
    grad = np.concatenate([np.zeros(k), c])
    res = minimize(lambda x: float(c @ x[k:]), x0, jac=lambda x: grad, method="SLSQP",
                   constraints=cons, options={"ftol": 1e-15, "maxiter": 300})
    b = _ball(res.x[:k])
    val = _objective(t, P, c, b)
    v0 = _objective(t, P, c, b0)
    return (val, b) if val <= v0 else (v0, b0)


def _inner_grid(t, P, c):
    """Exhaustive grid over the unit ball of a 1- or 2-dim frame, polished locally."""
    k = P.shape[1]
    if k == 1:
        B = np.linspace(-1.0, 1.0, 4001)[None, :]
    else:
        r = np.linspace(0.0, 1.0, 61)
        th = np.linspace(0.0, 2.0 * np.pi, 241)[:-1]
        R, T = np.meshgrid(r, th)
        B = np.stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    vals = c @ np.abs(t[:, None] - P @ B)
    j = int(np.argmin(vals))
    val, b = _inner_slsqp(t, P, c, B[:, j])
    return (val, b) if val <= vals[j] else (float(vals[j]), B[:, j])


def _inner_subgradient(t, P, c, b0, iters=400):
    """Projected subgradient descent on the unit ball; returns the best iterate."""
    b = _ball(b0.copy())
    best, best_b = _objective(t, P, c, b), b.copy()
    step0 = best / (np.linalg.norm(P.T @ c) + 1e-300)
    for k in range(iters):
        g = -P.T @ (c * np.sign(t - P @ b))
        ng = np.linalg.norm(g)
        if ng == 0.0 or best == 0.0:
            break
        b = _ball(b - step0 / math.sqrt(k + 1.0) * g / ng)
        val = _objective(t, P, c, b)
        if val < best:
            best, best_b = val, b.copy()
    return best, best_b


def _dual_value(t, P, y):
    return float(y @ t) - float(np.linalg.norm(P.T @ y))


def _inner_dual(t, P, c, z0):
    """Certified lower bound: max over |y| <= c of y.t - ||P^T y||, started at y = c z0."""
    ct = c * t

    def negdual(z):
        v = P.T @ (c * z)
        nv = math.sqrt(float(v @ v) + 1e-300)
        return -(float(z @ ct) - nv), -(ct - c * (P @ v) / nv)

    res = minimize(negdual, np.clip(z0, -1.0, 1.0), jac=True, method="L-BFGS-B",
                   bounds=[(-1.0, 1.0)] * t.size,
                   options={"maxiter": 200, "ftol": 1e-15, "gtol": 1e-13})
    cands = [c * np.clip(res.x, -1.0, 1.0), c * np.clip(z0, -1.0, 1.0)]
    vals = [_dual_value(t, P, y) for y in cands]
    j = int(np.argmax(vals))
    return max(vals[j], 0.0), cands[j]


def _kkt_dual(t, P, c, b, rtol):
    """Dual point from the optimality conditions at a primal solution ``b``.

    Off the zero-residual set the multipliers are fixed at c * sign(r); on it
    they are chosen in the box so that P^T y = nu b with nu >= 0, by a small
    linear program. Any box-feasible y gives a valid lower bound.
    """
    n, k = P.shape
    r = t - P @ b
    zero = np.abs(r) <= rtol * (np.abs(t).max() + 1e-300)
    yfix = np.where(zero, 0.0, c * np.sign(r))
    Z = np.flatnonzero(zero)
    on_sphere = np.linalg.norm(b) > 1.0 - 1e-7
    q = P.T @ yfix
    nz = Z.size
    # variables: y_Z, nu, e (k slacks)
    PZ = P[Z].T
    nu_col = -b[:, None] if on_sphere else np.zeros((k, 1))
    A_ub = np.block([[PZ, nu_col, -np.eye(k)], [-PZ, -nu_col, -np.eye(k)]])
    b_ub = np.concatenate([-q, q])
    cost = np.concatenate([np.zeros(nz + 1), np.ones(k)])
    bounds = [(-c[i], c[i]) for i in Z] + [(0.0, None if on_sphere else 0.0)] + [(0.0, None)] * k
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    y = yfix.copy()
    if res.status == 0:
        y[Z] = np.clip(res.x[:nz], -c[Z], c[Z])
    return _dual_value(t, P, y), y


class _ConeSolver:
    """Second-order cone form of the inner problem, compiled once per (P, c)."""

    def __init__(self, P, c):
        import cvxpy as cp

        self.t = cp.Parameter(P.shape[0])
        self.b = cp.Variable(P.shape[1])
        obj = cp.Minimize(c @ cp.abs(self.t - P @ self.b))
        self.prob = cp.Problem(obj, [cp.norm(self.b, 2) <= 1.0])

    def __call__(self, t, P, c, b0):
        self.t.value = t
        v0 = _objective(t, P, c, _ball(b0))
        try:
            with warnings.catch_warnings():
                # an inaccurate solve only loosens the certified bound
                warnings.simplefilter("ignore", UserWarning)
                self.prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11,
                                tol_feas=1e-11)
        except Exception:  # solver failure: fall back to the local method
            return _inner_slsqp(t, P, c, b0)
        if self.b.value is None:
            return _inner_slsqp(t, P, c, b0)
        b = _ball(np.asarray(self.b.value))
        val = _objective(t, P, c, b)
        return (val, b) if val <= v0 else (v0, _ball(b0))


def _inner(t, P, c, b0, inner_tol, cone=None):
    """Lower bound of the inner infimum, a dual ascent direction and the primal-dual gap.

    The primal comes from the grid oracle (frames of dimension <= 2) or from
    a conic solver (SLSQP when none is given), cross-checked by projected
    subgradient descent when the dual certificate does not close the gap.
    The reported value is always the dual certificate.
    """
    if P.shape[1] <= 2:
        primal, b = _inner_grid(t, P, c)
    elif cone is not None:
        primal, b = cone(t, P, c, b0)
    else:
        primal, b = _inner_slsqp(t, P, c, b0)
    lower, y = _certify(t, P, c, b, primal, inner_tol)
    if primal - lower > inner_tol and P.shape[1] > 2:
        p2, b2 = _inner_subgradient(t, P, c, b)
        if p2 < primal:
            primal = p2
            l2, y2 = _certify(t, P, c, b2, primal, inner_tol)
            if l2 > lower:
                lower, y = l2, y2
    return lower, y, max(primal - lower, 0.0)


def _certify(t, P, c, b, primal, inner_tol):
    """Best dual lower bound found near the primal point ``b``."""
    best = (-math.inf, None)
    for rtol in (1e-8, 1e-10, 1e-6):
        cand = _kkt_dual(t, P, c, b, rtol)
        if cand[0] > best[0]:
            best = cand
        if primal - best[0] <= 1e-3 * inner_tol:
            return max(best[0], 0.0), best[1]
    lower, y = _inner_dual(t, P, c, best[1] / c)
    if best[0] > lower:
        lower, y = best
    return max(lower, 0.0), y


def _candidates(AC, samples, seed, small=8, nprobe_dirs=16):
    """Unit coefficient vectors to try as sup candidates.

    Small frames use their own vectors and normalized pairwise sums and
    differences; larger ones use a few frame vectors and the projections of
    the leading probes, which carry most of the weak-norm weight. Seeded
    random directions come last, so a larger ``samples`` extends the list.
    """
    k = AC.shape[1]
    rows = list(np.eye(k)[: min(k, small)])
    if k <= small:
        for i in range(k):
            for j in range(i + 1, k):
                for sgn in (1.0, -1.0):
                    e = np.zeros(k)
                    e[i], e[j] = 1.0, sgn
                    rows.append(e / SQRT2)
    else:
        for row in AC[:nprobe_dirs]:
            nr = np.linalg.norm(row)
            if nr > 0.0:
                rows.append(row.conj() / nr)
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((samples, k))
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    return np.vstack([np.array(rows).reshape(-1, k), R])


def _directed(C, Dfr, probes, samples, inner_tol, seed, ascent_steps):
    nprobe = min(probes.dim, MAX_PROBES)
    c = _weights(nprobe)
    AC = probes.coefficients(C.basis)[:nprobe]
    P = probes.coefficients(Dfr.basis)[:nprobe]
    CD = Dfr.coefficients(C.basis)
    if P.shape[1] > 2:
        # only the row space of P matters: b -> V^T b maps the ball onto the ball
        U, S, Vt = np.linalg.svd(P, full_matrices=False)
        r = int(np.sum(S > S[0] * 1e-14)) if S.size and S[0] > 0 else 0
        P, CD = U[:, :r] * S[:r], Vt[:r] @ CD
    if projection_residual(Dfr, C.basis) <= 1e-12:
        return 0.0, 0.0, nprobe  # C inside D: take v = u
    # the conic solver pays off once SLSQP would handle many variables
    cone = _ConeSolver(P, c) if P.shape[1] > 2 and sum(P.shape) > 40 else None
    best, worst_gap = 0.0, 0.0
    for a in _candidates(AC, samples, seed):
        prev = -math.inf
        for step in range(ascent_steps + 1):
            t = AC @ a
            val, y, gap = _inner(t, P, c, CD @ a, inner_tol, cone)
            worst_gap = max(worst_gap, gap)
            if step and val <= prev + inner_tol:
                best = max(best, val)
                break
            best, prev = max(best, val), val
            if step == ascent_steps:
                break
            d = AC.T @ y
            nd = np.linalg.norm(d)
            if nd == 0.0:
                break
            a_new = d / nd
            if np.allclose(a_new, a, atol=1e-12) or np.allclose(a_new, -a, atol=1e-12):
                break
            a = a_new
    return best, worst_gap, nprobe


def dw_estimate(C: SubspaceFrame, Dfr: SubspaceFrame, probes: SubspaceFrame,
                samples: int = 64, inner_tol: float = 1e-6, seed: int = 0,
                ascent_steps: int = 2) -> WeakGapEstimate:
    """Sampled lower bounds of d_w in both directions between subspace unit balls.

    The sup over the unit ball of one subspace is estimated from frame
    vectors, normalized pairwise sums and seeded random directions, each
    refined by a few monotone ascent steps. The inner infimum over the other
    ball is a weighted-l1 problem: for frames of dimension <= 2 it is solved
    by exhaustive grid search with local polish; otherwise the value is a
    dual (certified) lower bound, checked against projected subgradient
    descent, and the largest primal-dual gap is reported.
    """
    for F in (C, Dfr):
        if F.space is not probes.space:
            raise ValueError("frames and probes must share a space")
        if F.ip != "ambient":
            raise ValueError("weak-gap frames must be ambient-orthonormal")
        if np.iscomplexobj(F.basis):
            raise ValueError("weak-gap estimation supports real frames only")
        if F.dim == 0:
            raise ValueError("zero-dimensional frames are not allowed")
    _check_probes(probes)
    cd, gap1, nprobe = _directed(C, Dfr, probes, samples, inner_tol, seed, ascent_steps)
    dc, gap2, _ = _directed(Dfr, C, probes, samples, inner_tol, seed, ascent_steps)
    return WeakGapEstimate(cd, dc, max(cd, dc), samples, inner_tol, seed, max(gap1, gap2), nprobe)


def dw_to_zero(C: SubspaceFrame, probes: SubspaceFrame, samples: int = 64, seed: int = 0,
               ascent_steps: int = 5) -> float:
    """Sampled lower bound of sup ||u||_w over the unit ball of C, i.e. d_w(B_C, {0})."""
    _check_probes(probes)
    if C.dim == 0:
        return 0.0
    nprobe = min(probes.dim, MAX_PROBES)
    c = _weights(nprobe)
    AC = probes.coefficients(C.basis)[:nprobe]
    best = 0.0
    for a in _candidates(AC, samples, seed):
        for _ in range(ascent_steps + 1):
            t = AC @ a
            best = max(best, float(c @ np.abs(t)))
            d = AC.T @ (c * np.sign(t))
            nd = np.linalg.norm(d)
            if nd == 0.0:
                break
            a = d / nd
    return best
