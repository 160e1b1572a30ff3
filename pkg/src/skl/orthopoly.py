"""Orthonormal polynomials of a discretized measure.

The recurrence ``lam p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}`` is
computed with the Stieltjes procedure on the node values, reorthogonalizing
each new polynomial against all previous ones.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._linalg import lanczos
from .errors import NumericalDegeneration, OrthogonalityLossError, SklWarning
from .measure import DiscretizedSpace

ORTHO_TOL = 1e-8
ORTHO_FAIL = 1e-6


@dataclass(frozen=True, eq=False)
class RecurrenceCoefficients:
    """Three-term recurrence of the orthonormal polynomials.

    alpha : (K,) diagonal coefficients a_0..a_{K-1}
    beta : (K-1,) off-diagonal coefficients b_1..b_{K-1}
    s0 : total mass, so that p_0 = s0**-0.5
    cond_log : (K,) max |<p_i, p_k> - delta_ik| over i <= k
    degenerate : the recurrence halted because the next b vanished
    atomic : the underlying measure is finitely supported
    """

    alpha: np.ndarray
    beta: np.ndarray
    s0: float
    cond_log: np.ndarray
    degenerate: bool = False
    notice: str | None = None
    hull: tuple = (-math.inf, math.inf)
    atomic: bool = False
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return self.alpha.size

    def to_rows(self):
        """Rows ``(k, alpha_k, beta_k)``; beta_0 is reported as 0."""
        b = np.concatenate([[0.0], self.beta])
        return [(k, float(self.alpha[k]), float(b[k])) for k in range(self.K)]


def stieltjes_recurrence(space: DiscretizedSpace, K: int) -> RecurrenceCoefficients:
    """Recurrence coefficients of the first ``K`` orthonormal polynomials.

    ``K`` larger than the node count is capped with a degeneration notice.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    notice = None
    if K > space.D:
        notice = f"K={K} exceeds the {space.D} nodes; capped at K={space.D}"
        K = space.D
    w = space.weights
    Q, alpha, beta, degenerate = lanczos(space.nodes, w, np.ones(space.D), K)
    K_eff = alpha.size
    if K_eff < K:
        notice = f"recurrence degenerated at K={K_eff}: the measure has only {K_eff} support points"
    elif degenerate and notice is None:
        notice = f"recurrence saturated at K={K_eff} (b_K vanishes)"
    sq = np.sqrt(w)
    P = Q / sq[:, None]
    G = Q.T @ Q
    err = np.abs(G - np.eye(K_eff))
    cond_log = np.array([err[: k + 1, k].max() for k in range(K_eff)])
    worst = float(cond_log.max())
    if worst > ORTHO_FAIL:
        raise OrthogonalityLossError(
            f"orthogonality lost ({worst:.2e}); use a smaller K or more nodes"
        )
    if worst > ORTHO_TOL:
        warnings.warn(f"orthogonality defect {worst:.2e} exceeds {ORTHO_TOL}", SklWarning,
                      stacklevel=2)
    s0 = math.fsum(w)
    hull = (float(space.nodes[0]), float(space.nodes[-1]))
    atomic = space.source is None or not space.source.ac
    return RecurrenceCoefficients(alpha, beta[: K_eff - 1].copy(), s0, cond_log,
                                  bool(degenerate), notice, hull, atomic, P)


def eval_orthonormal(rc: RecurrenceCoefficients, k: int, z):
    """p_k(z) by the forward recurrence, starting from p_0 = s0**-0.5."""
    return eval_all(rc, z, k + 1)[k]


def eval_all(rc: RecurrenceCoefficients, z, count: int | None = None) -> np.ndarray:
    """Values p_0(z), ..., p_{count-1}(z)."""
    count = rc.K if count is None else count
    if not 0 < count <= rc.K:
        raise IndexError(f"degree {count - 1} out of range for K={rc.K}")
    z = complex(z) if np.iscomplexobj(z) or isinstance(z, complex) else float(z)
    out = np.zeros(count, dtype=complex if isinstance(z, complex) else float)
    out[0] = 1.0 / math.sqrt(rc.s0)
    if count > 1:
        out[1] = (z - rc.alpha[0]) * out[0] / rc.beta[0]
    for k in range(1, count - 1):
        out[k + 1] = ((z - rc.alpha[k]) * out[k] - rc.beta[k - 1] * out[k - 1]) / rc.beta[k]
    return out


def jacobi_matrix(rc: RecurrenceCoefficients, m: int) -> np.ndarray:
    """The m x m truncation of the multiplication operator in the p_k basis."""
    if not 1 <= m <= rc.K:
        raise IndexError(f"size {m} out of range for K={rc.K}")
    J = np.diag(rc.alpha[:m]) + np.diag(rc.beta[: m - 1], 1) + np.diag(rc.beta[: m - 1], -1)
    ev = np.linalg.eigvalsh(J)
    lo, hi = rc.hull
    slack = 1e-10 * max(1.0, abs(lo), abs(hi))
    if ev[0] < lo - slack or ev[-1] > hi + slack:
        raise NumericalDegeneration(
            f"Jacobi eigenvalues [{ev[0]}, {ev[-1]}] leave the support hull [{lo}, {hi}]"
        )
    return J


def gauss_rule(rc: RecurrenceCoefficients, m: int):
    """Nodes and weights of the m-point Gauss rule from the Jacobi matrix."""
    ev, V = np.linalg.eigh(jacobi_matrix(rc, m))
    return ev, rc.s0 * V[0, :] ** 2


# -- determinacy surrogate ----------------------------------------------------

@dataclass(frozen=True)
class DeterminacyReport:
    z0: complex
    terms: np.ndarray
    partial_sums: np.ndarray
    ratio: float
    tail_bound: float
    trend: str
    verdict: str
    K: int
    tail_window: int


def _fit_ratio(terms):
    n = np.arange(terms.size, dtype=float)
    slope = np.polyfit(n, np.log(terms), 1)[0]
    return float(math.exp(slope))


def determinacy_series_test(rc: RecurrenceCoefficients, z0: complex = 1j,
                            tail_window: int | None = None,
                            tail_tol: float = 1e-4) -> DeterminacyReport:
    """Trend of the partial sums of |p_k(z0)|^2 at a non-real point.

    Convergence of the series is the classical signature of an indeterminate
    moment problem; divergence signals determinacy. ``convergent-tail`` needs
    a fitted geometric ratio < 1 over the last ``tail_window`` terms and a
    remaining-tail estimate below ``tail_tol`` relative to the partial sum.
    ``divergent-trend`` needs non-decaying terms and partial sums above ten
    times their first-quartile value. A recurrence that halted on a finitely
    supported measure short-circuits to a determinate indication.
    """
    z0 = complex(z0)
    if z0.imag == 0.0:
        raise ValueError("z0 must be non-real")
    K = rc.K
    terms = np.abs(eval_all(rc, z0)) ** 2
    sums = np.cumsum(terms)
    window = max(3, K // 3) if tail_window is None else int(tail_window)
    window = min(window, K)
    if rc.degenerate and rc.atomic:
        return DeterminacyReport(z0, terms, sums, float("nan"), 0.0, "finite-support",
                                 "determinate-indication", K, window)
    if K < 3 or window < 2:
        return DeterminacyReport(z0, terms, sums, float("nan"), float("nan"), "inconclusive",
                                 "inconclusive", K, window)
    tail = terms[-window:]
    ratio = _fit_ratio(tail) if np.all(tail > 0) else float("nan")
    tail_bound = terms[-1] * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
    quartile = sums[max(K // 4 - 1, 0)]
    if ratio < 1.0 and tail_bound < tail_tol * sums[-1]:
        trend, verdict = "convergent-tail", "indeterminate-indication"
    elif ratio >= 1.0 and sums[-1] > 10.0 * quartile:
        trend, verdict = "divergent-trend", "determinate-indication"
    else:
        trend, verdict = "inconclusive", "inconclusive"
    return DeterminacyReport(z0, terms, sums, ratio, float(tail_bound), trend, verdict, K,
                             window)
