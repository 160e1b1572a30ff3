"""Krylov frames, graph-orthogonal complements and Krylov solvability.

All vectors are value-vectors on a :class:`DiscretizedSpace`; the operator
acts as multiplication by the nodes.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ._linalg import complement, lanczos, orthonormalize
from .errors import NotInRangeError, RangeWarning
from .measure import DiscretizedSpace, GapReport, csum, spectral_gap_at_zero


@dataclass(frozen=True, eq=False)
class SubspaceFrame:
    """Orthonormal basis (columns of ``basis``) under the inner product ``ip``."""

    space: DiscretizedSpace
    basis: np.ndarray
    ip: str = "ambient"
    degree_meta: tuple | None = None
    notice: str | None = None

    def __post_init__(self):
        b = np.asarray(self.basis)
        if b.ndim == 1:
            b = b[:, None]
        if b.shape[0] != self.space.D:
            raise ValueError(f"basis has {b.shape[0]} rows for a space with D={self.space.D}")
        if b.shape[1] > self.space.D:
            raise ValueError("frame dimension exceeds D")
        self.space.ip_weights(self.ip)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def scaled(self) -> np.ndarray:
        """Basis in coordinates where the frame inner product is Euclidean."""
        return np.sqrt(self.space.ip_weights(self.ip))[:, None] * self.basis

    def gram(self) -> np.ndarray:
        Y = self.scaled()
        return Y.conj().T @ Y

    def gram_defect(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.gram() - np.eye(self.dim))))

    def coefficients(self, X) -> np.ndarray:
        """Inner products <basis_j, x> for the columns x of ``X``."""
        X = np.asarray(X)
        w = self.space.ip_weights(self.ip)
        return self.basis.conj().T @ (w[:, None] * X if X.ndim == 2 else w * X)

    def project(self, X) -> np.ndarray:
        return self.basis @ self.coefficients(X)


def frame_from_vectors(space: DiscretizedSpace, X, ip: str = "ambient") -> SubspaceFrame:
    """Orthonormalize arbitrary columns into a frame (dependent columns dropped)."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    B, kept = orthonormalize(X, space.ip_weights(ip))
    notice = None if len(kept) == X.shape[1] else f"{X.shape[1] - len(kept)} dependent vectors dropped"
    return SubspaceFrame(space, B, ip, None, notice)


def krylov_frame(space: DiscretizedSpace, g_rep, m: int, ip: str = "ambient") -> SubspaceFrame:
    """Orthonormal basis of span{g, lam g, ..., lam^m g} under ``ip``.

    Built by the Lanczos recursion with full reorthogonalization. When the
    Krylov vectors become dependent the frame is truncated and carries a
    notice.
    """
    g = space.values(g_rep)
    if not np.any(g != 0):
        raise ValueError("g must not be the zero vector")
    if m < 0:
        raise ValueError("degree must be nonnegative")
    omega = space.ip_weights(ip)
    Q, _, _, degenerate = lanczos(space.nodes, omega, g, m + 1)
    B = Q / np.sqrt(omega)[:, None]
    notice = None
    if B.shape[1] < m + 1:
        notice = (f"Krylov space saturated at dimension {B.shape[1]} "
                  f"(requested degree {m}, D={space.D})")
    return SubspaceFrame(space, B, ip, tuple(range(B.shape[1])), notice)


def complement_frame(frame: SubspaceFrame) -> SubspaceFrame:
    """Orthonormal basis of the orthogonal complement within the discretized space.

    The complement is taken with respect to the frame's own inner product.
    """
    space = frame.space
    C = complement(frame.scaled())
    notice = None if C.shape[1] else "complement is empty (frame is full-dimensional)"
    B = C / np.sqrt(space.ip_weights(frame.ip))[:, None]
    return SubspaceFrame(space, B, frame.ip, None, notice)


def graph_complement_frame(space: DiscretizedSpace, k_frame: SubspaceFrame) -> SubspaceFrame:
    """Graph-orthogonal complement of a graph-orthonormal frame."""
    if k_frame.ip != "graph":
        raise ValueError("graph_complement_frame needs a frame orthonormal in the graph inner product")
    if k_frame.space is not space:
        raise ValueError("frame belongs to a different space")
    return complement_frame(k_frame)


def apply_A(space: DiscretizedSpace, x):
    """Multiplication by the spectral variable (componentwise at the nodes)."""
    if isinstance(x, SubspaceFrame):
        x = x.basis
    x = np.asarray(x)
    if x.ndim == 2:
        return space.nodes[:, None] * x
    return space.nodes * x


def projection_residual(frame: SubspaceFrame, X) -> float:
    """Largest relative norm (frame inner product) of ``x - P x`` over columns."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    R = X - frame.project(X)
    w = frame.space.ip_weights(frame.ip)
    out = 0.0
    for j in range(X.shape[1]):
        nx = math.sqrt(math.fsum(w * np.abs(X[:, j]) ** 2))
        if nx == 0.0:
            continue
        out = max(out, math.sqrt(math.fsum(w * np.abs(R[:, j]) ** 2)) / nx)
    return out


def truncation_projection(space: DiscretizedSpace, v, n: float) -> np.ndarray:
    """Multiply by the indicator of [-n, n]: zero the components with |lam| > n."""
    v = np.asarray(v)
    return np.where(space.mask(n), v, 0.0)


# -- solvability --------------------------------------------------------------------

@dataclass(frozen=True)
class SolvabilityReport:
    degrees: np.ndarray
    residuals: np.ndarray
    graph_increments: np.ndarray
    solution_coeffs: np.ndarray
    converged: bool
    tol: float
    g_norm: float
    gap_report: GapReport | None
    notices: tuple = ()
    solution: np.ndarray | None = field(default=None, repr=False)

    @property
    def relative_residuals(self) -> np.ndarray:
        return self.residuals / self.g_norm

    def asymptotic_ratio(self, floor: float = 1e-13) -> float:
        """Geometric per-degree ratio fitted over the last half above ``floor``."""
        rel = self.relative_residuals
        keep = np.flatnonzero(rel > floor)
        if keep.size < 4:
            return math.nan
        keep = keep[keep.size // 2:]
        return float(math.exp(np.polyfit(self.degrees[keep], np.log(rel[keep]), 1)[0]))

    def to_rows(self):
        return [(int(m), float(r), float(d)) for m, r, d in
                zip(self.degrees, self.residuals, self.graph_increments)]


def _check_range(space: DiscretizedSpace, g) -> list[str]:
    at_zero = (space.nodes == 0.0) & (g != 0)
    if np.any(at_zero):
        raise NotInRangeError("g has mass at an atom at 0, so g is not in the range of A")
    notes = []
    mu = space.source
    if mu is not None:
        for p in mu.ac:
            a, b = p.interval
            if a < 0.0 < b:
                msg = (f"0 lies inside the support of a {p.kind} part; "
                       "whether 1/lam is square-integrable depends on the density")
                warnings.warn(msg, RangeWarning, stacklevel=3)
                notes.append(msg)
    return notes


def solve_krylov(space: DiscretizedSpace, g_rep, m_max: int, tol: float = 1e-10) -> SolvabilityReport:
    """Least-squares Krylov solutions f_m of lam f = g for m = 0..m_max.

    f_m minimizes ||lam f - g|| over polynomials of degree <= m times g. The
    minimizer is found by projecting g onto an orthonormal basis of the image
    lam * K_m; residuals are therefore nonincreasing in m.
    """
    g = space.values(g_rep)
    notes = _check_range(space, g)
    K = krylov_frame(space, g, m_max, "ambient")
    if K.notice:
        notes.append(K.notice)
    sq = np.sqrt(space.weights)
    Y = sq[:, None] * apply_A(space, K.basis)
    Uy, R = np.linalg.qr(Y)
    U = Uy / sq[:, None]
    r = g.astype(np.result_type(g, U), copy=True)
    c = np.zeros(K.dim, dtype=r.dtype)
    residuals, increments = [], []
    f_prev = np.zeros_like(r)
    coeffs = np.zeros(0)
    f = f_prev
    for m in range(K.dim):
        c[m] = space.inner(U[:, m], r)
        r = r - c[m] * U[:, m]
        residuals.append(space.norm(r))
        coeffs, *_ = np.linalg.lstsq(R[: m + 1, : m + 1], c[: m + 1], rcond=None)
        f = K.basis[:, : m + 1] @ coeffs
        increments.append(space.norm(f - f_prev, "graph"))
        f_prev = f
    residuals = np.array(residuals)
    # nested least squares: enforce the invariant against last-bit rounding
    if np.any(np.diff(residuals) > 1e-14 * residuals[0] + 1e-300):
        notes.append("residual sequence not monotone beyond rounding")
    g_norm = space.norm(g)
    gap = spectral_gap_at_zero(space.source) if space.source is not None else None
    return SolvabilityReport(
        np.arange(K.dim), residuals, np.array(increments), coeffs,
        bool(residuals[-1] <= tol * g_norm), tol, g_norm, gap, tuple(notes), f,
    )


# -- Krylov core condition -------------------------------------------------------

@dataclass(frozen=True)
class CoreGapReport:
    degrees: np.ndarray
    residuals: dict
    norms: dict

    def relative(self, name: str) -> np.ndarray:
        return self.residuals[name] / self.norms[name]


def core_condition_gap(space: DiscretizedSpace, g_rep, m: int,
                       test_functions: Mapping[str, Callable | np.ndarray]) -> CoreGapReport:
    """Graph-norm distance from each test function to the degree-<=j Krylov space, j = 0..m."""
    frame = krylov_frame(space, g_rep, m, "graph")
    w = space.graph_weights
    residuals, norms = {}, {}
    for name, h in test_functions.items():
        hv = space.values(h)
        r = hv.astype(np.result_type(hv, frame.basis), copy=True)
        norms[name] = space.norm(hv, "graph")
        seq = []
        for j in range(frame.dim):
            u = frame.basis[:, j]
            r = r - csum(w * np.conj(u) * r) * u
            seq.append(space.norm(r, "graph"))
        residuals[name] = np.array(seq)
    return CoreGapReport(np.arange(frame.dim), residuals, norms)
