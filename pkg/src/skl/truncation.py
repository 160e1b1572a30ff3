"""Spectral truncations g_n = 1_[-n,n](A) g and their Krylov subspaces.

Every truncated object is embedded in one master discretization whose
quadrature is split at the truncation radii, so tail masses are resolved
exactly by the node set and quantities at different n are comparable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EmptyTruncationError
from .krylov import (
    SubspaceFrame,
    complement_frame,
    krylov_frame,
    projection_residual,
    truncation_projection,
)
from .measure import DiscretizedSpace, SpectralMeasure, discretize, integrate, refine
from .metrics import dw_estimate, dw_to_zero, probe_frame


def lspace_frame(space: DiscretizedSpace, ip: str = "ambient") -> SubspaceFrame:
    """Frame of {h(A) g}: with g = 1 this is every value-vector (normalized node indicators)."""
    return SubspaceFrame(space, np.diag(1.0 / np.sqrt(space.ip_weights(ip))), ip)


@dataclass
class TruncationStudy:
    n_grid: list
    degree: list
    mass_captured: list
    graph_norm_gap: list
    nesting_residual: list
    l_residual: list
    dhat_to_L: list
    complement_dhat: list
    complement_dim: list
    projection_errors: dict
    tail_bounds: dict
    projection_identity_gap: list
    verdicts: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)
    D: int = 0
    weak_gap_params: dict = field(default_factory=dict)

    def rows(self):
        """One row per retained n: (n, m, mass, graph gap, nesting, dhat, complement)."""
        return [
            (n, m, a, b, c, d, e)
            for n, m, a, b, c, d, e in zip(self.n_grid, self.degree, self.mass_captured,
                                           self.graph_norm_gap, self.nesting_residual,
                                           self.dhat_to_L, self.complement_dhat)
        ]


def _nonincreasing(seq, tol=0.0):
    return bool(all(b <= a + tol for a, b in zip(seq, seq[1:])))


def _tail_bound(mu: SpectralMeasure, v, n: float) -> float:
    """sqrt of the integral of |v|^2 over |lam| > n.

    Uses its own quadrature (64 nodes per piece, split at -n and n), not the
    master space, so it serves as an independent check.
    """
    if not callable(v):
        c = complex(v) if np.iscomplexobj(v) else float(v)
        f = lambda x: np.full(np.shape(x), abs(c) ** 2) * (np.abs(x) > n)
    else:
        f = lambda x: np.abs(np.asarray(v(x))) ** 2 * (np.abs(x) > n)
    fine = refine(mu, [-n, n], 64 if mu.ac else None)
    return math.sqrt(max(float(np.real(integrate(fine, f))), 0.0))


def run_truncation_study(mu: SpectralMeasure, g_spec=1.0, n_grid: Sequence[float] = (1, 2, 3, 4),
                         m: int | None = None,
                         test_panel: Mapping[str, Callable | float] | None = None,
                         weak_gap_params: Mapping | None = None,
                         piece_nodes: int = 24) -> TruncationStudy:
    """Nesting, weak-gap and projection diagnostics along a grid of truncation radii.

    Parameters
    ----------
    mu : SpectralMeasure
        Untruncated measure.
    g_spec : callable, float or array
        The vector g as a function of the spectral variable (1 in the cyclic model).
    n_grid : sequence of float
        Strictly increasing truncation radii.
    m : int, optional
        Krylov degree cap; the degree used at each n is ``min(m, inside - 1)``
        where ``inside`` counts master nodes in [-n, n]. ``None`` saturates.
    test_panel : mapping, optional
        Named test vectors v whose projection errors ||P_n v - v|| are tracked.
        Defaults to ``{"one": 1.0}``.
    weak_gap_params : mapping, optional
        ``samples``, ``seed`` and ``inner_tol`` for the weak-gap estimator.
    piece_nodes : int
        Quadrature nodes per refined continuous piece of the master space.
    """
    grid = [float(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing and nonempty")
    if any(n <= 0 for n in grid):
        raise ValueError("truncation radii must be positive")
    params = {"samples": 8, "seed": 0, "inner_tol": 1e-6}
    params.update(weak_gap_params or {})
    panel = dict(test_panel) if test_panel else {"one": 1.0}

    cuts = [c for n in grid for c in (-n, n)]
    master = discretize(refine(mu, cuts, piece_nodes if mu.ac else None))
    g = master.values(g_spec)
    L = lspace_frame(master)
    probes = probe_frame(master)
    panel_vals = {k: master.values(v) for k, v in panel.items()}

    st = TruncationStudy([], [], [], [], [], [], [], [], [], {k: [] for k in panel},
                         {k: [] for k in panel}, [], D=master.D, weak_gap_params=dict(params))
    frames = []
    for n in grid:
        mask = master.mask(n)
        inside = int(np.count_nonzero(mask & (g != 0)))
        if inside == 0:
            st.notices.append(f"n={n:g}: empty truncation ({EmptyTruncationError.__name__}), step skipped")
            continue
        gn = np.where(mask, g, 0.0)
        deg = inside - 1 if m is None else min(int(m), inside - 1)
        K = krylov_frame(master, gn, deg, "ambient")
        if K.notice:
            st.notices.append(f"n={n:g}: {K.notice}")
        frames.append(K)
        st.n_grid.append(n)
        st.degree.append(deg)
        st.mass_captured.append(master.norm(gn) ** 2)
        st.graph_norm_gap.append(master.norm(g - gn, "graph"))
        st.l_residual.append(projection_residual(L, K.basis))
        est = dw_estimate(K, L, probes, params["samples"], params["inner_tol"], params["seed"])
        st.dhat_to_L.append(est.dhat)
        comp = complement_frame(K)
        st.complement_dim.append(comp.dim)
        st.complement_dhat.append(
            dw_to_zero(comp, probes, params["samples"], params["seed"]) if comp.dim else 0.0)
        ident = 0.0
        for name, v in panel_vals.items():
            Pv = K.project(v)
            st.projection_errors[name].append(master.norm(Pv - v))
            st.tail_bounds[name].append(_tail_bound(mu, panel[name], n))
            scale = max(master.norm(v), 1e-300)
            ident = max(ident, master.norm(Pv - truncation_projection(master, v, n)) / scale)
        st.projection_identity_gap.append(ident)

    for K, K_next in zip(frames, frames[1:]):
        st.nesting_residual.append(projection_residual(K_next, K.basis))
    if frames:
        st.nesting_residual.append(0.0)

    tol = params["inner_tol"]
    st.verdicts = {
        "mass_nondecreasing": _nonincreasing([-x for x in st.mass_captured], 1e-15),
        "graph_gap_nonincreasing": _nonincreasing(st.graph_norm_gap, 1e-15),
        "nesting_ok": bool(all(r <= 1e-8 for r in st.nesting_residual)),
        "inside_L_ok": bool(all(r <= 1e-10 for r in st.l_residual)),
        "dhat_nonincreasing": _nonincreasing(st.dhat_to_L, 3 * tol),
        "complement_nonincreasing": _nonincreasing(st.complement_dhat, 3 * tol),
        "projection_errors_nonincreasing": all(
            _nonincreasing(e, 1e-12) for e in st.projection_errors.values()),
        "projection_identity_ok": bool(all(x <= 1e-8 for x in st.projection_identity_gap)),
    }
    return st


@dataclass(frozen=True)
class NormTable:
    n_grid: list
    h_norms: list
    a_norms: list
    full_h: float
    full_a: float
    bounded: bool
    final_gap: float


def monotone_norm_check(space: DiscretizedSpace, g_spec, n_grid: Sequence[float],
                        polynomials: Mapping[str, Sequence[float]]) -> dict:
    """||p(A) g_n|| in the ambient and graph norms against the untruncated values.

    Polynomials are given by ascending coefficient lists.
    """
    g = space.values(g_spec)
    out = {}
    for name, coeffs in polynomials.items():
        pg = np.polynomial.polynomial.polyval(space.nodes, np.asarray(coeffs, dtype=float)) * g
        full_h, full_a = space.norm(pg), space.norm(pg, "graph")
        hs, as_ = [], []
        for n in n_grid:
            v = truncation_projection(space, pg, n)
            hs.append(space.norm(v))
            as_.append(space.norm(v, "graph"))
        bounded = all(h <= full_h * (1 + 1e-12) for h in hs) and all(
            a <= full_a * (1 + 1e-12) for a in as_)
        gap = max(full_h - hs[-1], full_a - as_[-1]) if hs else math.nan
        out[name] = NormTable(list(map(float, n_grid)), hs, as_, full_h, full_a, bool(bounded),
                              float(gap))
    return out
