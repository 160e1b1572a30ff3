"""Weighted orthogonalization kernels.

Orthonormality under ``sum omega conj(x) y`` is handled by working in scaled
coordinates ``sqrt(omega) * x``, where it becomes ordinary Euclidean
orthonormality.
"""
import numpy as np


def _orthogonalize(v, Q, passes=2):
    """Remove the span of the columns of ``Q`` from ``v`` (two-pass Gram-Schmidt)."""
    for _ in range(passes):
        if Q.shape[1]:
            v = v - Q @ (Q.conj().T @ v)
    return v


def lanczos(nodes, omega, start, kmax, rel_tol=1e-13):
    """Krylov basis of ``diag(nodes)`` from ``start`` under weights ``omega``.

    Every new direction is orthogonalized against all predecessors. Returns
    ``(Q, alpha, beta, degenerate)`` with ``Q`` holding scaled-coordinate
    columns, ``alpha`` the diagonal and ``beta`` the off-diagonal of the
    projected tridiagonal matrix. ``beta`` has one more entry than the number
    of off-diagonals: the last one is the norm of the residual direction
    after the final column, which is ~0 exactly when the Krylov space has
    saturated.
    """
    nodes = np.asarray(nodes, dtype=float)
    sq = np.sqrt(np.asarray(omega, dtype=float))
    q = sq * np.asarray(start)
    nrm = np.linalg.norm(q)
    if nrm == 0.0:
        raise ValueError("starting vector is zero")
    dtype = np.result_type(q, float)
    Q = np.zeros((nodes.size, 0), dtype=dtype)
    q = q / nrm
    scale = max(float(np.max(np.abs(nodes))), 1.0)
    alpha, beta = [], []
    degenerate = False
    for k in range(min(kmax, nodes.size)):
        Q = np.column_stack([Q, q])
        v = nodes * q
        alpha.append(float(np.real(np.vdot(q, v))))
        v = _orthogonalize(v, Q)
        b = float(np.linalg.norm(v))
        beta.append(b)
        if b <= rel_tol * scale:
            degenerate = True
            break
        q = v / b
    if not degenerate and kmax > nodes.size:
        degenerate = True
    return Q, np.array(alpha), np.array(beta), degenerate


def orthonormalize(X, omega, rel_tol=1e-12):
    """Weighted orthonormal basis for the column span of ``X``.

    Returns value-coordinate columns and the indices of the input columns
    that contributed a new direction.
    """
    sq = np.sqrt(np.asarray(omega, dtype=float))
    Y = sq[:, None] * np.asarray(X)
    Q = np.zeros((Y.shape[0], 0), dtype=np.result_type(Y, float))
    kept = []
    for j in range(Y.shape[1]):
        y = Y[:, j]
        ny = np.linalg.norm(y)
        if ny == 0.0:
            continue
        v = _orthogonalize(y, Q)
        nv = np.linalg.norm(v)
        if nv <= rel_tol * ny:
            continue
        Q = np.column_stack([Q, v / nv])
        kept.append(j)
    return Q / sq[:, None], kept


def complement(Y):
    """Orthonormal basis (Euclidean) of the orthogonal complement of ``Y``'s columns."""
    D, k = Y.shape
    if k == 0:
        return np.eye(D, dtype=Y.dtype)
    Qf, _ = np.linalg.qr(Y, mode="complete")
    return Qf[:, k:]
