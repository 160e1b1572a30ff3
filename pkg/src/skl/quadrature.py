"""Gauss-type rules for the density families used by the measure model.

Every rule returns ``(nodes, weights)`` for integration against a standard
normal density ``phi(z) dz`` or against plain Lebesgue measure on an
interval. Unbounded intervals are handled by a fixed variable transform so
that the node count is the only resolution parameter.
"""
import math

import numpy as np
from numpy.polynomial import hermite_e, legendre

_SQRT2PI = math.sqrt(2.0 * math.pi)


def gauss_legendre(a, b, n):
    """Gauss-Legendre nodes and weights on the finite interval [a, b]."""
    x, w = legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / _SQRT2PI


def _upper_halfline(za, n):
    # z = za + s * t, t = -log(1 - u), u in (0, 1) Gauss-Legendre.
    s = (8.0 + max(za, 0.0) - za) / 5.0
    u, wu = gauss_legendre(0.0, 1.0, n)
    t = -np.log1p(-u)
    z = za + s * t
    w = wu * s / (1.0 - u) * normal_pdf(z)
    return z, w


def standard_normal_rule(za, zb, n):
    """Nodes/weights for int_{za}^{zb} f(z) phi(z) dz.

    Returns ``(z, w, exact_degree)`` where ``exact_degree`` is ``2n - 1`` for
    the full line (Gauss-Hermite) and ``-1`` when the rule carries no
    polynomial exactness guarantee.
    """
    lo_inf = math.isinf(za)
    hi_inf = math.isinf(zb)
    if lo_inf and hi_inf:
        z, w = hermite_e.hermegauss(n)
        return z, w / _SQRT2PI, 2 * n - 1
    if not lo_inf and not hi_inf:
        z, w = gauss_legendre(za, zb, n)
        return z, w * normal_pdf(z), -1
    if hi_inf:
        z, w = _upper_halfline(za, n)
        return z, w, -1
    z, w = _upper_halfline(-zb, n)
    return -z[::-1], w[::-1], -1


def normal_mass(za, zb):
    """P(za <= Z <= zb) for a standard normal Z, accurate in both tails."""
    from scipy.special import ndtr

    if za >= 0.0:
        return float(ndtr(-za) - ndtr(-zb))
    if zb <= 0.0:
        return float(ndtr(zb) - ndtr(za))
    return float(1.0 - ndtr(za) - ndtr(-zb))
