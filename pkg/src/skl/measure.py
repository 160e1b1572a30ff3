"""Scalar spectral measures and their discretizations.

A self-adjoint operator with cyclic vector ``g`` is represented by the
measure ``mu`` on the real line; the operator becomes multiplication by the
spectral variable on ``L^2(R, mu)`` and ``g`` becomes the constant function
one. Discretizing ``mu`` with a quadrature rule turns every vector into a
vector of values at the quadrature nodes.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DivergenceWarning,
    EmptyTruncationError,
    EvaluationError,
    MeasureError,
    NodeCollisionError,
)
from .quadrature import gauss_legendre, normal_mass, standard_normal_rule

KINDS = ("uniform", "gaussian", "lognormal", "custom_poly_density")
INNER_PRODUCTS = ("ambient", "graph")


def csum(values) -> complex | float:
    """Exactly rounded sum of a real or complex array."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def _number(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MeasureError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise MeasureError(f"{what} must be finite, got {value!r}")
    return float(value)


def _endpoint(value, what):
    if value in ("-inf", "inf"):
        return float(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MeasureError(f"{what} must be a number or '-inf'/'inf', got {value!r}")
    if math.isnan(value):
        raise MeasureError(f"{what} is NaN")
    return float(value)


def _encode_endpoint(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass(frozen=True)
class Atom:
    x: float
    w: float

    def __post_init__(self):
        _number(self.x, "atom location")
        if _number(self.w, "atom weight") <= 0.0:
            raise MeasureError(f"atom weight must be positive, got {self.w!r}")


@dataclass(frozen=True, eq=True)
class AcPart:
    """Absolutely continuous part: a density on an interval plus a rule size.

    ``support`` and ``params`` are stored exactly as given so that a JSON
    description survives a round trip unchanged.
    """

    kind: str
    support: tuple
    params: Mapping | None = None
    nodes: int = 32

    __hash__ = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MeasureError(f"unknown density kind {self.kind!r}; expected one of {KINDS}")
        if len(self.support) != 2:
            raise MeasureError("support must have two endpoints")
        object.__setattr__(self, "support", tuple(self.support))
        a, b = self.interval
        if not a < b:
            raise MeasureError(f"empty support {self.support!r}")
        if isinstance(self.nodes, bool) or not isinstance(self.nodes, int) or self.nodes < 1:
            raise MeasureError(f"nodes must be a positive integer, got {self.nodes!r}")
        if self.params is not None and not isinstance(self.params, Mapping):
            raise MeasureError("params must be an object")
        self._validate_params()
        if not self.mass() > 0.0:
            raise MeasureError(f"{self.kind} part on {self.support!r} has zero mass")

    # -- parameters -------------------------------------------------------
    @property
    def interval(self) -> tuple[float, float]:
        return (_endpoint(self.support[0], "support start"),
                _endpoint(self.support[1], "support end"))

    def _p(self, key, default):
        if self.params is None or key not in self.params:
            return default
        return _number(self.params[key], f"{self.kind} parameter {key!r}")

    def _validate_params(self):
        a, b = self.interval
        params = dict(self.params or {})
        allowed = {
            "uniform": {"level", "mass"},
            "gaussian": {"mean", "std", "scale"},
            "lognormal": {"mu", "sigma", "scale"},
            "custom_poly_density": {"coeffs"},
        }[self.kind]
        extra = set(params) - allowed
        if extra:
            raise MeasureError(f"unknown {self.kind} parameters {sorted(extra)}")
        if self.kind in ("uniform", "custom_poly_density") and not (
            math.isfinite(a) and math.isfinite(b)
        ):
            raise MeasureError(f"{self.kind} needs a finite support")
        if self.kind == "uniform":
            if "level" in params and "mass" in params:
                raise MeasureError("give either 'level' or 'mass' for a uniform part")
            if self.level <= 0.0:
                raise MeasureError("uniform level must be positive")
        elif self.kind == "gaussian":
            if self._p("std", 1.0) <= 0.0 or self._p("scale", 1.0) <= 0.0:
                raise MeasureError("gaussian std and scale must be positive")
        elif self.kind == "lognormal":
            if a < 0.0:
                raise MeasureError("lognormal support must lie in [0, inf]")
            if self._p("sigma", 1.0) <= 0.0 or self._p("scale", 1.0) <= 0.0:
                raise MeasureError("lognormal sigma and scale must be positive")
        else:
            coeffs = params.get("coeffs")
            if not isinstance(coeffs, (list, tuple)) or not coeffs:
                raise MeasureError("custom_poly_density needs a non-empty 'coeffs' list")
            for c in coeffs:
                _number(c, "polynomial coefficient")
            grid = np.linspace(a, b, 2001)
            if np.any(self.density(grid) < 0.0):
                raise MeasureError("custom polynomial density is negative on its support")

    @property
    def level(self) -> float:
        a, b = self.interval
        if self.params is not None and "mass" in self.params:
            return _number(self.params["mass"], "uniform mass") / (b - a)
        return self._p("level", 1.0 / (b - a))

    def _coeffs(self):
        return np.array([float(c) for c in self.params["coeffs"]])

    # -- density, mass, rule ------------------------------------------------
    def density(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, b = self.interval
        inside = (lam >= a) & (lam <= b)
        if self.kind == "uniform":
            out = np.full(lam.shape, self.level)
        elif self.kind == "gaussian":
            mean, std, scale = self._p("mean", 0.0), self._p("std", 1.0), self._p("scale", 1.0)
            z = (lam - mean) / std
            out = scale * np.exp(-0.5 * z * z) / (std * math.sqrt(2.0 * math.pi))
        elif self.kind == "lognormal":
            mu, sigma, scale = self._p("mu", 0.0), self._p("sigma", 1.0), self._p("scale", 1.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                z = (np.log(lam) - mu) / sigma
                out = scale * np.exp(-0.5 * z * z) / (lam * sigma * math.sqrt(2.0 * math.pi))
            out = np.where(lam > 0.0, out, 0.0)
        else:
            out = np.polynomial.polynomial.polyval(lam, self._coeffs())
        return np.where(inside, out, 0.0)

    def _z_interval(self):
        a, b = self.interval
        if self.kind == "gaussian":
            mean, std = self._p("mean", 0.0), self._p("std", 1.0)
            return (a - mean) / std, (b - mean) / std
        mu, sigma = self._p("mu", 0.0), self._p("sigma", 1.0)
        la = -math.inf if a == 0.0 else math.log(a)
        lb = math.log(b) if math.isfinite(b) else math.inf
        return (la - mu) / sigma, (lb - mu) / sigma

    def mass(self) -> float:
        a, b = self.interval
        if self.kind == "uniform":
            return self.level * (b - a)
        if self.kind == "custom_poly_density":
            P = np.polynomial.Polynomial(self._coeffs()).integ()
            return float(P(b) - P(a))
        za, zb = self._z_interval()
        return self._p("scale", 1.0) * normal_mass(za, zb)

    def rule(self, n: int | None = None):
        """Return ``(nodes, weights, exact_degree)`` of the part's quadrature."""
        n = self.nodes if n is None else n
        a, b = self.interval
        if self.kind == "uniform":
            x, w = gauss_legendre(a, b, n)
            return x, w * self.level, 2 * n - 1
        if self.kind == "custom_poly_density":
            x, w = gauss_legendre(a, b, n)
            deg = len(self._coeffs()) - 1
            return x, w * self.density(x), max(2 * n - 1 - deg, -1)
        za, zb = self._z_interval()
        z, w, exact = standard_normal_rule(za, zb, n)
        w = w * self._p("scale", 1.0)
        if self.kind == "gaussian":
            return self._p("mean", 0.0) + self._p("std", 1.0) * z, w, exact
        x = np.exp(self._p("mu", 0.0) + self._p("sigma", 1.0) * z)
        return x, w, -1

    def with_support(self, a, b) -> "AcPart":
        params = self.params
        if self.kind == "uniform":
            params = {"level": self.level}
        return AcPart(self.kind, (a, b), params, self.nodes)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "support": [_encode_endpoint(v) for v in self.support]}
        if self.params is not None:
            out["params"] = json.loads(json.dumps(dict(self.params)))
        out["nodes"] = self.nodes
        return out


@dataclass(frozen=True)
class SpectralMeasure:
    """Atoms plus absolutely continuous parts; ``total_mass`` is cached."""

    atoms: tuple = ()
    ac: tuple = ()
    layout: tuple = ("atoms", "ac")
    total_mass: float = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "ac", tuple(self.ac))
        xs = [float(a.x) for a in self.atoms]
        if len(set(xs)) != len(xs):
            raise MeasureError("atom locations must be pairwise distinct")
        mass = self._mass()
        if not (math.isfinite(mass) and mass > 0.0):
            raise MeasureError("measure has no mass")
        object.__setattr__(self, "total_mass", mass)

    def _mass(self) -> float:
        return math.fsum([float(a.w) for a in self.atoms] + [p.mass() for p in self.ac])

    # -- serialization ------------------------------------------------------
    @classmethod
    def from_dict(cls, doc: Mapping) -> "SpectralMeasure":
        if not isinstance(doc, Mapping):
            raise MeasureError("measure description must be a JSON object")
        extra = set(doc) - {"atoms", "ac"}
        if extra:
            raise MeasureError(f"unknown measure keys {sorted(extra)}")
        atoms = []
        for item in doc.get("atoms", []):
            if not isinstance(item, Mapping) or set(item) != {"x", "w"}:
                raise MeasureError(f"atom must be an object with keys x and w, got {item!r}")
            atoms.append(Atom(item["x"], item["w"]))
        parts = []
        for item in doc.get("ac", []):
            if not isinstance(item, Mapping):
                raise MeasureError("ac entries must be objects")
            extra = set(item) - {"kind", "support", "params", "nodes"}
            if extra or "kind" not in item or "support" not in item or "nodes" not in item:
                raise MeasureError(f"malformed ac part {item!r}")
            support = item["support"]
            if not isinstance(support, (list, tuple)):
                raise MeasureError("support must be a two-element list")
            parts.append(AcPart(item["kind"], tuple(support), item.get("params"), item["nodes"]))
        layout = tuple(k for k in doc if k in ("atoms", "ac"))
        return cls(tuple(atoms), tuple(parts), layout)

    def to_dict(self) -> dict:
        out = {}
        for key in self.layout:
            if key == "atoms":
                out["atoms"] = [{"x": a.x, "w": a.w} for a in self.atoms]
            else:
                out["ac"] = [p.to_dict() for p in self.ac]
        if not self.layout:
            if self.atoms:
                out["atoms"] = [{"x": a.x, "w": a.w} for a in self.atoms]
            if self.ac:
                out["ac"] = [p.to_dict() for p in self.ac]
        return out

    @classmethod
    def from_json(cls, text: str) -> "SpectralMeasure":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MeasureError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)

    # -- queries --------------------------------------------------------------
    def is_symmetric(self) -> bool:
        """True when the measure is invariant under reflection about zero."""
        atoms = sorted((float(a.x), float(a.w)) for a in self.atoms)
        mirrored = sorted((-x, w) for x, w in atoms)
        if atoms != mirrored:
            return False
        grid = np.linspace(-50.0, 50.0, 4001)
        dens = sum((p.density(grid) for p in self.ac), np.zeros_like(grid))
        return bool(np.allclose(dens, dens[::-1], rtol=1e-12, atol=0.0))

    def support_hull(self) -> tuple[float, float]:
        los = [float(a.x) for a in self.atoms] + [p.interval[0] for p in self.ac]
        his = [float(a.x) for a in self.atoms] + [p.interval[1] for p in self.ac]
        return min(los), max(his)


# -- convenience constructors -------------------------------------------------

def atomic(locations: Sequence[float], weights: Sequence[float]) -> SpectralMeasure:
    return SpectralMeasure(tuple(Atom(x, w) for x, w in zip(locations, weights)), (), ("atoms",))


def uniform(a: float, b: float, nodes: int = 32, mass: float | None = None) -> SpectralMeasure:
    params = None if mass is None else {"mass": mass}
    return SpectralMeasure((), (AcPart("uniform", (a, b), params, nodes),), ("ac",))


def gaussian(nodes: int = 200, mean: float = 0.0, std: float = 1.0) -> SpectralMeasure:
    params = None if (mean, std) == (0.0, 1.0) else {"mean": mean, "std": std}
    return SpectralMeasure((), (AcPart("gaussian", ("-inf", "inf"), params, nodes),), ("ac",))


def lognormal(nodes: int = 200, mu: float = 0.0, sigma: float = 1.0) -> SpectralMeasure:
    params = None if (mu, sigma) == (0.0, 1.0) else {"mu": mu, "sigma": sigma}
    return SpectralMeasure((), (AcPart("lognormal", (0, "inf"), params, nodes),), ("ac",))


# -- discretized space -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscretizedSpace:
    """Finite node/weight realization of ``L^2(R, mu)``.

    Vectors are arrays of values at ``nodes``. The ambient inner product is
    ``sum w conj(f) h`` and the graph inner product uses ``w (1 + nodes**2)``.
    ``exact_degree`` is the largest polynomial degree integrated exactly
    (``inf`` for purely atomic measures, ``-1`` when there is no guarantee).
    """

    nodes: np.ndarray
    weights: np.ndarray
    source: SpectralMeasure | None = None
    exact_degree: float = -1
    part_index: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 1:
            raise MeasureError("nodes and weights must be equal-length 1-d arrays with D >= 1")
        if not np.all(np.isfinite(nodes)) or not np.all(np.isfinite(weights)):
            raise MeasureError("nodes and weights must be finite")
        if np.any(weights <= 0.0):
            raise MeasureError("weights must be strictly positive")
        if np.any(np.diff(nodes) <= 0.0):
            raise MeasureError("nodes must be strictly increasing")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.part_index is not None:
            idx = np.array(self.part_index, dtype=int)
            idx.flags.writeable = False
            object.__setattr__(self, "part_index", idx)

    @property
    def D(self) -> int:
        return self.nodes.size

    @property
    def graph_weights(self) -> np.ndarray:
        return self.weights * (1.0 + self.nodes ** 2)

    def ip_weights(self, ip: str = "ambient") -> np.ndarray:
        if ip == "ambient":
            return self.weights
        if ip == "graph":
            return self.graph_weights
        raise ValueError(f"inner product must be one of {INNER_PRODUCTS}, got {ip!r}")

    def inner(self, f, h, ip: str = "ambient"):
        """Compensated ``<f, h>`` (conjugate-linear in ``f``)."""
        f = np.asarray(f)
        h = np.asarray(h)
        return csum(self.ip_weights(ip) * np.conj(f) * h)

    def norm(self, f, ip: str = "ambient") -> float:
        f = np.asarray(f)
        return math.sqrt(math.fsum(self.ip_weights(ip) * np.abs(f) ** 2))

    def values(self, func: Callable | float | np.ndarray) -> np.ndarray:
        """Value-vector of a function of the spectral variable."""
        if callable(func):
            out = np.asarray(func(self.nodes))
            if out.shape == ():
                out = np.full(self.D, out[()])
        else:
            out = np.asarray(func)
            if out.shape == ():
                out = np.full(self.D, out[()])
        if out.shape != (self.D,):
            raise ValueError(f"value-vector must have shape ({self.D},), got {out.shape}")
        bad = ~np.isfinite(out)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise EvaluationError(f"non-finite value at node {i} (lambda = {float(self.nodes[i])!r})")
        return out

    def ones(self) -> np.ndarray:
        return np.ones(self.D)

    def mask(self, n: float) -> np.ndarray:
        return np.abs(self.nodes) <= n

    @classmethod
    def from_arrays(cls, nodes, weights) -> "DiscretizedSpace":
        nodes = np.asarray(nodes, dtype=float)
        order = np.argsort(nodes, kind="stable")
        return cls(nodes[order], np.asarray(weights, dtype=float)[order], None, math.inf)


# -- operations ------------------------------------------------------------------

def _resolution_list(mu: SpectralMeasure, resolution) -> list[int]:
    if resolution is None:
        return [p.nodes for p in mu.ac]
    if isinstance(resolution, int) and not isinstance(resolution, bool):
        counts = [resolution] * len(mu.ac)
    else:
        counts = list(resolution)
        if len(counts) != len(mu.ac):
            raise MeasureError(
                f"resolution lists {len(counts)} node counts for {len(mu.ac)} continuous parts"
            )
    for c in counts:
        if isinstance(c, bool) or not isinstance(c, int) or c < 1:
            raise MeasureError(f"need at least one node per continuous part, got {c!r}")
    return counts


def _collect(mu: SpectralMeasure, resolution=None):
    counts = _resolution_list(mu, resolution)
    xs = [np.array([float(a.x) for a in mu.atoms])]
    ws = [np.array([float(a.w) for a in mu.atoms])]
    idx = [np.full(len(mu.atoms), -1)]
    exact = math.inf
    for k, (part, n) in enumerate(zip(mu.ac, counts)):
        x, w, deg = part.rule(n)
        xs.append(x)
        ws.append(w)
        idx.append(np.full(x.size, k))
        exact = min(exact, deg)
    return np.concatenate(xs), np.concatenate(ws), np.concatenate(idx), exact


def discretize(mu: SpectralMeasure, resolution=None) -> DiscretizedSpace:
    """Atoms become nodes; each continuous part contributes its Gauss-type rule.

    ``resolution`` is ``None`` (use each part's declared node count), a single
    integer, or one integer per continuous part.
    """
    x, w, idx, exact = _collect(mu, resolution)
    keep = w > 0.0  # far-tail Gauss-Hermite weights can underflow
    x, w, idx = x[keep], w[keep], idx[keep]
    order = np.argsort(x, kind="stable")
    x, w, idx = x[order], w[order], idx[order]
    dup = np.flatnonzero(np.diff(x) == 0.0)
    if dup.size:
        raise NodeCollisionError(
            f"nodes collide at lambda = {float(x[dup[0]])!r}; choose a different resolution"
        )
    return DiscretizedSpace(x, w, mu, exact, idx)


def integrate(mu: SpectralMeasure, f: Callable, full_output: bool = False):
    """Integrate ``f`` against ``mu`` with the declared quadrature.

    With ``full_output=True`` returns ``(value, info)`` where ``info`` holds
    ``divergence_warning`` (tail contributions not decaying) and the
    number of nodes used.
    """
    x, w, idx, _ = _collect(mu)
    fx = np.asarray(f(x))
    if fx.shape == ():
        fx = np.full(x.shape, fx[()])
    bad = ~np.isfinite(fx)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(f"f is not finite at node lambda = {float(x[i])!r}")
    contrib = w * fx
    value = csum(contrib)
    total = math.fsum(np.abs(contrib))
    diverging = False
    for k, part in enumerate(mu.ac):
        a, b = part.interval
        sel = np.flatnonzero(idx == k)
        if sel.size < 4 or total == 0.0:
            continue
        order = sel[np.argsort(x[sel])]
        ends = []
        if math.isinf(b):
            ends.append(order[-3:])
        if math.isinf(a) or (part.kind == "lognormal" and a == 0.0):
            ends.append(order[:3])
        for e in ends:
            if np.max(np.abs(contrib[e])) > 1e-3 * total:
                diverging = True
    if diverging:
        warnings.warn("integrand tail contributions do not decay; integral may diverge",
                      DivergenceWarning, stacklevel=2)
    if full_output:
        return value, {"divergence_warning": diverging, "nodes": int(x.size)}
    return value


def truncate(mu: SpectralMeasure, n: float) -> SpectralMeasure:
    """Restrict ``mu`` to ``[-n, n]`` (the spectral truncation of ``g``)."""
    n = _number(n, "truncation radius")
    if n <= 0.0:
        raise MeasureError("truncation radius must be positive")
    atoms = tuple(a for a in mu.atoms if abs(float(a.x)) <= n)
    parts = []
    for p in mu.ac:
        a, b = p.interval
        lo = p.support[0] if a >= -n else -n
        hi = p.support[1] if b <= n else n
        if _endpoint(lo, "lo") < _endpoint(hi, "hi"):
            parts.append(p.with_support(lo, hi))
    mass = math.fsum([float(a.w) for a in atoms] + [q.mass() for q in parts])
    if not mass > 0.0:
        raise EmptyTruncationError(f"no mass inside [-{n}, {n}]")
    return SpectralMeasure(atoms, tuple(parts), mu.layout)


def refine(mu: SpectralMeasure, breakpoints: Sequence[float], nodes: int | None = None) -> SpectralMeasure:
    """Split continuous parts at the given breakpoints.

    The measure is unchanged; only the quadrature resolves the breakpoints,
    which keeps truncation tail masses accurate on the discretized space.
    """
    cuts = sorted({float(c) for c in breakpoints})
    parts = []
    for p in mu.ac:
        a, b = p.interval
        inner = [c for c in cuts if a < c < b]
        edges = [p.support[0]] + inner + [p.support[1]]
        for lo, hi in zip(edges[:-1], edges[1:]):
            q = p.with_support(lo, hi)
            if nodes is not None:
                q = AcPart(q.kind, q.support, q.params, nodes)
            parts.append(q)
    return SpectralMeasure(mu.atoms, tuple(parts), mu.layout)


@dataclass(frozen=True)
class GapReport:
    gap_lower_bound: float
    zero_in_resolvent: bool


def spectral_gap_at_zero(mu: SpectralMeasure, eps: float = 1e-12) -> GapReport:
    """Distance from zero to the support of ``mu``."""
    dists = [abs(float(a.x)) for a in mu.atoms]
    for p in mu.ac:
        a, b = p.interval
        dists.append(0.0 if a <= 0.0 <= b else min(abs(a), abs(b)))
    gap = min(dists)
    return GapReport(gap, gap > eps)
