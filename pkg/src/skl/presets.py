"""Named scenarios; the catalog order is fixed."""
from __future__ import annotations

import copy

from .measure import atomic, gaussian, lognormal, uniform

_G200 = gaussian(nodes=200).to_dict()
_LN200 = lognormal(nodes=200).to_dict()
_U12 = uniform(1.0, 2.0, nodes=64).to_dict()
_U11 = uniform(-1.0, 1.0, nodes=64).to_dict()
_U11_8 = uniform(-1.0, 1.0, nodes=8).to_dict()
_U11_SMALL = uniform(-1.0, 1.0, nodes=1).to_dict()
_TWO_ATOMS = atomic([-1.0, 1.0], [0.5, 0.5]).to_dict()
_POLYS = {"one": [1.0], "lambda": [0.0, 1.0], "lambda_sq": [0.0, 0.0, 1.0]}


def _p(name, description, measure, task, params, seed=None):
    doc = {"name": name, "description": description, "measure": measure, "task": task,
           "params": params}
    if seed is not None:
        doc["seed"] = seed
    return doc


_PRESETS = [
    _p("gaussian_moments", "Gaussian moments at 200 nodes against closed forms",
       _G200, "moments", {"N": 20, "oracle": True}),
    _p("lognormal_moments", "Log-normal moments at 200 nodes against exp(n^2/2)",
       _LN200, "moments", {"N": 10, "oracle": True}),
    _p("hamburger_random", "Hankel positivity on random atomic and sign-perturbed sequences",
       _U11, "hamburger", {"trials": 100, "max_atoms": 6, "N": 10}, seed=0),
    _p("lognormal_carleman", "Carleman partial sums for the log-normal (convergent, limit 1/(e-1))",
       _LN200, "carleman", {"N": 80, "source": "closed_form"}),
    _p("gaussian_carleman", "Carleman partial sums for the Gaussian at horizon 10^4",
       _G200, "carleman", {"N": 20000, "source": "closed_form"}),
    _p("gaussian_determinacy", "Series test sum |p_k(i)|^2 for the Gaussian, K=40",
       _G200, "determinacy", {"K": 40}),
    _p("lognormal_determinacy", "Series test sum |p_k(i)|^2 for the log-normal, K=12",
       _LN200, "determinacy", {"K": 12}),
    _p("legendre_recurrence", "Stieltjes coefficients of uniform[-1,1] against Legendre",
       _U11, "recurrence", {"K": 20, "reference": "legendre"}),
    _p("hermite_recurrence", "Stieltjes coefficients of the Gaussian against Hermite",
       _G200, "recurrence", {"K": 20, "reference": "hermite"}),
    _p("uniform12_solve", "Krylov solution of lam f = 1 on uniform[1,2]",
       _U12, "solve", {"m_max": 20, "tol": 1e-10}),
    _p("uniform12_kint", "Krylov-intersection indicator on uniform[1,2] plus the two-line check",
       _U12, "kint", {"m": 5, "M_big": 30, "plane_angle": 1.0471975511965976}, seed=0),
    _p("gaussian_kint", "Krylov-intersection indicator for the Gaussian, m=5, M_big=40",
       _G200, "kint", {"m": 5, "M_big": 40}, seed=0),
    _p("twoatom_kint", "Krylov-intersection indicator with no room for a complement",
       _TWO_ATOMS, "kint", {"m": 1, "M_big": 2}, seed=0),
    _p("lognormal_witness", "Witness sin(2 pi ln lam): orthogonal to all powers, no core decay",
       _LN200, "core", {"m": 12, "tests": ["sin_2pi_log"], "witness": "sin_2pi_log", "n_max": 12}),
    _p("uniform12_core", "Graph-norm Krylov approximation of 1/lam on uniform[1,2]",
       _U12, "core", {"m": 20, "tests": ["inv_lambda"]}),
    _p("uniform12_classify", "Vector class of g=1 on uniform[1,2]",
       _U12, "classify", {"N": 60, "source": "closed_form"}),
    _p("gaussian_classify", "Vector class of g=1 for the Gaussian",
       _G200, "classify", {"N": 200, "source": "closed_form"}),
    _p("lognormal_classify", "Vector class of g=1 for the log-normal",
       _LN200, "classify", {"N": 40, "source": "closed_form"}),
    _p("gaussian_truncation", "Truncation program for the Gaussian at n = 1, 2, 3, 4",
       _G200, "truncation", {"n_grid": [1, 2, 3, 4], "panel": ["one", "exp_neg_abs"],
                             "polynomials": _POLYS}, seed=0),
    _p("uniform_truncation", "Truncation program on uniform[-1,1] with a 5-node master space",
       _U11_SMALL, "truncation", {"n_grid": [0.25, 0.5, 1], "m": 4, "piece_nodes": 1,
                                  "polynomials": _POLYS}, seed=0),
    _p("twoatom_truncation", "Truncation of a two-atom measure; the first radius is empty",
       _TWO_ATOMS, "truncation", {"n_grid": [0.5, 2]}, seed=0),
    _p("weakgap_properties", "Weak-gap metric checks on an 8-node space",
       _U11_8, "weakgap", {"mode": "properties", "triples": 50, "samples": 8, "max_dim": 3},
       seed=0),
]

_INDEX = {p["name"]: p for p in _PRESETS}


def list_presets() -> list[tuple[str, str]]:
    return [(p["name"], p["description"]) for p in _PRESETS]


def get_preset(name: str) -> dict:
    try:
        return copy.deepcopy(_INDEX[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; see 'skl list'") from None
