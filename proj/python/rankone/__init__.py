"""Rank-one perturbations of spectral measures.

Measures are plain dicts in the scenario JSON layout, e.g.
``{"atoms": [[-1, 0.5], [1, 0.5]]}``. Structured results come back as dicts.
"""

import json

from . import _core
from ._core import ConvergenceError, DomainError, ValidationError, __version__

__all__ = [
    "ConvergenceError",
    "DomainError",
    "ValidationError",
    "__version__",
    "borel_transform",
    "jacobi_from_measure",
    "killip_simon_check",
    "perturb",
    "run_scenario",
    "secular_roots",
    "total_mass",
    "verdict",
]


def _m(measure):
    return measure if isinstance(measure, str) else json.dumps(measure)


def borel_transform(measure, z):
    return _core.borel_transform(_m(measure), complex(z))


def total_mass(measure):
    return _core.total_mass(_m(measure))


def perturb(measure, alpha):
    return json.loads(_core.perturb(_m(measure), float(alpha)))


def secular_roots(measure, alpha):
    return _core.secular_roots(_m(measure), float(alpha))


def jacobi_from_measure(measure, n):
    return json.loads(_core.jacobi_from_measure(_m(measure), int(n)))


def killip_simon_check(measure):
    return json.loads(_core.killip_simon_check(_m(measure)))


def verdict(measure, interval, alpha):
    lo, hi = interval
    return json.loads(_core.verdict(_m(measure), float(lo), float(hi), float(alpha)))


def run_scenario(scenario, command="all", threads=1, tol=1e-8):
    """Run a scenario given as a dict, JSON text or a path."""
    if isinstance(scenario, dict):
        text = json.dumps(scenario)
    elif isinstance(scenario, str) and scenario.lstrip().startswith("{"):
        text = scenario
    else:
        with open(scenario) as f:
            text = f.read()
    return json.loads(_core.run_scenario(text, command, threads, tol))
