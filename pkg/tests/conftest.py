"""Shared fixtures: session-cached equilibrium traces.

Full-structure traces take tens of seconds each, so they are computed once
per session and shared across test modules. Set SNAPSPIRAL_TEST_TRACES to
a pickle file of {label: (EquilibriumPath, free_equilibria)} to preload
traces during development; the file is never written by the tests.
"""

import os
import pickle

import pytest

from snapspiral.continuation import SolverSettings, arc_length_trace, find_free_equilibria
from snapspiral.scenario import build_system, scenario_by_label

_CACHE = {}


def _preload():
    path = os.environ.get("SNAPSPIRAL_TEST_TRACES")
    if path and os.path.exists(path):
        with open(path, "rb") as fh:
            for label, pair in pickle.load(fh).items():
                _CACHE.setdefault(label, pair)


_preload()


@pytest.fixture(scope="session")
def traced():
    """traced(label) -> (scenario, system, path, free_equilibria)."""

    def get(label):
        sc = scenario_by_label(label)
        system = build_system(sc)
        if label not in _CACHE:
            settings = SolverSettings()
            path = arc_length_trace(system, sc.loading.stroke, settings,
                                    metadata={"scenario": label})
            free = find_free_equilibria(system, path, settings)
            _CACHE[label] = (path, free)
        path, free = _CACHE[label]
        return sc, system, path, free

    return get


@pytest.fixture(scope="session")
def truss_traced():
    from snapspiral.verification import trace_vonmises

    if "vonmises" not in _CACHE:
        _CACHE["vonmises"] = trace_vonmises()
    return _CACHE["vonmises"][1]
