import sys
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import chansense as cs


@pytest.fixture(scope="session")
def golden_spec():
    return cs.load_builtin("golden_k5")


@pytest.fixture(scope="session")
def golden_sub3(golden_spec):
    """Golden instance restricted to three channels starting at rows 1, 3, 5."""
    return replace(golden_spec, n_channels=3,
                   initial_pmfs=(golden_spec.initial_pmfs[0],
                                 golden_spec.initial_pmfs[3],
                                 golden_spec.initial_pmfs[5]))


@pytest.fixture(scope="session")
def two_state_spec():
    return cs.load_builtin("two_state")


def gen_spec(seed, k=3, n=3, el=None, beta=0.9, constraint="try_A1toA4", **kw):
    """Deterministic condition-satisfying instance for a test."""
    return cs.random_spec(k, n, el if el is not None else k, beta, seed,
                          constraint=constraint, **kw)
