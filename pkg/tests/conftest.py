import itertools

import numpy as np
import pytest

from isneak.model_io import (
    CandidatePool,
    CnfModel,
    Goal,
    ObjectiveSpec,
    check_validity,
    enumerate_valid,
    generate_synthetic_model,
)
from isneak.preprocess import encode_pool


def brute_force_solutions(model: CnfModel) -> list[tuple[bool, ...]]:
    """Independent oracle: enumerate every assignment and filter by clause walk."""
    out = []
    for bits in itertools.product([False, True], repeat=model.num_vars):
        if check_validity(model, bits):
            out.append(bits)
    return out


@pytest.fixture(scope="session")
def small_pool():
    """Encoded 64-candidate pool over a 20-feature constrained model."""
    model, spec = generate_synthetic_model(20, 0.5, seed=3)
    pool = enumerate_valid(model, 64, seed=5, spec=spec)
    encode_pool(pool)
    return pool


@pytest.fixture(scope="session")
def mid_pool():
    """Encoded 400-candidate pool over a 30-feature constrained model."""
    model, spec = generate_synthetic_model(30, 0.5, seed=2)
    pool = enumerate_valid(model, 400, seed=5, spec=spec)
    encode_pool(pool)
    assert pool.n == 400
    return pool


@pytest.fixture()
def two_goal_spec():
    return ObjectiveSpec((Goal("cost", "minimize"), Goal("value", "maximize")))
