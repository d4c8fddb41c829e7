import random

import pytest
from hypothesis import HealthCheck, settings

from perimkit import CellSet, build_from_string

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")

SMALL_MODELS = ["grid:3x3", "star:3", "star:4", "star:3:1:2", "path:3", "strip:3x2", "carpet:1"]


@pytest.fixture(scope="session")
def models():
    return {s: build_from_string(s) for s in SMALL_MODELS}


def bounded_ids(model):
    return [c.id for c in model.cells if not c.unbounded]


def random_set(model, rng: random.Random, p: float = 0.5) -> CellSet:
    return CellSet.from_ids(model, [i for i in bounded_ids(model) if rng.random() < p])


def set_from_bits(model, bits: int) -> CellSet:
    ids = bounded_ids(model)
    return CellSet.from_ids(model, [c for k, c in enumerate(ids) if bits >> k & 1])
