import numpy as np
import pytest

from efc import (ExplainConfig, ForestParams, SyntheticSpec, generate,
                 get_explanations, select_explanation_instances,
                 train_random_forest)


@pytest.fixture(scope="session")
def toy():
    return generate(SyntheticSpec("Toy", 2000, seed=7))


@pytest.fixture(scope="session")
def logical_conc_b():
    return generate(SyntheticSpec("LogicalConcB", 2000, seed=11))


@pytest.fixture(scope="session")
def toy_explanations(toy):
    """Explanations of every minority-class toy instance, plus the explained
    rows themselves."""
    model = train_random_forest(toy, ForestParams(seed=3))
    cfg = ExplainConfig(samples_per_attribute=200, seed=3)
    c, idx = select_explanation_instances(toy, cfg)
    matrix = get_explanations(toy.subset(idx), model, c, cfg, background=toy)
    return matrix, toy.subset(idx)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
