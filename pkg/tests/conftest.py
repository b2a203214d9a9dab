import numpy as np
import pytest

from warmstart.core import NetworkSpec, init_params, min_kink_distance
from warmstart.data import GaussianParams, ScenarioSpec

ACCEPTANCE_LINES = []


def random_grad_config(rng, kink_margin=1e-3):
    """Random small network, jittered params and batch away from ReLU kinks."""
    widths = [int(rng.integers(2, 6))]
    widths += [int(rng.integers(2, 7)) for _ in range(int(rng.integers(0, 3)))]
    widths += [int(rng.integers(2, 5))]
    spec = NetworkSpec(tuple(widths))
    while True:
        params = init_params(spec, int(rng.integers(1 << 30)))
        params = params.map(lambda v: v + 0.1 * rng.normal(size=v.shape))
        X = rng.normal(size=(int(rng.integers(1, 8)), widths[0]))
        y = rng.integers(0, widths[-1], len(X))
        if min_kink_distance(params, X) > kink_margin:
            return spec, params, X, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_scenario():
    return ScenarioSpec(
        "class_incremental", (3, 1),
        GaussianParams(n_classes=4, dim=6, spread=1.0, train_per_class=40, test_per_class=10),
        seed=3,
    )


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
