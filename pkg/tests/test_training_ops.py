import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warmstart.core import NetworkSpec, ParamSet, init_params
from warmstart.optim import OptimizerState, adam_step, optimizer_step, sgd_step
from warmstart.schedule import SchedulerSpec, lr_at
from warmstart.training import PERTURB_DEFAULT, SHRINK_DEFAULT, shrink_perturb


def vec(*v):
    return ParamSet({"W0": np.array(v, dtype=np.float64)})


def test_shrink_perturb_example():
    out = shrink_perturb(vec(1.0, -2.0), vec(0.5, 0.5), 0.4, 0.001)
    np.testing.assert_allclose(out["W0"], [0.4005, -0.7995], rtol=0, atol=1e-15)


def test_shrink_perturb_identity_is_byte_exact():
    old = init_params(NetworkSpec((3, 4, 2)), 0)
    old["W0"][0, 0] = -0.0
    out = shrink_perturb(old, init_params(NetworkSpec((3, 4, 2)), 1), 1.0, 0.0)
    assert out.equals(old)
    assert out["W0"] is not old["W0"]


def test_shrink_perturb_defaults():
    assert (SHRINK_DEFAULT, PERTURB_DEFAULT) == (0.4, 0.001)


@pytest.mark.parametrize("alpha,beta", [(-0.1, 0.0), (1.1, 0.0), (0.5, -1e-3)])
def test_shrink_perturb_rejects_illegal(alpha, beta):
    with pytest.raises(ValueError):
        shrink_perturb(vec(1.0), vec(1.0), alpha, beta)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(0, 1), beta=st.floats(0, 1),
    seed=st.integers(0, 2**31 - 1),
)
def test_shrink_perturb_elementwise(alpha, beta, seed):
    spec = NetworkSpec((3, 4, 2))
    old, rand = init_params(spec, seed), init_params(spec, seed + 1)
    out = shrink_perturb(old, rand, alpha, beta)
    for k in old:
        np.testing.assert_array_equal(out[k], alpha * old[k] + beta * rand[k])


@pytest.mark.parametrize("m", [0.25, 0.5, 1.0])
def test_cosine_endpoints(m):
    s = SchedulerSpec("cosine", 1e-3, 1e-6, 1000, m)
    assert abs(lr_at(s, 0) - 1e-3) <= 1e-12
    assert abs(lr_at(s, s.effective_horizon) - 1e-6) <= 1e-12
    assert lr_at(s, s.effective_horizon + 50) == 1e-6


def test_cosine_midpoint_and_defaults():
    s = SchedulerSpec(horizon=1000)
    assert (s.lr_max, s.lr_min) == (1e-3, 1e-6)
    assert abs(lr_at(s, 500) - (1e-3 + 1e-6) / 2) <= 1e-12


def test_cosine_monotone():
    s = SchedulerSpec(horizon=400, multiplier=0.5)
    lrs = [lr_at(s, t) for t in range(401)]
    assert all(a >= b for a, b in zip(lrs, lrs[1:]))


def test_compression_identity():
    rng = np.random.default_rng(0)
    base = SchedulerSpec(horizon=1000)
    for m in (0.25, 0.5):
        comp = base.compressed(m)
        for t in rng.uniform(0, comp.effective_horizon, 1000):
            assert lr_at(comp, t) == pytest.approx(lr_at(base, t / m), abs=1e-12)


def test_multistep_scales_milestones():
    s = SchedulerSpec("multistep", 1.0, 0.0, 100, 0.5, milestones=(50, 75), gamma=0.1)
    assert lr_at(s, 24) == 1.0
    assert lr_at(s, 25) == pytest.approx(0.1)
    assert lr_at(s, 38) == pytest.approx(0.01)


def test_scheduler_rejects_illegal():
    with pytest.raises(ValueError):
        SchedulerSpec(multiplier=0)
    with pytest.raises(ValueError):
        SchedulerSpec(lr_max=1e-6, lr_min=1e-3)
    with pytest.raises(ValueError):
        lr_at(SchedulerSpec(), -1)


def test_sgd_examples():
    assert sgd_step(vec(1.0), vec(2.0), 0.5).equals(vec(0.0))
    p = vec(0.3, -1.2)
    assert sgd_step(p, vec(5.0, 7.0), 0.0).equals(p)


def test_sgd_two_steps_on_linear_model():
    # loss = g . theta has a constant gradient, so two steps of h equal one of 2h
    g, h = vec(0.25, -0.5), 0.125
    p = vec(1.0, 2.0)
    assert sgd_step(sgd_step(p, g, h), g, h).equals(sgd_step(p, g, 2 * h))


def test_adam_first_step_closed_form():
    g = np.array([0.5, -2.0, 1e-3, 0.0])
    p = ParamSet({"W0": np.ones(4)})
    new, state = adam_step(OptimizerState.for_params("adam", p), p, ParamSet({"W0": g}), 0.01)
    expected = 1.0 - 0.01 * g / (np.abs(g) + 1e-8)
    np.testing.assert_allclose(new["W0"], expected, rtol=1e-12, atol=1e-15)
    assert state.step == 1


def test_adam_zero_gradient_keeps_params():
    p = init_params(NetworkSpec((3, 2)), 0)
    state = OptimizerState.for_params("adam", p)
    zero = p.zeros_like()
    q = p
    for _ in range(50):
        q, state = adam_step(state, q, zero, 1e-3)
    assert q.equals(p)


def test_adam_stress_finite():
    rng = np.random.default_rng(0)
    p = init_params(NetworkSpec((4, 3)), 0)
    state = OptimizerState.for_params("adam", p)
    for _ in range(10_000):
        g = p.map(lambda v: rng.normal(scale=10.0, size=v.shape))
        p, state = adam_step(state, p, g, 1e-3)
    assert p.is_finite() and state.m.is_finite() and state.v.is_finite()


def test_adam_does_not_mutate_state():
    p = init_params(NetworkSpec((2, 2)), 0)
    state = OptimizerState.for_params("adam", p)
    m0 = state.m.copy()
    adam_step(state, p, p, 0.1)
    assert state.m.equals(m0) and state.step == 0


def test_optimizer_dispatch():
    p = vec(1.0)
    q, s = optimizer_step(OptimizerState.for_params("sgd", p), p, vec(1.0), 0.5)
    assert q.equals(vec(0.5)) and s.kind == "sgd"
    with pytest.raises(ValueError):
        OptimizerState.for_params("rmsprop", p)


def test_effective_horizon_rounds_up():
    assert SchedulerSpec(horizon=10, multiplier=0.25).effective_horizon == math.ceil(2.5)
