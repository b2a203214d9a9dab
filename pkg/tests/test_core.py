import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warmstart.core import (
    NetworkSpec, ObjectiveSpec, ParamSet, finite_diff_grad, forward, gradient_check,
    init_params, loss_and_grad, per_sample_grad_norms, softmax,
)

from conftest import random_grad_config


def test_init_is_deterministic():
    spec = NetworkSpec((4, 8, 3))
    assert init_params(spec, 7).equals(init_params(spec, 7))


def test_init_differs_across_seeds():
    spec = NetworkSpec((4, 8, 3))
    a, b = init_params(spec, 7), init_params(spec, 8)
    assert np.any(a.flatten() != b.flatten())


def test_init_biases_zero_and_weights_bounded():
    spec = NetworkSpec((4, 8, 3))
    p = init_params(spec, 7)
    assert np.all(p["b0"] == 0) and np.all(p["b1"] == 0)
    assert np.all(np.abs(p["W0"]) <= np.sqrt(6 / 4))
    assert np.all(np.abs(p["W1"]) <= np.sqrt(6 / 8))
    assert list(p) == ["W0", "b0", "W1", "b1"]


@pytest.mark.parametrize("widths", [(4,), ()])
def test_network_spec_rejects_degenerate(widths):
    with pytest.raises(ValueError):
        NetworkSpec(widths)


def test_zero_params_give_zero_logits(rng):
    p = init_params(NetworkSpec((5, 7, 3)), 0).zeros_like()
    logits, _ = forward(p, rng.normal(size=(9, 5)))
    assert np.all(logits == 0)


def test_identity_single_layer():
    p = ParamSet({"W0": np.eye(3), "b0": np.zeros(3)})
    x = np.array([[0.5, -1.0, 2.0]])
    logits, _ = forward(p, x)
    np.testing.assert_array_equal(logits, x)


def test_softmax_rows_sum_to_one(rng):
    p = init_params(NetworkSpec((4, 8, 3)), 1)
    logits, _ = forward(p, rng.normal(size=(5, 4)))
    assert np.max(np.abs(softmax(logits).sum(axis=1) - 1)) <= 1e-12


def test_forward_shape_mismatch_reports_dimensions():
    p = init_params(NetworkSpec((4, 3)), 0)
    with pytest.raises(ValueError, match="3 features.*expects 4"):
        forward(p, np.zeros((2, 3)))


def test_forward_cache_shapes(rng):
    p = init_params(NetworkSpec((4, 6, 5, 3)), 0)
    logits, cache = forward(p, rng.normal(size=(7, 4)))
    assert [z.shape for z in cache.pre] == [(7, 6), (7, 5), (7, 3)]
    assert [a.shape for a in cache.inputs] == [(7, 4), (7, 6), (7, 5)]
    assert cache.logits is logits


def test_uniform_logits_give_log_c():
    C = 5
    p = ParamSet({"W0": np.zeros((3, C)), "b0": np.zeros(C)})
    loss, _ = loss_and_grad(p, np.ones((4, 3)), np.array([0, 1, 2, 4]))
    assert loss == pytest.approx(np.log(C), abs=1e-15)


def test_lambda_zero_equals_plain_cross_entropy(rng):
    p = init_params(NetworkSpec((4, 6, 3)), 2)
    X, y = rng.normal(size=(8, 4)), rng.integers(0, 3, 8)
    plain, g0 = loss_and_grad(p, X, y)
    reg, g1 = loss_and_grad(p, X, y, ObjectiveSpec("l2_init", 0.0, init_params(NetworkSpec((4, 6, 3)), 9)))
    assert plain == reg
    assert g0.equals(g1)


def test_empty_batch_rejected():
    p = init_params(NetworkSpec((4, 3)), 0)
    with pytest.raises(ValueError):
        loss_and_grad(p, np.zeros((0, 4)), np.zeros(0, dtype=int))


def test_labels_out_of_range_rejected():
    p = init_params(NetworkSpec((4, 3)), 0)
    with pytest.raises(ValueError):
        loss_and_grad(p, np.zeros((1, 4)), np.array([3]))


def test_loss_vanishes_with_growing_margin():
    C = 4
    losses = []
    for margin in (1.0, 5.0, 20.0, 50.0):
        b = np.zeros(C)
        b[2] = margin
        p = ParamSet({"W0": np.zeros((2, C)), "b0": b})
        loss, _ = loss_and_grad(p, np.ones((3, 2)), np.array([2, 2, 2]))
        losses.append(loss)
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-20


def test_gradient_matches_finite_differences(rng):
    for trial in range(10):
        spec, p, X, y = random_grad_config(rng)
        obj = ObjectiveSpec("l2_init", 0.1, init_params(spec, trial))
        assert gradient_check(p, X, y, obj, h=1e-5) <= 1e-5


def test_reg_only_fixture_matches_closed_form(rng):
    spec = NetworkSpec((3, 4, 2))
    p, ref = init_params(spec, 0), init_params(spec, 1)
    lam = 0.3
    fd = finite_diff_grad(p, np.zeros((1, 3)), np.zeros(1, dtype=int), ObjectiveSpec("reg_only", lam, ref), h=1e-5)
    expected = (p - ref) * (2 * lam)
    np.testing.assert_allclose(fd.flatten(), expected.flatten(), rtol=0, atol=1e-8)


def test_finite_difference_error_order():
    # no hidden layer -> smooth everywhere
    rng = np.random.default_rng(4)
    spec = NetworkSpec((3, 4))
    p = init_params(spec, 3).map(lambda v: v + rng.normal(size=v.shape))
    X, y = rng.normal(size=(6, 3)), rng.integers(0, 4, 6)
    _, exact = loss_and_grad(p, X, y)
    errs = [np.max(np.abs((finite_diff_grad(p, X, y, h=h) - exact).flatten())) for h in (1e-2, 5e-3)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_single_weight_difference_quotient_finite(rng):
    p = init_params(NetworkSpec((3, 5, 2)), 0)
    X, y = rng.normal(size=(4, 3)), rng.integers(0, 2, 4)
    h = 1e-5
    flat = p.flatten()
    flat[0] += h
    plus, _ = loss_and_grad(p.unflatten(flat), X, y)
    flat[0] -= 2 * h
    minus, _ = loss_and_grad(p.unflatten(flat), X, y)
    assert np.isfinite((plus - minus) / (2 * h))


def test_finite_diff_rejects_nonpositive_step():
    p = init_params(NetworkSpec((2, 2)), 0)
    with pytest.raises(ValueError):
        finite_diff_grad(p, np.zeros((1, 2)), np.zeros(1, dtype=int), h=0.0)


def test_per_sample_grad_norms_match_explicit(rng):
    spec, p, X, y = random_grad_config(rng)
    norms = per_sample_grad_norms(p, X, y)
    for i in range(len(X)):
        _, g = loss_and_grad(p, X[i:i + 1], y[i:i + 1])
        assert norms[i] == pytest.approx(np.sqrt(g.sq_norm()), rel=1e-10)


def test_paramset_structure_checks():
    a = init_params(NetworkSpec((3, 2)), 0)
    b = init_params(NetworkSpec((3, 4, 2)), 0)
    with pytest.raises(ValueError):
        a + b


def test_npz_roundtrip(tmp_path):
    p = init_params(NetworkSpec((3, 5, 2)), 0)
    p.to_npz(tmp_path / "p.npz")
    assert ParamSet.from_npz(tmp_path / "p.npz").equals(p)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 6))
def test_determinism_of_forward_and_grad(seed, n):
    spec = NetworkSpec((3, 4, 2))
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(n, 3)), rng.integers(0, 2, n)
    l1, g1 = loss_and_grad(init_params(spec, seed), X, y)
    l2, g2 = loss_and_grad(init_params(spec, seed), X, y)
    assert l1 == l2 and g1.equals(g2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), lam=st.sampled_from([0.0, 0.01, 0.1, 1.0]))
def test_loss_nonnegative(seed, lam):
    spec = NetworkSpec((3, 4, 3))
    rng = np.random.default_rng(seed)
    X, y = 3 * rng.normal(size=(5, 3)), rng.integers(0, 3, 5)
    loss, g = loss_and_grad(init_params(spec, seed), X, y, ObjectiveSpec("l2", lam))
    assert loss >= 0 and np.isfinite(loss) and g.is_finite()
