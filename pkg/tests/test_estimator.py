import numpy as np
import pytest
from sklearn.base import clone

from warmstart.data import GaussianParams, gen_gaussian_classes
from warmstart.estimator import WarmStartMLPClassifier


@pytest.fixture(scope="module")
def blobs():
    train, test = gen_gaussian_classes(
        GaussianParams(n_classes=4, dim=5, spread=0.5, train_per_class=60, test_per_class=30), 2
    )
    return train, test


def small(**kw):
    base = dict(hidden_layer_sizes=(16,), max_iter=150, batch_size=32, learning_rate=5e-3, random_state=0)
    return WarmStartMLPClassifier(**{**base, **kw})


def test_params_and_clone():
    clf = small(n_classes=4)
    params = clf.get_params()
    assert params["n_classes"] == 4 and params["warm_start"] == "naive"
    twin = clone(clf)
    assert twin.get_params() == params
    assert not hasattr(twin, "params_")


def test_fit_predict(blobs):
    train, test = blobs
    clf = small().fit(train.X, train.y)
    assert clf.score(test.X, test.y) > 0.8
    proba = clf.predict_proba(test.X)
    np.testing.assert_allclose(proba.sum(1), 1.0, atol=1e-12)
    assert clf.n_iter_ == 150 and len(clf.loss_curve_) == 150
    assert clf.learning_speed_.shape == (len(train.X),)
    assert np.all((clf.learning_speed_ >= 0) & (clf.learning_speed_ <= 1))


def test_fit_is_reproducible(blobs):
    train, _ = blobs
    a = small().fit(train.X, train.y)
    b = small().fit(train.X, train.y)
    assert a.params_.equals(b.params_)


def test_predict_before_fit_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        small().predict(np.zeros((1, 3)))


def test_warm_continuation(blobs):
    train, test = blobs
    old = train.y < 3
    clf = small(n_classes=4).fit(train.X[old], train.y[old])
    speeds = clf.learning_speed_
    before = clf.params_.copy()
    clf.set_params(warm_start="shrink_perturb", regularization="l2_init", sampling="easy_hard",
                   schedule_multiplier=0.5)
    origin = np.where(old, "old", "new")
    ls = np.full(len(train.y), np.nan)
    ls[old] = speeds
    X = np.r_[train.X[old], train.X[~old]]
    y = np.r_[train.y[old], train.y[~old]]
    clf.fit(X, y, origin=np.r_[origin[old], origin[~old]], learning_speed=np.r_[ls[old], ls[~old]])
    assert not clf.params_.equals(before)
    assert clf.score(test.X, test.y) > 0.8


def test_scratch_refit_ignores_previous_weights(blobs):
    train, _ = blobs
    a = small(warm_start="scratch").fit(train.X, train.y)
    first = a.params_.copy()
    a.fit(train.X, train.y)
    assert a.params_.equals(first)


def test_input_validation(blobs):
    train, _ = blobs
    with pytest.raises(ValueError):
        small().fit(train.X, train.y + 0.5)
    with pytest.raises(ValueError):
        small().fit(train.X, train.y, origin=["old"] * 3)
    with pytest.raises(ValueError):
        small(n_classes=2).fit(train.X, train.y)
    clf = small(max_iter=5).fit(train.X, train.y)
    with pytest.raises(ValueError):
        clf.predict(train.X[:, :3])
