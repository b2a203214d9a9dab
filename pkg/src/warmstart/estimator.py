"""scikit-learn compatible wrapper around the training loop.

Calling ``fit`` on an already fitted :class:`WarmStartMLPClassifier`
continues from the current weights according to ``warm_start``::

    clf = WarmStartMLPClassifier(n_classes=10, random_state=0).fit(X_old, y_old)
    speeds = clf.learning_speed_          # aligned with X_old
    clf.set_params(warm_start="shrink_perturb", regularization="l2_init",
                   sampling="easy_hard", schedule_multiplier=0.25)
    clf.fit(X_all, y_all, origin=origin,
            learning_speed=np.r_[speeds, np.full(len(X_new), np.nan)])
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import NetworkSpec, ObjectiveSpec, forward, softmax
from .data import NEW, OLD, Dataset
from .sampling import LearningSpeedTable, SamplerSpec
from .schedule import SchedulerSpec
from .training import InitSpec, train


def _origin_codes(origin, n: int) -> np.ndarray:
    if origin is None:
        return np.full(n, OLD, dtype=np.int8)
    origin = np.asarray(origin)
    if origin.shape != (n,):
        raise ValueError(f"origin must have shape ({n},), got {origin.shape}")
    if origin.dtype.kind in "US":
        bad = set(np.unique(origin)) - {"old", "new"}
        if bad:
            raise ValueError(f"origin labels must be 'old' or 'new', got {sorted(bad)}")
        return np.where(origin == "new", NEW, OLD).astype(np.int8)
    if not np.all(np.isin(origin, (OLD, NEW))):
        raise ValueError("numeric origin codes must be 0 (old) or 1 (new)")
    return origin.astype(np.int8)


class WarmStartMLPClassifier(ClassifierMixin, BaseEstimator):
    """ReLU MLP trained with Adam or SGD that can continue from its own weights.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
    optimizer : {"adam", "sgd"}
    learning_rate, min_learning_rate : float
        Start and floor of the schedule.
    schedule : {"cosine", "multistep", "constant"}
    schedule_multiplier : float
        Compresses the schedule horizon to ``ceil(multiplier * max_iter)``.
    max_iter : int
        Iterations (minibatches) per call to ``fit``.
    batch_size : int
    warm_start : {"scratch", "naive", "shrink_perturb"}
        What a second ``fit`` starts from.  The first fit is always from scratch.
    shrink, perturb : float
        Shrink-and-perturb factors.
    regularization : {"none", "l2", "l2_init"}
        ``l2_init`` pulls towards the weights the fit started from.
    reg_lambda : float
    sampling : {"proportional", "balanced_old_new", "easy_hard"}
    easy_hard_fraction, easy_hard_weight : float
        Fraction of old samples affected and their relative draw weight.
    n_classes : int or None
        Width of the output layer; defaults to ``max(y) + 1`` on the first fit.
    eval_every : int or None
        Evaluation cadence for ``record_``; defaults to once per epoch.
    random_state : int, RandomState or None
    """

    def __init__(
        self,
        hidden_layer_sizes=(64,),
        optimizer="adam",
        learning_rate=1e-3,
        min_learning_rate=1e-6,
        schedule="cosine",
        schedule_multiplier=1.0,
        max_iter=2000,
        batch_size=128,
        warm_start="naive",
        shrink=0.4,
        perturb=0.001,
        regularization="none",
        reg_lambda=0.01,
        sampling="proportional",
        easy_hard_fraction=0.2,
        easy_hard_weight=0.1,
        n_classes=None,
        eval_every=None,
        random_state=None,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.min_learning_rate = min_learning_rate
        self.schedule = schedule
        self.schedule_multiplier = schedule_multiplier
        self.max_iter = max_iter
        self.batch_size = batch_size
        self.warm_start = warm_start
        self.shrink = shrink
        self.perturb = perturb
        self.regularization = regularization
        self.reg_lambda = reg_lambda
        self.sampling = sampling
        self.easy_hard_fraction = easy_hard_fraction
        self.easy_hard_weight = easy_hard_weight
        self.n_classes = n_classes
        self.eval_every = eval_every
        self.random_state = random_state

    def fit(self, X, y, origin=None, learning_speed=None, X_val=None, y_val=None):
        """Train on ``(X, y)``.

        ``origin`` tags rows as old/new (``"old"``/``"new"`` or 0/1; all old by
        default).  ``learning_speed`` is a per-row array with NaN for rows
        that have none; easy/hard sampling uses it for old rows and records
        its own during a warm-up when it is omitted.
        """
        X, y = check_X_y(X, y, dtype=np.float64)
        if y.dtype.kind not in "iu" and not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError("labels must be integer class indices")
        y = y.astype(np.int64)
        if y.min() < 0:
            raise ValueError("labels must be non-negative class indices")
        continuing = hasattr(self, "params_") and self.warm_start != "scratch"
        if continuing:
            if X.shape[1] != self.n_features_in_:
                raise ValueError(f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}")
            n_out = len(self.classes_)
        else:
            n_out = int(self.n_classes) if self.n_classes is not None else int(y.max()) + 1
        if y.max() >= n_out:
            raise ValueError(f"label {y.max()} does not fit an output layer of width {n_out}")

        n = X.shape[0]
        ds = Dataset(np.arange(n), X, y, _origin_codes(origin, n), n_out, "train")
        val = None
        if X_val is not None:
            Xv, yv = check_X_y(X_val, y_val, dtype=np.float64)
            val = Dataset(np.arange(len(yv)), Xv, yv.astype(np.int64), np.zeros(len(yv)), n_out, "test")

        table = None
        if self.sampling == "easy_hard" and learning_speed is not None:
            ls = np.asarray(learning_speed, dtype=np.float64)
            if ls.shape != (n,):
                raise ValueError(f"learning_speed must have shape ({n},)")
            keep = ~np.isnan(ls)
            table = LearningSpeedTable.from_arrays(ds.ids[keep], ls[keep])

        network = NetworkSpec((X.shape[1], *self.hidden_layer_sizes, n_out))
        init = InitSpec(
            self.warm_start if continuing else "scratch", self.shrink, self.perturb
        )
        objective = ObjectiveSpec(self.regularization, self.reg_lambda if self.regularization != "none" else 0.0)
        sched = SchedulerSpec(
            self.schedule, self.learning_rate, self.min_learning_rate, self.max_iter,
            self.schedule_multiplier, (0.5 * self.max_iter, 0.75 * self.max_iter),
        )
        seed = int(check_random_state(self.random_state).randint(np.iinfo(np.int32).max))
        result = train(
            network, init, ds, val,
            objective=objective,
            sampler=SamplerSpec(self.sampling, self.easy_hard_fraction, self.easy_hard_weight, table),
            sched=sched,
            optimizer=self.optimizer,
            iterations=self.max_iter,
            eval_every=self.eval_every,
            seed=seed,
            batch_size=self.batch_size,
            old_params=self.params_ if continuing else None,
            record_speed=True,
            speed_warmup_epochs=5,
            name="estimator",
        )
        if result.record.status != "ok":
            raise FloatingPointError(result.record.diagnostic)
        self.params_ = result.params
        self.record_ = result.record
        self.classes_ = np.arange(n_out)
        self.n_features_in_ = X.shape[1]
        self.n_iter_ = result.record.iterations
        self.loss_curve_ = list(result.record.train_loss)
        self.learning_speed_ = np.array([result.learning_speed[i] for i in range(n)])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, model was fitted with {self.n_features_in_}")
        logits, _ = forward(self.params_, X)
        return logits

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[scores.argmax(axis=1)]
