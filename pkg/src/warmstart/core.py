"""Dense ReLU classifier with analytic gradients.

Parameters live in a :class:`ParamSet`, an ordered mapping of name to
float64 array that supports the elementwise arithmetic the optimizers and
initialization rules need.  Layer ``i`` owns ``W{i}`` with shape
``(fan_in, fan_out)`` and ``b{i}`` with shape ``(fan_out,)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class NetworkSpec:
    layer_widths: tuple[int, ...]
    activation: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("layer_widths needs at least input and output widths")
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be positive, got {widths}")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def n_inputs(self) -> int:
        return self.layer_widths[0]

    @property
    def n_classes(self) -> int:
        return self.layer_widths[-1]


class ParamSet(Mapping[str, np.ndarray]):
    """Ordered name -> array mapping with structure-checked arithmetic."""

    __slots__ = ("_arrays",)

    def __init__(self, arrays: Mapping[str, np.ndarray]):
        self._arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}

    def __getitem__(self, key: str) -> np.ndarray:
        return self._arrays[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}={v.shape}" for k, v in self._arrays.items())
        return f"ParamSet({shapes})"

    def check_compatible(self, other: "ParamSet") -> None:
        if list(self) != list(other):
            raise ValueError(f"parameter names differ: {list(self)} vs {list(other)}")
        for k in self:
            if self[k].shape != other[k].shape:
                raise ValueError(
                    f"shape mismatch for {k}: {self[k].shape} vs {other[k].shape}"
                )

    def _zip(self, other, op) -> "ParamSet":
        self.check_compatible(other)
        return ParamSet({k: op(self[k], other[k]) for k in self})

    def __add__(self, other: "ParamSet") -> "ParamSet":
        return self._zip(other, np.add)

    def __sub__(self, other: "ParamSet") -> "ParamSet":
        return self._zip(other, np.subtract)

    def __mul__(self, scalar: float) -> "ParamSet":
        return ParamSet({k: v * scalar for k, v in self._arrays.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "ParamSet":
        return self * -1.0

    def copy(self) -> "ParamSet":
        return ParamSet({k: v.copy() for k, v in self._arrays.items()})

    def zeros_like(self) -> "ParamSet":
        return ParamSet({k: np.zeros_like(v) for k, v in self._arrays.items()})

    def map(self, fn) -> "ParamSet":
        return ParamSet({k: fn(v) for k, v in self._arrays.items()})

    def sq_norm(self) -> float:
        return float(sum(np.sum(v * v) for v in self._arrays.values()))

    def flatten(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self._arrays.values()])

    def unflatten(self, flat: np.ndarray) -> "ParamSet":
        out, pos = {}, 0
        for k, v in self._arrays.items():
            out[k] = np.asarray(flat[pos:pos + v.size], dtype=np.float64).reshape(v.shape)
            pos += v.size
        if pos != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, expected {pos}")
        return ParamSet(out)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self._arrays.values())

    def equals(self, other: "ParamSet") -> bool:
        """Bit-exact comparison."""
        if list(self) != list(other):
            return False
        return all(
            self[k].shape == other[k].shape and self[k].tobytes() == other[k].tobytes()
            for k in self
        )

    def to_npz(self, path) -> None:
        np.savez(path, **self._arrays)

    @classmethod
    def from_npz(cls, path) -> "ParamSet":
        with np.load(path) as f:
            # npz preserves insertion order of keyword arrays
            return cls({k: f[k] for k in f.files})


def init_params(spec: NetworkSpec, seed: int) -> ParamSet:
    """Fan-in scaled uniform weights, bound ``sqrt(6 / fan_in)``; zero biases."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for i, (fan_in, fan_out) in enumerate(zip(spec.layer_widths[:-1], spec.layer_widths[1:])):
        bound = np.sqrt(6.0 / fan_in)
        arrays[f"W{i}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        arrays[f"b{i}"] = np.zeros(fan_out)
    return ParamSet(arrays)


def spec_of(params: ParamSet) -> NetworkSpec:
    n_layers = len(params) // 2
    widths = [params["W0"].shape[0]] + [params[f"W{i}"].shape[1] for i in range(n_layers)]
    return NetworkSpec(tuple(widths))


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # input to each layer
    pre: list[np.ndarray] = field(default_factory=list)  # pre-activations per layer
    logits: np.ndarray | None = None


def forward(params: ParamSet, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    batch = np.asarray(batch, dtype=np.float64)
    n_layers = len(params) // 2
    if batch.ndim != 2:
        raise ValueError(f"batch must be 2-d (N, D), got shape {batch.shape}")
    d_in = params["W0"].shape[0]
    if batch.shape[1] != d_in:
        raise ValueError(
            f"dimension mismatch: batch has {batch.shape[1]} features, network expects {d_in}"
        )
    cache = ForwardCache()
    h = batch
    for i in range(n_layers):
        cache.inputs.append(h)
        z = h @ params[f"W{i}"] + params[f"b{i}"]
        cache.pre.append(z)
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
    cache.logits = h
    return h, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict(params: ParamSet, batch: np.ndarray) -> np.ndarray:
    logits, _ = forward(params, batch)
    return logits.argmax(axis=1)


def accuracy(params: ParamSet, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    return float(np.mean(predict(params, X) == y))


OBJECTIVE_MODES = ("none", "l2", "l2_init", "reg_only")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Cross-entropy plus an optional ``lam * ||theta - ref||^2`` penalty.

    ``l2`` anchors at the origin, ``l2_init`` at ``ref``.  ``reg_only`` drops
    the data term and exists for checking the penalty gradient in isolation.
    """

    mode: str = "none"
    lam: float = 0.0
    ref: ParamSet | None = None

    def __post_init__(self):
        if self.mode not in OBJECTIVE_MODES:
            raise ValueError(f"unknown objective mode {self.mode!r}")
        if self.lam < 0:
            raise ValueError("regularization strength must be non-negative")

    @property
    def has_penalty(self) -> bool:
        return self.mode != "none"

    def anchor(self, params: ParamSet) -> ParamSet:
        if self.mode == "l2":
            return params.zeros_like()
        if self.ref is None:
            raise ValueError(f"objective mode {self.mode!r} needs a reference ParamSet")
        self.ref.check_compatible(params)
        return self.ref

    def with_ref(self, ref: ParamSet) -> "ObjectiveSpec":
        return ObjectiveSpec(self.mode, self.lam, ref)


def _check_labels(labels: np.ndarray, n: int, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch size {n}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return labels.astype(np.int64)


def loss_and_grad(
    params: ParamSet,
    batch: np.ndarray,
    labels: np.ndarray,
    objective: ObjectiveSpec = ObjectiveSpec(),
) -> tuple[float, ParamSet]:
    """Mean softmax cross-entropy over the batch plus the objective's penalty."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ValueError("loss_and_grad needs a non-empty (N, D) batch")
    n = batch.shape[0]
    n_layers = len(params) // 2

    if objective.mode == "reg_only":
        loss, grads = 0.0, params.zeros_like()
    else:
        logits, cache = forward(params, batch)
        labels = _check_labels(labels, n, logits.shape[1])
        shifted = logits - logits.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(lse - shifted[np.arange(n), labels]))

        delta = np.exp(shifted - lse[:, None])
        delta[np.arange(n), labels] -= 1.0
        delta /= n
        g = {}
        for i in reversed(range(n_layers)):
            g[f"W{i}"] = cache.inputs[i].T @ delta
            g[f"b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ params[f"W{i}"].T) * (cache.pre[i - 1] > 0)
        grads = ParamSet({k: g[k] for k in params})

    if objective.has_penalty:
        diff = params - objective.anchor(params)
        loss += objective.lam * diff.sq_norm()
        grads = grads + diff * (2.0 * objective.lam)
    return loss, grads


def finite_diff_grad(
    params: ParamSet,
    batch: np.ndarray,
    labels: np.ndarray,
    objective: ObjectiveSpec = ObjectiveSpec(),
    h: float = 1e-5,
) -> ParamSet:
    """Central-difference estimate of the gradient returned by :func:`loss_and_grad`."""
    if h <= 0:
        raise ValueError("step h must be positive")
    flat = params.flatten()
    grad = np.empty_like(flat)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        plus, _ = loss_and_grad(params.unflatten(flat), batch, labels, objective)
        flat[j] = orig - h
        minus, _ = loss_and_grad(params.unflatten(flat), batch, labels, objective)
        flat[j] = orig
        grad[j] = (plus - minus) / (2.0 * h)
    return params.unflatten(grad)


def per_sample_grad_norms(params: ParamSet, batch: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Euclidean norm of each sample's cross-entropy gradient, no penalty.

    Uses ``||outer(a, d)||^2 = ||a||^2 ||d||^2`` so no per-sample gradient is
    materialised.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.shape[0] == 0:
        return np.zeros(0)
    n = batch.shape[0]
    n_layers = len(params) // 2
    logits, cache = forward(params, batch)
    labels = _check_labels(labels, n, logits.shape[1])
    delta = softmax(logits)
    delta[np.arange(n), labels] -= 1.0
    sq = np.zeros(n)
    for i in reversed(range(n_layers)):
        d2 = np.sum(delta * delta, axis=1)
        a2 = np.sum(cache.inputs[i] ** 2, axis=1)
        sq += d2 * a2 + d2
        if i > 0:
            delta = (delta @ params[f"W{i}"].T) * (cache.pre[i - 1] > 0)
    return np.sqrt(sq)


def gradient_check(
    params: ParamSet,
    batch: np.ndarray,
    labels: np.ndarray,
    objective: ObjectiveSpec = ObjectiveSpec(),
    h: float = 1e-5,
    floor: float = 1e-8,
) -> float:
    """Max coordinate-wise relative error between analytic and numeric gradients.

    The denominator is ``max(|analytic|, |numeric|, floor)``; the floor only
    guards coordinates that are zero on both sides (dead ReLU units).
    """
    _, analytic = loss_and_grad(params, batch, labels, objective)
    numeric = finite_diff_grad(params, batch, labels, objective, h)
    a, n = analytic.flatten(), numeric.flatten()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def min_kink_distance(params: ParamSet, batch: np.ndarray) -> float:
    """Smallest |pre-activation| over hidden ReLU units; inf without hidden layers."""
    _, cache = forward(params, batch)
    hidden = cache.pre[:-1]
    if not hidden:
        return float("inf")
    return float(min(np.min(np.abs(z)) for z in hidden))


def as_params(arrays: Mapping[str, Sequence]) -> ParamSet:
    return ParamSet({k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()})
