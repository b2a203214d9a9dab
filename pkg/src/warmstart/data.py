"""Synthetic Gaussian-cluster datasets, class splits and domain shift."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

OLD, NEW = 0, 1
ORIGIN_NAMES = ("old", "new")

# generated ids live in [offset, offset + n); shifted copies get a fresh block
_SHIFT_ID_OFFSET = 1 << 40


@dataclass
class Dataset:
    """Column-oriented sample table: ids, features, labels and origin tags."""

    ids: np.ndarray
    X: np.ndarray
    y: np.ndarray
    origin: np.ndarray
    class_count: int
    role: str = "train"

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.origin = np.asarray(self.origin, dtype=np.int8)
        n = self.ids.shape[0]
        if self.X.ndim != 2 or self.X.shape[0] != n or self.y.shape != (n,) or self.origin.shape != (n,):
            raise ValueError("ids, X, y and origin must agree on the number of samples")
        if n and (self.y.min() < 0 or self.y.max() >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        if len(np.unique(self.ids)) != n:
            raise ValueError("sample ids must be unique")
        if self.role not in ("train", "test"):
            raise ValueError(f"role must be 'train' or 'test', got {self.role!r}")

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, mask_or_index) -> "Dataset":
        return replace(
            self,
            ids=self.ids[mask_or_index],
            X=self.X[mask_or_index],
            y=self.y[mask_or_index],
            origin=self.origin[mask_or_index],
        )

    def with_origin(self, origin: int) -> "Dataset":
        return replace(self, origin=np.full(len(self), origin, dtype=np.int8))

    def classes(self) -> np.ndarray:
        return np.unique(self.y)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "origin", "label"] + [f"x{j}" for j in range(self.n_features)])
            for i in range(len(self)):
                w.writerow(
                    [int(self.ids[i]), ORIGIN_NAMES[self.origin[i]], int(self.y[i])]
                    + [repr(float(v)) for v in self.X[i]]
                )

    @classmethod
    def from_csv(cls, path, class_count: int, role: str = "train") -> "Dataset":
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        header, body = rows[0], rows[1:]
        if header[:3] != ["id", "origin", "label"]:
            raise ValueError(f"{path}: unexpected header {header[:3]}")
        d = len(header) - 3
        ids = np.array([int(r[0]) for r in body], dtype=np.int64)
        origin = np.array([ORIGIN_NAMES.index(r[1]) for r in body], dtype=np.int8)
        y = np.array([int(r[2]) for r in body], dtype=np.int64)
        X = np.array([[float(v) for v in r[3:]] for r in body], dtype=np.float64).reshape(len(body), d)
        return cls(ids, X, y, origin, class_count, role)


def empty_like(ds: Dataset) -> Dataset:
    return ds.subset(np.zeros(len(ds), dtype=bool))


@dataclass(frozen=True)
class GaussianParams:
    n_classes: int = 10
    dim: int = 32
    spread: float = 1.0
    train_per_class: int = 500
    test_per_class: int = 100
    mean_scale: float = 1.0

    def validate(self) -> None:
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.dim < 2:
            raise ValueError("need at least 2 feature dimensions")
        if self.train_per_class + self.test_per_class < 10 or self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError("need at least 10 samples per class, with both train and test non-empty")
        if not (self.spread >= 0 and np.isfinite(self.spread)):
            raise ValueError("spread must be finite and non-negative")


@dataclass(frozen=True)
class ShiftParams:
    angle: float = 0.0
    translation: float = 0.0
    noise: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "class_incremental"
    splits: tuple[int, ...] = (7, 3)
    generator: GaussianParams = field(default_factory=GaussianParams)
    shift: ShiftParams = field(default_factory=ShiftParams)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "splits", tuple(int(s) for s in self.splits))
        if self.kind not in ("class_incremental", "domain_shift"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "class_incremental":
            if any(s <= 0 for s in self.splits):
                raise ValueError("class splits must be positive")
            if sum(self.splits) != self.generator.n_classes:
                raise ValueError(
                    f"class splits {self.splits} do not sum to {self.generator.n_classes}"
                )


def gen_gaussian_classes(params: GaussianParams, seed: int) -> tuple[Dataset, Dataset]:
    """One isotropic Gaussian cluster per class around a random mean.

    Means are drawn from ``N(0, mean_scale^2 I)``; samples add
    ``N(0, spread^2 I)`` noise.  The first ``train_per_class`` draws of each
    class are training samples, the rest test samples.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    C, D = params.n_classes, params.dim
    means = rng.normal(0.0, params.mean_scale, size=(C, D))
    per = params.train_per_class + params.test_per_class
    X = means[:, None, :] + params.spread * rng.normal(size=(C, per, D))
    y = np.repeat(np.arange(C), per).reshape(C, per)
    ids = np.arange(C * per, dtype=np.int64).reshape(C, per)
    tr, te = slice(0, params.train_per_class), slice(params.train_per_class, per)

    def build(sl, role):
        return Dataset(
            ids[:, sl].ravel(), X[:, sl].reshape(-1, D), y[:, sl].ravel(),
            np.zeros(ids[:, sl].size, dtype=np.int8), C, role,
        )

    return build(tr, "train"), build(te, "test")


def class_groups(class_count: int, splits, seed: int) -> list[np.ndarray]:
    splits = [int(s) for s in splits]
    if any(s <= 0 for s in splits) or sum(splits) != class_count:
        raise ValueError(f"splits {splits} must be positive and sum to {class_count}")
    perm = np.random.default_rng(seed).permutation(class_count)
    bounds = np.cumsum([0] + splits)
    return [np.sort(perm[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]


def split_by_class(train: Dataset, test: Dataset, splits, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Cut a seeded class permutation into consecutive groups.

    Labels are re-indexed globally so group ``g`` owns the contiguous label
    range following groups ``0..g-1``; the output head therefore never needs
    to change size.
    """
    groups = class_groups(train.class_count, splits, seed)
    relabel = np.empty(train.class_count, dtype=np.int64)
    relabel[np.concatenate(groups)] = np.arange(train.class_count)
    out = []
    for g in groups:
        pair = []
        for ds in (train, test):
            part = ds.subset(np.isin(ds.y, g))
            part.y = relabel[part.y]
            pair.append(part)
        out.append(tuple(pair))
    return out


def _rotation(dim: int, angle: float, rng: np.random.Generator) -> np.ndarray:
    """Rotation by ``angle`` radians in a random 2-plane, identity elsewhere."""
    basis, _ = np.linalg.qr(rng.normal(size=(dim, 2)))
    u, v = basis[:, 0], basis[:, 1]
    c, s = np.cos(angle), np.sin(angle)
    return (
        np.eye(dim)
        + (c - 1.0) * (np.outer(u, u) + np.outer(v, v))
        + s * (np.outer(v, u) - np.outer(u, v))
    )


def apply_domain_shift(ds: Dataset, shift: ShiftParams, seed: int) -> Dataset:
    """Rotate, translate and add noise; labels kept, ids moved to a fresh block."""
    vals = (shift.angle, shift.translation, shift.noise)
    if not all(np.isfinite(v) for v in vals) or shift.noise < 0:
        raise ValueError("shift parameters must be finite, noise non-negative")
    rng = np.random.default_rng(seed)
    D = ds.n_features
    R = _rotation(D, shift.angle, rng)
    direction = rng.normal(size=D)
    direction /= np.linalg.norm(direction)
    t = shift.translation * direction
    noise_rng = np.random.default_rng([seed, 1])
    X = ds.X @ R.T + t
    if shift.noise > 0:
        X = X + shift.noise * noise_rng.normal(size=X.shape)
    return replace(ds, ids=ds.ids + _SHIFT_ID_OFFSET, X=X, y=ds.y.copy(), origin=ds.origin.copy())


def merge(old: Dataset, new: Dataset) -> Dataset:
    """Union of ``old`` and ``new`` tagged by origin."""
    if len(old) and len(new) and old.n_features != new.n_features:
        raise ValueError(f"feature dimensions differ: {old.n_features} vs {new.n_features}")
    if np.intersect1d(old.ids, new.ids).size:
        raise ValueError("sample id collision between old and new datasets")
    D = old.n_features if len(old) else new.n_features
    return Dataset(
        np.concatenate([old.ids, new.ids]),
        np.concatenate([old.X.reshape(-1, D), new.X.reshape(-1, D)]),
        np.concatenate([old.y, new.y]),
        np.concatenate([np.full(len(old), OLD, np.int8), np.full(len(new), NEW, np.int8)]),
        max(old.class_count, new.class_count),
        old.role,
    )


def concat(parts: list[Dataset]) -> Dataset:
    """Plain concatenation keeping each part's origin tags."""
    return Dataset(
        np.concatenate([p.ids for p in parts]),
        np.concatenate([p.X for p in parts]),
        np.concatenate([p.y for p in parts]),
        np.concatenate([p.origin for p in parts]),
        max(p.class_count for p in parts),
        parts[0].role,
    )


@dataclass
class Scenario:
    """Old/new train and test splits ready for a two-phase experiment."""

    old_train: Dataset
    old_test: Dataset
    new_train: Dataset
    new_test: Dataset

    @property
    def train(self) -> Dataset:
        return merge(self.old_train, self.new_train)

    @property
    def test(self) -> Dataset:
        return merge(self.old_test, self.new_test)

    @property
    def class_count(self) -> int:
        return self.old_train.class_count


def build_scenario(spec: ScenarioSpec) -> Scenario:
    train, test = gen_gaussian_classes(spec.generator, spec.seed)
    if spec.kind == "class_incremental":
        groups = split_by_class(train, test, spec.splits, spec.seed + 1)
        (otr, ote), rest = groups[0], groups[1:]
        ntr = concat([g[0] for g in rest])
        nte = concat([g[1] for g in rest])
        return Scenario(otr, ote, ntr, nte)
    # domain shift: old and new domain each take half of every class
    half_tr = np.random.default_rng([spec.seed, 2]).permutation(len(train)) < len(train) // 2
    half_te = np.random.default_rng([spec.seed, 3]).permutation(len(test)) < len(test) // 2
    ntr = apply_domain_shift(train.subset(~half_tr), spec.shift, spec.seed + 1)
    nte = apply_domain_shift(test.subset(~half_te), spec.shift, spec.seed + 1)
    return Scenario(train.subset(half_tr), test.subset(half_te), ntr, nte)
