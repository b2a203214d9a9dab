"""Batch composition: proportional, old/new balanced and easy/hard weighted draws."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import NEW, OLD, Dataset

SAMPLER_MODES = ("proportional", "balanced_old_new", "easy_hard")


class LearningSpeedTable(dict):
    """Sample id -> learning speed in [0, 1]."""

    def __setitem__(self, key, value):
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"learning speed must lie in [0, 1], got {value}")
        super().__setitem__(int(key), value)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "ls"])
            for k in sorted(self):
                w.writerow([k, repr(self[k])])

    @classmethod
    def from_csv(cls, path) -> "LearningSpeedTable":
        table = cls()
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            if header != ["id", "ls"]:
                raise ValueError(f"{path}: expected header id,ls, got {header}")
            for row in reader:
                table[int(row[0])] = float(row[1])
        return table

    @classmethod
    def from_arrays(cls, ids, speeds) -> "LearningSpeedTable":
        table = cls()
        for i, s in zip(np.asarray(ids).tolist(), np.asarray(speeds).tolist()):
            table[i] = s
        return table


def record_learning_speed(ids, correct) -> LearningSpeedTable:
    """Fraction of epochs in which each sample was classified correctly.

    ``correct`` is the (samples x epochs) 0/1 correctness matrix, one column
    per end-of-epoch evaluation.
    """
    correct = np.asarray(correct)
    ids = np.asarray(ids)
    if correct.ndim != 2 or correct.shape[1] < 1:
        raise ValueError("correctness matrix needs at least one epoch column")
    if correct.shape[0] != ids.shape[0]:
        raise ValueError("one correctness row per sample id is required")
    if not np.all((correct == 0) | (correct == 1)):
        raise ValueError("correctness entries must be 0 or 1")
    return LearningSpeedTable.from_arrays(ids, correct.sum(axis=1) / correct.shape[1])


def easy_hard_order(table: Mapping[int, float]) -> np.ndarray:
    """Ids sorted easiest first: learning speed descending, ties by ascending id."""
    ids = np.fromiter(table.keys(), dtype=np.int64, count=len(table))
    ls = np.fromiter(table.values(), dtype=np.float64, count=len(table))
    return ids[np.lexsort((ids, -ls))]


def easy_hard_weights(table: Mapping[int, float], c: float, r: float) -> dict[int, float]:
    """Weight ``r`` for the ``c/2`` easiest and ``c/2`` hardest ids, 1 otherwise.

    The affected count on each end is ``round(c/2 * n)``.
    """
    if not table:
        raise ValueError("learning-speed table is empty")
    if not 0.0 <= c < 1.0:
        raise ValueError(f"fraction c must lie in [0, 1), got {c}")
    if r < 0:
        raise ValueError(f"relative weight r must be non-negative, got {r}")
    order = easy_hard_order(table)
    n = len(order)
    k = int(round(c / 2.0 * n))
    weights = dict.fromkeys(order.tolist(), 1.0)
    if k:
        for i in np.concatenate([order[:k], order[n - k:]]).tolist():
            weights[i] = float(r)
    return weights


@dataclass(frozen=True)
class SamplerSpec:
    mode: str = "proportional"
    c: float = 0.2
    r: float = 0.1
    table: LearningSpeedTable | None = None

    def __post_init__(self):
        if self.mode not in SAMPLER_MODES:
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if not 0.0 <= self.c < 1.0:
            raise ValueError(f"fraction c must lie in [0, 1), got {self.c}")
        if self.r < 0:
            raise ValueError(f"relative weight r must be non-negative, got {self.r}")

    def with_table(self, table: LearningSpeedTable) -> "SamplerSpec":
        return SamplerSpec(self.mode, self.c, self.r, table)


class BatchSampler:
    """Precomputed draw distribution for one dataset; draws with replacement."""

    def __init__(self, spec: SamplerSpec, dataset: Dataset):
        if len(dataset) == 0:
            raise ValueError("cannot sample from an empty dataset")
        self.spec = spec
        self.dataset = dataset
        old = dataset.origin == OLD
        if spec.mode == "balanced_old_new":
            self.old_index = np.flatnonzero(old)
            self.new_index = np.flatnonzero(~old)
            if not len(self.old_index) or not len(self.new_index):
                raise ValueError("balanced sampling needs both old and new samples")
            self.probs = None
            return
        w = np.ones(len(dataset))
        if spec.mode == "easy_hard":
            if spec.table is None:
                raise ValueError("easy_hard sampling needs a learning-speed table")
            old_ids = dataset.ids[old]
            missing = [i for i in old_ids.tolist() if i not in spec.table]
            if missing:
                raise ValueError(
                    f"learning-speed table misses {len(missing)} old samples, e.g. id {missing[0]}"
                )
            sub = {i: spec.table[i] for i in old_ids.tolist()}
            if sub:
                ew = easy_hard_weights(sub, spec.c, spec.r)
                w[old] = [ew[i] for i in old_ids.tolist()]
        if w.sum() <= 0:
            raise ValueError("all sampling weights are zero")
        self.probs = w / w.sum()
        # raw cumsum / total: zero-weight steps stay flat and the last entry is exactly 1
        cum = np.cumsum(w)
        self._cdf = cum / cum[-1]

    def sample_index(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Row indices into the dataset."""
        if n < 1:
            raise ValueError("batch size must be at least 1")
        if self.probs is None:
            n_old = n // 2
            return np.concatenate([
                self.old_index[rng.integers(0, len(self.old_index), n_old)],
                self.new_index[rng.integers(0, len(self.new_index), n - n_old)],
            ])
        # side="right" keeps zero-weight rows out of reach
        return np.searchsorted(self._cdf, rng.random(n), side="right")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.dataset.ids[self.sample_index(n, rng)]


def sample_batch(spec: SamplerSpec, dataset: Dataset, n: int, rng: np.random.Generator) -> np.ndarray:
    return BatchSampler(spec, dataset).sample(n, rng)
