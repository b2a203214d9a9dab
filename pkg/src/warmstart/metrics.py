"""Speed-to-accuracy and relative speed-up over learning curves.

Unreached targets are ``None`` throughout and print as ``/``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

UNREACHED = None
DEFAULT_R = (99, 100)


@dataclass(frozen=True)
class LearningCurve:
    iterations: np.ndarray
    accuracy: np.ndarray

    def __post_init__(self):
        it = np.asarray(self.iterations, dtype=np.int64)
        acc = np.asarray(self.accuracy, dtype=np.float64)
        object.__setattr__(self, "iterations", it)
        object.__setattr__(self, "accuracy", acc)
        if it.ndim != 1 or it.shape != acc.shape or it.size == 0:
            raise ValueError("a learning curve needs aligned, non-empty iteration and accuracy arrays")
        if np.any(np.diff(it) <= 0):
            raise ValueError("curve iterations must be strictly increasing")
        if np.any((acc < 0) | (acc > 1)):
            raise ValueError("accuracies must lie in [0, 1]")

    @classmethod
    def from_pairs(cls, pairs) -> "LearningCurve":
        it, acc = zip(*pairs)
        return cls(np.array(it), np.array(acc))

    @property
    def final(self) -> float:
        return float(self.accuracy[-1])

    @property
    def max(self) -> float:
        return float(self.accuracy.max())

    def target(self, mode: str) -> float:
        if mode == "final":
            return self.final
        if mode == "max":
            return self.max
        raise ValueError(f"unknown target mode {mode!r}")


def speed(curve: LearningCurve, a: float) -> int | None:
    """First recorded iteration with accuracy >= ``a``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"accuracy target must lie in [0, 1], got {a}")
    hit = np.flatnonzero(curve.accuracy >= a)
    return int(curve.iterations[hit[0]]) if hit.size else UNREACHED


def relative_speedup(curve: LearningCurve, scratch: LearningCurve, a_scratch: float, r: float) -> float | None:
    """``s(scratch, a_scratch) / s(curve, r/100 * a_scratch)``.

    A curve that already meets its target at iteration 0 gets ``inf``; a
    reference that meets ``a_scratch`` at iteration 0 has no cost to compare
    against and yields unreached.
    """
    if not 0 < r <= 100:
        raise ValueError(f"r must lie in (0, 100], got {r}")
    num = speed(scratch, a_scratch)
    den = speed(curve, r / 100.0 * a_scratch)
    if num is None or den is None or num == 0:
        return UNREACHED
    if den == 0:
        return float("inf")
    return num / den


def fmt_ratio(v: float | None) -> str:
    return "/" if v is None else f"x{v:.2f}"


def fmt_speed(v: int | None) -> str:
    return "/" if v is None else str(v)


@dataclass
class ArmSummary:
    name: str
    n_seeds: int
    iterations: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    max_acc: float
    final_acc: float
    speeds: dict[float, int | None] = field(default_factory=dict)
    speedups: dict[float, float | None] = field(default_factory=dict)

    @property
    def curve(self) -> LearningCurve:
        return LearningCurve(self.iterations, self.mean)


@dataclass
class SpeedReport:
    reference: str
    target_mode: str
    a_scratch: float | None
    r_values: tuple[float, ...]
    arms: dict[str, ArmSummary]
    eval_every: int | None = None
    notes: list[str] = field(default_factory=list)

    def rows(self) -> list[list[str]]:
        out = []
        for name, arm in self.arms.items():
            out.append(
                [name, str(arm.n_seeds), f"{100 * arm.max_acc:.2f}", f"{100 * arm.final_acc:.2f}"]
                + [fmt_ratio(arm.speedups.get(r)) for r in self.r_values]
            )
        return out

    def header(self) -> list[str]:
        return ["arm", "seeds", "Max Acc", "Final Acc"] + [f"L_{r:g}" for r in self.r_values]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as f:
                f.write(text)
        return text

    def to_markdown(self) -> str:
        head = self.header()
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        lines += ["| " + " | ".join(r) + " |" for r in self.rows()]
        a = "/" if self.a_scratch is None else f"{100 * self.a_scratch:.2f}"
        lines.append("")
        lines.append(
            f"Speed-ups relative to `{self.reference}`; a_scratch = {a} ({self.target_mode} accuracy of the "
            f"seed-mean curve); '/' marks an unreached target."
        )
        if self.eval_every:
            lines.append(f"Speed resolution: {self.eval_every} iterations.")
        for note in self.notes:
            lines.append(f"- {note}")
        return "\n".join(lines) + "\n"


def mean_curve(curves: Sequence[LearningCurve]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seed-mean accuracy and its standard error on a shared evaluation grid."""
    if not curves:
        raise ValueError("need at least one curve")
    grid = curves[0].iterations
    for c in curves[1:]:
        if not np.array_equal(c.iterations, grid):
            raise ValueError("curves were evaluated on different iteration grids")
    acc = np.stack([c.accuracy for c in curves])
    mean = acc.mean(axis=0)
    se = np.zeros_like(mean)
    if len(curves) > 1:
        # identical seeds give exactly zero even when the mean rounds
        spread = np.ptp(acc, axis=0) > 0
        se[spread] = acc[:, spread].std(axis=0, ddof=1) / np.sqrt(len(curves))
    return grid, mean, se


def aggregate(
    arms: dict[str, Sequence[LearningCurve]],
    reference: str = "scratch",
    target_mode: str = "final",
    r_values: Sequence[float] = DEFAULT_R,
    eval_every: int | None = None,
) -> SpeedReport:
    """Metrics on seed-mean curves; ``a_scratch`` comes from the reference arm's mean."""
    summaries = {}
    for name, curves in arms.items():
        grid, mean, se = mean_curve(curves)
        summaries[name] = ArmSummary(
            name, len(curves), grid, mean, se, float(mean.max()), float(mean[-1])
        )
    report = SpeedReport(reference, target_mode, None, tuple(r_values), summaries, eval_every)
    if reference not in summaries:
        report.notes.append(f"reference arm `{reference}` missing; speed-ups not computed")
        return report
    ref = summaries[reference].curve
    a_scratch = ref.target(target_mode)
    report.a_scratch = a_scratch
    for arm in summaries.values():
        for r in r_values:
            arm.speeds[r] = speed(arm.curve, r / 100.0 * a_scratch)
            arm.speedups[r] = relative_speedup(arm.curve, ref, a_scratch, r)
    return report
