"""Learning-rate schedules whose horizon can be compressed by a multiplier.

A multiplier ``m`` shrinks the horizon ``T`` to ``ceil(m * T)`` iterations;
past that point the cosine schedule stays at its minimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class SchedulerSpec:
    family: str = "cosine"
    lr_max: float = 1e-3
    lr_min: float = 1e-6
    horizon: int = 1000
    multiplier: float = 1.0
    milestones: tuple[float, ...] = field(default=())
    gamma: float = 0.1

    def __post_init__(self):
        if self.family not in ("cosine", "multistep", "constant"):
            raise ValueError(f"unknown scheduler family {self.family!r}")
        if self.lr_min > self.lr_max:
            raise ValueError("lr_min must not exceed lr_max")
        if self.multiplier <= 0:
            raise ValueError("multiplier must be positive")
        if self.effective_horizon < 1:
            raise ValueError("effective horizon must be at least one iteration")

    @property
    def effective_horizon(self) -> int:
        return math.ceil(self.multiplier * self.horizon)

    def compressed(self, multiplier: float) -> "SchedulerSpec":
        return replace(self, multiplier=multiplier)


def lr_at(sched: SchedulerSpec, t: float) -> float:
    if t < 0:
        raise ValueError("iteration must be non-negative")
    if sched.family == "constant":
        return sched.lr_max
    if sched.family == "multistep":
        passed = sum(1 for ms in sched.milestones if t >= ms * sched.multiplier)
        return sched.lr_max * sched.gamma ** passed
    T = sched.effective_horizon
    if t >= T:
        return sched.lr_min
    cos = math.cos(math.pi * t / T)
    return sched.lr_min + 0.5 * (sched.lr_max - sched.lr_min) * (1.0 + cos)
