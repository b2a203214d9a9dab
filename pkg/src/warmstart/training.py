"""Warm-start initialization and the instrumented training loop."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import NetworkSpec, ObjectiveSpec, ParamSet, accuracy, init_params, loss_and_grad, per_sample_grad_norms, predict
from .data import NEW, OLD, Dataset
from .optim import OptimizerState, optimizer_step
from .sampling import BatchSampler, LearningSpeedTable, SamplerSpec, record_learning_speed
from .schedule import SchedulerSpec, lr_at

SCHEMA_VERSION = 1

# independent RNG streams derived from a run seed
_INIT_STREAM, _PERTURB_STREAM, _BATCH_STREAM, _PROBE_STREAM = range(4)

SHRINK_DEFAULT = 0.4
PERTURB_DEFAULT = 0.001
LAMBDA_DEFAULT = 0.01


def stream(seed: int, which: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), which])


def stream_seed(seed: int, which: int) -> int:
    return int(np.random.SeedSequence([int(seed), which]).generate_state(1, np.uint64)[0])


def shrink_perturb(old: ParamSet, rand: ParamSet, alpha: float, beta: float) -> ParamSet:
    """``alpha * old + beta * rand`` over every parameter, biases included."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"shrink factor must lie in [0, 1], got {alpha}")
    if beta < 0:
        raise ValueError(f"perturb factor must be non-negative, got {beta}")
    old.check_compatible(rand)
    if alpha == 1.0 and beta == 0.0:
        # exact no-op, also for -0.0 entries that 1*x + 0*r would flip
        return old.copy()
    return ParamSet({k: alpha * old[k] + beta * rand[k] for k in old})


@dataclass(frozen=True)
class InitSpec:
    mode: str = "scratch"  # scratch | naive | shrink_perturb
    alpha: float = SHRINK_DEFAULT
    beta: float = PERTURB_DEFAULT
    seed: int | None = None  # seed for the perturbation draw; derived from the run seed if None

    def __post_init__(self):
        if self.mode not in ("scratch", "naive", "shrink_perturb"):
            raise ValueError(f"unknown init mode {self.mode!r}")
        if not 0.0 <= self.alpha <= 1.0 or self.beta < 0:
            raise ValueError("need alpha in [0, 1] and beta >= 0")


def initial_params(
    network: NetworkSpec, init: InitSpec, seed: int, old_params: ParamSet | None = None
) -> ParamSet:
    """Phase-start parameters.

    ``shrink_perturb`` without ``old_params`` shrinks a fresh random init
    instead, which is how a from-scratch run gets the same treatment.
    """
    if init.mode == "scratch":
        return init_params(network, stream_seed(seed, _INIT_STREAM))
    if init.mode == "naive":
        if old_params is None:
            raise ValueError("naive initialization needs old parameters")
        return old_params.copy()
    base = old_params if old_params is not None else init_params(network, stream_seed(seed, _INIT_STREAM))
    pseed = init.seed if init.seed is not None else stream_seed(seed, _PERTURB_STREAM)
    return shrink_perturb(base, init_params(network, pseed), init.alpha, init.beta)


@dataclass
class RunRecord:
    """Everything a finished run contributes to metric computation.

    ``elapsed`` is kept out of the JSON so identical runs serialize
    byte-identically.
    """

    name: str
    fingerprint: str
    seed: int
    config: dict
    eval_iterations: list[int] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    grad_norm_old: list[float | None] = field(default_factory=list)
    grad_norm_new: list[float | None] = field(default_factory=list)
    iterations: int = 0
    eval_every: int = 1
    status: str = "ok"
    diagnostic: str | None = None
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("elapsed")
        return {"schema_version": SCHEMA_VERSION, **d}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported RunRecord schema_version {version!r}")
        rec = cls(**d)
        it = rec.eval_iterations
        if len(rec.accuracy) != len(it) or any(b <= a for a, b in zip(it, it[1:])):
            raise ValueError("evaluation curve must be strictly increasing and aligned")
        if any(not 0.0 <= a <= 1.0 for a in rec.accuracy):
            raise ValueError("accuracies must lie in [0, 1]")
        return rec

    @classmethod
    def load(cls, path) -> "RunRecord":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def to_csv(self, path) -> None:
        """One row per iteration: iteration, test_accuracy, train_loss, grad_norm_old, grad_norm_new."""
        evals = {
            t: (a, go, gn)
            for t, a, go, gn in zip(self.eval_iterations, self.accuracy, self.grad_norm_old, self.grad_norm_new)
        }
        last = max([len(self.train_loss) - 1] + self.eval_iterations)

        def fmt(v):
            return "" if v is None else repr(v)

        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["iteration", "test_accuracy", "train_loss", "grad_norm_old", "grad_norm_new"])
            for t in range(last + 1):
                loss = self.train_loss[t] if t < len(self.train_loss) else None
                a, go, gn = evals.get(t, (None, None, None))
                w.writerow([t, fmt(a), fmt(loss), fmt(go), fmt(gn)])


def fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def params_digest(params: ParamSet | None) -> str | None:
    if params is None:
        return None
    h = hashlib.sha256()
    for k in params:
        h.update(k.encode())
        h.update(params[k].tobytes())
    return h.hexdigest()[:16]


def table_digest(table: LearningSpeedTable | None) -> str | None:
    if table is None:
        return None
    h = hashlib.sha256()
    for k in sorted(table):
        h.update(f"{k}:{table[k]!r};".encode())
    return h.hexdigest()[:16]


@dataclass
class TrainResult:
    record: RunRecord
    params: ParamSet
    learning_speed: LearningSpeedTable | None = None


def epoch_length(n_train: int, batch_size: int) -> int:
    return math.ceil(n_train / batch_size)


def _probe(train_set: Dataset, origin: int, size: int, seed: int) -> np.ndarray:
    idx = np.flatnonzero(train_set.origin == origin)
    if len(idx) > size:
        idx = np.sort(stream(seed, _PROBE_STREAM + origin * 10).choice(idx, size, replace=False))
    return idx


def train(
    network: NetworkSpec,
    init: InitSpec,
    train_set: Dataset,
    test_set: Dataset | None,
    objective: ObjectiveSpec = ObjectiveSpec(),
    sampler: SamplerSpec = SamplerSpec(),
    sched: SchedulerSpec = SchedulerSpec(),
    optimizer: str = "adam",
    iterations: int = 1000,
    eval_every: int | None = None,
    seed: int = 0,
    batch_size: int = 128,
    old_params: ParamSet | None = None,
    record_speed: bool = False,
    speed_warmup_epochs: int | None = None,
    probe_size: int = 256,
    name: str = "run",
    extra_config: dict | None = None,
) -> TrainResult:
    """Run the sample -> gradient -> step loop and record its curves.

    Accuracy on ``test_set`` (or ``train_set`` when no test set is given)
    and per-origin mean gradient norms are recorded at iteration 0, every
    ``eval_every`` iterations and at the last iteration; the batch loss is
    recorded every iteration.  With ``record_speed`` the whole training set
    is scored at the end of every epoch and the resulting learning speeds
    are returned.  An ``easy_hard`` sampler without a table needs
    ``speed_warmup_epochs``: the run samples proportionally for that many
    epochs while recording, then switches to easy/hard weights.
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    if network.n_classes < train_set.class_count:
        raise ValueError("network output is narrower than the dataset's class count")
    n_ep = epoch_length(len(train_set), batch_size)
    k = eval_every or n_ep
    deferred = sampler.mode == "easy_hard" and sampler.table is None
    if deferred and not speed_warmup_epochs:
        raise ValueError("easy_hard sampling needs a learning-speed table or speed_warmup_epochs")

    params = initial_params(network, init, seed, old_params)
    if objective.mode == "l2_init" or (objective.mode == "reg_only" and objective.ref is None):
        objective = objective.with_ref(params.copy())
    eval_set = test_set if test_set is not None else train_set

    config = {
        "network": list(network.layer_widths),
        "init": asdict(init),
        "objective": {"mode": objective.mode, "lam": objective.lam},
        "sampler": {"mode": sampler.mode, "c": sampler.c, "r": sampler.r,
                    "table": table_digest(sampler.table), "warmup_epochs": speed_warmup_epochs if deferred else None},
        "scheduler": asdict(sched),
        "optimizer": optimizer,
        "iterations": iterations,
        "eval_every": k,
        "batch_size": batch_size,
        "probe_size": probe_size,
        "old_params": params_digest(old_params),
        "record_speed": record_speed,
        **(extra_config or {}),
    }
    rec = RunRecord(name, fingerprint({**config, "seed": seed}), seed, config, eval_every=k)

    probes = [_probe(train_set, o, probe_size, seed) for o in (OLD, NEW)]

    @np.errstate(over="ignore", invalid="ignore")
    def evaluate(t: int) -> None:
        rec.eval_iterations.append(t)
        rec.accuracy.append(accuracy(params, eval_set.X, eval_set.y))
        for origin, out in ((OLD, rec.grad_norm_old), (NEW, rec.grad_norm_new)):
            idx = probes[origin]
            if len(idx):
                norms = per_sample_grad_norms(params, train_set.X[idx], train_set.y[idx])
                out.append(float(np.mean(norms)))
            else:
                out.append(None)

    batch_sampler = BatchSampler(SamplerSpec("proportional") if deferred else sampler, train_set)
    rng = stream(seed, _BATCH_STREAM)
    opt = OptimizerState.for_params(optimizer, params)
    correct_cols: list[np.ndarray] = []
    speed_table = None

    start = time.perf_counter()
    evaluate(0)
    for t in range(iterations):
        idx = batch_sampler.sample_index(batch_size, rng)
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught just below
            loss, grads = loss_and_grad(params, train_set.X[idx], train_set.y[idx], objective)
        if not np.isfinite(loss):
            rec.status = "nan_abort"
            rec.diagnostic = f"non-finite loss {loss!r} at iteration {t}"
            break
        rec.train_loss.append(loss)
        params, opt = optimizer_step(opt, params, grads, lr_at(sched, t))
        done = t + 1
        rec.iterations = done

        if (record_speed or deferred) and done % n_ep == 0:
            correct_cols.append(predict(params, train_set.X) == train_set.y)
            if deferred and len(correct_cols) == speed_warmup_epochs:
                old = train_set.origin == OLD
                warm = record_learning_speed(train_set.ids[old], np.stack(correct_cols, 1)[old])
                batch_sampler = BatchSampler(sampler.with_table(warm), train_set)
                deferred = False
        if done % k == 0 or done == iterations:
            evaluate(done)

    if not params.is_finite() and rec.status == "ok":
        rec.status = "nan_abort"
        rec.diagnostic = "non-finite parameters after training"
    rec.elapsed = time.perf_counter() - start
    if record_speed:
        if not correct_cols:  # shorter than one epoch: score the final model once
            correct_cols.append(predict(params, train_set.X) == train_set.y)
        speed_table = record_learning_speed(train_set.ids, np.stack(correct_cols, 1).astype(np.int8))
    return TrainResult(rec, params, speed_table)
