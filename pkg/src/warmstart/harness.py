"""Experiment orchestration: two-phase scenarios, task sequences and sweeps.

A scenario first trains an *old* model on the old classes (recording
per-sample learning speeds), then trains every arm on old + new data, either
from that old model (``warm`` arms) or from a random init.  Old-phase
artifacts are persisted per seed and reused when their fingerprint matches.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import NetworkSpec, ObjectiveSpec, ParamSet
from .data import (
    OLD, Dataset, GaussianParams, ScenarioSpec, ShiftParams, build_scenario, concat,
    gen_gaussian_classes, merge, split_by_class,
)
from .metrics import DEFAULT_R, LearningCurve, SpeedReport, relative_speedup, speed
from .report import curves_svg, report_from_records
from .sampling import LearningSpeedTable, SamplerSpec
from .schedule import SchedulerSpec
from .training import (
    LAMBDA_DEFAULT, PERTURB_DEFAULT, SCHEMA_VERSION, SHRINK_DEFAULT, InitSpec, RunRecord,
    fingerprint, stream_seed, train,
)

log = logging.getLogger(__name__)

_OLD_PHASE_STREAM = 100


@dataclass(frozen=True)
class ArmSpec:
    """One row of the ablation grid."""

    name: str
    warm: bool = True
    shrink_perturb: bool = False
    alpha: float = SHRINK_DEFAULT
    beta: float = PERTURB_DEFAULT
    objective: str = "none"
    lam: float = LAMBDA_DEFAULT
    sampler: str = "proportional"
    c: float = 0.2
    r: float = 0.1
    multiplier: float = 1.0

    def __post_init__(self):
        # constructing the specs validates every field
        self.init_spec()
        self.objective_spec()
        SamplerSpec(self.sampler, self.c, self.r)
        if self.multiplier <= 0:
            raise ValueError(f"arm {self.name!r}: multiplier must be positive")

    def init_spec(self) -> InitSpec:
        if self.shrink_perturb:
            return InitSpec("shrink_perturb", self.alpha, self.beta)
        return InitSpec("naive" if self.warm else "scratch", self.alpha, self.beta)

    def objective_spec(self) -> ObjectiveSpec:
        return ObjectiveSpec(self.objective, self.lam if self.objective != "none" else 0.0)

    def sampler_spec(self, table: LearningSpeedTable | None) -> SamplerSpec:
        return SamplerSpec(self.sampler, self.c, self.r, table if self.sampler == "easy_hard" else None)

    @classmethod
    def from_dict(cls, d: dict) -> "ArmSpec":
        return cls(**d)


def ablation_arms(multiplier: float = 0.25) -> list[ArmSpec]:
    """Every initialization/regularization/data/scheduler combination, warm and scratch.

    The four single toggles, the pairs and triple without the scheduler, and
    all four together; 10 warm and 10 scratch arms.  ``scratch`` (no toggles)
    is the reference.
    """
    combos = [
        (), ("init",), ("reg",), ("data",), ("sched",),
        ("init", "reg"), ("init", "data"), ("reg", "data"),
        ("init", "reg", "data"), ("init", "reg", "data", "sched"),
    ]
    arms = []
    for warm in (True, False):
        for combo in combos:
            base = "naive" if warm else "scratch"
            name = base + "".join(f"+{c}" for c in combo)
            if "sched" in combo:
                name = name.replace("+sched", f"+x{multiplier:g}")
            arms.append(ArmSpec(
                name, warm=warm,
                shrink_perturb="init" in combo,
                objective="l2_init" if "reg" in combo else "none",
                sampler="easy_hard" if "data" in combo else "proportional",
                multiplier=multiplier if "sched" in combo else 1.0,
            ))
    return arms


def method_arm(name: str = "ours", multiplier: float = 0.25) -> ArmSpec:
    return ArmSpec(name, warm=True, shrink_perturb=True, objective="l2_init",
                   sampler="easy_hard", multiplier=multiplier)


def desk_arms() -> list[ArmSpec]:
    return [
        ArmSpec("scratch", warm=False),
        ArmSpec("scratch+x0.25", warm=False, multiplier=0.25),
        ArmSpec("naive"),
        method_arm("ours", 1.0),
        method_arm("ours+x0.25", 0.25),
    ]


@dataclass(frozen=True)
class TrainingSettings:
    hidden: tuple[int, ...] = (64,)
    optimizer: str = "adam"
    lr: float = 1e-3
    lr_min: float = 1e-6
    batch_size: int = 128
    scheduler: str = "cosine"
    milestones: tuple[float, ...] = (0.5, 0.75)  # fractions of the horizon, multistep only
    gamma: float = 0.1
    speed_warmup_epochs: int | None = 5
    probe_size: int = 256

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "milestones", tuple(float(m) for m in self.milestones))

    def scheduler_spec(self, horizon: int, multiplier: float = 1.0) -> SchedulerSpec:
        return SchedulerSpec(
            self.scheduler, self.lr, self.lr_min, horizon, multiplier,
            tuple(m * horizon for m in self.milestones), self.gamma,
        )


def desk_scenario(seed: int = 0) -> ScenarioSpec:
    """10 Gaussian classes in 32 dims, 500 + 100 samples per class, split 7 + 3."""
    return ScenarioSpec(
        "class_incremental", (7, 3),
        GaussianParams(n_classes=10, dim=32, spread=3.0, train_per_class=500, test_per_class=100),
        seed=seed,
    )


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return asdict(spec)


def scenario_from_dict(d: dict) -> ScenarioSpec:
    d = dict(d)
    gen = GaussianParams(**d.pop("generator", {}))
    shift = ShiftParams(**d.pop("shift", {}))
    return ScenarioSpec(generator=gen, shift=shift, **d)


def _check_schema(d: dict, what: str) -> dict:
    d = dict(d)
    version = d.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported {what} schema_version {version!r}")
    return d


@dataclass
class ExperimentConfig:
    scenario: ScenarioSpec = field(default_factory=desk_scenario)
    arms: list[ArmSpec] = field(default_factory=desk_arms)
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    iterations: int = 2000
    eval_every: int | None = None  # None: once per epoch of the merged training set
    r_values: tuple[float, ...] = DEFAULT_R
    target_mode: str = "final"
    reference: str = "scratch"
    training: TrainingSettings = field(default_factory=TrainingSettings)
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        names = [a.name for a in self.arms]
        if len(set(names)) != len(names):
            raise ValueError(f"arm names must be unique: {names}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.target_mode not in ("final", "max"):
            raise ValueError(f"target_mode must be 'final' or 'max', got {self.target_mode!r}")
        if any(not 0 < r <= 100 for r in self.r_values):
            raise ValueError("r values must lie in (0, 100]")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": scenario_to_dict(self.scenario),
            "arms": [asdict(a) for a in self.arms],
            "seeds": list(self.seeds),
            "iterations": self.iterations,
            "eval_every": self.eval_every,
            "r_values": list(self.r_values),
            "target_mode": self.target_mode,
            "reference": self.reference,
            "training": asdict(self.training),
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = _check_schema(d, "experiment config")
        kw = {}
        if "scenario" in d:
            kw["scenario"] = scenario_from_dict(d.pop("scenario"))
        if "arms" in d:
            arms = d.pop("arms")
            kw["arms"] = ablation_arms() if arms == "ablation" else [ArmSpec.from_dict(a) for a in arms]
        if "training" in d:
            kw["training"] = TrainingSettings(**d.pop("training"))
        if "r_values" in d:
            kw["r_values"] = tuple(d.pop("r_values"))
        return cls(**kw, **d)


def load_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def network_for(scenario: ScenarioSpec, training: TrainingSettings) -> NetworkSpec:
    g = scenario.generator
    return NetworkSpec((g.dim, *training.hidden, g.n_classes))


@dataclass
class OldPhase:
    params: ParamSet
    learning_speed: LearningSpeedTable
    record: RunRecord
    fingerprint: str


def _old_phase_key(cfg: ExperimentConfig, seed: int) -> dict:
    return {
        "scenario": scenario_to_dict(cfg.scenario),
        "training": asdict(cfg.training),
        "iterations": cfg.iterations,
        "seed": seed,
        "phase": "old",
    }


def old_phase(cfg: ExperimentConfig, old_train: Dataset, old_test: Dataset, seed: int) -> OldPhase:
    """Train (or reload) the old model on old data only, recording learning speeds."""
    fp = fingerprint(_old_phase_key(cfg, seed))
    folder = Path(cfg.output_dir) / "old" / f"seed{seed}" if cfg.output_dir else None
    if folder is not None and (folder / "meta.json").exists():
        meta = load_json(folder / "meta.json")
        if meta.get("fingerprint") == fp:
            log.info("reusing old-phase model for seed %d from %s", seed, folder)
            return OldPhase(
                ParamSet.from_npz(folder / "params.npz"),
                LearningSpeedTable.from_csv(folder / "learning_speed.csv"),
                RunRecord.load(folder / "record.json"),
                fp,
            )
    network = network_for(cfg.scenario, cfg.training)
    tr = cfg.training
    res = train(
        network, InitSpec("scratch"), old_train, old_test,
        sched=tr.scheduler_spec(cfg.iterations), optimizer=tr.optimizer,
        iterations=cfg.iterations, seed=stream_seed(seed, _OLD_PHASE_STREAM),
        batch_size=tr.batch_size, record_speed=True, probe_size=tr.probe_size,
        name="old_phase", extra_config={"phase": "old", "old_phase": fp},
    )
    out = OldPhase(res.params, res.learning_speed, res.record, fp)
    if folder is not None:
        folder.mkdir(parents=True, exist_ok=True)
        res.params.to_npz(folder / "params.npz")
        res.learning_speed.to_csv(folder / "learning_speed.csv")
        res.record.save(folder / "record.json")
        with open(folder / "meta.json", "w") as f:
            json.dump({"schema_version": SCHEMA_VERSION, "fingerprint": fp, "seed": seed}, f, indent=1)
    return out


@dataclass
class _Job:
    arm: ArmSpec
    seed: int
    network: NetworkSpec
    train_set: Dataset
    test_set: Dataset
    old: OldPhase | None
    cfg: ExperimentConfig
    phase: str = "arm"


def _run_job(job: _Job) -> RunRecord:
    arm, tr, cfg = job.arm, job.cfg.training, job.cfg
    table = job.old.learning_speed if (arm.warm and job.old is not None) else None
    res = train(
        job.network, arm.init_spec(), job.train_set, job.test_set,
        objective=arm.objective_spec(),
        sampler=arm.sampler_spec(table),
        sched=tr.scheduler_spec(cfg.iterations, arm.multiplier),
        optimizer=tr.optimizer,
        iterations=cfg.iterations,
        eval_every=cfg.eval_every,
        seed=job.seed,
        batch_size=tr.batch_size,
        old_params=job.old.params if arm.warm else None,
        speed_warmup_epochs=tr.speed_warmup_epochs,
        probe_size=tr.probe_size,
        name=arm.name,
        extra_config={
            "phase": job.phase,
            "arm": asdict(arm),
            "scenario": scenario_to_dict(cfg.scenario),
            "old_phase": job.old.fingerprint if (arm.warm and job.old) else None,
        },
    )
    return res.record


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _validate_arms(cfg: ExperimentConfig) -> None:
    for arm in cfg.arms:
        if arm.sampler == "easy_hard" and not arm.warm and not cfg.training.speed_warmup_epochs:
            raise ValueError(
                f"arm {arm.name!r} uses easy_hard sampling from scratch but no learning-speed "
                "warm-up is configured (training.speed_warmup_epochs)"
            )


@dataclass
class ScenarioResult:
    records: dict[str, list[RunRecord]]
    report: SpeedReport
    old: dict[int, OldPhase]

    def curves(self, arm: str) -> list[LearningCurve]:
        return [LearningCurve(r.eval_iterations, r.accuracy) for r in self.records[arm]]


def save_record(rec: RunRecord, folder: Path) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    stem = f"{_safe(rec.name)}__seed{rec.seed}"
    rec.save(folder / f"{stem}.json")
    rec.to_csv(folder / f"{stem}.csv")


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "+-._=" else "_" for ch in name)


def run_scenario(cfg: ExperimentConfig) -> ScenarioResult:
    _validate_arms(cfg)
    scenario = build_scenario(cfg.scenario)
    network = network_for(cfg.scenario, cfg.training)
    train_set, test_set = scenario.train, scenario.test
    needs_old = any(a.warm for a in cfg.arms)
    olds = {s: old_phase(cfg, scenario.old_train, scenario.old_test, s) for s in cfg.seeds} if needs_old else {}

    jobs = [
        _Job(arm, seed, network, train_set, test_set, olds.get(seed), cfg)
        for arm in cfg.arms for seed in cfg.seeds
    ]
    recs = _map(_run_job, jobs, cfg.workers)
    records: dict[str, list[RunRecord]] = {a.name: [] for a in cfg.arms}
    for job, rec in zip(jobs, recs):
        records[job.arm.name].append(rec)

    aborted = [f"{r.name}/seed{r.seed}: {r.diagnostic}" for rs in records.values() for r in rs if r.status != "ok"]
    complete = {k: v for k, v in records.items() if all(r.status == "ok" for r in v)}
    report = report_from_records(complete, cfg.reference, cfg.target_mode, cfg.r_values)
    report.notes += [f"aborted run {a}" for a in aborted]

    if cfg.output_dir:
        out = Path(cfg.output_dir)
        for rs in records.values():
            for r in rs:
                save_record(r, out / "runs")
        with open(out / "config.json", "w") as f:
            json.dump(cfg.to_dict(), f, indent=1, sort_keys=True)
        (out / "report.md").write_text(report.to_markdown())
        report.to_csv(out / "report.csv")
        if report.arms:
            (out / "curves.svg").write_text(curves_svg(report))
    return ScenarioResult(records, report, olds)


# ---------------------------------------------------------------------------
# task sequences


@dataclass
class SequenceConfig:
    generator: GaussianParams = field(
        default_factory=lambda: GaussianParams(n_classes=10, dim=32, spread=3.0)
    )
    base: int = 5
    increments: list[int] = field(default_factory=lambda: [1, 1, 1, 1, 1])
    iterations: int = 1000
    eval_every: int | None = None
    method: ArmSpec = field(default_factory=lambda: method_arm("ours", 1.0))
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    target_mode: str = "final"
    data_seed: int = 0
    training: TrainingSettings = field(default_factory=TrainingSettings)
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.base < 1 or any(i < 1 for i in self.increments):
            raise ValueError("base and increments must be positive")
        if self.base + sum(self.increments) > self.generator.n_classes:
            raise ValueError("base + increments exceed the class count")
        if self.iterations < 1:
            raise ValueError("per-task iteration budget must be at least 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.method.warm:
            raise ValueError("the sequence method arm must start from the previous model")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceConfig":
        d = _check_schema(d, "sequence config")
        kw = {}
        if "generator" in d:
            kw["generator"] = GaussianParams(**d.pop("generator"))
        if "method" in d:
            kw["method"] = ArmSpec.from_dict(d.pop("method"))
        if "training" in d:
            kw["training"] = TrainingSettings(**d.pop("training"))
        return cls(**kw, **d)


@dataclass
class TaskEntry:
    task: int
    classes_seen: int
    upper_bound: float
    a_ref: float
    continuous_cost: int | None
    scratch_cost: int | None
    l100: float | None
    continuous: RunRecord
    scratch: RunRecord


@dataclass
class SequenceRun:
    seed: int
    tasks: list[TaskEntry]

    @property
    def cumulative_continuous(self) -> int | None:
        costs = [t.continuous_cost for t in self.tasks]
        return None if any(c is None for c in costs) else sum(costs)

    @property
    def cumulative_scratch(self) -> int | None:
        costs = [t.scratch_cost for t in self.tasks]
        return None if any(c is None for c in costs) else sum(costs)

    @property
    def cheaper(self) -> bool:
        c, s = self.cumulative_continuous, self.cumulative_scratch
        return c is not None and s is not None and c < s

    def ledger_rows(self) -> list[list]:
        rows, cc, cs = [], 0, 0
        for t in self.tasks:
            cc = None if cc is None or t.continuous_cost is None else cc + t.continuous_cost
            cs = None if cs is None or t.scratch_cost is None else cs + t.scratch_cost
            rows.append([self.seed, t.task, t.classes_seen, t.upper_bound, t.a_ref,
                         t.continuous_cost, t.scratch_cost, t.l100, cc, cs])
        return rows


LEDGER_HEADER = [
    "seed", "task", "classes_seen", "upper_bound", "a_ref", "continuous_cost",
    "scratch_cost", "l100", "cumulative_continuous", "cumulative_scratch",
]


@dataclass
class _SeqJob:
    cfg: SequenceConfig
    seed: int


def _run_sequence_seed(job: _SeqJob) -> SequenceRun:
    cfg, seed = job.cfg, job.seed
    tr = cfg.training
    train_all, test_all = gen_gaussian_classes(cfg.generator, cfg.data_seed)
    splits = [cfg.base] + list(cfg.increments)
    rest = cfg.generator.n_classes - sum(splits)
    all_groups = split_by_class(train_all, test_all, splits + ([rest] if rest else []), cfg.data_seed + 1)
    groups = all_groups[: len(splits)]
    network = NetworkSpec((cfg.generator.dim, *tr.hidden, cfg.generator.n_classes))
    sched = tr.scheduler_spec(cfg.iterations)
    # evaluation always covers every class, so accuracy is capped by the classes seen
    full_test = concat([g[1] for g in all_groups])

    prev = train(
        network, InitSpec("scratch"), groups[0][0], full_test, sched=sched, optimizer=tr.optimizer,
        iterations=cfg.iterations, eval_every=cfg.eval_every, seed=stream_seed(seed, _OLD_PHASE_STREAM),
        batch_size=tr.batch_size, record_speed=True, probe_size=tr.probe_size, name="task0",
        extra_config={"phase": "sequence_base"},
    )
    tasks = []
    seen_train = groups[0][0]
    for t in range(1, len(groups)):
        new_train = groups[t][0]
        data = merge(seen_train, new_train)
        n_seen = sum(splits[: t + 1])
        arm = cfg.method
        cont = train(
            network, arm.init_spec(), data, full_test,
            objective=arm.objective_spec(), sampler=arm.sampler_spec(prev.learning_speed),
            sched=tr.scheduler_spec(cfg.iterations, arm.multiplier), optimizer=tr.optimizer,
            iterations=cfg.iterations, eval_every=cfg.eval_every, seed=stream_seed(seed, t),
            batch_size=tr.batch_size, old_params=prev.params, record_speed=True,
            probe_size=tr.probe_size, name=f"task{t}:{arm.name}",
            extra_config={"phase": "sequence", "task": t, "arm": asdict(arm)},
        )
        ref = train(
            network, InitSpec("scratch"), data, full_test, sched=sched, optimizer=tr.optimizer,
            iterations=cfg.iterations, eval_every=cfg.eval_every, seed=stream_seed(seed, 1000 + t),
            batch_size=tr.batch_size, probe_size=tr.probe_size, name=f"task{t}:scratch",
            extra_config={"phase": "sequence", "task": t},
        )
        cc = LearningCurve(cont.record.eval_iterations, cont.record.accuracy)
        sc = LearningCurve(ref.record.eval_iterations, ref.record.accuracy)
        a_ref = sc.target(cfg.target_mode)
        tasks.append(TaskEntry(
            t, n_seen, n_seen / cfg.generator.n_classes, a_ref,
            speed(cc, a_ref), speed(sc, a_ref), relative_speedup(cc, sc, a_ref, 100),
            cont.record, ref.record,
        ))
        prev = cont
        seen_train = data.with_origin(OLD)
    return SequenceRun(seed, tasks)


@dataclass
class SequenceResult:
    runs: list[SequenceRun]

    def ledger_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LEDGER_HEADER)
        for run in self.runs:
            for row in run.ledger_rows():
                w.writerow(["" if v is None else v for v in row])
        return buf.getvalue()

    def summary(self) -> str:
        lines = ["| seed | cumulative continuous | cumulative scratch | cheaper |", "|---|---|---|---|"]
        for run in self.runs:
            c, s = run.cumulative_continuous, run.cumulative_scratch
            lines.append(f"| {run.seed} | {'/' if c is None else c} | {'/' if s is None else s} | "
                         f"{'yes' if run.cheaper else 'no'} |")
        return "\n".join(lines) + "\n"


def run_sequence(cfg: SequenceConfig) -> SequenceResult:
    """Continuous training task by task, each task checked against a fresh scratch model.

    Costs are iterations to reach the scratch reference's accuracy; the old
    model's base-task training is a sunk cost and not counted.
    """
    runs = _map(_run_sequence_seed, [_SeqJob(cfg, s) for s in cfg.seeds], cfg.workers)
    result = SequenceResult(runs)
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        for run in runs:
            for t in run.tasks:
                for rec in (t.continuous, t.scratch):
                    save_record(rec, out / "runs" / f"task{t.task}")
        (out / "ledger.csv").write_text(result.ledger_csv())
        (out / "summary.md").write_text(result.summary())
        with open(out / "config.json", "w") as f:
            json.dump(cfg.to_dict(), f, indent=1, sort_keys=True)
    return result


# ---------------------------------------------------------------------------
# sweeps

SWEEP_PARAMS = {
    "alpha": ("alpha", lambda v: 0.0 <= v <= 1.0),
    "beta": ("beta", lambda v: v >= 0.0),
    "lambda": ("lam", lambda v: v >= 0.0),
    "c": ("c", lambda v: 0.0 <= v < 1.0),
    "r": ("r", lambda v: v >= 0.0),
    "multiplier": ("multiplier", lambda v: v > 0.0),
}


@dataclass
class SweepConfig:
    parameter: str
    values: list[float]
    base_arm: ArmSpec = field(default_factory=lambda: method_arm("ours", 1.0))
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {sorted(SWEEP_PARAMS)}")
        if not self.values:
            raise ValueError("sweep grid is empty")
        _, legal = SWEEP_PARAMS[self.parameter]
        bad = [v for v in self.values if not legal(float(v))]
        if bad:
            raise ValueError(f"illegal {self.parameter} values {bad}")

    def arm_for(self, value: float) -> ArmSpec:
        field_name, _ = SWEEP_PARAMS[self.parameter]
        return replace(self.base_arm, name=f"{self.parameter}={value:g}", **{field_name: float(value)})

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = _check_schema(d, "sweep config")
        kw = {"parameter": d.pop("parameter"), "values": [float(v) for v in d.pop("values")]}
        if "base_arm" in d:
            kw["base_arm"] = ArmSpec.from_dict(d.pop("base_arm"))
        if "experiment" in d:
            kw["experiment"] = ExperimentConfig.from_dict(d.pop("experiment"))
        if d:
            raise ValueError(f"unknown sweep config keys {sorted(d)}")
        return cls(**kw)


@dataclass
class SweepResult:
    parameter: str
    reports: dict[float, SpeedReport]
    scenario: ScenarioResult
    notes: list[str] = field(default_factory=list)

    def to_markdown(self) -> str:
        r_values = next(iter(self.reports.values())).r_values
        head = [self.parameter, "Max Acc", "Final Acc"] + [f"L_{r:g}" for r in r_values]
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for v, rep in self.reports.items():
            arm = rep.arms[f"{self.parameter}={v:g}"]
            cells = [f"{v:g}", f"{100 * arm.max_acc:.2f}", f"{100 * arm.final_acc:.2f}"]
            cells += ["/" if arm.speedups.get(r) is None else f"x{arm.speedups[r]:.2f}" for r in r_values]
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
        lines += [f"- {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _trend_note(parameter: str, reports: dict[float, SpeedReport]) -> str:
    vals = sorted(reports)
    l99 = [reports[v].arms[f"{parameter}={v:g}"].speedups.get(99) for v in vals]
    if any(x is None for x in l99):
        return f"L_99 trend over {parameter}: not defined (some targets unreached)"
    steps = np.diff(l99)
    if np.all(steps <= 0):
        trend = "non-increasing"
    elif np.all(steps >= 0):
        trend = "non-decreasing"
    else:
        trend = "not monotone"
    return f"L_99 trend over increasing {parameter}: {trend}"


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """One arm per grid value next to the reference arm, all sharing seeds and old phase."""
    exp = cfg.experiment
    ref = next((a for a in exp.arms if a.name == exp.reference), ArmSpec(exp.reference, warm=False))
    arms = [ref] + [cfg.arm_for(v) for v in cfg.values]
    result = run_scenario(replace(exp, arms=arms))
    reports = {}
    for v in cfg.values:
        name = f"{cfg.parameter}={v:g}"
        reports[float(v)] = report_from_records(
            {ref.name: result.records[ref.name], name: result.records[name]},
            exp.reference, exp.target_mode, exp.r_values,
        )
    sweep = SweepResult(cfg.parameter, reports, result, [_trend_note(cfg.parameter, reports)])
    if exp.output_dir:
        (Path(exp.output_dir) / "sweep.md").write_text(sweep.to_markdown())
    return sweep
