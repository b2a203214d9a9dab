"""Continuous training from an old model: warm-start interventions and cost metrics."""
from .core import NetworkSpec, ObjectiveSpec, ParamSet, finite_diff_grad, forward, init_params, loss_and_grad
from .data import Dataset, GaussianParams, ScenarioSpec, ShiftParams, apply_domain_shift, gen_gaussian_classes, merge, split_by_class
from .estimator import WarmStartMLPClassifier
from .metrics import LearningCurve, SpeedReport, aggregate, relative_speedup, speed
from .optim import OptimizerState, adam_step, sgd_step
from .sampling import LearningSpeedTable, SamplerSpec, easy_hard_weights, record_learning_speed, sample_batch
from .schedule import SchedulerSpec, lr_at
from .training import InitSpec, RunRecord, shrink_perturb, train

__version__ = "0.1.0"
