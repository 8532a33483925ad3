"""Training loop: fixed step budget, Adam on every active network.

RNG protocol for a run with seed s: ``Rng(s)`` is split in this order —
(1) model initialization (one child per network inside ``init_fields``),
(2) the batch stream. Callers that need further streams (sampler starting
points, evaluation clouds) split the same master afterwards; see
``experiments.run_cell``.

Each batch element pairs a fresh source draw with a fresh target draw;
which one enters the interpolation's alpha slot depends on the schedule's
endpoint roles (the source always owns t=0, the target t=1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape
from .datasets import DatasetSpec, sample_cloud
from .fields import FieldSet, init_fields
from .losses import ConfigError, LossConfig, TrainBatch, assemble_batch, homo_loss
from .nn import AdamState, NumericError, adam_init, adam_step, model_grads
from .rng import Rng
from .schedule import Schedule


@dataclass
class TrainRun:
    dataset: DatasetSpec
    schedule: Schedule = field(default_factory=Schedule)
    losses: LossConfig = field(default_factory=lambda: LossConfig(True, False, False, True))
    learning_rate: float = 0.005
    batch_size: int = 800
    steps: int = 1000
    seed: int = 0
    hidden_sizes: tuple = (100, 100)
    activation: str = "tanh"
    reduction: str = "sum"

    def __post_init__(self):
        if self.steps < 0 or self.batch_size <= 0:
            raise ConfigError("steps must be >= 0 and batch_size positive")


@dataclass
class TrainResult:
    fields: FieldSet
    history: list  # rows (step, total, m1, m2, m3, sc)
    run: TrainRun
    optimizer_states: dict


def draw_endpoint_batches(spec: DatasetSpec, sched: Schedule, rng: Rng, n: int):
    """(x0, x1) batches with source/target assigned to the right slots."""
    roles = sched.endpoint_roles()
    x0 = sample_cloud(spec, rng, roles["x0"], n)
    x1 = sample_cloud(spec, rng, roles["x1"], n)
    return x0, x1


def train_step(fields: FieldSet, batch: TrainBatch, cfg: LossConfig,
               states: dict, reduction: str, step_index: int = 0):
    """One gradient step; returns (total, breakdown).

    The loss is checked before backpropagation so a blow-up aborts with
    the step index and the per-term breakdown instead of a downstream
    gradient error.
    """
    tape = Tape()
    loss, breakdown = homo_loss(fields, batch, cfg, tape, reduction)
    total = float(loss.value)
    if not np.isfinite(total):
        raise NumericError(
            f"non-finite loss at step {step_index}: total={total} terms={breakdown}"
        )
    tape.backward(loss)
    for name, model in fields.models.items():
        adam_step(model, model_grads(tape, model), states[name])
    return total, breakdown


def train(run: TrainRun, rng: Rng | None = None) -> TrainResult:
    """Run the fixed step budget; deterministic given the seed."""
    if rng is None:
        rng = Rng(run.seed)
    cfg = run.losses
    fields = init_fields(cfg.required_order, cfg.step_conditioned,
                         run.hidden_sizes, run.activation, rng.split())
    batch_rng = rng.split()
    states = {name: adam_init(model, run.learning_rate)
              for name, model in fields.models.items()}
    history = []
    for step in range(run.steps):
        x0, x1 = draw_endpoint_batches(run.dataset, run.schedule, batch_rng, run.batch_size)
        batch = assemble_batch(batch_rng, run.schedule, x0, x1, cfg)
        total, breakdown = train_step(fields, batch, cfg, states, run.reduction, step)
        history.append((step, total, breakdown["m1"], breakdown["m2"],
                        breakdown["m3"], breakdown["sc"]))
    return TrainResult(fields, history, run, states)
