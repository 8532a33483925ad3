"""Training objective: matching terms M1/M2/M3 plus the self-consistency term.

A training batch is split into two parts. The leading ``true_target_fraction``
of elements are *true-target* rows: their step size is zeroed and they are
supervised against the exact path derivatives (velocity, acceleration, jerk)
of the interpolation schedule. The remaining rows are *self-consistency*
rows: the model takes two of its own steps of size d and the average of the
two step velocities becomes a frozen (gradient-free) regression target for
the single query of step size 2d.

Step sizes are the dyadic grid {1/128, ..., 1/2, 1}. A draw of d = 1 cannot
satisfy t + 2d <= 1, so such rows fall back to two half steps: they behave
exactly like d = 1/2 rows (query step 2d capped at 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff
from .autodiff import Tape
from .fields import FieldSet
from .rng import Rng
from .schedule import Schedule, path_batch

STEP_SET = (1 / 128, 1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)

TERM_NAMES = ("m1", "m2", "m3", "sc")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class LossConfig:
    use_m1: bool = True
    use_m2: bool = False
    use_m3: bool = False
    use_sc: bool = False
    true_target_fraction: float = 0.75
    step_set: tuple = STEP_SET

    def __post_init__(self):
        if not (self.use_m1 or self.use_m2 or self.use_m3 or self.use_sc):
            raise ConfigError("at least one loss term must be enabled")
        if not (0.0 < self.true_target_fraction <= 1.0):
            raise ConfigError(
                f"true_target_fraction must be in (0, 1], got {self.true_target_fraction}"
            )
        if self.use_sc and self.true_target_fraction == 1.0:
            raise ConfigError(
                "self-consistency needs a non-empty split; lower true_target_fraction"
            )
        if len(self.step_set) == 0:
            raise ConfigError("step_set must be non-empty")

    @property
    def required_order(self) -> int:
        """How many networks the configuration needs (u3 consumes u2)."""
        return 3 if self.use_m3 else 2 if self.use_m2 else 1

    @property
    def step_conditioned(self) -> bool:
        return self.use_sc

    def label(self) -> str:
        parts = [n for n, on in zip(("M1", "M2", "M3", "SC"),
                                    (self.use_m1, self.use_m2, self.use_m3, self.use_sc)) if on]
        return "+".join(parts)

    @staticmethod
    def from_label(label: str, **kwargs) -> "LossConfig":
        parts = {p.strip().upper() for p in label.split("+") if p.strip()}
        known = {"M1", "M2", "M3", "SC"}
        bad = parts - known
        if bad:
            raise ConfigError(f"unknown loss terms {sorted(bad)} in {label!r}")
        return LossConfig(
            use_m1="M1" in parts, use_m2="M2" in parts,
            use_m3="M3" in parts, use_sc="SC" in parts, **kwargs,
        )


@dataclass
class TrainBatch:
    x0: np.ndarray          # (n, 2) interpolation endpoint weighted by alpha
    x1: np.ndarray          # (n, 2) endpoint weighted by beta
    t: np.ndarray           # (n,)
    d: np.ndarray           # (n,) 0 on true-target rows, half-step on SC rows
    is_true: np.ndarray     # (n,) bool
    x_t: np.ndarray         # (n, 2)
    dx_true: np.ndarray     # (n, 2)
    ddx_true: np.ndarray | None = None
    dddx_true: np.ndarray | None = None

    def __len__(self):
        return len(self.t)


def _half_step_fallback(step_set) -> float:
    allowed = [s for s in step_set if 2.0 * s <= 1.0 + 1e-12]
    return max(allowed) if allowed else max(step_set) / 2.0


def sample_step_and_time(rng: Rng, step_set=STEP_SET) -> tuple[float, float]:
    """One (d, t) draw: d uniform over the step set, t uniform on d's grid.

    The time grid for a draw d is {0, h, 2h, ...} with t + 2h <= 1, where
    h is d itself when 2d <= 1 and the half-step fallback otherwise.
    """
    d = float(step_set[rng.randint(len(step_set))])
    h = d if 2.0 * d <= 1.0 + 1e-12 else _half_step_fallback(step_set)
    count = max(int(round(1.0 / h)) - 1, 1)
    t = rng.randint(count) * h
    return d, t


def assemble_batch(rng: Rng, sched: Schedule, x0: np.ndarray, x1: np.ndarray,
                   cfg: LossConfig) -> TrainBatch:
    """Draw (d, t) per element, split the batch, and cache path targets.

    Draw order: one randint per element for d (over the full step set),
    then one per element for the grid index of t.
    """
    n = len(x0)
    steps = np.asarray(cfg.step_set, dtype=np.float64)
    d_raw = steps[rng.randints(n, len(steps))]
    fallback = _half_step_fallback(cfg.step_set)
    d_eff = np.where(2.0 * d_raw <= 1.0 + 1e-12, d_raw, fallback)
    counts = np.maximum(np.round(1.0 / d_eff).astype(np.int64) - 1, 1)
    t = rng.randints(n, counts) * d_eff

    k = int(round(cfg.true_target_fraction * n))
    is_true = np.zeros(n, dtype=bool)
    is_true[:k] = True
    d = np.where(is_true, 0.0, d_eff)

    order = cfg.required_order
    x_t, derivs = path_batch(sched, x0, x1, t, max_order=order)
    return TrainBatch(
        x0=x0, x1=x1, t=t, d=d, is_true=is_true, x_t=x_t,
        dx_true=derivs[0],
        ddx_true=derivs[1] if order >= 2 else None,
        dddx_true=derivs[2] if order >= 3 else None,
    )


def self_consistency_target(fields: FieldSet, x_t: np.ndarray, t, d) -> np.ndarray:
    """Frozen bootstrap target: mean of the two d-step velocities.

    The first velocity is evaluated at (x_t, t); the intermediate state is
    advanced with the model's own Taylor step (to the order the field set
    provides) and the second velocity is evaluated there at time t + d.
    Everything is computed tape-free, so the result carries no gradient.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    single = x_t.ndim == 1
    x = x_t[None, :] if single else x_t
    n = len(x)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))
    d = np.broadcast_to(np.asarray(d, dtype=np.float64), (n,))

    s1 = fields.eval_u1(x, t, d)
    delta = d[:, None] * s1
    if fields.order >= 2:
        s2 = fields.eval_u2(s1, x, t, d)
        delta = delta + (d[:, None] ** 2 / 2.0) * s2
    if fields.order >= 3:
        s3 = fields.eval_u3(s2, s1, x, t, d)
        delta = delta + (d[:, None] ** 3 / 6.0) * s3
    x_next = x + delta
    s1_next = fields.eval_u1(x_next, t + d, d)
    target = 0.5 * (s1 + s1_next)
    return target[0] if single else target


def homo_loss(fields: FieldSet, batch: TrainBatch, cfg: LossConfig, tape: Tape,
              reduction: str = "mean"):
    """Composite loss on the tape; returns (loss Var, per-term values).

    Matching terms see only true-target rows (query step 0); the
    self-consistency term sees only the remaining rows (query step 2d).
    ``reduction`` picks per-term mean over its sub-batch or plain sum.
    """
    if reduction not in ("mean", "sum"):
        raise ConfigError(f"reduction must be 'mean' or 'sum', got {reduction!r}")
    if fields.order < cfg.required_order:
        raise ConfigError(
            f"losses {cfg.label()} need {cfg.required_order} networks, "
            f"field set has {fields.order}"
        )
    mask = batch.is_true
    n_true = int(mask.sum())
    n_sc = len(batch) - n_true
    if (cfg.use_m1 or cfg.use_m2 or cfg.use_m3) and n_true == 0:
        raise ConfigError("no true-target rows; raise true_target_fraction")
    if cfg.use_sc and n_sc == 0:
        raise ConfigError("no self-consistency rows; lower true_target_fraction")

    def reduce_(term_var, count):
        return autodiff.scale(tape, term_var, 1.0 / count) if reduction == "mean" else term_var

    terms = {}
    total = None
    if cfg.use_m1 or cfg.use_m2 or cfg.use_m3:
        x_true = np.ascontiguousarray(batch.x_t[mask])
        t_true = batch.t[mask]
        u1_var = fields.forward_u1(tape, x_true, t_true, 0.0)
        if cfg.use_m1:
            terms["m1"] = reduce_(
                autodiff.ssq(tape, autodiff.sub(tape, u1_var, batch.dx_true[mask])), n_true
            )
        if cfg.use_m2 or cfg.use_m3:
            u2_var = fields.forward_u2(tape, u1_var, x_true, t_true, 0.0)
            if cfg.use_m2:
                terms["m2"] = reduce_(
                    autodiff.ssq(tape, autodiff.sub(tape, u2_var, batch.ddx_true[mask])), n_true
                )
            if cfg.use_m3:
                u3_var = fields.forward_u3(tape, u2_var, u1_var, x_true, t_true, 0.0)
                terms["m3"] = reduce_(
                    autodiff.ssq(tape, autodiff.sub(tape, u3_var, batch.dddx_true[mask])), n_true
                )
    if cfg.use_sc:
        sc = ~mask
        x_sc = np.ascontiguousarray(batch.x_t[sc])
        t_sc = batch.t[sc]
        d_sc = batch.d[sc]
        target = self_consistency_target(fields, x_sc, t_sc, d_sc)
        pred = fields.forward_u1(tape, x_sc, t_sc, 2.0 * d_sc)
        terms["sc"] = reduce_(autodiff.ssq(tape, autodiff.sub(tape, pred, target)), n_sc)

    for var in terms.values():
        total = var if total is None else autodiff.add(tape, total, var)
    breakdown = {name: float(terms[name].value) if name in terms else 0.0
                 for name in TERM_NAMES}
    return total, breakdown
