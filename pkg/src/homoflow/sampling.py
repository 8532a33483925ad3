"""Taylor-step integrators for trained field sets.

The order-k sampler advances ``x`` by

    x <- x + d*u1 + (d^2/2)*u2 + ... + (d^k/k!)*uk

over M uniform steps d = 1/M from t = 0 to t = 1. Networks are
conditioned on the dyadic step value nearest below 1/M (equal to 1/M when
M is a power of two); step sizes below 1/128 are outside the conditioning
grid, so M is capped at 128.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import STEP_SET

DT_FLOOR = 1.0 / 128.0
MAX_STEPS = 128


class StepRangeError(ValueError):
    """A step would advance time beyond t = 1."""


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 1
    order: int | None = None  # None: use every network the field set has
    delta_t_floor: float = DT_FLOOR

    def __post_init__(self):
        if not (1 <= self.steps <= MAX_STEPS):
            raise ValueError(f"steps must be in [1, {MAX_STEPS}], got {self.steps}")
        if self.order is not None and self.order not in (1, 2, 3):
            raise ValueError(f"order must be 1, 2 or 3, got {self.order}")


def dyadic_floor(d: float, step_set=None) -> float:
    """Largest dyadic conditioning value not exceeding d."""
    candidates = [s for s in (step_set or STEP_SET) if s <= d + 1e-12]
    if not candidates:
        raise ValueError(f"step {d} lies below the conditioning grid (min 1/128)")
    return max(candidates)


def _taylor_delta(fields, x, t, step, cond, order):
    s1 = fields.eval_u1(x, t, cond)
    delta = step * s1
    if order >= 2:
        s2 = fields.eval_u2(s1, x, t, cond)
        delta = delta + (step * step / 2.0) * s2
    if order >= 3:
        s3 = fields.eval_u3(s2, s1, x, t, cond)
        delta = delta + (step**3 / 6.0) * s3
    return delta


def homo_step(fields, x, t: float, d: float) -> np.ndarray:
    """One shortcut step of size d (self-conditioned on d).

    Steps below the 1/128 floor are replaced by a floor-sized step with
    conditioning 0, matching the behaviour of the training-time grid.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if d >= DT_FLOOR:
        step, cond = d, d
    else:
        step, cond = DT_FLOOR, 0.0
    if t + step > 1.0 + 1e-12:
        raise StepRangeError(f"step {step} from t={t} would pass t=1")
    out = xb + _taylor_delta(fields, xb, t, step, cond, fields.order)
    return out[0] if single else out


def sample(fields, cfg: SamplerConfig, x_init) -> np.ndarray:
    """Integrate from t=0 to t=1; returns all M+1 states.

    ``x_init`` may be a single point (2,) or a batch (n, 2); the result
    has a leading time axis of length cfg.steps + 1.
    """
    order = cfg.order if cfg.order is not None else fields.order
    if order > fields.order:
        raise ValueError(f"order-{order} sampling needs u{order}, field set has order {fields.order}")
    x = np.asarray(x_init, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :].copy() if single else x.copy()
    m = cfg.steps
    step = 1.0 / m
    cond = dyadic_floor(step)
    traj = np.empty((m + 1,) + xb.shape)
    traj[0] = xb
    for k in range(m):
        t = k / m
        xb = xb + _taylor_delta(fields, xb, t, step, cond, order)
        traj[k + 1] = xb
    return traj[:, 0, :] if single else traj


def sample_endpoints(fields, cfg: SamplerConfig, x_init) -> np.ndarray:
    """Final states only."""
    return sample(fields, cfg, x_init)[-1]
