"""Interpolation schedules and their time derivatives through third order.

Two schedule families parameterize the transport path
``x_t = alpha_t * x0 + beta_t * x1``:

vp
    ``alpha_t = exp(g(t))`` with ``g(t) = -a(1-t)^2/4 - b(1-t)/2`` and
    ``beta_t = sqrt(1 - alpha_t^2)``. Derivatives come from the chain
    rule: with ``g' = a(1-t)/2 + b/2``, ``g'' = -a/2``, ``g''' = 0``,

        alpha'   = alpha * g'
        alpha''  = alpha * (g'^2 + g'')
        alpha''' = alpha * (g'^3 + 3 g' g'')

    and, writing ``N = alpha * alpha'``, ``N' = alpha'^2 + alpha*alpha''``,
    ``N'' = 3 alpha' alpha'' + alpha * alpha'''``,

        beta'   = -N / beta
        beta''  = -N'/beta - N^2/beta^3
        beta''' = -N''/beta - 3 N N'/beta^3 - 3 N^3/beta^5.

    beta vanishes at t = 1 (alpha = 1 there), so derivative orders >= 1
    are singular at that endpoint; training time grids never include it.

smoothstep
    ``alpha_t = 1 - (3t^2 - 2t^3)``, ``beta_t = 3t^2 - 2t^3``; polynomial,
    smooth everywhere, and symmetric: ``alpha_t = beta_{1-t}``.

Endpoint roles differ between the two families. For smoothstep the t=0
state is ``x0`` and the t=1 state is ``x1``; for vp the t=0 state is
(essentially) ``x1`` and the t=1 state is ``x0``. Samplers integrate t
from 0 to 1 starting from the source distribution, so the source feeds
whichever slot owns t=0 and the target the slot owning t=1 (see
``endpoint_roles``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BETA_SINGULARITY_FLOOR = 1e-12


class ScheduleRangeError(ValueError):
    """Time argument outside [0, 1]."""


class ScheduleSingularityError(ValueError):
    """vp beta derivative requested where beta is (numerically) zero."""


@dataclass(frozen=True)
class Schedule:
    kind: str = "vp"
    a: float = 19.9
    b: float = 0.1

    def __post_init__(self):
        if self.kind not in ("vp", "smoothstep"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def endpoint_roles(self) -> dict:
        """Which interpolation slot holds the source (t=0 side) and target."""
        if self.kind == "vp":
            return {"x0": "target", "x1": "source"}
        return {"x0": "source", "x1": "target"}


@dataclass(frozen=True)
class PathPoint:
    t: float
    x_t: np.ndarray
    dx: np.ndarray
    ddx: np.ndarray
    dddx: np.ndarray


def _vp_eval(s: Schedule, t: np.ndarray, order: int):
    one_m_t = 1.0 - t
    g = -0.25 * s.a * one_m_t**2 - 0.5 * s.b * one_m_t
    alpha = np.exp(g)
    beta = np.sqrt(np.maximum(1.0 - alpha * alpha, 0.0))
    if order == 0:
        return alpha, beta
    if np.any(beta < BETA_SINGULARITY_FLOOR):
        raise ScheduleSingularityError(
            f"vp beta derivative of order {order} is singular where beta ~ 0 (t -> 1)"
        )
    g1 = 0.5 * s.a * one_m_t + 0.5 * s.b
    g2 = np.full_like(t, -0.5 * s.a)
    a1 = alpha * g1
    a2 = alpha * (g1 * g1 + g2)
    if order == 1:
        return a1, -(alpha * a1) / beta
    n = alpha * a1
    n1 = a1 * a1 + alpha * a2
    if order == 2:
        return a2, -n1 / beta - n * n / beta**3
    a3 = alpha * (g1**3 + 3.0 * g1 * g2)
    n2 = 3.0 * a1 * a2 + alpha * a3
    b3 = -n2 / beta - 3.0 * n * n1 / beta**3 - 3.0 * n**3 / beta**5
    return a3, b3


def _smoothstep_eval(t: np.ndarray, order: int):
    if order == 0:
        beta = 3.0 * t * t - 2.0 * t**3
        return 1.0 - beta, beta
    if order == 1:
        b1 = 6.0 * t - 6.0 * t * t
        return -b1, b1
    if order == 2:
        b2 = 6.0 - 12.0 * t
        return -b2, b2
    b3 = np.full_like(t, -12.0)
    return -b3, b3


def schedule_eval(s: Schedule, t, order: int):
    """(d^k alpha / dt^k, d^k beta / dt^k) at time(s) t for k = order.

    Accepts a scalar or an array of times; returns matching scalars or
    arrays.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be 0..3, got {order}")
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ScheduleRangeError(f"t must lie in [0, 1], got {t}")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if s.kind == "vp":
        alpha, beta = _vp_eval(s, arr, order)
    else:
        alpha, beta = _smoothstep_eval(arr, order)
    if scalar:
        return float(alpha[0]), float(beta[0])
    return alpha, beta


def make_path_point(s: Schedule, x0, x1, t: float) -> PathPoint:
    """Interpolated state plus exact velocity/acceleration/jerk targets."""
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    a0, b0 = schedule_eval(s, t, 0)
    a1, b1 = schedule_eval(s, t, 1)
    a2, b2 = schedule_eval(s, t, 2)
    a3, b3 = schedule_eval(s, t, 3)
    return PathPoint(
        t=float(t),
        x_t=a0 * x0 + b0 * x1,
        dx=a1 * x0 + b1 * x1,
        ddx=a2 * x0 + b2 * x1,
        dddx=a3 * x0 + b3 * x1,
    )


def path_batch(s: Schedule, x0: np.ndarray, x1: np.ndarray, t: np.ndarray, max_order: int = 3):
    """Vectorized path targets for batches x0, x1 (n, 2) at times t (n,).

    Returns (x_t, [dx, ddx, dddx][:max_order]) with each array (n, 2).
    """
    a0, b0 = schedule_eval(s, t, 0)
    x_t = a0[:, None] * x0 + b0[:, None] * x1
    derivs = []
    for order in range(1, max_order + 1):
        ak, bk = schedule_eval(s, t, order)
        derivs.append(ak[:, None] * x0 + bk[:, None] * x1)
    return x_t, derivs
