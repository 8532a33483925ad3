"""Field networks u1/u2/u3 and their input conventions.

u1 predicts velocity from (x, t), u2 acceleration from (u1-output, x, t),
u3 jerk from (u2-output, u1-output, x, t). When a configuration trains
with the self-consistency term the networks additionally receive the
query step size d as a trailing input column; otherwise d is omitted
entirely (this is what makes the parameter counts of step-conditioned
and unconditioned configurations differ).

Initialization order under ``init_fields`` (relevant for reproducing
parameter streams): the supplied RNG is split once per network, u1 first,
then u2, then u3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff
from .autodiff import Tape
from .nn import MlpModel, init_model, mlp_eval, mlp_forward
from .rng import Rng

DATA_DIM = 2


def input_widths(order: int, step_conditioned: bool, data_dim: int = DATA_DIM) -> list[int]:
    """Input width of each network u1..u_order."""
    cond = 1 if step_conditioned else 0
    return [data_dim * k + 1 + cond for k in range(1, order + 1)]


@dataclass
class FieldSet:
    u1: MlpModel
    u2: MlpModel | None = None
    u3: MlpModel | None = None
    step_conditioned: bool = False

    @property
    def order(self) -> int:
        return 3 if self.u3 is not None else 2 if self.u2 is not None else 1

    @property
    def models(self) -> dict[str, MlpModel]:
        out = {"u1": self.u1}
        if self.u2 is not None:
            out["u2"] = self.u2
        if self.u3 is not None:
            out["u3"] = self.u3
        return out

    def _cols(self, n: int, t, d) -> list[np.ndarray]:
        cols = [np.broadcast_to(np.asarray(t, dtype=np.float64), (n,))[:, None]]
        if self.step_conditioned:
            cols.append(np.broadcast_to(np.asarray(d, dtype=np.float64), (n,))[:, None])
        return cols

    def eval_u1(self, x: np.ndarray, t, d=0.0) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return mlp_eval(self.u1, np.concatenate([x] + self._cols(len(x), t, d), axis=1))

    def eval_u2(self, u1_out: np.ndarray, x: np.ndarray, t, d=0.0) -> np.ndarray:
        inp = np.concatenate([u1_out, x] + self._cols(len(x), t, d), axis=1)
        return mlp_eval(self.u2, inp)

    def eval_u3(self, u2_out, u1_out, x, t, d=0.0) -> np.ndarray:
        inp = np.concatenate([u2_out, u1_out, x] + self._cols(len(x), t, d), axis=1)
        return mlp_eval(self.u3, inp)

    def forward_u1(self, tape: Tape, x: np.ndarray, t, d=0.0):
        inp = np.concatenate([x] + self._cols(len(x), t, d), axis=1)
        return mlp_forward(self.u1, inp, tape)

    def forward_u2(self, tape: Tape, u1_var, x: np.ndarray, t, d=0.0):
        rest = np.concatenate([x] + self._cols(len(x), t, d), axis=1)
        return mlp_forward(self.u2, autodiff.concat(tape, [u1_var, rest]), tape)

    def forward_u3(self, tape: Tape, u2_var, u1_var, x: np.ndarray, t, d=0.0):
        rest = np.concatenate([x] + self._cols(len(x), t, d), axis=1)
        return mlp_forward(self.u3, autodiff.concat(tape, [u2_var, u1_var, rest]), tape)


def init_fields(order: int, step_conditioned: bool, hidden_sizes, activation: str,
                rng: Rng, data_dim: int = DATA_DIM) -> FieldSet:
    """Freshly initialized u1..u_order networks (one RNG split each)."""
    if order not in (1, 2, 3):
        raise ValueError(f"field order must be 1, 2 or 3, got {order}")
    widths = input_widths(order, step_conditioned, data_dim)
    nets = []
    for w in widths:
        sizes = (w, *hidden_sizes, data_dim)
        nets.append(init_model(sizes, activation, rng.split()))
    nets += [None] * (3 - order)
    return FieldSet(nets[0], nets[1], nets[2], step_conditioned)
