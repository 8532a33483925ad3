"""Dense MLP field models with exact gradients and a hand-rolled Adam.

Weight layout is (fan_out, fan_in) per layer; hidden layers use the
configured activation, the output layer is linear. All numerics are
float64.

Initialization (documented so ports can reproduce parameters exactly):
for each layer in order, the weight entries are drawn row-major from the
model's RNG stream as ``(2u - 1) * sqrt(6 / (fan_in + fan_out))`` with u
uniform on [0, 1); biases start at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff, backend
from .autodiff import Tape, Var
from .rng import Rng

ACTIVATIONS = ("relu", "tanh")


class DimensionError(ValueError):
    """Shape mismatch; carries expected and actual sizes."""

    def __init__(self, what, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


class NumericError(RuntimeError):
    """Non-finite values where finite ones are required."""


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )


def init_model(layer_sizes, activation: str, rng: Rng) -> MlpModel:
    """Fresh model with uniform Glorot weights and zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError(f"need at least input and output sizes, got {sizes}")
    if any(s <= 0 for s in sizes):
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = rng.uniforms(fan_out * fan_in).reshape(fan_out, fan_in)
        weights.append((2.0 * u - 1.0) * limit)
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, activation)


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def mlp_eval(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Tape-free forward pass for a (n, in_dim) batch."""
    kern = backend.get()
    h = np.ascontiguousarray(x, dtype=np.float64)
    if h.shape[1] != model.in_dim:
        raise DimensionError("input width", model.in_dim, h.shape[1])
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = kern.linear_forward(h, w, b)
        if i < last:
            h = kern.relu_forward(h) if model.activation == "relu" else kern.tanh_forward(h)
    return h


def mlp_forward(model: MlpModel, x, tape: Tape | None = None):
    """Evaluate the model on a vector, batch, or recorded Var.

    Without a tape this is a plain evaluation. With a tape the forward
    values are recorded so gradients can be pulled afterwards; the return
    value is then a Var.
    """
    if isinstance(x, Var):
        if tape is None:
            raise autodiff.GraphError("Var input requires a tape")
        if x.value.shape[1] != model.in_dim:
            raise DimensionError("input width", model.in_dim, x.value.shape[1])
        h = x
        single = False
    else:
        batch, single = _as_batch(x)
        if batch.shape[1] != model.in_dim:
            raise DimensionError("input width", model.in_dim, batch.shape[1])
        if tape is None:
            out = mlp_eval(model, batch)
            return out[0] if single else out
        h = np.ascontiguousarray(batch)
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = autodiff.affine(tape, h, tape.param(w), tape.param(b))
        if i < last:
            h = autodiff.activation(tape, h, model.activation)
    tape.last_output = h
    tape.last_model = model
    return h


def mlp_backward(tape: Tape, output_gradient) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-layer (dW, db) for the model most recently run on this tape."""
    out = tape.last_output
    if out is None:
        raise autodiff.GraphError("no forward pass recorded on this tape")
    model = tape.last_model
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != out.value.shape:
        raise DimensionError("output gradient shape", out.value.shape, g.shape)
    tape.backward(out, seed=g)
    return [(tape.grad(w), tape.grad(b)) for w, b in zip(model.weights, model.biases)]


def model_grads(tape: Tape, model: MlpModel) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-layer (dW, db) after a backward pass over an arbitrary graph."""
    return [(tape.grad(w), tape.grad(b)) for w, b in zip(model.weights, model.biases)]


@dataclass
class AdamState:
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_init(model: MlpModel, learning_rate: float = 0.005, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    m, v = [], []
    for w, b in zip(model.weights, model.biases):
        m += [np.zeros_like(w), np.zeros_like(b)]
        v += [np.zeros_like(w), np.zeros_like(b)]
    return AdamState(learning_rate, beta1, beta2, epsilon, 0, m, v)


def adam_step(model: MlpModel, grads, state: AdamState):
    """Bias-corrected Adam update, in place; returns (model, state).

    ``grads`` is the per-layer [(dW, db), ...] list produced by the tape.
    """
    kern = backend.get()
    if len(grads) != len(model.weights):
        raise DimensionError("gradient layer count", len(model.weights), len(grads))
    flat_params, flat_grads = [], []
    for i, ((dw, db), w, b) in enumerate(zip(grads, model.weights, model.biases)):
        if dw.shape != w.shape or db.shape != b.shape:
            raise DimensionError(
                f"layer {i} gradient shape", (w.shape, b.shape), (dw.shape, db.shape)
            )
        if not np.all(np.isfinite(dw)) or not np.all(np.isfinite(db)):
            raise NumericError(f"non-finite gradient in layer {i}")
        flat_params += [w, b]
        flat_grads += [dw, db]
    state.step_count += 1
    for p, g, m, v in zip(flat_params, flat_grads, state.m, state.v):
        kern.adam_update(p, g, m, v, state.step_count, state.learning_rate,
                         state.beta1, state.beta2, state.epsilon)
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(b)):
            raise NumericError(f"non-finite parameters in layer {i} after update")
    return model, state


def model_to_dict(model: MlpModel) -> dict:
    return {
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def model_from_dict(doc: dict) -> MlpModel:
    sizes = tuple(int(s) for s in doc["layer_sizes"])
    weights = [np.asarray(w, dtype=np.float64) for w in doc["weights"]]
    biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    model = MlpModel(sizes, weights, biases, doc["activation"])
    for i, (w, b, fan_in, fan_out) in enumerate(
        zip(weights, biases, sizes[:-1], sizes[1:])
    ):
        if w.shape != (fan_out, fan_in):
            raise DimensionError(f"layer {i} weight shape", (fan_out, fan_in), w.shape)
        if b.shape != (fan_out,):
            raise DimensionError(f"layer {i} bias shape", (fan_out,), b.shape)
    return model
