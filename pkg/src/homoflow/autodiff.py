"""Minimal reverse-mode differentiation over batched float64 arrays.

A :class:`Tape` records the primitive operations of a forward pass (affine
layers, activations, concatenation, scalar scaling, addition, squared-norm
reduction) together with the values needed for the reverse sweep. Plain
ndarrays passed into an op are constants: they receive no gradient, which
is also how detached values enter a graph (compute them tape-free, pass
the raw array).

Parameter leaves are registered through :meth:`Tape.param`, keyed by array
identity, so a parameter reused across several forward calls accumulates
gradient from every use. Parameters never touched by the forward pass
report an exactly-zero gradient.
"""

from __future__ import annotations

import numpy as np

from . import backend


class GraphError(RuntimeError):
    """Raised when the tape is used out of order (e.g. backward twice)."""


class Var:
    """A recorded intermediate value; ``grad`` is filled by the backward pass."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = value
        self.grad = None


def _value(x):
    return x.value if isinstance(x, Var) else x


def _accumulate(x, g):
    if not isinstance(x, Var):
        return
    if x.grad is None:
        x.grad = np.zeros_like(x.value)
    x.grad += g


class Tape:
    def __init__(self):
        self._ops = []
        self._params = {}
        self._used = False
        self.last_output: Var | None = None
        self.last_model = None

    def param(self, array: np.ndarray) -> Var:
        """Leaf Var for a parameter array (memoized by array identity)."""
        var = self._params.get(id(array))
        if var is None:
            var = Var(array)
            self._params[id(array)] = var
        return var

    def grad(self, array: np.ndarray) -> np.ndarray:
        """Gradient for a parameter array; zeros if it was never touched."""
        var = self._params.get(id(array))
        if var is None or var.grad is None:
            return np.zeros_like(array)
        return var.grad

    def record(self, backward_fn):
        self._ops.append(backward_fn)

    def backward(self, output: Var, seed=None):
        """Run the reverse sweep from ``output`` (seed defaults to 1.0)."""
        if self._used:
            raise GraphError("tape already consumed by a previous backward pass")
        if not self._ops:
            raise GraphError("backward requested before any forward operation")
        self._used = True
        if seed is None:
            seed = np.ones_like(np.asarray(output.value, dtype=np.float64))
        output.grad = np.asarray(seed, dtype=np.float64)
        for fn in reversed(self._ops):
            fn()


def affine(tape: Tape, x, w: Var, b: Var) -> Var:
    """y = x @ W.T + bias; x may be a Var or a constant array."""
    kern = backend.get()
    xv = _value(x)
    out = Var(kern.linear_forward(xv, w.value, b.value))

    def bwd():
        dx, dw, db = kern.linear_backward(xv, w.value, out.grad)
        _accumulate(x, dx)
        _accumulate(w, dw)
        _accumulate(b, db)

    tape.record(bwd)
    return out


def activation(tape: Tape, x, kind: str) -> Var:
    kern = backend.get()
    xv = _value(x)
    if kind == "relu":
        out = Var(kern.relu_forward(xv))

        def bwd():
            _accumulate(x, kern.relu_backward(xv, out.grad))

    elif kind == "tanh":
        out = Var(kern.tanh_forward(xv))

        def bwd():
            _accumulate(x, kern.tanh_backward(out.value, out.grad))

    else:
        raise ValueError(f"unknown activation {kind!r}")
    tape.record(bwd)
    return out


def concat(tape: Tape, parts) -> Var:
    """Column-wise concatenation of Vars and constant arrays."""
    values = [_value(p) for p in parts]
    widths = [v.shape[1] for v in values]
    out = Var(np.concatenate(values, axis=1))

    def bwd():
        offset = 0
        for part, width in zip(parts, widths):
            _accumulate(part, out.grad[:, offset : offset + width])
            offset += width

    tape.record(bwd)
    return out


def add(tape: Tape, a, b) -> Var:
    out = Var(_value(a) + _value(b))

    def bwd():
        _accumulate(a, out.grad)
        _accumulate(b, out.grad)

    tape.record(bwd)
    return out


def sub(tape: Tape, a, b) -> Var:
    out = Var(_value(a) - _value(b))

    def bwd():
        _accumulate(a, out.grad)
        _accumulate(b, -out.grad)

    tape.record(bwd)
    return out


def scale(tape: Tape, x, c: float) -> Var:
    out = Var(_value(x) * c)

    def bwd():
        _accumulate(x, out.grad * c)

    tape.record(bwd)
    return out


def ssq(tape: Tape, x) -> Var:
    """Sum of squared entries, reduced to a 0-d scalar."""
    xv = _value(x)
    out = Var(np.float64(np.sum(xv * xv)))

    def bwd():
        _accumulate(x, (2.0 * float(out.grad)) * xv)

    tape.record(bwd)
    return out


def detach(x) -> np.ndarray:
    """Numeric value of ``x`` with no gradient connection."""
    return _value(x)
