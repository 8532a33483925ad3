"""Kernel backend selection.

The numerically hot primitives (dense layer forward/backward, activations,
Adam updates) exist twice: a compiled Cython extension and a pure-numpy
fallback with identical semantics. The extension is preferred when it
imports; set ``HOMOFLOW_BACKEND=numpy`` or ``=cython`` to force one.
``benchmarks/bench_backends.py`` compares the two.
"""

import os

from . import numpy_backend

_IMPLS = {"numpy": numpy_backend}
try:
    from . import _kernels

    _IMPLS["cython"] = _kernels
except ImportError:
    _kernels = None

_active_name = None
_active = None


def available_backends():
    return tuple(sorted(_IMPLS))


def use(name: str):
    """Select the kernel implementation by name ('cython' or 'numpy')."""
    global _active, _active_name
    if name not in _IMPLS:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        )
    _active = _IMPLS[name]
    _active_name = name
    return _active


def active_name() -> str:
    return _active_name


def get():
    """The active kernel namespace."""
    return _active


_requested = os.environ.get("HOMOFLOW_BACKEND", "").strip().lower()
if _requested:
    use(_requested)
else:
    use("cython" if "cython" in _IMPLS else "numpy")
