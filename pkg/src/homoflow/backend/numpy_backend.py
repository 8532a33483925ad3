"""Pure-numpy reference implementations of the hot kernels."""

import numpy as np


def linear_forward(x, w, b):
    """y = x @ w.T + b for x (n, in), w (out, in), b (out,)."""
    return x @ w.T + b


def linear_backward(x, w, dy):
    """Gradients of y = x @ w.T + b: returns (dx, dw, db)."""
    return dy @ w, dy.T @ x, dy.sum(axis=0)


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(x, dy):
    return np.where(x > 0.0, dy, 0.0)


def tanh_forward(x):
    return np.tanh(x)


def tanh_backward(y, dy):
    """Backward from the forward *output* y = tanh(x)."""
    return (1.0 - y * y) * dy


def adam_update(param, grad, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam update, in place on param, m, v."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
