# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: dense layer forward/backward via BLAS, fused
elementwise activations and Adam updates.

Drop-in replacements for ``numpy_backend``; all arrays are C-contiguous
float64.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, tanh as ctanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef void _gemm(char ta, char tb, int m, int n, int k,
                double* a, int lda, double* b, int ldb,
                double* c, int ldc) noexcept nogil:
    cdef double alpha = 1.0, beta = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc)


def linear_forward(cnp.ndarray[double, ndim=2, mode="c"] x,
                   cnp.ndarray[double, ndim=2, mode="c"] w,
                   cnp.ndarray[double, ndim=1, mode="c"] b):
    """y = x @ w.T + b for x (n, d_in), w (d_out, d_in), b (d_out,)."""
    cdef int n = x.shape[0], d_in = x.shape[1], d_out = w.shape[0]
    cdef cnp.ndarray[double, ndim=2, mode="c"] y = np.empty((n, d_out))
    cdef int i, j
    if n > 0 and d_in > 0:
        # Row-major y = x @ w.T  <=>  column-major y^T = w^T(F)^T @ x^T(F).
        _gemm(b'T', b'N', d_out, n, d_in,
              &w[0, 0], d_in, &x[0, 0], d_in, &y[0, 0], d_out)
    else:
        y[:, :] = 0.0
    with nogil:
        for i in range(n):
            for j in range(d_out):
                y[i, j] += b[j]
    return y


def linear_backward(cnp.ndarray[double, ndim=2, mode="c"] x,
                    cnp.ndarray[double, ndim=2, mode="c"] w,
                    cnp.ndarray[double, ndim=2, mode="c"] dy):
    """Gradients of y = x @ w.T + b: returns (dx, dw, db)."""
    cdef int n = x.shape[0], d_in = x.shape[1], d_out = w.shape[0]
    cdef cnp.ndarray[double, ndim=2, mode="c"] dx = np.empty((n, d_in))
    cdef cnp.ndarray[double, ndim=2, mode="c"] dw = np.empty((d_out, d_in))
    cdef cnp.ndarray[double, ndim=1, mode="c"] db = np.zeros(d_out)
    cdef int i, j
    if n > 0 and d_out > 0 and d_in > 0:
        # dx = dy @ w      : dx^T(F) = w^T(F) @ dy^T(F)
        _gemm(b'N', b'N', d_in, n, d_out,
              &w[0, 0], d_in, &dy[0, 0], d_out, &dx[0, 0], d_in)
        # dw = dy.T @ x    : dw^T(F) = x^T(F) @ dy(F-transposed)
        _gemm(b'N', b'T', d_in, d_out, n,
              &x[0, 0], d_in, &dy[0, 0], d_out, &dw[0, 0], d_in)
    else:
        dx[:, :] = 0.0
        dw[:, :] = 0.0
    with nogil:
        for i in range(n):
            for j in range(d_out):
                db[j] += dy[i, j]
    return dx, dw, db


def relu_forward(cnp.ndarray[double, ndim=2, mode="c"] x):
    cdef int n = x.shape[0], d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] y = np.empty((n, d))
    cdef int i, j
    with nogil:
        for i in range(n):
            for j in range(d):
                y[i, j] = x[i, j] if x[i, j] > 0.0 else 0.0
    return y


def relu_backward(cnp.ndarray[double, ndim=2, mode="c"] x,
                  cnp.ndarray[double, ndim=2, mode="c"] dy):
    cdef int n = x.shape[0], d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] dx = np.empty((n, d))
    cdef int i, j
    with nogil:
        for i in range(n):
            for j in range(d):
                dx[i, j] = dy[i, j] if x[i, j] > 0.0 else 0.0
    return dx


def tanh_forward(cnp.ndarray[double, ndim=2, mode="c"] x):
    cdef int n = x.shape[0], d = x.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] y = np.empty((n, d))
    cdef int i, j
    with nogil:
        for i in range(n):
            for j in range(d):
                y[i, j] = ctanh(x[i, j])
    return y


def tanh_backward(cnp.ndarray[double, ndim=2, mode="c"] y,
                  cnp.ndarray[double, ndim=2, mode="c"] dy):
    cdef int n = y.shape[0], d = y.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] dx = np.empty((n, d))
    cdef int i, j
    with nogil:
        for i in range(n):
            for j in range(d):
                dx[i, j] = (1.0 - y[i, j] * y[i, j]) * dy[i, j]
    return dx


def adam_update(cnp.ndarray param, cnp.ndarray grad,
                cnp.ndarray m, cnp.ndarray v,
                long t, double lr, double beta1, double beta2, double eps):
    """One bias-corrected Adam update, in place on param, m, v."""
    cdef double[::1] p_ = param.ravel()
    cdef double[::1] g_ = grad.ravel()
    cdef double[::1] m_ = m.ravel()
    cdef double[::1] v_ = v.ravel()
    cdef Py_ssize_t i, size = p_.shape[0]
    cdef double c1 = 1.0 - beta1**t
    cdef double c2 = 1.0 - beta2**t
    cdef double mh, vh
    with nogil:
        for i in range(size):
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * g_[i]
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * g_[i] * g_[i]
            mh = m_[i] / c1
            vh = v_[i] / c2
            p_[i] -= lr * mh / (sqrt(vh) + eps)
