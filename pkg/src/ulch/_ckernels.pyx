# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
from libc.math cimport pow


def periodic_window_sum(a, weights):
    cdef const double[:, ::1] sv = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t rows = sv.shape[0], n = sv.shape[1]
    cdef Py_ssize_t half = (wv.shape[0] - 1) // 2
    out = np.zeros((rows, n), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, m, jj
    cdef double acc
    with nogil:
        for i in range(rows):
            for j in range(n):
                acc = 0.0
                for m in range(-half, half + 1):
                    jj = (j + m) % n
                    if jj < 0:
                        jj += n
                    acc = acc + wv[m + half] * sv[i, jj]
                ov[i, j] = acc
    return out


def poly_f_fprime(u, coeffs):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef const double[::1] cv = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0], deg = cv.shape[0] - 1, i, k
    f = np.empty(n, dtype=np.float64)
    fp = np.empty(n, dtype=np.float64)
    cdef double[::1] fv = f, fpv = fp
    cdef double x, acc, dacc
    with nogil:
        for i in range(n):
            x = uv[i]
            acc = cv[deg]
            dacc = 0.0
            for k in range(deg - 1, -1, -1):
                dacc = dacc * x + acc
                acc = acc * x + cv[k]
            fv[i] = acc
            fpv[i] = dacc
    shape = np.shape(u)
    return f.reshape(shape), fp.reshape(shape)


def singular_f_fprime(u, double l, double alpha):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef Py_ssize_t n = uv.shape[0], i
    f = np.empty(n, dtype=np.float64)
    fp = np.empty(n, dtype=np.float64)
    cdef double[::1] fv = f, fpv = fp
    cdef double x, s, p
    with nogil:
        for i in range(n):
            x = uv[i]
            s = 1.0 - x * x
            p = pow(s, -l)
            fv[i] = x * p - alpha * x
            fpv[i] = p + 2.0 * l * x * x * p / s - alpha
    shape = np.shape(u)
    return f.reshape(shape), fp.reshape(shape)
