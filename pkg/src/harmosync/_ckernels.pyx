# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampled-data propagation kernel; same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs

cnp.import_array()

BACKEND = "cython"


def propagate(E, G, Phi, x0, mu, control, double delta, long K, double M, Py_ssize_t n_steps):
    cdef double[:, ::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef double[:, ::1] Pv = np.ascontiguousarray(Phi, dtype=np.float64)
    cdef double[::1] muv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef cnp.uint8_t[::1] cv = np.ascontiguousarray(control, dtype=np.uint8)
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t n2 = Ev.shape[0]
    cdef Py_ssize_t n = n2 // 2
    X_arr = np.empty((n_steps + 1, n2))
    R_arr = np.zeros((n_steps, n))
    sat_arr = np.zeros(n_steps, dtype=np.uint8)
    cdef double[:, ::1] X = X_arr
    cdef double[:, ::1] R = R_arr
    cdef cnp.uint8_t[::1] sat = sat_arr
    cdef double step = 2.0 * delta
    cdef double dK = <double>K
    cdef Py_ssize_t k, i, j
    cdef double m, y, idx, acc
    for i in range(n2):
        X[0, i] = x0v[i]
    for k in range(n_steps):
        if cv[k]:
            m = muv[k]
            for i in range(n):
                y = X[k, n + i] / m
                if fabs(y) > M:
                    sat[k] = 1
                idx = floor(y / step + 0.5)
                if idx > dK:
                    idx = dK
                elif idx < -dK:
                    idx = -dK
                R[k, i] = m * (step * idx) - X[k, n + i]
            for i in range(n2):
                acc = 0.0
                for j in range(n2):
                    acc += Ev[i, j] * X[k, j]
                for j in range(n):
                    acc += Gv[i, j] * R[k, j]
                X[k + 1, i] = acc
        else:
            for i in range(n2):
                acc = 0.0
                for j in range(n2):
                    acc += Pv[i, j] * X[k, j]
                X[k + 1, i] = acc
    return X_arr, R_arr, sat_arr
