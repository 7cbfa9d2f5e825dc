# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled 5-point matvec and conjugate-gradient loop.

Mirrors ``_kernels_py``; reductions run in a fixed serial order so results are
reproducible run to run.
"""

import numpy as np
from libc.math cimport sqrt, isfinite

CONVERGED, MAX_ITER, BREAKDOWN = 0, 1, 2


cdef void _matvec(const double[:, ::1] diag, const double[:, ::1] west,
                  const double[:, ::1] east, const double[:, ::1] south,
                  const double[:, ::1] north, const double[:, ::1] x,
                  double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t I = x.shape[0], J = x.shape[1], i, j
    cdef double s
    for i in range(I):
        for j in range(J):
            s = diag[i, j] * x[i, j]
            if i > 0:
                s += west[i, j] * x[i - 1, j]
            if i < I - 1:
                s += east[i, j] * x[i + 1, j]
            if j > 0:
                s += south[i, j] * x[i, j - 1]
            if j < J - 1:
                s += north[i, j] * x[i, j + 1]
            out[i, j] = s


cdef double _dot(const double[:, ::1] a, const double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += a[i, j] * b[i, j]
    return s


def matvec5(diag, west, east, south, north, x, out=None):
    if out is None:
        out = np.empty_like(x)
    _matvec(diag, west, east, south, north, x, out)
    return out


def cg5(diag, west, east, south, north, b, x, double tol, Py_ssize_t max_iter,
        bint jacobi=False, callback=None):
    cdef const double[:, ::1] D = diag
    cdef const double[:, ::1] W = west
    cdef const double[:, ::1] E = east
    cdef const double[:, ::1] S = south
    cdef const double[:, ::1] N = north
    cdef const double[:, ::1] B = b
    cdef double[:, ::1] X = x
    cdef Py_ssize_t I = X.shape[0], J = X.shape[1], i, j
    cdef Py_ssize_t it = 0
    cdef double bnorm, relres, rz, rz_new, pap, alpha, beta

    bnorm = sqrt(_dot(B, B))
    if bnorm == 0.0:
        X[:, :] = 0.0
        return 0, 0.0, CONVERGED

    r_arr = np.empty((I, J))
    z_arr = np.empty((I, J))
    p_arr = np.empty((I, J))
    ap_arr = np.empty((I, J))
    cdef double[:, ::1] R = r_arr
    cdef double[:, ::1] Z = z_arr
    cdef double[:, ::1] P = p_arr
    cdef double[:, ::1] AP = ap_arr

    _matvec(D, W, E, S, N, X, AP)
    for i in range(I):
        for j in range(J):
            R[i, j] = B[i, j] - AP[i, j]
    relres = sqrt(_dot(R, R)) / bnorm

    while True:
        if relres <= tol:
            return it, relres, CONVERGED
        for i in range(I):
            for j in range(J):
                Z[i, j] = R[i, j] / D[i, j] if jacobi else R[i, j]
                P[i, j] = Z[i, j]
        rz = _dot(R, Z)
        while it < max_iter:
            _matvec(D, W, E, S, N, P, AP)
            pap = _dot(P, AP)
            if not isfinite(pap) or pap <= 0.0:
                return it, relres, BREAKDOWN
            alpha = rz / pap
            for i in range(I):
                for j in range(J):
                    X[i, j] += alpha * P[i, j]
                    R[i, j] -= alpha * AP[i, j]
            it += 1
            if callback is not None:
                callback(x)
            relres = sqrt(_dot(R, R)) / bnorm
            if not isfinite(relres):
                return it, relres, BREAKDOWN
            if relres <= tol:
                break
            for i in range(I):
                for j in range(J):
                    Z[i, j] = R[i, j] / D[i, j] if jacobi else R[i, j]
            rz_new = _dot(R, Z)
            beta = rz_new / rz
            for i in range(I):
                for j in range(J):
                    P[i, j] = Z[i, j] + beta * P[i, j]
            rz = rz_new
        _matvec(D, W, E, S, N, X, AP)
        for i in range(I):
            for j in range(J):
                R[i, j] = B[i, j] - AP[i, j]
        relres = sqrt(_dot(R, R)) / bnorm
        if relres <= tol:
            return it, relres, CONVERGED
        if it >= max_iter:
            return it, relres, MAX_ITER
