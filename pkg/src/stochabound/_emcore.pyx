# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Euler-Maruyama loop for dX = A X dt + g(X) dW.

Mirrors ``stochabound._pyem.integrate``; see there for the argument
contract.  The GIL is released around the path loop.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sqrt, fabs, isfinite

cnp.import_array()

cdef enum:
    FAM_CONSTANT = 0
    FAM_COSINE = 1
    FAM_AFFINE = 2
    FAM_LINEAR = 3


cdef inline void _kernel(int family, const double* x, int n, int m,
                         const double[:, ::1] G0, const double[:, :, ::1] Gs,
                         double a, double k, double gamma, double* g) noexcept nogil:
    cdef int i, j, l
    cdef double s
    if family == FAM_COSINE:
        g[0] = a * cos(k * x[0])
        return
    for i in range(n):
        for j in range(m):
            g[i * m + j] = G0[i, j]
    if family == FAM_AFFINE:
        s = 0.0
        for i in range(n):
            s = s + x[i] * x[i]
        s = gamma * sqrt(s) / sqrt(<double>(n * m))
        for i in range(n * m):
            g[i] = g[i] + s
    elif family == FAM_LINEAR:
        for l in range(n):
            for i in range(n):
                for j in range(m):
                    g[i * m + j] = g[i * m + j] + x[l] * Gs[l, i, j]


def integrate(const double[:, ::1] A, int family, const double[:, ::1] G0, const double[:, :, ::1] Gs,
              double a, double k, double gamma,
              const double[:, ::1] x0, const double[:, :, ::1] dW, double dt, double threshold):
    """Integrate a batch of paths.

    Returns ``(states, bad_path, bad_step)``; ``bad_path`` is -1 when all
    paths stayed finite and below ``threshold``.
    """
    cdef Py_ssize_t p = x0.shape[0]
    cdef int n = <int>x0.shape[1]
    cdef Py_ssize_t steps = dW.shape[1]
    cdef int m = <int>dW.shape[2]
    states_arr = np.empty((p, steps + 1, n), dtype=np.float64)
    cdef double[:, :, ::1] S = states_arr
    g_arr = np.empty(n * m, dtype=np.float64)
    cdef double[::1] g = g_arr
    cdef Py_ssize_t ip, s
    cdef int i, j
    cdef double drift, noise, xi
    cdef Py_ssize_t bad_path = -1, bad_step = -1

    with nogil:
        for ip in range(p):
            for i in range(n):
                S[ip, 0, i] = x0[ip, i]
            for s in range(steps):
                _kernel(family, &S[ip, s, 0], n, m, G0, Gs, a, k, gamma, &g[0])
                for i in range(n):
                    drift = 0.0
                    for j in range(n):
                        drift = drift + A[i, j] * S[ip, s, j]
                    noise = 0.0
                    for j in range(m):
                        noise = noise + g[i * m + j] * dW[ip, s, j]
                    xi = S[ip, s, i] + drift * dt + noise
                    S[ip, s + 1, i] = xi
                    if not isfinite(xi) or fabs(xi) > threshold:
                        bad_path = ip
                        bad_step = s + 1
                if bad_path >= 0:
                    break
            if bad_path >= 0:
                break
    return states_arr, bad_path, bad_step
