# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: counter-based Gaussian fill, cyclic Jacobi, modified GS.

Semantics match ``haarsim._kernels_py`` entry point for entry point; see that
module for the contracts. The hot loops here are plain C with OpenMP over
independent work items only, so results do not depend on the thread count.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange
from libc.math cimport cos, fabs, log, sin, sqrt


cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t hs_mix64(uint64_t z) {
        z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27; z *= 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    ctypedef unsigned long long uint64_t
    uint64_t hs_mix64(uint64_t z) nogil


cdef uint64_t GAMMA = 0x9E3779B97F4A7C15
cdef double TWO_PI = 6.283185307179586
cdef double U53 = 1.1102230246251565e-16  # 2^-53

IS_COMPILED = True


def fill_gaussian(unsigned long long key, Py_ssize_t count):
    """Standard normal deviates from a keyed counter stream (Box-Muller)."""
    if count <= 0:
        return np.empty(0, dtype=np.float64)
    cdef Py_ssize_t npairs = (count + 1) // 2
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t t
    cdef uint64_t z1, z2
    cdef double u1, u2, r, ang
    with nogil:
        for t in prange(npairs, schedule='static'):
            z1 = hs_mix64(key + (2 * <uint64_t> t + 1) * GAMMA)
            z2 = hs_mix64(key + (2 * <uint64_t> t + 2) * GAMMA)
            u1 = (<double> (z1 >> 11) + 0.5) * U53
            u2 = (<double> (z2 >> 11) + 0.5) * U53
            r = sqrt(-2.0 * log(u1))
            ang = TWO_PI * u2
            o[2 * t] = r * cos(ang)
            if 2 * t + 1 < count:
                o[2 * t + 1] = r * sin(ang)
    return out


cdef double _off_norm(double[:, ::1] a) nogil:
    cdef Py_ssize_t q = a.shape[0]
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(q - 1):
        for j in range(i + 1, q):
            s += a[i, j] * a[i, j]
    return sqrt(2.0 * s)


def jacobi_eigenvalues(double[:, ::1] a, double rel_tol, int max_sweeps):
    """Cyclic Jacobi diagonalization of a symmetric matrix, in place."""
    cdef Py_ssize_t q = a.shape[0]
    cdef Py_ssize_t p, r, i, sweep
    cdef double fro = 0.0, tol_off, skip
    cdef double apq, theta, t, c, s, app, arr, aip, air

    for p in range(q):
        for r in range(q):
            fro += a[p, r] * a[p, r]
    fro = sqrt(fro)
    tol_off = rel_tol * fro
    skip = tol_off / max(q, 1)

    if q < 2 or _off_norm(a) <= tol_off:
        return np.asarray(a).diagonal().copy(), 0, True

    for sweep in range(1, max_sweeps + 1):
        with nogil:
            for p in range(q - 1):
                for r in range(p + 1, q):
                    apq = a[p, r]
                    if fabs(apq) <= skip:
                        continue
                    theta = (a[r, r] - a[p, p]) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 1.0 / (2.0 * theta)
                    else:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    app = a[p, p]
                    arr = a[r, r]
                    for i in range(q):
                        aip = a[i, p]
                        air = a[i, r]
                        a[i, p] = c * aip - s * air
                        a[i, r] = s * aip + c * air
                    for i in range(q):
                        a[p, i] = a[i, p]
                        a[r, i] = a[i, r]
                    a[p, p] = app - t * apq
                    a[r, r] = arr + t * apq
                    a[p, r] = 0.0
                    a[r, p] = 0.0
        if _off_norm(a) <= tol_off:
            return np.asarray(a).diagonal().copy(), sweep, True
    return np.asarray(a).diagonal().copy(), max_sweeps, False


cdef inline double _dot(const double* u, const double* v, Py_ssize_t n) nogil:
    # four accumulators to break the add-latency chain; order is fixed,
    # so results stay deterministic
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t i = 0
    while i + 4 <= n:
        s0 += u[i] * v[i]
        s1 += u[i + 1] * v[i + 1]
        s2 += u[i + 2] * v[i + 2]
        s3 += u[i + 3] * v[i + 3]
        i += 4
    while i < n:
        s0 += u[i] * v[i]
        i += 1
    return (s0 + s1) + (s2 + s3)


def mgs_rows(double[:, ::1] a, double[::1] norms, double rank_tol):
    """Right-looking modified Gram-Schmidt on the rows of ``a``, in place."""
    cdef Py_ssize_t k = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t j, t, i
    cdef double s, inv, r
    cdef double* base = &a[0, 0] if k > 0 and n > 0 else NULL
    for j in range(k):
        s = sqrt(_dot(base + j * n, base + j * n, n))
        if s <= rank_tol:
            return j
        norms[j] = s
        inv = 1.0 / s
        for i in range(n):
            a[j, i] *= inv
        if j + 1 < k:
            with nogil:
                for t in prange(j + 1, k, schedule='static'):
                    r = _dot(base + j * n, base + t * n, n)
                    for i in range(n):
                        a[t, i] = a[t, i] - r * a[j, i]
    return -1
