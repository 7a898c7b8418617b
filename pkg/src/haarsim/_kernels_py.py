"""Pure-NumPy fallback kernels.

Mirrors the compiled extension ``haarsim._kernels`` entry point for entry
point: same counter-based random stream, same rotation order, same
projection order. The integer pipeline of the random stream is bit-identical
to the compiled module; transcendental steps may differ by a few ulp because
NumPy's vectorized libm is not the platform libm.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
_MULT2 = np.uint64(0x94D049BB133111EB)
_TWO_PI = 6.283185307179586
_U53 = 2.0 ** -53

IS_COMPILED = False


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 output finalizer, vectorized on uint64
    z = z ^ (z >> np.uint64(30))
    z = z * _MULT1
    z = z ^ (z >> np.uint64(27))
    z = z * _MULT2
    return z ^ (z >> np.uint64(31))


def fill_gaussian(key: int, count: int) -> np.ndarray:
    """Standard normal deviates from a keyed counter stream.

    Counter c (0-based) yields the uniform u_c = ((mix64(key + (c+1)*GAMMA)
    >> 11) + 0.5) * 2^-53 in (0, 1); consecutive uniform pairs feed the
    Box-Muller transform. Fully determined by ``key``.
    """
    if count <= 0:
        return np.empty(0, dtype=np.float64)
    npairs = (count + 1) // 2
    with np.errstate(over="ignore"):
        ctr = np.arange(1, 2 * npairs + 1, dtype=np.uint64)
        z = _mix64(np.uint64(key) + ctr * _GAMMA)
    u = ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    ang = _TWO_PI * u[1::2]
    out = np.empty(2 * npairs, dtype=np.float64)
    out[0::2] = r * np.cos(ang)
    out[1::2] = r * np.sin(ang)
    return out[:count]


def jacobi_eigenvalues(a: np.ndarray, rel_tol: float, max_sweeps: int):
    """Cyclic Jacobi diagonalization of a symmetric matrix, in place.

    Sweeps row-cyclically over the upper triangle until the off-diagonal
    Frobenius norm drops to ``rel_tol`` times the (rotation-invariant)
    Frobenius norm of the input. Returns (diagonal, sweeps, converged).
    """
    q = a.shape[0]
    fro = float(np.sqrt(np.sum(a * a)))
    tol_off = rel_tol * fro
    # rotations below this threshold cannot lift the off-norm above tol_off
    skip = tol_off / max(q, 1)

    def off_norm() -> float:
        return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))

    if q < 2 or off_norm() <= tol_off:
        return np.diagonal(a).copy(), 0, True

    for sweep in range(1, max_sweeps + 1):
        for p in range(q - 1):
            for r in range(p + 1, q):
                apq = a[p, r]
                if abs(apq) <= skip:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                app, arr = a[p, p], a[r, r]
                colp = a[:, p].copy()
                colr = a[:, r].copy()
                newp = c * colp - s * colr
                newr = s * colp + c * colr
                a[:, p] = newp
                a[p, :] = newp
                a[:, r] = newr
                a[r, :] = newr
                a[p, p] = app - t * apq
                a[r, r] = arr + t * apq
                a[p, r] = 0.0
                a[r, p] = 0.0
        if off_norm() <= tol_off:
            return np.diagonal(a).copy(), sweep, True
    return np.diagonal(a).copy(), max_sweeps, False


def mgs_rows(a: np.ndarray, norms: np.ndarray, rank_tol: float) -> int:
    """Right-looking modified Gram-Schmidt on the rows of ``a``, in place.

    Rows play the role of the vectors being orthonormalized (callers pass a
    transposed column set so each vector is contiguous). ``norms[j]``
    receives the pre-normalization norm of row j. Returns -1 on success or
    the index of the first row whose residual norm is <= ``rank_tol``.
    """
    k = a.shape[0]
    for j in range(k):
        nrm = float(np.sqrt(a[j] @ a[j]))
        if nrm <= rank_tol:
            return j
        norms[j] = nrm
        a[j] /= nrm
        if j + 1 < k:
            coef = a[j + 1 :] @ a[j]
            a[j + 1 :] -= np.outer(coef, a[j])
    return -1
