"""Dense-matrix helpers sized for desk-scale experiments.

Matrices are plain float64 ndarrays, treated as immutable by every routine
here (inputs are copied before any in-place kernel work). The eigensolver is
cyclic Jacobi, which is accurate for the symmetric Gram matrices this
library feeds it (dimensions up to a few hundred).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from haarsim._backend import kernels
from haarsim.errors import ConvergenceError, DomainError, RankDeficiencyError, ShapeError

__all__ = ["SymSpectrum", "gram", "sym_eigenvalues", "trace_power", "mgs_orthonormalize"]

_JACOBI_REL_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100
_PSD_CLAMP_REL = 1e-9
# contract: max |Q'Q - I| <= 1e-10 after at most one extra pass, so the
# pass is triggered at the contract value itself
_REORTH_TRIGGER = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float64 C-contiguous array."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class SymSpectrum:
    """Eigenvalues of a symmetric matrix, sorted nonincreasing."""

    dim: int
    eigenvalues: np.ndarray

    def __post_init__(self) -> None:
        if self.eigenvalues.shape != (self.dim,):
            raise ShapeError("eigenvalue count must equal dim")

    def sum(self) -> float:
        return float(np.sum(self.eigenvalues))

    def max(self) -> float:
        return float(self.eigenvalues[0]) if self.dim else 0.0


def gram(x) -> np.ndarray:
    """X'X, symmetrized as (A + A')/2 after accumulation."""
    m = as_matrix(x, "X")
    g = m.T @ m
    return (g + g.T) / 2.0


def sym_eigenvalues(a, clamp_psd: bool = False) -> SymSpectrum:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps run until the off-diagonal Frobenius norm is at most 1e-12 times
    the Frobenius norm of the input (at most 100 sweeps). With
    ``clamp_psd=True`` the input is treated as a Gram matrix: eigenvalues in
    [-1e-9 * spectral_norm, 0) are clamped to zero and anything more
    negative raises.
    """
    m = as_matrix(a, "A")
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected square matrix, got {m.shape}")
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if float(np.max(np.abs(m - m.T))) > 1e-10 * max(1.0, scale):
        raise DomainError("matrix is not symmetric within 1e-10")
    work = m.copy()
    eigs, _sweeps, converged = kernels.jacobi_eigenvalues(
        work, _JACOBI_REL_TOL, _JACOBI_MAX_SWEEPS
    )
    if not converged:
        raise ConvergenceError(
            f"Jacobi sweeps did not converge within {_JACOBI_MAX_SWEEPS} sweeps"
        )
    eigs = np.sort(np.asarray(eigs))[::-1].copy()
    if clamp_psd and eigs.size:
        op_norm = max(abs(float(eigs[0])), abs(float(eigs[-1])))
        floor = -_PSD_CLAMP_REL * op_norm
        if float(eigs[-1]) < floor:
            raise DomainError(
                f"Gram matrix has eigenvalue {eigs[-1]} below the PSD clamp {floor}"
            )
        np.clip(eigs, 0.0, None, out=eigs)
    return SymSpectrum(dim=m.shape[0], eigenvalues=eigs)


def trace_power(a, k: int) -> float:
    """trace(A^k) by repeated multiplication, for small k."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    m = as_matrix(a, "A")
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected square matrix, got {m.shape}")
    acc = m
    for _ in range(k - 1):
        acc = acc @ m
    return float(np.trace(acc))


def mgs_orthonormalize(y) -> tuple[np.ndarray, np.ndarray]:
    """Modified Gram-Schmidt orthonormalization of the columns of Y.

    Returns (Q, w_norms): Q's columns are the normalized residual vectors in
    order, with the positive-norm convention (no sign flips), and w_norms[j]
    is the norm of the j-th residual before normalization. Accepts n x k
    input with k <= n. One extra orthogonalization pass is run when
    max |Q'Q - I| exceeds 1e-10; the returned norms always come from the
    first pass. Raises RankDeficiencyError when a residual norm falls to
    1e-10 * sqrt(n).
    """
    m = as_matrix(y, "Y")
    n, k = m.shape
    if k > n:
        raise ShapeError(f"need cols <= rows, got {m.shape}")
    if k == 0:
        return np.empty((n, 0)), np.empty(0)
    rank_tol = 1e-10 * np.sqrt(n)
    rows = np.ascontiguousarray(m.T)  # row j is column j, contiguous
    norms = np.empty(k, dtype=np.float64)
    bad = kernels.mgs_rows(rows, norms, rank_tol)
    if bad >= 0:
        raise RankDeficiencyError(f"column {bad} is numerically dependent")
    loss = _orthonormality_loss(rows)
    if loss > _REORTH_TRIGGER:
        scratch = np.empty(k, dtype=np.float64)
        bad = kernels.mgs_rows(rows, scratch, rank_tol)
        if bad >= 0:
            raise RankDeficiencyError(f"column {bad} collapsed in the second pass")
        loss = _orthonormality_loss(rows)
        if loss > _REORTH_TRIGGER:
            raise ConvergenceError(
                f"orthonormality loss {loss:.3e} persists after reorthogonalization"
            )
    return np.ascontiguousarray(rows.T), norms


def _orthonormality_loss(rows: np.ndarray) -> float:
    g = rows @ rows.T
    np.fill_diagonal(g, g.diagonal() - 1.0)
    return float(np.max(np.abs(g)))
