"""Deterministic Gaussian sampling and the Gram-Schmidt Haar coupling.

Randomness is counter-based: a (master_seed, stream_id) pair is hashed to a
64-bit key, and entry c of a draw is a pure function of (key, c) via the
splitmix64 finalizer plus the Box-Muller transform. Every sample is
therefore bitwise reproducible and independent of scheduling or worker
count; distinct stream ids give statistically independent streams.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from haarsim._backend import kernels
from haarsim.errors import DomainError
from haarsim.linalg import mgs_orthonormalize

__all__ = [
    "SeedSpec",
    "HaarCoupling",
    "stream_id_for",
    "gaussian_matrix",
    "sample_haar_coupled",
    "max_coupling_dev",
    "max_projection_dev",
    "critical_columns",
    "floor_columns",
]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
# domain-separation constant (first 64 fractional bits of pi)
_PI_BITS = 0x243F6A8885A308D3


def _mix64(z: int) -> int:
    """splitmix64 output finalizer on 64-bit ints."""
    z &= _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedSpec:
    """A (master_seed, stream_id) pair; fully determines every sample."""

    master_seed: int
    stream_id: int = 0

    def key(self) -> int:
        """64-bit generator key: mix(mix(master ^ pi_bits) + stream * gamma)."""
        base = _mix64((self.master_seed & _MASK) ^ _PI_BITS)
        return _mix64((base + (self.stream_id & _MASK) * _GAMMA) & _MASK)


def stream_id_for(label: str, replicate: int) -> int:
    """Stable 64-bit stream id for replicate ``replicate`` of a labeled task.

    Uses blake2b so the id does not depend on the process, platform, or
    Python hash randomization. Replicate r of experiment cell ``label``
    always maps to the same stream, making results independent of worker
    count and scheduling.
    """
    digest = hashlib.blake2b(f"{label}#{replicate}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def gaussian_matrix(rows: int, cols: int, seed: SeedSpec) -> np.ndarray:
    """rows x cols matrix of iid standard normals, row-major entry order.

    Entry (i, j) consumes counter i*cols + j of the stream, so the same
    SeedSpec always reproduces the same matrix bit for bit.
    """
    if rows < 1 or cols < 1:
        raise DomainError(f"need rows, cols >= 1, got {rows} x {cols}")
    flat = kernels.fill_gaussian(seed.key(), rows * cols)
    return flat.reshape(rows, cols)


@dataclass(frozen=True)
class HaarCoupling:
    """A Gaussian matrix and the orthogonal matrix Gram-Schmidt makes of it.

    ``Y`` holds the first ``columns`` columns of an n x n iid standard
    normal matrix and ``Gamma`` the corresponding orthonormal columns (the
    Gram-Schmidt of the leading columns never involves the later ones, so a
    truncated coupling is exactly the leading block of the full one).
    ``w_norms[j]`` is the norm of the j-th residual vector and
    ``deltas_max_abs[j]`` the sup norm of the projection of column j onto
    the span of the previous columns (zero for j = 0 by definition).
    """

    n: int
    columns: int
    Y: np.ndarray
    Gamma: np.ndarray
    w_norms: np.ndarray
    deltas_max_abs: np.ndarray


def sample_haar_coupled(n: int, seed: SeedSpec, columns: int | None = None) -> HaarCoupling:
    """Draw the coupled pair (Gaussian Y, Haar-distributed Gamma).

    With ``columns=None`` the full n x n pair is produced and Gamma is Haar
    on the orthogonal group; with ``columns=m`` only the first m columns are
    generated (sufficient for the column statistics, at O(n m^2) cost).
    Coupling entries are drawn column by column (entry (i, j) is counter
    j*n + i of the stream).
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    m = n if columns is None else columns
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= columns <= n, got {m}")
    # column j occupies the contiguous counter block [j*n, (j+1)*n), so a
    # truncated coupling is exactly the leading block of the full one
    y = np.ascontiguousarray(gaussian_matrix(m, n, seed).T)
    q, w_norms = mgs_orthonormalize(y)
    # residual-vector reconstruction: w_j = ||w_j|| * gamma_j
    deltas = y - q * w_norms[np.newaxis, :]
    deltas_max_abs = np.max(np.abs(deltas), axis=0)
    deltas_max_abs[0] = 0.0  # first column has no preceding span
    return HaarCoupling(
        n=n, columns=m, Y=y, Gamma=q, w_norms=w_norms, deltas_max_abs=deltas_max_abs
    )


def max_coupling_dev(coupling: HaarCoupling, m: int) -> float:
    """max |sqrt(n) * Gamma_ij - Y_ij| over all rows and the first m columns.

    Nondecreasing in m.
    """
    if not 1 <= m <= coupling.columns:
        raise DomainError(f"need 1 <= m <= {coupling.columns}, got {m}")
    block = math.sqrt(coupling.n) * coupling.Gamma[:, :m] - coupling.Y[:, :m]
    return float(np.max(np.abs(block)))


def max_projection_dev(coupling: HaarCoupling, m: int) -> float:
    """max over columns 2..m of the sup norm of the projection part.

    Column 1 is excluded (its projection is zero by definition).
    """
    if not 2 <= m <= coupling.columns:
        raise DomainError(f"need 2 <= m <= {coupling.columns}, got {m}")
    return float(np.max(coupling.deltas_max_abs[1:m]))


def critical_columns(n: int, alpha: float) -> int:
    """ceil(n * alpha / (log n - (5/4) log log n)), the transition column count.

    The log-log correction makes this the sharp threshold scale for the
    coupling deviation statistic; natural logarithms throughout. Requires
    n >= 3 so the denominator is positive.
    """
    if n < 3:
        raise DomainError(f"need n >= 3, got {n}")
    if alpha <= 0.0:
        raise DomainError(f"need alpha > 0, got {alpha}")
    denom = math.log(n) - 1.25 * math.log(math.log(n))
    return math.ceil(n * alpha / denom)


def floor_columns(n: int, alpha: float) -> int:
    """floor(n * alpha / log n), the uncorrected column count variant."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    if alpha <= 0.0:
        raise DomainError(f"need alpha > 0, got {alpha}")
    return math.floor(n * alpha / math.log(n))
