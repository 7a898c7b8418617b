"""Block densities of Haar-orthogonal matrices and the density-ratio factors.

The density of the scaled upper-left p x q block of a Haar orthogonal
matrix, relative to the iid standard normal density, factors into a
deterministic normalizing-constant part (a ratio of gamma functions) and a
random spectral part (a function of the eigenvalues of X'X). All work is in
log space; exponentials appear only inside |e^w - 1|, via expm1. The value
-inf marks the spectral indicator failing (an eigenvalue at or above n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from haarsim.errors import DomainError, ShapeError
from haarsim.linalg import SymSpectrum, as_matrix, gram, sym_eigenvalues
from haarsim.numerics import gauss_hermite_expectation, log_gamma

__all__ = [
    "BlockSpec",
    "LogDensityRatio",
    "LognormalParams",
    "TVLowerBound",
    "log_wishart_const",
    "log_block_density",
    "log_const_factor_exact",
    "log_const_factor_asymptotic",
    "log_spectral_factor",
    "log_density_ratio",
    "lognormal_params",
    "tv_lower_bound",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BlockSpec:
    """Ambient dimension n with block shape (p, q) and scale parameters (x, y).

    Block densities require p + q <= n. When built from scales, p and q are
    the integer parts of x*sqrt(n) and y*sqrt(n); when built from explicit
    dimensions, x and y are back-filled as p/sqrt(n) and q/sqrt(n).
    """

    n: int
    p: int
    q: int
    x: float
    y: float

    def __post_init__(self) -> None:
        if self.p < 1 or self.q < 1:
            raise DomainError(f"need p, q >= 1, got p={self.p}, q={self.q}")
        if self.p + self.q > self.n:
            raise DomainError(f"need p + q <= n, got {self.p}+{self.q} > {self.n}")

    @classmethod
    def from_xy(cls, n: int, x: float, y: float) -> "BlockSpec":
        if x <= 0.0 or y <= 0.0:
            raise DomainError(f"need x, y > 0, got x={x}, y={y}")
        root = math.sqrt(n)
        return cls(n=n, p=math.floor(x * root), q=math.floor(y * root), x=x, y=y)

    @classmethod
    def from_dims(cls, n: int, p: int, q: int) -> "BlockSpec":
        root = math.sqrt(n)
        return cls(n=n, p=p, q=q, x=p / root, y=q / root)

    def swapped(self) -> "BlockSpec":
        return BlockSpec(n=self.n, p=self.q, q=self.p, x=self.y, y=self.x)


@dataclass(frozen=True)
class LogDensityRatio:
    """Log of the block-to-Gaussian density ratio, split into its factors.

    ``log_const`` is the deterministic gamma-ratio factor; ``log_spectral``
    the random eigenvalue factor (-inf with ``boundary_hit`` set when an
    eigenvalue of X'X lands outside the support).
    """

    log_const: float
    log_spectral: float
    boundary_hit: bool

    @property
    def log_ratio(self) -> float:
        return self.log_const + self.log_spectral

    def abs_ratio_minus_one(self) -> float:
        """|ratio - 1| through expm1; equals 1 exactly on a boundary hit."""
        return abs(math.expm1(self.log_ratio))


@dataclass(frozen=True)
class LognormalParams:
    """Centering and limit parameters of the density ratio's lognormal law.

    ``center`` is the finite-n centering constant for the log of the
    spectral factor; ``sigma = x*y/4`` the limiting standard deviation. The
    limiting law of the log ratio is N(limit_mean_log, limit_sd_log^2) with
    limit_mean_log = -x^2 y^2 / 8 = -2 sigma^2 and limit_sd_log = sigma.
    """

    center: float
    sigma: float
    limit_mean_log: float
    limit_sd_log: float


@dataclass(frozen=True)
class TVLowerBound:
    """Quadrature value of E|e^{-2 s^2 + s xi} - 1| and its closed-form cap."""

    value: float
    upper: float


def log_wishart_const(r: float, s: int) -> float:
    """log omega(r, s) for the Wishart normalizing constant omega.

    1/omega(r, s) = pi^{s(s-1)/4} * 2^{rs/2} * prod_{j=1}^{s}
    Gamma((r-j+1)/2), defined for integer s >= 1 and real r > s - 1.
    """
    if s < 1:
        raise DomainError(f"need s >= 1, got {s}")
    if r <= s - 1:
        raise DomainError(f"need r > s - 1, got r={r}, s={s}")
    acc = s * (s - 1) / 4.0 * math.log(math.pi) + r * s / 2.0 * math.log(2.0)
    for j in range(1, s + 1):
        acc += log_gamma((r - j + 1) / 2.0)
    return -acc


def log_block_density(z, spec: BlockSpec) -> float:
    """Log density of the unscaled p x q block of a Haar orthogonal matrix.

    Requires all eigenvalues of z'z below 1; returns -inf otherwise. A
    p < q block is transposed internally (the density is the same formula
    with the roles of p and q interchanged). Zero eigenvalues are tolerated:
    they contribute nothing to log det(I - z'z), so only the upper boundary
    is excluded.
    """
    m = as_matrix(z, "z")
    if m.shape != (spec.p, spec.q):
        raise ShapeError(f"block shape {m.shape} does not match spec ({spec.p}, {spec.q})")
    p, q, n = spec.p, spec.q, spec.n
    if p < q:
        m = m.T
        p, q = q, p
    mu = sym_eigenvalues(gram(m), clamp_psd=True).eigenvalues
    if float(mu[0]) >= 1.0:
        return -math.inf
    logdet = float(np.sum(np.log1p(-mu)))
    return (
        -(p * q / 2.0) * _LOG_2PI
        + log_wishart_const(n - p, q)
        - log_wishart_const(n, q)
        + 0.5 * (n - p - q - 1) * logdet
    )


def log_const_factor_exact(spec: BlockSpec) -> float:
    """Log of the deterministic factor of the density ratio, via log-gammas.

    (pq/2) log(2/n) + sum_{j=1}^{q} [log Gamma((n-j+1)/2) -
    log Gamma((n-p-j+1)/2)]. Every gamma argument is at least 1/2 whenever
    p + q <= n (the block-spec invariant), so the whole spec domain is
    admissible.
    """
    n, p, q = spec.n, spec.p, spec.q
    acc = (p * q / 2.0) * (math.log(2.0) - math.log(n))
    for j in range(1, q + 1):
        acc += log_gamma((n - j + 1) / 2.0) - log_gamma((n - p - j + 1) / 2.0)
    return acc


def log_const_factor_asymptotic(x: float, y: float, spec: BlockSpec) -> float:
    """Closed-form large-n value of the log constant factor at scales (x, y).

    -(p^2 q + p q^2)/(4n) - xy/4 - (2x^3 y + 2x y^3 + 3x^2 y^2)/24, using
    the integer dimensions carried by ``spec``.
    """
    n, p, q = spec.n, spec.p, spec.q
    return (
        -(p * p * q + p * q * q) / (4.0 * n)
        - x * y / 4.0
        - (2.0 * x**3 * y + 2.0 * x * y**3 + 3.0 * x * x * y * y) / 24.0
    )


def log_spectral_factor(spectrum: SymSpectrum, spec: BlockSpec) -> float:
    """Log of the random factor from the eigenvalues of X'X.

    ((n-p-q-1)/2) * sum log(1 - lambda_i/n) + (1/2) * sum lambda_i when all
    eigenvalues are below n; -inf otherwise. Eigenvalues equal to zero are
    admitted (their log term vanishes).
    """
    if spectrum.dim != spec.q:
        raise ShapeError(f"spectrum dim {spectrum.dim} does not match q={spec.q}")
    lam = spectrum.eigenvalues
    n, p, q = spec.n, spec.p, spec.q
    if float(lam[0]) >= n:
        return -math.inf
    return 0.5 * (n - p - q - 1) * float(np.sum(np.log1p(-lam / n))) + 0.5 * float(
        np.sum(lam)
    )


def log_density_ratio(x_mat, spec: BlockSpec) -> LogDensityRatio:
    """Both factors of the density ratio f_n(X)/g_n(X) for one sample block.

    ``x_mat`` plays the role of an unscaled iid normal block; the scaled
    block handed to the exact density is x_mat/sqrt(n). A p < q spec is
    transposed internally so a single code path serves all shapes.
    """
    m = as_matrix(x_mat, "X")
    if m.shape != (spec.p, spec.q):
        raise ShapeError(f"block shape {m.shape} does not match spec ({spec.p}, {spec.q})")
    work_spec = spec
    if spec.p < spec.q:
        work_spec = spec.swapped()
        m = np.ascontiguousarray(m.T)
    log_k = log_const_factor_exact(work_spec)
    spectrum = sym_eigenvalues(gram(m), clamp_psd=True)
    log_l = log_spectral_factor(spectrum, work_spec)
    return LogDensityRatio(
        log_const=log_k, log_spectral=log_l, boundary_hit=not math.isfinite(log_l)
    )


def log_gaussian_density(x_mat) -> float:
    """Log density of iid standard normal entries: -(pq/2) log 2pi - tr(X'X)/2."""
    m = as_matrix(x_mat, "X")
    return -(m.size / 2.0) * _LOG_2PI - 0.5 * float(np.sum(m * m))


def lognormal_params(x: float, y: float, spec: BlockSpec) -> LognormalParams:
    """Centering constant and lognormal limit parameters at scales (x, y)."""
    if x <= 0.0 or y <= 0.0:
        raise DomainError(f"need x, y > 0, got x={x}, y={y}")
    n, p, q = spec.n, spec.p, spec.q
    center = (p * p * q + p * q * q) / (4.0 * n) + (
        3.0 * x * y + x**3 * y + x * y**3
    ) / 12.0
    sigma = x * y / 4.0
    return LognormalParams(
        center=center,
        sigma=sigma,
        limit_mean_log=-x * x * y * y / 8.0,
        limit_sd_log=sigma,
    )


def tv_lower_bound(x: float, y: float, order: int = 60) -> TVLowerBound:
    """Limiting lower bound for the block-vs-normal variation distance.

    value = E|exp(-x^2 y^2/8 + (xy/4) xi) - 1| by Gauss-Hermite quadrature
    (xi standard normal); zero when x*y = 0 and strictly inside (0, 1)
    otherwise. upper = sqrt(e^{-t/8} - 2 e^{-3t/32} + 1) with t = x^2 y^2,
    the closed-form cap from the second-moment expansion. The order-60 rule
    carries a small kink error; double the order to estimate it.
    """
    if x < 0.0 or y < 0.0:
        raise DomainError(f"need x, y >= 0, got x={x}, y={y}")
    t = (x * y) ** 2
    if t == 0.0:
        return TVLowerBound(value=0.0, upper=0.0)
    sigma = x * y / 4.0
    value = gauss_hermite_expectation(
        lambda xi: np.abs(np.expm1(-2.0 * sigma * sigma + sigma * xi)), order=order
    )
    upper = math.sqrt(max(0.0, math.exp(-t / 8.0) - 2.0 * math.exp(-3.0 * t / 32.0) + 1.0))
    return TVLowerBound(value=value, upper=upper)
