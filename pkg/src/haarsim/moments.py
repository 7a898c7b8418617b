"""Trace moments of Gram matrices of iid normal blocks.

Exact low-order identities, closed-form large-dimension values of the
moments and of the variance/covariance of the first two trace powers, and a
Monte Carlo estimator used as the independent oracle for all of them.
Binomial coefficients are evaluated in exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from haarsim.errors import DomainError
from haarsim.linalg import gram, trace_power
from haarsim.sampler import SeedSpec, gaussian_matrix, stream_id_for

__all__ = [
    "MomentReport",
    "TraceMomentsMC",
    "expected_trace_pow_exact",
    "expected_trace_pow_asymptotic",
    "trace_pow_lln_limit",
    "var_trace2_asymptotic",
    "cov_trace12_asymptotic",
    "mc_trace_moments",
]


@dataclass(frozen=True)
class MomentReport:
    """Monte Carlo estimate of E tr((X'X)^k) next to its reference values."""

    p: int
    q: int
    k: int
    exact: float | None
    asymptotic: float
    mc_mean: float
    mc_se: float
    N: int


@dataclass(frozen=True)
class TraceMomentsMC:
    """Per-power reports plus spread statistics of the first two powers."""

    reports: tuple[MomentReport, ...]
    var_tr2: float
    var_tr2_se: float
    cov_tr12: float
    cov_tr12_se: float


def expected_trace_pow_exact(p: int, q: int, k: int) -> float:
    """Exact E tr((X'X)^k): pq for k=1, pq(p+q+1) for k=2."""
    if k == 1:
        return float(p * q)
    if k == 2:
        return float(p * q * (p + q + 1))
    raise DomainError(f"exact values are available only for k in {{1, 2}}, got {k}")


def expected_trace_pow_asymptotic(p: int, q: int, k: int) -> float:
    """Leading-order E tr((X'X)^k) as both dimensions grow.

    p^k q * sum_{r=0}^{k-1} (q/p)^r / (r+1) * C(k, r) * C(k-1, r), with the
    r-sum carried out in exact rational arithmetic.
    """
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    total = 0.0
    for r in range(k):
        coef = math.comb(k, r) * math.comb(k - 1, r)
        total += coef * p ** (k - r) * q ** (r + 1) / (r + 1)
    return float(total)


def trace_pow_lln_limit(eta: float, k: int) -> float:
    """In-probability limit of tr((X'X)^k)/q^{k+1} when p/q -> eta.

    sum_{r=0}^{k-1} eta^{k-r} / (r+1) * C(k, r) * C(k-1, r); the Catalan
    numbers at eta = 1.
    """
    if eta <= 0.0:
        raise DomainError(f"need eta > 0, got {eta}")
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    return float(
        sum(eta ** (k - r) / (r + 1) * math.comb(k, r) * math.comb(k - 1, r) for r in range(k))
    )


def var_trace2_asymptotic(p: int, q: int) -> float:
    """Leading-order Var tr((X'X)^2): p^2 q^2 + 8 p q (p+q)^2."""
    if p < 1 or q < 1:
        raise DomainError(f"need p, q >= 1, got p={p}, q={q}")
    return float(p * p * q * q + 8 * p * q * (p + q) ** 2)


def cov_trace12_asymptotic(p: int, q: int) -> float:
    """Leading-order Cov(tr(X'X), tr((X'X)^2)): 4 p q (p+q)."""
    if p < 1 or q < 1:
        raise DomainError(f"need p, q >= 1, got p={p}, q={q}")
    return float(4 * p * q * (p + q))


def mc_trace_moments(p: int, q: int, k_max: int, N: int, seed: SeedSpec) -> TraceMomentsMC:
    """Monte Carlo means of tr((X'X)^k), k = 1..k_max, over N Gaussian blocks.

    Also reports the unbiased sample variance of tr((X'X)^2) and the sample
    covariance of the first two powers, each with a fourth-moment standard
    error. Replicate r draws from a derived stream, so the result does not
    depend on evaluation order.
    """
    if k_max > 8:
        raise DomainError(f"need k_max <= 8, got {k_max}")
    if N < 100:
        raise DomainError(f"need N >= 100, got {N}")
    label = f"mc-trace-moments[p={p},q={q},seed={seed.master_seed},s={seed.stream_id}]"
    traces = np.empty((N, k_max), dtype=np.float64)
    for rep in range(N):
        rep_seed = SeedSpec(seed.master_seed, stream_id_for(label, rep))
        g = gram(gaussian_matrix(p, q, rep_seed))
        for k in range(1, k_max + 1):
            traces[rep, k - 1] = trace_power(g, k)

    reports = []
    for k in range(1, k_max + 1):
        col = traces[:, k - 1]
        reports.append(
            MomentReport(
                p=p,
                q=q,
                k=k,
                exact=expected_trace_pow_exact(p, q, k) if k <= 2 else None,
                asymptotic=expected_trace_pow_asymptotic(p, q, k),
                mc_mean=float(np.mean(col)),
                mc_se=float(np.std(col, ddof=1) / math.sqrt(N)),
                N=N,
            )
        )

    var_tr2 = var_tr2_se = cov = cov_se = math.nan
    if k_max >= 2:
        t2 = traces[:, 1]
        c2 = t2 - t2.mean()
        var_tr2 = float(np.sum(c2 * c2) / (N - 1))
        # SE of a sample variance from the fourth central moment
        m4 = float(np.mean(c2**4))
        var_of_var = (m4 - (N - 3) / (N - 1) * var_tr2**2) / N
        var_tr2_se = math.sqrt(max(0.0, var_of_var))
        t1 = traces[:, 0]
        c1 = t1 - t1.mean()
        cov = float(np.sum(c1 * c2) / (N - 1))
        m22 = float(np.mean((c1 * c2) ** 2))
        cov_se = math.sqrt(max(0.0, (m22 - cov * cov) / N))
    return TraceMomentsMC(
        reports=tuple(reports),
        var_tr2=var_tr2,
        var_tr2_se=var_tr2_se,
        cov_tr12=cov,
        cov_tr12_se=cov_se,
    )
