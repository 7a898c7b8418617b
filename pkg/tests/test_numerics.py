"""Tests for special functions, probability bounds, and quadrature."""

import math

import numpy as np
import pytest

from haarsim.errors import DomainError
from haarsim.numerics import (
    chi2_rate,
    chi2_ratio_tail_bound,
    coupling_tail_bound,
    euler_maclaurin_double_sum,
    gamma_ratio_bounds,
    gauss_hermite_expectation,
    ks_statistic,
    log_gamma,
    normal_tail_sandwich,
)
from haarsim.sampler import SeedSpec, gaussian_matrix, stream_id_for

# 50-digit reference evaluations (mpmath), frozen
_LOG_GAMMA_GOLDENS = (
    (0.5, 0.5723649429247000870717),
    (0.75, 0.2032809514312953714814),
    (1.0, 0.0),
    (1.5, -0.1207822376352452223455),
    (2.0, 0.0),
    (2.5, 0.2846828704729191596325),
    (3.0, 0.6931471805599453094172),
    (4.5, 2.453736570842442220504),
    (7.25, 7.052185450738539444926),
    (10.5, 13.94062521940376363316),
    (25.0, 54.78472939811231919009),
    (63.5, 198.935764929929476647),
    (100.25, 360.2845596377642349684),
    (500.0, 2605.115850361733892659),
    (2048.5, 13568.13860184260080291),
    (10000.0, 82099.71749644237727265),
    (123456.75, 1323901.561573014233847),
    (1000000.0, 12815504.56914761165998),
    (5500000.0, 79861415.73492406961798),
    (10000000.0, 151180949.3694739139401),
)


class TestLogGamma:
    @pytest.mark.parametrize("x,expected", _LOG_GAMMA_GOLDENS)
    def test_golden_values(self, x, expected):
        got = log_gamma(x)
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-13)

    def test_trivial_points(self):
        assert abs(log_gamma(1.0)) < 1e-13
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-13)

    def test_reflection_range(self):
        # recursion Gamma(x+1) = x Gamma(x) ties (0, 0.5) to the main branch
        for x in (0.05, 0.2, 0.4, 0.49):
            assert log_gamma(x + 1.0) == pytest.approx(
                log_gamma(x) + math.log(x), rel=1e-12
            )

    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            log_gamma(bad)


class TestGammaRatioBounds:
    def test_n1_part1(self):
        lo, ratio, hi = gamma_ratio_bounds(1, part=1)
        assert ratio == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-12)
        assert lo == pytest.approx(1.0 - 1.0 / 6.0)
        assert hi == 1.0

    def test_n2_part1(self):
        # Gamma(2.5) = (3/4) sqrt(pi), so ratio = (3/4) sqrt(pi) / sqrt(2)
        lo, ratio, hi = gamma_ratio_bounds(2, part=1)
        assert ratio == pytest.approx(0.75 * math.sqrt(math.pi) / math.sqrt(2.0), rel=1e-12)
        assert lo == pytest.approx(1.0 - 1.0 / 12.0)

    def test_large_n_pinch(self):
        lo, ratio, hi = gamma_ratio_bounds(1000, part=1)
        assert 0.999833 < ratio < 1.0

    @pytest.mark.parametrize("part", [1, 2])
    def test_sweep_no_violations(self, part):
        for n in range(1, 1001):
            lo, ratio, hi = gamma_ratio_bounds(n, part=part)
            assert lo < ratio < hi, f"violated at n={n}, part={part}"

    def test_part2_rate(self):
        for n in (1, 2, 3, 10, 101, 1000):
            _, ratio, _ = gamma_ratio_bounds(n, part=2)
            assert abs(ratio - 1.0) < 3.0 / (5.0 * n)


class TestNormalTailSandwich:
    def test_x1_values(self):
        ts = normal_tail_sandwich(1.0)
        assert ts.lower == pytest.approx(0.120985, abs=5e-7)
        assert ts.exact == pytest.approx(0.158655, abs=5e-7)
        assert ts.upper == pytest.approx(0.241971, abs=5e-7)

    def test_x3_sandwiched(self):
        ts = normal_tail_sandwich(3.0)
        assert ts.exact == pytest.approx(0.0013499, rel=1e-4)
        assert ts.lower <= ts.exact <= ts.upper

    def test_log_grid_sandwich(self):
        for x in np.logspace(math.log10(0.01), math.log10(8.0), 100):
            ts = normal_tail_sandwich(float(x))
            assert ts.lower <= ts.exact <= ts.upper

    def test_envelope_ratio_shrinks(self):
        # upper/lower = (1+x^2)/x^2, monotone down toward 1
        xs = np.linspace(0.5, 8.0, 40)
        ratios = []
        for x in xs:
            ts = normal_tail_sandwich(float(x))
            ratios.append(ts.upper / ts.lower)
            assert ts.upper / ts.lower == pytest.approx(1.0 + 1.0 / x**2, rel=1e-12)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            normal_tail_sandwich(0.0)


class TestChi2Rate:
    def test_zero_at_one(self):
        assert chi2_rate(1.0) == 0.0

    def test_half(self):
        assert chi2_rate(0.5) == pytest.approx((math.log(4.0) - 1.0) / 4.0, rel=1e-12)

    @pytest.mark.parametrize("x", [-1.0, 0.0, -1e-12])
    def test_infinite_sentinel(self, x):
        assert chi2_rate(x) == math.inf

    def test_convex_with_unique_minimum(self):
        xs = np.linspace(0.05, 6.0, 200)
        vals = np.array([chi2_rate(float(x)) for x in xs])
        second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
        assert np.all(second > 0)  # discrete convexity
        assert np.all(vals[xs != 1.0] > 0.0)
        # nonincreasing left of 1, nondecreasing right of 1
        left = vals[xs < 1.0]
        right = vals[xs > 1.0]
        assert np.all(np.diff(left) < 0)
        assert np.all(np.diff(right) > 0)


class TestChi2RatioTailBound:
    def test_values(self):
        assert chi2_ratio_tail_bound(1000, 500, 2.0) == pytest.approx(
            6.0 * math.exp(-500**4 * 4.0 / (48.0 * 1000**3)), rel=1e-12
        )
        assert chi2_ratio_tail_bound(1000, 500, 2.0) == pytest.approx(0.03283, abs=2e-5)

    def test_vacuous_value_raw(self):
        # bound above one is reported raw, never clamped
        assert chi2_ratio_tail_bound(1000, 100, 1.0) == pytest.approx(5.9875, abs=2e-4)

    def test_preconditions(self):
        with pytest.raises(DomainError):
            chi2_ratio_tail_bound(1000, 600, 1.0)  # m > n/2
        with pytest.raises(DomainError):
            chi2_ratio_tail_bound(1000, 500, 2.1)  # x > n/m
        with pytest.raises(DomainError):
            chi2_ratio_tail_bound(1000, 0, 1.0)

    def test_empirical_frequency_below_bound(self):
        # n=200, m=100: MC frequency never beats bound + 3 SE on the x grid
        n, m, N = 200, 100, 4000
        devs = np.empty(N)
        for rep in range(N):
            z = gaussian_matrix(n, 1, SeedSpec(5, stream_id_for("chi2-freq", rep)))[:, 0]
            sq = z * z
            devs[rep] = abs(sq.sum() / sq[:m].sum() - n / m)
        for x in (0.5, 1.0, 1.5, 2.0):
            freq = float(np.mean(devs >= x))
            se = math.sqrt(max(freq * (1 - freq), 1.0 / N) / N)
            assert freq <= chi2_ratio_tail_bound(n, m, x) + 3.0 * se


class TestCouplingTailBound:
    def test_reference_value(self):
        res = coupling_tail_bound(10_000, 100, 0.2, 6.0, 3.0)
        assert res.threshold == pytest.approx(7.2)
        assert res.bound == pytest.approx(7.6e-3, rel=0.02)

    def test_large_t_kills_second_summand(self):
        prev = None
        for t in (3.0, 10.0, 30.0, 100.0):
            res = coupling_tail_bound(10_000, 100, 0.2, 6.0, t)
            if prev is not None:
                assert res.bound <= prev + 1e-30
            prev = res.bound
        # with both Gaussian and power terms negligible, only 4m e^{-nr^2/16} is left
        res = coupling_tail_bound(10_000, 100, 0.2, 60.0, 1e6)
        assert res.bound == pytest.approx(400 * math.exp(-25.0), rel=1e-6)

    def test_preconditions(self):
        with pytest.raises(DomainError):
            coupling_tail_bound(10_000, 2000, 0.2, 6.0, 3.0)  # m > (r/2) n
        with pytest.raises(DomainError):
            coupling_tail_bound(10_000, 100, 0.3, 6.0, 3.0)  # r out of range
        with pytest.raises(DomainError):
            coupling_tail_bound(10_000, 100, 0.2, -1.0, 3.0)


class TestGaussHermite:
    def test_normalization(self):
        for order in (2, 10, 60):
            assert gauss_hermite_expectation(lambda z: np.ones_like(z), order) == pytest.approx(1.0)

    def test_second_moment(self):
        assert gauss_hermite_expectation(lambda z: z * z, order=2) == pytest.approx(1.0, rel=1e-12)
        assert gauss_hermite_expectation(lambda z: z * z, order=60) == pytest.approx(1.0, rel=1e-12)

    def test_lognormal_mean_is_one(self):
        sigma = 0.25
        val = gauss_hermite_expectation(
            lambda z: np.exp(-0.5 * sigma * sigma + sigma * z), order=60
        )
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_order_domain(self):
        with pytest.raises(DomainError):
            gauss_hermite_expectation(lambda z: z, order=1)


class TestEulerMaclaurinDoubleSum:
    @staticmethod
    def _direct_sum(f, n, i1, i2, j1, j2):
        ss = np.arange(i1, i2 + 1) / n
        tt = np.arange(j1, j2 + 1) / n
        S, T = np.meshgrid(ss, tt, indexing="ij")
        return float(np.sum(f(S, T)))

    def test_constant_exact(self):
        f = lambda s, t: 3.0 + 0.0 * s
        zero = lambda s, t: 0.0 * s
        approx, budget = euler_maclaurin_double_sum(f, zero, zero, 50, 2, 11, 3, 9, 0.0)
        assert budget == 0.0
        assert approx == pytest.approx(10 * 7 * 3.0, abs=1e-9)

    def test_linear_exact(self):
        f = lambda s, t: 2.0 * s - 0.5 * t + 1.0
        fs = lambda s, t: 2.0 + 0.0 * s
        ft = lambda s, t: -0.5 + 0.0 * s
        approx, budget = euler_maclaurin_double_sum(f, fs, ft, 40, 1, 12, 0, 7, 0.0)
        direct = self._direct_sum(f, 40, 1, 12, 0, 7)
        assert budget == 0.0
        assert approx == pytest.approx(direct, abs=1e-8)

    @pytest.mark.parametrize("n", [100, 400])
    def test_log_family_within_budget(self, n):
        # the grid of log(1 - 2s - t) over i in [1, k], j in [0, q-1]
        k = q = int(math.sqrt(n) / 2) + 5
        f = lambda s, t: np.log(1.0 - 2.0 * s - t)
        fs = lambda s, t: -2.0 / (1.0 - 2.0 * s - t)
        ft = lambda s, t: -1.0 / (1.0 - 2.0 * s - t)
        worst = 1.0 - 2.0 * (k + 1) / n - q / n
        M = 4.0 / worst**2
        approx, budget = euler_maclaurin_double_sum(f, fs, ft, n, 1, k, 0, q - 1, M)
        direct = self._direct_sum(f, n, 1, k, 0, q - 1)
        assert abs(approx - direct) <= budget

    def test_precondition(self):
        f = lambda s, t: 0.0 * s
        with pytest.raises(DomainError):
            euler_maclaurin_double_sum(f, f, f, 10, 5, 5, 0, 3, 1.0)


class TestKSStatistic:
    def test_single_point_uniform(self):
        res = ks_statistic([0.5], lambda z: np.clip(z, 0.0, 1.0))
        assert res.statistic == pytest.approx(0.5)
        assert res.threshold_5pct == pytest.approx(1.36)

    def test_quantile_construction(self):
        n = 200
        sample = np.arange(1, n + 1) / (n + 1.0)
        res = ks_statistic(sample, lambda z: np.clip(z, 0.0, 1.0))
        assert res.statistic <= 1.0 / (n + 1) + 1e-12 + 1.0 / n

    def test_normal_self_consistency(self):
        # a correct sampler should beat the 5% threshold most of the time
        from scipy.special import ndtr

        hits = 0
        batches = 10
        for b in range(batches):
            z = gaussian_matrix(10_000, 1, SeedSpec(17, stream_id_for("ks-self", b)))[:, 0]
            res = ks_statistic(z, ndtr)
            hits += res.statistic <= res.threshold_5pct
        assert hits >= int(0.95 * batches)

    def test_empty_sample(self):
        with pytest.raises(DomainError):
            ks_statistic([], lambda z: z)
