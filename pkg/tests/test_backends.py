"""Agreement between the compiled kernels and the pure-NumPy fallback."""

import numpy as np
import pytest

from haarsim import _kernels_py as kpy

compiled = pytest.importorskip(
    "haarsim._kernels", reason="compiled extension not built; fallback already covered"
)


class TestGaussianFill:
    def test_streams_match(self):
        for key, count in ((0, 1), (12345, 7), (2**63 + 11, 10_000)):
            a = compiled.fill_gaussian(key, count)
            b = kpy.fill_gaussian(key, count)
            assert a.shape == b.shape == (count,)
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_prefix_stability(self):
        long = compiled.fill_gaussian(42, 1000)
        short = compiled.fill_gaussian(42, 500)
        assert np.array_equal(long[:500], short)

    def test_repeatability(self):
        assert np.array_equal(compiled.fill_gaussian(7, 999), compiled.fill_gaussian(7, 999))


class TestJacobi:
    @pytest.mark.parametrize("dim", [1, 2, 5, 16, 64])
    def test_eigenvalues_agree(self, dim):
        rng = np.random.default_rng(dim)
        x = rng.standard_normal((dim + 3, dim))
        a = x.T @ x
        a = (a + a.T) / 2.0
        e1, s1, c1 = compiled.jacobi_eigenvalues(a.copy(), 1e-12, 100)
        e2, s2, c2 = kpy.jacobi_eigenvalues(a.copy(), 1e-12, 100)
        assert c1 and c2
        np.testing.assert_allclose(np.sort(e1), np.sort(e2), rtol=1e-12, atol=1e-12)
        ref = np.sort(np.linalg.eigvalsh(a))
        np.testing.assert_allclose(np.sort(e1), ref, rtol=1e-10, atol=1e-10)


class TestMGS:
    @pytest.mark.parametrize("shape", [(5, 5), (64, 20), (300, 120)])
    def test_orthonormalization_agrees(self, shape):
        rng = np.random.default_rng(shape[0])
        y = rng.standard_normal(shape)
        a1 = np.ascontiguousarray(y.T)
        a2 = a1.copy()
        n1 = np.empty(shape[1])
        n2 = np.empty(shape[1])
        assert compiled.mgs_rows(a1, n1, 1e-10) == -1
        assert kpy.mgs_rows(a2, n2, 1e-10) == -1
        np.testing.assert_allclose(a1, a2, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(n1, n2, rtol=1e-12)

    def test_rank_failure_index_agrees(self):
        y = np.ones((6, 3))
        a1 = np.ascontiguousarray(y.T)
        a2 = a1.copy()
        n1 = np.empty(3)
        n2 = np.empty(3)
        assert compiled.mgs_rows(a1, n1, 1e-10) == kpy.mgs_rows(a2, n2, 1e-10) == 1
