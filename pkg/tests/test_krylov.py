import sys
import os
import pytest
import numpy as np

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from logic.errors import ArgumentError, InvariantViolation, PreconditionError
from logic.krylov import (
    check_lanczos_relation,
    error_split,
    lanczos_approximation,
    lanczos_run,
    optimal_approximation,
    trailing_block,
)
from logic.linalg import SpectralMatrix, spectral_apply
from logic.stieltjes import make_stieltjes


@pytest.fixture(scope="module")
def a1_run():
    A = SpectralMatrix.diagonal(np.arange(1.0, 101.0))
    b = np.random.default_rng(42).standard_normal(A.n)
    b /= np.linalg.norm(b)
    return A, b, lanczos_run(A, b, A.n)


@pytest.fixture(scope="module")
def inv_sqrt():
    return make_stieltjes("inv_power", alpha=0.5)


class TestLanczosRun:
    def test_full_run_reaches_n(self, a1_run):
        """测试：一般向量下 Lanczos 跑满 n 步，M = n"""
        A, b, L = a1_run
        assert L.steps == A.n
        assert L.M == A.n
        assert L.invariance_index in (None, A.n)

    def test_relation_holds(self, a1_run):
        """测试：正交性和 Lanczos 关系都在 1e-10 以内"""
        A, b, L = a1_run
        for m in (5, 40, A.n):
            stats = check_lanczos_relation(A, L, m)
            assert stats["orthogonality"] <= 1e-10

    def test_betas_positive_before_breakdown(self, a1_run):
        """测试：β_{j+1} > 0，且第一列就是 b"""
        A, b, L = a1_run
        assert np.all(L.betas[:-1] > 0)
        assert np.allclose(L.basis[:, 0], b)

    def test_non_unit_vector_rejected(self):
        """测试：b 不是单位向量时报 PreconditionError"""
        A = SpectralMatrix.diagonal([1.0, 2.0, 3.0])
        with pytest.raises(PreconditionError):
            lanczos_run(A, np.ones(3), 2)

    def test_m_max_out_of_range(self):
        """测试：m_max 超过维数时报错"""
        A = SpectralMatrix.diagonal([1.0, 2.0])
        with pytest.raises(ArgumentError):
            lanczos_run(A, np.array([1.0, 0.0]), 3)

    def test_lucky_breakdown(self, inv_sqrt):
        """测试：b 只含 5 个特征向量时 M = 5，m = 5 的近似就是精确解"""
        A = SpectralMatrix.diagonal(np.arange(1.0, 101.0))
        b = np.zeros(A.n)
        b[[9, 29, 49, 69, 89]] = 1.0
        b /= np.linalg.norm(b)
        L = lanczos_run(A, b, A.n)
        assert L.M == 5
        assert L.beta_next(5) <= L.breakdown_tol
        assert L.next_vector is None
        exact = spectral_apply(A, inv_sqrt.closed_form, b)
        assert np.linalg.norm(exact - lanczos_approximation(L, inv_sqrt, 5)) <= 1e-9

    def test_stored_range_checked(self, a1_run):
        """测试：m 超出已存步数时报错"""
        _, _, L = a1_run
        with pytest.raises(ArgumentError):
            L.T(0)
        with pytest.raises(ArgumentError):
            L.beta_next(L.steps + 1)


class TestApproximations:
    def test_finite_termination(self, a1_run, inv_sqrt):
        """测试：m = n 时 Lanczos 近似等于 f(A)b"""
        A, b, L = a1_run
        exact = spectral_apply(A, inv_sqrt.closed_form, b)
        assert np.linalg.norm(lanczos_approximation(L, inv_sqrt, A.n) - exact) <= 1e-9

    def test_optimal_error_monotone(self, a1_run, inv_sqrt):
        """测试：最优误差随 m 不增"""
        A, b, L = a1_run
        exact = spectral_apply(A, inv_sqrt.closed_form, b)
        errs = [optimal_approximation(L, exact, m)[1] for m in range(1, 40)]
        assert all(b_ <= a + 1e-14 for a, b_ in zip(errs, errs[1:]))

    def test_lanczos_not_better_than_optimal(self, a1_run, inv_sqrt):
        """测试：Lanczos 误差不小于最优误差"""
        A, b, L = a1_run
        exact = spectral_apply(A, inv_sqrt.closed_form, b)
        for m in (3, 10, 25):
            err_lan = np.linalg.norm(exact - lanczos_approximation(L, inv_sqrt, m))
            err_opt = optimal_approximation(L, exact, m)[1]
            assert err_opt <= err_lan * (1 + 1e-10)

    def test_wrong_exact_shape(self, a1_run):
        """测试：精确解维数不对时报错"""
        _, _, L = a1_run
        with pytest.raises(ArgumentError):
            optimal_approximation(L, np.ones(3), 2)


class TestErrorSplit:
    @pytest.mark.parametrize("times_z", [False, True])
    def test_pythagorean(self, a1_run, times_z):
        """测试：‖head‖² + ‖tail‖² = err_lan²，‖tail‖ = err_opt"""
        A, b, L = a1_run
        f = make_stieltjes("inv_power", "times_z" if times_z else "plain", alpha=0.5)
        exact = spectral_apply(A, f.closed_form, b)
        scale = np.linalg.norm(exact)
        for m in (2, 8, 20):
            split = error_split(L, f, m)
            err_lan = np.linalg.norm(exact - lanczos_approximation(L, f, m))
            err_opt = optimal_approximation(L, exact, m)[1]
            assert np.hypot(split.head_norm, split.tail_norm) == pytest.approx(err_lan, rel=1e-8, abs=1e-12 * scale)
            assert split.tail_norm == pytest.approx(err_opt, rel=1e-8, abs=1e-12 * scale)

    def test_needs_m_below_M(self, a1_run, inv_sqrt):
        """测试：m ≥ M 时误差分解无意义"""
        A, _, L = a1_run
        with pytest.raises(ArgumentError):
            error_split(L, inv_sqrt, A.n)

    def test_needs_invariance_index(self, inv_sqrt):
        """测试：没跑到不变指标的分解不能做误差分解"""
        A = SpectralMatrix.diagonal(np.arange(1.0, 21.0))
        b = np.ones(20) / np.sqrt(20)
        L = lanczos_run(A, b, 10)
        with pytest.raises(ArgumentError):
            error_split(L, inv_sqrt, 5)

    def test_trailing_block_spectrum(self, a1_run):
        """测试：S 的谱落在 [λmin, λmax] 内；区间给窄了就报不变量错误"""
        A, _, L = a1_run
        S = trailing_block(L, 10, (A.lam_min, A.lam_max))
        assert S.m == A.n - 10
        with pytest.raises(InvariantViolation):
            trailing_block(L, 10, (40.0, 60.0))
