import sys
import os
import math
import pytest
import numpy as np

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from logic.bounds import (
    BoundValue,
    RemezConfig,
    bound_cg,
    bound_fov,
    bound_intermediate,
    bound_main,
    bound_rational,
    bound_spectrum,
    effective_interval,
)
from logic.errors import ArgumentError, DomainError, PreconditionError
from logic.krylov import ErrorSplit, lanczos_run
from logic.linalg import SpectralMatrix
from logic.stieltjes import KernelEvaluator, make_stieltjes


class TestMainBounds:
    def test_factors(self):
        """测试：κ = 100 时 main_kappa 的系数是 10001，main_beta 按 β·λmax/λmin² 算"""
        beta, kappa = bound_main(25.0, 1.0, 100.0, 1e-3)
        assert kappa.factor == 10001.0
        assert kappa.value == pytest.approx(10.001)
        assert beta.factor == pytest.approx(1.0 + 25.0 * 100.0)
        assert beta.holds_for(beta.value)

    def test_breakdown_factor_is_one(self):
        """测试：β_{m+1} = 0 时 main_beta 的系数是 1"""
        beta, _ = bound_main(0.0, 1.0, 100.0, 0.5)
        assert beta.factor == 1.0

    def test_lower_bound_positive(self):
        """测试：λ_lo ≤ 0 时报 PreconditionError"""
        with pytest.raises(PreconditionError):
            bound_main(1.0, 0.0, 100.0, 1e-3)

    def test_negative_value_rejected(self):
        """测试：界的值不能为负或 NaN"""
        with pytest.raises(ArgumentError):
            BoundValue("x", 1.0, -1.0)
        with pytest.raises(ArgumentError):
            BoundValue("x", 1.0, math.nan)


class TestIntermediate:
    def test_explicit_split(self):
        """测试：给定分解时 ratio 界 = (1 + ‖head‖/‖tail‖)·err_opt"""
        A = SpectralMatrix.diagonal(np.arange(1.0, 21.0))
        b = np.ones(20) / np.sqrt(20.0)
        L = lanczos_run(A, b, 20)
        K = KernelEvaluator.from_lanczos(L, 4, (1.0, 20.0))
        split = ErrorSplit(head=np.array([3.0, 4.0]), tail=np.array([5.0]))
        f = make_stieltjes("inv_power", alpha=0.5)
        ratio, delta = bound_intermediate(K, f, 0.1, 20.0, 2.0, split=split)
        assert ratio.value == pytest.approx(4.0)
        assert delta.factor == pytest.approx(1.0 + K.beta_next * 0.1 * 20.0)

    def test_needs_positive_err_opt(self):
        """测试：err_opt = 0（精度下限或 m = M）时不计算中间界"""
        with pytest.raises(ArgumentError):
            bound_intermediate(None, None, 1.0, 1.0, 0.0)


class TestComparisonBounds:
    def test_fov_is_twice_minimax(self):
        """测试：FOV 界是区间极小极大误差的 2 倍"""
        f = lambda z: 1.0 / np.sqrt(z)  # noqa: E731
        b = bound_fov(f, 1.0, 100.0, 1, RemezConfig(grid_points=400))
        assert b.factor == 2.0
        assert b.inputs["degree"] == 0
        assert b.value == pytest.approx(2.0 * 0.45, rel=1e-6)

    def test_fov_single_point(self):
        """测试：区间退化成一个点时误差为 0"""
        b = bound_fov(np.sqrt, 4.0, 4.0, 2)
        assert b.value == 0.0

    def test_spectrum_inv_sqrt_m2(self):
        """测试：m = 2 时谱点集界 = 3κ/√(2π)·0.45（A1 的 z^{-1/2}，零次逼近）"""
        eigs = np.arange(1.0, 101.0)
        b = bound_spectrum("inv_sqrt", eigs, 100.0, 2)
        assert b.inputs["degree"] == 0
        assert b.value == pytest.approx(300.0 / math.sqrt(2.0 * math.pi) * 0.45, rel=1e-12)

    def test_spectrum_sqrt_includes_zero(self):
        """测试：√z 的点集加入 0，次数为 ⌊m/2⌋"""
        eigs = np.arange(1.0, 101.0)
        b = bound_spectrum("sqrt", eigs, 100.0, 1)
        assert b.inputs["degree"] == 0
        # {0, 1..100} 上 √z 的最佳常数误差是 (10 − 0)/2
        assert b.value == pytest.approx(3.0 * 100.0 ** 2 * 5.0, rel=1e-12)

    def test_spectrum_unknown_kind(self):
        """测试：只支持 inv_sqrt / sqrt"""
        with pytest.raises(ArgumentError):
            bound_spectrum("log", [1.0, 2.0], 2.0, 4)
        with pytest.raises(ArgumentError):
            bound_spectrum("inv_sqrt", [1.0, 2.0], 2.0, 1)

    def test_cg(self):
        """测试：κ = 100 时 CG 界的系数为 10"""
        b = bound_cg(100.0, 1e-4)
        assert b.factor == 10.0
        assert b.value == pytest.approx(1e-3)


class TestRationalBound:
    def test_single_pole(self):
        """测试：一个极点 z_1 = −1，[1, 100] 上 κ = 101/2，err_opt 取 m 处的值"""
        b = bound_rational([-1.0], 1.0, 100.0, lambda k: 2.0 ** -k, 3)
        assert b.factor == pytest.approx(101.0 / 2.0)
        assert b.inputs["index"] == 3
        assert b.value == pytest.approx(101.0 / 2.0 / 8.0)

    def test_needs_enough_iterations(self):
        """测试：m < max(k, ℓ−1) 时不适用"""
        with pytest.raises(ArgumentError):
            bound_rational([-1.0, -2.0, -3.0], 1.0, 100.0, lambda k: 1.0, 1)
        with pytest.raises(ArgumentError):
            bound_rational([-1.0, -2.0], 1.0, 100.0, lambda k: 1.0, 1, numerator_degree=2)

    def test_pole_inside_interval(self):
        """测试：极点落在谱区间内时报 DomainError"""
        with pytest.raises(DomainError):
            bound_rational([5.0], 1.0, 100.0, lambda k: 1.0, 2)

    def test_overflow_gives_inf(self):
        """测试：系数乘积溢出时记为 inf 而不是报错"""
        poles = -np.linspace(1e-12, 1e-11, 40)
        b = bound_rational(poles, 1.0, 1e12, lambda k: 1e-3, 45)
        assert math.isinf(b.factor)

    def test_zero_error(self):
        """测试：err_opt = 0 时界为 0"""
        b = bound_rational([-1.0], 1.0, 100.0, lambda k: 0.0, 2)
        assert b.value == 0.0


class TestEffectiveInterval:
    def test_supported_vector(self):
        """测试：b 只含第 26..75 个特征向量时有效区间是 [26, 75]"""
        lam = np.arange(1.0, 101.0)
        c = np.zeros(100)
        c[25:75] = 1.0
        assert effective_interval(c, lam) == (26.0, 75.0)

    def test_drop_tolerance(self):
        """测试：低于 drop_tol 的分量不算"""
        lam = np.arange(1.0, 6.0)
        c = np.array([1e-20, 1.0, 1.0, 1.0, 1e-20])
        assert effective_interval(c, lam, drop_tol=1e-16) == (2.0, 4.0)

    def test_empty_support(self):
        """测试：没有分量超过阈值时报错"""
        with pytest.raises(ArgumentError):
            effective_interval(np.zeros(3), np.arange(1.0, 4.0))
