import sys
import os
import math
import pytest
import numpy as np
from unittest.mock import patch
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from logic.errors import AccuracyError, ArgumentError, LuckyBreakdownError
from logic.krylov import error_split, lanczos_run
from logic.linalg import SpectralMatrix, SymTridiagonal
from logic.stieltjes import (
    KernelEvaluator,
    _RuleBuilder,
    build_quadrature_rule,
    check_complete_monotonicity,
    check_kernel_structure,
    check_sign_and_monotonicity,
    epsilon_closed_form,
    evaluate_by_quadrature,
    f1_apply,
    f2_apply,
    kernel_scalars,
    kernels_at,
    make_stieltjes,
    split_by_quadrature,
)


@pytest.fixture(scope="module")
def geometric():
    """30×30 几何分布谱上的完整 Lanczos 分解"""
    A = SpectralMatrix.diagonal(np.geomspace(1.0, 100.0, 30))
    b = np.random.default_rng(5).standard_normal(A.n)
    b /= np.linalg.norm(b)
    return A, lanczos_run(A, b, A.n)


class TestStieltjesFunction:
    def test_alpha_range(self):
        """测试：inv_power 的 α 必须在 (0, 1) 内"""
        with pytest.raises(ArgumentError):
            make_stieltjes("inv_power", alpha=1.0)
        with pytest.raises(ArgumentError):
            make_stieltjes("inv_power")

    def test_unknown_kind(self):
        """测试：未知类型报错"""
        with pytest.raises(ArgumentError):
            make_stieltjes("exp")

    def test_partial_fraction_validation(self):
        """测试：部分分式要求正权重、非负且互不相同的极点"""
        with pytest.raises(ArgumentError):
            make_stieltjes("partial_fraction", weights=[-1.0], poles=[1.0])
        with pytest.raises(ArgumentError):
            make_stieltjes("partial_fraction", weights=[1.0, 1.0], poles=[2.0, 2.0])
        with pytest.raises(ArgumentError):
            make_stieltjes("partial_fraction", weights=[1.0], poles=[-1.0])

    def test_partial_fraction_sorted(self):
        """测试：极点按升序存放，闭式与手算一致"""
        f = make_stieltjes("partial_fraction", weights=[2.0, 1.0], poles=[3.0, 1.0])
        assert f.poles.tolist() == [1.0, 3.0]
        assert f(1.0) == pytest.approx(1.0 / 2.0 + 2.0 / 4.0)

    def test_times_z_closed_form(self):
        """测试：√z = z·z^{-1/2}，log(1+z) = z·log(1+z)/z"""
        sqrt = make_stieltjes("inv_power", "times_z", alpha=0.5)
        log = make_stieltjes("log1p_over_z", "times_z")
        z = np.array([0.5, 4.0, 99.0])
        assert np.allclose(sqrt(z), np.sqrt(z), rtol=1e-14)
        assert np.allclose(log(z), np.log1p(z), rtol=1e-14)

    def test_density_of_discrete_measure(self):
        """测试：离散测度没有密度"""
        f = make_stieltjes("partial_fraction", weights=[1.0], poles=[0.0])
        with pytest.raises(ArgumentError):
            f.density(1.0)

    def test_custom_kind_is_checked(self):
        """测试：自定义密度和闭式不一致时构造失败"""
        with pytest.raises(ArgumentError):
            make_stieltjes(
                "custom",
                density=lambda t: np.where(t >= 1.0, 1.0 / t, 0.0),
                closed_form=lambda z: 1.0 / z,
                support=(1.0, math.inf),
            )

    def test_custom_kind_accepted(self):
        """测试：与 log1p_over_z 相同的自定义函数能通过一致性检查"""
        f = make_stieltjes(
            "custom",
            density=lambda t: 1.0 / t,
            closed_form=lambda z: np.log1p(z) / z,
            support=(1.0, math.inf),
        )
        assert f(2.0) == pytest.approx(math.log(3.0) / 2.0)


class TestQuadrature:
    @pytest.mark.parametrize("kind,kw", [("inv_power", {"alpha": 0.5}), ("inv_power", {"alpha": 0.25}), ("log1p_over_z", {})])
    def test_rule_matches_closed_form(self, kind, kw):
        """测试：区间内的探针点上积分与闭式相对误差 ≤ 1e-10"""
        f = make_stieltjes(kind, **kw)
        rule = build_quadrature_rule(f, 1.0, 100.0)
        for z in np.geomspace(1.0, 100.0, 9):
            quad = float(rule.integrate(1.0 / (z + rule.nodes)))
            assert quad == pytest.approx(float(f(z)), rel=1e-10)

    def test_evaluate_times_z(self):
        """测试：times_z 时积分结果乘上 z"""
        f = make_stieltjes("inv_power", "times_z", alpha=0.5)
        assert evaluate_by_quadrature(f, 9.0) == pytest.approx(3.0, rel=1e-10)

    def test_discrete_rule_is_exact(self):
        """测试：离散测度的积分规则就是它的原子"""
        f = make_stieltjes("partial_fraction", weights=[1.0, 0.5], poles=[0.0, 2.0])
        rule = build_quadrature_rule(f, 1.0, 10.0)
        assert rule.size == 2
        assert rule.evaluations == 0

    def test_budget_exhausted(self):
        """测试：评估预算用完时报 AccuracyError"""
        f = make_stieltjes("log1p_over_z")
        with pytest.raises(AccuracyError):
            build_quadrature_rule(f, 1.0, 100.0, budget=40)

    def test_power_panels_charge_budget(self):
        """测试：inv_power 的端点幂律面板也计入评估预算"""
        f = make_stieltjes("inv_power", alpha=0.5)
        with patch.object(_RuleBuilder, "_log_panel", side_effect=AssertionError("log panels reached")):
            with pytest.raises(AccuracyError):
                build_quadrature_rule(f, 1.0, 100.0, budget=30)

    def test_bad_interval(self):
        """测试：区间必须满足 0 < lo ≤ hi"""
        f = make_stieltjes("inv_power", alpha=0.5)
        with pytest.raises(ArgumentError):
            build_quadrature_rule(f, 0.0, 1.0)
        with pytest.raises(ArgumentError):
            evaluate_by_quadrature(f, -1.0)

    @patch('logic.stieltjes.load_settings')
    def test_tolerance_from_settings(self, mock_settings):
        """测试：不传 rel_tol 时取 settings 里的默认值"""
        mock_settings.return_value.quad_rel_tol = 1e-6
        mock_settings.return_value.quad_budget = 10_000
        rule = build_quadrature_rule(make_stieltjes("inv_power", alpha=0.5, validate=False), 1.0, 100.0)
        assert rule.rel_tol == 1e-6


class TestKernels:
    def test_epsilon_closed_form(self, geometric):
        """测试：ε(t) 的乘积公式与预解式结果一致"""
        A, L = geometric
        for m in (1, 4, 9):
            K = KernelEvaluator.from_lanczos(L, m, (A.lam_min, A.lam_max))
            t = np.array([0.0, 1.0, 10.0, 1e3])
            _, _, eps, _ = kernels_at(K, t)
            closed = epsilon_closed_form(L.T(m).offdiag, K.ritz_T.values, t)
            assert np.allclose(closed, eps, rtol=1e-10, atol=0)

    def test_epsilon_length_check(self):
        """测试：β 个数必须比 Ritz 值少一个"""
        with pytest.raises(ArgumentError):
            epsilon_closed_form([1.0, 2.0], [1.0, 2.0], 0.0)

    def test_det_x_negative_and_rayleigh(self, geometric):
        """测试：det X(t) < 0，γ、δ 落在 Rayleigh 界内"""
        A, L = geometric
        K = KernelEvaluator.from_lanczos(L, 6, (A.lam_min, A.lam_max))
        t = np.geomspace(1e-3, 1e5, 40)
        gamma, delta, _, detx = kernels_at(K, t)
        assert np.all(detx < 0)
        assert np.all(gamma <= 1.0 / (A.lam_min + t) * (1 + 1e-10))
        assert np.all(delta >= 1.0 / (A.lam_max + t) * (1 - 1e-10))

    def test_negative_t_rejected(self, geometric):
        """测试：核函数只在 t ≥ 0 上定义"""
        A, L = geometric
        K = KernelEvaluator.from_lanczos(L, 3)
        with pytest.raises(ArgumentError):
            kernels_at(K, -1.0)

    def test_breakdown_kernels_undefined(self):
        """测试：β_{m+1} = 0 时核函数无定义"""
        K = KernelEvaluator(SymTridiagonal([2.0, 3.0], [0.5]), SymTridiagonal([4.0]), 0.0)
        with pytest.raises(LuckyBreakdownError):
            kernels_at(K, 1.0)

    @pytest.mark.parametrize("times_z", [False, True])
    def test_split_matches_block_difference(self, geometric, times_z):
        """测试：积分算出的 f1(T)e_m、f2(S)e_1 与 f(T_M)e_1 的分块差一致"""
        A, L = geometric
        f = make_stieltjes("inv_power", "times_z" if times_z else "plain", alpha=0.5)
        rule = build_quadrature_rule(f, A.lam_min, A.lam_max)
        for m in (5, 10, 15):
            K = KernelEvaluator.from_lanczos(L, m, (A.lam_min, A.lam_max))
            quad = split_by_quadrature(K, f, rule)
            direct = error_split(L, f, m)
            assert np.linalg.norm(quad.head - direct.head) <= 1e-8 * np.linalg.norm(direct.head)
            assert np.linalg.norm(quad.tail - direct.tail) <= 1e-8 * np.linalg.norm(direct.tail)

    def test_f1_f2_apply(self, geometric):
        """测试：f1_apply / f2_apply 分别给出 x_m − y_m 与 z_{M−m}"""
        A, L = geometric
        f = make_stieltjes("inv_power", alpha=0.5)
        rule = build_quadrature_rule(f, A.lam_min, A.lam_max)
        K = KernelEvaluator.from_lanczos(L, 8, (A.lam_min, A.lam_max))
        direct = error_split(L, f, 8)
        head, tail = f1_apply(K, f, rule), f2_apply(K, f, rule)
        assert head.shape == (8,)
        assert tail.shape == direct.tail.shape
        assert np.linalg.norm(head - direct.head) <= 1e-8 * np.linalg.norm(direct.head)
        assert np.linalg.norm(tail - direct.tail) <= 1e-8 * np.linalg.norm(direct.tail)

    def test_structure_report_ok(self, geometric):
        """测试：结构检查（det X 范围、系数符号、衰减）全部通过"""
        A, L = geometric
        f = make_stieltjes("inv_power", alpha=0.5)
        rule = build_quadrature_rule(f, A.lam_min, A.lam_max)
        for m in (2, 7, 12):
            K = KernelEvaluator.from_lanczos(L, m, (A.lam_min, A.lam_max))
            report = check_kernel_structure(K, rule)
            assert report.ok, report.failures[:3]

    @pytest.mark.parametrize("times_z", [False, True])
    def test_sign_and_monotonicity(self, geometric, times_z):
        """测试：f1、f2 符号为 (-1)^{m+1}、(-1)^m，模长单调"""
        A, L = geometric
        f = make_stieltjes("inv_power", "times_z" if times_z else "plain", alpha=0.5)
        rule = build_quadrature_rule(f, A.lam_min, A.lam_max)
        grid = np.geomspace(A.lam_min, A.lam_max, 30)
        for m in (3, 8):
            K = KernelEvaluator.from_lanczos(L, m, (A.lam_min, A.lam_max))
            report = check_sign_and_monotonicity(K, f, grid, rule)
            assert report.ok, report.failures[:3]

    def test_scalar_signs(self, geometric):
        """测试：标量 f1/f2 的符号"""
        A, L = geometric
        f = make_stieltjes("inv_power", alpha=0.5)
        K = KernelEvaluator.from_lanczos(L, 4)
        f1, f2 = kernel_scalars(K, f, [2.0, 20.0])
        assert np.all(f1 < 0)  # (-1)^5
        assert np.all(f2 > 0)

    def test_grid_too_small(self, geometric):
        """测试：单调性检查的网格至少 10 个点"""
        A, L = geometric
        K = KernelEvaluator.from_lanczos(L, 4)
        with pytest.raises(ArgumentError):
            check_sign_and_monotonicity(K, make_stieltjes("inv_power", alpha=0.5), [1.0, 2.0])


class TestCompleteMonotonicity:
    def test_inverse(self):
        """测试：1/z 的前两阶导数符号交替"""
        f = make_stieltjes("partial_fraction", weights=[1.0], poles=[0.0])
        assert check_complete_monotonicity(f, np.geomspace(1.0, 100.0, 20), 2).ok

    def test_sqrt_derivative(self):
        """测试：√z 非负且递增，积分导数与差分一致"""
        f = make_stieltjes("inv_power", "times_z", alpha=0.5)
        assert check_complete_monotonicity(f, np.geomspace(1.0, 100.0, 20), 1).ok

    def test_order_range(self):
        """测试：阶数超过 3 报错"""
        f = make_stieltjes("inv_power", alpha=0.5)
        with pytest.raises(ArgumentError):
            check_complete_monotonicity(f, [1.0, 2.0], 4)


class TestEpsilonProperties:
    @settings(max_examples=50, deadline=None)
    @given(
        ritz=st.lists(st.floats(0.1, 100.0), min_size=1, max_size=12),
        beta=st.floats(0.01, 50.0),
        t=st.floats(0.0, 1e4),
    )
    def test_sign_alternates_with_m(self, ritz, beta, t):
        """性质：β_i > 0、θ_i > 0 时 ε(t) 的符号是 (-1)^{m+1}"""
        m = len(ritz)
        eps = epsilon_closed_form([beta] * (m - 1), ritz, t)
        assert np.sign(eps) == (-1) ** (m + 1)
