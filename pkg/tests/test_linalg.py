import sys
import os
import pytest
import numpy as np
from hypothesis import given, settings, strategies as st

# --- 把项目根目录加入 Python 搜索路径，否则找不到 logic 模块 ---
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from logic.errors import ArgumentError, DomainError, SingularityError
from logic.linalg import (
    SpectralMatrix,
    SymTridiagonal,
    spectral_apply,
    tridiag_eigh,
    tridiag_shifted_solve,
)


def _random_T(seed, m=8):
    rng = np.random.default_rng(seed)
    return SymTridiagonal(rng.uniform(2.0, 10.0, m), rng.uniform(0.1, 0.9, m - 1))


class TestSpectralMatrix:
    def test_rejects_non_positive(self):
        """测试：有非正特征值时拒绝构造"""
        with pytest.raises(ArgumentError):
            SpectralMatrix.diagonal([0.0, 1.0, 2.0])

    def test_diagonal_sorts_and_kappa(self):
        """测试：对角阵自动排序，κ = λmax/λmin"""
        A = SpectralMatrix.diagonal([4.0, 1.0, 2.0])
        assert A.eigenvalues.tolist() == [1.0, 2.0, 4.0]
        assert A.kappa == 4.0
        assert A.is_diagonal

    def test_from_dense_matches_matvec(self):
        """测试：稠密对称阵转成特征形式后，matvec 与原矩阵一致"""
        rng = np.random.default_rng(0)
        B = rng.standard_normal((6, 6))
        H = B @ B.T + 6 * np.eye(6)
        A = SpectralMatrix.from_dense(H)
        v = rng.standard_normal(6)
        assert np.allclose(A.matvec(v), H @ v, rtol=1e-12, atol=1e-12)
        assert np.allclose(A.to_dense(), H, atol=1e-10)

    def test_from_dense_rejects_complex(self):
        """测试：复矩阵要求先转到特征基"""
        with pytest.raises(ArgumentError):
            SpectralMatrix.from_dense(np.eye(2) * (1 + 1j))

    def test_shifted(self):
        """测试：A − I 的特征值整体平移"""
        A = SpectralMatrix.diagonal([2.0, 3.0])
        assert A.shifted(1.0).eigenvalues.tolist() == [1.0, 2.0]


class TestTridiagonal:
    def test_offdiag_length_checked(self):
        """测试：次对角线长度不对时报错"""
        with pytest.raises(ArgumentError):
            SymTridiagonal([1.0, 2.0, 3.0], [0.5])

    def test_eigh_matches_numpy(self):
        """测试：三对角特征值与 numpy 稠密结果一致，且升序"""
        T = _random_T(1)
        pairs = tridiag_eigh(T)
        assert np.allclose(pairs.values, np.linalg.eigvalsh(T.to_dense()), rtol=1e-12)
        assert np.all(np.diff(pairs.values) >= 0)
        assert pairs.residual(T) <= 1e-12 * T.frobenius_norm()

    def test_single_entry(self):
        """测试：1×1 的情形"""
        pairs = tridiag_eigh(SymTridiagonal([3.0]))
        assert pairs.values.tolist() == [3.0]

    def test_leading_and_trailing(self):
        """测试：左上角 / 右下角子块"""
        T = SymTridiagonal([1.0, 2.0, 3.0, 4.0], [0.1, 0.2, 0.3])
        assert T.leading(2).diag.tolist() == [1.0, 2.0]
        assert T.leading(2).offdiag.tolist() == [0.1]
        assert T.trailing(2).diag.tolist() == [3.0, 4.0]
        assert T.trailing(2).offdiag.tolist() == [0.3]


class TestShiftedSolve:
    def test_vector_of_shifts(self):
        """测试：一组位移同时求解，每列与稠密求解一致"""
        T = _random_T(2)
        rhs = np.arange(1.0, T.m + 1)
        shifts = np.array([0.0, 0.5, 10.0, 1e4])
        X = tridiag_shifted_solve(T, shifts, rhs)
        assert X.shape == (T.m, shifts.size)
        for j, t in enumerate(shifts):
            ref = np.linalg.solve(T.to_dense() + t * np.eye(T.m), rhs)
            assert np.allclose(X[:, j], ref, rtol=1e-12, atol=1e-14)

    def test_scalar_shift_returns_vector(self):
        """测试：标量位移返回一维向量"""
        T = _random_T(3)
        x = tridiag_shifted_solve(T, 1.0, np.ones(T.m))
        assert x.shape == (T.m,)

    def test_indefinite_raises(self):
        """测试：T + tI 不正定时报 SingularityError 并给出行号"""
        T = SymTridiagonal([1.0, -5.0, 1.0], [0.1, 0.1])
        with pytest.raises(SingularityError) as exc:
            tridiag_shifted_solve(T, 0.0, np.ones(3))
        assert exc.value.index == 1

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), t=st.floats(0.0, 1e3))
    def test_solve_residual_property(self, seed, t):
        """性质：(T + tI)x − rhs 的残差在机器精度量级"""
        T = _random_T(seed, 10)
        rhs = np.random.default_rng(seed).standard_normal(T.m)
        x = tridiag_shifted_solve(T, t, rhs)
        res = (T.to_dense() + t * np.eye(T.m)) @ x - rhs
        assert np.linalg.norm(res) <= 1e-12 * (1 + t) * np.linalg.norm(rhs) * 10


class TestSpectralApply:
    def test_inverse(self):
        """测试：f = 1/z 时 A·f(A)b = b"""
        A = SpectralMatrix.diagonal(np.arange(1.0, 11.0))
        b = np.ones(10)
        x = spectral_apply(A, lambda z: 1.0 / z, b)
        assert np.allclose(A.matvec(x), b, atol=1e-14)

    def test_non_finite_raises_domain_error(self):
        """测试：f 在某个特征值上不是有限值时报 DomainError"""
        A = SpectralMatrix.diagonal([1.0, 2.0])
        with pytest.raises(DomainError) as exc:
            spectral_apply(A, lambda z: 1.0 / (z - 1.0), np.ones(2))
        assert exc.value.value == 1.0
