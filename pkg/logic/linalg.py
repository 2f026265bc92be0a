"""稠密/三对角数值核

- SpectralMatrix：以特征形式保存的 Hermitian 正定矩阵（实验里都是对角阵），
  也是精确参考解 f(A)b 的来源。
- 对称三对角矩阵的特征分解、带位移的三对角求解（支持一次传入一组位移）、
  以及 Q f(Λ) Qᵀ b 形式的谱作用。

全部是 64 位浮点；整个项目的精度下限按 1e-12 相对误差来算。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from logic.errors import ArgumentError, ConvergenceFailure, DomainError, SingularityError

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class SpectralMatrix:
    """A = Q diag(λ) Qᵀ；eigenvectors 为 None 时表示对角阵 diag(λ)。"""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ArgumentError("eigenvalues must be a non-empty 1-D array")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ArgumentError(f"matrix is not positive definite: min eigenvalue {lam.min()!r}")
        if np.any(np.diff(lam) < 0):
            raise ArgumentError("eigenvalues must be sorted ascending")
        object.__setattr__(self, "eigenvalues", lam)

        if self.eigenvectors is not None:
            Q = np.asarray(self.eigenvectors, dtype=float)
            if Q.shape != (lam.size, lam.size):
                raise ArgumentError(f"eigenvector matrix has shape {Q.shape}, expected {(lam.size, lam.size)}")
            if np.max(np.abs(Q.T @ Q - np.eye(lam.size))) > ORTHO_TOL:
                raise ArgumentError("eigenvectors are not orthonormal within 1e-12")
            object.__setattr__(self, "eigenvectors", Q)

    @classmethod
    def diagonal(cls, values) -> "SpectralMatrix":
        return cls(np.sort(np.asarray(values, dtype=float)))

    @classmethod
    def from_dense(cls, H) -> "SpectralMatrix":
        """由实对称稠密矩阵构造特征形式。"""
        H = np.asarray(H)
        if np.iscomplexobj(H):
            # 复 Hermitian 的情形请先转到特征基下（对角阵 + 旋转后的 b），Lanczos 保持实数运算
            raise ArgumentError("complex input: pass the eigen-form diagonal and the rotated vector instead")
        if H.ndim != 2 or H.shape[0] != H.shape[1] or not np.allclose(H, H.T, rtol=0, atol=1e-13 * np.abs(H).max()):
            raise ArgumentError("matrix must be square and symmetric")
        lam, Q = np.linalg.eigh(H)
        return cls(lam, Q)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def is_diagonal(self) -> bool:
        return self.eigenvectors is None

    @property
    def lam_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lam_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def kappa(self) -> float:
        return self.lam_max / self.lam_min

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.is_diagonal:
            return self.eigenvalues * v
        Q = self.eigenvectors
        return Q @ (self.eigenvalues * (Q.T @ v))

    def eigen_coefficients(self, b: np.ndarray) -> np.ndarray:
        """b 在特征向量基下的系数 c_i。"""
        b = np.asarray(b, dtype=float)
        return b.copy() if self.is_diagonal else self.eigenvectors.T @ b

    def shifted(self, shift: float) -> "SpectralMatrix":
        """A - shift·I（例如对数实验中的 B = A - I）。"""
        return SpectralMatrix(self.eigenvalues - shift, self.eigenvectors)

    def to_dense(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.eigenvalues)
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


@dataclass(frozen=True)
class SymTridiagonal:
    """对称三对角矩阵：diag = (α_1..α_m)，offdiag = (β_2..β_m)。"""

    diag: np.ndarray
    offdiag: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.diag, dtype=float))
        e = np.atleast_1d(np.asarray(self.offdiag, dtype=float)) if np.size(self.offdiag) else np.zeros(0)
        if d.ndim != 1 or d.size == 0:
            raise ArgumentError("diag must be a non-empty 1-D array")
        if e.size != d.size - 1:
            raise ArgumentError(f"offdiag has length {e.size}, expected {d.size - 1}")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def m(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def leading(self, k: int) -> "SymTridiagonal":
        return SymTridiagonal(self.diag[:k], self.offdiag[: k - 1])

    def trailing(self, start: int) -> "SymTridiagonal":
        """从第 start 行/列（0 起）开始的右下角块。"""
        return SymTridiagonal(self.diag[start:], self.offdiag[start:])

    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.sum(self.diag ** 2) + 2.0 * np.sum(self.offdiag ** 2)))


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray

    def residual(self, T: SymTridiagonal) -> float:
        """‖T − QΘQᵀ‖_F"""
        recon = (self.vectors * self.values) @ self.vectors.T
        return float(np.linalg.norm(T.to_dense() - recon))


def tridiag_eigh(T: SymTridiagonal) -> EigenPairs:
    """对称三对角矩阵的特征分解，特征值升序。

    具体算法交给 LAPACK（scipy 的 eigh_tridiagonal），这里只关心残差和顺序。
    """
    if T.m == 1:
        return EigenPairs(T.diag.copy(), np.ones((1, 1)))
    try:
        values, vectors = eigh_tridiagonal(T.diag, T.offdiag)
    except LinAlgError as e:
        # LAPACK 的信息里带有未收敛的下标
        raise ConvergenceFailure(f"tridiagonal eigensolver did not converge: {e}", index=None) from e
    order = np.argsort(values, kind="stable")
    return EigenPairs(values[order], vectors[:, order])


Shift = Union[float, np.ndarray]


def tridiag_shifted_solve(T: SymTridiagonal, t: Shift, rhs: np.ndarray) -> np.ndarray:
    """求解 (T + tI) x = rhs，O(m) 的 Thomas 消元。

    t 可以是标量，也可以是一维位移数组：数组时对每个位移同时消元，
    返回形状 (m, len(t)) 的矩阵（第 j 列对应 t[j]）。积分节点上的
    预解式就是这样一次性算出来的。
    """
    shifts = np.asarray(t, dtype=float)
    scalar = shifts.ndim == 0
    shifts = np.atleast_1d(shifts)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (T.m,):
        raise ArgumentError(f"rhs has shape {rhs.shape}, expected ({T.m},)")

    m, k = T.m, shifts.size
    a = T.diag[:, None] + shifts[None, :]
    b = T.offdiag
    cp = np.empty((max(m - 1, 0), k))
    dp = np.empty((m, k))

    piv = a[0]
    if np.any(piv <= 0):
        raise SingularityError("non-positive pivot at row 0: T + tI is not positive definite", index=0)
    if m > 1:
        cp[0] = b[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, m):
        piv = a[i] - b[i - 1] * cp[i - 1]
        if np.any(piv <= 0):
            raise SingularityError(f"non-positive pivot at row {i}: T + tI is not positive definite", index=i)
        if i < m - 1:
            cp[i] = b[i] / piv
        dp[i] = (rhs[i] - b[i - 1] * dp[i - 1]) / piv

    x = np.empty((m, k))
    x[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x[:, 0] if scalar else x


def spectral_apply(A: SpectralMatrix, f: Callable[[np.ndarray], np.ndarray], b: np.ndarray) -> np.ndarray:
    """返回 Q f(Λ) Qᵀ b（对角阵时就是逐元素 f(λ_i)·b_i）。"""
    with np.errstate(all="ignore"):
        f_lam = np.asarray(f(A.eigenvalues), dtype=float)
    bad = ~np.isfinite(f_lam)
    if np.any(bad):
        lam = float(A.eigenvalues[np.argmax(bad)])
        raise DomainError(f"function is not finite at eigenvalue {lam!r}", value=lam)
    if A.is_diagonal:
        return f_lam * b
    Q = A.eigenvectors
    return Q @ (f_lam * (Q.T @ b))
