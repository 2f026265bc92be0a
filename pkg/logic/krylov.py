"""Lanczos 迭代与误差分解

- lanczos_run：带两遍完全重正交化的 Lanczos（有限精度下模拟精确算术）
- lanczos_approximation：f_m = V_m f(T_m) e_1
- optimal_approximation：f(A)b 在 K_m 上的正交投影及其误差
- error_split：跑到不变指标 M 之后，把误差拆成 V_m 部分 (x_m - y_m) 和尾部 z_{M-m}
- trailing_block：T_M 右下角的 S_{M-m}

LanczosDecomposition 构造后不可变，可以在多个界的计算之间共享。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from logic.errors import ArgumentError, DomainError, InvariantViolation, PreconditionError
from logic.linalg import SpectralMatrix, SymTridiagonal, tridiag_eigh
from utils.logger import get_logger

logger = get_logger()

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class LanczosDecomposition:
    alphas: np.ndarray
    betas: np.ndarray  # betas[j-1] = β_{j+1}，最后一个是尾部的 β_{m+1}
    basis: np.ndarray  # n × m，列正交
    invariance_index: Optional[int]
    breakdown_tol: float
    source_dim: int
    next_vector: Optional[np.ndarray] = None  # v_{m+1}，发生 breakdown 时为 None

    @property
    def steps(self) -> int:
        return self.alphas.size

    @property
    def M(self) -> Optional[int]:
        """不变指标：发生 breakdown 时记录的值，或者已经跑满 n 步。"""
        if self.invariance_index is not None:
            return self.invariance_index
        if self.steps == self.source_dim:
            return self.source_dim
        return None

    def T(self, m: Optional[int] = None) -> SymTridiagonal:
        m = self.steps if m is None else m
        self._check_m(m)
        return SymTridiagonal(self.alphas[:m], self.betas[: m - 1])

    def beta_next(self, m: int) -> float:
        """β_{m+1}"""
        self._check_m(m)
        return float(self.betas[m - 1])

    def V(self, m: int) -> np.ndarray:
        self._check_m(m)
        return self.basis[:, :m]

    def _check_m(self, m: int) -> None:
        if not 1 <= m <= self.steps:
            raise ArgumentError(f"m = {m} outside the stored range 1..{self.steps}")


@dataclass(frozen=True)
class ErrorSplit:
    head: np.ndarray  # x_m - y_m
    tail: np.ndarray  # z_{M-m}

    @property
    def head_norm(self) -> float:
        return float(np.linalg.norm(self.head))

    @property
    def tail_norm(self) -> float:
        return float(np.linalg.norm(self.tail))


def default_breakdown_tol(A: SpectralMatrix, scale: float = 1e-12) -> float:
    return scale * A.lam_max


def lanczos_run(
    A: SpectralMatrix,
    b: np.ndarray,
    m_max: int,
    breakdown_tol: Optional[float] = None,
) -> LanczosDecomposition:
    """Lanczos 三项递推。

    每一步都把新向量对所有已存基向量做两遍投影（完全重正交化），
    β_{j+1} ≤ breakdown_tol 时提前停止并记录不变指标 M = j。
    """
    b = np.asarray(b, dtype=float)
    n = A.n
    if b.shape != (n,):
        raise ArgumentError(f"vector has shape {b.shape}, expected ({n},)")
    if abs(np.linalg.norm(b) - 1.0) > UNIT_TOL:
        raise PreconditionError(f"b must have unit norm, got ‖b‖ = {np.linalg.norm(b)!r}")
    if m_max < 1:
        raise ArgumentError(f"m_max must be at least 1, got {m_max}")
    if m_max > n:
        raise ArgumentError(f"m_max = {m_max} exceeds the dimension {n}")
    tol = default_breakdown_tol(A) if breakdown_tol is None else float(breakdown_tol)

    V = np.zeros((n, m_max))
    alphas, betas = [], []
    v, v_prev, beta_prev = b.copy(), np.zeros(n), 0.0
    invariance_index = None
    next_vector = None

    for j in range(m_max):
        V[:, j] = v
        w = A.matvec(v)
        alpha = float(v @ w)
        w = w - alpha * v - beta_prev * v_prev
        basis = V[:, : j + 1]
        for _ in range(2):
            w -= basis @ (basis.T @ w)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)
        betas.append(beta)

        if beta <= tol:
            invariance_index = j + 1
            logger.debug(f"lucky breakdown at m = {j + 1}, beta = {beta:.3e}")
            break
        v_prev, v, beta_prev = v, w / beta, beta
        next_vector = v

    steps = len(alphas)
    return LanczosDecomposition(
        alphas=np.array(alphas),
        betas=np.array(betas),
        basis=V[:, :steps].copy(),
        invariance_index=invariance_index,
        breakdown_tol=tol,
        source_dim=n,
        next_vector=None if invariance_index is not None else next_vector,
    )


def check_lanczos_relation(A: SpectralMatrix, L: LanczosDecomposition, m: Optional[int] = None) -> dict:
    """检查正交性、Lanczos 关系 AV = VT + β v e_mᵀ 以及 T_m = VᵀAV。"""
    m = L.steps if m is None else m
    Vm = L.V(m)
    T = L.T(m).to_dense()
    AV = np.column_stack([A.matvec(Vm[:, j]) for j in range(m)])

    ortho = float(np.max(np.abs(Vm.T @ Vm - np.eye(m))))
    R = AV - Vm @ T
    if m == L.steps and L.next_vector is not None:
        R[:, m - 1] -= L.beta_next(m) * L.next_vector
    elif m < L.steps:
        R[:, m - 1] -= L.beta_next(m) * L.basis[:, m]
    relation = float(np.linalg.norm(R) / A.lam_max)
    projection = float(np.max(np.abs(Vm.T @ AV - T)))

    failures = []
    if ortho > ORTHO_TOL:
        failures.append({"quantity": "orthogonality", "value": ortho})
    if relation > ORTHO_TOL:
        failures.append({"quantity": "lanczos_relation", "value": relation})
    if projection > ORTHO_TOL * A.lam_max:
        failures.append({"quantity": "projection", "value": projection})
    if failures:
        raise InvariantViolation(f"Lanczos invariants violated at m = {m}", failures)
    return {"orthogonality": ortho, "relation": relation, "projection": projection}


def _f_times_e1(T: SymTridiagonal, f) -> np.ndarray:
    """f(T) e_1 = Q f(Θ) Qᵀ e_1"""
    pairs = tridiag_eigh(T)
    with np.errstate(all="ignore"):
        f_theta = np.asarray(f.closed_form(pairs.values), dtype=float)
    bad = ~np.isfinite(f_theta)
    if np.any(bad):
        theta = float(pairs.values[np.argmax(bad)])
        raise DomainError(f"function is not finite at Ritz value {theta!r}", value=theta)
    return pairs.vectors @ (f_theta * pairs.vectors[0, :])


def lanczos_approximation(L: LanczosDecomposition, f, m: int) -> np.ndarray:
    """f_m = V_m f(T_m) e_1"""
    return L.V(m) @ _f_times_e1(L.T(m), f)


def optimal_approximation(L: LanczosDecomposition, exact: np.ndarray, m: int) -> Tuple[np.ndarray, float]:
    """正交投影 V_m V_mᵀ f(A)b 以及误差 ‖f(A)b − 投影‖。"""
    exact = np.asarray(exact, dtype=float)
    if exact.shape != (L.source_dim,):
        raise ArgumentError(f"exact solution has shape {exact.shape}, expected ({L.source_dim},)")
    Vm = L.V(m)
    proj = Vm @ (Vm.T @ exact)
    return proj, float(np.linalg.norm(exact - proj))


def _require_invariance(L: LanczosDecomposition, m: int) -> int:
    M = L.M
    if M is None:
        raise ArgumentError("decomposition was not run to the invariance index")
    if m >= M:
        raise ArgumentError(f"m = {m} must be smaller than the invariance index M = {M}")
    if m < 1:
        raise ArgumentError(f"m must be at least 1, got {m}")
    return M


def error_split(L: LanczosDecomposition, f, m: int) -> ErrorSplit:
    """f(T_M)e_1 = [x_m; z_{M-m}]，y_m = f(T_m)e_1，返回 (x_m − y_m, z_{M−m})。"""
    M = _require_invariance(L, m)
    full = _f_times_e1(L.T(M), f)
    y = _f_times_e1(L.T(m), f)
    return ErrorSplit(head=full[:m] - y, tail=full[m:])


def trailing_block(L: LanczosDecomposition, m: int, lam_bounds: Optional[Tuple[float, float]] = None) -> SymTridiagonal:
    """S_{M−m} = T_M[m+1..M, m+1..M]；给出 lam_bounds 时顺带检查 spec(S) 落在谱区间内。"""
    M = _require_invariance(L, m)
    S = L.T(M).trailing(m)
    if lam_bounds is not None:
        lo, hi = lam_bounds
        theta = tridiag_eigh(S).values
        slack = 1e-10 * hi
        if theta[0] < lo - slack or theta[-1] > hi + slack:
            raise InvariantViolation(
                f"spectrum of the trailing block [{theta[0]!r}, {theta[-1]!r}] leaves [{lo!r}, {hi!r}]",
                [{"quantity": "trailing_spectrum", "value": [float(theta[0]), float(theta[-1])]}],
            )
    return S
