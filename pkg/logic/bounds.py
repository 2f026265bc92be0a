"""误差界

主结果：
- main_beta   : (1 + β_{m+1}·λ_hi/λ_lo²)·err_opt
- main_kappa  : (1 + κ²)·err_opt
中间界（证明链上的两步）：
- intermediate_ratio : (1 + ‖head‖/‖tail‖)·err_opt
- intermediate_delta : (1 + β_{m+1}·δ(0)·κ)·err_opt
对比用的已有结果：
- fov      : 2·(区间上 m−1 次极小极大误差)
- spectrum : 常数 × 谱点集上的离散极小极大误差（z^{-1/2} / √z 两种）
- rational : ℓ·Πκ(A − z_i I)·err_opt(m−ℓ+1)
- cg       : √κ·err_opt（只对 f = 1/z 有意义）

以及 effective_interval：b 只含部分特征向量时的有效谱区间。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from logic.approx import MinimaxResult, remez_discrete, remez_interval
from logic.errors import ArgumentError, DomainError, PreconditionError
from logic.krylov import ErrorSplit
from logic.stieltjes import KernelEvaluator, QuadratureRule, StieltjesFunction, kernels_at, split_by_quadrature

BOUND_NAMES = (
    "main_beta",
    "main_kappa",
    "intermediate_ratio",
    "intermediate_delta",
    "fov",
    "spectrum",
    "rational",
    "cg",
    "effective",
)


@dataclass(frozen=True)
class BoundValue:
    name: str
    factor: float
    value: float
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 0:
            raise ArgumentError(f"bound {self.name} has negative or undefined value {self.value!r}")

    def holds_for(self, err: float, slack: float = 1e-10) -> bool:
        return err <= self.value * (1.0 + slack)


@dataclass(frozen=True)
class RemezConfig:
    grid_points: Optional[int] = None
    max_iter: Optional[int] = None


def _check_interval(lam_lo: float, lam_hi: float) -> None:
    if lam_lo <= 0:
        raise PreconditionError(f"lower spectral bound must be positive, got {lam_lo!r}")
    if lam_hi < lam_lo:
        raise ArgumentError(f"lam_hi = {lam_hi!r} is below lam_lo = {lam_lo!r}")


def bound_main(beta_next: float, lam_lo: float, lam_hi: float, err_opt: float) -> Tuple[BoundValue, BoundValue]:
    _check_interval(lam_lo, lam_hi)
    if beta_next < 0 or err_opt < 0:
        raise ArgumentError("beta_next and err_opt must be nonnegative")
    inputs = {"beta_next": beta_next, "lam_lo": lam_lo, "lam_hi": lam_hi, "err_opt": err_opt}
    f_beta = 1.0 + beta_next * lam_hi / lam_lo ** 2
    f_kappa = 1.0 + (lam_hi / lam_lo) ** 2
    return (
        BoundValue("main_beta", f_beta, f_beta * err_opt, inputs),
        BoundValue("main_kappa", f_kappa, f_kappa * err_opt, inputs),
    )


def bound_intermediate(
    K: KernelEvaluator,
    f: StieltjesFunction,
    delta0: Optional[float],
    kappa: float,
    err_opt: float,
    rule: Optional[QuadratureRule] = None,
    split: Optional[ErrorSplit] = None,
) -> Tuple[BoundValue, BoundValue]:
    """两个中间界。split 为 None 时用积分算 f1/f2 的向量作用。"""
    if err_opt <= 0:
        raise ArgumentError("intermediate bounds need err_opt > 0")
    if split is None:
        split = split_by_quadrature(K, f, rule)
    if delta0 is None:
        _, d0, _, _ = kernels_at(K, 0.0)
        delta0 = float(d0)
    ratio = split.head_norm / split.tail_norm
    f_ratio = 1.0 + ratio
    f_delta = 1.0 + K.beta_next * delta0 * kappa
    inputs = {"m": K.m, "beta_next": K.beta_next, "delta0": delta0, "kappa": kappa, "err_opt": err_opt, "ratio": ratio}
    return (
        BoundValue("intermediate_ratio", f_ratio, f_ratio * err_opt, inputs),
        BoundValue("intermediate_delta", f_delta, f_delta * err_opt, inputs),
    )


def bound_fov(
    f: Callable,
    lam_lo: float,
    lam_hi: float,
    m: int,
    remez_cfg: Optional[RemezConfig] = None,
) -> BoundValue:
    """2 × [λ_lo, λ_hi] 上 m−1 次多项式的最佳一致误差。"""
    _check_interval(lam_lo, lam_hi)
    if m < 1:
        raise ArgumentError(f"m must be at least 1, got {m}")
    cfg = remez_cfg or RemezConfig()
    if lam_hi == lam_lo:
        res = remez_discrete(f, [lam_lo], m - 1, cfg.max_iter)
    else:
        res = remez_interval(f, lam_lo, lam_hi, m - 1, cfg.grid_points)
    return BoundValue("fov", 2.0, 2.0 * res.minimax_error, _minimax_inputs(res, m))


def _minimax_inputs(res: MinimaxResult, m: int) -> dict:
    return {"m": m, "degree": res.degree, "minimax_error": res.minimax_error, "floor": res.floor}


def bound_spectrum(
    f_kind: str,
    spectrum: Sequence[float],
    kappa: float,
    m: int,
    remez_cfg: Optional[RemezConfig] = None,
) -> BoundValue:
    """谱点集上的离散极小极大界。

    inv_sqrt: 3κ/√(πm)，次数 ⌊m/2⌋−1，点集 spec(A)
    sqrt    : 3κ²/m^{3/2}，次数 ⌊m/2⌋，点集 spec(A) ∪ {0}
    """
    pts = np.unique(np.asarray(spectrum, dtype=float))
    if pts.size == 0 or pts[0] <= 0:
        raise PreconditionError("spectrum must be non-empty and positive")
    cfg = remez_cfg or RemezConfig()
    if f_kind == "inv_sqrt":
        if m < 2:
            raise ArgumentError("inverse square root spectrum bound needs m >= 2")
        degree = m // 2 - 1
        const = 3.0 * kappa / math.sqrt(math.pi * m)
        res = remez_discrete(lambda z: 1.0 / np.sqrt(z), pts, degree, cfg.max_iter)
    elif f_kind == "sqrt":
        degree = m // 2
        const = 3.0 * kappa ** 2 / m ** 1.5
        res = remez_discrete(np.sqrt, np.concatenate([[0.0], pts]), degree, cfg.max_iter)
    else:
        raise ArgumentError(f"spectrum bound is defined for inv_sqrt and sqrt, got {f_kind!r}")
    inputs = _minimax_inputs(res, m)
    inputs["kind"] = f_kind
    return BoundValue("spectrum", const, const * res.minimax_error, inputs)


def bound_rational(
    poles: Sequence[float],
    lam_lo: float,
    lam_hi: float,
    err_opt_at: Callable[[int], float],
    m: int,
    numerator_degree: Optional[int] = None,
) -> BoundValue:
    """ℓ·Π κ(A − z_i I)·err_opt(m − ℓ + 1)，ℓ = 极点个数。err_opt_at(0) 应返回 ‖f(A)b‖。

    要求 m ≥ max(k, ℓ−1)，k 是分子次数（默认 ℓ−1，即真分式）。
    """
    _check_interval(lam_lo, lam_hi)
    z = np.asarray(poles, dtype=float)
    ell = z.size
    if ell == 0:
        raise ArgumentError("rational bound needs at least one pole")
    k = ell - 1 if numerator_degree is None else int(numerator_degree)
    if m < max(k, ell - 1):
        raise ArgumentError(f"rational bound needs m >= {max(k, ell - 1)}, got m = {m}")
    inside = (z >= lam_lo) & (z <= lam_hi)
    if np.any(inside):
        raise DomainError(f"pole {z[np.argmax(inside)]!r} lies in [{lam_lo!r}, {lam_hi!r}]", value=float(z[np.argmax(inside)]))
    near = np.minimum(np.abs(lam_lo - z), np.abs(lam_hi - z))
    far = np.maximum(np.abs(lam_lo - z), np.abs(lam_hi - z))
    kappas = far / near
    # log 求和，ℓ 较大时乘积容易溢出
    log_factor = math.log(ell) + float(np.sum(np.log(kappas)))
    factor = math.exp(log_factor) if log_factor < 700 else math.inf
    index = m - ell + 1
    err = float(err_opt_at(index))
    value = factor * err if err > 0 else 0.0
    inputs = {"m": m, "ell": ell, "index": index, "err_opt": err, "log_factor": log_factor}
    return BoundValue("rational", factor, value, inputs)


def bound_cg(kappa: float, err_opt: float) -> BoundValue:
    if kappa < 1:
        raise ArgumentError(f"condition number must be >= 1, got {kappa!r}")
    factor = math.sqrt(kappa)
    return BoundValue("cg", factor, factor * err_opt, {"kappa": kappa, "err_opt": err_opt})


def effective_interval(b_coeffs, eigenvalues, drop_tol: float = 0.0) -> Tuple[float, float]:
    """b = Σ c_i w_i 只在一部分特征向量上有分量时，返回 (λ_j, λ_k)。"""
    c = np.abs(np.asarray(b_coeffs, dtype=float))
    lam = np.asarray(eigenvalues, dtype=float)
    if c.shape != lam.shape:
        raise ArgumentError("coefficients and eigenvalues must have the same length")
    active = np.flatnonzero(c > drop_tol)
    if active.size == 0:
        raise ArgumentError(f"vector has no eigen-coefficient above {drop_tol!r}")
    return float(lam[active[0]]), float(lam[active[-1]])
