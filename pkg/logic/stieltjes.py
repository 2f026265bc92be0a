"""Stieltjes 函数、半无穷积分与误差分解的辅助核

Stieltjes 函数 f(z) = ∫_0^∞ dμ(t)/(z+t)，μ 非负。支持的类型：
- inv_power(α)      : w(t) = sin(απ)/π · t^{-α},        f(z) = z^{-α}
- log1p_over_z      : w(t) = 1/t (t ≥ 1)，0 (t < 1),     f(z) = log(1+z)/z
- partial_fraction  : 离散测度 Σ σ_i δ_{t_i},            f(z) = Σ σ_i/(z+t_i)
- custom            : 用户给出密度和闭式

transform = times_z 表示 f(z) = z·g(z)，g 是上面存下来的 Stieltjes 函数
（√z = z·z^{-1/2}，log(1+z) = z·log(1+z)/z）。

积分方面：每次实验针对 (函数, 谱区间) 构造一次 QuadratureRule，
后面所有核函数积分（f1/f2 的向量作用、标量单调性检查）都用同一组节点。
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from logic.errors import (
    AccuracyError,
    ArgumentError,
    CheckReport,
    InvariantViolation,
    LuckyBreakdownError,
)
from logic.krylov import ErrorSplit, LanczosDecomposition, trailing_block
from logic.linalg import EigenPairs, SymTridiagonal, tridiag_eigh, tridiag_shifted_solve
from utils.logger import get_logger
from utils.settings import load_settings

logger = get_logger()

KINDS = ("inv_power", "log1p_over_z", "partial_fraction", "custom")


class Transform(str, Enum):
    PLAIN = "plain"
    TIMES_Z = "times_z"


@dataclass(frozen=True)
class StieltjesFunction:
    kind: str
    transform: Transform = Transform.PLAIN
    alpha: Optional[float] = None
    weights: Optional[np.ndarray] = None
    poles: Optional[np.ndarray] = None
    density_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    g_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: Tuple[float, float] = (0.0, math.inf)
    label: str = ""

    @property
    def is_discrete(self) -> bool:
        return self.kind == "partial_fraction"

    @property
    def times_z(self) -> bool:
        return self.transform is Transform.TIMES_Z

    def g(self, z):
        """Stieltjes 部分 g(z) 的闭式。"""
        z = np.asarray(z, dtype=float)
        if self.kind == "inv_power":
            return z ** (-self.alpha)
        if self.kind == "log1p_over_z":
            return np.log1p(z) / z
        if self.kind == "partial_fraction":
            return np.sum(self.weights / (z[..., None] + self.poles), axis=-1)
        return np.asarray(self.g_fn(z), dtype=float)

    def closed_form(self, z):
        z = np.asarray(z, dtype=float)
        return z * self.g(z) if self.times_z else self.g(z)

    def __call__(self, z):
        return self.closed_form(z)

    def density(self, t):
        """dμ(t) = w(t) dt 的密度（支撑外为 0）。"""
        if self.is_discrete:
            raise ArgumentError("a partial-fraction function has a discrete measure, not a density")
        t = np.asarray(t, dtype=float)
        lo, hi = self.support
        inside = (t >= lo) & (t <= hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "inv_power":
                w = math.sin(self.alpha * math.pi) / math.pi * t ** (-self.alpha)
            elif self.kind == "log1p_over_z":
                w = 1.0 / t
            else:
                w = np.asarray(self.density_fn(t), dtype=float)
        return np.where(inside, w, 0.0)

    def with_transform(self, transform) -> "StieltjesFunction":
        return make_stieltjes(
            self.kind,
            transform,
            alpha=self.alpha,
            weights=self.weights,
            poles=self.poles,
            density=self.density_fn,
            closed_form=self.g_fn,
            support=self.support,
            validate=False,
        )


def make_stieltjes(
    kind: str,
    transform="plain",
    *,
    alpha: Optional[float] = None,
    weights: Optional[Sequence[float]] = None,
    poles: Optional[Sequence[float]] = None,
    density: Optional[Callable] = None,
    closed_form: Optional[Callable] = None,
    support: Optional[Tuple[float, float]] = None,
    validate: bool = True,
) -> StieltjesFunction:
    """构造 Stieltjes 函数并在构造时用积分核对密度和闭式是否一致。"""
    transform = Transform(transform)
    if kind not in KINDS:
        raise ArgumentError(f"unknown Stieltjes kind {kind!r}, expected one of {KINDS}")

    w = p = None
    if kind == "inv_power":
        if alpha is None or not 0.0 < float(alpha) < 1.0:
            raise ArgumentError(f"inv_power needs alpha in (0, 1), got {alpha!r}")
        alpha = float(alpha)
        support = (0.0, math.inf)
        label = f"z^(-{alpha:g})"
    elif kind == "log1p_over_z":
        support = (1.0, math.inf)
        label = "log(1+z)/z"
    elif kind == "partial_fraction":
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        p = np.atleast_1d(np.asarray(poles, dtype=float))
        if w.shape != p.shape or w.size == 0:
            raise ArgumentError("partial_fraction needs equally many weights and poles")
        if np.any(w <= 0):
            # 有符号测度不在支持范围内
            raise ArgumentError("partial_fraction weights must be positive (signed measures are unsupported)")
        if np.any(p < 0):
            raise ArgumentError("partial_fraction poles t_i must be nonnegative")
        if np.unique(p).size != p.size:
            raise ArgumentError("partial_fraction poles must be pairwise distinct")
        order = np.argsort(p)
        w, p = w[order], p[order]
        support = (float(p[0]), float(p[-1]))
        label = f"partial_fraction[{p.size}]"
    else:
        if density is None or closed_form is None:
            raise ArgumentError("custom kind needs both density and closed_form")
        support = tuple(support) if support is not None else (0.0, math.inf)
        label = "custom"

    if transform is Transform.TIMES_Z:
        label = f"z*{label}"

    f = StieltjesFunction(
        kind=kind,
        transform=transform,
        alpha=alpha,
        weights=w,
        poles=p,
        density_fn=density,
        g_fn=closed_form,
        support=support,
        label=label,
    )
    if validate and not f.is_discrete:
        _validate_representation(f)
    return f


def _validate_representation(f: StieltjesFunction) -> None:
    grid = np.geomspace(1e-8, 1e8, 161)
    w = f.density(grid)
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ArgumentError(f"density of {f.label} is negative or not finite on the sample grid")
    for z in (0.5, 2.0, 50.0):
        quad = evaluate_by_quadrature(f.with_transform("plain"), z)
        closed = float(f.g(z))
        if abs(quad - closed) > 1e-9 * abs(closed):
            raise ArgumentError(f"density and closed form of {f.label} disagree at z = {z}: {quad!r} vs {closed!r}")


# ---------------------------------------------------------------------------
# 半无穷积分
# ---------------------------------------------------------------------------

_GL_ORDER = 20
_GL_X, _GL_W = leggauss(_GL_ORDER)
_PANEL_WIDTH = 2.0  # 对数变量下的面板宽度
_T_MIN, _T_MAX = 1e-290, 1e290
_SPLIT = 1e4  # inv_power 的头尾面板离谱区间的距离（倍数）


@dataclass(frozen=True)
class QuadratureRule:
    """∫ h(t) dμ(t) ≈ Σ weights_i h(nodes_i)"""

    nodes: np.ndarray
    weights: np.ndarray
    rel_tol: float
    evaluations: int

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return self.weights @ values


class _Panel(NamedTuple):
    a: float
    b: float
    t: np.ndarray
    mass: np.ndarray
    vals: np.ndarray  # 每个探针 z 上 ∫ dμ/(z+t) 的贡献


class _RuleBuilder:
    """对数变量 t = λ_ref·eˣ 上的复合 Gauss–Legendre，按探针族 1/(z+t) 自适应二分。"""

    def __init__(self, f: StieltjesFunction, lam_ref: float, probes: np.ndarray, rel_tol: float, budget: int):
        self.f = f
        self.lam_ref = lam_ref
        self.probes = probes
        self.rel_tol = rel_tol
        self.budget = budget
        self.evaluations = 0
        self.extras: list = []

    def _charge(self, count: int, panels) -> None:
        self.evaluations += count
        if self.evaluations > self.budget:
            raise AccuracyError(
                f"quadrature budget of {self.budget} evaluations exhausted for {self.f.label}",
                estimate=self._total(panels),
            )

    def _make(self, a: float, b: float, t: np.ndarray, mass: np.ndarray) -> _Panel:
        vals = (mass[:, None] / (self.probes[None, :] + t[:, None])).sum(axis=0)
        return _Panel(a, b, t, mass, vals)

    def _log_panel(self, a: float, b: float, panels=()) -> _Panel:
        self._charge(_GL_ORDER, panels)
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        t = self.lam_ref * np.exp(mid + half * _GL_X)
        mass = half * _GL_W * self.f.density(t) * t
        return self._make(a, b, t, mass)

    def _power_head(self, t_split: float) -> _Panel:
        # ∫_0^{t_split}：t = s^{1/(1-α)} 消掉 t^{-α} 端点奇性
        alpha = self.f.alpha
        c = math.sin(alpha * math.pi) / math.pi
        s0 = t_split ** (1.0 - alpha)
        s = 0.5 * s0 * (_GL_X + 1.0)
        t = s ** (1.0 / (1.0 - alpha))
        mass = 0.5 * s0 * _GL_W * c / (1.0 - alpha)
        self._charge(_GL_ORDER, ())
        return self._make(0.0, t_split, t, mass)

    def _power_tail(self, t_split: float) -> _Panel:
        # ∫_{t_split}^∞：t = r^{-1/α}
        alpha = self.f.alpha
        c = math.sin(alpha * math.pi) / math.pi
        r0 = t_split ** (-alpha)
        r = 0.5 * r0 * (_GL_X + 1.0)
        with np.errstate(over="ignore"):
            t = r ** (-1.0 / alpha)
        if not np.all(np.isfinite(t)):
            raise AccuracyError(f"tail nodes overflow for alpha = {alpha}", estimate=None)
        mass = 0.5 * r0 * _GL_W * (c / alpha) * t
        self._charge(_GL_ORDER, ())
        return self._make(t_split, math.inf, t, mass)

    def _total(self, panels) -> np.ndarray:
        total = np.zeros(self.probes.size)
        for p in list(panels) + self.extras:
            total = total + p.vals
        return total

    def _tail_small(self, inner: _Panel, outer: _Panel, total: np.ndarray) -> bool:
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(inner.vals > 0, outer.vals / inner.vals, np.inf)
        q = np.where(outer.vals == 0, 0.0, q)
        est = np.where(q < 0.9, outer.vals * q / (1.0 - np.minimum(q, 0.9)), np.inf)
        return bool(np.all(est <= 0.1 * self.rel_tol * total))

    def build(self, lam_lo: float, lam_hi: float) -> QuadratureRule:
        f, ref = self.f, self.lam_ref
        s_lo, s_hi = f.support
        x_floor, x_ceil = math.log(_T_MIN / ref), math.log(_T_MAX / ref)

        if f.kind == "inv_power":
            a0, b0 = math.log(lam_lo / _SPLIT / ref), math.log(lam_hi * _SPLIT / ref)
            self.extras = [self._power_head(ref * math.exp(a0)), self._power_tail(ref * math.exp(b0))]
            grow_left = grow_right = False
        else:
            a0 = math.log(s_lo / ref) if s_lo > 0 else math.log(lam_lo / _SPLIT / ref)
            b0 = math.log(s_hi / ref) if math.isfinite(s_hi) else max(math.log(lam_hi * _SPLIT / ref), a0 + _PANEL_WIDTH)
            if b0 <= a0:
                raise ArgumentError(f"empty support for {f.label}")
            grow_left, grow_right = s_lo <= 0, not math.isfinite(s_hi)

        count = max(2, int(math.ceil((b0 - a0) / _PANEL_WIDTH)))
        edges = np.linspace(a0, b0, count + 1)
        panels = [self._log_panel(edges[i], edges[i + 1]) for i in range(count)]

        while grow_left and not self._tail_small(panels[1], panels[0], self._total(panels)):
            a = panels[0].a
            if a <= x_floor:
                raise AccuracyError(f"measure of {f.label} does not decay at t → 0", estimate=self._total(panels))
            panels.insert(0, self._log_panel(max(a - _PANEL_WIDTH, x_floor), a, panels))
        while grow_right and not self._tail_small(panels[-2], panels[-1], self._total(panels)):
            b = panels[-1].b
            if b >= x_ceil:
                raise AccuracyError(f"measure of {f.label} does not decay at t → ∞", estimate=self._total(panels))
            panels.append(self._log_panel(b, min(b + _PANEL_WIDTH, x_ceil), panels))

        total = self._total(panels)
        accepted = []
        queue = deque(panels)
        while queue:
            p = queue.popleft()
            mid = 0.5 * (p.a + p.b)
            left, right = self._log_panel(p.a, mid, panels), self._log_panel(mid, p.b, panels)
            err = np.abs(p.vals - (left.vals + right.vals))
            if np.all(err <= 0.1 * self.rel_tol * total):
                accepted.append(p)
            else:
                queue.extend([left, right])

        accepted.sort(key=lambda p: p.a)
        pieces = self.extras[:1] + accepted + self.extras[1:]
        nodes = np.concatenate([p.t for p in pieces])
        weights = np.concatenate([p.mass for p in pieces])
        keep = weights > 0
        logger.debug(f"quadrature rule for {f.label}: {int(keep.sum())} nodes, {self.evaluations} evaluations")
        return QuadratureRule(nodes[keep], weights[keep], self.rel_tol, self.evaluations)


def build_quadrature_rule(
    f: StieltjesFunction,
    lam_lo: float,
    lam_hi: float,
    rel_tol: Optional[float] = None,
    budget: Optional[int] = None,
) -> QuadratureRule:
    """针对谱区间 [lam_lo, lam_hi] 构造 μ 的积分规则。

    离散测度直接返回它的原子；连续密度用对数变量上的自适应复合 Gauss 规则，
    精度以 1/(z+t)（z 取区间内的几何分布探针）为准。
    """
    settings = load_settings()
    rel_tol = settings.quad_rel_tol if rel_tol is None else float(rel_tol)
    budget = settings.quad_budget if budget is None else int(budget)
    if f.is_discrete:
        return QuadratureRule(f.poles.copy(), f.weights.copy(), rel_tol, 0)
    if not 0 < lam_lo <= lam_hi:
        raise ArgumentError(f"need 0 < lam_lo <= lam_hi, got [{lam_lo!r}, {lam_hi!r}]")
    probes = np.unique(np.geomspace(lam_lo, lam_hi, 7))
    builder = _RuleBuilder(f, math.sqrt(lam_lo * lam_hi), probes, rel_tol, budget)
    return builder.build(lam_lo, lam_hi)


def evaluate_by_quadrature(f: StieltjesFunction, z: float, rel_tol: Optional[float] = None) -> float:
    """用积分表示计算 f(z)（times_z 时乘上 z）。"""
    if z <= 0:
        raise ArgumentError(f"z must be positive, got {z!r}")
    rule = build_quadrature_rule(f, z, z, rel_tol)
    g = float(np.sum(rule.weights / (z + rule.nodes)))
    return z * g if f.times_z else g


# ---------------------------------------------------------------------------
# 辅助核 γ, δ, ε, det X
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelEvaluator:
    """固定分块 (T_m, S_{M-m}, β_{m+1}) 下的核函数。"""

    T_m: SymTridiagonal
    S: SymTridiagonal
    beta_next: float
    breakdown_tol: float = 0.0
    lam_bounds: Optional[Tuple[float, float]] = None
    ritz_T: Optional[EigenPairs] = None

    def __post_init__(self):
        if self.ritz_T is None:
            object.__setattr__(self, "ritz_T", tridiag_eigh(self.T_m))
        if self.lam_bounds is None:
            theta_s = tridiag_eigh(self.S).values
            lo = min(self.ritz_T.values[0], theta_s[0])
            hi = max(self.ritz_T.values[-1], theta_s[-1])
            object.__setattr__(self, "lam_bounds", (float(lo), float(hi)))

    @classmethod
    def from_lanczos(cls, L: LanczosDecomposition, m: int, lam_bounds=None) -> "KernelEvaluator":
        S = trailing_block(L, m, lam_bounds)
        return cls(L.T(m), S, L.beta_next(m), L.breakdown_tol, lam_bounds)

    @property
    def m(self) -> int:
        return self.T_m.m


def _require_beta(K: KernelEvaluator) -> None:
    if K.beta_next <= K.breakdown_tol or K.beta_next <= 0:
        raise LuckyBreakdownError(f"beta_(m+1) = {K.beta_next!r} is at the breakdown level; kernels are undefined")


def _resolvents(K: KernelEvaluator, t):
    _require_beta(K)
    e_m = np.zeros(K.m)
    e_m[-1] = 1.0
    e_1 = np.zeros(K.S.m)
    e_1[0] = 1.0
    X = tridiag_shifted_solve(K.T_m, t, e_m)  # (T_m+tI)^{-1} e_m
    Y = tridiag_shifted_solve(K.S, t, e_1)  # (S+tI)^{-1} e_1
    gamma, eps, delta = X[-1], X[0], Y[0]
    detx = gamma * delta - 1.0 / K.beta_next ** 2
    if np.any(detx >= 0):
        bad = np.atleast_1d(t)[np.argmax(np.atleast_1d(detx) >= 0)]
        raise InvariantViolation(f"det X(t) is not negative at t = {bad!r}", [{"quantity": "detX", "at": float(bad)}])
    return X, Y, gamma, delta, eps, detx


def kernels_at(K: KernelEvaluator, t):
    """返回 (γ(t), δ(t), ε(t), det X(t))；t 可以是标量或数组。"""
    if np.any(np.asarray(t) < 0):
        raise ArgumentError("kernels are evaluated at t >= 0 only")
    _, _, gamma, delta, eps, detx = _resolvents(K, t)
    return gamma, delta, eps, detx


def epsilon_closed_form(betas, ritz, t):
    """ε(t) = (-1)^{m+1} Πβ_i / Π(θ_i + t)，用对数求和避免溢出。"""
    betas = np.asarray(betas, dtype=float)
    ritz = np.asarray(ritz, dtype=float)
    m = ritz.size
    if betas.size != m - 1:
        raise ArgumentError(f"need {m - 1} off-diagonal entries for {m} Ritz values, got {betas.size}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    shifted = ritz[:, None] + t_arr[None, :]
    log_mag = np.sum(np.log(betas)) - np.sum(np.log(shifted), axis=0)
    value = (-1.0) ** (m + 1) * np.exp(log_mag)
    return float(value[0]) if np.ndim(t) == 0 else value


def _integrand_coefficients(K: KernelEvaluator, f: StieltjesFunction, rule: QuadratureRule):
    X, Y, gamma, delta, eps, detx = _resolvents(K, rule.nodes)
    c1 = -delta * eps / detx
    c2 = eps / (K.beta_next * detx)
    mass = rule.weights
    return X, Y, c1, c2, mass


def _rule_for(K: KernelEvaluator, f: StieltjesFunction, rule: Optional[QuadratureRule]) -> QuadratureRule:
    return rule if rule is not None else build_quadrature_rule(f, *K.lam_bounds)


def split_by_quadrature(K: KernelEvaluator, f: StieltjesFunction, rule: Optional[QuadratureRule] = None) -> ErrorSplit:
    """f1(T_m)e_m 与 f2(S)e_1 一起算（共用一次预解式求解）。

    times_z 时 f(T_M)e_1 的分块差等于 ∫ -t·c(t)·(·+tI)^{-1}e dμ(t)，
    也就是 T_m f1(T_m)e_m 再减去常数项 (∫c1 dμ)·e_m。
    """
    rule = _rule_for(K, f, rule)
    X, Y, c1, c2, mass = _integrand_coefficients(K, f, rule)
    if f.times_z:
        mass = -rule.nodes * mass
    return ErrorSplit(head=X @ (mass * c1), tail=Y @ (mass * c2))


def f1_apply(K: KernelEvaluator, f: StieltjesFunction, rule: Optional[QuadratureRule] = None) -> np.ndarray:
    return split_by_quadrature(K, f, rule).head


def f2_apply(K: KernelEvaluator, f: StieltjesFunction, rule: Optional[QuadratureRule] = None) -> np.ndarray:
    return split_by_quadrature(K, f, rule).tail


def kernel_scalars(K: KernelEvaluator, f: StieltjesFunction, z, rule: Optional[QuadratureRule] = None):
    """标量 f1(z), f2(z)；times_z 时返回 z·f1(z), z·f2(z)。"""
    rule = _rule_for(K, f, rule)
    _, _, c1, c2, mass = _integrand_coefficients(K, f, rule)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    resolvent = 1.0 / (z[:, None] + rule.nodes[None, :])
    f1 = resolvent @ (mass * c1)
    f2 = resolvent @ (mass * c2)
    if f.times_z:
        f1, f2 = z * f1, z * f2
    return f1, f2


def check_sign_and_monotonicity(
    K: KernelEvaluator,
    f: StieltjesFunction,
    grid,
    rule: Optional[QuadratureRule] = None,
) -> CheckReport:
    """f1, f2 在网格上符号恒定（(-1)^{m+1}, (-1)^m），且 |f1|, |f2| 单调。

    plain: 非增；times_z: |z f1|, |z f2| 非减。
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 10 or np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ArgumentError("grid must be ascending, positive and have at least 10 points")
    f1, f2 = kernel_scalars(K, f, grid, rule)
    m = K.m
    report = CheckReport(f"sign_monotonicity[m={m}, {f.label}]", details={"m": m, "points": int(grid.size)})

    for name, vals, sign in (("f1", f1, (-1) ** (m + 1)), ("f2", f2, (-1) ** m)):
        for z, v in zip(grid, vals):
            if np.sign(v) != sign:
                report.add(f"sign({name})", float(z), float(v), f"sign {sign:+d}")
        mags = np.abs(vals)
        steps = np.diff(mags)
        slack = 1e-12 * mags[1:]
        for i in np.flatnonzero(steps > slack if not f.times_z else steps < -slack):
            direction = "non-decreasing" if f.times_z else "non-increasing"
            report.add(f"|{name}| monotone", float(grid[i + 1]), float(mags[i + 1]), direction)
    return report


def check_kernel_structure(K: KernelEvaluator, rule: QuadratureRule) -> CheckReport:
    """在所有积分节点上检查 det X 的范围、γ/δ 的 Rayleigh 界、系数符号和衰减。"""
    lo, hi = K.lam_bounds
    t = rule.nodes
    gamma, delta, eps, detx = kernels_at(K, t)
    m = K.m
    beta2 = 1.0 / K.beta_next ** 2
    report = CheckReport(f"kernel_structure[m={m}]", details={"nodes": int(t.size)})

    g0, d0, _, _ = kernels_at(K, 0.0)
    upper = g0 * d0 - beta2
    slack = 1e-10
    for i in np.flatnonzero(detx >= 0):
        report.add("detX < 0", float(t[i]), float(detx[i]))
    for i in np.flatnonzero((detx < -beta2 * (1 + slack)) | (detx > upper + slack * beta2)):
        report.add("detX range", float(t[i]), float(detx[i]), f"[{-beta2!r}, {upper!r}]")

    lower_r, upper_r = 1.0 / (hi + t), 1.0 / (lo + t)
    for name, vals in (("gamma", gamma), ("delta", delta)):
        for i in np.flatnonzero((vals < lower_r * (1 - slack)) | (vals > upper_r * (1 + slack))):
            report.add(f"{name} Rayleigh bounds", float(t[i]), float(vals[i]))

    c1 = (-1) ** (m + 1) * (-delta * eps / detx)
    c2 = (-1) ** m * (eps / (K.beta_next * detx))
    for name, vals in (("signed c1", c1), ("signed c2", c2)):
        for i in np.flatnonzero(vals < 0):
            report.add(f"{name} positive", float(t[i]), float(vals[i]))

    g, d, e, x = kernels_at(K, np.array([1.0, 1e6]))
    c1_pair = np.abs(d * e / x)
    c2_pair = np.abs(e / (K.beta_next * x))
    if c1_pair[1] > c1_pair[0]:
        report.add("c1 decay", 1e6, float(c1_pair[1]), f"<= {c1_pair[0]!r}")
    if c2_pair[1] > c2_pair[0]:
        report.add("c2 decay", 1e6, float(c2_pair[1]), f"<= {c2_pair[0]!r}")
    return report


# 中心差分：阶数 -> (偏移, 系数, 分母里 h 的幂次前的常数)
_FD_STENCILS = {
    0: ((0,), (1.0,), 1.0),
    1: ((1, -1), (1.0, -1.0), 2.0),
    2: ((1, 0, -1), (1.0, -2.0, 1.0), 1.0),
    3: ((2, 1, -1, -2), (1.0, -2.0, 2.0, -1.0), 2.0),
}


def finite_difference(f: StieltjesFunction, z, order: int):
    z = np.asarray(z, dtype=float)
    h = z * 1e-4
    offsets, coeffs, denom = _FD_STENCILS[order]
    total = sum(c * f.closed_form(z + k * h) for k, c in zip(offsets, coeffs))
    return total / (denom * h ** order)


def check_complete_monotonicity(
    f: StieltjesFunction,
    grid,
    max_order: int = 2,
    rule: Optional[QuadratureRule] = None,
) -> CheckReport:
    """(-1)^k f^(k)(z) ≥ 0（plain）；times_z 时检查 f ≥ 0 且 f' ≥ 0，
    f' 同时用 ∫ t/(t+z)² dμ(t) 计算并与差分结果对照。"""
    if not 0 <= max_order <= 3:
        raise ArgumentError(f"max_order must be in 0..3, got {max_order}")
    grid = np.asarray(grid, dtype=float)
    report = CheckReport(f"complete_monotonicity[{f.label}]", details={"max_order": max_order})
    tol = -1e-6

    if not f.times_z:
        for k in range(max_order + 1):
            d = (-1) ** k * finite_difference(f, grid, k)
            for z, v in zip(grid, np.atleast_1d(d)):
                if v < tol:
                    report.add(f"(-1)^{k} f^({k})", float(z), float(v), ">= 0")
        return report

    for z, v in zip(grid, np.atleast_1d(f.closed_form(grid))):
        if v < tol:
            report.add("f", float(z), float(v), ">= 0")
    if rule is None:
        rule = build_quadrature_rule(f, float(grid.min()), float(grid.max()))
    quad = (rule.weights[None, :] * rule.nodes[None, :] / (grid[:, None] + rule.nodes[None, :]) ** 2).sum(axis=1)
    fd = finite_difference(f, grid, 1)
    for z, q, d in zip(grid, quad, np.atleast_1d(fd)):
        if q < tol:
            report.add("f' (quadrature)", float(z), float(q), ">= 0")
        if abs(q - d) > 1e-4 * abs(q):
            report.add("f' quadrature vs difference", float(z), float(q), f"~ {d!r}")
    return report
