"""最佳一致逼近

- remez_discrete：有限点集上的多项式极小极大逼近（Remez 多点交换），
  多项式用覆盖区间上的 Chebyshev 基表示
- remez_interval：把区间离散成 Chebyshev 网格后交给 remez_discrete
- rational_from_quadrature：用 ℓ 点 Gauss 型积分离散 Stieltjes 积分，
  得到极点全部在负实轴上的部分分式 r(z) = Σ σ_i/(z+t_i)

双精度下低于 remez_floor（默认 1e-13，相对 max|f|）的极小极大误差只标记为 floor，
不参与比较；交换在 floor 附近失效（方程组病态或迭代到上限）时同样按 floor 返回，不报错。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from logic.errors import ArgumentError, DegeneracyError, RemezConvergenceError
from logic.stieltjes import StieltjesFunction, make_stieltjes
from utils.logger import get_logger
from utils.settings import load_settings

logger = get_logger()

LEVEL_TOL = 1e-10


@dataclass(frozen=True)
class MinimaxResult:
    degree: int
    coefficients: np.ndarray  # Chebyshev 系数，变量已缩放到 interval
    interval: Tuple[float, float]
    minimax_error: float
    reference_set: np.ndarray
    iterations: int
    level: float = 0.0  # 等值方程组的 |h|
    floor: bool = False
    history: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)  # 每轮 (下界, 上界)

    def __call__(self, x):
        return C.chebval(_to_unit(np.asarray(x, dtype=float), self.interval), self.coefficients)

    def residual(self, f: Callable, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(f(x), dtype=float) - self(x)

    def alternations(self, f: Callable) -> int:
        """参考点上残差的符号交替次数 + 1（即交替点个数）。"""
        r = self.residual(f, self.reference_set)
        signs = np.sign(r[r != 0])
        if signs.size == 0:
            return 0
        return int(1 + np.count_nonzero(signs[1:] != signs[:-1]))


def _to_unit(x: np.ndarray, interval: Tuple[float, float]) -> np.ndarray:
    a, b = interval
    if b == a:
        return np.zeros_like(x)
    return (2.0 * x - a - b) / (b - a)


def _initial_reference(s: np.ndarray, size: int) -> np.ndarray:
    """离 Chebyshev 极值点最近的 size 个下标，去重后用最近的未用点补齐。"""
    extrema = np.cos(np.pi * np.arange(size) / (size - 1))[::-1]
    chosen: List[int] = []
    for e in extrema:
        order = np.argsort(np.abs(s - e), kind="stable")
        for idx in order:
            if int(idx) not in chosen:
                chosen.append(int(idx))
                break
    return np.array(sorted(chosen))


def _levelled_solve(V: np.ndarray, fvals: np.ndarray) -> Tuple[np.ndarray, float]:
    n = V.shape[0]
    signs = (-1.0) ** np.arange(n)
    system = np.column_stack([V, signs])
    try:
        sol = np.linalg.solve(system, fvals)
    except np.linalg.LinAlgError as e:
        raise DegeneracyError(f"levelled Remez system is singular: {e}") from e
    if not np.all(np.isfinite(sol)) or np.linalg.cond(system) > 1e14:
        raise DegeneracyError("levelled Remez system is numerically singular")
    return sol[:-1], float(sol[-1])


def _sign_runs(r: np.ndarray) -> List[int]:
    """把残差按符号分段，每段取 |r| 最大的下标。"""
    picks: List[int] = []
    current_sign, best = 0.0, -1
    for i, v in enumerate(r):
        s = math.copysign(1.0, v) if v != 0 else current_sign
        if s != current_sign and best >= 0:
            picks.append(best)
            best = -1
        current_sign = s
        if best < 0 or abs(v) > abs(r[best]):
            best = i
    if best >= 0:
        picks.append(best)
    return picks


def _multiple_exchange(r: np.ndarray, size: int) -> Optional[np.ndarray]:
    picks = _sign_runs(r)
    if len(picks) < size:
        return None
    top = int(np.argmax(np.abs(r)))
    while len(picks) > size:
        # 从两端去掉较小的一个，但不能去掉全局最大点
        if picks[0] == top:
            picks.pop()
        elif picks[-1] == top:
            picks.pop(0)
        elif abs(r[picks[0]]) < abs(r[picks[-1]]):
            picks.pop(0)
        else:
            picks.pop()
    return np.array(picks)


def _single_exchange(r: np.ndarray, ref: np.ndarray) -> np.ndarray:
    top = int(np.argmax(np.abs(r)))
    if top in ref:
        return ref
    ref = list(ref)
    same = lambda i: np.sign(r[i]) == np.sign(r[top])  # noqa: E731
    if top < ref[0]:
        if same(ref[0]):
            ref[0] = top
        else:
            ref = [top] + ref[:-1]
    elif top > ref[-1]:
        if same(ref[-1]):
            ref[-1] = top
        else:
            ref = ref[1:] + [top]
    else:
        j = int(np.searchsorted(ref, top)) - 1
        if same(ref[j]):
            ref[j] = top
        else:
            ref[j + 1] = top
    return np.array(ref)


def remez_discrete(
    f: Callable,
    points,
    degree: int,
    max_iter: Optional[int] = None,
) -> MinimaxResult:
    """有限点集上次数 ≤ degree 的最佳一致多项式逼近。

    点数不超过 degree+1 时直接插值（误差为 0）。否则从 Chebyshev 极值点附近
    的 degree+2 个点出发，反复解等值方程组、按残差的符号段做多点交换，
    直到 max|r| ≤ (1+1e-10)|h|。
    """
    settings = load_settings()
    max_iter = settings.remez_max_iter if max_iter is None else int(max_iter)
    if degree < 0:
        raise ArgumentError(f"degree must be nonnegative, got {degree}")
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ArgumentError("points must be a non-empty 1-D array")
    if np.any(np.diff(x) <= 0):
        raise ArgumentError("points must be distinct and ascending")

    interval = (float(x[0]), float(x[-1]))
    s = _to_unit(x, interval)
    fx = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise ArgumentError("function is not finite on the point set")

    if x.size <= degree + 1:
        coef = C.chebfit(s, fx, x.size - 1) if x.size > 1 else np.array([fx[0]])
        coef = np.concatenate([coef, np.zeros(degree + 1 - coef.size)])
        return MinimaxResult(degree, coef, interval, 0.0, x.copy(), 0)

    size = degree + 2
    V_all = C.chebvander(s, degree)
    floor_level = settings.remez_floor * max(1.0, float(np.max(np.abs(fx))))
    ref = _initial_reference(s, size)
    history: List[Tuple[float, float]] = []
    best: Optional[MinimaxResult] = None

    for it in range(1, max_iter + 1):
        try:
            coef, h = _levelled_solve(V_all[ref], fx[ref])
        except DegeneracyError:
            floored = _floor_result(V_all, fx, x, degree, interval, floor_level, best, it)
            if floored is None:
                raise
            return floored
        r = fx - V_all @ coef
        err = float(np.max(np.abs(r)))
        lower = float(np.min(np.abs(r[ref])))
        history.append((lower, err))
        result = MinimaxResult(degree, coef, interval, err, x[ref].copy(), it, abs(h), err <= floor_level, tuple(history))
        if best is None or err < best.minimax_error:
            best = result

        if err <= (1.0 + LEVEL_TOL) * abs(h) or err <= floor_level:
            logger.debug(f"remez d={degree}: {it} iterations, error {err:.3e}")
            return result

        new_ref = _multiple_exchange(r, size)
        if new_ref is None:
            new_ref = _single_exchange(r, ref)
        if np.array_equal(new_ref, ref):
            # 交换不再改变参考集，残差的最大值已经在参考集上
            return result
        ref = new_ref

    floored = _floor_result(V_all, fx, x, degree, interval, floor_level, best, max_iter)
    if floored is not None:
        return floored
    raise RemezConvergenceError(
        f"Remez exchange did not level within {max_iter} iterations (degree {degree})", best=best
    )


def _floor_result(
    V: np.ndarray,
    fx: np.ndarray,
    x: np.ndarray,
    degree: int,
    interval: Tuple[float, float],
    floor_level: float,
    best: Optional[MinimaxResult],
    iterations: int,
) -> Optional[MinimaxResult]:
    """交换失败时，如果最小二乘拟合（或已有的最好结果）已在 floor 以下，按 floor 返回。"""
    if best is not None and best.minimax_error <= floor_level:
        return MinimaxResult(
            degree, best.coefficients, interval, best.minimax_error, best.reference_set,
            iterations, best.level, True, best.history,
        )
    coef = np.linalg.lstsq(V, fx, rcond=None)[0]
    err = float(np.max(np.abs(fx - V @ coef)))
    if not err <= floor_level:
        return None
    logger.debug(f"remez d={degree}: exchange broke down at the floor, least-squares error {err:.3e}")
    history = best.history if best is not None else tuple()
    return MinimaxResult(degree, coef, interval, err, x.copy(), iterations, 0.0, True, history)


def chebyshev_grid(a: float, b: float, count: int) -> np.ndarray:
    """[a, b] 上含端点的 Chebyshev 极值点网格（升序）。"""
    k = np.arange(count)
    x = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * k / (count - 1))
    x[0], x[-1] = a, b
    return x


def remez_interval(
    f: Callable,
    a: float,
    b: float,
    degree: int,
    grid_points: Optional[int] = None,
) -> MinimaxResult:
    """[a, b] 上的极小极大误差，按 grid_points 个 Chebyshev 点离散。

    离散带来的误差大约是 O(((b−a)/grid_points)²)，默认网格 4096 点。
    """
    grid_points = load_settings().remez_grid if grid_points is None else int(grid_points)
    if not b > a > 0:
        raise ArgumentError(f"need b > a > 0, got [{a!r}, {b!r}]")
    if grid_points < 10 * (degree + 2):
        raise ArgumentError(f"grid of {grid_points} points is too coarse for degree {degree}")
    return remez_discrete(f, chebyshev_grid(a, b, grid_points), degree)


# ---------------------------------------------------------------------------
# 由积分得到的有理逼近
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RationalApproximation:
    function: StieltjesFunction  # partial_fraction，transform 与原函数相同
    max_rel_error: float
    interval: Tuple[float, float]

    @property
    def poles(self) -> np.ndarray:
        """r 的极点 −t_i（全部 ≤ 0）。"""
        return -self.function.poles

    @property
    def degree(self) -> int:
        return int(self.function.poles.size)

    @property
    def numerator_degree(self) -> int:
        # z·Σ σ_i/(z+t_i) 的分子次数是 ℓ，普通部分分式是 ℓ−1
        return self.degree if self.function.times_z else self.degree - 1

    @property
    def min_m(self) -> int:
        """有理界适用的最小迭代步 max(k, ℓ−1)。"""
        return max(self.numerator_degree, self.degree - 1)


def _nodes_for(f: StieltjesFunction, ell: int, c: float) -> Tuple[np.ndarray, np.ndarray]:
    if f.kind == "inv_power":
        # t = c(1+u)/(1−u) 后 t^{-α} dt 的奇性正好是 Jacobi 权 (1−u)^{α−1}(1+u)^{−α}
        alpha = f.alpha
        u, w = roots_jacobi(ell, alpha - 1.0, -alpha)
        t = c * (1.0 + u) / (1.0 - u)
        sigma = math.sin(alpha * math.pi) / math.pi * 2.0 * c ** (1.0 - alpha) * w / (1.0 - u)
        return t, sigma
    u, w = leggauss(ell)
    lo = f.support[0]
    t = lo + c * (1.0 + u) / (1.0 - u)
    sigma = w * 2.0 * c / (1.0 - u) ** 2 * f.density(t)
    return t, sigma


def rational_from_quadrature(
    f: StieltjesFunction,
    ell: int,
    lam_lo: float,
    lam_hi: float,
    grid_points: int = 200,
) -> RationalApproximation:
    """ℓ 点 Gauss 型积分离散 μ，返回 r(z) = Σ σ_i/(z+t_i)（times_z 时为 z·Σ σ_i/(z+t_i)）。

    精度不够只记在 max_rel_error 里，不报错。
    """
    if ell < 1:
        raise ArgumentError(f"ell must be at least 1, got {ell}")
    if not 0 < lam_lo <= lam_hi:
        raise ArgumentError(f"need 0 < lam_lo <= lam_hi, got [{lam_lo!r}, {lam_hi!r}]")
    if f.is_discrete:
        return RationalApproximation(f, 0.0, (lam_lo, lam_hi))

    c = math.sqrt(lam_lo * lam_hi)
    t, sigma = _nodes_for(f, ell, c)
    keep = sigma > 0
    r = make_stieltjes("partial_fraction", f.transform, weights=sigma[keep], poles=t[keep])

    grid = np.geomspace(lam_lo, lam_hi, grid_points)
    exact = f.closed_form(grid)
    rel = float(np.max(np.abs(r.closed_form(grid) - exact) / np.abs(exact)))
    logger.info(f"rational approximant of {f.label} with {ell} poles: max relative error {rel:.2e}")
    return RationalApproximation(r, rel, (lam_lo, lam_hi))
