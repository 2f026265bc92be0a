"""统一异常层级

所有数值模块（linalg / krylov / stieltjes / bounds / approx）以及实验管线
都只抛出这里定义的异常，这样 app.py 可以按类别映射到退出码：

- ConfigError                    -> 2
- 数值失败（不收敛、奇异、精度不足） -> 3
- 校验失败（verify）               -> 1
"""

from __future__ import annotations

from typing import Any, List, Optional


class KrylovLabError(Exception):
    """项目内所有异常的基类。"""


class ConfigError(KrylovLabError):
    """实验配置无效（未知矩阵、空支撑集、字段越界等）。"""


class ArgumentError(KrylovLabError, ValueError):
    """参数不在允许范围内。"""


class PreconditionError(ArgumentError):
    """调用前提不满足（例如 b 不是单位向量）。"""


class DomainError(KrylovLabError, ValueError):
    """函数在某个点上无定义或取非有限值。"""

    def __init__(self, message: str, value: Optional[float] = None):
        super().__init__(message)
        self.value = value


class SingularityError(KrylovLabError, ArithmeticError):
    """三对角消元遇到非正主元：说明正定性被破坏。"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class ConvergenceFailure(KrylovLabError, ArithmeticError):
    """特征值求解在迭代上限内未收敛。"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class AccuracyError(KrylovLabError, ArithmeticError):
    """积分在评估预算内未达到要求精度，携带当前估计值。"""

    def __init__(self, message: str, estimate: Any = None):
        super().__init__(message)
        self.estimate = estimate


class LuckyBreakdownError(KrylovLabError):
    """beta_{m+1} 低于阈值：Krylov 空间已不变，辅助核函数无意义。"""


class RemezConvergenceError(KrylovLabError, ArithmeticError):
    """Remez 交换达到迭代上限，携带目前最好的结果。"""

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


class DegeneracyError(KrylovLabError, ArithmeticError):
    """Remez 的等值线性方程组奇异。"""


class InvariantViolation(KrylovLabError, AssertionError):
    """结构性质校验失败，failures 中是 (位置, 量名, 数值) 形式的记录。"""

    def __init__(self, message: str, failures: Optional[List[dict]] = None):
        super().__init__(message)
        self.failures = failures or []


class ExperimentError(KrylovLabError):
    """实验管线中的失败，记录出错的迭代步 m 和阶段名。"""

    def __init__(self, message: str, m: Optional[int] = None, stage: str = "", cause: Optional[BaseException] = None):
        super().__init__(message)
        self.m = m
        self.stage = stage
        self.cause = cause


NUMERICAL_ERRORS = (
    AccuracyError,
    RemezConvergenceError,
    ConvergenceFailure,
    DegeneracyError,
    SingularityError,
)


class CheckReport:
    """结构性质检查的结果：ok / failures / details。"""

    def __init__(self, name: str, failures: Optional[List[dict]] = None, details: Optional[dict] = None):
        self.name = name
        self.failures = list(failures or [])
        self.details = dict(details or {})

    @property
    def ok(self) -> bool:
        return not self.failures

    def add(self, quantity: str, at: Any, value: Any, expected: str = "") -> None:
        self.failures.append({"quantity": quantity, "at": at, "value": value, "expected": expected})

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "failures": self.failures[:20], "details": self.details}

    def __repr__(self) -> str:
        return f"CheckReport({self.name!r}, ok={self.ok}, failures={len(self.failures)})"
