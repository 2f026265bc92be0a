"""实验配置与测试问题

配置文件是一个 JSON 对象，用 pydantic 校验：

    {
      "name": "a1_inv_sqrt",
      "matrix":   {"kind": "A1"},
      "function": {"kind": "inv_sqrt"},
      "b":        {"kind": "gaussian", "seed": 42},
      "m_max": 60,
      "bounds": ["main_beta", "main_kappa", "intermediate_ratio", "intermediate_delta"]
    }

测试矩阵：
- A1 = diag(1, 2, ..., 100)
- A2 = diag(η_i)，η_i = 1 + 99·(1 − ρ^{(i−1)/99})/(1 − ρ)，ρ = 0.001
- A3 = 1.1 到 110 的 100 个等距点
- A4 = 同一个 η 公式，端点换成 1.1 和 110

随机向量：numpy 的 PCG64(seed) 产生均匀数，再用 Box–Muller 变成正态分布，
最后归一化。算法固定在这里，同一个 seed 得到逐位相同的向量。
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from logic.bounds import BOUND_NAMES
from logic.errors import ConfigError
from logic.linalg import SpectralMatrix
from logic.stieltjes import StieltjesFunction, make_stieltjes

RHO = 0.001
DEFAULT_N = 100

BoundName = Literal[
    "main_beta",
    "main_kappa",
    "intermediate_ratio",
    "intermediate_delta",
    "fov",
    "spectrum",
    "rational",
    "cg",
    "effective",
]
assert set(BoundName.__args__) == set(BOUND_NAMES)


class MatrixSpec(BaseModel):
    kind: Literal["A1", "A2", "A3", "A4", "diag", "custom"]
    path: Optional[str] = None  # diag：每行一个特征值
    n: int = Field(DEFAULT_N, ge=1)  # custom
    lo: Optional[float] = None
    hi: Optional[float] = None
    spacing: Literal["linear", "geometric"] = "linear"

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "diag" and not self.path:
            raise ValueError("matrix kind 'diag' needs a path")
        if self.kind == "custom":
            if self.lo is None or self.hi is None or not 0 < self.lo <= self.hi:
                raise ValueError("custom matrix needs 0 < lo <= hi")
        return self


class FunctionSpec(BaseModel):
    kind: Literal["inv_power", "inv_sqrt", "sqrt", "log1p_over_z", "log_shifted", "partial_fraction", "inverse"]
    alpha: Optional[float] = None
    path: Optional[str] = None  # partial_fraction：两列 (σ_i, t_i)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "inv_power" and self.alpha is None:
            raise ValueError("inv_power needs alpha")
        if self.kind == "partial_fraction" and not self.path:
            raise ValueError("partial_fraction needs a path")
        return self


class VectorSpec(BaseModel):
    kind: Literal["gaussian", "gaussian_supported", "file"] = "gaussian"
    seed: int = Field(0, ge=0)
    i_lo: Optional[int] = None  # 1 起，闭区间
    i_hi: Optional[int] = None
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "gaussian_supported" and (self.i_lo is None or self.i_hi is None):
            raise ValueError("gaussian_supported needs i_lo and i_hi")
        if self.kind == "file" and not self.path:
            raise ValueError("vector kind 'file' needs a path")
        return self


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    matrix: MatrixSpec
    function: FunctionSpec
    b: VectorSpec = Field(default_factory=VectorSpec)
    m_max: int = Field(100, ge=1)
    bounds: List[BoundName] = Field(default_factory=lambda: ["main_beta", "main_kappa"])
    quad_rel_tol: Optional[float] = Field(None, gt=0, lt=1e-2)  # None: settings.toml / KRYLOV_QUAD_REL_TOL
    breakdown_tol: Optional[float] = Field(None, ge=0)
    remez_grid: Optional[int] = Field(None, ge=10)
    rational_degree: int = Field(10, ge=1)
    effective_drop_tol: float = Field(0.0, ge=0)
    output: Optional[str] = None


def load_config(path) -> ExperimentConfig:
    """读取 JSON 配置；文件或语法问题转成 ConfigError，字段问题交给 pydantic 报 ValidationError。"""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {p} is not valid JSON: {e}") from e
    return ExperimentConfig.model_validate(data)


def eta_spectrum(lo: float, hi: float, n: int = DEFAULT_N, rho: float = RHO) -> np.ndarray:
    """η_i = lo + (hi − lo)(1 − ρ^{(i−1)/(n−1)})/(1 − ρ)"""
    if n == 1:
        return np.array([lo])
    s = np.arange(n) / (n - 1)
    return lo + (hi - lo) * (1.0 - rho ** s) / (1.0 - rho)


def build_matrix(spec: MatrixSpec) -> SpectralMatrix:
    if spec.kind == "A1":
        return SpectralMatrix.diagonal(np.arange(1, DEFAULT_N + 1, dtype=float))
    if spec.kind == "A2":
        return SpectralMatrix.diagonal(eta_spectrum(1.0, 100.0))
    if spec.kind == "A3":
        return SpectralMatrix.diagonal(np.linspace(1.1, 110.0, DEFAULT_N))
    if spec.kind == "A4":
        return SpectralMatrix.diagonal(eta_spectrum(1.1, 110.0))
    if spec.kind == "diag":
        try:
            values = np.atleast_1d(np.loadtxt(spec.path, dtype=float))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read eigenvalues from {spec.path}: {e}") from e
        if values.size == 0 or np.any(values <= 0):
            raise ConfigError(f"{spec.path}: eigenvalues must be positive and non-empty")
        return SpectralMatrix.diagonal(values)
    if spec.kind == "custom":
        space = np.geomspace if spec.spacing == "geometric" else np.linspace
        return SpectralMatrix.diagonal(space(spec.lo, spec.hi, spec.n))
    raise ConfigError(f"unknown matrix kind {spec.kind!r}")


def box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    """count 个标准正态数：(u1, u2) -> √(−2 ln u1)·(cos 2πu2, sin 2πu2)。"""
    pairs = (count + 1) // 2
    u = rng.random((pairs, 2))
    u1 = 1.0 - u[:, 0]  # (0, 1]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u[:, 1]
    z = np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()
    return z[:count]


def build_vector(spec: VectorSpec, n: int) -> np.ndarray:
    """单位向量 b（特征基下的坐标）。"""
    if spec.kind == "file":
        try:
            b = np.atleast_1d(np.loadtxt(spec.path, dtype=float))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read vector from {spec.path}: {e}") from e
        if b.shape != (n,):
            raise ConfigError(f"{spec.path}: vector has {b.size} entries, matrix has dimension {n}")
    else:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        b = box_muller(rng, n)
        if spec.kind == "gaussian_supported":
            if not 1 <= spec.i_lo <= spec.i_hi <= n:
                raise ConfigError(f"support [{spec.i_lo}, {spec.i_hi}] is empty or outside 1..{n}")
            mask = np.zeros(n, dtype=bool)
            mask[spec.i_lo - 1 : spec.i_hi] = True
            b = np.where(mask, b, 0.0)
    norm = float(np.linalg.norm(b))
    if norm == 0.0:
        raise ConfigError("vector is zero; cannot normalize")
    return b / norm


def build_function(spec: FunctionSpec) -> StieltjesFunction:
    kind = spec.kind
    if kind == "inv_power":
        return make_stieltjes("inv_power", alpha=spec.alpha)
    if kind == "inv_sqrt":
        return make_stieltjes("inv_power", alpha=0.5)
    if kind == "sqrt":
        return make_stieltjes("inv_power", "times_z", alpha=0.5)
    if kind == "log1p_over_z":
        return make_stieltjes("log1p_over_z")
    if kind == "log_shifted":
        # log(A) = log(1 + B)，B = A − I
        return make_stieltjes("log1p_over_z", "times_z")
    if kind == "inverse":
        return make_stieltjes("partial_fraction", weights=[1.0], poles=[0.0])
    if kind == "partial_fraction":
        try:
            table = np.atleast_2d(np.loadtxt(spec.path, dtype=float))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read partial fractions from {spec.path}: {e}") from e
        if table.shape[1] != 2:
            raise ConfigError(f"{spec.path}: expected two columns (weight, pole)")
        return make_stieltjes("partial_fraction", weights=table[:, 0], poles=table[:, 1])
    raise ConfigError(f"unknown function kind {kind!r}")


@dataclass(frozen=True)
class Problem:
    """一次实验真正用到的 (A, b, f)；log_shifted 时 A 已经换成 B = A − I。"""

    A: SpectralMatrix
    b: np.ndarray
    f: StieltjesFunction
    shift: float = 0.0

    @property
    def spectrum_kind(self) -> Optional[str]:
        """能用谱点集界的函数：z^{-1/2} 或 √z。"""
        if self.f.kind == "inv_power" and self.f.alpha == 0.5:
            return "sqrt" if self.f.times_z else "inv_sqrt"
        return None

    @property
    def is_inverse(self) -> bool:
        f = self.f
        return f.is_discrete and not f.times_z and f.poles.size == 1 and f.poles[0] == 0.0 and f.weights[0] == 1.0


def build_problem(cfg: ExperimentConfig) -> Problem:
    A = build_matrix(cfg.matrix)
    b = build_vector(cfg.b, A.n)
    f = build_function(cfg.function)
    shift = 1.0 if cfg.function.kind == "log_shifted" else 0.0
    if shift:
        if A.lam_min <= shift:
            raise ConfigError(f"log_shifted needs lambda_min > 1, got {A.lam_min!r}")
        A = A.shifted(shift)
    return Problem(A, b, f, shift)


DEFAULT_SEED = 42


def quick_config(
    name: str,
    matrix: str,
    function: str,
    bounds: List[str],
    seed: int = DEFAULT_SEED,
    m_max: int = 100,
    **b_kw,
) -> ExperimentConfig:
    """图表 recipe 和 verify 共用的简写；给了 i_lo/i_hi 就用 gaussian_supported。"""
    b = VectorSpec(kind="gaussian_supported" if b_kw else "gaussian", seed=seed, **b_kw)
    return ExperimentConfig(
        name=name,
        matrix=MatrixSpec(kind=matrix),
        function=FunctionSpec(kind=function),
        b=b,
        m_max=m_max,
        bounds=bounds,
    )
