"""实验管线

run_experiment(cfg) 的流程：
1) 构造 (A, b, f)，精确解 f(A)b 用谱分解直接算；
2) Lanczos 一直跑到不变指标 M（n = 100 的规模，存下整组基向量没有压力），
   并检查正交性 / Lanczos 关系；
3) 对 m = 1..min(m_max, M)：Lanczos 近似、最优投影、块误差分解、请求的各个界；
4) 写 CSV（# 开头的头部回显配置、seed、摘要、κ、M），旁边写一份 journal。

任何一步失败都包成 ExperimentError，带上出错的 m 和阶段名。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from logic.approx import RationalApproximation, rational_from_quadrature
from logic.bounds import (
    RemezConfig,
    bound_cg,
    bound_fov,
    bound_intermediate,
    bound_main,
    bound_rational,
    bound_spectrum,
    effective_interval,
)
from logic.errors import ConfigError, ExperimentError, KrylovLabError
from logic.krylov import (
    LanczosDecomposition,
    check_lanczos_relation,
    default_breakdown_tol,
    error_split,
    lanczos_approximation,
    lanczos_run,
    optimal_approximation,
)
from logic.linalg import spectral_apply
from logic.problems import ExperimentConfig, Problem, build_problem
from logic.stieltjes import KernelEvaluator, QuadratureRule, build_quadrature_rule, split_by_quadrature
from utils.logger import dump_journal, get_logger, log_action
from utils.settings import canonical_json, config_digest, load_settings

logger = get_logger()

BASE_COLUMNS = [
    "m",
    "beta_next",
    "err_lan",
    "err_opt",
    "ratio_lan_opt",
    "head_norm",
    "tail_norm",
    "component_ratio",
    "floor_flag",
]


def csv_columns(bounds: List[str]) -> List[str]:
    """CSV 的列只由 bounds 列表决定。"""
    cols = BASE_COLUMNS + [f"bound_{name}" for name in bounds]
    if "rational" in bounds:
        cols.append("err_lan_rational")
    return cols


@dataclass
class ConvergenceRecord:
    m: int
    beta_next: float
    err_lan: float
    err_opt: float
    ratio_lan_opt: float
    head_norm: float
    tail_norm: float
    component_ratio: float
    floor_flag: bool
    bounds: Dict[str, float] = field(default_factory=dict)
    err_lan_rational: float = math.nan

    def to_row(self, bounds: List[str]) -> dict:
        row = {c: getattr(self, c) for c in BASE_COLUMNS}
        for name in bounds:
            row[f"bound_{name}"] = self.bounds.get(name, math.nan)
        if "rational" in bounds:
            row["err_lan_rational"] = self.err_lan_rational
        return row


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    problem: Problem
    decomposition: LanczosDecomposition
    exact: np.ndarray
    records: List[ConvergenceRecord]
    header: Dict[str, str]
    csv_path: Optional[Path] = None
    journal: List[dict] = field(default_factory=list)
    rule: Optional[QuadratureRule] = None
    rational: Optional[RationalApproximation] = None

    @property
    def M(self) -> int:
        return self.decomposition.M

    def frame(self) -> pd.DataFrame:
        return records_frame(self.records, self.config.bounds)


def records_frame(records: List[ConvergenceRecord], bounds: List[str]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row(bounds) for r in records], columns=csv_columns(bounds))


class _Stage:
    """记录当前阶段，出错时包装成 ExperimentError。"""

    def __init__(self, run_id: str):
        self.run_id = run_id
        self.name = "setup"
        self.m: Optional[int] = None

    def __call__(self, name: str, m: Optional[int] = None) -> "_Stage":
        self.name, self.m = name, m
        return self

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, ExperimentError):
            return False
        if isinstance(exc, KrylovLabError):
            where = f" at m = {self.m}" if self.m is not None else ""
            raise ExperimentError(f"{self.run_id}: {self.name}{where} failed: {exc}", self.m, self.name, exc) from exc
        return False


def _check_bounds_applicable(cfg: ExperimentConfig, problem: Problem) -> None:
    if "spectrum" in cfg.bounds and problem.spectrum_kind is None:
        raise ConfigError("bound 'spectrum' is only defined for inv_sqrt and sqrt")
    if "cg" in cfg.bounds and not problem.is_inverse:
        raise ConfigError("bound 'cg' applies to the inverse function f = 1/z only")
    if "rational" in cfg.bounds and problem.f.kind == "custom":
        raise ConfigError("bound 'rational' needs a built-in Stieltjes function")


def run_experiment(
    cfg: ExperimentConfig,
    out_dir=None,
    write: bool = True,
    check_invariants: bool = True,
) -> ExperimentResult:
    settings = load_settings()
    run_id = cfg.name
    journal: List[dict] = []
    stage = _Stage(run_id)

    with stage("problem"):
        problem = build_problem(cfg)
        _check_bounds_applicable(cfg, problem)
    A, b, f = problem.A, problem.b, problem.f
    lam_lo, lam_hi, kappa = A.lam_min, A.lam_max, A.kappa

    with stage("exact"):
        exact = spectral_apply(A, f.closed_form, b)
    exact_norm = float(np.linalg.norm(exact))
    log_action(journal, run_id, "EXACT_DONE", {"norm": exact_norm})

    with stage("lanczos"):
        tol = cfg.breakdown_tol if cfg.breakdown_tol is not None else default_breakdown_tol(A, settings.breakdown_scale)
        L = lanczos_run(A, b, A.n, tol)
        M = L.M
        if check_invariants:
            check_lanczos_relation(A, L, M)
    log_action(journal, run_id, "LANCZOS_DONE", {"M": M, "breakdown_tol": tol})
    logger.info(f"[{run_id}] n = {A.n}, kappa = {kappa:.6g}, invariance index M = {M}")

    m_stop = min(cfg.m_max, M)
    remez_cfg = RemezConfig(grid_points=cfg.remez_grid)
    wants = set(cfg.bounds)

    rule = None
    if wants & {"intermediate_ratio", "intermediate_delta"} and M > 1:
        with stage("quadrature"):
            rel_tol = cfg.quad_rel_tol if cfg.quad_rel_tol is not None else settings.quad_rel_tol
            rule = build_quadrature_rule(f, lam_lo, lam_hi, rel_tol)
        log_action(journal, run_id, "QUADRATURE_DONE", {"nodes": rule.size, "evaluations": rule.evaluations})

    eff = None
    if "effective" in wants:
        with stage("effective_interval"):
            eff = effective_interval(A.eigen_coefficients(b), A.eigenvalues, cfg.effective_drop_tol)

    rational = exact_r = None
    if "rational" in wants:
        with stage("rational"):
            rational = rational_from_quadrature(f, cfg.rational_degree, lam_lo, lam_hi)
            exact_r = spectral_apply(A, rational.function.closed_form, b)

    def err_opt_rational(k: int) -> float:
        if k == 0:
            return float(np.linalg.norm(exact_r))
        return optimal_approximation(L, exact_r, k)[1]

    floor = settings.precision_floor * exact_norm
    records: List[ConvergenceRecord] = []
    for m in range(1, m_stop + 1):
        with stage("approximation", m):
            beta = L.beta_next(m)
            if m == M:
                # f_M = f(A)b：误差按 0 记，比值不计算
                err_lan = err_opt = head = tail = 0.0
            else:
                err_lan = float(np.linalg.norm(exact - lanczos_approximation(L, f, m)))
                err_opt = optimal_approximation(L, exact, m)[1]
                split = error_split(L, f, m)
                head, tail = split.head_norm, split.tail_norm
        at_floor = err_opt < floor
        skip_ratio = at_floor or m == M
        rec = ConvergenceRecord(
            m=m,
            beta_next=beta,
            err_lan=err_lan,
            err_opt=err_opt,
            ratio_lan_opt=math.nan if skip_ratio else err_lan / err_opt,
            head_norm=head,
            tail_norm=tail,
            component_ratio=math.nan if skip_ratio or tail == 0 else head / tail,
            floor_flag=bool(at_floor),
        )

        with stage("bounds", m):
            main_beta, main_kappa = bound_main(beta, lam_lo, lam_hi, err_opt)
            rec.bounds["main_beta"] = main_beta.value
            rec.bounds["main_kappa"] = main_kappa.value
            if wants & {"intermediate_ratio", "intermediate_delta"}:
                ratio_b = delta_b = math.nan
                if not skip_ratio:
                    K = KernelEvaluator.from_lanczos(L, m, (lam_lo, lam_hi))
                    split_q = split_by_quadrature(K, f, rule)
                    b51, b52 = bound_intermediate(K, f, None, kappa, err_opt, rule, split_q)
                    ratio_b, delta_b = b51.value, b52.value
                rec.bounds["intermediate_ratio"] = ratio_b
                rec.bounds["intermediate_delta"] = delta_b
            # Remez 界只算到精度下限
            if "fov" in wants:
                rec.bounds["fov"] = math.nan if at_floor else bound_fov(f.closed_form, lam_lo, lam_hi, m, remez_cfg).value
            if "spectrum" in wants:
                kind = problem.spectrum_kind
                rec.bounds["spectrum"] = math.nan
                if not at_floor and (kind == "sqrt" or m >= 2):
                    rec.bounds["spectrum"] = bound_spectrum(kind, A.eigenvalues, kappa, m, remez_cfg).value
            if "cg" in wants:
                rec.bounds["cg"] = bound_cg(kappa, err_opt).value
            if "effective" in wants:
                rec.bounds["effective"] = bound_main(beta, eff[0], eff[1], err_opt)[0].value
            if "rational" in wants:
                if m >= rational.min_m:
                    rec.bounds["rational"] = bound_rational(
                        rational.poles, lam_lo, lam_hi, err_opt_rational, m, rational.numerator_degree
                    ).value
                lan_r = lanczos_approximation(L, rational.function, m)
                rec.err_lan_rational = 0.0 if m == M else float(np.linalg.norm(exact_r - lan_r))

        records.append(rec)
        log_action(journal, run_id, "RECORD", {"m": m, "err_lan": err_lan, "err_opt": err_opt}, level="DEBUG")

    header = _header(cfg, problem, M, rational, eff)
    result = ExperimentResult(cfg, problem, L, exact, records, header, None, journal, rule, rational)
    if write:
        out = Path(out_dir or cfg.output or settings.output_dir)
        result.csv_path = write_csv(result, out / f"{cfg.name}.csv")
        log_action(journal, run_id, "CSV_WRITTEN", {"path": str(result.csv_path)})
        dump_journal(journal, out / f"{cfg.name}.journal.jsonl")
    return result


def _header(cfg: ExperimentConfig, problem: Problem, M: int, rational, eff) -> Dict[str, str]:
    payload = cfg.model_dump(mode="json")
    header = {
        "config": canonical_json(payload),
        "seed": str(cfg.b.seed),
        "digest": config_digest(payload),
        "function": problem.f.label,
        "shift": repr(problem.shift),
        "kappa": repr(problem.A.kappa),
        "invariance_index": str(M),
    }
    if rational is not None:
        header["rational_max_rel_error"] = repr(rational.max_rel_error)
    if eff is not None:
        header["effective_interval"] = f"{eff[0]!r},{eff[1]!r}"
    return header


def write_csv(result: ExperimentResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = result.frame()
    with path.open("w", encoding="utf-8", newline="") as fh:
        for key, value in result.header.items():
            fh.write(f"# {key}: {value}\n")
        frame.to_csv(fh, index=False, lineterminator="\n")
    logger.info(f"[{result.config.name}] wrote {len(frame)} records to {path}")
    return path


def read_csv(path) -> Tuple[Dict[str, str], pd.DataFrame]:
    """读回 write_csv 的输出：(头部字典, 数据表)。"""
    path = Path(path)
    header: Dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(": ")
            header[key] = value
    frame = pd.read_csv(path, comment="#")
    return header, frame
