"""图表复现

每个 recipe 是一组实验配置（一个配置对应一幅子图）：
- fig1: A1/A2 × {z^{-1/2}, √z}，主结果和两个中间界
- fig2: A1/A2 上 z^{-1/2} 的误差两部分 ‖head‖、‖tail‖ 及其比值
- fig3: A1/A2 × {z^{-1/2}, √z}，主结果 vs. FOV 界 vs. 谱点集界
- fig4: b 只含第 26..75 个特征向量，主结果 vs. 有效区间的界
- fig5: A3/A4 上的 log(A)（B = A − I），主结果 vs. 有理界 vs. FOV 界

每个配置跑完都会写自己的 CSV；图只画到 err_opt 低于精度下限（1e-12）或 m = M 为止。
输出是 PDF（矢量图），纵轴对数刻度。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

# 无头环境（CI / 容器）下用非交互式后端
import matplotlib

matplotlib.use("Agg")  # noqa: E402

import matplotlib.pyplot as plt  # noqa: E402
import seaborn as sns  # noqa: E402
from tqdm import tqdm  # noqa: E402

from logic.errors import ArgumentError  # noqa: E402
from logic.pipeline import ExperimentResult, read_csv, run_experiment  # noqa: E402
from logic.problems import DEFAULT_SEED, ExperimentConfig, quick_config  # noqa: E402
from utils.logger import get_logger  # noqa: E402
from utils.settings import load_settings  # noqa: E402

logger = get_logger()

DEFAULT_M_MAX = 100

_LABELS = {
    "err_lan": "Lanczos error",
    "err_opt": "optimal error",
    "bound_main_beta": "bound (β, λ_max/λ_min²)",
    "bound_main_kappa": "bound (κ²)",
    "bound_intermediate_ratio": "intermediate (‖head‖/‖tail‖)",
    "bound_intermediate_delta": "intermediate (β δ(0) κ)",
    "bound_fov": "FOV bound",
    "bound_spectrum": "spectrum bound",
    "bound_rational": "rational bound",
    "bound_cg": "CG bound",
    "bound_effective": "effective-interval bound",
    "err_lan_rational": "Lanczos error (rational)",
    "head_norm": "‖x_m − y_m‖",
    "tail_norm": "‖z_{M−m}‖",
}


_cfg = quick_config


def recipe_configs(recipe: str, seed: int = DEFAULT_SEED, m_max: int = DEFAULT_M_MAX) -> List[ExperimentConfig]:
    """recipe 名 -> 实验配置列表。"""
    main = ["main_beta", "main_kappa", "intermediate_ratio", "intermediate_delta"]
    if recipe == "fig1":
        return [
            _cfg(f"fig1_{a}_{f}", a, f, main, seed, m_max)
            for f in ("inv_sqrt", "sqrt")
            for a in ("A1", "A2")
        ]
    if recipe == "fig2":
        return [_cfg(f"fig2_{a}_inv_sqrt", a, "inv_sqrt", ["main_beta"], seed, m_max) for a in ("A1", "A2")]
    if recipe == "fig3":
        return [
            _cfg(f"fig3_{a}_{f}", a, f, ["main_beta", "fov", "spectrum"], seed, m_max)
            for f in ("inv_sqrt", "sqrt")
            for a in ("A1", "A2")
        ]
    if recipe == "fig4":
        return [
            _cfg(f"fig4_{a}_supported", a, "inv_sqrt", ["main_beta", "effective"], seed, m_max, i_lo=26, i_hi=75)
            for a in ("A1", "A2")
        ]
    if recipe == "fig5":
        return [
            _cfg(f"fig5_{a}_log", a, "log_shifted", ["main_beta", "rational", "fov"], seed, m_max)
            for a in ("A3", "A4")
        ]
    raise ArgumentError(f"unknown figure recipe {recipe!r}; expected one of {RECIPES}")


RECIPES = ("fig1", "fig2", "fig3", "fig4", "fig5")


@dataclass
class FigureOutput:
    recipe: str
    results: List[ExperimentResult] = field(default_factory=list)
    plot_path: Optional[Path] = None


def visible_rows(frame: pd.DataFrame) -> pd.DataFrame:
    """截到第一个 floor 行（含）为止，m = M 的全零行不画。"""
    floor = frame.index[frame["floor_flag"].astype(bool)]
    if len(floor):
        frame = frame.loc[: floor[0]]
    return frame[frame["err_opt"] > 0]


def plot_errors(ax, frame: pd.DataFrame, columns: List[str], title: str = "") -> None:
    frame = visible_rows(frame)
    for col in columns:
        if col not in frame or frame[col].isna().all():
            continue
        style = "-" if col.startswith("err") else "--"
        ax.semilogy(frame["m"], frame[col], style, label=_LABELS.get(col, col))
    ax.set_xlabel("m")
    ax.set_ylabel("error")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)


def _error_columns(frame: pd.DataFrame) -> List[str]:
    cols = ["err_lan", "err_opt"] + [c for c in frame.columns if c.startswith("bound_")]
    if "err_lan_rational" in frame:
        cols.append("err_lan_rational")
    return cols


def plot_recipe(recipe: str, results: List[ExperimentResult], path: Path) -> Path:
    sns.set_theme(style="whitegrid")
    n = len(results)
    cols = 2
    rows = (n + cols - 1) // cols
    if recipe == "fig2":
        rows = 2  # 第二行画比值
    fig, axes = plt.subplots(rows, cols, figsize=(5.2 * cols, 3.8 * rows), squeeze=False)

    for i, res in enumerate(results):
        frame = res.frame()
        ax = axes.flat[i]
        if recipe == "fig2":
            plot_errors(ax, frame, ["head_norm", "tail_norm"], res.config.name)
            ratio_ax = axes[1, i]
            vis = visible_rows(frame)
            ratio_ax.plot(vis["m"], vis["component_ratio"], "o-", markersize=2)
            ratio_ax.axhspan(0.5, 2.0, alpha=0.15)
            ratio_ax.set_xlabel("m")
            ratio_ax.set_ylabel("‖head‖ / ‖tail‖")
        else:
            plot_errors(ax, frame, _error_columns(frame), res.config.name)
    for ax in list(axes.flat)[n if recipe != "fig2" else 2 * n :]:
        ax.set_visible(False)

    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def figure(recipe: str, out_dir=None, seed: int = DEFAULT_SEED, m_max: int = DEFAULT_M_MAX) -> FigureOutput:
    """跑一个 recipe 的全部实验，写 CSV 和 PDF。"""
    out = Path(out_dir or load_settings().output_dir) / recipe
    output = FigureOutput(recipe)
    for cfg in tqdm(recipe_configs(recipe, seed, m_max), desc=recipe):
        output.results.append(run_experiment(cfg, out_dir=out))
    output.plot_path = plot_recipe(recipe, output.results, out / f"{recipe}.pdf")
    logger.info(f"{recipe}: {len(output.results)} runs, plot at {output.plot_path}")
    return output


def plot_csv(csv_path, pdf_path=None) -> Path:
    """把一次 run 的 CSV 画成收敛图（run --plot）。"""
    csv_path = Path(csv_path)
    header, frame = read_csv(csv_path)
    pdf_path = Path(pdf_path) if pdf_path else csv_path.with_suffix(".pdf")
    sns.set_theme(style="whitegrid")
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    title = f"{csv_path.stem}  (κ = {float(header.get('kappa', 'nan')):.4g})"
    plot_errors(ax, frame, _error_columns(frame), title)
    fig.tight_layout()
    fig.savefig(pdf_path)
    plt.close(fig)
    return pdf_path


def log_slope(m: np.ndarray, values: np.ndarray) -> float:
    """log10(values) 对 m 的最小二乘斜率。"""
    m = np.asarray(m, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = np.isfinite(values) & (values > 0)
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(m[keep], np.log10(values[keep]), 1)
    return float(slope)


def slope_table(results: List[ExperimentResult], window=(1e-9, 1e-2)) -> Dict[str, Dict[str, float]]:
    """每个 run 在 err_opt ∈ window 区段内各条曲线的对数斜率。"""
    table: Dict[str, Dict[str, float]] = {}
    lo, hi = window
    for res in results:
        frame = res.frame()
        part = frame[(frame["err_opt"] >= lo) & (frame["err_opt"] <= hi)]
        table[res.config.name] = {c: log_slope(part["m"], part[c]) for c in _error_columns(frame) if c in part}
    return table
