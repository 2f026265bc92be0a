"""数值默认值与配置摘要

默认值的解析顺序和原来的数据库配置一致：
1) 优先用环境变量（KRYLOV_OUT_DIR / KRYLOV_QUAD_REL_TOL），方便 CI 或服务器上改参数；
2) 其次用项目根目录下的 settings.toml；
3) 两边都没有就用代码里的内置值。

另外提供 config_digest / check_digest：对实验配置的规范 JSON 做 SHA256，
写进 CSV 头部，用来确认“同一配置 => 同一结果文件”。
"""

import hashlib
import json
import os
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import toml

from utils.logger import get_logger

logger = get_logger()

PROJECT_ROOT = Path(__file__).resolve().parent.parent
SETTINGS_FILE = PROJECT_ROOT / "settings.toml"


@dataclass(frozen=True)
class Settings:
    quad_rel_tol: float = 1e-12
    quad_budget: int = 1_000_000
    remez_grid: int = 4096
    remez_max_iter: int = 100
    remez_floor: float = 1e-13
    breakdown_scale: float = 1e-12
    precision_floor: float = 1e-12
    output_dir: str = "results"


def _from_toml(path: Path) -> dict:
    if not path.exists():
        return {}
    try:
        data = toml.load(path)
    except Exception as e:
        logger.warning(f"读取 {path} 失败，使用内置默认值: {e}")
        return {}
    merged = {}
    for section in ("quadrature", "remez", "lanczos", "output"):
        merged.update(data.get(section, {}))
    return merged


@lru_cache(maxsize=None)
def load_settings(path: str = str(SETTINGS_FILE)) -> Settings:
    """读取默认值；结果缓存，进程内只解析一次。"""
    values = _from_toml(Path(path))
    known = {k: v for k, v in values.items() if k in Settings.__dataclass_fields__}
    settings = Settings(**known)

    if "KRYLOV_OUT_DIR" in os.environ:
        settings = replace(settings, output_dir=os.environ["KRYLOV_OUT_DIR"])
    if "KRYLOV_QUAD_REL_TOL" in os.environ:
        settings = replace(settings, quad_rel_tol=float(os.environ["KRYLOV_QUAD_REL_TOL"]))
    return settings


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_digest(payload: dict) -> str:
    """SHA256 摘要"""
    return hashlib.sha256(str.encode(canonical_json(payload))).hexdigest()


def check_digest(payload: dict, digest: str) -> bool:
    """摘要校验"""
    return config_digest(payload) == digest
