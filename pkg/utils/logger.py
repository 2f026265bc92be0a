"""日志与运行日志（journal）

这里分两层：
1) 控制台日志：方便开发时看运行情况（logging logger）。
2) 运行日志：实验管线的每个阶段写一条结构化记录，
   最后和 CSV 放在一起（<name>.journal.jsonl），记录“哪次运行在什么时候做了什么”。

注意：CSV 需要逐字节可复现，所以时间戳只写进 journal，不进 CSV。
"""

import json
import logging
from datetime import datetime
from pathlib import Path

# --- 1. 系统级日志配置 (控制台输出) ---
# 防止重复配置：pytest 或多次 import 时模块可能被重复加载。
logger = logging.getLogger("Krylov_Lab")
if not logger.handlers:
    logger.setLevel(logging.INFO)
    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    # 输出到控制台
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)


def get_logger():
    """获取系统日志记录器"""
    return logger


def set_verbose(verbose: bool) -> None:
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


# --- 2. 运行日志 (journal) ---
def log_action(journal, run_id, action_type, details=None, level="INFO"):
    """
    记录一次实验阶段到 journal
    :param journal: 记录列表 (list)；为 None 时只报错不抛异常
    :param run_id: 运行标识 (实验名)
    :param action_type: 动作类型 (如 LANCZOS_DONE, RECORD, CSV_WRITTEN)
    :param details: 详细信息 (字典或字符串)
    :param level: 日志级别 (INFO, WARN, ERROR)
    """
    # 这里不 raise：journal 只是旁路记录，写不进去不应该让实验本身失败
    if journal is None:
        logger.error("无法写入运行日志：journal 为空")
        return

    entry = {
        "timestamp": datetime.now().isoformat(timespec="seconds"),
        "run_id": run_id,
        "action": action_type,
        "level": level,
        "details": details or {},
    }

    try:
        journal.append(entry)
        logger.debug(f"[{run_id}] {action_type}: {details}")
    except Exception as e:
        logger.error(f"写入运行日志失败: {e}")


def dump_journal(journal, path) -> Path:
    """把 journal 写成 JSON Lines 文件。"""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for entry in journal:
            fh.write(json.dumps(entry, ensure_ascii=False, default=str) + "\n")
    return path
