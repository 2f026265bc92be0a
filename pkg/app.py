"""命令行入口

    python app.py run --config configs/a1_inv_sqrt.json [--out results] [--m-max 60] [--seed 7] [--plot]
    python app.py figure fig1 [--out results]
    python app.py verify [--filter epsilon] [--report verify.json]

退出码：0 成功；1 校验失败；2 配置错误；3 数值失败（积分 / Remez 不收敛等）。
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from logic.errors import NUMERICAL_ERRORS, ArgumentError, ConfigError, ExperimentError, KrylovLabError
from utils.logger import get_logger, set_verbose

logger = get_logger()

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ExperimentError) and exc.cause is not None:
        return _exit_code(exc.cause)
    if isinstance(exc, (ConfigError, ValidationError, ArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, NUMERICAL_ERRORS):
        return EXIT_NUMERICAL
    # 其余（定义域、不变量被破坏等）也按数值失败处理
    return EXIT_NUMERICAL


def cmd_run(args) -> int:
    from logic.pipeline import run_experiment
    from logic.problems import ExperimentConfig, load_config

    cfg = load_config(args.config)
    data = cfg.model_dump()
    if args.m_max is not None:
        data["m_max"] = args.m_max
    if args.out is not None:
        data["output"] = args.out
    if args.seed is not None:
        data["b"]["seed"] = args.seed
    # 命令行覆盖值也要过一遍 pydantic 校验
    cfg = ExperimentConfig.model_validate(data)

    result = run_experiment(cfg)
    print(f"{cfg.name}: {len(result.records)} records, M = {result.M}, csv: {result.csv_path}")
    if args.plot:
        from logic.figures import plot_csv

        print(f"plot: {plot_csv(result.csv_path)}")
    return EXIT_OK


def cmd_figure(args) -> int:
    from logic.figures import figure

    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.m_max is not None:
        kwargs["m_max"] = args.m_max
    output = figure(args.recipe, out_dir=args.out, **kwargs)
    print(f"{args.recipe}: {len(output.results)} runs, plot: {output.plot_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from logic.verify import verify

    report = verify(args.filter, progress=not args.quiet)
    text = report.to_json()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    if not report.results:
        logger.warning(f"no criterion matches {args.filter!r}")
    return EXIT_OK if report.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Lanczos f(A)b for Stieltjes functions: runs, figures, verification")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True, help="path to the experiment JSON")
    run.add_argument("--out", default=None, help="output directory (overrides the config)")
    run.add_argument("--m-max", type=int, default=None, help="maximum iteration count")
    run.add_argument("--seed", type=int, default=None, help="seed for the random vector b")
    run.add_argument("--plot", action="store_true", help="also write a PDF convergence plot")
    run.set_defaults(func=cmd_run)

    fig = sub.add_parser("figure", help="reproduce a figure recipe")
    fig.add_argument("recipe", choices=["fig1", "fig2", "fig3", "fig4", "fig5"])
    fig.add_argument("--out", default=None, help="output directory")
    fig.add_argument("--seed", type=int, default=None)
    fig.add_argument("--m-max", type=int, default=None)
    fig.set_defaults(func=cmd_figure)

    ver = sub.add_parser("verify", help="run invariant suites and acceptance criteria")
    ver.add_argument("--filter", default=None, help="substring or glob selecting criteria")
    ver.add_argument("--report", default=None, help="also write the JSON summary to this file")
    ver.add_argument("--quiet", action="store_true", help="no progress bar")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_verbose(args.verbose)
    try:
        return args.func(args)
    except (KrylovLabError, ValidationError) as e:
        code = _exit_code(e)
        logger.error(f"{type(e).__name__}: {e}")
        return code


if __name__ == "__main__":
    sys.exit(main())
