import argparse
import logging
import sys
import uuid
from pathlib import Path
from typing import Dict, List, Optional

from cncompact.config import load_config, normalize
from cncompact.errors import ConfigError
from cncompact.experiments import EXPERIMENTS, run_experiment, summarize, write_outputs

logger = logging.getLogger("cncompact")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2

# flag dest -> config key
FLAG_KEYS = {
    "alpha1": "ALPHA1",
    "alpha2": "ALPHA2",
    "c": "C",
    "xl": "XL",
    "xr": "XR",
    "zl": "ZL",
    "zr": "ZR",
    "T": "T",
    "dz_list": "DZ_LIST",
    "dv_list": "DV_LIST",
    "domain_coords": "DOMAIN_COORDS",
    "dense_cap": "DENSE_CAP",
    "out": "OUTPUT_DIR",
    "seed": "SEED",
    "workers": "WORKERS",
    "norm_method": "NORM_METHOD",
    "log_level": "LOG_LEVEL",
    "N": "N",
    "M": "M",
    "levels": "LEVELS",
    "study": "STUDY",
    "steps": "PROBE_STEPS",
    "oracle_k": "ORACLE_K",
    "b": "B",
    "fig_dz": "FIG_DZ",
    "alpha1_range": "ALPHA1_RANGE",
    "alpha2_range": "ALPHA2_RANGE",
}


class ArgumentParser(argparse.ArgumentParser):
    """Reports bad arguments as ConfigError so they exit with EXIT_CONFIG."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="cncompact",
        description="Crank-Nicolson compact scheme: stability and condition-number experiments",
    )
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS), help="experiment to run")
    parser.add_argument("--config", default=None, help="config file (.json or key=value lines)")

    problem = parser.add_argument_group("problem")
    problem.add_argument("--alpha1", default=None)
    problem.add_argument("--alpha2", default=None)
    problem.add_argument("--c", default=None, help="canonical coefficient; excludes --alpha1/--alpha2")
    problem.add_argument("--xl", default=None)
    problem.add_argument("--xr", default=None)
    problem.add_argument("--zl", default=None)
    problem.add_argument("--zr", default=None)
    problem.add_argument("--T", default=None)
    problem.add_argument("--domain-coords", choices=["z", "x"], default=None)

    sweep = parser.add_argument_group("sweep")
    sweep.add_argument("--dz-list", default=None, help="comma list, fractions allowed, e.g. 1/8,1/16")
    sweep.add_argument("--dv-list", default=None)
    sweep.add_argument("--dense-cap", default=None)
    sweep.add_argument("--norm-method", choices=["auto", "power", "lanczos", "dense"], default=None)
    sweep.add_argument("--fig-dz", default=None)
    sweep.add_argument("--alpha1-range", default=None, help="start:stop:step")
    sweep.add_argument("--alpha2-range", default=None, help="start:stop:step")
    sweep.add_argument("--workers", default=None)

    stepping = parser.add_argument_group("time stepping")
    stepping.add_argument("--N", default=None)
    stepping.add_argument("--M", default=None)
    stepping.add_argument("--levels", default=None)
    stepping.add_argument("--study", choices=["spatial", "temporal"], default=None)
    stepping.add_argument("--steps", default=None)
    stepping.add_argument("--oracle-k", default=None)
    stepping.add_argument("--b", default=None)

    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", default=None)
    parser.add_argument("--log-level", default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> Dict[str, object]:
    if args.c is not None and (args.alpha1 is not None or args.alpha2 is not None):
        raise ConfigError("--c 与 --alpha1/--alpha2 不能同时使用")
    cfg = load_config(args.config)
    overrides = {key: getattr(args, dest) for dest, key in FLAG_KEYS.items() if getattr(args, dest) is not None}
    cfg.update(normalize(overrides))
    if cfg.get("C") is None and not cfg["ALPHA1"]:
        raise ConfigError("alpha1 不能为 0（或改用 --c）")
    if cfg["WORKERS"] < 1:
        raise ConfigError(f"WORKERS 至少为 1，收到 {cfg['WORKERS']}")
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"配置错误: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(level=str(cfg["LOG_LEVEL"]).upper())
    run_id = uuid.uuid4().hex
    logger.info("[run] run_id=%s experiment=%s workers=%s", run_id, args.experiment, cfg["WORKERS"])

    try:
        result = run_experiment(args.experiment, cfg)
    except ValueError as exc:
        print(f"配置错误: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(str(cfg["OUTPUT_DIR"]))
    try:
        csv_path, meta_path = write_outputs(result, cfg, out_dir)
    except OSError as exc:
        print(f"无法写入输出目录 {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info("[run] run_id=%s cells=%s failed=%s csv=%s", run_id, len(result.cells), result.failed, csv_path)
    print(summarize(result))
    print(f"CSV: {csv_path}")
    print(f"meta: {meta_path}")
    return EXIT_PARTIAL if result.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
