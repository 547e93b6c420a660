"""Command line interface.

Subcommands:
  run           execute one or more scenario JSON files
  verify-suite  run the built-in cross-module verification suite
  ls-fit        run only the equilibrium sampling + exponent regression

Exit codes: 0 success, 1 assertion failure, 2 blow-up, 3 bad usage or config.
The GRAINFLOW_LOG environment variable (error | info | debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import ConfigError, parse_config
from .runner import run_ls_fit, run_scenario, verify_suite

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_BLOW_UP = 2
EXIT_CONFIG = 3

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _setup_logging() -> None:
    name = os.environ.get("GRAINFLOW_LOG", "error").strip().lower()
    level = _LOG_LEVELS.get(name)
    if level is None:
        print(f"grainflow: unknown GRAINFLOW_LOG value {name!r}; using 'error'", file=sys.stderr)
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _cmd_run(args) -> int:
    configs = []
    for path in args.configs:
        cfg = parse_config(path)
        if args.out is not None:
            stem = os.path.splitext(os.path.basename(path))[0]
            out = args.out if len(args.configs) == 1 else os.path.join(args.out, stem)
            cfg = cfg.with_overrides(output_dir=out)
        cfg = cfg.with_overrides(seed=args.seed)
        configs.append((path, cfg))

    workers = max(1, args.parallel_sweeps)
    if workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(lambda pc: run_scenario(pc[1])[0], configs))
    else:
        codes = [run_scenario(cfg)[0] for _, cfg in configs]

    for (path, cfg), code in zip(configs, codes):
        status = {0: "ok", 1: "ASSERTION FAILED", 2: "BLOW-UP"}.get(code, "error")
        print(f"{path}: {status} (exit {code}, artifacts in {cfg.output_dir})")
    return max(codes)


def _cmd_ls_fit(args) -> int:
    cfg = parse_config(args.config)
    cfg = cfg.with_overrides(output_dir=args.out, seed=args.seed)
    code, summary = run_ls_fit(cfg)
    fit = summary.get("ls_fit")
    if fit is not None:
        print(
            f"theta = {fit['theta']:.6f}  slope = {fit['slope']:.6f}  "
            f"C2 = {fit['c_constant']:.6g}  r^2 = {fit['r_squared']:.8f}  "
            f"({fit['n_points']} points, equilibrium alpha = {fit['alpha_bar']:.12g})"
        )
    status = "ok" if code == 0 else "ASSERTION FAILED"
    print(f"{args.config}: {status} (exit {code}, artifacts in {cfg.output_dir})")
    return code


def main(argv=None) -> int:
    parser = _Parser(
        prog="grainflow",
        description="Curvature-driven interface flow with a coupled orientation scalar: "
        "simulation, diagnostics and inequality verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario JSON files")
    p_run.add_argument("configs", nargs="+", metavar="CONFIG", help="scenario JSON file(s)")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None, help="RNG seed override")
    p_run.add_argument(
        "--parallel-sweeps",
        type=int,
        default=1,
        metavar="N",
        help="run up to N configs concurrently",
    )

    p_suite = sub.add_parser("verify-suite", help="run the built-in verification suite")
    p_suite.add_argument("--seed", type=int, default=42)
    p_suite.add_argument("--profile", choices=("quick", "full"), default="quick")
    p_suite.add_argument("--out", default="grainflow-verify", help="suite output directory")

    p_ls = sub.add_parser("ls-fit", help="equilibrium gradient-inequality fit only")
    p_ls.add_argument("config", metavar="CONFIG")
    p_ls.add_argument("--out", default=None, help="output directory override")
    p_ls.add_argument("--seed", type=int, default=None, help="RNG seed override")

    args = parser.parse_args(argv)
    _setup_logging()
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify-suite":
            return verify_suite(seed=args.seed, profile=args.profile, out_dir=args.out)
        return _cmd_ls_fit(args)
    except ConfigError as e:
        print(f"grainflow: config error [{e.code}]: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
