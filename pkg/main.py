import argparse
import logging
import sys

import dotenv
import pandas as pd

from controllers import ExperimentRunner, threads_from_env
from models import ConfigError, ExperimentConfig, PreconditionError, VarhorseError

logger = logging.getLogger("ExperimentRunner")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="artifact directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: VARHORSE_THREADS or 1)")


def _add_stage_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stage", type=int, default=1, help="schedule stage supplying rho and s (1-based)")
    parser.add_argument("--rho", type=float, default=None, help="override the stage rho")
    parser.add_argument("--s", type=int, default=None, help="override the stage s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varhorse",
                                     description="Variable-time horseshoes approximating ergodic measures")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full convergence experiment")
    _add_run_flags(run)

    certify = sub.add_parser("certify-branch", help="certify one hyperbolic branch")
    _add_run_flags(certify)
    _add_stage_flags(certify)
    certify.add_argument("--z", type=float, nargs=2, default=None, metavar=("X", "Y"), help="base point")
    certify.add_argument("--m", type=int, default=None, help="return time at the base point")

    refine = sub.add_parser("refine", help="refine a stage horseshoe into depth-n cylinders")
    _add_run_flags(refine)
    _add_stage_flags(refine)
    refine.add_argument("--depth", type=int, required=True)

    sweep = sub.add_parser("measure-sweep", help="check every periodic measure up to a word length")
    _add_run_flags(sweep)
    _add_stage_flags(sweep)
    sweep.add_argument("--max-word-len", type=int, required=True)

    report = sub.add_parser("report", help="tabulate summaries under a directory")
    report.add_argument("directory")
    report.add_argument("--first", type=int, default=1, help="first stage to include")
    report.add_argument("--last", type=int, default=10 ** 9, help="last stage to include")
    report.add_argument("--worst", type=int, default=None, metavar="N",
                        help="list the N periodic measures farthest from the reference instead")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    threads = args.threads
    if threads is None:
        try:
            threads = threads_from_env(config.threads)
        except PreconditionError as e:
            raise ConfigError("VARHORSE_THREADS", str(e))
    return config.with_overrides(seed=args.seed, out=args.out, threads=threads)


def _stage_parameters(config: ExperimentConfig, args: argparse.Namespace):
    if not 1 <= args.stage <= len(config.schedule):
        raise ConfigError("--stage", f"must lie in 1..{len(config.schedule)}")
    rho, s = config.schedule[args.stage - 1]
    return (args.rho if args.rho is not None else rho), (args.s if args.s is not None else s)


def main(argv=None) -> int:
    dotenv.load_dotenv()
    args = build_parser().parse_args(argv)

    if args.command == "report":
        if args.worst is not None:
            table, empty = ExperimentRunner.worst_measures(args.directory, args.worst), "No measures found."
        else:
            table, empty = ExperimentRunner.report(args.directory, args.first, args.last), "No stages found."
        with pd.option_context("display.max_rows", None, "display.width", 200):
            print(table.to_string(index=False) if not table.empty else empty)
        return 0

    try:
        config = _load_config(args)
        runner = ExperimentRunner(config)
        if args.command == "run":
            status, _ = runner.run()
            return status
        rho, s = _stage_parameters(config, args)
        if args.command == "certify-branch":
            branch = runner.certify_branch(rho, s, args.z, args.m, args.stage)
            print(f"Certified branch m={branch.m} at {branch.base_point.coordinates}")
        elif args.command == "refine":
            refinement = runner.refine(args.depth, rho, s, args.stage)
            print(f"Depth {refinement.depth}: widths {refinement.max_diameters}")
        elif args.command == "measure-sweep":
            rows = runner.measure_sweep(args.max_word_len, rho, s, args.stage)
            failed = [r for r in rows if not r.passed]
            print(f"{len(rows)} periodic measures checked, {len(failed)} outside O(3rho, s)")
            return 1 if failed else 0
        return 0
    except ConfigError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return 2
    except VarhorseError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
