"""
leno command-line entry point.

Usage:
    leno eig --config kpp.json
    leno gen --config kpp.json --seed 0 --threads 8
    leno project --config kpp.json
    leno train --config kpp.json --seed 0 --plot
    leno eval --config kpp.json
    leno predict --config kpp.json --horizon 30
    leno transfer --config disease.json --seed 1 --synthetic-alpha 2.0
    leno repro kpp-criteria --threads 8

Exit codes: 0 success, 1 invalid input or failed run, 2 acceptance threshold violated.
"""

from __future__ import annotations

import argparse
import sys

from loguru import logger
from pydantic import ValidationError as PydanticValidationError
from rich.markup import escape

from kiro_leno.operator_learning.cli.commands import HANDLERS, Context, console
from kiro_leno.operator_learning.config import ExperimentConfig, get_config
from kiro_leno.operator_learning.errors import LenoError, ThresholdError
from kiro_leno.operator_learning.logs import configure_logging

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_THRESHOLD = 2

# flag -> config key
NAMED_OVERRIDES = {
    "problem": "problem.name",
    "samples": "data.samples",
    "record_dt": "data.record_dt",
    "modes": "basis.modes",
    "hidden": "model.hidden",
    "epochs": "training.epochs",
    "lr": "training.lr",
    "loss_mode": "training.loss_mode",
    "train_horizon": "horizons.train",
    "eval_horizon": "horizons.eval",
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (UTF-8 JSON or YAML)")
    common.add_argument("--seed", type=int, help="random seed (required for gen and train)")
    common.add_argument("--threads", type=int, help="worker cap for data generation")
    common.add_argument("--out", help="run directory for every artifact without an explicit path")
    common.add_argument("--force-dt", action="store_true", help="accept an unstable solver step")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")
    common.add_argument("--json-logs", action="store_true", help="one JSON object per log line")

    overrides = common.add_argument_group("config overrides")
    overrides.add_argument("--problem")
    overrides.add_argument("--samples", type=int)
    overrides.add_argument("--record-dt", type=float)
    overrides.add_argument("--modes", "--P", type=int, dest="modes")
    overrides.add_argument("--hidden", type=int, nargs="+")
    overrides.add_argument("--epochs", type=int)
    overrides.add_argument("--lr", type=float)
    overrides.add_argument("--loss-mode", choices=["combined", "data-only", "residual-only"])
    overrides.add_argument("--train-horizon", type=int)
    overrides.add_argument("--eval-horizon", type=int)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leno", description="Laplacian eigenfunction neural operator experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    sub.add_parser("eig", parents=[common], help="build and store the eigenbasis")
    sub.add_parser("gen", parents=[common], help="generate reference trajectories")
    sub.add_parser("project", parents=[common], help="project trajectories onto the basis")
    sub.add_parser("train", parents=[common], help="train the coefficient network")
    sub.add_parser("eval", parents=[common], help="compute E_L2, E_Res and E_Nonlinear")

    p_predict = sub.add_parser("predict", parents=[common], help="roll out a trained model")
    p_predict.add_argument("--horizon", type=int, help="number of steps to predict")
    p_predict.add_argument("--sample", type=int, default=0, help="trajectory whose initial state is used")

    p_transfer = sub.add_parser("transfer", parents=[common], help="adapt a trained model to a new subject")
    p_transfer.add_argument("--base-model", help="trained model container (defaults to paths.model)")
    p_transfer.add_argument("--dataset", help="subject dataset container")
    p_transfer.add_argument("--synthetic-alpha", type=float, help="generate synthetic subjects with this time scale")

    p_repro = sub.add_parser("repro", parents=[common], help="run a named experiment against its thresholds")
    p_repro.add_argument("name", nargs="?", help="experiment name")
    p_repro.add_argument("--list", action="store_true", help="list available experiments")
    return parser


def resolve_config(args: argparse.Namespace, out_default) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    assignments = []
    for flag, key in NAMED_OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            assignments.append(f"{key}={value}")
    assignments += args.set
    if args.out:
        assignments.append(f"paths.out={args.out}")
    elif "out" not in config.paths.model_fields_set:
        assignments.append(f"paths.out={out_default}")
    return config.with_overrides(assignments)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_config()
        configure_logging(args.log_level or settings.log_level, args.json_logs or settings.log_json)
        config = resolve_config(args, settings.out_dir)
        return HANDLERS[args.command](Context(config=config, settings=settings, args=args))
    except ThresholdError as e:
        console.print(f"[bold red]threshold violated:[/] {escape(str(e))}")
        return EXIT_THRESHOLD
    except (LenoError, PydanticValidationError, FileNotFoundError) as e:
        logger.debug(f"{type(e).__name__}: {e}")
        console.print(f"[bold red]error:[/] {escape(str(e))}", highlight=False)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
