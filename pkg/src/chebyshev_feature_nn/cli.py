"""Command line interface: train, eval, suite, losscurve and dataset subcommands."""

import argparse
import logging
import sys
import tomllib
from pathlib import Path
from typing import Any, NoReturn, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .experiment import (
    CellReport,
    ExperimentConfig,
    Scale,
    Suite,
    config_hash,
    make_datasets,
    run_cell,
    run_suite,
)
from .modelfile import RunMetadata, deserialize_model, serialize_model
from .multistage import StageTrainingError
from .reports import (
    composed_loss_history,
    dataset_csv,
    loss_curve_csv,
    predictions_csv,
    stage_reports_csv,
    write_all,
    write_suite_report,
)
from .targets import (
    ONE_D_KINDS,
    FunctionKind,
    check_domain,
    make_target,
    read_points_csv,
)
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class UsageError(Exception):
    """Bad command line or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


class ConfigFile(BaseModel):
    """Optional TOML settings; CLI flags take precedence over these."""

    model_config = ConfigDict(extra="forbid")

    seed: int | None = Field(default=None, ge=0)
    scale: Scale | None = None
    stages: int | None = Field(default=None, ge=1)
    adam_epochs: int | None = Field(default=None, ge=1)
    lbfgs_iters: int | None = Field(default=None, ge=1)
    width: int | None = Field(default=None, ge=1)
    hidden_layers: int | None = Field(default=None, ge=2)
    train_points: int | None = Field(default=None, ge=2)
    test_points: int | None = Field(default=None, ge=2)
    functions: list[str] | None = None
    dims: list[int] | None = None
    jobs: int | None = Field(default=None, ge=1)


OVERRIDE_FIELDS = (
    "stages",
    "adam_epochs",
    "lbfgs_iters",
    "width",
    "hidden_layers",
    "train_points",
    "test_points",
    "functions",
    "dims",
    "jobs",
)


def _load_config_file(path: Path | None) -> ConfigFile:
    if path is None:
        return ConfigFile()
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise UsageError(f"cannot read config file {path}: {e}") from None
    try:
        return ConfigFile.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise UsageError(f"malformed config file {path}: {where}: {first['msg']}")


def _resolve(args: argparse.Namespace) -> tuple[int, Scale, dict[str, Any]]:
    """Seed, scale and overrides with flags > config file > defaults."""
    file_cfg = _load_config_file(args.config)
    seed = args.seed if args.seed is not None else (file_cfg.seed or 0)
    scale = Scale(args.scale or file_cfg.scale or Scale.DESK)
    overrides: dict[str, Any] = {}
    for name in OVERRIDE_FIELDS:
        value = getattr(args, name, None)
        if value is None:
            value = getattr(file_cfg, name)
        if value is not None:
            overrides[name] = tuple(value) if isinstance(value, list) else value
    return seed, scale, overrides


def _experiment_for_function(
    args: argparse.Namespace,
) -> tuple[ExperimentConfig, str, int]:
    try:
        kind = FunctionKind(args.fn.lower())
    except ValueError:
        raise UsageError(f"unknown function id {args.fn!r}") from None
    seed, scale, overrides = _resolve(args)
    overrides.pop("functions", None)
    overrides.pop("dims", None)
    overrides.pop("jobs", None)
    dim = args.dim
    if kind in ONE_D_KINDS:
        if dim != 1:
            raise UsageError(f"{kind} is one-dimensional; got --dim {dim}")
        suite = Suite.ONE_D
    else:
        suite = Suite.MULTI_DIM
    cfg = ExperimentConfig.for_suite(
        suite, scale, seed, functions=(str(kind),), dims=(dim,), **overrides
    )
    return cfg, str(kind), dim


def _run_name(function: str, dim: int, cfg: ExperimentConfig) -> str:
    return f"{function}_d{dim}_{cfg.scale}_seed{cfg.seed}"


def _train_cell(args: argparse.Namespace) -> tuple[ExperimentConfig, CellReport]:
    cfg, function, dim = _experiment_for_function(args)
    logger.info(f"Training {function} d={dim} at {cfg.scale} scale, seed {cfg.seed}")
    return cfg, run_cell(cfg, function, dim)


def cmd_train(args: argparse.Namespace) -> int:
    cfg, cell = _train_cell(args)
    assert cell.model is not None
    name = _run_name(cell.function, cell.dim, cfg)
    metadata = RunMetadata(
        function=cell.function,
        seed=cfg.seed,
        scale=str(cfg.scale),
        adam_epochs=cfg.adam_epochs,
        lbfgs_iterations=cfg.lbfgs_iters,
        stages_requested=cfg.stages,
    )
    write_all(
        {
            args.out / f"{name}.model.json": serialize_model(cell.model, metadata),
            args.out / f"{name}_stages.csv": stage_reports_csv(
                cell.stages, cfg.seed, cfg.config_hash()
            ),
        }
    )
    return EXIT_OK


def cmd_losscurve(args: argparse.Namespace) -> int:
    cfg, cell = _train_cell(args)
    name = _run_name(cell.function, cell.dim, cfg)
    history = composed_loss_history(cell.stages)
    write_all(
        {
            args.out / f"{name}_loss.csv": loss_curve_csv(
                history, cfg.seed, cfg.config_hash()
            )
        }
    )
    return EXIT_OK


def cmd_dataset(args: argparse.Namespace) -> int:
    cfg, function, dim = _experiment_for_function(args)
    train, test = make_datasets(cfg, make_target(function, dim, seed=cfg.seed))
    name = _run_name(function, dim, cfg)
    digest = cfg.config_hash()
    write_all(
        {
            args.out / f"{name}_train.csv": dataset_csv(train, cfg.seed, digest),
            args.out / f"{name}_test.csv": dataset_csv(test, cfg.seed, digest),
        }
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    data = Path(args.model).read_bytes()
    model = deserialize_model(data)
    if args.points is not None:
        points = read_points_csv(args.points)
    else:
        if model.arch.input_dim != 1:
            raise UsageError("--grid needs a 1-D model; use --points for d > 1")
        if args.grid < 2:
            raise UsageError("--grid needs at least 2 points")
        points = np.linspace(-1.0, 1.0, args.grid)[:, np.newaxis]
    if points.shape[1] != model.arch.input_dim:
        raise UsageError(
            f"points have {points.shape[1]} columns, model expects "
            f"{model.arch.input_dim}"
        )
    check_domain(points)
    predictions = model.predict(points)
    stem = Path(args.model).name.removesuffix(".json").removesuffix(".model")
    digest = config_hash({"model": stem, "points": points.shape[0]})
    write_all(
        {
            args.out / f"{stem}_predictions.csv": predictions_csv(
                points, predictions, args.seed, digest
            )
        }
    )
    return EXIT_OK


def cmd_suite(args: argparse.Namespace) -> int:
    seed, scale, overrides = _resolve(args)
    cfg = ExperimentConfig.for_suite(args.name, scale, seed, **overrides)
    report = run_suite(cfg)
    write_suite_report(report, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    common.add_argument(
        "--scale", choices=[s.value for s in Scale], default=None, help="budget"
    )
    common.add_argument("--out", type=Path, default=Path("."), help="output dir")
    common.add_argument("--config", type=Path, default=None, help="TOML settings")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--debug", action="store_true")

    budget = _Parser(add_help=False)
    budget.add_argument("--stages", type=int, default=None)
    budget.add_argument("--adam-epochs", dest="adam_epochs", type=int, default=None)
    budget.add_argument("--lbfgs-iters", dest="lbfgs_iters", type=int, default=None)
    budget.add_argument("--width", type=int, default=None)
    budget.add_argument(
        "--hidden-layers", dest="hidden_layers", type=int, default=None
    )
    budget.add_argument("--train-points", dest="train_points", type=int, default=None)
    budget.add_argument("--test-points", dest="test_points", type=int, default=None)

    parser = _Parser(
        prog="cfnn", description="Chebyshev feature neural network experiments"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, handler, help_text in (
        ("train", cmd_train, "train one function, write model and stage CSV"),
        ("losscurve", cmd_losscurve, "train one function, write its loss history"),
        ("dataset", cmd_dataset, "write the training and testing sets"),
    ):
        cmd = sub.add_parser(name, parents=[common, budget], help=help_text)
        cmd.add_argument("--fn", required=True, help="function id f1..f9")
        cmd.add_argument("--dim", type=int, default=1)
        cmd.set_defaults(handler=handler)

    evaluate = sub.add_parser("eval", parents=[common], help="evaluate a model file")
    evaluate.add_argument("--model", type=Path, required=True)
    source = evaluate.add_mutually_exclusive_group()
    source.add_argument("--grid", type=int, default=1000)
    source.add_argument("--points", type=Path, default=None)
    evaluate.set_defaults(handler=cmd_eval)

    suite = sub.add_parser("suite", parents=[common, budget], help="run a suite")
    suite.add_argument("--name", required=True, choices=[s.value for s in Suite])
    suite.add_argument("--jobs", type=int, default=None)
    suite.add_argument("--functions", nargs="+", default=None)
    suite.add_argument("--dims", nargs="+", type=int, default=None)
    suite.set_defaults(handler=cmd_suite)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if getattr(args, "verbose", False):
        level = logging.INFO
    if getattr(args, "debug", False):
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def cli_main(argv: Sequence[str] | None = None) -> int:
    """
    Run the command line.

    Returns:
        0 on success, 1 on usage or input errors, 2 on training failures.
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"cfnn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _configure_logging(args)
    try:
        return args.handler(args)
    except UsageError as e:
        print(f"cfnn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except StageTrainingError as e:
        print(f"cfnn: training failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, OSError) as e:
        print(f"cfnn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.debug("unhandled failure", exc_info=True)
        print(f"cfnn: failed: {e}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(cli_main())
