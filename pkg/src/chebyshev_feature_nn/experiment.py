"""Experiment suites: 1-D functions, multi-dimensional tables and the ablations."""

import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from .multistage import (
    ComposedModel,
    ScheduleFn,
    StageReport,
    TrainConfig,
    default_schedule,
    fixed_schedule,
    train_multistage,
)
from .network import CfnnArchitecture, FeatureLayer, mse_loss
from .optim import AdamConfig, LbfgsConfig
from .targets import (
    MULTI_DIM_KINDS,
    ONE_D_KINDS,
    Dataset,
    FunctionKind,
    TargetFunction,
    make_equidistant_dataset,
    make_target,
    make_uniform_dataset,
)

logger = logging.getLogger(__name__)

MULTI_DIM_CHOICES = (2, 5, 10, 20)
TABLE_STAGES = (1, 4, 8, 12, 16, 20)
WIDE_RATE = 5.0**-3


def config_hash(snapshot: dict[str, Any]) -> str:
    """Short stable digest of a configuration snapshot."""
    text = json.dumps(snapshot, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


class Suite(StrEnum):
    ONE_D = "oned"
    MULTI_DIM = "multidim"
    ABLATION1 = "ablation1"
    ABLATION2 = "ablation2"


class Scale(StrEnum):
    PAPER = "paper"
    DESK = "desk"


@dataclass
class ExperimentConfig:
    """Settings of one suite run.

    Attributes:
        suite: Which suite to run.
        scale: Full ("paper") or reduced ("desk") budget.
        seed: Run seed; drives datasets, f9 parameters and initialization.
        hidden_layers: Hidden layers L, feature layer included.
        width: Neurons per hidden layer K.
        stages: Networks per multi-stage run S.
        train_points: Training samples.
        test_points: Testing samples.
        adam_epochs: Adam epochs per stage.
        lbfgs_iters: L-BFGS iterations per stage.
        functions: Function ids to run.
        dims: Input dimensions (multi-dimensional suite only).
        feature_layer: First-layer kind.
        jobs: Worker processes for independent cells.
    """

    suite: Suite
    scale: Scale
    seed: int = 0
    hidden_layers: int = 3
    width: int = 40
    stages: int = 4
    train_points: int = 3000
    test_points: int = 10000
    adam_epochs: int = 5000
    lbfgs_iters: int = 20000
    functions: tuple[str, ...] = tuple(str(k) for k in ONE_D_KINDS)
    dims: tuple[int, ...] = (1,)
    feature_layer: FeatureLayer = FeatureLayer.CHEBYSHEV
    jobs: int = 1

    def __post_init__(self) -> None:
        self.suite = Suite(self.suite)
        self.scale = Scale(self.scale)
        self.feature_layer = FeatureLayer(self.feature_layer)
        self.functions = tuple(str(f).lower() for f in self.functions)
        self.dims = tuple(int(d) for d in self.dims)
        for name in (
            "hidden_layers",
            "width",
            "stages",
            "train_points",
            "test_points",
            "adam_epochs",
            "lbfgs_iters",
            "jobs",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        for name in self.functions:
            if name not in {str(k) for k in FunctionKind}:
                raise ValueError(f"unknown function id {name!r}")

    @classmethod
    def for_suite(
        cls, suite: Suite | str, scale: Scale | str, seed: int = 0, **overrides: Any
    ) -> "ExperimentConfig":
        """
        Full or desk-scale defaults for a suite, with optional field overrides.

        Args:
            suite: Suite to configure.
            scale: Budget scale.
            seed: Run seed.
            **overrides: Field values replacing the defaults.
        """
        suite, scale = Suite(suite), Scale(scale)
        desk = scale is Scale.DESK
        values: dict[str, Any] = {
            "adam_epochs": 2000 if desk else 5000,
            "lbfgs_iters": 5000 if desk else 20000,
        }
        if suite is Suite.ONE_D:
            values.update(functions=tuple(str(k) for k in ONE_D_KINDS), stages=4)
        elif suite is Suite.MULTI_DIM:
            values.update(
                hidden_layers=4,
                functions=tuple(str(k) for k in MULTI_DIM_KINDS),
                stages=6 if desk else 20,
                train_points=5000 if desk else 20000,
                test_points=2000 if desk else 10000,
                dims=(2, 5) if desk else MULTI_DIM_CHOICES,
            )
        elif suite is Suite.ABLATION1:
            values.update(
                functions=(str(FunctionKind.F4),),
                stages=4,
                feature_layer=FeatureLayer.TANH,
            )
        else:
            values.update(
                functions=(str(FunctionKind.F4),),
                stages=1,
                width=160,
                lbfgs_iters=5000,
            )
        values.update(overrides)
        return cls(suite=suite, scale=scale, seed=seed, **values)

    @property
    def one_dimensional(self) -> bool:
        return self.suite is not Suite.MULTI_DIM

    def architecture(self, dim: int) -> CfnnArchitecture:
        return CfnnArchitecture(
            input_dim=dim,
            hidden_layers=self.hidden_layers,
            width=self.width,
            feature_layer=self.feature_layer,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            adam=AdamConfig(epochs=self.adam_epochs),
            lbfgs=LbfgsConfig(max_iters=self.lbfgs_iters),
        )

    def schedule_fn(self) -> ScheduleFn:
        if self.suite is Suite.ABLATION2:
            return fixed_schedule(WIDE_RATE)
        return default_schedule

    def snapshot(self) -> dict[str, Any]:
        """JSON-ready copy of every field."""
        data = dataclasses.asdict(self)
        data["suite"] = str(self.suite)
        data["scale"] = str(self.scale)
        data["feature_layer"] = str(self.feature_layer)
        data["functions"] = list(self.functions)
        data["dims"] = list(self.dims)
        del data["jobs"]
        data["lbfgs_budget_unit"] = "iterations"
        return data

    def config_hash(self) -> str:
        return config_hash(self.snapshot())


@dataclass(eq=False)
class CellReport:
    """Result of one (function, dimension) run within a suite.

    Attributes:
        function: Function id.
        dim: Input dimension.
        seed: Run seed.
        scale: Budget scale.
        stages: Per-stage reports.
        wall_time: Seconds spent training.
        stop_reason: Early stop reason of the multi-stage run, if any.
        model: The trained composed model.
    """

    function: str
    dim: int
    seed: int
    scale: Scale
    stages: list[StageReport]
    wall_time: float
    stop_reason: str | None = None
    model: ComposedModel | None = field(default=None, repr=False)

    @property
    def final(self) -> StageReport:
        return self.stages[-1]


@dataclass(eq=False)
class SuiteReport:
    """All cells of one suite run plus the configuration that produced them."""

    config: ExperimentConfig
    cells: list[CellReport]
    wall_time: float

    def cell(self, function: str, dim: int = 1) -> CellReport:
        for cell in self.cells:
            if cell.function == function and cell.dim == dim:
                return cell
        raise KeyError(f"no cell for {function} d={dim}")

    def summary(self) -> dict[str, Any]:
        """JSON summary with the configuration snapshot."""
        cells = []
        for cell in self.cells:
            final = cell.final
            entry: dict[str, Any] = {
                "function": cell.function,
                "dim": cell.dim,
                "seed": cell.seed,
                "scale": str(cell.scale),
                "stages_trained": len(cell.stages),
                "stop_reason": cell.stop_reason,
                "wall_time_s": round(cell.wall_time, 3),
                "final_train_rmse": final.train_rmse,
                "final_test_rmse": final.test_rmse,
                "final_train_max_error": final.train_max_error,
                "final_test_max_error": final.test_max_error,
            }
            if self.config.suite is Suite.MULTI_DIM:
                entry["table"] = {
                    str(s): {
                        "train_rmse": cell.stages[s - 1].train_rmse,
                        "test_rmse": cell.stages[s - 1].test_rmse,
                    }
                    for s in TABLE_STAGES
                    if s <= len(cell.stages)
                }
            cells.append(entry)
        return {
            "suite": str(self.config.suite),
            "scale": str(self.config.scale),
            "seed": self.config.seed,
            "config_hash": self.config.config_hash(),
            "config": self.config.snapshot(),
            "cells": cells,
        }


def rmse(predictions: np.ndarray, truth: np.ndarray) -> float:
    """Root mean squared error, sqrt(mse_loss)."""
    return math.sqrt(mse_loss(predictions, truth))


def rmse_saturated(
    reports: list[StageReport], ratio: float = 10.0, rtol: float = 0.1
) -> bool:
    """
    Check that testing RMSE has saturated.

    Once a stage's training RMSE is below its testing RMSE divided by `ratio`,
    every later stage must change the testing RMSE by less than `rtol`
    relative to the stage before it. Runs without test errors pass trivially.
    """
    saturated = False
    previous: float | None = None
    for report in reports:
        if report.test_rmse is None:
            return True
        if saturated and previous is not None:
            if abs(report.test_rmse - previous) >= rtol * previous:
                return False
        if report.train_rmse < report.test_rmse / ratio:
            saturated = True
        previous = report.test_rmse
    return True


def make_datasets(
    cfg: ExperimentConfig, target: TargetFunction
) -> tuple[Dataset, Dataset]:
    """Training and testing sets; 1-D grids are equidistant, others uniform."""
    if cfg.one_dimensional:
        return (
            make_equidistant_dataset(target, cfg.train_points),
            make_equidistant_dataset(target, cfg.test_points),
        )
    return (
        make_uniform_dataset(target, cfg.train_points, cfg.seed),
        make_uniform_dataset(target, cfg.test_points, cfg.seed + 1),
    )


def run_cell(cfg: ExperimentConfig, function: str, dim: int) -> CellReport:
    """Train one function at one dimension with the suite's settings."""
    target = make_target(function, dim, seed=cfg.seed)
    train, test = make_datasets(cfg, target)
    started = time.perf_counter()
    model, stages = train_multistage(
        target,
        train,
        cfg.stages,
        cfg.train_config(),
        schedule_fn=cfg.schedule_fn(),
        seed=cfg.seed,
        arch=cfg.architecture(dim),
        test=test,
    )
    elapsed = time.perf_counter() - started
    logger.info(
        f"{cfg.suite}/{function} d={dim}: {len(stages)} stages, final train RMSE "
        f"{stages[-1].train_rmse:.4e} in {elapsed:.1f}s"
    )
    return CellReport(
        function=function,
        dim=dim,
        seed=cfg.seed,
        scale=cfg.scale,
        stages=stages,
        wall_time=elapsed,
        stop_reason=model.stop_reason,
        model=model,
    )


def _run_cells(cfg: ExperimentConfig, cells: list[tuple[str, int]]) -> SuiteReport:
    started = time.perf_counter()
    if cfg.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(run_cell, cfg, fn, dim) for fn, dim in cells]
            results = [future.result() for future in futures]
    else:
        results = [run_cell(cfg, fn, dim) for fn, dim in cells]
    return SuiteReport(
        config=cfg, cells=results, wall_time=time.perf_counter() - started
    )


def run_1d_suite(cfg: ExperimentConfig) -> SuiteReport:
    """Multi-stage runs of the one-dimensional functions on equidistant grids."""
    if cfg.suite is not Suite.ONE_D:
        raise ValueError(f"run_1d_suite needs the {Suite.ONE_D} suite, got {cfg.suite}")
    for name in cfg.functions:
        if FunctionKind(name) not in ONE_D_KINDS:
            raise ValueError(f"{name} is not a one-dimensional function")
    return _run_cells(cfg, [(name, 1) for name in cfg.functions])


def run_multidim_suite(cfg: ExperimentConfig) -> SuiteReport:
    """Multi-stage runs of f7..f9 on uniform random points for each dimension."""
    if cfg.suite is not Suite.MULTI_DIM:
        raise ValueError(
            f"run_multidim_suite needs the {Suite.MULTI_DIM} suite, got {cfg.suite}"
        )
    for dim in cfg.dims:
        if dim not in MULTI_DIM_CHOICES:
            raise ValueError(f"dimension {dim} is not one of {MULTI_DIM_CHOICES}")
    for name in cfg.functions:
        if FunctionKind(name) not in MULTI_DIM_KINDS:
            raise ValueError(f"{name} is not a multi-dimensional function")
    return _run_cells(cfg, [(name, dim) for name in cfg.functions for dim in cfg.dims])


def run_ablation(cfg: ExperimentConfig) -> SuiteReport:
    """
    Ablations on f4.

    Case 1 swaps the Chebyshev layer for a Xavier-initialized tanh layer and
    keeps multi-stage training. Case 2 trains a single wide CFNN whose
    frequencies start from Exp(rate 5^-3).
    """
    if cfg.suite not in (Suite.ABLATION1, Suite.ABLATION2):
        raise ValueError(f"run_ablation needs an ablation suite, got {cfg.suite}")
    if cfg.functions != (str(FunctionKind.F4),):
        raise ValueError("ablations run on f4 only")
    if cfg.suite is Suite.ABLATION2 and cfg.stages != 1:
        raise ValueError("the wide single-stage ablation trains exactly 1 stage")
    return _run_cells(cfg, [(str(FunctionKind.F4), 1)])


def run_suite(cfg: ExperimentConfig) -> SuiteReport:
    """Dispatch to the runner of `cfg.suite`."""
    if cfg.suite is Suite.ONE_D:
        return run_1d_suite(cfg)
    if cfg.suite is Suite.MULTI_DIM:
        return run_multidim_suite(cfg)
    return run_ablation(cfg)
