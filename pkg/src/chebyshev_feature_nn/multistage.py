"""Multi-stage residual training and the composed predictor."""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .network import (
    CfnnArchitecture,
    CfnnParams,
    NetworkObjective,
    forward,
    init_params,
    mse_loss,
)
from .optim import AdamConfig, LbfgsConfig, OptimTrace, run_adam, run_lbfgs
from .targets import Dataset, TargetFunction, check_domain

logger = logging.getLogger(__name__)

BASE_RATE = 5.0


class StageTrainingError(RuntimeError):
    """Training of one stage failed; carries the stage index."""

    def __init__(self, stage_index: int, message: str, function: str | None = None):
        self.stage_index = stage_index
        self.function = function
        self.detail = message
        prefix = f"{function} " if function else ""
        super().__init__(f"{prefix}stage {stage_index}: {message}")


@dataclass(frozen=True)
class StageSchedule:
    """Exponential initialization of the Chebyshev frequencies for one stage.

    Attributes:
        stage_index: Stage number s, starting at 0.
        lambda_rate: Exponential rate; frequencies have mean shift + 1/lambda_rate.
        shift: Constant added to every sampled frequency.
    """

    stage_index: int
    lambda_rate: float
    shift: float


ScheduleFn = Callable[[int], StageSchedule]


def default_schedule(stage_index: int) -> StageSchedule:
    """(rate 5, shift 0) at stage 0, then (rate 5^(1-s), shift 2 * 5^(s-1))."""
    if stage_index < 0:
        raise ValueError(f"stage_index must be nonnegative, got {stage_index}")
    if stage_index == 0:
        return StageSchedule(0, BASE_RATE, 0.0)
    return StageSchedule(
        stage_index,
        BASE_RATE ** (1 - stage_index),
        2.0 * BASE_RATE ** (stage_index - 1),
    )


def fixed_schedule(lambda_rate: float, shift: float = 0.0) -> ScheduleFn:
    """Same initialization at every stage."""

    def schedule(stage_index: int) -> StageSchedule:
        return StageSchedule(stage_index, lambda_rate, shift)

    return schedule


@dataclass
class TrainConfig:
    """Per-stage training settings.

    Attributes:
        adam: Adam phase settings.
        lbfgs: L-BFGS phase settings.
        max_retries: Retries of a stage whose final loss is no better than
            predicting zero.
        retry_seed_offset: Added to the stage seed on each retry.
        epsilon_threshold: Stop adding stages once the residual RMS is below this.
    """

    adam: AdamConfig = field(default_factory=AdamConfig)
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)
    max_retries: int = 1
    retry_seed_offset: int = 1000
    epsilon_threshold: float = 1e-15


@dataclass(eq=False)
class StageModel:
    """One trained stage network.

    Attributes:
        params: Trained parameters.
        schedule: Initialization schedule used.
        adam_trace: Adam phase result.
        lbfgs_trace: L-BFGS phase result.
        seed: Seed of the accepted attempt.
        retries: Number of rejected attempts before this one.
        final_loss: Training loss at `params` on the stage's own targets.
        accepted: False when every attempt was no better than predicting zero.
    """

    params: CfnnParams
    schedule: StageSchedule
    adam_trace: OptimTrace | None = None
    lbfgs_trace: OptimTrace | None = None
    seed: int = 0
    retries: int = 0
    final_loss: float = float("nan")
    accepted: bool = True

    def predict(self, points: np.ndarray) -> np.ndarray:
        return forward(self.params, points)[0]

    @property
    def loss_history(self) -> list[float]:
        history: list[float] = []
        for trace in (self.adam_trace, self.lbfgs_trace):
            if trace is not None:
                history.extend(trace.losses)
        return history


@dataclass(eq=False)
class ComposedModel:
    """Stage-0 network plus epsilon-weighted tail stages.

    Attributes:
        arch: Architecture shared by all stages.
        stage0: The network fitted to the raw target.
        tail: (epsilon_s, stage_s) for s = 1 .. S-1.
        stop_reason: Why fewer stages than requested were trained, if so.
    """

    arch: CfnnArchitecture
    stage0: StageModel
    tail: list[tuple[float, StageModel]] = field(default_factory=list)
    stop_reason: str | None = None

    def __post_init__(self) -> None:
        for epsilon, _ in self.tail:
            if not epsilon > 0:
                raise ValueError(f"stage normalizers must be positive, got {epsilon}")

    @property
    def stage_count(self) -> int:
        return 1 + len(self.tail)

    def stages(self) -> list[StageModel]:
        return [self.stage0] + [stage for _, stage in self.tail]

    def predict(self, points: np.ndarray) -> np.ndarray:
        return predict_composed(self, points)


@dataclass
class StageReport:
    """Training record of one stage.

    Attributes:
        stage: Stage index s.
        epsilon: Residual normalizer epsilon_s (None for stage 0).
        train_rmse: Training RMSE of the composed model after this stage.
        test_rmse: Testing RMSE of the composed model, when a test set is given.
        train_max_error: Maximum pointwise training error after this stage.
        test_max_error: Maximum pointwise testing error after this stage.
        adam_final_loss: Last Adam loss on the stage's scaled targets.
        lbfgs_final_loss: Last L-BFGS loss on the stage's scaled targets.
        retries: Rejected attempts before the accepted one.
        seed: Seed of the accepted attempt.
        loss_history: Adam then L-BFGS losses on the stage's scaled targets.
    """

    stage: int
    epsilon: float | None
    train_rmse: float
    test_rmse: float | None
    train_max_error: float
    test_max_error: float | None
    adam_final_loss: float
    lbfgs_final_loss: float
    retries: int
    seed: int
    loss_history: list[float] = field(default_factory=list, repr=False)


def residual_normalizer(residuals: np.ndarray) -> float:
    """RMS of the residuals, sqrt((1/N) sum r_i^2)."""
    residuals = np.asarray(residuals, dtype=np.float64)
    if residuals.ndim != 1 or residuals.size == 0:
        raise ValueError("residuals must be a non-empty vector")
    return float(np.sqrt(np.mean(residuals * residuals)))


def _fit_once(
    dataset: Dataset,
    arch: CfnnArchitecture,
    schedule: StageSchedule,
    train_cfg: TrainConfig,
    seed: int,
) -> StageModel:
    objective = NetworkObjective(arch, dataset.points, dataset.values)
    params = init_params(arch, schedule.lambda_rate, schedule.shift, seed)
    adam_trace = run_adam(objective, params.flatten(), train_cfg.adam)
    lbfgs_trace = run_lbfgs(objective, adam_trace.params, train_cfg.lbfgs)
    trained = CfnnParams.unflatten(arch, lbfgs_trace.params)
    if not trained.is_finite():
        raise FloatingPointError("optimizer produced non-finite parameters")
    final_loss = mse_loss(forward(trained, dataset.points)[0], dataset.values)
    return StageModel(
        params=trained,
        schedule=schedule,
        adam_trace=adam_trace,
        lbfgs_trace=lbfgs_trace,
        seed=seed,
        final_loss=final_loss,
    )


def train_stage(
    dataset: Dataset,
    arch: CfnnArchitecture,
    schedule: StageSchedule,
    train_cfg: TrainConfig,
    seed: int,
) -> StageModel:
    """
    Train one stage network with Adam followed by L-BFGS on the MSE loss.

    A result no better than the zero function (final loss >= mean target^2)
    is rejected and retrained with `seed + retry_seed_offset`, up to
    `max_retries` times. If the last attempt is still no better, it is
    returned with `accepted` set to False.

    Args:
        dataset: Points and the stage's targets (scaled residuals for s >= 1).
        arch: Network shape.
        schedule: Initialization schedule for this stage.
        train_cfg: Optimizer settings and retry policy.
        seed: Initialization seed.

    Returns:
        The trained StageModel.
    """
    if dataset.dim != arch.input_dim:
        raise ValueError(
            f"dataset has dimension {dataset.dim}, architecture expects "
            f"{arch.input_dim}"
        )
    zero_loss = float(np.mean(dataset.values * dataset.values))
    attempt_seed = seed
    for attempt in range(train_cfg.max_retries + 1):
        try:
            model = _fit_once(dataset, arch, schedule, train_cfg, attempt_seed)
        except (ArithmeticError, ValueError) as e:
            raise StageTrainingError(schedule.stage_index, str(e)) from e
        model.retries = attempt
        if model.final_loss < zero_loss or zero_loss == 0.0:
            return model
        if attempt < train_cfg.max_retries:
            attempt_seed += train_cfg.retry_seed_offset
            logger.warning(
                f"Stage {schedule.stage_index} loss {model.final_loss:.3e} is no "
                f"better than zero ({zero_loss:.3e}); retrying with seed "
                f"{attempt_seed}"
            )
    logger.warning(
        f"Stage {schedule.stage_index} still no better than zero after "
        f"{train_cfg.max_retries} retries (loss {model.final_loss:.3e})"
    )
    model.accepted = False
    return model


def _errors(predictions: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    residual = values - predictions
    return residual_normalizer(residual), float(np.max(np.abs(residual)))


def train_multistage(
    f: TargetFunction,
    train: Dataset,
    stages: int,
    train_cfg: TrainConfig,
    schedule_fn: ScheduleFn = default_schedule,
    seed: int = 0,
    arch: CfnnArchitecture | None = None,
    test: Dataset | None = None,
) -> tuple[ComposedModel, list[StageReport]]:
    """
    Fit `stages` networks, each to the normalized training residual of the
    composite built from the previous ones.

    Stage s uses seed `seed + s`. Residuals come from the training set only;
    the optional test set is used for reporting.

    Args:
        f: Target function (used for dimension checks and logging).
        train: Training dataset.
        stages: Total number of networks S (stage 0 through S-1).
        train_cfg: Per-stage training settings.
        schedule_fn: Maps a stage index to its initialization schedule.
        seed: Run seed.
        arch: Network shape; defaults to 3 hidden layers of width 40.
        test: Optional testing dataset.

    Returns:
        The composed model and one StageReport per trained stage.
    """
    if stages < 1:
        raise ValueError(f"stages must be >= 1, got {stages}")
    if train.dim != f.dim:
        raise ValueError(f"dataset dimension {train.dim} does not match {f.kind}")
    arch = arch or CfnnArchitecture(input_dim=f.dim)

    def run_stage(data: Dataset, stage_index: int) -> StageModel:
        schedule = schedule_fn(stage_index)
        logger.info(
            f"{f.kind} stage {stage_index}: rate {schedule.lambda_rate:g}, "
            f"shift {schedule.shift:g}"
        )
        try:
            return train_stage(data, arch, schedule, train_cfg, seed + stage_index)
        except StageTrainingError as e:
            raise StageTrainingError(
                stage_index, e.detail, str(f.kind)
            ) from e.__cause__

    def report(
        stage_index: int, epsilon: float | None, model: StageModel
    ) -> StageReport:
        train_rmse, train_max = _errors(train_pred, train.values)
        test_rmse = test_max = None
        if test is not None:
            test_rmse, test_max = _errors(test_pred, test.values)
        adam_loss = model.adam_trace.final_loss if model.adam_trace else float("nan")
        lbfgs = model.lbfgs_trace
        lbfgs_loss = lbfgs.final_loss if lbfgs and lbfgs.losses else model.final_loss
        logger.info(
            f"{f.kind} stage {stage_index}: train RMSE {train_rmse:.4e}"
            + (f", test RMSE {test_rmse:.4e}" if test_rmse is not None else "")
        )
        return StageReport(
            stage=stage_index,
            epsilon=epsilon,
            train_rmse=train_rmse,
            test_rmse=test_rmse,
            train_max_error=train_max,
            test_max_error=test_max,
            adam_final_loss=adam_loss,
            lbfgs_final_loss=lbfgs_loss,
            retries=model.retries,
            seed=model.seed,
            loss_history=model.loss_history,
        )

    stage0 = run_stage(train, 0)
    model = ComposedModel(arch=arch, stage0=stage0)
    train_pred = stage0.predict(train.points)
    test_pred = stage0.predict(test.points) if test is not None else None
    reports = [report(0, None, stage0)]

    for stage_index in range(1, stages):
        epsilon = residual_normalizer(train.values - train_pred)
        if epsilon == 0.0:
            model.stop_reason = "perfect_fit"
            logger.info(f"{f.kind}: exact fit after stage {stage_index - 1}")
            break
        if epsilon < train_cfg.epsilon_threshold:
            model.stop_reason = "epsilon_below_threshold"
            logger.warning(
                f"{f.kind}: residual RMS {epsilon:.3e} below threshold, "
                f"stopping before stage {stage_index}"
            )
            break

        scaled = Dataset(
            train.points, (train.values - train_pred) / epsilon, train.provenance
        )
        stage = run_stage(scaled, stage_index)
        if not stage.accepted:
            model.stop_reason = "stage_rejected"
            logger.warning(
                f"{f.kind}: stage {stage_index} rejected after {stage.retries} "
                f"retries, keeping {model.stage_count} stages"
            )
            break
        model.tail.append((epsilon, stage))
        train_pred = train_pred + epsilon * stage.predict(train.points)
        if test is not None and test_pred is not None:
            test_pred = test_pred + epsilon * stage.predict(test.points)
        reports.append(report(stage_index, epsilon, stage))

    return model, reports


def predict_composed(model: ComposedModel, points: np.ndarray) -> np.ndarray:
    """Stage-0 output plus sum of epsilon_s * stage_s output, in stage order."""
    points = np.asarray(points, dtype=np.float64)
    check_domain(points)
    out = model.stage0.predict(points)
    for epsilon, stage in model.tail:
        out = out + epsilon * stage.predict(points)
    return out
