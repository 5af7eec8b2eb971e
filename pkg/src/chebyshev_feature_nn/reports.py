"""CSV and JSON result files, written atomically."""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiment import SuiteReport
from .multistage import StageReport
from .targets import Dataset, dataset_rows, format_float
from .version import __version__

logger = logging.getLogger(__name__)

TOOL_NAME = "chebyshev-feature-nn"

STAGE_COLUMNS = [
    "stage",
    "epsilon",
    "train_rmse",
    "test_rmse",
    "adam_final_loss",
    "lbfgs_final_loss",
    "retries",
    "train_max_error",
    "test_max_error",
]


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info(f"Wrote {path}")


def write_all(files: dict[Path, str | bytes]) -> list[Path]:
    """
    Write several files, each atomically.

    If any write fails, files already written by this call are removed before
    the error propagates.
    """
    written: list[Path] = []
    try:
        for path, data in files.items():
            atomic_write(path, data)
            written.append(Path(path))
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return list(files)


def provenance_line(seed: int | None, config_hash: str) -> str:
    return f"# {TOOL_NAME} {__version__} seed={seed} config={config_hash}\n"


def _cell(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(value)
    return format_float(value)


def _csv_text(
    header: Sequence[str],
    rows: Iterable[Sequence[str]],
    seed: int | None,
    config_hash: str,
) -> str:
    buffer = io.StringIO()
    buffer.write(provenance_line(seed, config_hash))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _stage_row(report: StageReport) -> list[str]:
    return [
        str(report.stage),
        _cell(report.epsilon),
        _cell(report.train_rmse),
        _cell(report.test_rmse),
        _cell(report.adam_final_loss),
        _cell(report.lbfgs_final_loss),
        str(report.retries),
        _cell(report.train_max_error),
        _cell(report.test_max_error),
    ]


def stage_reports_csv(
    reports: list[StageReport], seed: int | None, config_hash: str
) -> str:
    """One row per stage: normalizer, errors, final losses and retries."""
    rows = [_stage_row(r) for r in reports]
    return _csv_text(STAGE_COLUMNS, rows, seed, config_hash)


def loss_curve_csv(
    losses: Sequence[float], seed: int | None, config_hash: str
) -> str:
    """`iter,loss` rows for plotting a training-loss history."""
    rows = ([str(i), format_float(v)] for i, v in enumerate(losses))
    return _csv_text(["iter", "loss"], rows, seed, config_hash)


def composed_loss_history(reports: list[StageReport]) -> list[float]:
    """
    Concatenate stage loss histories in units of the original target.

    Stage s >= 1 trains on residuals divided by epsilon_s, so its losses are
    multiplied by epsilon_s^2.
    """
    history: list[float] = []
    for report in reports:
        scale = 1.0 if report.epsilon is None else report.epsilon**2
        history.extend(loss * scale for loss in report.loss_history)
    return history


def dataset_csv(dataset: Dataset, seed: int | None, config_hash: str) -> str:
    """`x1,...,xd,f` rows of a sampled dataset."""
    header, rows = dataset_rows(dataset)
    return _csv_text(header, rows, seed, config_hash)


def predictions_csv(
    points: np.ndarray, predictions: np.ndarray, seed: int | None, config_hash: str
) -> str:
    """`x1,...,xd,prediction` rows."""
    header = [f"x{j + 1}" for j in range(points.shape[1])] + ["prediction"]
    rows = (
        [format_float(v) for v in point] + [format_float(p)]
        for point, p in zip(points, predictions, strict=True)
    )
    return _csv_text(header, rows, seed, config_hash)


def suite_file_stem(report: SuiteReport) -> str:
    cfg = report.config
    return f"{cfg.suite}_{cfg.scale}_seed{cfg.seed}"


def suite_files(report: SuiteReport, out_dir: Path) -> dict[Path, str | bytes]:
    """
    Render a suite report: one stage CSV per cell, one combined CSV and a
    JSON summary. File names embed the suite, scale and seed.
    """
    stem = suite_file_stem(report)
    seed, digest = report.config.seed, report.config.config_hash()
    files: dict[Path, str | bytes] = {}
    combined_rows = []
    for cell in report.cells:
        name = f"{stem}_{cell.function}_d{cell.dim}.csv"
        files[out_dir / name] = stage_reports_csv(cell.stages, seed, digest)
        for stage in cell.stages:
            combined_rows.append(
                [cell.function, str(cell.dim), str(cell.seed), str(cell.scale)]
                + _stage_row(stage)
            )
    header = ["function", "dim", "seed", "scale"] + STAGE_COLUMNS
    files[out_dir / f"{stem}.csv"] = _csv_text(header, combined_rows, seed, digest)
    summary = report.summary()
    summary["tool_version"] = __version__
    summary["wall_time_s"] = round(report.wall_time, 3)
    files[out_dir / f"{stem}.json"] = (
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return files


def write_suite_report(report: SuiteReport, out_dir: Path) -> list[Path]:
    """Write `suite_files` to `out_dir`."""
    return write_all(suite_files(report, Path(out_dir)))
