"""Benchmark target functions f1..f9 and training/testing datasets on [-1, 1]^d."""

import csv
import logging
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np

from .sampling import make_generator, uniform

logger = logging.getLogger(__name__)

F4_FREQUENCY = 30.0
MULTIMODAL_COUNT = 10


class FunctionKind(StrEnum):
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    F4 = "f4"
    F5 = "f5"
    F6 = "f6"
    F7 = "f7"
    F8 = "f8"
    F9 = "f9"


ONE_D_KINDS = (
    FunctionKind.F1,
    FunctionKind.F2,
    FunctionKind.F3,
    FunctionKind.F4,
    FunctionKind.F5,
    FunctionKind.F6,
)
MULTI_DIM_KINDS = (FunctionKind.F7, FunctionKind.F8, FunctionKind.F9)


def _require_exactly(needed: bool, kind: FunctionKind, **fields: object) -> None:
    for name, value in fields.items():
        if needed and value is None:
            raise ValueError(f"{kind} requires {name}")
        if not needed and value is not None:
            raise ValueError(f"{name} does not apply to {kind}")


@dataclass(frozen=True, eq=False)
class TargetFunction:
    """A benchmark function together with the parameters its kind requires.

    Attributes:
        kind: Which of f1..f9 this is.
        dim: Input dimension d; 1 for f1..f6.
        m: Frequency parameter of f4.
        gauss_sigma: Length-d widths of the f8 Gaussian.
        gauss_omega: Length-d centres of the f8 Gaussian.
        modal_alpha: Amplitudes of the f9 modes, shape (modal_count,).
        modal_sigma: Widths of the f9 modes, shape (modal_count, d).
        modal_omega: Centres of the f9 modes, shape (modal_count, d).
    """

    kind: FunctionKind
    dim: int = 1
    m: float | None = None
    gauss_sigma: np.ndarray | None = None
    gauss_omega: np.ndarray | None = None
    modal_alpha: np.ndarray | None = None
    modal_sigma: np.ndarray | None = None
    modal_omega: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.kind in ONE_D_KINDS and self.dim != 1:
            raise ValueError(f"{self.kind} is one-dimensional, got dim={self.dim}")

        needs_m = self.kind is FunctionKind.F4
        needs_gauss = self.kind is FunctionKind.F8
        needs_modal = self.kind is FunctionKind.F9
        _require_exactly(needs_m, self.kind, m=self.m)
        _require_exactly(
            needs_gauss,
            self.kind,
            gauss_sigma=self.gauss_sigma,
            gauss_omega=self.gauss_omega,
        )
        _require_exactly(
            needs_modal,
            self.kind,
            modal_alpha=self.modal_alpha,
            modal_sigma=self.modal_sigma,
            modal_omega=self.modal_omega,
        )

        if needs_gauss:
            for name in ("gauss_sigma", "gauss_omega"):
                value = np.asarray(getattr(self, name), dtype=np.float64)
                if value.shape != (self.dim,):
                    raise ValueError(f"{name} must have shape ({self.dim},)")
                object.__setattr__(self, name, value)
        if needs_modal:
            alpha = np.asarray(self.modal_alpha, dtype=np.float64)
            if alpha.ndim != 1 or alpha.size == 0:
                raise ValueError("modal_alpha must be a non-empty vector")
            object.__setattr__(self, "modal_alpha", alpha)
            for name in ("modal_sigma", "modal_omega"):
                value = np.asarray(getattr(self, name), dtype=np.float64)
                if value.shape != (alpha.size, self.dim):
                    raise ValueError(
                        f"{name} must have shape ({alpha.size}, {self.dim})"
                    )
                object.__setattr__(self, name, value)

    @property
    def modal_count(self) -> int:
        """Number of Gaussian modes of f9 (0 for other kinds)."""
        return 0 if self.modal_alpha is None else int(self.modal_alpha.size)


@dataclass(frozen=True)
class Equidistant:
    """Endpoint-inclusive equally spaced 1-D grid."""


@dataclass(frozen=True)
class UniformRandom:
    """I.i.d. uniform samples on [-1, 1]^d from a seeded generator."""

    seed: int


Provenance = Equidistant | UniformRandom


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sample points in [-1, 1]^d with their target values.

    Attributes:
        points: (N, d) array of inputs.
        values: (N,) array of target values.
        provenance: How the points were generated.
    """

    points: np.ndarray
    values: np.ndarray
    provenance: Provenance

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if points.ndim != 2:
            raise ValueError(f"points must be a 2-D array, got shape {points.shape}")
        if values.shape != (points.shape[0],):
            raise ValueError(
                f"values length {values.shape} does not match {points.shape[0]} points"
            )
        check_domain(points)
        if isinstance(self.provenance, Equidistant):
            if points.shape[1] != 1:
                raise ValueError("equidistant datasets are one-dimensional")
            if np.any(np.diff(points[:, 0]) <= 0):
                raise ValueError("equidistant points must be sorted ascending")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


def check_domain(points: np.ndarray) -> None:
    """Reject any coordinate outside [-1, 1] (NaN included)."""
    if not np.all(np.abs(points) <= 1.0):
        bad = np.abs(points)
        worst = float(np.nanmax(bad)) if np.any(np.isfinite(bad)) else float("nan")
        raise ValueError(
            f"input coordinates must lie in [-1, 1]; found magnitude {worst!r}"
        )


def _sin_pi_squared(x: np.ndarray) -> np.ndarray:
    # sin(pi * k) is not exactly zero in floating point
    s = np.sin(np.pi * x)
    s = np.where(x == np.round(x), 0.0, s)
    return s * s


def _gaussian_bump(x: np.ndarray, sigma: np.ndarray, omega: np.ndarray) -> np.ndarray:
    shifted = (x + 1.0) / 2.0 - omega
    return np.exp(-np.sum(sigma**2 * shifted**2, axis=-1))


def target_values(f: TargetFunction, points: np.ndarray) -> np.ndarray:
    """
    Evaluate a target function on a batch of points.

    Args:
        f: The target function.
        points: (N, d) array with every coordinate in [-1, 1].

    Returns:
        (N,) array of function values.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != f.dim:
        raise ValueError(
            f"{f.kind} expects points of shape (N, {f.dim}), got {points.shape}"
        )
    check_domain(points)
    x = points[:, 0]

    match f.kind:
        case FunctionKind.F1:
            return x.copy()
        case FunctionKind.F2:
            return np.sin(2.0 * x + 1.0) + 0.2 * np.exp(1.3 * x)
        case FunctionKind.F3:
            return _sin_pi_squared(x)
        case FunctionKind.F4:
            assert f.m is not None
            return (1.0 - x**2 / 2.0) * np.cos(f.m * (x + 0.5 * x**3))
        case FunctionKind.F5:
            return np.abs(x)
        case FunctionKind.F6:
            return np.sign(x)
        case FunctionKind.F7:
            return np.sum(points, axis=1)
        case FunctionKind.F8:
            assert f.gauss_sigma is not None and f.gauss_omega is not None
            return _gaussian_bump(points, f.gauss_sigma, f.gauss_omega)
        case FunctionKind.F9:
            assert f.modal_alpha is not None
            total = np.zeros(points.shape[0])
            for alpha, sigma, omega in zip(
                f.modal_alpha, f.modal_sigma, f.modal_omega, strict=True
            ):
                total += alpha * _gaussian_bump(points, sigma, omega)
            return total
    raise ValueError(f"unknown target kind {f.kind!r}")


def eval_target(f: TargetFunction, x: np.ndarray | list[float] | float) -> float:
    """
    Evaluate a target function at a single point.

    Args:
        f: The target function.
        x: Length-d coordinate vector (a scalar is accepted when d == 1).

    Returns:
        The exact formula value.
    """
    vector = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if vector.ndim != 1 or vector.size != f.dim:
        raise ValueError(
            f"{f.kind} has dimension {f.dim}, got a point of length {vector.size}"
        )
    return float(target_values(f, vector[np.newaxis, :])[0])


def sample_multimodal_params(d: int, seed: int) -> TargetFunction:
    """
    Draw a random f9 instance: 10 modes, unit widths, centres in [-1, 1],
    amplitudes in [-10, 10].
    """
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    gen = make_generator(seed)
    omega = uniform(gen, -1.0, 1.0, (MULTIMODAL_COUNT, d))
    alpha = uniform(gen, -10.0, 10.0, MULTIMODAL_COUNT)
    return TargetFunction(
        kind=FunctionKind.F9,
        dim=d,
        modal_alpha=alpha,
        modal_sigma=np.ones((MULTIMODAL_COUNT, d)),
        modal_omega=omega,
    )


def make_target(name: str, dim: int = 1, seed: int = 0) -> TargetFunction:
    """
    Build one of the benchmark functions by id.

    Args:
        name: Function id, "f1" .. "f9" (case-insensitive).
        dim: Input dimension for f7..f9.
        seed: Seed for the random f9 parameters.

    Returns:
        The configured TargetFunction.
    """
    try:
        kind = FunctionKind(name.lower())
    except ValueError:
        raise ValueError(f"unknown function id {name!r}") from None

    if kind in ONE_D_KINDS:
        if dim != 1:
            raise ValueError(f"{kind} is one-dimensional, got dim={dim}")
        m = F4_FREQUENCY if kind is FunctionKind.F4 else None
        return TargetFunction(kind=kind, dim=1, m=m)
    if kind is FunctionKind.F7:
        return TargetFunction(kind=kind, dim=dim)
    if kind is FunctionKind.F8:
        return TargetFunction(
            kind=kind, dim=dim, gauss_sigma=np.ones(dim), gauss_omega=np.ones(dim)
        )
    return sample_multimodal_params(dim, seed)


def make_equidistant_dataset(f: TargetFunction, n: int) -> Dataset:
    """Sample a 1-D target on n equally spaced points including -1 and 1."""
    if f.dim != 1:
        raise ValueError(f"equidistant datasets need a 1-D target, got dim={f.dim}")
    if n < 2:
        raise ValueError(f"equidistant datasets need n >= 2, got {n}")
    points = np.linspace(-1.0, 1.0, n)[:, np.newaxis]
    return Dataset(points, target_values(f, points), Equidistant())


def make_uniform_dataset(f: TargetFunction, n: int, seed: int) -> Dataset:
    """Sample a target on n i.i.d. uniform points in [-1, 1]^d."""
    if n < 1:
        raise ValueError(f"uniform datasets need n >= 1, got {n}")
    gen = make_generator(seed)
    points = uniform(gen, -1.0, 1.0, (n, f.dim))
    return Dataset(points, target_values(f, points), UniformRandom(seed))


def format_float(value: float) -> str:
    """Shortest-safe decimal text that round-trips a double (17 significant)."""
    return format(float(value), ".17g")


def dataset_rows(dataset: Dataset) -> tuple[list[str], list[list[str]]]:
    """Header and full-precision `x1,...,xd,f` rows of a dataset."""
    header = [f"x{j + 1}" for j in range(dataset.dim)] + ["f"]
    rows = [
        [format_float(v) for v in point] + [format_float(value)]
        for point, value in zip(dataset.points, dataset.values, strict=True)
    ]
    return header, rows


def read_points_csv(path: Path) -> np.ndarray:
    """
    Read input points from a CSV with an `x1,...,xd[,...]` header.

    Lines starting with '#' are ignored; columns not named x<j> are dropped.

    Returns:
        (N, d) array of points.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [line for line in fh if line.strip() and not line.startswith("#")]
    reader = csv.reader(rows)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"{path} is empty") from None
    columns = [i for i, name in enumerate(header) if name.strip().startswith("x")]
    if not columns:
        raise ValueError(f"{path} has no x1..xd columns")
    try:
        data = [[float(row[i]) for i in columns] for row in reader]
    except (ValueError, IndexError) as e:
        raise ValueError(f"malformed row in {path}: {e}") from None
    logger.debug(f"Read {len(data)} points from {path}")
    return np.asarray(data, dtype=np.float64).reshape(-1, len(columns))
