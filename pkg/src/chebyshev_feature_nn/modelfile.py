"""Versioned, human-readable model files for composed CFNN models."""

import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .multistage import ComposedModel, StageModel, StageSchedule
from .network import CfnnArchitecture, CfnnParams, FeatureLayer
from .targets import format_float

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ArchitectureEntry(_Strict):
    input_dim: int = Field(ge=1)
    hidden_layers: int = Field(ge=2)
    width: int = Field(ge=1)
    feature_layer: FeatureLayer = FeatureLayer.CHEBYSHEV


class StageEntry(_Strict):
    """One stage: schedule, normalizer and flattened parameters as text."""

    index: int = Field(ge=0)
    lambda_rate: str
    shift: str
    epsilon: str | None = None
    seed: int = 0
    retries: int = 0
    parameters: list[str]


class RunMetadata(_Strict):
    """Provenance of a trained model."""

    function: str | None = None
    seed: int | None = None
    scale: str | None = None
    adam_epochs: int | None = None
    lbfgs_iterations: int | None = None
    lbfgs_budget_unit: str = "iterations"
    stages_requested: int | None = None
    stop_reason: str | None = None


class ModelFile(_Strict):
    format_version: int
    architecture: ArchitectureEntry
    stage_count: int = Field(ge=1)
    stages: list[StageEntry]
    metadata: RunMetadata = Field(default_factory=RunMetadata)

    @field_validator("format_version")
    @classmethod
    def _known_version(cls, value: int) -> int:
        if value != FORMAT_VERSION:
            raise ValueError(
                f"unsupported model file version {value} (expected {FORMAT_VERSION})"
            )
        return value


def _text(values: np.ndarray) -> list[str]:
    return [format_float(v) for v in values]


def _stage_entry(stage: StageModel, epsilon: float | None) -> StageEntry:
    return StageEntry(
        index=stage.schedule.stage_index,
        lambda_rate=format_float(stage.schedule.lambda_rate),
        shift=format_float(stage.schedule.shift),
        epsilon=None if epsilon is None else format_float(epsilon),
        seed=stage.seed,
        retries=stage.retries,
        parameters=_text(stage.params.flatten()),
    )


def serialize_model(
    model: ComposedModel, metadata: RunMetadata | dict[str, Any] | None = None
) -> bytes:
    """
    Serialize a composed model to UTF-8 JSON text.

    Output bytes depend only on the model and metadata, so identical models
    serialize identically.

    Args:
        model: The model to store.
        metadata: Run provenance (function id, seed, budgets).

    Returns:
        The encoded model file.
    """
    if isinstance(metadata, dict):
        metadata = RunMetadata(**metadata)
    metadata = metadata or RunMetadata()
    if metadata.stop_reason is None and model.stop_reason is not None:
        metadata = metadata.model_copy(update={"stop_reason": model.stop_reason})

    arch = model.arch
    document = ModelFile(
        format_version=FORMAT_VERSION,
        architecture=ArchitectureEntry(
            input_dim=arch.input_dim,
            hidden_layers=arch.hidden_layers,
            width=arch.width,
            feature_layer=arch.feature_layer,
        ),
        stage_count=model.stage_count,
        stages=[_stage_entry(model.stage0, None)]
        + [_stage_entry(stage, epsilon) for epsilon, stage in model.tail],
        metadata=metadata,
    )
    return (document.model_dump_json(indent=2) + "\n").encode("utf-8")


def load_model_file(data: bytes | str) -> ModelFile:
    """Parse and validate model-file text; unknown versions are rejected."""
    return ModelFile.model_validate_json(data)


def deserialize_model(data: bytes | str) -> ComposedModel:
    """
    Rebuild a composed model from `serialize_model` output.

    Raises:
        ValueError: On malformed content or an unsupported format version.
    """
    document = load_model_file(data)
    entry = document.architecture
    arch = CfnnArchitecture(
        input_dim=entry.input_dim,
        hidden_layers=entry.hidden_layers,
        width=entry.width,
        feature_layer=entry.feature_layer,
    )
    if document.stage_count != len(document.stages):
        raise ValueError(
            f"stage_count {document.stage_count} does not match "
            f"{len(document.stages)} stored stages"
        )

    def stage(item: StageEntry) -> StageModel:
        vector = np.array([float(v) for v in item.parameters], dtype=np.float64)
        return StageModel(
            params=CfnnParams.unflatten(arch, vector),
            schedule=StageSchedule(
                item.index, float(item.lambda_rate), float(item.shift)
            ),
            seed=item.seed,
            retries=item.retries,
        )

    first, *rest = document.stages
    if first.epsilon is not None:
        raise ValueError("stage 0 must not carry a normalizer")
    tail = []
    for item in rest:
        if item.epsilon is None:
            raise ValueError(f"stage {item.index} is missing its normalizer")
        tail.append((float(item.epsilon), stage(item)))
    logger.debug(f"Loaded model with {document.stage_count} stages")
    return ComposedModel(
        arch=arch,
        stage0=stage(first),
        tail=tail,
        stop_reason=document.metadata.stop_reason,
    )
