"""Experiment configuration (JSON, versioned, unknown keys rejected)."""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Strict):
    frequency_ghz: float = Field(9.6, gt=0)
    slant_range: float = Field(608015.0, gt=0)
    incidence_deg: float = Field(30.0, gt=0, lt=90)
    range_spacing: float = Field(0.93, gt=0)
    azimuth_spacing: float = Field(2.0, gt=0)
    azimuth_time_step: float = Field(2.0 / 7600.0, gt=0)


class BlockConfig(_Strict):
    row0: int = Field(ge=0)
    col0: int = Field(ge=0)
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    height: float


class SceneConfig(_Strict):
    generator: Literal["ramp", "ramp_blocks", "canopy", "dem"] = "ramp_blocks"
    rows: int = Field(128, ge=2)
    cols: int = Field(128, ge=2)
    max_height: float = Field(100.0, ge=0)
    blocks: Optional[List[BlockConfig]] = None
    block_count: int = Field(12, ge=0)
    block_height: float = 30.0
    mean_height: float = Field(30.0, ge=0)
    jitter_std: float = Field(5.0, ge=0)
    density: float = Field(1.0, gt=0, le=1)
    dem_path: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.generator == "dem" and not self.dem_path:
            raise ValueError("generator 'dem' needs dem_path")
        for k, b in enumerate(self.blocks or []):
            if b.row0 + b.rows > self.rows or b.col0 + b.cols > self.cols:
                raise ValueError(f"blocks[{k}] falls outside the {self.rows}x{self.cols} grid")
        return self


class ConfigurationConfig(_Strict):
    mode: int = Field(2, ge=1, le=4)
    antenna_baseline: float = Field(15.0, gt=0)
    satellite_baseline: float = Field(300.0, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.mode in (1, 3) and self.antenna_baseline >= self.satellite_baseline:
            raise ValueError(f"mode {self.mode} needs antenna_baseline < satellite_baseline")
        return self


class OrbitConfig(_Strict):
    delta_bc: float = 0.0
    delta_bc_rate: float = 0.0
    delta_bn: float = 0.0
    delta_bn_rate: float = 0.0


class AtmosphereConfig(_Strict):
    rms: float = Field(ge=0)
    exponent: float = Field(8.0 / 3.0, gt=0)
    outer_scale: Optional[float] = Field(None, gt=0)
    layer_height: float = Field(1000.0, ge=0)


class GridConfig(_Strict):
    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.stop < self.start:
            raise ValueError("grid stop must not be below start")
        return self


def _coherence_ok(v):
    values = v if isinstance(v, list) else [v]
    for g in values:
        if not 0 < g <= 1:
            raise ValueError(f"coherence {g} outside (0, 1]")
    return v


class DesignConfig(_Strict):
    alpha: float = Field(0.02, gt=0, lt=1)
    expected_height_precision: float = Field(0.5, gt=0)
    max_height_difference: Optional[float] = Field(None, gt=0)
    antenna_grid: GridConfig = GridConfig(start=0.5, stop=20.0, step=0.1)
    satellite_grid: GridConfig = GridConfig(start=10.0, stop=400.0, step=2.0)
    modes: List[int] = [1, 2, 3, 4]
    refine_top_k: int = Field(0, ge=0)
    coherences: List[float] = [0.95, 0.96, 0.97, 0.98, 0.99, 0.995]
    max_int: int = Field(5, ge=0)

    @field_validator("modes")
    @classmethod
    def _modes(cls, v):
        if not v or any(m not in (1, 2, 3, 4) for m in v):
            raise ValueError("modes must be a non-empty subset of 1..4")
        return v

    @field_validator("coherences")
    @classmethod
    def _coherences(cls, v):
        for g in v:
            _coherence_ok(g)
        return v


class UnwrapConfig(_Strict):
    smoothing: Optional[Tuple[int, int]] = (5, 15)


class EstimateConfig(_Strict):
    orbit: bool = True
    delays: Optional[bool] = None
    offsets: bool = True


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    geometry: GeometryConfig = GeometryConfig()
    scene: SceneConfig = SceneConfig()
    configuration: ConfigurationConfig = ConfigurationConfig()
    coherence: Union[float, List[float]] = 0.99
    orbit: Optional[OrbitConfig] = None
    atmosphere: Optional[AtmosphereConfig] = None
    design: DesignConfig = DesignConfig()
    unwrap: UnwrapConfig = UnwrapConfig()
    estimate: EstimateConfig = EstimateConfig()
    trials: int = Field(500, ge=1)
    seed: int = Field(0, ge=0)
    output_dir: str = "out"

    @field_validator("coherence")
    @classmethod
    def _coherence(cls, v):
        if isinstance(v, list) and len(v) != 3:
            raise ValueError("a coherence list needs one value per interferogram (3)")
        return _coherence_ok(v)


class ConfigError(ValueError):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or []


def _field_messages(exc: ValidationError):
    return [{"field": ".".join(str(p) for p in err["loc"]) or "<root>", "message": err["msg"]}
            for err in exc.errors()]


def parse_config(payload: dict, **overrides):
    data = dict(payload)
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        details = _field_messages(exc)
        summary = "; ".join(f"{d['field']}: {d['message']}" for d in details)
        raise ConfigError(f"invalid configuration: {summary}", details) from exc


def load_config(path=None, **overrides):
    if path is None:
        return parse_config({}, **overrides)
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(payload, **overrides)

