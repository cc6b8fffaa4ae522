"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
    protocol_version: int
    generator: str | None = None


class RunRequest(BaseModel):
    """Run one condition; either an inline config or a path to a config file."""

    config: dict | None = None
    config_path: str | None = None


class RunResponse(BaseModel):
    run_dir: str
    condition: str
    metrics: dict


class CalibrationEntry(BaseModel):
    values: list[float]
    residual_logmass: float | None = None
    correct: bool


class CalibrateRequest(BaseModel):
    entries: list[CalibrationEntry] | None = None
    log_path: str | None = None
    grid: tuple[float, float, float] = (0.5, 5.0, 0.01)
    bins: int = Field(default=10, ge=1)


class CalibrateResponse(BaseModel):
    temperature: float
    ece_before: float
    ece_after: float
    n: int
    bins_before: dict
    bins_after: dict


class ReportRequest(BaseModel):
    """Distribution and reliability data behind a run's calibration."""

    run_dir: str
    seed: int | None = None  # default: first seed directory
    bins: int | None = Field(default=None, ge=1)  # default: as fitted


class ReportResponse(BaseModel):
    temperature: float
    bins: int
    histogram_before: list[int]
    histogram_after: list[int]
    reliability_before: dict
    reliability_after: dict


class ScoreRequest(BaseModel):
    run_dir: str
    corpus: str
    ontology: str
    seed: int | None = None


class ScoreResponse(BaseModel):
    metrics: dict
