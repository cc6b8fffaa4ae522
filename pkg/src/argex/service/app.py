"""FastAPI service wrapping the extraction framework.

The service owns the long-running surfaces: experiment runs, calibration
fitting, report extraction, re-scoring, and (when configured with a
generator) the wire-protocol /v1/generate endpoint that remote clients
and conformance checks drive. The CLI is a thin client of this app.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response

from .. import __version__, protocol
from ..calibration import (
    LogitVector,
    bin_index,
    build_report,
    load_scored_log,
    scale,
)
from ..errors import ArgexError, GeneratorTransportError
from ..evaluation import metrics_table
from ..generator import Generator
from ..ontology import load_ontology
from ..corpus import parse_corpus
from ..pipeline import RunConfig, load_predictions, run_experiment
from . import schemas

import numpy as np


def _entries_from_models(models) -> list[tuple[LogitVector, bool]]:
    entries = []
    for row in models:
        residual = math.exp(row.residual_logmass) if row.residual_logmass is not None else 0.0
        entries.append((LogitVector(values=tuple(row.values), residual_mass=residual), row.correct))
    return entries


def _seed_dir(run_dir: str, seed: int | None) -> Path:
    base = Path(run_dir)
    if not base.is_dir():
        raise HTTPException(status_code=400, detail=f"run artifact {run_dir!r} does not exist")
    if seed is not None:
        candidate = base / f"seed_{seed}"
        if not candidate.is_dir():
            raise HTTPException(status_code=400, detail=f"no seed_{seed} in {run_dir!r}")
        return candidate
    dirs = sorted(base.glob("seed_*"))
    if not dirs:
        raise HTTPException(status_code=400, detail=f"{run_dir!r} has no seed directories")
    return dirs[0]


def create_app(generator: Generator | None = None, generator_name: str | None = None) -> FastAPI:
    app = FastAPI(title="argex", version=__version__)

    @app.exception_handler(ArgexError)
    async def argex_error(request: Request, exc: ArgexError):
        status = 502 if isinstance(exc, GeneratorTransportError) else 400
        return Response(
            content=json.dumps({"detail": str(exc), "kind": type(exc).__name__}),
            status_code=status,
            media_type="application/json",
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(
            version=__version__,
            protocol_version=protocol.PROTOCOL_VERSION,
            generator=generator_name,
        )

    @app.post("/runs", response_model=schemas.RunResponse)
    def run(request: schemas.RunRequest) -> schemas.RunResponse:
        if (request.config is None) == (request.config_path is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of config or config_path"
            )
        if request.config is not None:
            config = RunConfig.from_dict(request.config)
        else:
            config = RunConfig.from_file(request.config_path)
        result = run_experiment(config)
        return schemas.RunResponse(
            run_dir=str(result.run_dir), condition=config.condition, metrics=result.metrics
        )

    @app.post("/calibration/fit", response_model=schemas.CalibrateResponse)
    def calibrate(request: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        if (request.entries is None) == (request.log_path is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of entries or log_path"
            )
        if request.entries is not None:
            entries = _entries_from_models(request.entries)
        else:
            if not Path(request.log_path).is_file():
                raise HTTPException(
                    status_code=400, detail=f"log file {request.log_path!r} does not exist"
                )
            entries = load_scored_log(request.log_path)
        report = build_report(entries, grid=request.grid, k=request.bins)
        payload = report.to_dict()
        return schemas.CalibrateResponse(
            temperature=report.temperature,
            ece_before=report.ece_before,
            ece_after=report.ece_after,
            n=report.n,
            bins_before=payload["bins_before"],
            bins_after=payload["bins_after"],
        )

    @app.post("/reports/calibration", response_model=schemas.ReportResponse)
    def report(request: schemas.ReportRequest) -> schemas.ReportResponse:
        seed_dir = _seed_dir(request.run_dir, request.seed)
        calibration_file = seed_dir / "calibration.json"
        log_file = seed_dir / "validation_log.jsonl"
        if not calibration_file.is_file() or not log_file.is_file():
            raise HTTPException(
                status_code=400,
                detail=f"{seed_dir} has no calibration data (condition without calibration?)",
            )
        fitted = json.loads(calibration_file.read_text())
        temperature = fitted["temperature"]
        k = request.bins or fitted["bins_after"]["k"]
        entries = load_scored_log(log_file)
        report = build_report(entries, grid=(temperature, temperature, 1.0), k=k)
        before = np.bincount(
            bin_index(np.array([scale(z, 1.0) for z, _ in entries]), k), minlength=k
        )
        after = np.bincount(
            bin_index(np.array([scale(z, temperature) for z, _ in entries]), k), minlength=k
        )
        payload = report.to_dict()
        return schemas.ReportResponse(
            temperature=temperature,
            bins=k,
            histogram_before=[int(c) for c in before],
            histogram_after=[int(c) for c in after],
            reliability_before=payload["bins_before"],
            reliability_after=payload["bins_after"],
        )

    @app.post("/evaluation/score", response_model=schemas.ScoreResponse)
    def score_run(request: schemas.ScoreRequest) -> schemas.ScoreResponse:
        seed_dir = _seed_dir(request.run_dir, request.seed)
        ontology = load_ontology(request.ontology)
        documents = {d.doc_id: d for d in parse_corpus(request.corpus, ontology)}
        predictions = load_predictions(seed_dir / "predictions.jsonl")
        return schemas.ScoreResponse(metrics=metrics_table(predictions, documents))

    @app.post("/v1/generate")
    async def generate(request: Request) -> Response:
        if generator is None:
            raise HTTPException(status_code=503, detail="no generator configured")
        body = await request.body()
        decoded = protocol.decode_request(body)
        response = generator.generate(decoded)
        return Response(content=protocol.encode_response(response), media_type="application/json")

    return app
