"""Temperature scaling, reliability binning, and ECE minimization.

Confidence of an argument is the maximum softmax probability of its first
decoded token. Dividing the logits by a temperature T > 1 flattens the
distribution without changing the argmax; the working temperature is the
grid point minimizing the expected calibration error on a validation set.

Generators ship a top-K truncation of the first-token logits plus the
summed exponential mass of everything truncated away. The residual mass
joins the softmax denominator as one aggregate bucket; the max is taken
over the real top-K entries only. At T=1 this reproduces the full-vocabulary
value exactly (the argmax is inside the top K by construction); at other
temperatures the aggregate bucket scales as a single pseudo-logit, which
biases the denominator by a bounded amount covered in tests.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CalibrationError
from .types import ArgumentPrediction

DEFAULT_BINS = 10
DEFAULT_GRID = (0.5, 5.0, 0.01)


@dataclass(frozen=True)
class LogitVector:
    """Top-K first-token logits plus truncated-away exponential mass."""

    values: tuple[float, ...]
    residual_mass: float = 0.0
    tokens: tuple[str, ...] | None = None  # wire-format companion of values

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("logit vector needs at least one value")
        if self.residual_mass < 0.0:
            raise ValueError("residual_mass must be nonnegative")
        if self.tokens is not None and len(self.tokens) != len(self.values):
            raise ValueError("tokens and values must have equal length")


@dataclass(frozen=True)
class ScoredPrediction:
    confidence: float
    correct: bool

    def __post_init__(self):
        if not (0.0 < self.confidence <= 1.0):
            raise ValueError(f"confidence must be in (0, 1], got {self.confidence}")


@dataclass(frozen=True)
class ReliabilityBins:
    """Counts and per-bin mean confidence/accuracy over k equal intervals.

    Bin i covers (i/k, (i+1)/k], with the first bin closed at 0 (a confidence
    of exactly 0 cannot occur under softmax positivity). Empty bins report
    0.0 for both means.
    """

    k: int
    counts: tuple[int, ...]
    mean_confidence: tuple[float, ...]
    mean_accuracy: tuple[float, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (len(self.counts) == len(self.mean_confidence) == len(self.mean_accuracy) == self.k):
            raise ValueError("per-bin fields must have length k")

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.k + 1) / self.k


def bin_index(confidences: np.ndarray, k: int) -> np.ndarray:
    edges = np.arange(k + 1) / k
    return np.clip(np.searchsorted(edges, confidences, side="left") - 1, 0, k - 1)


def bin_predictions(preds: Sequence[ScoredPrediction], k: int = DEFAULT_BINS) -> ReliabilityBins:
    """Assign predictions to k equal confidence intervals."""
    if k < 1:
        raise CalibrationError("bin count must be >= 1")
    conf = np.array([p.confidence for p in preds], dtype=np.float64)
    correct = np.array([p.correct for p in preds], dtype=np.float64)
    return _bin_arrays(conf, correct, k)


def _bin_arrays(conf: np.ndarray, correct: np.ndarray, k: int) -> ReliabilityBins:
    if conf.size:
        index = bin_index(conf, k)
        counts = np.bincount(index, minlength=k)
        sum_conf = np.bincount(index, weights=conf, minlength=k)
        sum_acc = np.bincount(index, weights=correct, minlength=k)
    else:
        counts = np.zeros(k, dtype=np.int64)
        sum_conf = sum_acc = np.zeros(k)
    return ReliabilityBins(
        k=k,
        counts=tuple(int(c) for c in counts),
        mean_confidence=tuple(float(s / c) if c else 0.0 for s, c in zip(sum_conf, counts)),
        mean_accuracy=tuple(float(s / c) if c else 0.0 for s, c in zip(sum_acc, counts)),
    )


def ece(bins: ReliabilityBins) -> float:
    """Bin-weighted mean absolute gap between confidence and accuracy."""
    n = bins.n
    if n == 0:
        return 0.0
    return sum(
        count / n * abs(acc - conf)
        for count, conf, acc in zip(bins.counts, bins.mean_confidence, bins.mean_accuracy)
        if count
    )


def max_softmax(values: Sequence[float], residual_mass: float = 0.0, temperature: float = 1.0) -> float:
    """Max softmax probability of `values` at the given temperature.

    Numerically stable; the residual bucket enters the denominator only.
    """
    if temperature <= 0.0:
        raise CalibrationError(f"temperature must be positive, got {temperature}")
    z = np.asarray(values, dtype=np.float64)
    log_r = math.log(residual_mass) if residual_mass > 0.0 else -math.inf
    shift = max(float(z.max()), log_r)
    scaled = np.exp((z - shift) / temperature)
    denom = float(scaled.sum())
    if log_r > -math.inf:
        denom += math.exp((log_r - shift) / temperature)
    return float(scaled.max()) / denom


def scale(z: LogitVector, temperature: float) -> float:
    """Calibrated max probability of one logit vector."""
    return max_softmax(z.values, z.residual_mass, temperature)


def first_token_confidence(arg: ArgumentPrediction, temperature: float) -> float:
    """Calibrated probability of an argument's first decoded token."""
    if arg.first_token_logits is None:
        raise CalibrationError(
            f"argument {arg.text!r} in slot {arg.slot_id} has no first-token logits"
        )
    return scale(arg.first_token_logits, temperature)


def _stack(validation: Sequence[tuple[LogitVector, bool]]):
    """Pad logit vectors into one matrix for vectorized grid evaluation."""
    widths = [len(z.values) for z, _ in validation]
    width = max(widths)
    matrix = np.full((len(validation), width), -np.inf, dtype=np.float64)
    log_residual = np.full(len(validation), -np.inf, dtype=np.float64)
    correct = np.zeros(len(validation), dtype=np.float64)
    for row, (z, ok) in enumerate(validation):
        matrix[row, : widths[row]] = z.values
        if z.residual_mass > 0.0:
            log_residual[row] = math.log(z.residual_mass)
        correct[row] = 1.0 if ok else 0.0
    return matrix, log_residual, correct


def _confidences(matrix: np.ndarray, log_residual: np.ndarray, temperature: float) -> np.ndarray:
    # -inf padding (and absent residuals) exponentiate to 0 and drop out
    peak = matrix.max(axis=1)
    shift = np.maximum(peak, log_residual)
    denom = np.exp((matrix - shift[:, None]) / temperature).sum(axis=1)
    denom = denom + np.exp((log_residual - shift) / temperature)
    return np.exp((peak - shift) / temperature) / denom


def temperature_grid(grid: tuple[float, float, float] = DEFAULT_GRID) -> np.ndarray:
    start, stop, step = grid
    if start <= 0.0 or stop < start or step <= 0.0:
        raise CalibrationError(f"invalid temperature grid {grid}")
    count = int(round((stop - start) / step)) + 1
    points = start + step * np.arange(count)
    return points[points <= stop + 1e-12]


def fit_temperature(
    validation: Sequence[tuple[LogitVector, bool]],
    grid: tuple[float, float, float] = DEFAULT_GRID,
    k: int = DEFAULT_BINS,
) -> float:
    """Grid point with the lowest ECE over the validation set.

    Ties go to the smallest temperature; the result is deterministic
    regardless of evaluation order.
    """
    if not validation:
        raise CalibrationError("validation set is empty")
    matrix, log_residual, correct = _stack(validation)
    best_t = None
    best_ece = math.inf
    for temperature in temperature_grid(grid):
        conf = _confidences(matrix, log_residual, float(temperature))
        value = ece(_bin_arrays(conf, correct, k))
        if value < best_ece:
            best_ece = value
            best_t = float(temperature)
    return float(best_t)


@dataclass(frozen=True)
class CalibrationReport:
    """Fitted temperature plus before/after reliability statistics."""

    temperature: float
    ece_before: float
    ece_after: float
    bins_before: ReliabilityBins
    bins_after: ReliabilityBins
    n: int
    grid: tuple[float, float, float]
    fit_split: str = "validation"

    def to_dict(self) -> dict:
        def bins_dict(bins: ReliabilityBins) -> dict:
            return {
                "k": bins.k,
                "counts": list(bins.counts),
                "mean_confidence": list(bins.mean_confidence),
                "mean_accuracy": list(bins.mean_accuracy),
            }

        return {
            "temperature": self.temperature,
            "ece_before": self.ece_before,
            "ece_after": self.ece_after,
            "bins_before": bins_dict(self.bins_before),
            "bins_after": bins_dict(self.bins_after),
            "n": self.n,
            "grid": list(self.grid),
            "fit_split": self.fit_split,
        }


def build_report(
    validation: Sequence[tuple[LogitVector, bool]],
    grid: tuple[float, float, float] = DEFAULT_GRID,
    k: int = DEFAULT_BINS,
) -> CalibrationReport:
    """Fit a temperature and assemble the before/after reliability report."""
    fitted = fit_temperature(validation, grid=grid, k=k)
    matrix, log_residual, correct = _stack(validation)
    before = _bin_arrays(_confidences(matrix, log_residual, 1.0), correct, k)
    after = _bin_arrays(_confidences(matrix, log_residual, fitted), correct, k)
    return CalibrationReport(
        temperature=fitted,
        ece_before=ece(before),
        ece_after=ece(after),
        bins_before=before,
        bins_after=after,
        n=len(validation),
        grid=grid,
    )


def write_report(report: CalibrationReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")


def load_scored_log(path: str | Path) -> list[tuple[LogitVector, bool]]:
    """Read a prediction log of per-argument logits and correctness labels.

    JSONL rows: {"values": [...], "residual_logmass": float|null, "correct": bool}
    """
    entries: list[tuple[LogitVector, bool]] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            logmass = row.get("residual_logmass")
            residual = math.exp(logmass) if logmass is not None else 0.0
            entries.append(
                (
                    LogitVector(values=tuple(row["values"]), residual_mass=residual),
                    bool(row["correct"]),
                )
            )
    return entries
