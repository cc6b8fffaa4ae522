"""Argument-pair decoding constraints with confidence-bounded pruning.

A rule (source_role, banned_role) means: once some event's argument has
been predicted with role source_role, that argument's surface string must
not be decoded as banned_role for a later event. A constraint stays active
only while the model is moderately certain about the source argument:
strictly inside (lower, upper). Outside the bounds the constraint is
disabled, which prunes constraints built on predictions that are either
unreliable (low p) or drawn from the miscalibrated high-confidence region.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .calibration import ReliabilityBins, bin_index
from .errors import ConstraintError
from .memory import DocumentMemory

BannedSet = dict[str, frozenset[str]]


@dataclass(frozen=True)
class ConstraintRule:
    source_role: str
    banned_role: str

    def __post_init__(self):
        if not self.source_role or not self.banned_role:
            raise ConstraintError("rule roles must be nonempty")
        if self.source_role == self.banned_role:
            raise ConstraintError(
                f"rule must relate distinct roles, got {self.source_role!r} twice"
            )


@dataclass(frozen=True)
class Bounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ConstraintError(f"bounds must satisfy 0 <= lower <= upper <= 1: {self}")

    def admits(self, p: float) -> bool:
        return self.lower < p < self.upper


def load_rules(path: str | Path) -> tuple[ConstraintRule, ...]:
    """Rules file: JSON list of {"source_role": ..., "banned_role": ...}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ConstraintError(f"{path}: rules file must be a JSON list")
    return tuple(
        ConstraintRule(source_role=entry["source_role"], banned_role=entry["banned_role"])
        for entry in raw
    )


def _collect(memory: DocumentMemory, rules: Sequence[ConstraintRule], keep) -> BannedSet:
    banned: dict[str, set[str]] = {}
    by_source: dict[str, list[str]] = {}
    for rule in rules:
        by_source.setdefault(rule.source_role, []).append(rule.banned_role)
    for prediction, _ in memory.entries:
        for arg in prediction.arguments:
            for banned_role in by_source.get(arg.role, ()):
                if keep(arg):
                    banned.setdefault(banned_role, set()).add(arg.text)
    return {role: frozenset(texts) for role, texts in banned.items()}


def derive_banned(
    memory: DocumentMemory, rules: Sequence[ConstraintRule], bounds: Bounds
) -> BannedSet:
    """Banned surface strings per role, pruned by calibrated confidence.

    Every cached argument must carry a calibrated probability; a rule fires
    only while that probability lies strictly inside the bounds.
    """

    def keep(arg) -> bool:
        if arg.calibrated_prob is None:
            raise ConstraintError(
                f"cached argument {arg.text!r} ({arg.role}) has no calibrated probability"
            )
        return bounds.admits(arg.calibrated_prob)

    return _collect(memory, rules, keep)


def derive_banned_all(memory: DocumentMemory, rules: Sequence[ConstraintRule]) -> BannedSet:
    """Unpruned constraints: ban every rule-matching cached argument."""
    return _collect(memory, rules, lambda arg: True)


def select_bounds(
    calibrated_probs: Sequence[float],
    k: int,
    reliability: ReliabilityBins,
) -> Bounds:
    """Pick confidence bounds from the probability histogram and reliability bins.

    1. Bins whose probability count reaches the median count are candidates.
    2. Contiguous candidates merge into runs; the run with the smallest mean
       per-bin |accuracy - confidence| gap is kept (leftmost on ties).
    3. Bins at either end of the kept run whose gap exceeds the run's mean
       gap are trimmed off.

    The returned bounds align with bin edges.
    """
    if not calibrated_probs:
        raise ConstraintError("cannot select bounds from an empty probability set")
    if reliability.k != k:
        raise ConstraintError(
            f"reliability bins were computed at k={reliability.k}, expected {k}"
        )
    if reliability.n == 0:
        raise ConstraintError("reliability bins are all empty")

    probs = np.asarray(calibrated_probs, dtype=np.float64)
    if ((probs <= 0.0) | (probs > 1.0)).any():
        raise ConstraintError("probabilities must lie in (0, 1]")
    counts = np.bincount(bin_index(probs, k), minlength=k)
    median = float(np.median(counts))
    candidate = counts >= median

    runs: list[list[int]] = []
    for i in range(k):
        if not candidate[i]:
            continue
        if runs and runs[-1][-1] == i - 1:
            runs[-1].append(i)
        else:
            runs.append([i])
    if not runs:
        raise ConstraintError("no candidate bins reach the median count")

    gaps = [
        abs(acc - conf)
        for conf, acc in zip(reliability.mean_confidence, reliability.mean_accuracy)
    ]
    run = min(runs, key=lambda r: sum(gaps[i] for i in r) / len(r))

    # strict comparison with a float-noise guard: a uniformly calibrated run
    # (all gaps equal up to rounding) must survive untrimmed
    mean_gap = sum(gaps[i] for i in run) / len(run)
    while run and gaps[run[0]] > mean_gap + 1e-9:
        run = run[1:]
    while run and gaps[run[-1]] > mean_gap + 1e-9:
        run = run[:-1]

    edges = np.arange(k + 1) / k
    return Bounds(lower=float(edges[run[0]]), upper=float(edges[run[-1] + 1]))
