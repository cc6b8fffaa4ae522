"""Argument scoring: identification/classification under head or coref match.

A prediction identifies a gold argument when their head words match
(case-insensitive first token); under coref match it is also enough to
head-match any span in the gold argument's coreference cluster. A
prediction classifies the argument when the semantic role matches too.
Within one event, predictions and golds pair off one-to-one via a
maximum-cardinality matching, so a duplicated prediction cannot consume
two golds and scores never depend on prediction order. Micro P/R/F1 is
aggregated over the corpus. Only informative gold arguments count.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EvaluationError
from .types import ArgumentPrediction, Document, GoldArgument, Span

MODE_HEAD = "head"
MODE_COREF = "coref"

EventKey = tuple[str, int]  # (doc_id, appearance_index)


def _head(text: str) -> str:
    parts = text.split()
    return parts[0].casefold() if parts else ""


def head_match(pred_text: str, gold_span: Span, doc: Document) -> bool:
    """First word of the prediction equals the first word of the gold span."""
    head = _head(pred_text)
    if not head:
        return False
    return head == doc.tokens[gold_span[0]].casefold()


def coref_match(pred_text: str, gold_span: Span, doc: Document) -> bool:
    """Head match against the gold span or any span in its coref cluster."""
    if head_match(pred_text, gold_span, doc):
        return True
    cluster = doc.coref_clusters.cluster_of(gold_span)
    if cluster is None:
        return False
    return any(head_match(pred_text, span, doc) for span in cluster)


def _span_matcher(mode: str):
    if mode == MODE_HEAD:
        return head_match
    if mode == MODE_COREF:
        return coref_match
    raise EvaluationError(f"unknown match mode {mode!r}; use {MODE_HEAD!r} or {MODE_COREF!r}")


def _max_matching(edges: np.ndarray) -> int:
    """Size of a maximum one-to-one matching given a 0/1 edge matrix."""
    if edges.size == 0 or not edges.any():
        return 0
    rows, cols = linear_sum_assignment(edges, maximize=True)
    return int(edges[rows, cols].sum())


@dataclass
class _EventTally:
    identified: int = 0
    classified: int = 0
    n_pred: int = 0
    n_gold: int = 0


def _tally_event(
    preds: Sequence[ArgumentPrediction],
    golds: Sequence[GoldArgument],
    doc: Document,
    mode: str,
) -> _EventTally:
    matcher = _span_matcher(mode)
    span_edges = np.zeros((len(preds), len(golds)), dtype=np.int64)
    role_edges = np.zeros_like(span_edges)
    for i, pred in enumerate(preds):
        for j, gold in enumerate(golds):
            if matcher(pred.text, gold.span, doc):
                span_edges[i, j] = 1
                if pred.role == gold.role:
                    role_edges[i, j] = 1
    return _EventTally(
        identified=_max_matching(span_edges),
        classified=_max_matching(role_edges),
        n_pred=len(preds),
        n_gold=len(golds),
    )


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    correct: int
    n_pred: int
    n_gold: int

    @classmethod
    def from_counts(cls, correct: int, n_pred: int, n_gold: int) -> "PRF":
        precision = correct / n_pred if n_pred else 0.0
        recall = correct / n_gold if n_gold else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(precision, recall, f1, correct, n_pred, n_gold)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "correct": self.correct,
            "n_pred": self.n_pred,
            "n_gold": self.n_gold,
        }


@dataclass(frozen=True)
class Scores:
    arg_i: PRF
    arg_c: PRF

    def to_dict(self) -> dict:
        return {"arg_i": self.arg_i.to_dict(), "arg_c": self.arg_c.to_dict()}


@dataclass(frozen=True)
class ErrorCounts:
    """Table of error categories: every error falls in exactly one bucket."""

    unidentified: int  # golds no prediction span-matched
    spurious: int  # predictions matching no gold span
    misclassified: int  # span matched one-to-one but role wrong

    def to_dict(self) -> dict:
        return {
            "unidentified": self.unidentified,
            "spurious": self.spurious,
            "misclassified": self.misclassified,
        }


def _iter_events(
    predictions: Mapping[EventKey, Sequence[ArgumentPrediction]],
    documents: Mapping[str, Document],
    mode: str,
):
    for doc_id, index in predictions:
        doc = documents.get(doc_id)
        if doc is None:
            raise EvaluationError(f"predictions reference unknown document {doc_id!r}")
        if not (1 <= index <= len(doc.events)):
            raise EvaluationError(f"predictions reference unknown event ({doc_id!r}, {index})")
    for doc_id, doc in documents.items():
        for event in doc.events:
            preds = predictions.get((doc_id, event.appearance_index), ())
            golds = [g for g in event.gold_arguments if g.informative]
            yield _tally_event(preds, golds, doc, mode)


def score(
    predictions: Mapping[EventKey, Sequence[ArgumentPrediction]],
    documents: Mapping[str, Document],
    mode: str,
) -> Scores:
    """Micro-averaged Arg-I and Arg-C P/R/F1 over the corpus."""
    identified = classified = n_pred = n_gold = 0
    for tally in _iter_events(predictions, documents, mode):
        identified += tally.identified
        classified += tally.classified
        n_pred += tally.n_pred
        n_gold += tally.n_gold
    return Scores(
        arg_i=PRF.from_counts(identified, n_pred, n_gold),
        arg_c=PRF.from_counts(classified, n_pred, n_gold),
    )


def error_report(
    predictions: Mapping[EventKey, Sequence[ArgumentPrediction]],
    documents: Mapping[str, Document],
    mode: str,
) -> ErrorCounts:
    """Error taxonomy: unmatched golds, unmatched predictions, wrong roles."""
    unidentified = spurious = misclassified = 0
    for tally in _iter_events(predictions, documents, mode):
        unidentified += tally.n_gold - tally.identified
        spurious += tally.n_pred - tally.identified
        misclassified += tally.identified - tally.classified
    return ErrorCounts(
        unidentified=unidentified, spurious=spurious, misclassified=misclassified
    )


def metrics_table(
    predictions: Mapping[EventKey, Sequence[ArgumentPrediction]],
    documents: Mapping[str, Document],
) -> dict:
    """All four metric blocks plus error tables, mirroring the report layout."""
    out: dict = {}
    for mode in (MODE_HEAD, MODE_COREF):
        out[mode] = score(predictions, documents, mode).to_dict()
        out[mode]["errors"] = error_report(predictions, documents, mode).to_dict()
    return out
