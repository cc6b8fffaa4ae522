"""Domain types: documents, events, templates, predictions.

All types are immutable after construction and safe to share across
concurrent readers. Token spans are half-open [start, end) over the
whitespace-delimited tokens of the corpus file.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .calibration import LogitVector

Span = tuple[int, int]

ARG_PLACEHOLDER = "<arg>"
TRIGGER_MARK = "<tgr>"
SEGMENT_BEGIN = "<s>"
SEGMENT_END = "</s>"
SEQUENCE_END = "[EOS]"

_NUMBERED_SLOT = re.compile(r"<arg(\d+)>")


@dataclass(frozen=True)
class GoldArgument:
    span: Span
    role: str
    informative: bool = True


@dataclass(frozen=True)
class EventMention:
    event_type: str
    trigger_span: Span
    appearance_index: int  # 1-based position within the document
    gold_arguments: tuple[GoldArgument, ...] = ()

    def __post_init__(self):
        s, e = self.trigger_span
        if not (0 <= s < e):
            raise ValueError(f"bad trigger span {self.trigger_span}")
        if self.appearance_index < 1:
            raise ValueError("appearance_index is 1-based")


@dataclass(frozen=True)
class CorefClusters:
    """Disjoint sets of coreferent token spans."""

    clusters: tuple[frozenset[Span], ...] = ()

    def __post_init__(self):
        seen: set[Span] = set()
        for cluster in self.clusters:
            for span in cluster:
                if span in seen:
                    raise ValueError(f"span {span} appears in more than one cluster")
                seen.add(span)

    def cluster_of(self, span: Span) -> frozenset[Span] | None:
        for cluster in self.clusters:
            if span in cluster:
                return cluster
        return None


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[str, ...]
    sentence_boundaries: tuple[int, ...]  # token indices where sentences start
    events: tuple[EventMention, ...]
    coref_clusters: CorefClusters = field(default_factory=CorefClusters)

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be nonempty")
        n = len(self.tokens)
        starts = [e.trigger_span[0] for e in self.events]
        if starts != sorted(starts):
            raise ValueError(f"{self.doc_id}: events must be ordered by trigger offset")
        for event in self.events:
            if event.trigger_span[1] > n:
                raise ValueError(
                    f"{self.doc_id}: trigger span {event.trigger_span} beyond {n} tokens"
                )
        indices = [e.appearance_index for e in self.events]
        if indices != list(range(1, len(self.events) + 1)):
            raise ValueError(f"{self.doc_id}: appearance indices must be 1..n in order")
        if self.sentence_boundaries and self.sentence_boundaries[0] != 0:
            raise ValueError("first sentence must start at token 0")

    def text_of(self, span: Span) -> str:
        return " ".join(self.tokens[span[0] : span[1]])

    def event(self, appearance_index: int) -> EventMention:
        return self.events[appearance_index - 1]


@dataclass(frozen=True)
class Template:
    """Ontology scaffold for one event type.

    `text` keeps the authored numbered form (``<arg1> attacked <arg2> ...``);
    `placeholder_text` is the same scaffold with every numbered slot rewritten
    to the generic ``<arg>`` token, which is the form fed to the generator.
    """

    event_type: str
    text: str
    slots: tuple[tuple[int, str], ...]  # (slot_id, role), slot ids contiguous from 1

    def __post_init__(self):
        ids = [slot_id for slot_id, _ in self.slots]
        if ids != list(range(1, len(self.slots) + 1)):
            raise ValueError(
                f"template {self.event_type}: slot ids must be contiguous from 1, got {ids}"
            )

    @property
    def placeholder_text(self) -> str:
        return _NUMBERED_SLOT.sub(ARG_PLACEHOLDER, self.text)

    @property
    def roles(self) -> tuple[str, ...]:
        return tuple(role for _, role in self.slots)

    def role_of(self, slot_id: int) -> str:
        return self.slots[slot_id - 1][1]

    def slot_of(self, role: str) -> int | None:
        for slot_id, slot_role in self.slots:
            if slot_role == role:
                return slot_id
        return None


@dataclass(frozen=True)
class EventContext:
    """Contiguous token window around a trigger plus the event's template."""

    context_tokens: tuple[str, ...]
    context_span: Span  # window position within the source document
    template: Template


@dataclass(frozen=True)
class ArgumentPrediction:
    text: str
    slot_id: int
    role: str
    first_token_logits: "LogitVector | None" = None
    raw_prob: float | None = None
    calibrated_prob: float | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("argument text must be nonempty")
        if self.raw_prob is not None and not (0.0 < self.raw_prob <= 1.0):
            raise ValueError(f"raw_prob must be in (0, 1], got {self.raw_prob}")
        if self.calibrated_prob is not None and not (0.0 < self.calibrated_prob <= 1.0):
            raise ValueError(f"calibrated_prob must be in (0, 1], got {self.calibrated_prob}")


@dataclass(frozen=True)
class EventPrediction:
    event_ref: tuple[str, int]  # (doc_id, appearance_index)
    filled_text: str
    arguments: tuple[ArgumentPrediction, ...]
    prediction_order: int

    @property
    def doc_id(self) -> str:
        return self.event_ref[0]

    @property
    def appearance_index(self) -> int:
        return self.event_ref[1]


@dataclass(frozen=True)
class InputSequence:
    """Generator input: retrieved prediction, unfilled template, marked context.

    The flat form is ``<s> m </s> <s> T </s> x1 ... xn [EOS]`` where m is the
    retrieved prediction text (empty string when memory is empty), T the
    placeholder-form template, and x1..xn the context tokens with the trigger
    wrapped in ``<tgr>`` marks.
    """

    retrieved_text: str
    template_text: str
    context_tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        parts = [
            SEGMENT_BEGIN,
            self.retrieved_text,
            SEGMENT_END,
            SEGMENT_BEGIN,
            self.template_text,
            SEGMENT_END,
            *self.context_tokens,
            SEQUENCE_END,
        ]
        return " ".join(parts)
