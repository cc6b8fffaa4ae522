"""Generator input construction and filled-template parsing."""
from __future__ import annotations

import re

from .errors import AlignmentError
from .types import (
    ARG_PLACEHOLDER,
    SEGMENT_BEGIN,
    SEGMENT_END,
    SEQUENCE_END,
    TRIGGER_MARK,
    ArgumentPrediction,
    Document,
    EventContext,
    EventMention,
    EventPrediction,
    InputSequence,
    Template,
)

CONJUNCTION = " and "


def build_context(event: EventMention, doc: Document, template: Template, window: int) -> EventContext:
    """Token window of size `window` centered on the trigger.

    Clamped at document boundaries, then extended outward to the nearest
    sentence boundaries; always contains the whole trigger span.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    n = len(doc.tokens)
    ts, te = event.trigger_span
    center = (ts + te) // 2
    start = max(0, center - window // 2)
    end = min(n, start + window)
    start = max(0, min(start, end - window))  # reclaim width lost at the right edge
    start = min(start, ts)
    end = max(end, te)

    bounds = list(doc.sentence_boundaries) or [0]
    start = max(b for b in bounds if b <= start)
    following = [b for b in bounds if b >= end]
    end = min(following) if following else n

    return EventContext(
        context_tokens=doc.tokens[start:end],
        context_span=(start, end),
        template=template,
    )


def mark_trigger(context: EventContext, event: EventMention) -> tuple[str, ...]:
    """Context tokens with the trigger wrapped in ``<tgr>`` marks."""
    offset = context.context_span[0]
    ts, te = event.trigger_span[0] - offset, event.trigger_span[1] - offset
    tokens = list(context.context_tokens)
    return tuple(tokens[:ts] + [TRIGGER_MARK] + tokens[ts:te] + [TRIGGER_MARK] + tokens[te:])


def render_input(
    event: EventMention,
    doc: Document,
    template: Template,
    retrieved: EventPrediction | None,
    window: int,
) -> InputSequence:
    """Assemble the generator input for one event.

    The retrieved segment is the empty string when no prediction is
    available, which is always the case for the first event of a pass.
    """
    context = build_context(event, doc, template, window)
    return InputSequence(
        retrieved_text=retrieved.filled_text if retrieved is not None else "",
        template_text=template.placeholder_text,
        context_tokens=mark_trigger(context, event),
    )


def context_query_text(seq: InputSequence) -> str:
    """Text embedded when querying memory: context tokens plus template."""
    return " ".join(seq.context_tokens) + " " + seq.template_text


def parse_input_sequence(text: str) -> InputSequence:
    """Invert InputSequence.text; used to check the scaffold round-trips."""
    pattern = re.compile(
        re.escape(SEGMENT_BEGIN)
        + r" (.*) "
        + re.escape(SEGMENT_END)
        + " "
        + re.escape(SEGMENT_BEGIN)
        + r" (.*) "
        + re.escape(SEGMENT_END)
        + r" (.*) "
        + re.escape(SEQUENCE_END),
        re.DOTALL,
    )
    match = pattern.fullmatch(text)
    if match is None:
        raise AlignmentError(text, "<input sequence>")
    retrieved, template_text, context = match.groups()
    return InputSequence(
        retrieved_text=retrieved,
        template_text=template_text,
        context_tokens=tuple(context.split(" ")) if context else (),
    )


def scaffold_segments(template: Template) -> list[str]:
    """Literal text pieces of the placeholder-form template, around each slot."""
    return template.placeholder_text.split(ARG_PLACEHOLDER)


def fill_template(template: Template, fills: dict[int, str]) -> str:
    """Splice per-slot fill strings into the scaffold; missing slots keep ``<arg>``."""
    segments = scaffold_segments(template)
    out = [segments[0]]
    for slot_id, _ in template.slots:
        out.append(fills.get(slot_id, ARG_PLACEHOLDER))
        out.append(segments[slot_id])
    return "".join(out)


def parse_filled_template(filled_text: str, template: Template) -> tuple[ArgumentPrediction, ...]:
    """Diff a filled template against its scaffold and extract arguments.

    A slot whose placeholder was left in place yields no argument. Multiple
    arguments in one slot arrive joined with "and" and are split back apart;
    argument texts containing an internal " and " are an accepted ambiguity.
    Greedy (longest) matching is used to align fills between scaffold pieces.
    """
    segments = scaffold_segments(template)
    pattern = "(.*)".join(re.escape(segment) for segment in segments)
    match = re.fullmatch(pattern, filled_text, re.DOTALL)
    if match is None:
        raise AlignmentError(filled_text, template.placeholder_text)

    arguments = []
    for (slot_id, role), fill in zip(template.slots, match.groups()):
        if fill == ARG_PLACEHOLDER:
            continue
        for piece in fill.split(CONJUNCTION):
            piece = piece.strip()
            if piece and piece != ARG_PLACEHOLDER:
                arguments.append(ArgumentPrediction(text=piece, slot_id=slot_id, role=role))
    return tuple(arguments)
