"""Pluggable generator contract plus deterministic in-tree implementations.

The pipeline only ever talks to the Generator protocol. The mock produces
seeded, request-deterministic fills from the event context; the oracle
replays gold arguments with scripted logits so calibration and scheduling
paths can be exercised end to end without a neural model; the remote
implementation speaks the versioned wire protocol to an external adapter.

All implementations must honor the banned set (a banned surface string is
never decoded for its role; the slot is left unfilled instead) and must be
callable concurrently across documents. Within one document the pipeline
calls generate strictly sequentially because of the memory dependency.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .calibration import LogitVector, max_softmax
from .constraints import BannedSet
from .errors import AlignmentError, GeneratorProtocolError, GeneratorTransportError
from .sequences import CONJUNCTION, fill_template, parse_filled_template
from .types import (
    ARG_PLACEHOLDER,
    SEGMENT_BEGIN,
    SEGMENT_END,
    SEQUENCE_END,
    TRIGGER_MARK,
    ArgumentPrediction,
    Document,
    InputSequence,
    Template,
)

LogitScript = Mapping[tuple[str, int, int], Sequence[float]]

_MARKERS = {TRIGGER_MARK, SEGMENT_BEGIN, SEGMENT_END, SEQUENCE_END, ARG_PLACEHOLDER}


@dataclass(frozen=True)
class GenerateRequest:
    input: InputSequence
    template: Template
    event_ref: tuple[str, int]
    banned: BannedSet = field(default_factory=dict)
    top_k: int = 50

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class GenerateResponse:
    filled_text: str
    arguments: tuple[ArgumentPrediction, ...]


class Generator(Protocol):
    def generate(self, request: GenerateRequest) -> GenerateResponse: ...


def truncate_logits(
    values: Sequence[float], tokens: Sequence[str] | None, top_k: int
) -> LogitVector:
    """Keep the top_k largest logits; fold the rest into the residual mass."""
    order = np.argsort(-np.asarray(values, dtype=np.float64), kind="stable")
    kept = order[:top_k]
    dropped = order[top_k:]
    residual = float(np.exp(np.asarray(values, dtype=np.float64)[dropped]).sum()) if dropped.size else 0.0
    return LogitVector(
        values=tuple(float(values[i]) for i in kept),
        residual_mass=residual,
        tokens=tuple(tokens[i] for i in kept) if tokens is not None else None,
    )


def _derived_rng(*key_parts) -> np.random.Generator:
    digest = hashlib.sha256("\x1f".join(str(p) for p in key_parts).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


class MockGenerator:
    """Seeded deterministic generator filling slots from the event context.

    The per-slot decision is keyed on (seed, event, slot, retrieved text), so
    identical requests always yield identical responses while changes to the
    retrieved segment genuinely change the output, as a real conditional
    model's would.
    """

    def __init__(
        self,
        seed: int = 0,
        vocab: Sequence[str] = ("t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"),
        script: LogitScript | None = None,
        fill_rate: float = 0.85,
    ):
        self.seed = seed
        self.vocab = tuple(vocab)
        self.script = dict(script) if script else {}
        self.fill_rate = fill_rate

    def _slot_logits(self, request: GenerateRequest, slot_id: int, rng) -> LogitVector:
        doc_id, index = request.event_ref
        scripted = self.script.get((doc_id, index, slot_id))
        if scripted is not None:
            values = list(scripted)
            tokens = tuple(f"v{i}" for i in range(len(values)))
        else:
            values = list(rng.normal(0.0, 2.0, size=len(self.vocab)))
            tokens = self.vocab
        return truncate_logits(values, tokens, request.top_k)

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        doc_id, index = request.event_ref
        pool = [t for t in request.input.context_tokens if t not in _MARKERS and t.isalnum()]
        fills: dict[int, str] = {}
        arguments = []
        for slot_id, role in request.template.slots:
            rng = _derived_rng(self.seed, doc_id, index, slot_id, request.input.retrieved_text)
            if not pool or rng.random() > self.fill_rate:
                continue
            text = pool[int(rng.integers(len(pool)))]
            if text in request.banned.get(role, frozenset()):
                continue
            logits = self._slot_logits(request, slot_id, rng)
            raw = max_softmax(logits.values, logits.residual_mass, 1.0)
            fills[slot_id] = text
            arguments.append(
                ArgumentPrediction(
                    text=text,
                    slot_id=slot_id,
                    role=role,
                    first_token_logits=logits,
                    raw_prob=raw,
                )
            )
        return GenerateResponse(
            filled_text=fill_template(request.template, fills),
            arguments=tuple(arguments),
        )


class OracleGenerator:
    """Replays gold arguments as the model output.

    Logits come from a per-argument script keyed by (doc_id, appearance
    index, slot_id) when present, falling back to a fixed sharp vector, so
    downstream confidence machinery sees controllable values. Banned strings
    are honored by leaving them out of the fill.
    """

    default_logits: tuple[float, ...] = (6.0, 0.0)

    def __init__(self, documents: Mapping[str, Document], script: LogitScript | None = None):
        self.documents = dict(documents)
        self.script = dict(script) if script else {}

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        doc_id, index = request.event_ref
        doc = self.documents.get(doc_id)
        if doc is None:
            raise GeneratorProtocolError(f"oracle has no document {doc_id!r}")
        event = doc.event(index)

        fills: dict[int, str] = {}
        arguments = []
        for slot_id, role in request.template.slots:
            texts = [
                doc.text_of(gold.span)
                for gold in event.gold_arguments
                if gold.role == role and doc.text_of(gold.span) not in request.banned.get(role, frozenset())
            ]
            if not texts:
                continue
            scripted = self.script.get((doc_id, index, slot_id), self.default_logits)
            logits = truncate_logits(list(scripted), None, request.top_k)
            raw = max_softmax(logits.values, logits.residual_mass, 1.0)
            fills[slot_id] = CONJUNCTION.join(texts)
            for text in texts:
                arguments.append(
                    ArgumentPrediction(
                        text=text,
                        slot_id=slot_id,
                        role=role,
                        first_token_logits=logits,
                        raw_prob=raw,
                    )
                )
        return GenerateResponse(
            filled_text=fill_template(request.template, fills),
            arguments=tuple(arguments),
        )


class RemoteGenerator:
    """Client for a wire-protocol generator service."""

    def __init__(self, address: str, client=None, timeout: float = 30.0):
        import httpx

        self.address = address.rstrip("/")
        self.client = client or httpx.Client(timeout=timeout)

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        import httpx

        from . import protocol

        try:
            http_response = self.client.post(
                f"{self.address}/v1/generate",
                content=protocol.encode_request(request),
                headers={"content-type": "application/json"},
            )
        except httpx.TransportError as exc:
            raise GeneratorTransportError(f"generator transport failure: {exc}") from exc
        if http_response.status_code >= 500:
            raise GeneratorTransportError(
                f"generator server error {http_response.status_code}: {http_response.text}"
            )
        if http_response.status_code >= 400:
            raise GeneratorProtocolError(
                f"generator rejected request ({http_response.status_code}): {http_response.text}"
            )
        return protocol.decode_response(http_response.content)


def validate_response(response: GenerateResponse, request: GenerateRequest) -> list[str]:
    """Structural checks on a generator response; empty list means ok.

    Never raises, even on adversarial responses: every problem is returned
    as one diagnostic string.
    """
    diagnostics = []
    slot_ids = {slot_id for slot_id, _ in request.template.slots}

    try:
        parsed = parse_filled_template(response.filled_text, request.template)
    except AlignmentError as exc:
        diagnostics.append(f"template alignment: {exc}")
        parsed = None
    except Exception as exc:  # adversarial input must not crash validation
        diagnostics.append(f"template parse failure: {exc}")
        parsed = None

    if parsed is not None:
        expected = sorted((a.slot_id, a.text) for a in parsed)
        got = sorted((a.slot_id, a.text) for a in response.arguments)
        if expected != got:
            diagnostics.append(
                f"argument list does not match filled text: parsed {expected}, got {got}"
            )

    for arg in response.arguments:
        if arg.slot_id not in slot_ids:
            diagnostics.append(f"argument slot {arg.slot_id} not in template")
        if arg.first_token_logits is None:
            diagnostics.append(f"missing first-token logits for slot {arg.slot_id} ({arg.text!r})")
        if arg.text in request.banned.get(arg.role, frozenset()):
            diagnostics.append(f"banned text {arg.text!r} decoded for role {arg.role}")
    return diagnostics
