"""Wire-format types for the generator protocol, version 1.

This mirrors the documented JSON format of the extraction pipeline (see the
golden files shipped with it); the adapter deliberately carries its own
implementation so the two sides only meet on bytes. Canonical serialization
is sorted-keys compact JSON, UTF-8.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

PROTOCOL_VERSION = 1


class WireError(Exception):
    """Protocol violation in an incoming message."""


@dataclass(frozen=True)
class WireRequest:
    doc_id: str
    appearance_index: int
    retrieved_text: str
    template_text: str
    context_tokens: tuple[str, ...]
    event_type: str
    template_source: str
    slots: tuple[tuple[int, str], ...]  # (slot_id, role)
    banned: dict[str, frozenset[str]] = field(default_factory=dict)
    top_k: int = 50


@dataclass(frozen=True)
class WireArgument:
    text: str
    slot_id: int
    role: str
    raw_prob: float
    top_logits: tuple[tuple[str, float], ...]
    residual_logmass: float | None


@dataclass(frozen=True)
class WireResponse:
    filled_text: str
    arguments: tuple[WireArgument, ...]


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def parse_request(data: bytes | str) -> WireRequest:
    try:
        payload = json.loads(data)
    except ValueError as exc:  # covers undecodable bytes too
        raise WireError(f"request is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise WireError("request must be a JSON object")
    version = payload.get("protocol_version")
    if version != PROTOCOL_VERSION:
        raise WireError(f"protocol version mismatch: got {version}, serve {PROTOCOL_VERSION}")
    try:
        ref = payload["event_ref"]
        raw_input = payload["input"]
        template = payload["template"]
        return WireRequest(
            doc_id=ref["doc_id"],
            appearance_index=int(ref["appearance_index"]),
            retrieved_text=raw_input["retrieved_text"],
            template_text=raw_input["template_text"],
            context_tokens=tuple(raw_input["context_tokens"]),
            event_type=template["event_type"],
            template_source=template["text"],
            slots=tuple((int(s["slot_id"]), s["role"]) for s in template["slots"]),
            banned={role: frozenset(texts) for role, texts in payload["banned"].items()},
            top_k=int(payload["top_k"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise WireError(f"malformed request: {exc!r}") from exc


def request_to_dict(request: WireRequest) -> dict:
    return {
        "protocol_version": PROTOCOL_VERSION,
        "event_ref": {
            "doc_id": request.doc_id,
            "appearance_index": request.appearance_index,
        },
        "input": {
            "retrieved_text": request.retrieved_text,
            "template_text": request.template_text,
            "context_tokens": list(request.context_tokens),
        },
        "template": {
            "event_type": request.event_type,
            "text": request.template_source,
            "slots": [{"slot_id": slot_id, "role": role} for slot_id, role in request.slots],
        },
        "banned": {role: sorted(texts) for role, texts in sorted(request.banned.items())},
        "top_k": request.top_k,
    }


def response_to_bytes(response: WireResponse) -> bytes:
    return canonical(
        {
            "protocol_version": PROTOCOL_VERSION,
            "filled_text": response.filled_text,
            "arguments": [
                {
                    "text": arg.text,
                    "slot_id": arg.slot_id,
                    "role": arg.role,
                    "raw_prob": arg.raw_prob,
                    "top_logits": [[token, value] for token, value in arg.top_logits],
                    "residual_logmass": arg.residual_logmass,
                }
                for arg in response.arguments
            ],
        }
    )


def parse_response(data: bytes | str) -> WireResponse:
    payload = json.loads(data)
    if payload.get("protocol_version") != PROTOCOL_VERSION:
        raise WireError("protocol version mismatch in response")
    return WireResponse(
        filled_text=payload["filled_text"],
        arguments=tuple(
            WireArgument(
                text=arg["text"],
                slot_id=int(arg["slot_id"]),
                role=arg["role"],
                raw_prob=float(arg["raw_prob"]),
                top_logits=tuple((str(t), float(v)) for t, v in arg["top_logits"]),
                residual_logmass=(
                    float(arg["residual_logmass"]) if arg["residual_logmass"] is not None else None
                ),
            )
            for arg in payload["arguments"]
        ),
    )


def error_frame(message: str) -> bytes:
    return canonical({"protocol_version": PROTOCOL_VERSION, "error": message})
