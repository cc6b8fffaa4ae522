"""Versioned wire protocol for remote generators.

Messages are canonical JSON (sorted keys, compact separators, UTF-8).
Golden request/response files under protocol/golden/ pin the byte format;
any change here must regenerate them. A protocol_version mismatch is a
hard error, never a silent downgrade.
"""
from __future__ import annotations

import json
import math
from typing import Any

from .calibration import LogitVector
from .errors import GeneratorProtocolError
from .generator import GenerateRequest, GenerateResponse
from .types import ArgumentPrediction, InputSequence, Template

PROTOCOL_VERSION = 1


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def request_to_dict(request: GenerateRequest) -> dict:
    return {
        "protocol_version": PROTOCOL_VERSION,
        "event_ref": {
            "doc_id": request.event_ref[0],
            "appearance_index": request.event_ref[1],
        },
        "input": {
            "retrieved_text": request.input.retrieved_text,
            "template_text": request.input.template_text,
            "context_tokens": list(request.input.context_tokens),
        },
        "template": {
            "event_type": request.template.event_type,
            "text": request.template.text,
            "slots": [
                {"slot_id": slot_id, "role": role} for slot_id, role in request.template.slots
            ],
        },
        "banned": {role: sorted(texts) for role, texts in sorted(request.banned.items())},
        "top_k": request.top_k,
    }


def encode_request(request: GenerateRequest) -> bytes:
    return canonical_json(request_to_dict(request))


def response_to_dict(response: GenerateResponse) -> dict:
    arguments = []
    for arg in response.arguments:
        logits = arg.first_token_logits
        if logits is None:
            raise GeneratorProtocolError(
                f"cannot encode argument {arg.text!r} without first-token logits"
            )
        tokens = logits.tokens or tuple(str(i) for i in range(len(logits.values)))
        arguments.append(
            {
                "text": arg.text,
                "slot_id": arg.slot_id,
                "role": arg.role,
                "raw_prob": arg.raw_prob,
                "top_logits": [[token, value] for token, value in zip(tokens, logits.values)],
                "residual_logmass": (
                    math.log(logits.residual_mass) if logits.residual_mass > 0.0 else None
                ),
            }
        )
    return {
        "protocol_version": PROTOCOL_VERSION,
        "filled_text": response.filled_text,
        "arguments": arguments,
    }


def encode_response(response: GenerateResponse) -> bytes:
    return canonical_json(response_to_dict(response))


def _require(payload: dict, key: str, kind: str):
    if key not in payload:
        raise GeneratorProtocolError(f"{kind} message missing field {key!r}")
    return payload[key]


def _check_version(payload: dict, kind: str) -> None:
    version = _require(payload, "protocol_version", kind)
    if version != PROTOCOL_VERSION:
        raise GeneratorProtocolError(
            f"protocol version mismatch: got {version}, require {PROTOCOL_VERSION}"
        )


def _load(data: bytes | str, kind: str) -> dict:
    try:
        payload = json.loads(data)
    except ValueError as exc:  # JSONDecodeError plus undecodable raw bytes
        raise GeneratorProtocolError(f"{kind} message is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise GeneratorProtocolError(f"{kind} message must be a JSON object")
    _check_version(payload, kind)
    return payload


def decode_request(data: bytes | str) -> GenerateRequest:
    payload = _load(data, "request")
    try:
        ref = _require(payload, "event_ref", "request")
        raw_input = _require(payload, "input", "request")
        raw_template = _require(payload, "template", "request")
        template = Template(
            event_type=raw_template["event_type"],
            text=raw_template["text"],
            slots=tuple((s["slot_id"], s["role"]) for s in raw_template["slots"]),
        )
        return GenerateRequest(
            input=InputSequence(
                retrieved_text=raw_input["retrieved_text"],
                template_text=raw_input["template_text"],
                context_tokens=tuple(raw_input["context_tokens"]),
            ),
            template=template,
            event_ref=(ref["doc_id"], ref["appearance_index"]),
            banned={
                role: frozenset(texts)
                for role, texts in _require(payload, "banned", "request").items()
            },
            top_k=_require(payload, "top_k", "request"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GeneratorProtocolError(f"malformed request: {exc!r}") from exc


def decode_response(data: bytes | str) -> GenerateResponse:
    payload = _load(data, "response")
    try:
        arguments = []
        for raw in _require(payload, "arguments", "response"):
            pairs = raw["top_logits"]
            logmass = raw.get("residual_logmass")
            logits = LogitVector(
                values=tuple(float(value) for _, value in pairs),
                residual_mass=math.exp(logmass) if logmass is not None else 0.0,
                tokens=tuple(str(token) for token, _ in pairs),
            )
            arguments.append(
                ArgumentPrediction(
                    text=raw["text"],
                    slot_id=raw["slot_id"],
                    role=raw["role"],
                    first_token_logits=logits,
                    raw_prob=raw.get("raw_prob"),
                )
            )
        return GenerateResponse(
            filled_text=_require(payload, "filled_text", "response"),
            arguments=tuple(arguments),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GeneratorProtocolError(f"malformed response: {exc!r}") from exc
