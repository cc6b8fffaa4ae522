"""Event ontology: templates with role-typed slots.

File format (JSON object, one entry per event type):

    {
      "Conflict.Attack": {
        "template": "<arg1> attacked <arg2> using <arg3> at <arg4> place",
        "roles": {"1": "Attacker", "2": "Target", "3": "Instrument", "4": "Place"}
      }
    }

Slot ids referenced in the template text must be contiguous from 1 and each
must map to exactly one role.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import OntologyError
from .types import Template, _NUMBERED_SLOT


@dataclass(frozen=True)
class Ontology:
    templates: dict[str, Template]

    def __contains__(self, event_type: str) -> bool:
        return event_type in self.templates

    def __len__(self) -> int:
        return len(self.templates)

    def template(self, event_type: str) -> Template:
        try:
            return self.templates[event_type]
        except KeyError:
            raise OntologyError(f"unknown event type: {event_type}") from None

    def roles(self, event_type: str) -> tuple[str, ...]:
        return self.template(event_type).roles


def _build_template(event_type: str, raw: dict) -> Template:
    text = raw.get("template")
    if not isinstance(text, str) or not text.strip():
        raise OntologyError(f"{event_type}: missing template text")
    role_table = raw.get("roles", {})

    referenced = [int(m.group(1)) for m in _NUMBERED_SLOT.finditer(text)]
    if len(referenced) != len(set(referenced)):
        dup = next(s for s in referenced if referenced.count(s) > 1)
        raise OntologyError(f"{event_type}: slot <arg{dup}> referenced more than once")
    if sorted(referenced) != list(range(1, len(referenced) + 1)):
        raise OntologyError(
            f"{event_type}: slot ids must be contiguous from 1, got {sorted(referenced)}"
        )

    slots = []
    for slot_id in range(1, len(referenced) + 1):
        role = role_table.get(str(slot_id))
        if not role:
            raise OntologyError(f"{event_type}: slot <arg{slot_id}> has no role")
        slots.append((slot_id, role))
    extra = set(role_table) - {str(s) for s, _ in slots}
    if extra:
        raise OntologyError(f"{event_type}: roles for unknown slots {sorted(extra)}")
    return Template(event_type=event_type, text=text, slots=tuple(slots))


def load_ontology(path: str | Path) -> Ontology:
    """Load the ontology file, rejecting duplicate event types and slot gaps.

    An empty file (or empty JSON object) is a valid empty ontology.
    """
    content = Path(path).read_text(encoding="utf-8")
    if not content.strip():
        return Ontology(templates={})

    def reject_duplicates(pairs):
        # applies to nested objects too, so duplicate slot ids are caught as well
        obj = {}
        for key, value in pairs:
            if key in obj:
                raise OntologyError(f"duplicate key: {key}")
            obj[key] = value
        return obj

    try:
        raw = json.loads(content, object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as exc:
        raise OntologyError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise OntologyError(f"{path}: top level must be an object")

    templates = {name: _build_template(name, entry) for name, entry in raw.items()}
    return Ontology(templates=templates)
