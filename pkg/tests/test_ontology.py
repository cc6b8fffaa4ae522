from __future__ import annotations

import json

import pytest

from argex.errors import OntologyError
from argex.ontology import load_ontology
from argex.types import Template


def write(tmp_path, payload) -> str:
    path = tmp_path / "ontology.json"
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


def test_attack_template_has_four_role_slots(ontology):
    template = ontology.template("Conflict.Attack")
    assert template.slots == (
        (1, "Attacker"),
        (2, "Target"),
        (3, "Instrument"),
        (4, "Place"),
    )


def test_numbered_slots_rewritten_to_generic_placeholder(ontology):
    template = ontology.template("Conflict.Attack")
    assert template.placeholder_text == "<arg> attacked <arg> using <arg> at <arg> place"
    assert "<arg1>" in template.text


def test_empty_file_gives_empty_ontology(tmp_path):
    ontology = load_ontology(write(tmp_path, ""))
    assert len(ontology) == 0
    ontology = load_ontology(write(tmp_path, {}))
    assert len(ontology) == 0


def test_duplicate_slot_reference_rejected(tmp_path):
    path = write(
        tmp_path,
        {"X": {"template": "<arg1> met <arg2> and <arg2>", "roles": {"1": "A", "2": "B"}}},
    )
    with pytest.raises(OntologyError, match="<arg2> referenced more than once"):
        load_ontology(path)


def test_duplicate_event_type_rejected(tmp_path):
    payload = (
        '{"X": {"template": "<arg1> won", "roles": {"1": "A"}},'
        ' "X": {"template": "<arg1> lost", "roles": {"1": "A"}}}'
    )
    with pytest.raises(OntologyError, match="duplicate key: X"):
        load_ontology(write(tmp_path, payload))


def test_slot_without_role_rejected(tmp_path):
    path = write(tmp_path, {"X": {"template": "<arg1> met <arg2>", "roles": {"1": "A"}}})
    with pytest.raises(OntologyError, match="<arg2> has no role"):
        load_ontology(path)


def test_noncontiguous_slots_rejected(tmp_path):
    path = write(tmp_path, {"X": {"template": "<arg1> met <arg3>", "roles": {"1": "A", "3": "B"}}})
    with pytest.raises(OntologyError, match="contiguous"):
        load_ontology(path)


def test_role_for_unknown_slot_rejected(tmp_path):
    path = write(
        tmp_path, {"X": {"template": "<arg1> won", "roles": {"1": "A", "2": "ghost"}}}
    )
    with pytest.raises(OntologyError, match="unknown slots"):
        load_ontology(path)


def test_template_type_requires_contiguous_ids():
    with pytest.raises(ValueError, match="contiguous"):
        Template(event_type="X", text="<arg2> won", slots=((2, "A"),))
