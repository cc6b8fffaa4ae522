from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from synth import ONTOLOGY, write_fixture_tree

from argex.ontology import load_ontology
from argex.types import CorefClusters, Document, EventMention, GoldArgument


@pytest.fixture(scope="session")
def ontology_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("ontology") / "ontology.json"
    path.write_text(json.dumps(ONTOLOGY, indent=2))
    return path


@pytest.fixture(scope="session")
def ontology(ontology_path):
    return load_ontology(ontology_path)


@pytest.fixture(scope="session")
def attack_template(ontology):
    return ontology.template("Conflict.Attack")


@pytest.fixture(scope="session")
def fixture_tree(tmp_path_factory):
    """Full synthetic experiment tree: 20 test docs / 365 events + validation."""
    return write_fixture_tree(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def small_tree(tmp_path_factory):
    """Small tree for pipeline tests that do not need the full corpus."""
    return write_fixture_tree(
        tmp_path_factory.mktemp("small"), test_docs=3, test_events=12, val_docs=2, val_events=6, seed=11
    )


def make_document(
    doc_id: str = "d1",
    tokens=("Police", "detained", "Mike", "after", "the", "raid", "."),
    events=None,
    clusters=(),
    boundaries=(0,),
) -> Document:
    if events is None:
        events = [
            EventMention(
                event_type="Justice.Detain",
                trigger_span=(1, 2),
                appearance_index=1,
                gold_arguments=(
                    GoldArgument(span=(0, 1), role="Jailer"),
                    GoldArgument(span=(2, 3), role="Detainee"),
                ),
            )
        ]
    return Document(
        doc_id=doc_id,
        tokens=tuple(tokens),
        sentence_boundaries=tuple(boundaries),
        events=tuple(events),
        coref_clusters=CorefClusters(clusters=tuple(frozenset(c) for c in clusters)),
    )
