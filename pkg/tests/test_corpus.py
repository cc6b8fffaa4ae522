from __future__ import annotations

import json
import logging

import pytest

from synth import build_corpus

from argex.corpus import parse_corpus, sentence_spans, write_corpus
from argex.errors import CorpusError


def write_records(tmp_path, records) -> str:
    path = tmp_path / "corpus.jsonl"
    write_corpus(path, records)
    return str(path)


def simple_record(**overrides) -> dict:
    record = {
        "doc_id": "d1",
        "tokens": ["Rebels", "attacked", "the", "convoy", "then", "troops", "detained", "Omar", "."],
        "sentences": [[0, 5], [5, 9]],
        "events": [
            # out of appearance order on purpose: ingestion must sort by trigger offset
            {
                "event_type": "Justice.Detain",
                "trigger": [6, 7],
                "arguments": [{"span": [7, 8], "role": "Detainee", "informative": True}],
            },
            {
                "event_type": "Conflict.Attack",
                "trigger": [1, 2],
                "arguments": [
                    {"span": [0, 1], "role": "Attacker", "informative": True},
                    {"span": [2, 4], "role": "Target", "informative": False},
                ],
            },
        ],
        "coref_clusters": [[[0, 1], [5, 6]]],
    }
    record.update(overrides)
    return record


def test_events_ordered_by_trigger_offset(tmp_path, ontology):
    docs = parse_corpus(write_records(tmp_path, [simple_record()]), ontology)
    assert len(docs) == 1
    doc = docs[0]
    assert [e.event_type for e in doc.events] == ["Conflict.Attack", "Justice.Detain"]
    assert [e.appearance_index for e in doc.events] == [1, 2]
    assert len(doc.events[0].gold_arguments) == 2
    assert doc.text_of(doc.events[0].gold_arguments[1].span) == "the convoy"


def test_trigger_beyond_token_count_names_doc(tmp_path, ontology):
    bad = simple_record(events=[{"event_type": "Conflict.Attack", "trigger": [5, 99], "arguments": []}])
    with pytest.raises(CorpusError, match="d1") as info:
        parse_corpus(write_records(tmp_path, [bad]), ontology)
    assert info.value.doc_id == "d1"


def test_unknown_event_type_skipped_with_warning(tmp_path, ontology, caplog):
    record = simple_record()
    record["events"].append({"event_type": "Made.Up", "trigger": [4, 5], "arguments": []})
    with caplog.at_level(logging.WARNING):
        docs = parse_corpus(write_records(tmp_path, [record]), ontology)
    assert len(docs[0].events) == 2
    assert any("Made.Up" in message for message in caplog.messages)


def test_unknown_role_rejected(tmp_path, ontology):
    bad = simple_record(
        events=[
            {
                "event_type": "Conflict.Attack",
                "trigger": [1, 2],
                "arguments": [{"span": [0, 1], "role": "Chef", "informative": True}],
            }
        ]
    )
    with pytest.raises(CorpusError, match="Chef"):
        parse_corpus(write_records(tmp_path, [bad]), ontology)


def test_malformed_json_line_rejected(tmp_path, ontology):
    path = tmp_path / "corpus.jsonl"
    path.write_text("{not json}\n")
    with pytest.raises(CorpusError, match="not valid JSON"):
        parse_corpus(str(path), ontology)


def test_sentence_spans_roundtrip(tmp_path, ontology):
    doc = parse_corpus(write_records(tmp_path, [simple_record()]), ontology)[0]
    assert doc.sentence_boundaries == (0, 5)
    assert sentence_spans(doc) == [(0, 5), (5, 9)]


def test_table_shaped_corpus_counts(tmp_path, ontology):
    records, _ = build_corpus(20, 365, seed=3, prefix="c")
    docs = parse_corpus(write_records(tmp_path, records), ontology)
    assert len(docs) == 20
    assert sum(len(d.events) for d in docs) == 365


def test_coref_clusters_survive_ingestion(tmp_path, ontology):
    doc = parse_corpus(write_records(tmp_path, [simple_record()]), ontology)[0]
    cluster = doc.coref_clusters.cluster_of((0, 1))
    assert cluster == frozenset({(0, 1), (5, 6)})
