from __future__ import annotations

import random

import pytest

from conftest import make_document
from synth import FILLERS

from argex.errors import AlignmentError
from argex.sequences import (
    build_context,
    context_query_text,
    fill_template,
    parse_filled_template,
    parse_input_sequence,
    render_input,
)
from argex.types import EventMention, InputSequence


@pytest.fixture
def detain_doc(ontology):
    return make_document()


def detain_template(ontology):
    return ontology.template("Justice.Detain")


class TestRenderInput:
    def test_first_event_has_empty_retrieved_segment(self, ontology):
        doc = make_document()
        seq = render_input(doc.events[0], doc, detain_template(ontology), None, window=10)
        assert seq.retrieved_text == ""
        assert seq.text.startswith("<s>  </s> <s> ")

    def test_retrieved_prediction_inserted_verbatim(self, ontology):
        doc = make_document()
        from argex.types import EventPrediction

        retrieved = EventPrediction(
            event_ref=("d1", 1), filled_text="Mike was detained", arguments=(), prediction_order=1
        )
        seq = render_input(doc.events[0], doc, detain_template(ontology), retrieved, window=10)
        assert seq.retrieved_text == "Mike was detained"
        assert "<s> Mike was detained </s>" in seq.text

    def test_window_larger_than_document_covers_whole_document(self, ontology):
        doc = make_document()  # 7 tokens
        seq = render_input(doc.events[0], doc, detain_template(ontology), None, window=10)
        marked = [t for t in seq.context_tokens if t != "<tgr>"]
        assert tuple(marked) == doc.tokens

    def test_trigger_is_marked(self, ontology):
        doc = make_document()
        seq = render_input(doc.events[0], doc, detain_template(ontology), None, window=10)
        i = seq.context_tokens.index("<tgr>")
        assert seq.context_tokens[i + 1] == "detained"
        assert seq.context_tokens[i + 2] == "<tgr>"

    def test_window_extends_to_sentence_boundaries(self, ontology):
        tokens = tuple(f"w{i}" for i in range(30))
        events = [EventMention(event_type="Justice.Detain", trigger_span=(14, 15), appearance_index=1)]
        doc = make_document(tokens=tokens, events=events, boundaries=(0, 10, 20))
        context = build_context(doc.events[0], doc, detain_template(ontology), window=6)
        # raw window [11, 17) widens to the enclosing sentence [10, 20)
        assert context.context_span == (10, 20)

    def test_flat_text_roundtrips_scaffold(self, ontology):
        doc = make_document()
        seq = render_input(doc.events[0], doc, detain_template(ontology), None, window=5)
        recovered = parse_input_sequence(seq.text)
        assert recovered == seq

    def test_query_text_contains_context_and_template(self, ontology):
        doc = make_document()
        seq = render_input(doc.events[0], doc, detain_template(ontology), None, window=10)
        query = context_query_text(seq)
        assert "detained" in query and "<arg>" in query


class TestParseFilledTemplate:
    def test_partial_fill_maps_to_slots(self, attack_template):
        filled = "<arg> attacked Boston using <arg> at Boylston place"
        args = parse_filled_template(filled, attack_template)
        assert [(a.text, a.slot_id, a.role) for a in args] == [
            ("Boston", 2, "Target"),
            ("Boylston", 4, "Place"),
        ]

    def test_conjunction_splits_into_multiple_arguments(self, attack_template):
        filled = "Alice and Bob attacked Boston using <arg> at <arg> place"
        args = parse_filled_template(filled, attack_template)
        assert [(a.text, a.slot_id) for a in args] == [("Alice", 1), ("Bob", 1), ("Boston", 2)]

    def test_fully_unfilled_template_yields_no_arguments(self, attack_template):
        args = parse_filled_template(attack_template.placeholder_text, attack_template)
        assert args == ()

    def test_misaligned_text_raises_with_both_strings(self, attack_template):
        with pytest.raises(AlignmentError) as info:
            parse_filled_template("something entirely different", attack_template)
        assert info.value.filled_text == "something entirely different"
        assert info.value.template_text == attack_template.placeholder_text

    def test_fill_then_parse_recovers_gold_texts(self, attack_template):
        fills = {1: "Tsarnaev", 2: "spectators and officers", 4: "Boylston"}
        filled = fill_template(attack_template, fills)
        args = parse_filled_template(filled, attack_template)
        assert [(a.slot_id, a.text) for a in args] == [
            (1, "Tsarnaev"),
            (2, "spectators"),
            (2, "officers"),
            (4, "Boylston"),
        ]


def test_random_fill_parse_roundtrip(ontology):
    rng = random.Random(5)
    vocabulary = [*FILLERS, "convoy", "Omar", "Tsarnaev", "Boylston"]
    for _ in range(300):
        template = ontology.template(rng.choice(list(ontology.templates)))
        fills = {}
        expected = []
        for slot_id, role in template.slots:
            if rng.random() < 0.6:
                texts = [rng.choice(vocabulary) for _ in range(rng.choice((1, 1, 2)))]
                fills[slot_id] = " and ".join(texts)
                expected.extend((slot_id, t) for t in texts)
        args = parse_filled_template(fill_template(template, fills), template)
        assert [(a.slot_id, a.text) for a in args] == expected
        assert all(a.role == template.role_of(a.slot_id) for a in args)


def test_input_sequence_layout_is_exact():
    seq = InputSequence(
        retrieved_text="Mike was detained",
        template_text="<arg> won",
        context_tokens=("a", "<tgr>", "b", "<tgr>"),
    )
    assert seq.text == "<s> Mike was detained </s> <s> <arg> won </s> a <tgr> b <tgr> [EOS]"
