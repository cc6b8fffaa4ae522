"""Synthetic ontology and corpus generation.

The framework is designed to run end to end against deterministic
generators, so it ships a corpus builder producing documents with known
gold arguments, scripted first-token logits per slot, coreference
clusters, and a compatible ontology and constraint-rule set. Every gold
argument's surface string is unique across the corpus, which keeps oracle
runs exact and constraint effects observable.

Run as a module to materialize a dataset tree:

    python3 -m argex.synthetic out_dir --test-docs 20 --test-events 365
"""
from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

ONTOLOGY = {
    "Conflict.Attack": {
        "template": "<arg1> attacked <arg2> using <arg3> at <arg4> place",
        "roles": {"1": "Attacker", "2": "Target", "3": "Instrument", "4": "Place"},
    },
    "Justice.Detain": {
        "template": "<arg1> detained <arg2> in <arg3> prison",
        "roles": {"1": "Jailer", "2": "Detainee", "3": "Place"},
    },
    "Movement.Transport": {
        "template": "<arg1> transported <arg2> from <arg3> toward <arg4>",
        "roles": {"1": "Transporter", "2": "Passenger", "3": "Origin", "4": "Destination"},
    },
    "Life.Injure": {
        "template": "<arg1> injured <arg2> using <arg3>",
        "roles": {"1": "Injurer", "2": "Victim", "3": "Instrument"},
    },
}

RULES = [
    {"source_role": "Detainee", "banned_role": "Attacker"},
    {"source_role": "Victim", "banned_role": "Transporter"},
    {"source_role": "Target", "banned_role": "Jailer"},
]

# filler words must not collide with template scaffold words
FILLERS = ("meanwhile", "reportedly", "officials", "later", "nearby")

EVENT_TYPES = tuple(ONTOLOGY)


def build_document(doc_id: str, n_events: int, rng: random.Random, arg_rate: float = 0.8):
    """One synthetic document record plus its per-slot logit script."""
    tokens: list[str] = []
    sentence_spans: list[list[int]] = []
    events = []
    clusters: list[list[list[int]]] = []
    script: dict[str, dict[str, list[float]]] = {}
    tag = doc_id.replace("-", "")

    for ev_i in range(1, n_events + 1):
        start = len(tokens)
        event_type = EVENT_TYPES[(ev_i - 1) % len(EVENT_TYPES)]
        slots = sorted(ONTOLOGY[event_type]["roles"])
        golds = []
        slot_logits: dict[str, list[float]] = {}

        def emit_argument(slot_id: str, role: str):
            n_mentions = 2 if rng.random() < 0.15 else 1
            for mention in range(n_mentions):
                width = 2 if rng.random() < 0.2 else 1
                span_start = len(tokens)
                for part in range(width):
                    tokens.append(f"ent{tag}x{ev_i}x{slot_id}m{mention}p{part}")
                golds.append(
                    {"span": [span_start, len(tokens)], "role": role, "informative": True}
                )
                if rng.random() < 0.2:
                    clusters.append([[span_start, len(tokens)]])  # second span added below
            slot_logits[slot_id] = [round(rng.uniform(1.0, 5.0), 3), 0.0]

        first_slot, *rest_slots = slots
        if rng.random() < arg_rate:
            emit_argument(first_slot, ONTOLOGY[event_type]["roles"][first_slot])
        trigger_start = len(tokens)
        tokens.append(f"trg{tag}x{ev_i}")
        trigger = [trigger_start, len(tokens)]
        for slot_id in rest_slots:
            if rng.random() < arg_rate:
                tokens.append(rng.choice(FILLERS))
                emit_argument(slot_id, ONTOLOGY[event_type]["roles"][slot_id])
        tokens.append(".")
        sentence_spans.append([start, len(tokens)])

        events.append({"event_type": event_type, "trigger": trigger, "arguments": golds})
        if slot_logits:
            script[str(ev_i)] = slot_logits

    # close coref clusters with a trailing mention sentence
    if clusters:
        start = len(tokens)
        for cluster in clusters:
            span_start = len(tokens)
            tokens.append(f"coref{tag}n{span_start}")
            cluster.append([span_start, len(tokens)])
        tokens.append(".")
        sentence_spans.append([start, len(tokens)])

    record = {
        "doc_id": doc_id,
        "tokens": tokens,
        "sentences": sentence_spans,
        "events": events,
        "coref_clusters": clusters,
    }
    return record, script


def build_corpus(n_docs: int, total_events: int, seed: int, prefix: str = "doc"):
    """Records and a logit script for a corpus with an exact event total."""
    rng = random.Random(seed)
    base, extra = divmod(total_events, n_docs)
    records = []
    script: dict[str, dict] = {}
    for d in range(n_docs):
        n_events = base + (1 if d < extra else 0)
        doc_id = f"{prefix}{d:03d}"
        record, doc_script = build_document(doc_id, n_events, rng)
        records.append(record)
        if doc_script:
            script[doc_id] = doc_script
    return records, script


def write_fixture_tree(
    root: Path, *, test_docs=20, test_events=365, val_docs=6, val_events=24, seed=7
):
    """Materialize ontology, corpora, rules, and logit script files."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / "ontology.json").write_text(json.dumps(ONTOLOGY, indent=2))
    (root / "rules.json").write_text(json.dumps(RULES, indent=2))

    test_records, test_script = build_corpus(test_docs, test_events, seed, prefix="t")
    val_records, val_script = build_corpus(val_docs, val_events, seed + 1, prefix="v")
    with open(root / "test.jsonl", "w") as handle:
        for record in test_records:
            handle.write(json.dumps(record) + "\n")
    with open(root / "validation.jsonl", "w") as handle:
        for record in val_records:
            handle.write(json.dumps(record) + "\n")
    (root / "script.json").write_text(json.dumps({**test_script, **val_script}))
    return {
        "ontology": root / "ontology.json",
        "rules": root / "rules.json",
        "test": root / "test.jsonl",
        "validation": root / "validation.jsonl",
        "script": root / "script.json",
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic dataset tree.")
    parser.add_argument("out_dir")
    parser.add_argument("--test-docs", type=int, default=20)
    parser.add_argument("--test-events", type=int, default=365)
    parser.add_argument("--val-docs", type=int, default=6)
    parser.add_argument("--val-events", type=int, default=24)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = write_fixture_tree(
        Path(args.out_dir),
        test_docs=args.test_docs,
        test_events=args.test_events,
        val_docs=args.val_docs,
        val_events=args.val_events,
        seed=args.seed,
    )
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
