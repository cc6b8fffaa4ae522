"""Corpus ingestion.

One document per line, JSON encoded:

    {
      "doc_id": "d1",
      "tokens": ["Police", "detained", "Mike", ...],
      "sentences": [[0, 8], [8, 17]],
      "events": [
        {"event_type": "Justice.Detain",
         "trigger": [1, 2],
         "arguments": [{"span": [2, 3], "role": "Detainee", "informative": true}]}
      ],
      "coref_clusters": [[[2, 3], [12, 13]]]
    }

Events may appear in any order in the file; they are sorted by trigger start
offset on ingest and numbered 1..n in that order. Events whose type is not in
the ontology are skipped with a warning so one ontology gap does not kill a
run. Ingestion is single-threaded per file.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable

from .errors import CorpusError
from .ontology import Ontology
from .types import CorefClusters, Document, EventMention, GoldArgument

logger = logging.getLogger(__name__)


def _span(raw, doc_id: str, what: str) -> tuple[int, int]:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, int) for v in raw)
    ):
        raise CorpusError(f"{doc_id}: malformed {what} span {raw!r}", doc_id=doc_id)
    return (raw[0], raw[1])


def _parse_document(record: dict, ontology: Ontology) -> Document:
    doc_id = record.get("doc_id", "")
    if not doc_id:
        raise CorpusError("record without doc_id")
    tokens = tuple(record.get("tokens", ()))
    n = len(tokens)

    raw_events = record.get("events", [])
    kept = []
    for raw in raw_events:
        event_type = raw.get("event_type", "")
        if event_type not in ontology:
            logger.warning("%s: skipping event with unknown type %r", doc_id, event_type)
            continue
        trigger = _span(raw.get("trigger"), doc_id, "trigger")
        if not (0 <= trigger[0] < trigger[1] <= n):
            raise CorpusError(
                f"{doc_id}: trigger span {trigger} outside document of {n} tokens",
                doc_id=doc_id,
            )
        roles = set(ontology.roles(event_type))
        arguments = []
        for arg in raw.get("arguments", ()):
            span = _span(arg.get("span"), doc_id, "argument")
            if not (0 <= span[0] < span[1] <= n):
                raise CorpusError(
                    f"{doc_id}: argument span {span} outside document of {n} tokens",
                    doc_id=doc_id,
                )
            role = arg.get("role", "")
            if role not in roles:
                raise CorpusError(
                    f"{doc_id}: role {role!r} not in role set of {event_type}",
                    doc_id=doc_id,
                )
            arguments.append(
                GoldArgument(span=span, role=role, informative=bool(arg.get("informative", True)))
            )
        kept.append((trigger, event_type, tuple(arguments)))

    kept.sort(key=lambda item: item[0])
    events = tuple(
        EventMention(
            event_type=event_type,
            trigger_span=trigger,
            appearance_index=i,
            gold_arguments=arguments,
        )
        for i, (trigger, event_type, arguments) in enumerate(kept, start=1)
    )

    clusters = tuple(
        frozenset(_span(s, doc_id, "coref") for s in cluster)
        for cluster in record.get("coref_clusters", ())
    )

    sentences = record.get("sentences") or [[0, n]]
    boundaries = tuple(_span(s, doc_id, "sentence")[0] for s in sentences)

    try:
        return Document(
            doc_id=doc_id,
            tokens=tokens,
            sentence_boundaries=boundaries,
            events=events,
            coref_clusters=CorefClusters(clusters=clusters),
        )
    except ValueError as exc:
        raise CorpusError(f"{doc_id}: {exc}", doc_id=doc_id) from exc


def parse_corpus(path: str | Path, ontology: Ontology) -> list[Document]:
    """Read a line-delimited corpus file into Documents in file order."""
    documents = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            documents.append(_parse_document(record, ontology))
    return documents


def sentence_spans(doc: Document) -> list[tuple[int, int]]:
    """Recover [start, end) sentence spans from boundary indices."""
    bounds = list(doc.sentence_boundaries) or [0]
    ends = bounds[1:] + [len(doc.tokens)]
    return list(zip(bounds, ends))


def write_corpus(path: str | Path, records: Iterable[dict]) -> None:
    """Write raw corpus records as JSONL; used by fixtures and tools."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
