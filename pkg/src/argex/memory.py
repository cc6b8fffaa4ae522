"""Per-document prediction memory and similarity retrieval.

The memory caches the predictions of already-predicted events in one
document, in prediction order. Retrieval scores every cached prediction
against the querying event's context with a softmax over embedding dot
products and returns the argmax entry. Embeddings are L2-normalized, so
the dot product and cosine similarity coincide.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .types import EventPrediction


class Embedder(Protocol):
    """Sentence-embedding contract: deterministic, fixed dimension per run.

    Must be safely callable from concurrent document workers.
    """

    def embed(self, text: str) -> np.ndarray: ...


class HashedBagEmbedder:
    """Feature-hashed bag-of-words embedding, L2 normalized.

    Dependency-free stand-in for a neural sentence encoder: deterministic
    across processes (token hashing uses sha256, not the salted builtin
    hash) and cheap enough for desk-scale corpora.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in text.lower().split():
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            value = int.from_bytes(digest[:8], "big")
            sign = 1.0 if digest[8] % 2 == 0 else -1.0
            vec[value % self.dim] += sign
        norm = float(np.linalg.norm(vec))
        return vec / norm if norm > 0.0 else vec


class PrecomputedEmbedder:
    """Looks up vectors precomputed offline by a real sentence encoder.

    Table format: one row per text, ``<sha256-hex><TAB><v1> <v2> ...``.
    The key is the sha256 hex digest of the exact text. Vectors are
    L2-normalized on load.
    """

    def __init__(self, path: str | Path):
        self.table: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                key, _, values = line.partition("\t")
                vec = np.array([float(v) for v in values.split()], dtype=np.float64)
                if dim is None:
                    dim = vec.size
                elif vec.size != dim:
                    raise ValueError(f"{path}:{lineno}: vector dimension changed")
                norm = float(np.linalg.norm(vec))
                self.table[key] = vec / norm if norm > 0.0 else vec
        self.dim = dim or 0

    @staticmethod
    def key_of(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def embed(self, text: str) -> np.ndarray:
        key = self.key_of(text)
        if key not in self.table:
            raise KeyError(f"no precomputed embedding for text with key {key}")
        return self.table[key]


def embedding_text(prediction: EventPrediction) -> str:
    """Predictions are embedded by their full filled text."""
    return prediction.filled_text


@dataclass
class DocumentMemory:
    """Append-only cache of (prediction, embedding) pairs for one document."""

    doc_id: str
    embedder: Embedder
    entries: list[tuple[EventPrediction, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def cache(self, prediction: EventPrediction) -> None:
        if prediction.doc_id != self.doc_id:
            raise ValueError(
                f"memory for {self.doc_id} cannot cache a prediction from {prediction.doc_id}"
            )
        vector = self.embedder.embed(embedding_text(prediction))
        self.entries.append((prediction, vector))

    def raw_scores(self, context_text: str) -> np.ndarray:
        """Embedding dot products between the query context and each entry."""
        if not self.entries:
            raise ValueError("memory is empty")
        query = self.embedder.embed(context_text)
        return np.array([float(vector @ query) for _, vector in self.entries])

    def score_all(self, context_text: str) -> np.ndarray:
        """Softmax distribution over cached predictions; sums to 1."""
        scores = self.raw_scores(context_text)
        shifted = np.exp(scores - scores.max())
        return shifted / shifted.sum()

    def retrieve(self, context_text: str) -> EventPrediction | None:
        """Highest-scoring cached prediction, or None when memory is empty.

        The softmax in score_all is strictly monotone, so the argmax is taken
        over the raw dot products; ties go to the earliest-cached entry.
        """
        if not self.entries:
            return None
        index = int(np.argmax(self.raw_scores(context_text)))
        return self.entries[index][0]
