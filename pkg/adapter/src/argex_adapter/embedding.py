"""Sentence embeddings from the backend encoder.

Mean-pooled encoder states, L2 normalized to unit length so dot product
and cosine similarity coincide downstream. Over-length texts are truncated
and reported back by index. The export helper writes the tab-separated
(text-hash, vector) table the extraction pipeline reads offline.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np


class EncoderEmbedder:
    def __init__(self, backend):
        self.backend = backend

    def embed_batch(self, texts: list[str]) -> tuple[list[list[float]], list[int]]:
        vectors = []
        truncated: list[int] = []
        for index, text in enumerate(texts):
            state, was_truncated = self.backend.encoder_vector(text)
            vector = state.cpu().numpy().astype(np.float64)
            norm = float(np.linalg.norm(vector))
            if norm > 0.0:
                vector = vector / norm
            vectors.append([float(v) for v in vector])
            if was_truncated:
                truncated.append(index)
        return vectors, truncated


def export_table(embedder: EncoderEmbedder, texts: list[str], path: str | Path) -> int:
    """Write `sha256(text)\\tv1 v2 ...` rows; returns the row count."""
    vectors, _ = embedder.embed_batch(texts)
    with open(path, "w", encoding="utf-8") as handle:
        for text, vector in zip(texts, vectors):
            key = hashlib.sha256(text.encode("utf-8")).hexdigest()
            handle.write(key + "\t" + " ".join(repr(v) for v in vector) + "\n")
    return len(texts)
