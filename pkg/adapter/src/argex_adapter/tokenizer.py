"""Hashing word tokenizer for the built-in tiny model.

Words map to stable ids by sha256, so no vocabulary file is needed and the
mapping is identical across processes. Collisions are possible and harmless
for a reference adapter. Real checkpoints use their own tokenizer instead.
"""
from __future__ import annotations

import hashlib

PAD, BOS, EOS = 0, 1, 2
SPECIALS = 3


class HashWordTokenizer:
    def __init__(self, vocab_size: int = 512):
        if vocab_size <= SPECIALS:
            raise ValueError("vocab_size must exceed the special tokens")
        self.vocab_size = vocab_size

    def token_id(self, word: str) -> int:
        digest = hashlib.sha256(word.encode("utf-8")).digest()
        return SPECIALS + int.from_bytes(digest[:8], "big") % (self.vocab_size - SPECIALS)

    def encode(self, text: str, max_length: int) -> tuple[list[int], bool]:
        """Ids with BOS/EOS; returns (ids, truncated)."""
        words = text.split()
        budget = max_length - 2
        truncated = len(words) > budget
        ids = [self.token_id(w) for w in words[:budget]]
        return [BOS, *ids, EOS], truncated

    def token_string(self, token_id: int) -> str:
        return str(token_id)
