"""Sequence-to-sequence backends and scaffold-constrained decoding.

Output text is built around the template scaffold: the literal segments are
fixed and the model only chooses what goes into each slot, so every response
parses against the requesting template by construction. Slot fills are
scored with the decoder's next-token logits at the position where the
argument span begins, which is also where the reported first-token logits
are read. Banned strings are excluded from the candidate set before
scoring, never post-hoc.

The built-in `tiny-random` backend is a small randomly initialized
encoder-decoder under a fixed seed: deterministic, dependency-light, and
sufficient to drive the protocol end to end. Pass a local checkpoint path
to wrap a real pretrained model with its own tokenizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch

from .tokenizer import BOS, EOS, PAD, HashWordTokenizer
from .wire import WireArgument, WireError, WireRequest, WireResponse

ARG_PLACEHOLDER = "<arg>"
MARKERS = {"<s>", "</s>", "[EOS]", "<tgr>", ARG_PLACEHOLDER}
MAX_CANDIDATES = 64


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "tiny-random"
    device: str = "cpu"
    top_k: int = 50
    max_length: int = 256
    seed: int = 0
    vocab_size: int = 512
    d_model: int = 32


class TinyBackend:
    """Randomly initialized BART-style model with a hashing word tokenizer."""

    name = "tiny-random"

    def __init__(self, config: AdapterConfig):
        from transformers import BartConfig, BartForConditionalGeneration

        self.config = config
        self.tokenizer = HashWordTokenizer(vocab_size=config.vocab_size)
        torch.manual_seed(config.seed)
        bart = BartConfig(
            vocab_size=config.vocab_size,
            d_model=config.d_model,
            encoder_layers=1,
            decoder_layers=1,
            encoder_attention_heads=2,
            decoder_attention_heads=2,
            encoder_ffn_dim=4 * config.d_model,
            decoder_ffn_dim=4 * config.d_model,
            max_position_embeddings=config.max_length + 8,
            pad_token_id=PAD,
            bos_token_id=BOS,
            eos_token_id=EOS,
            decoder_start_token_id=BOS,
        )
        self.model = BartForConditionalGeneration(bart).to(config.device).eval()

    def encode_input(self, text: str) -> tuple[torch.Tensor, bool]:
        ids, truncated = self.tokenizer.encode(text, self.config.max_length)
        return torch.tensor([ids], device=self.config.device), truncated

    def next_logits(self, input_ids: torch.Tensor, prefix_text: str) -> torch.Tensor:
        words = prefix_text.split()[-(self.config.max_length - 1) :]
        prefix = [BOS, *(self.tokenizer.token_id(w) for w in words)]
        decoder_ids = torch.tensor([prefix], device=self.config.device)
        with torch.no_grad():
            logits = self.model(input_ids=input_ids, decoder_input_ids=decoder_ids).logits
        return logits[0, -1].double()

    def first_token_id(self, word: str) -> int:
        return self.tokenizer.token_id(word)

    def token_string(self, token_id: int) -> str:
        return self.tokenizer.token_string(token_id)

    def encoder_vector(self, text: str) -> tuple[torch.Tensor, bool]:
        input_ids, truncated = self.encode_input(text)
        with torch.no_grad():
            states = self.model.get_encoder()(input_ids=input_ids).last_hidden_state
        return states[0].mean(dim=0).double(), truncated


class CheckpointBackend:
    """Wraps a local pretrained seq2seq checkpoint and its tokenizer."""

    def __init__(self, config: AdapterConfig):
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self.config = config
        self.name = config.model
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(config.model).to(config.device).eval()

    def encode_input(self, text: str) -> tuple[torch.Tensor, bool]:
        enc = self.tokenizer(
            text, truncation=True, max_length=self.config.max_length, return_tensors="pt"
        )
        truncated = len(self.tokenizer(text)["input_ids"]) > self.config.max_length
        return enc["input_ids"].to(self.config.device), truncated

    def next_logits(self, input_ids: torch.Tensor, prefix_text: str) -> torch.Tensor:
        start = self.model.config.decoder_start_token_id
        prefix = [start] + self.tokenizer.encode(prefix_text, add_special_tokens=False)
        prefix = prefix[-self.config.max_length :]
        decoder_ids = torch.tensor([prefix], device=self.config.device)
        with torch.no_grad():
            logits = self.model(input_ids=input_ids, decoder_input_ids=decoder_ids).logits
        return logits[0, -1].double()

    def first_token_id(self, word: str) -> int:
        ids = self.tokenizer.encode(" " + word, add_special_tokens=False)
        if not ids:
            ids = self.tokenizer.encode(word, add_special_tokens=False) or [
                self.tokenizer.unk_token_id or 0
            ]
        return ids[0]

    def token_string(self, token_id: int) -> str:
        return self.tokenizer.convert_ids_to_tokens([token_id])[0]

    def encoder_vector(self, text: str) -> tuple[torch.Tensor, bool]:
        input_ids, truncated = self.encode_input(text)
        with torch.no_grad():
            states = self.model.get_encoder()(input_ids=input_ids).last_hidden_state
        return states[0].mean(dim=0).double(), truncated


def build_backend(config: AdapterConfig):
    if config.model == "tiny-random":
        return TinyBackend(config)
    return CheckpointBackend(config)


def compose_input_text(request: WireRequest) -> str:
    return " ".join(
        [
            "<s>",
            request.retrieved_text,
            "</s>",
            "<s>",
            request.template_text,
            "</s>",
            *request.context_tokens,
            "[EOS]",
        ]
    )


def candidate_fills(request: WireRequest) -> list[str]:
    seen = []
    for token in request.context_tokens:
        if token.isalnum() and token not in MARKERS and token not in seen:
            seen.append(token)
            if len(seen) >= MAX_CANDIDATES:
                break
    return seen


class ScaffoldDecoder:
    def __init__(self, config: AdapterConfig):
        self.config = config
        self.backend = build_backend(config)

    @property
    def model_name(self) -> str:
        return self.config.model

    def _logit_summary(self, logits: torch.Tensor, top_k: int):
        k = min(top_k, logits.numel())
        values, indices = torch.topk(logits, k)
        pairs = tuple(
            (self.backend.token_string(int(i)), float(v)) for v, i in zip(values, indices)
        )
        if k < logits.numel():
            mask = torch.ones_like(logits, dtype=torch.bool)
            mask[indices] = False
            residual = float(torch.logsumexp(logits[mask], dim=0))
        else:
            residual = None
        raw_prob = float(torch.softmax(logits, dim=0).max())
        return pairs, residual, raw_prob

    def generate(self, request: WireRequest) -> WireResponse:
        segments = request.template_text.split(ARG_PLACEHOLDER)
        if len(segments) != len(request.slots) + 1:
            raise WireError(
                f"template text carries {len(segments) - 1} slots, "
                f"slot table has {len(request.slots)}"
            )
        if request.top_k < 1:
            raise WireError("top_k must be >= 1")

        input_ids, _ = self.backend.encode_input(compose_input_text(request))
        candidates = candidate_fills(request)

        output = segments[0]
        arguments = []
        for position, (slot_id, role) in enumerate(request.slots):
            logits = self.backend.next_logits(input_ids, output)
            allowed = [c for c in candidates if c not in request.banned.get(role, frozenset())]
            best = None
            best_score = float(logits[self.backend.first_token_id(ARG_PLACEHOLDER)])
            for candidate in allowed:
                score = float(logits[self.backend.first_token_id(candidate)])
                if score > best_score:
                    best, best_score = candidate, score
            if best is not None:
                pairs, residual, raw_prob = self._logit_summary(logits, request.top_k)
                arguments.append(
                    WireArgument(
                        text=best,
                        slot_id=slot_id,
                        role=role,
                        raw_prob=raw_prob,
                        top_logits=pairs,
                        residual_logmass=residual,
                    )
                )
                output += best
            else:
                output += ARG_PLACEHOLDER
            output += segments[position + 1]
        return WireResponse(filled_text=output, arguments=tuple(arguments))
