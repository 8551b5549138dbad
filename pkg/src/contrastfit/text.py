"""Word-level tokenization with hashed feature slots.

Texts are split on whitespace, tokens are stripped of surrounding
punctuation and (optionally) lowercased.  Each surviving surface form is
mapped to a bounded integer slot with a seeded, platform-stable 64-bit
hash, so the same surface always lands in the same embedding row and the
same LIME feature.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence


class Token(NamedTuple):
    surface: str
    slot: int


@dataclass(frozen=True)
class TextConfig:
    vocab_buckets: int = 2**15
    lowercase: bool = True
    hash_seed: int = 0

    def __post_init__(self):
        if self.vocab_buckets < 2:
            raise ValueError(f"vocab_buckets must be >= 2, got {self.vocab_buckets}")


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[Token, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    @property
    def slots(self) -> tuple[int, ...]:
        return tuple(t.slot for t in self.tokens)


def stable_hash(surface: str, seed: int = 0) -> int:
    """Seeded 64-bit hash of a surface form, identical across runs and platforms."""
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(surface.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str, config: TextConfig | None = None) -> TokenSeq:
    """Split on whitespace, trim punctuation, lowercase, and hash to slots.

    Tokens that are empty after trimming are dropped; order follows the
    source text.
    """
    config = config or TextConfig()
    tokens = []
    for raw in text.split():
        surface = _strip_punct(raw)
        if config.lowercase:
            surface = surface.lower()
        if not surface:
            continue
        slot = stable_hash(surface, config.hash_seed) % config.vocab_buckets
        tokens.append(Token(surface, slot))
    return TokenSeq(tuple(tokens))


def mask_tokens(seq: TokenSeq, mask: Sequence[int]) -> TokenSeq:
    """Keep token i iff mask[i] is set; order preserved."""
    if len(mask) != len(seq):
        raise ValueError(f"mask length {len(mask)} != token count {len(seq)}")
    return TokenSeq(tuple(t for t, m in zip(seq.tokens, mask) if m))
