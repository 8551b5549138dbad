"""Small trainable sentence encoder: hashed embedding bag -> dense layers.

The forward pass mean-pools embedding rows over the token slots, then
applies dense -> tanh -> dense.  The model is a bag: token order and
multiplicity beyond the mean do not matter.  Everything is float64 so
gradient checks can be strict.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .text import TokenSeq

CHECKPOINT_FORMAT = "contrastfit-encoder"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    vocab_buckets: int = 2**15
    embed_dim: int = 64
    hidden_dim: int = 64
    out_dim: int = 64
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_buckets", "embed_dim", "hidden_dim", "out_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class Encoder:
    config: EncoderConfig
    embedding: np.ndarray  # (vocab_buckets, embed_dim)
    w1: np.ndarray  # (embed_dim, hidden_dim)
    b1: np.ndarray  # (hidden_dim,)
    w2: np.ndarray  # (hidden_dim, out_dim)
    b2: np.ndarray  # (out_dim,)

    def params(self) -> dict[str, np.ndarray]:
        """Live views of the parameter arrays, keyed by name."""
        return {"embedding": self.embedding, "w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "Encoder":
        return Encoder(self.config, *(p.copy() for p in (self.embedding, self.w1, self.b1, self.w2, self.b2)))


class EncoderGrads(NamedTuple):
    """Gradient of (upstream . embed(seq)) w.r.t. every touched parameter.

    The embedding part is sparse: only rows in embed_slots are touched.
    """

    embed_slots: np.ndarray  # (k,) unique slots, sorted
    embed_rows: np.ndarray  # (k, embed_dim)
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def dense_embedding(self, vocab_buckets: int) -> np.ndarray:
        dense = np.zeros((vocab_buckets, self.embed_rows.shape[1]))
        dense[self.embed_slots] = self.embed_rows
        return dense


def init(config: EncoderConfig) -> Encoder:
    """Parameters uniform on [-init_scale, +init_scale], seeded."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    s = config.init_scale

    def draw(*shape):
        return rng.uniform(-s, s, size=shape)

    return Encoder(
        config=config,
        embedding=draw(config.vocab_buckets, config.embed_dim),
        w1=draw(config.embed_dim, config.hidden_dim),
        b1=draw(config.hidden_dim),
        w2=draw(config.hidden_dim, config.out_dim),
        b2=draw(config.out_dim),
    )


def _pool(encoder: Encoder, seq: TokenSeq) -> np.ndarray:
    if len(seq) == 0:
        return np.zeros(encoder.config.embed_dim)
    return encoder.embedding[list(seq.slots)].mean(axis=0)


def embed(encoder: Encoder, seq: TokenSeq) -> np.ndarray:
    """Sentence embedding: mean pooled rows -> dense -> tanh -> dense."""
    pooled = _pool(encoder, seq)
    hidden = np.tanh(pooled @ encoder.w1 + encoder.b1)
    return hidden @ encoder.w2 + encoder.b2


def grad_embed(encoder: Encoder, seq: TokenSeq, upstream: np.ndarray) -> EncoderGrads:
    """Exact gradient of (upstream . embed(seq)) w.r.t. the parameters."""
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (encoder.config.out_dim,):
        raise ValueError(f"upstream must have shape ({encoder.config.out_dim},)")

    pooled = _pool(encoder, seq)
    pre = pooled @ encoder.w1 + encoder.b1
    hidden = np.tanh(pre)

    g_b2 = upstream
    g_w2 = np.outer(hidden, upstream)
    d_hidden = encoder.w2 @ upstream
    d_pre = d_hidden * (1.0 - hidden**2)
    g_b1 = d_pre
    g_w1 = np.outer(pooled, d_pre)
    d_pooled = encoder.w1 @ d_pre

    if len(seq) == 0:
        slots = np.empty(0, dtype=np.int64)
        rows = np.empty((0, encoder.config.embed_dim))
    else:
        slots, counts = np.unique(np.asarray(seq.slots, dtype=np.int64), return_counts=True)
        rows = np.outer(counts / len(seq), d_pooled)
    return EncoderGrads(slots, rows, g_w1, g_b1, g_w2, g_b2)


def save_encoder(encoder: Encoder, path: str | Path) -> None:
    """Versioned npz checkpoint: JSON header + flat float64 parameter arrays."""
    header = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "config": asdict(encoder.config)}
    np.savez(
        path,
        header=np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        embedding=encoder.embedding,
        w1=encoder.w1,
        b1=encoder.b1,
        w2=encoder.w2,
        b2=encoder.b2,
    )


def load_encoder(path: str | Path) -> Encoder:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not an encoder checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        config = EncoderConfig(**header["config"])
        return Encoder(config, data["embedding"], data["w1"], data["b1"], data["w2"], data["b2"])
