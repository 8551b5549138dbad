"""Unified inference over both model kinds: label = head(encoder(text)).

Both heads are an affine map from the sentence embedding to class logits
followed by a softmax; they differ only in how they were trained
(frozen-embedding logistic head vs. end-to-end softmax layer).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import encoder as enc
from .corpus import Dataset
from .text import TextConfig, TokenSeq, tokenize

HEAD_FROZEN = "frozen-embedding"
HEAD_END_TO_END = "end-to-end"

MODEL_FORMAT = "contrastfit-model"
MODEL_VERSION = 1


@dataclass
class TrainedModel:
    encoder: enc.Encoder
    head_kind: str
    head_weights: np.ndarray  # (out_dim, n_labels)
    head_bias: np.ndarray  # (n_labels,)
    labels: list[str]
    text_config: TextConfig = field(default_factory=TextConfig)
    train_config: dict | None = None

    def __post_init__(self):
        if self.head_kind not in (HEAD_FROZEN, HEAD_END_TO_END):
            raise ValueError(f"unknown head kind {self.head_kind!r}")
        n = len(self.labels)
        if self.head_weights.shape != (self.encoder.config.out_dim, n):
            raise ValueError(
                f"head weights shape {self.head_weights.shape} != "
                f"({self.encoder.config.out_dim}, {n})"
            )
        if self.head_bias.shape != (n,):
            raise ValueError(f"head bias shape {self.head_bias.shape} != ({n},)")
        if self.encoder.config.vocab_buckets != self.text_config.vocab_buckets:
            raise ValueError("encoder and text config disagree on vocab_buckets")


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def predict_proba_tokens(model: TrainedModel, seq: TokenSeq) -> np.ndarray:
    """Class probabilities for an already-tokenized input."""
    embedding = enc.embed(model.encoder, seq)
    return softmax(embedding @ model.head_weights + model.head_bias)


def predict_proba(model: TrainedModel, text: str) -> np.ndarray:
    """Class probabilities over model.labels; sums to 1."""
    return predict_proba_tokens(model, tokenize(text, model.text_config))


def predict(model: TrainedModel, text: str) -> str:
    """Argmax label; ties break toward the lowest label index."""
    proba = predict_proba(model, text)
    return model.labels[int(np.argmax(proba))]


def write_predictions_csv(model: TrainedModel, dataset: Dataset, path: str | Path) -> None:
    """Batch predictions: text_id, gold_label, predicted_label, max_probability."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text_id", "gold_label", "predicted_label", "max_probability"])
        for i, ex in enumerate(dataset):
            proba = predict_proba(model, ex.text)
            top = int(np.argmax(proba))
            writer.writerow([i, ex.label, model.labels[top], repr(float(proba[top]))])


def save_model(model: TrainedModel, path: str | Path) -> None:
    """npz checkpoint: encoder + head + label inventory + configs and seeds."""
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "head_kind": model.head_kind,
        "labels": model.labels,
        "encoder_config": asdict(model.encoder.config),
        "text_config": asdict(model.text_config),
        "train_config": model.train_config,
    }
    np.savez(
        path,
        header=np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        embedding=model.encoder.embedding,
        w1=model.encoder.w1,
        b1=model.encoder.b1,
        w2=model.encoder.w2,
        b2=model.encoder.b2,
        head_weights=model.head_weights,
        head_bias=model.head_bias,
    )


def load_model(path: str | Path) -> TrainedModel:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a model checkpoint")
        if header.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        encoder = enc.Encoder(
            enc.EncoderConfig(**header["encoder_config"]),
            data["embedding"], data["w1"], data["b1"], data["w2"], data["b2"],
        )
        return TrainedModel(
            encoder=encoder,
            head_kind=header["head_kind"],
            head_weights=data["head_weights"],
            head_bias=data["head_bias"],
            labels=list(header["labels"]),
            text_config=TextConfig(**header["text_config"]),
            train_config=header.get("train_config"),
        )
