"""The two finetuning objectives and the frozen-embedding head fit.

Contrastive route: generate same/different-class sentence pairs, finetune
the encoder so cosine similarity matches the pair target, then fit a
multinomial logistic head on the frozen embeddings.  Vanilla route: bolt
a softmax layer onto the encoder and train everything end to end on
cross-entropy.  Both share the Adam optimizer and warmup schedule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, asdict
from typing import NamedTuple

import numpy as np

from . import encoder as enc
from .classify import HEAD_END_TO_END, HEAD_FROZEN, TrainedModel
from .corpus import Dataset, Example
from .optim import Adam, lr_multiplier
from .text import TextConfig, TokenSeq, tokenize

logger = logging.getLogger(__name__)

NORM_EPS = 1e-12
HEAD_RIDGE = 1e-8
HEAD_TOL = 1e-6
HEAD_MAX_ITER = 5000


class TrainingError(RuntimeError):
    """Training hit a non-finite loss; carries step diagnostics."""


@dataclass(frozen=True)
class Pair:
    a: Example
    b: Example
    target: int

    def __post_init__(self):
        if self.target not in (0, 1):
            raise ValueError("pair target must be 0 or 1")
        if self.target == 1 and self.a.label != self.b.label:
            raise ValueError("target-1 pair with differing labels")
        if self.target == 0 and self.a.label == self.b.label:
            raise ValueError("target-0 pair with equal labels")


@dataclass
class PairSet:
    pairs: list[Pair]
    R: int
    class_count: int

    def __post_init__(self):
        if len(self.pairs) != 2 * self.R * self.class_count:
            raise ValueError(
                f"pair set has {len(self.pairs)} pairs, expected "
                f"2*{self.R}*{self.class_count} = {2 * self.R * self.class_count}"
            )

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class TrainConfig:
    """Shared trainer hyperparameters.

    The defaults form the "paper" profile (lr 2e-5, one epoch), sized for
    finetuning large pretrained encoders; ``desk()`` returns the profile
    tuned for the small from-scratch encoder used here (lr 1e-2, five
    epochs).  Everything else is common to both.
    """

    learning_rate: float = 2e-5
    warmup_ratio: float = 0.1
    seed: int = 42
    batch_size: int = 8
    epochs: int = 1
    R: int = 20

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.warmup_ratio <= 1.0:
            raise ValueError("warmup_ratio must be in [0, 1]")
        if self.batch_size < 1 or self.epochs < 1 or self.R < 1:
            raise ValueError("batch_size, epochs and R must be >= 1")

    @classmethod
    def paper(cls, **overrides) -> "TrainConfig":
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        overrides.setdefault("learning_rate", 1e-2)
        overrides.setdefault("epochs", 5)
        return cls(**overrides)


class ContrastiveResult(NamedTuple):
    encoder: enc.Encoder
    batch_losses: list[float]


class VanillaResult(NamedTuple):
    model: TrainedModel
    batch_losses: list[float]


def generate_pairs(train: Dataset, R: int, seed: int) -> PairSet:
    """Per class: R same-class pairs (target 1) and R cross-class pairs (target 0).

    Members are drawn uniformly with replacement across pairs; within a
    positive pair the two members differ unless the class is a singleton.
    Total count is exactly 2*R*|C|.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if len(train.labels) < 2:
        raise ValueError("pair generation needs at least 2 distinct labels")
    groups = train.by_label()
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs: list[Pair] = []
    for label in train.labels:
        own = groups[label]
        others = [i for i, ex in enumerate(train.examples) if ex.label != label]
        for _ in range(R):
            pos_i = int(rng.integers(len(own)))
            if len(own) == 1:
                pos_j = pos_i
            else:
                pos_j = int(rng.integers(len(own) - 1))
                if pos_j >= pos_i:
                    pos_j += 1
            pairs.append(Pair(train.examples[own[pos_i]], train.examples[own[pos_j]], 1))
        for _ in range(R):
            i = own[rng.integers(len(own))]
            j = others[rng.integers(len(others))]
            pairs.append(Pair(train.examples[i], train.examples[j], 0))
    return PairSet(pairs, R, len(train.labels))


def _cosine(e_a: np.ndarray, e_b: np.ndarray) -> float:
    na = float(np.linalg.norm(e_a))
    nb = float(np.linalg.norm(e_b))
    if na < NORM_EPS or nb < NORM_EPS:
        logger.warning("degenerate embedding norm in cosine; treating cos as 0")
        return 0.0
    return float(e_a @ e_b / (na * nb))


def contrastive_loss(e_a: np.ndarray, e_b: np.ndarray, target: int) -> float:
    """Squared error between cosine similarity and the binary pair target."""
    return (_cosine(e_a, e_b) - target) ** 2


def _contrastive_backward(e_a, e_b, target):
    """Loss plus its gradient w.r.t. both embeddings."""
    na = float(np.linalg.norm(e_a))
    nb = float(np.linalg.norm(e_b))
    if na < NORM_EPS or nb < NORM_EPS:
        logger.warning("degenerate embedding norm in cosine; zero gradient for pair")
        return float(target) ** 2, np.zeros_like(e_a), np.zeros_like(e_b)
    cos = float(e_a @ e_b / (na * nb))
    dldc = 2.0 * (cos - target)
    d_a = dldc * (e_b / (na * nb) - cos * e_a / na**2)
    d_b = dldc * (e_a / (na * nb) - cos * e_b / nb**2)
    return (cos - target) ** 2, d_a, d_b


def _token_cache(texts, text_config: TextConfig) -> dict[str, TokenSeq]:
    cache: dict[str, TokenSeq] = {}
    for text in texts:
        if text not in cache:
            cache[text] = tokenize(text, text_config)
    return cache


def _default_text_config(encoder: enc.Encoder, text_config: TextConfig | None) -> TextConfig:
    if text_config is None:
        return TextConfig(vocab_buckets=encoder.config.vocab_buckets)
    if text_config.vocab_buckets != encoder.config.vocab_buckets:
        raise ValueError("text_config.vocab_buckets must match the encoder")
    return text_config


def _accumulate(grads: dict[str, np.ndarray], g: enc.EncoderGrads, scale: float) -> None:
    grads["embedding"][g.embed_slots] += scale * g.embed_rows
    grads["w1"] += scale * g.w1
    grads["b1"] += scale * g.b1
    grads["w2"] += scale * g.w2
    grads["b2"] += scale * g.b2


def train_contrastive(
    encoder: enc.Encoder,
    pairs: PairSet,
    config: TrainConfig,
    text_config: TextConfig | None = None,
) -> ContrastiveResult:
    """Finetune the encoder so pair cosine matches the pair target.

    Runs config.epochs seeded-shuffled passes in minibatches with Adam and
    the warmup/decay schedule.  The input encoder is left untouched; the
    mean loss of every batch is returned alongside the updated encoder.
    """
    text_config = _default_text_config(encoder, text_config)
    seqs = _token_cache(
        (text for p in pairs.pairs for text in (p.a.text, p.b.text)), text_config
    )
    model = encoder.copy()
    params = model.params()
    adam = Adam(params)
    rng = np.random.Generator(np.random.PCG64(config.seed))

    n = len(pairs)
    n_batches = -(-n // config.batch_size)
    total_steps = config.epochs * n_batches
    batch_losses: list[float] = []
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for b in range(n_batches):
            batch = [pairs.pairs[i] for i in order[b * config.batch_size : (b + 1) * config.batch_size]]
            grads = {name: np.zeros_like(p) for name, p in params.items()}
            loss_sum = 0.0
            for pair in batch:
                seq_a, seq_b = seqs[pair.a.text], seqs[pair.b.text]
                e_a = enc.embed(model, seq_a)
                e_b = enc.embed(model, seq_b)
                loss, d_a, d_b = _contrastive_backward(e_a, e_b, pair.target)
                loss_sum += loss
                scale = 1.0 / len(batch)
                _accumulate(grads, enc.grad_embed(model, seq_a, d_a), scale)
                _accumulate(grads, enc.grad_embed(model, seq_b, d_b), scale)
            mean_loss = loss_sum / len(batch)
            if not np.isfinite(mean_loss):
                raise TrainingError(f"non-finite contrastive loss {mean_loss} at step {step + 1}/{total_steps}")
            step += 1
            adam.step(params, grads, config.learning_rate * lr_multiplier(step, total_steps, config.warmup_ratio))
            batch_losses.append(mean_loss)
    return ContrastiveResult(model, batch_losses)


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def head_objective(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float = HEAD_RIDGE
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of the affine softmax head, with analytic gradient.

    theta stacks the weight matrix over the bias row: shape (d+1, C).
    The ridge term covers weights and bias, which makes the loss strictly
    convex.
    """
    n = X.shape[0]
    n_classes = theta.shape[1]
    Xt = np.hstack([X, np.ones((n, 1))])
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    logits = Xt @ theta
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_z - shifted[np.arange(n), y])) + 0.5 * ridge * float((theta**2).sum())
    P = _row_softmax(logits)
    grad = Xt.T @ (P - Y) / n + ridge * theta
    return loss, grad


def fit_logistic_head(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    init: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Multinomial logistic regression by full-batch gradient descent.

    Minimizes mean cross-entropy plus a tiny ridge (1e-8) on weights and
    bias, which makes the optimum unique.  The step size is 1/L for a
    Lipschitz bound L of the gradient, so descent is monotone.  The init
    is centered across classes: the softmax is invariant to per-class
    shifts, the ridge optimum is centered, and centering is preserved by
    the updates, so this just starts the iteration inside the subspace
    the optimum lives in.  Stops when the gradient inf-norm drops below
    1e-6, or after 5000 iterations.

    Returns (weights, bias, iterations_used).
    """
    n, d = X.shape
    Xt = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros((d + 1, n_classes)) if init is None else init.copy()
    theta -= theta.mean(axis=1, keepdims=True)

    lipschitz = float(np.linalg.eigvalsh(Xt.T @ Xt)[-1]) / (2.0 * n) + HEAD_RIDGE
    lr = 1.0 / lipschitz
    iterations = 0
    for iterations in range(1, HEAD_MAX_ITER + 1):
        _, G = head_objective(theta, X, y)
        if float(np.abs(G).max()) < HEAD_TOL:
            iterations -= 1
            break
        theta -= lr * G
    return theta[:-1], theta[-1], iterations


def train_head(
    encoder: enc.Encoder,
    train: Dataset,
    config: TrainConfig,
    text_config: TextConfig | None = None,
    head_init: np.ndarray | None = None,
) -> TrainedModel:
    """SetFit step 2: logistic head on frozen sentence embeddings.

    Every training example is encoded exactly once; the head's training
    set size therefore equals the dataset size.
    """
    if len(train) == 0:
        raise ValueError("train dataset is empty")
    text_config = _default_text_config(encoder, text_config)
    seqs = _token_cache((ex.text for ex in train), text_config)
    X = np.stack([enc.embed(encoder, seqs[ex.text]) for ex in train])
    assert X.shape[0] == len(train), "head training set must have one embedding per example"
    label_index = {label: i for i, label in enumerate(train.labels)}
    y = np.array([label_index[ex.label] for ex in train])
    weights, bias, iterations = fit_logistic_head(X, y, len(train.labels), init=head_init)
    logger.info("train_head: converged in %d iterations", iterations)
    return TrainedModel(
        encoder=encoder.copy(),
        head_kind=HEAD_FROZEN,
        head_weights=weights,
        head_bias=bias,
        labels=list(train.labels),
        text_config=text_config,
        train_config=asdict(config),
    )


def train_vanilla(
    encoder: enc.Encoder,
    train: Dataset,
    config: TrainConfig,
    text_config: TextConfig | None = None,
) -> VanillaResult:
    """End-to-end baseline: softmax layer on the encoder, all parameters trained.

    Same Adam + warmup schedule, seeded shuffling and batching as the
    contrastive trainer.  Returns the model and the mean loss per batch.
    """
    if len(train) == 0:
        raise ValueError("train dataset is empty")
    text_config = _default_text_config(encoder, text_config)
    seqs = _token_cache((ex.text for ex in train), text_config)
    label_index = {label: i for i, label in enumerate(train.labels)}
    n_classes = len(train.labels)

    model = encoder.copy()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    s = encoder.config.init_scale
    params = model.params()
    params["head_weights"] = rng.uniform(-s, s, size=(encoder.config.out_dim, n_classes))
    params["head_bias"] = rng.uniform(-s, s, size=n_classes)
    adam = Adam(params)

    n = len(train)
    n_batches = -(-n // config.batch_size)
    total_steps = config.epochs * n_batches
    batch_losses: list[float] = []
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for b in range(n_batches):
            batch = [train.examples[i] for i in order[b * config.batch_size : (b + 1) * config.batch_size]]
            grads = {name: np.zeros_like(p) for name, p in params.items()}
            loss_sum = 0.0
            scale = 1.0 / len(batch)
            for ex in batch:
                seq = seqs[ex.text]
                e = enc.embed(model, seq)
                logits = e @ params["head_weights"] + params["head_bias"]
                shifted = logits - logits.max()
                log_z = np.log(np.exp(shifted).sum())
                target = label_index[ex.label]
                loss_sum += log_z - shifted[target]
                p = np.exp(shifted - log_z)
                d_logits = p.copy()
                d_logits[target] -= 1.0
                grads["head_weights"] += scale * np.outer(e, d_logits)
                grads["head_bias"] += scale * d_logits
                _accumulate(grads, enc.grad_embed(model, seq, params["head_weights"] @ d_logits), scale)
            mean_loss = loss_sum / len(batch)
            if not np.isfinite(mean_loss):
                raise TrainingError(f"non-finite vanilla loss {mean_loss} at step {step + 1}/{total_steps}")
            step += 1
            adam.step(params, grads, config.learning_rate * lr_multiplier(step, total_steps, config.warmup_ratio))
            batch_losses.append(mean_loss)

    trained = TrainedModel(
        encoder=model,
        head_kind=HEAD_END_TO_END,
        head_weights=params["head_weights"],
        head_bias=params["head_bias"],
        labels=list(train.labels),
        text_config=text_config,
        train_config=asdict(config),
    )
    return VanillaResult(trained, batch_losses)
