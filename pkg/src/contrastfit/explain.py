"""From-scratch LIME for text classifiers.

An instance is explained by deleting random subsets of its words, asking
the model for the target-class probability of each perturbed text, and
fitting a locally weighted sparse linear surrogate to those responses.
Proximity weighting uses cosine distance between the keep-masks and the
intact instance; sparsity is a hard cap of K features enforced by
forward stepwise selection over token positions.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import classify
from .text import TokenSeq, mask_tokens, tokenize

SURROGATE_RIDGE = 1e-6


@dataclass(frozen=True)
class LimeConfig:
    K: int = 10
    n_samples: int = 25
    kernel_width: float = 25.0
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_samples < self.K + 1:
            raise ValueError("n_samples must be at least K + 1")
        if self.kernel_width <= 0:
            raise ValueError("kernel_width must be > 0")


@dataclass
class Explanation:
    target_label: str
    features: list[tuple[str, float]]  # (word, signed weight), |weight| descending
    intercept: float
    n_samples: int


def sample_perturbations(seq: TokenSeq, n_samples: int, seed: int) -> list[tuple[np.ndarray, float]]:
    """Keep-masks for LIME's neighborhood, first entry the intact instance.

    Each of the remaining n_samples - 1 masks removes u distinct token
    positions, u drawn uniformly from {1..len(seq)}.  Returns (mask,
    kept_fraction) tuples; masks are 0/1 vectors over token positions.
    """
    n = len(seq)
    if n == 0:
        raise ValueError("cannot perturb an empty token sequence")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = [(np.ones(n, dtype=np.int64), 1.0)]
    for _ in range(n_samples - 1):
        u = int(rng.integers(1, n + 1))
        removed = rng.choice(n, size=u, replace=False)
        mask = np.ones(n, dtype=np.int64)
        mask[removed] = 0
        out.append((mask, float(mask.sum() / n)))
    return out


def kernel_weight(mask: Sequence[int], kernel_width: float) -> float:
    """exp(-d^2 / width^2) with d the cosine distance from the intact mask."""
    mask = np.asarray(mask, dtype=float)
    n = mask.shape[0]
    if n < 1:
        raise ValueError("mask must have length >= 1")
    total = float(mask.sum())
    distance = 1.0 if total == 0.0 else 1.0 - total / (float(np.linalg.norm(mask)) * np.sqrt(n))
    return float(np.exp(-(distance**2) / kernel_width**2))


def _weighted_ridge(columns: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Weighted least squares with ridge on the slopes, intercept unpenalized.

    Returns (coefficients, intercept, weighted SSE).
    """
    m = columns.shape[0]
    design = np.hstack([np.ones((m, 1)), columns])
    penalty = SURROGATE_RIDGE * np.eye(design.shape[1])
    penalty[0, 0] = 0.0
    wx = design * w[:, None]
    theta = np.linalg.solve(design.T @ wx + penalty, wx.T @ y)
    residual = y - design @ theta
    return theta[1:], float(theta[0]), float(w @ residual**2)


def fit_surrogate(
    masks: Sequence[Sequence[int]],
    responses: Sequence[float],
    weights: Sequence[float],
    K: int,
) -> tuple[list[int], np.ndarray, float]:
    """Sparse locally-weighted linear fit over token positions.

    Greedy forward selection adds up to K positions, each step picking
    the position whose weighted-ridge refit on the enlarged set gives the
    lowest weighted squared error (ties break to the lowest index).  If
    every mask is identical there is nothing to regress on: the selection
    is empty and the intercept is the weighted mean response.

    Returns (selected positions, their coefficients, intercept).
    """
    X = np.asarray(masks, dtype=float)
    y = np.asarray(responses, dtype=float)
    w = np.asarray(weights, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 masks")
    if not (X.shape[0] == y.shape[0] == w.shape[0]):
        raise ValueError("masks, responses and weights must have equal length")
    if (w < 0).any() or w.sum() <= 0:
        raise ValueError("weights must be nonnegative and not all zero")

    if np.all(X == X[0]):
        return [], np.empty(0), float(w @ y / w.sum())

    n_positions = X.shape[1]
    selected: list[int] = []
    remaining = list(range(n_positions))
    for _ in range(min(K, n_positions)):
        best_sse, best_j = np.inf, None
        for j in remaining:
            _, _, sse = _weighted_ridge(X[:, selected + [j]], y, w)
            if sse < best_sse:
                best_sse, best_j = sse, j
        selected.append(best_j)
        remaining.remove(best_j)
    coef, intercept, _ = _weighted_ridge(X[:, selected], y, w)
    return selected, coef, intercept


def _proba_fn(model) -> Callable[[TokenSeq], np.ndarray]:
    fn = getattr(model, "predict_proba_tokens", None)
    return fn if callable(fn) else functools.partial(classify.predict_proba_tokens, model)


def explain(model, text: str, target_label: str, config: LimeConfig) -> Explanation:
    """LIME explanation of the model's target-class probability for one text.

    `model` is anything classify.predict_proba_tokens accepts, or any
    object exposing its own predict_proba_tokens(seq); it must carry the
    label inventory in `.labels` and tokenizer settings in `.text_config`.
    Feature names are the token surfaces at the selected positions;
    repeated surfaces are merged by summing their coefficients.
    """
    if target_label not in model.labels:
        raise ValueError(f"label {target_label!r} not in model inventory")
    target = model.labels.index(target_label)
    seq = tokenize(text, model.text_config)
    if len(seq) == 0:
        raise ValueError("text has no tokens to explain")

    proba = _proba_fn(model)
    perturbations = sample_perturbations(seq, config.n_samples, config.seed)
    masks = [mask for mask, _ in perturbations]
    responses = [float(proba(mask_tokens(seq, mask))[target]) for mask in masks]
    weights = [kernel_weight(mask, config.kernel_width) for mask in masks]

    selected, coef, intercept = fit_surrogate(masks, responses, weights, config.K)
    merged: dict[str, float] = {}
    for pos, c in zip(selected, coef):
        word = seq.tokens[pos].surface
        merged[word] = merged.get(word, 0.0) + float(c)
    features = sorted(merged.items(), key=lambda item: (-abs(item[1]), item[0]))
    return Explanation(target_label, features, intercept, len(masks))


def explanation_to_dict(
    expl: Explanation, model_id: str, text_id, config: LimeConfig
) -> dict:
    """JSON-ready record: identifies the model, the instance and the config."""
    return {
        "model_id": model_id,
        "text_id": text_id,
        "label": expl.target_label,
        "features": [[word, weight] for word, weight in expl.features],
        "intercept": expl.intercept,
        "n_samples": expl.n_samples,
        "config": asdict(config),
    }


def save_explanation(expl: Explanation, model_id: str, text_id, config: LimeConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(explanation_to_dict(expl, model_id, text_id, config), fh, sort_keys=True, indent=2)
        fh.write("\n")
