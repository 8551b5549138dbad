"""Synthetic keyword corpora for tests, demos and trend experiments.

Each class owns a disjoint set of keyword tokens; texts mix class
keywords with shared filler words (function words included on purpose,
so explanations can surface them).  Class separability is controlled by
the keyword rate.
"""

from __future__ import annotations

import random

from .corpus import Dataset, Example

FILLERS = [
    "the", "of", "and", "to", "in", "shall", "be", "any", "such", "party",
    "agreement", "section", "herein", "may", "not", "other", "upon", "with",
    "under", "means", "notice", "date", "each", "time", "all", "by", "for",
    "term", "which", "provided",
]


def keyword_corpus(
    n_labels: int = 10,
    n_per_label: int = 40,
    seed: int = 0,
    keywords_per_label: int = 6,
    text_len: tuple[int, int] = (8, 16),
    keyword_rate: float = 0.45,
    label_prefix: str = "class",
) -> Dataset:
    """Deterministic corpus of n_labels classes with disjoint keyword sets."""
    if n_labels < 1 or n_per_label < 1 or keywords_per_label < 1:
        raise ValueError("n_labels, n_per_label and keywords_per_label must be >= 1")
    rng = random.Random(seed)
    keyword_sets = {
        f"{label_prefix}_{c:02d}": [f"kw{c:02d}{chr(ord('a') + k)}" for k in range(keywords_per_label)]
        for c in range(n_labels)
    }
    examples = []
    for label, keywords in keyword_sets.items():
        for _ in range(n_per_label):
            length = rng.randint(*text_len)
            words = [
                rng.choice(keywords) if rng.random() < keyword_rate else rng.choice(FILLERS)
                for _ in range(length)
            ]
            # guarantee at least one class keyword per text
            words[rng.randrange(length)] = rng.choice(keywords)
            examples.append(Example(" ".join(words), label))
    return Dataset(examples)


def skewed_corpus(label_sizes: dict[str, int], seed: int = 0, text_len: tuple[int, int] = (5, 9)) -> Dataset:
    """Corpus with the given per-label sizes and unique texts, for balancing tests."""
    rng = random.Random(seed)
    examples = []
    for label, size in label_sizes.items():
        for i in range(size):
            length = rng.randint(*text_len)
            words = [rng.choice(FILLERS) for _ in range(length)]
            examples.append(Example(f"{label} doc{i:05d} " + " ".join(words), label))
    return Dataset(examples)
