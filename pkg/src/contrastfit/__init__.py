"""Few-shot text classification with contrastive vs. vanilla finetuning,
plus LIME-style local explanations and feature comparison tooling."""

__version__ = "0.1.0"

from . import classify, compare, corpus, encoder, evaluation, explain, optim, synthetic, text, training

__all__ = [
    "classify",
    "compare",
    "corpus",
    "encoder",
    "evaluation",
    "explain",
    "optim",
    "synthetic",
    "text",
    "training",
    "__version__",
]
