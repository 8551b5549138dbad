"""Accuracy, micro/macro/weighted F1, and per-class classification reports.

Zero denominators follow the usual convention: undefined precision,
recall or F1 counts as 0.  For single-label classification the pooled
(micro) F1 equals plain accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .classify import TrainedModel, predict
from .corpus import Dataset


@dataclass
class ConfusionCounts:
    labels: list[str]
    tp: dict[str, int]
    fp: dict[str, int]
    fn: dict[str, int]
    support: dict[str, int]
    total: int

    def __post_init__(self):
        if sum(self.support.values()) != self.total:
            raise ValueError("per-label supports must sum to the total")
        for label in self.labels:
            if min(self.tp[label], self.fp[label], self.fn[label]) < 0:
                raise ValueError("negative count")
            if self.tp[label] > self.support[label]:
                raise ValueError(f"label {label!r}: TP exceeds support")


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class Scores:
    accuracy: float
    micro_f1: float
    macro_f1: float
    weighted_f1: float
    per_class: dict[str, ClassScores] = field(default_factory=dict)


def counts_from_pairs(gold: list[str], pred: list[str], labels: list[str]) -> ConfusionCounts:
    """Aggregate per-label TP/FP/FN over aligned gold/predicted label lists."""
    if len(gold) != len(pred):
        raise ValueError("gold and predicted lists differ in length")
    known = set(labels)
    tp = {label: 0 for label in labels}
    fp = {label: 0 for label in labels}
    fn = {label: 0 for label in labels}
    support = {label: 0 for label in labels}
    for g, p in zip(gold, pred):
        if g not in known:
            raise ValueError(f"unknown gold label {g!r}")
        if p not in known:
            raise ValueError(f"unknown predicted label {p!r}")
        support[g] += 1
        if g == p:
            tp[g] += 1
        else:
            fn[g] += 1
            fp[p] += 1
    return ConfusionCounts(list(labels), tp, fp, fn, support, len(gold))


def evaluate(model: TrainedModel, test: Dataset) -> ConfusionCounts:
    """Predict every test example and aggregate confusion counts."""
    if len(test) == 0:
        raise ValueError("test dataset is empty")
    missing = [label for label in test.labels if label not in model.labels]
    if missing:
        raise ValueError(f"gold labels not in model inventory: {missing}")
    gold = [ex.label for ex in test]
    pred = [predict(model, ex.text) for ex in test]
    return counts_from_pairs(gold, pred, model.labels)


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def scores(counts: ConfusionCounts) -> Scores:
    """Accuracy plus micro, macro and support-weighted F1 with per-class detail."""
    if counts.total <= 0:
        raise ValueError("empty counts")
    per_class: dict[str, ClassScores] = {}
    for label in counts.labels:
        p = _safe_div(counts.tp[label], counts.tp[label] + counts.fp[label])
        r = _safe_div(counts.tp[label], counts.tp[label] + counts.fn[label])
        f1 = _safe_div(2 * p * r, p + r)
        per_class[label] = ClassScores(p, r, f1, counts.support[label])

    pooled_tp = sum(counts.tp.values())
    pooled_fp = sum(counts.fp.values())
    pooled_fn = sum(counts.fn.values())
    micro_p = _safe_div(pooled_tp, pooled_tp + pooled_fp)
    micro_r = _safe_div(pooled_tp, pooled_tp + pooled_fn)
    micro_f1 = _safe_div(2 * micro_p * micro_r, micro_p + micro_r)

    n_labels = len(counts.labels)
    macro_f1 = sum(cs.f1 for cs in per_class.values()) / n_labels
    weighted_f1 = sum(cs.f1 * cs.support for cs in per_class.values()) / counts.total
    accuracy = pooled_tp / counts.total
    return Scores(accuracy, micro_f1, macro_f1, weighted_f1, per_class)


def write_report_csv(result: Scores, path: str | Path) -> None:
    """Per-label precision/recall/f1/support rows plus a summary block."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "precision", "recall", "f1", "support"])
        for label, cs in result.per_class.items():
            writer.writerow([label, f"{cs.precision:.4f}", f"{cs.recall:.4f}", f"{cs.f1:.4f}", cs.support])
        writer.writerow([])
        writer.writerow(["accuracy", f"{result.accuracy:.4f}", "", "", ""])
        writer.writerow(["micro_f1", f"{result.micro_f1:.4f}", "", "", ""])
        writer.writerow(["macro_f1", f"{result.macro_f1:.4f}", "", "", ""])
        writer.writerow(["weighted_f1", f"{result.weighted_f1:.4f}", "", "", ""])
