"""Side-by-side feature analysis of two models' explanations.

Explanations for one target label are aggregated into a feature table
per model (signed weights summed across test items), then the tables are
intersected to find the features both models agree on, sign included.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .explain import Explanation

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass
class FeatureTable:
    label: str
    model_id: str
    entries: list[tuple[str, float, int]]  # (word, aggregate weight, occurrence count)


def aggregate_features(explanations: list[Explanation], model_id: str = "") -> FeatureTable:
    """Sum each word's signed weights across one label's explanations.

    Entries are sorted by |aggregate weight| descending; the occurrence
    count says how many explanations contained the word.
    """
    labels = {e.target_label for e in explanations}
    if len(labels) > 1:
        raise ValueError(f"explanations mix target labels: {sorted(labels)}")
    label = labels.pop() if labels else ""
    weight: dict[str, float] = {}
    count: dict[str, int] = {}
    for e in explanations:
        for word, w in e.features:
            weight[word] = weight.get(word, 0.0) + w
            count[word] = count.get(word, 0) + 1
    entries = sorted(
        ((word, weight[word], count[word]) for word in weight),
        key=lambda item: (-abs(item[1]), item[0]),
    )
    return FeatureTable(label, model_id, entries)


def common_features(a: FeatureTable, b: FeatureTable, sign: str) -> list[tuple[str, float, float]]:
    """Words both tables weight with the requested sign.

    Sorted by min(|weight_a|, |weight_b|) descending, so a word ranks by
    the weaker of the two models' commitments to it.
    """
    if a.label != b.label:
        raise ValueError(f"label mismatch: {a.label!r} vs {b.label!r}")
    if sign not in (POSITIVE, NEGATIVE):
        raise ValueError(f"sign must be {POSITIVE!r} or {NEGATIVE!r}")

    def keeps(w: float) -> bool:
        return w > 0 if sign == POSITIVE else w < 0

    weights_b = {word: w for word, w, _ in b.entries}
    out = [
        (word, w_a, weights_b[word])
        for word, w_a, _ in a.entries
        if word in weights_b and keeps(w_a) and keeps(weights_b[word])
    ]
    out.sort(key=lambda item: (-min(abs(item[1]), abs(item[2])), item[0]))
    return out


def top_features(table: FeatureTable, sign: str, n: int = 15) -> list[tuple[str, float, int]]:
    """The n strongest entries of one sign, by |aggregate weight|."""
    if sign not in (POSITIVE, NEGATIVE):
        raise ValueError(f"sign must be {POSITIVE!r} or {NEGATIVE!r}")
    keep = (lambda w: w > 0) if sign == POSITIVE else (lambda w: w < 0)
    return [e for e in table.entries if keep(e[1])][:n]


def comparison_report(a: FeatureTable, b: FeatureTable, top_n: int = 15) -> dict:
    """JSON-ready comparison: common features plus per-model top lists."""
    return {
        "label": a.label,
        "models": [a.model_id, b.model_id],
        "common_positive": [list(row) for row in common_features(a, b, POSITIVE)],
        "common_negative": [list(row) for row in common_features(a, b, NEGATIVE)],
        "top_positive": {
            a.model_id: [list(row) for row in top_features(a, POSITIVE, top_n)],
            b.model_id: [list(row) for row in top_features(b, POSITIVE, top_n)],
        },
        "top_negative": {
            a.model_id: [list(row) for row in top_features(a, NEGATIVE, top_n)],
            b.model_id: [list(row) for row in top_features(b, NEGATIVE, top_n)],
        },
    }


def write_comparison_json(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_comparison_csv(report: dict, path: str | Path) -> None:
    """Flat CSV: one row per (section, word) with both models' weights."""
    model_a, model_b = report["models"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "word", f"weight_{model_a or 'a'}", f"weight_{model_b or 'b'}"])
        for section in ("common_positive", "common_negative"):
            for word, w_a, w_b in report[section]:
                writer.writerow([section, word, repr(w_a), repr(w_b)])
        for section in ("top_positive", "top_negative"):
            for model_id in (model_a, model_b):
                for word, w, _count in report[section][model_id]:
                    row = [f"{section}:{model_id or 'model'}", word]
                    row += [repr(w), ""] if model_id == model_a else ["", repr(w)]
                    writer.writerow(row)


def write_bar_chart_svg(
    entries: list[tuple[str, float]], title: str, path: str | Path
) -> None:
    """Standalone horizontal bar chart of (word, weight) rows.

    Needs matplotlib (the `plots` extra); imported lazily so the core
    package stays numpy-only.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    words = [w for w, _ in entries]
    values = [v for _, v in entries]
    fig, ax = plt.subplots(figsize=(8, max(2.0, 0.4 * len(entries) + 1)))
    colors = ["tab:green" if v >= 0 else "tab:red" for v in values]
    ax.barh(range(len(entries)), values, color=colors)
    ax.set_yticks(range(len(entries)))
    ax.set_yticklabels(words)
    ax.invert_yaxis()
    ax.set_xlabel("feature weight")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
