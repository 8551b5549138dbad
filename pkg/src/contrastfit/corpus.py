"""Labeled text datasets: loading, splitting, few-shot sampling, balancing.

A Dataset is an ordered, immutable collection of (text, label) examples
plus a label inventory in first-occurrence order.  All operations are
pure functions of (input, seed) and return new datasets, so repeated runs
with the same arguments reproduce byte-identical splits.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """A JSONL line could not be parsed into a valid example."""


class BalanceShortfallError(ValueError):
    """A label cannot be topped up to the requested cap."""

    def __init__(self, label: str, deficit: int):
        self.label = label
        self.deficit = deficit
        super().__init__(
            f"label {label!r} is short {deficit} example(s) after supplemental "
            f"top-up; pass allow_replacement=True to fill by resampling"
        )


@dataclass(frozen=True)
class Example:
    text: str
    label: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("example text is empty")
        if not self.label:
            raise ValueError("example label is empty")


@dataclass(frozen=True)
class SplitSpec:
    test_per_label: int = 25
    dev_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.dev_fraction < 1.0:
            raise ValueError(f"dev_fraction must be in (0,1), got {self.dev_fraction}")
        if self.test_per_label < 0:
            raise ValueError("test_per_label must be >= 0")


class Dataset:
    """Ordered examples with a deduplicated label inventory.

    The inventory lists distinct labels in order of first occurrence;
    iteration order is insertion order.  Instances are treated as
    immutable after construction.
    """

    def __init__(self, examples: Iterable[Example] = ()):
        self.examples: list[Example] = list(examples)
        self.labels: list[str] = []
        seen: set[str] = set()
        for ex in self.examples:
            if ex.label not in seen:
                seen.add(ex.label)
                self.labels.append(ex.label)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and self.examples == other.examples

    def __repr__(self) -> str:
        return f"Dataset({len(self.examples)} examples, {len(self.labels)} labels)"

    def by_label(self) -> dict[str, list[int]]:
        """Indices of each label's examples, labels in inventory order."""
        groups: dict[str, list[int]] = {label: [] for label in self.labels}
        for i, ex in enumerate(self.examples):
            groups[ex.label].append(i)
        return groups

    def label_counts(self) -> dict[str, int]:
        return {label: len(idx) for label, idx in self.by_label().items()}

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(self.examples[i] for i in indices)


def load_jsonl(path: str | Path) -> Dataset:
    """Read a UTF-8 JSON-lines file with "text" and "label" string fields.

    Blank lines are skipped; any malformed line raises DataFormatError
    naming the 1-based line number.
    """
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataFormatError(f"{path}: line {lineno}: invalid JSON: {err}") from err
            if not isinstance(obj, dict):
                raise DataFormatError(f"{path}: line {lineno}: expected a JSON object")
            for key in ("text", "label"):
                if key not in obj:
                    raise DataFormatError(f"{path}: line {lineno}: missing field {key!r}")
                if not isinstance(obj[key], str):
                    raise DataFormatError(f"{path}: line {lineno}: field {key!r} is not a string")
            try:
                examples.append(Example(obj["text"], obj["label"]))
            except ValueError as err:
                raise DataFormatError(f"{path}: line {lineno}: {err}") from err
    return Dataset(examples)


def save_jsonl(dataset: Dataset, path: str | Path) -> None:
    """Write one {"text","label"} object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset:
            fh.write(json.dumps({"text": ex.text, "label": ex.label}, ensure_ascii=False) + "\n")


def split_test(dataset: Dataset, per_label: int, seed: int) -> tuple[Dataset, Dataset]:
    """Draw up to per_label examples of each label into a test set.

    Labels with fewer than per_label examples contribute everything (the
    shortfall is logged, not an error).  Returns (test, rest); together
    they partition the input.
    """
    if per_label < 0:
        raise ValueError("per_label must be >= 0")
    rng = random.Random(seed)
    picked: list[int] = []
    picked_set: set[int] = set()
    for label, indices in dataset.by_label().items():
        take = min(per_label, len(indices))
        if take < per_label:
            logger.info("split_test: label %r has only %d of %d requested", label, len(indices), per_label)
        chosen = rng.sample(indices, take)
        picked.extend(chosen)
        picked_set.update(chosen)
    test = dataset.subset(picked)
    rest = dataset.subset(i for i in range(len(dataset)) if i not in picked_set)
    return test, rest


def split_train_dev(dataset: Dataset, dev_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/dev split.

    Per label, round(dev_fraction * n) examples go to dev, with a minimum
    of 1 when the label has at least 2 examples.
    """
    if not 0.0 < dev_fraction < 1.0:
        raise ValueError(f"dev_fraction must be in (0,1), got {dev_fraction}")
    rng = random.Random(seed)
    dev_idx: list[int] = []
    dev_set: set[int] = set()
    for label, indices in dataset.by_label().items():
        n = len(indices)
        n_dev = int(round(dev_fraction * n))
        if n >= 2 and n_dev == 0:
            n_dev = 1
        chosen = rng.sample(indices, n_dev)
        dev_idx.extend(chosen)
        dev_set.update(chosen)
    dev = dataset.subset(dev_idx)
    train = dataset.subset(i for i in range(len(dataset)) if i not in dev_set)
    return train, dev


def sample_few_shot(dataset: Dataset, n_per_label: int, seed: int) -> Dataset:
    """Uniformly draw up to n_per_label examples of each label.

    Labels smaller than the quota contribute everything; the shortfall is
    logged.  Output groups examples by label in inventory order.
    """
    if n_per_label < 1:
        raise ValueError("n_per_label must be >= 1")
    rng = random.Random(seed)
    picked: list[int] = []
    for label, indices in dataset.by_label().items():
        take = min(n_per_label, len(indices))
        if take < n_per_label:
            logger.info(
                "sample_few_shot: label %r has only %d of %d requested", label, len(indices), n_per_label
            )
        picked.extend(rng.sample(indices, take))
    return dataset.subset(picked)


def balance(
    dataset: Dataset,
    top_k_labels: int,
    cap: int,
    supplemental: Dataset | None = None,
    allow_replacement: bool = False,
    seed: int = 0,
) -> Dataset:
    """Restrict to the top_k most frequent labels and even them out at cap.

    Frequency ties break by lexicographic label order.  Over-cap labels
    are downsampled (seeded); under-cap labels are topped up from the
    supplemental pool after exact-text dedup, then, if allow_replacement
    is set, by seeded resampling with replacement.  A remaining shortfall
    without allow_replacement raises BalanceShortfallError.
    """
    if top_k_labels < 1:
        raise ValueError("top_k_labels must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")

    rng = random.Random(seed)
    counts = dataset.label_counts()
    ranked = sorted(counts, key=lambda lab: (-counts[lab], lab))
    kept_labels = ranked[:top_k_labels]

    groups = dataset.by_label()
    supp_groups = supplemental.by_label() if supplemental is not None else {}

    out: list[Example] = []
    for label in kept_labels:
        originals = [dataset.examples[i] for i in groups[label]]
        pool: list[Example] = []
        seen_texts: set[str] = set()
        for ex in originals:
            if ex.text not in seen_texts:
                seen_texts.add(ex.text)
                pool.append(ex)

        if len(pool) > cap:
            pool = rng.sample(pool, cap)
        elif len(pool) < cap:
            fresh = []
            if supplemental is not None and label in supp_groups:
                for i in supp_groups[label]:
                    ex = supplemental.examples[i]
                    if ex.text not in seen_texts:
                        seen_texts.add(ex.text)
                        fresh.append(ex)
            need = cap - len(pool)
            if len(fresh) > need:
                fresh = rng.sample(fresh, need)
            pool.extend(fresh)
            if len(pool) < cap:
                deficit = cap - len(pool)
                if not allow_replacement:
                    raise BalanceShortfallError(label, deficit)
                logger.info("balance: label %r short by %d, resampling with replacement", label, deficit)
                pool.extend(rng.choices(pool, k=deficit))
        out.extend(pool)
    return Dataset(out)
