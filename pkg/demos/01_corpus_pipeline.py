"""Corpus handling walkthrough: load, split, balance, few-shot sample.

Run from the repo root after `pip install -e .`:

    python3 demos/01_corpus_pipeline.py
"""

from pathlib import Path

from contrastfit import corpus, synthetic

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

# A deliberately skewed corpus: label sizes from 150 down to 10.
sizes = {f"L{i}": n for i, n in enumerate([150, 140, 130, 120, 90, 70, 50, 30, 20, 10])}
skewed = synthetic.skewed_corpus(sizes, seed=8)
print("skewed corpus:", skewed)
print("label counts:", skewed.label_counts())

# Datasets round-trip through JSON lines: {"text": ..., "label": ...}
path = out / "skewed.jsonl"
corpus.save_jsonl(skewed, path)
assert corpus.load_jsonl(path) == skewed
print("saved and reloaded", path)

# Carve out a fixed per-label test set, then a stratified train/dev split.
test, rest = corpus.split_test(skewed, per_label=10, seed=42)
train, dev = corpus.split_train_dev(rest, dev_fraction=0.2, seed=42)
print(f"test={len(test)} train={len(train)} dev={len(dev)} (disjoint, union = input)")

# Balance: keep the 8 most frequent labels, even them out at 100 examples
# each.  Under-cap labels are topped up from a supplemental pool (texts
# already present are deduplicated away).
supplemental = synthetic.skewed_corpus({label: 120 for label in sizes}, seed=800, text_len=(10, 14))
balanced = corpus.balance(skewed, top_k_labels=8, cap=100, supplemental=supplemental, seed=0)
print("balanced:", balanced.label_counts())

# Few-shot sampling draws n per label, taking everything when a label is
# smaller than the quota.
few = corpus.sample_few_shot(balanced, n_per_label=8, seed=42)
print("few-shot (8/label):", len(few), "examples")

# Same seed, same draw - every corpus operation is deterministic.
assert corpus.sample_few_shot(balanced, n_per_label=8, seed=42) == few
print("determinism check passed")
