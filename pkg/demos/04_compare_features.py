"""Aggregate LIME features per label and compare the two models.

Every test example of one label is explained under both models; the
signed weights are summed into a feature table per model.  The tables
are then intersected: "common positive" features are words both models
push toward the label.  Bar charts are written as standalone SVGs.

    python3 demos/04_compare_features.py
"""

from pathlib import Path

from contrastfit import compare, corpus, synthetic, training
from contrastfit.encoder import EncoderConfig, init
from contrastfit.explain import LimeConfig, explain

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

full = synthetic.keyword_corpus(n_labels=10, n_per_label=40, seed=42)
test, rest = corpus.split_test(full, per_label=25, seed=42)
few = corpus.sample_few_shot(rest, n_per_label=8, seed=42)

enc_cfg = EncoderConfig(vocab_buckets=4096, embed_dim=32, hidden_dim=32, out_dim=32, seed=42)
train_cfg = training.TrainConfig.desk(seed=42)
base = init(enc_cfg)

pairs = training.generate_pairs(few, R=train_cfg.R, seed=train_cfg.seed)
tuned, _ = training.train_contrastive(base, pairs, train_cfg)
models = {
    "contrastive": training.train_head(tuned, few, train_cfg),
    "vanilla": training.train_vanilla(base, few, train_cfg).model,
}

label = full.labels[0]
lime_cfg = LimeConfig(seed=0)
examples = [ex for ex in test if ex.label == label][:10]
print(f"explaining {len(examples)} test examples of label {label!r} under both models")

tables = {}
for model_id, model in models.items():
    explanations = [explain(model, ex.text, label, lime_cfg) for ex in examples]
    tables[model_id] = compare.aggregate_features(explanations, model_id=model_id)
    top = compare.top_features(tables[model_id], compare.POSITIVE, n=5)
    print(f"\n{model_id} top positive features:")
    for word, weight, count in top:
        print(f"  {word:<12} {weight:+.4f}  (in {count} explanations)")

report = compare.comparison_report(tables["contrastive"], tables["vanilla"], top_n=15)
print(f"\ncommon positive features: {[w for w, _, _ in report['common_positive'][:8]]}")
print(f"common negative features: {[w for w, _, _ in report['common_negative'][:8]]}")

compare.write_comparison_json(report, out / "comparison.json")
compare.write_comparison_csv(report, out / "comparison.csv")
for sign in (compare.POSITIVE, compare.NEGATIVE):
    rows = compare.common_features(tables["contrastive"], tables["vanilla"], sign)
    if rows:
        compare.write_bar_chart_svg(
            [(w, min(abs(a), abs(b)) * (1 if sign == compare.POSITIVE else -1)) for w, a, b in rows[:15]],
            f"common {sign} features for {label}",
            out / f"common_{sign}.svg",
        )
print(f"\nwrote comparison.json / comparison.csv / SVG charts to {out}")
