"""Explain single predictions with the built-in LIME implementation.

For one test sentence we delete random word subsets, re-score the
perturbed texts, and fit a locally weighted sparse linear surrogate to
the target-class probability.  The signed surrogate weights are the
explanation: positive words push toward the label, negative words away.

    python3 demos/03_explain_predictions.py
"""

from contrastfit import classify, corpus, synthetic, training
from contrastfit.encoder import EncoderConfig, init
from contrastfit.explain import LimeConfig, explain

full = synthetic.keyword_corpus(n_labels=10, n_per_label=40, seed=42)
test, rest = corpus.split_test(full, per_label=25, seed=42)
few = corpus.sample_few_shot(rest, n_per_label=8, seed=42)

enc_cfg = EncoderConfig(vocab_buckets=4096, embed_dim=32, hidden_dim=32, out_dim=32, seed=42)
train_cfg = training.TrainConfig.desk(seed=42)
base = init(enc_cfg)

pairs = training.generate_pairs(few, R=train_cfg.R, seed=train_cfg.seed)
tuned, _ = training.train_contrastive(base, pairs, train_cfg)
contrastive_model = training.train_head(tuned, few, train_cfg)
vanilla_model, _ = training.train_vanilla(base, few, train_cfg)

# K=10 surrogate features, 25-sample neighborhood, cosine-distance kernel.
lime_cfg = LimeConfig(K=10, n_samples=25, kernel_width=25.0, seed=0)

example = test.examples[0]
print("text: ", example.text)
print("gold: ", example.label)
for name, model in (("contrastive", contrastive_model), ("vanilla", vanilla_model)):
    predicted = classify.predict(model, example.text)
    expl = explain(model, example.text, example.label, lime_cfg)
    print(f"\n{name}: predicted {predicted!r}; surrogate for {example.label!r}"
          f" (intercept {expl.intercept:.3f})")
    for word, weight in expl.features:
        bar = "+" if weight >= 0 else "-"
        print(f"  {bar} {word:<12} {weight:+.4f}")
