import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contrastfit import classify, synthetic
from contrastfit.corpus import Dataset, Example
from contrastfit.encoder import EncoderConfig, embed, init
from contrastfit.optim import Adam
from contrastfit.text import TextConfig, tokenize
from contrastfit.training import (
    Pair,
    PairSet,
    TrainConfig,
    contrastive_loss,
    fit_logistic_head,
    generate_pairs,
    train_contrastive,
    train_head,
    train_vanilla,
)


def toy_dataset(label_sizes):
    return Dataset(
        Example(f"{label} text {i}", label) for label, n in label_sizes.items() for i in range(n)
    )


def small_encoder(seed=1, **kw):
    kw.setdefault("vocab_buckets", 512)
    kw.setdefault("embed_dim", 12)
    kw.setdefault("hidden_dim", 12)
    kw.setdefault("out_dim", 12)
    return init(EncoderConfig(seed=seed, **kw))


def params_equal(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a.params().values(), b.params().values()))


# --- pair generation ---------------------------------------------------------


def test_pair_count_two_classes():
    ps = generate_pairs(toy_dataset({"A": 3, "B": 3}), R=2, seed=0)
    assert len(ps) == 8
    assert sum(p.target for p in ps.pairs) == 4
    assert sum(1 - p.target for p in ps.pairs) == 4


def test_pair_count_hundred_classes():
    ds = toy_dataset({f"L{i:03d}": 2 for i in range(100)})
    assert len(generate_pairs(ds, R=20, seed=1)) == 4000


def test_candidate_pair_pool_binary_k8():
    # unordered distinct pairs among K=8 samples: K(K-1)/2 = 28
    assert len(list(itertools.combinations(range(8), 2))) == 28 == 8 * 7 // 2


def test_pair_label_soundness():
    ps = generate_pairs(toy_dataset({"A": 4, "B": 3, "C": 2}), R=5, seed=3)
    for p in ps.pairs:
        assert (p.a.label == p.b.label) == (p.target == 1)


def test_pairs_singleton_class_allows_self_pair():
    ps = generate_pairs(toy_dataset({"A": 1, "B": 3}), R=3, seed=0)
    positives_a = [p for p in ps.pairs if p.target == 1 and p.a.label == "A"]
    assert len(positives_a) == 3
    assert all(p.a == p.b for p in positives_a)


def test_pairs_no_self_pair_outside_singletons():
    ps = generate_pairs(toy_dataset({"A": 2, "B": 2}), R=50, seed=0)
    for p in ps.pairs:
        if p.target == 1:
            assert p.a.text != p.b.text


def test_pairs_need_two_labels():
    with pytest.raises(ValueError):
        generate_pairs(toy_dataset({"A": 5}), R=2, seed=0)


def test_pairs_deterministic():
    ds = toy_dataset({"A": 5, "B": 5})
    assert generate_pairs(ds, 4, seed=9).pairs == generate_pairs(ds, 4, seed=9).pairs
    assert generate_pairs(ds, 4, seed=9).pairs != generate_pairs(ds, 4, seed=10).pairs


@given(
    sizes=st.lists(st.integers(1, 6), min_size=2, max_size=5),
    R=st.integers(1, 6),
    seed=st.integers(0, 2**31),
)
@settings(max_examples=50, deadline=None)
def test_pair_count_identity_property(sizes, R, seed):
    ds = toy_dataset({f"L{i}": n for i, n in enumerate(sizes)})
    ps = generate_pairs(ds, R, seed)
    assert len(ps) == 2 * R * len(sizes)


def test_pairset_invariant_enforced():
    ex = Example("t", "A")
    with pytest.raises(ValueError):
        PairSet([Pair(ex, ex, 1)], R=1, class_count=1)
    with pytest.raises(ValueError):
        Pair(Example("x", "A"), Example("y", "B"), 1)
    with pytest.raises(ValueError):
        Pair(Example("x", "A"), Example("y", "A"), 0)


# --- contrastive loss ----------------------------------------------------------


def test_loss_identical_embeddings_target_one():
    e = np.array([0.3, -0.2, 0.5])
    assert contrastive_loss(e, e, 1) == pytest.approx(0.0, abs=1e-12)


def test_loss_orthogonal_target_zero():
    assert contrastive_loss(np.array([1.0, 0.0]), np.array([0.0, 2.0]), 0) == pytest.approx(0.0)


def test_loss_opposite_target_one():
    e = np.array([0.1, 0.4])
    assert contrastive_loss(e, -e, 1) == pytest.approx(4.0)


def test_loss_degenerate_norm_is_target_squared():
    z = np.zeros(3)
    e = np.array([1.0, 0.0, 0.0])
    assert contrastive_loss(z, e, 1) == 1.0
    assert contrastive_loss(z, e, 0) == 0.0


# --- contrastive trainer ---------------------------------------------------------


def test_train_contrastive_zero_lr_limit_keeps_params():
    ds = toy_dataset({"A": 3, "B": 3})
    pairs = generate_pairs(ds, 2, seed=0)
    base = small_encoder(seed=4)
    # lr below one ulp of every parameter: the stated lr -> 0 limit
    cfg = TrainConfig(learning_rate=1e-300, epochs=1, seed=0)
    tuned, _ = train_contrastive(base, pairs, cfg)
    assert params_equal(base, tuned)


def test_train_contrastive_loss_decreases_on_separable_corpus():
    ds = synthetic.keyword_corpus(n_labels=2, n_per_label=10, seed=11, keyword_rate=0.9)
    base = small_encoder(seed=1)
    pairs = generate_pairs(ds, 10, seed=2)
    _, losses = train_contrastive(base, pairs, TrainConfig.desk(seed=3))
    assert losses[-1] < losses[0]


def test_train_contrastive_deterministic():
    ds = toy_dataset({"A": 4, "B": 4})
    pairs = generate_pairs(ds, 3, seed=1)
    base = small_encoder(seed=2)
    cfg = TrainConfig.desk(seed=7)
    a, _ = train_contrastive(base, pairs, cfg)
    b, _ = train_contrastive(base, pairs, cfg)
    assert params_equal(a, b)


def test_train_contrastive_does_not_mutate_input():
    ds = toy_dataset({"A": 3, "B": 3})
    pairs = generate_pairs(ds, 2, seed=0)
    base = small_encoder(seed=4)
    snapshot = base.copy()
    train_contrastive(base, pairs, TrainConfig.desk(seed=0))
    assert params_equal(base, snapshot)


# --- optimizer gradient correctness (single step vs finite differences) ---------


def enc_param_list(encoder):
    return list(encoder.params().items())


def fd_grads_of(loss_fn, encoder, step=1e-5):
    grads = {}
    for name, p in encoder.params().items():
        g = np.zeros_like(p)
        flat, gflat = p.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        grads[name] = g
    return grads


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_one_adam_step_matches_fd_reference(seed):
    """Trainer's analytic batch gradient drives Adam to the same point as FD."""
    rng = np.random.Generator(np.random.PCG64(seed))
    ds = toy_dataset({"A": 2, "B": 2})
    pairs = generate_pairs(ds, 2, seed=seed)
    base = init(EncoderConfig(vocab_buckets=64, embed_dim=4, hidden_dim=3, out_dim=3, seed=seed))
    tc = TextConfig(vocab_buckets=64)
    lr = 0.01

    # one batch, one epoch -> exactly one Adam step at full lr
    cfg = TrainConfig(learning_rate=lr, batch_size=len(pairs), epochs=1, seed=seed)
    analytic, _ = train_contrastive(base, pairs, cfg, tc)

    probe = base.copy()

    def batch_loss():
        total = 0.0
        for p in pairs.pairs:
            ea = embed(probe, tokenize(p.a.text, tc))
            eb = embed(probe, tokenize(p.b.text, tc))
            total += contrastive_loss(ea, eb, p.target)
        return total / len(pairs)

    fd = fd_grads_of(batch_loss, probe)
    reference = base.copy()
    opt = Adam(reference.params())
    opt.step(reference.params(), fd, lr)

    for (name, got), (_, want) in zip(enc_param_list(analytic), enc_param_list(reference)):
        denom = np.maximum(np.abs(want), 1e-8)
        assert float((np.abs(got - want) / denom).max()) < 1e-3, name


# --- head training ---------------------------------------------------------------


def test_head_training_set_size_equals_dataset():
    ds = toy_dataset({"A": 4, "B": 3})
    model = train_head(small_encoder(), ds, TrainConfig())
    # |TCH| = |D| is asserted inside train_head; a trained model proves it ran
    assert model.head_kind == "frozen-embedding"
    assert model.head_weights.shape == (12, 2)


def test_head_one_example_per_class_separates():
    ds = Dataset([Example("alpha beta", "A"), Example("gamma delta", "B"), Example("epsilon zeta", "C")])
    model = train_head(small_encoder(seed=3), ds, TrainConfig())
    for ex in ds:
        assert classify.predict(model, ex.text) == ex.label


def test_head_identical_embeddings_predicts_majority_with_freq_posterior():
    zero = init(EncoderConfig(vocab_buckets=256, embed_dim=8, hidden_dim=8, out_dim=8, init_scale=0.0))
    ds = Dataset([Example("same text", "A"), Example("same text", "A"), Example("same text", "B")])
    model = train_head(zero, ds, TrainConfig())
    assert classify.predict(model, "same text") == "A"
    posterior = classify.predict_proba(model, "anything else entirely")
    assert np.allclose(posterior, [2 / 3, 1 / 3], atol=1e-4)


def test_head_unique_optimum_from_different_inits():
    rng = np.random.Generator(np.random.PCG64(0))
    X = rng.normal(size=(60, 4))
    y = np.asarray(rng.integers(0, 3, size=60))
    w_a, b_a, _ = fit_logistic_head(X, y, 3)
    w_b, b_b, _ = fit_logistic_head(X, y, 3, init=rng.uniform(-0.5, 0.5, size=(5, 3)))
    assert float(np.abs(w_a - w_b).max()) < 1e-4
    assert float(np.abs(b_a - b_b).max()) < 1e-4


def test_head_empty_dataset_rejected():
    with pytest.raises(ValueError):
        train_head(small_encoder(), Dataset(), TrainConfig())


# --- vanilla trainer ---------------------------------------------------------------


def test_vanilla_zero_lr_limit_keeps_predictions():
    ds = toy_dataset({"A": 4, "B": 4})
    base = small_encoder(seed=6)
    frozen, _ = train_vanilla(base, ds, TrainConfig(learning_rate=1e-300, seed=1))
    moved, _ = train_vanilla(base, ds, TrainConfig(learning_rate=1e-300, seed=1, epochs=2))
    for ex in ds:
        assert np.array_equal(
            classify.predict_proba(frozen, ex.text), classify.predict_proba(moved, ex.text)
        )
    assert params_equal(frozen.encoder, base)


def test_vanilla_separable_corpus_reaches_95_train_accuracy():
    ds = synthetic.keyword_corpus(n_labels=2, n_per_label=24, seed=11, keyword_rate=0.9)
    base = init(EncoderConfig(vocab_buckets=1024, embed_dim=24, hidden_dim=24, out_dim=24, seed=1))
    model, _ = train_vanilla(base, ds, TrainConfig.desk(seed=5))
    acc = sum(classify.predict(model, ex.text) == ex.label for ex in ds) / len(ds)
    assert acc >= 0.95


def test_vanilla_deterministic():
    ds = toy_dataset({"A": 5, "B": 5})
    base = small_encoder(seed=2)
    cfg = TrainConfig.desk(seed=3)
    a, _ = train_vanilla(base, ds, cfg)
    b, _ = train_vanilla(base, ds, cfg)
    assert params_equal(a.encoder, b.encoder)
    assert np.array_equal(a.head_weights, b.head_weights)
    assert np.array_equal(a.head_bias, b.head_bias)


def test_vanilla_head_kind_and_labels():
    ds = toy_dataset({"B": 2, "A": 2})
    model, _ = train_vanilla(small_encoder(), ds, TrainConfig())
    assert model.head_kind == "end-to-end"
    assert model.labels == ["B", "A"]  # inventory order, not sorted


# --- config profiles ----------------------------------------------------------------


def test_config_profiles():
    paper = TrainConfig.paper()
    assert (paper.learning_rate, paper.warmup_ratio, paper.seed) == (2e-5, 0.1, 42)
    assert (paper.batch_size, paper.epochs, paper.R) == (8, 1, 20)
    desk = TrainConfig.desk()
    assert (desk.learning_rate, desk.epochs) == (1e-2, 5)
    assert (desk.batch_size, desk.R) == (8, 20)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(warmup_ratio=1.5)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
