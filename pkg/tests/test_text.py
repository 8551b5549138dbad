import pytest
from hypothesis import given, strategies as st

from contrastfit.text import TextConfig, mask_tokens, stable_hash, tokenize


def test_tokenize_basic_sentence():
    seq = tokenize("The Board may act.")
    assert seq.surfaces == ("the", "board", "may", "act")
    assert len(seq.slots) == 4


def test_tokenize_empty_text():
    assert len(tokenize("")) == 0
    assert len(tokenize("   \t\n ")) == 0


def test_tokenize_normalization_shares_slot():
    seq = tokenize("Adjustments, adjustments")
    assert seq.surfaces == ("adjustments", "adjustments")
    assert seq.slots[0] == seq.slots[1]


def test_tokenize_strips_surrounding_punctuation_only():
    seq = tokenize('"(non-compete)," he said;')
    assert seq.surfaces == ("non-compete", "he", "said")


def test_tokenize_punctuation_only_tokens_dropped():
    assert tokenize("--- ... !!").surfaces == ()


def test_tokenize_respects_lowercase_flag():
    cfg = TextConfig(lowercase=False)
    assert tokenize("The Board", cfg).surfaces == ("The", "Board")


def test_hash_is_stable_across_runs_and_platforms():
    # frozen literals: the keyed blake2b digest is platform independent
    assert stable_hash("adjustments", 0) == 6605639456211351505
    assert stable_hash("authority", 7) == 611509875398174124
    assert stable_hash("adjustments", 0) != stable_hash("adjustments", 1)
    assert tokenize("adjustments").slots == (6605639456211351505 % 2**15,)


def test_hash_seed_changes_slots():
    a = tokenize("authority", TextConfig(hash_seed=0)).slots
    b = tokenize("authority", TextConfig(hash_seed=99)).slots
    # same bucket is possible but wildly unlikely for 2^15 buckets
    assert a != b


def test_vocab_buckets_bound_and_validation():
    cfg = TextConfig(vocab_buckets=7)
    seq = tokenize("one two three four five six seven eight nine ten", cfg)
    assert all(0 <= s < 7 for s in seq.slots)
    with pytest.raises(ValueError):
        TextConfig(vocab_buckets=1)


def test_mask_identity():
    seq = tokenize("a b c d")
    assert mask_tokens(seq, [1, 1, 1, 1]) == seq


def test_mask_all_off():
    seq = tokenize("a b c d")
    assert len(mask_tokens(seq, [0, 0, 0, 0])) == 0


def test_mask_selection():
    seq = tokenize("a b c")
    assert mask_tokens(seq, [1, 0, 1]).surfaces == ("a", "c")


def test_mask_length_mismatch():
    with pytest.raises(ValueError):
        mask_tokens(tokenize("a b c"), [1, 0])


@given(st.text(max_size=80))
def test_same_surface_same_slot(text):
    seq = tokenize(text)
    by_surface = {}
    for tok in seq.tokens:
        assert by_surface.setdefault(tok.surface, tok.slot) == tok.slot
        assert 0 <= tok.slot < TextConfig().vocab_buckets
