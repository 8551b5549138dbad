import json

import pytest
from hypothesis import given, settings, strategies as st

from contrastfit.compare import (
    NEGATIVE,
    POSITIVE,
    FeatureTable,
    aggregate_features,
    common_features,
    comparison_report,
    top_features,
    write_bar_chart_svg,
    write_comparison_csv,
    write_comparison_json,
)
from contrastfit.explain import Explanation


def expl(features, label="Adjustments"):
    return Explanation(label, features, intercept=0.0, n_samples=25)


def table(entries, label="Adjustments", model_id="m"):
    return FeatureTable(label, model_id, entries)


def test_single_explanation_identity():
    e = expl([("shares", 0.5), ("without", -0.2)])
    t = aggregate_features([e], model_id="setfit")
    assert t.entries == [("shares", 0.5, 1), ("without", -0.2, 1)]
    assert t.label == "Adjustments" and t.model_id == "setfit"


def test_aggregate_sums_signed_weights():
    t = aggregate_features([expl([("stock", 0.3)]), expl([("stock", -0.1)])])
    assert t.entries == [("stock", pytest.approx(0.2), 2)]


def test_aggregate_empty_list():
    t = aggregate_features([])
    assert t.entries == [] and t.label == ""


def test_aggregate_rejects_mixed_labels():
    with pytest.raises(ValueError, match="mix"):
        aggregate_features([expl([], label="A"), expl([], label="B")])


def test_aggregate_sorted_by_magnitude():
    t = aggregate_features([expl([("a", 0.1), ("b", -0.9), ("c", 0.5)])])
    assert [w for w, _, _ in t.entries] == ["b", "c", "a"]


def test_common_disjoint_vocabulary_empty():
    a = table([("shares", 0.4, 1)])
    b = table([("dividend", 0.3, 1)])
    assert common_features(a, b, POSITIVE) == []


def test_common_sign_mismatch_excluded():
    a = table([("shall", 0.4, 1)])
    b = table([("shall", -0.2, 1)])
    assert common_features(a, b, POSITIVE) == []
    assert common_features(a, b, NEGATIVE) == []


def test_common_identical_tables():
    entries = [("shares", 0.4, 2), ("stock", 0.1, 1), ("without", -0.3, 1)]
    a, b = table(entries), table(entries, model_id="other")
    pos = common_features(a, b, POSITIVE)
    assert [(w, wa) for w, wa, _ in pos] == [("shares", 0.4), ("stock", 0.1)]
    assert all(wa == wb for _, wa, wb in pos)
    neg = common_features(a, b, NEGATIVE)
    assert neg == [("without", -0.3, -0.3)]


def test_common_sorted_by_weaker_commitment():
    a = table([("x", 1.0, 1), ("y", 0.2, 1)])
    b = table([("x", 0.1, 1), ("y", 0.9, 1)])
    rows = common_features(a, b, POSITIVE)
    # min(|x|) = 0.1 < min(|y|) = 0.2, so y outranks x
    assert [w for w, _, _ in rows] == ["y", "x"]


def test_common_rejects_label_mismatch():
    with pytest.raises(ValueError, match="label mismatch"):
        common_features(table([], label="A"), table([], label="B"), POSITIVE)


def test_common_rejects_bad_sign():
    with pytest.raises(ValueError):
        common_features(table([]), table([]), "sideways")


words = st.sampled_from(["shares", "stock", "shall", "without", "act", "power"])
entry_lists = st.lists(
    st.tuples(words, st.floats(-1, 1, allow_nan=False), st.integers(1, 3)),
    max_size=6,
    unique_by=lambda e: e[0],
)


@given(entries_a=entry_lists, entries_b=entry_lists, sign=st.sampled_from([POSITIVE, NEGATIVE]))
@settings(max_examples=80, deadline=None)
def test_common_symmetric_word_sets_and_sign(entries_a, entries_b, sign):
    a, b = table(entries_a), table(entries_b, model_id="other")
    ab = common_features(a, b, sign)
    ba = common_features(b, a, sign)
    assert {w for w, _, _ in ab} == {w for w, _, _ in ba}
    for _, wa, wb in ab:
        if sign == POSITIVE:
            assert wa > 0 and wb > 0
        else:
            assert wa < 0 and wb < 0


def test_top_features_sign_filter_and_cap():
    t = table([("a", 0.9, 1), ("b", -0.8, 1), ("c", 0.7, 1), ("d", 0.6, 1)])
    assert [w for w, _, _ in top_features(t, POSITIVE, 2)] == ["a", "c"]
    assert [w for w, _, _ in top_features(t, NEGATIVE, 2)] == ["b"]


def test_report_files(tmp_path):
    a = table([("shares", 0.4, 2), ("without", -0.3, 1)], model_id="setfit")
    b = table([("shares", 0.2, 1), ("without", -0.1, 1)], model_id="vanilla")
    report = comparison_report(a, b, top_n=5)
    assert report["common_positive"] == [["shares", 0.4, 0.2]]
    assert report["common_negative"] == [["without", -0.3, -0.1]]

    json_path = tmp_path / "cmp.json"
    write_comparison_json(report, json_path)
    assert json.loads(json_path.read_text())["label"] == "Adjustments"

    csv_path = tmp_path / "cmp.csv"
    write_comparison_csv(report, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0].startswith("section,word")
    assert any("common_positive,shares" in line for line in lines)


def test_bar_chart_svg(tmp_path):
    path = tmp_path / "chart.svg"
    write_bar_chart_svg([("shares", 0.4), ("without", -0.3)], "demo", path)
    content = path.read_text()
    assert content.lstrip().startswith("<?xml") and "<svg" in content
