from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechcue.errors import LabelOutsideSet, LabelSetMismatch, LengthMismatch
from speechcue.metrics import (
    EvalReport,
    diff_reports,
    format_delta,
    format_report,
    score,
    weighted_f1_batch,
)

LABELS = ("a", "b", "c")


def oracle_f1(gold, pred, labels):
    """Exact per-class F1 from precision and recall as fractions; None counts as wrong."""
    out = {}
    for lab in labels:
        tp = sum(g == lab and p == lab for g, p in zip(gold, pred))
        pp = sum(p == lab for p in pred)
        sup = sum(g == lab for g in gold)
        prec = Fraction(tp, pp) if pp else Fraction(0)
        rec = Fraction(tp, sup) if sup else Fraction(0)
        out[lab] = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
    return out


def test_hand_example_exact():
    r = score(list("aabb"), list("abbb"), ("a", "b"))
    assert r.per_class_f1 == {"a": 2 / 3, "b": 4 / 5}
    assert r.weighted_f1 == pytest.approx(0.7333333333333, abs=1e-12)
    assert r.macro_f1 == pytest.approx(0.7333333333333, abs=1e-12)


def test_perfect():
    gold = list("abcabc")
    r = score(gold, gold, LABELS)
    assert r.weighted_f1 == r.macro_f1 == 1.0
    assert np.array_equal(np.array(r.confusion), np.eye(3))


def test_unparseable_counts_against_recall():
    r = score(["a", "a", "b"], ["a", None, "b"], ("a", "b"))
    assert r.unparseable_count == 1
    assert r.support == {"a": 2, "b": 1}
    assert r.per_class_f1["a"] == pytest.approx(2 / 3)
    assert r.confusion[0] == (0.5, 0.0)
    assert r.unparseable_share == (0.5, 0.0)


def test_empty_row_is_zero_and_flagged():
    r = score(["a", "a"], ["a", "b"], LABELS)
    assert r.confusion[2] == (0.0, 0.0, 0.0)
    assert r.empty_rows == ["b", "c"]


def test_errors():
    with pytest.raises(LengthMismatch):
        score(["a"], [], LABELS)
    with pytest.raises(LengthMismatch):
        score([], [], LABELS)
    with pytest.raises(LabelOutsideSet):
        score(["a"], ["z"], LABELS)
    with pytest.raises(LabelOutsideSet):
        score(["z"], ["a"], LABELS)


_labels = st.sampled_from(LABELS)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(_labels, st.one_of(st.none(), _labels)), min_size=1, max_size=40), st.randoms())
def test_against_fraction_oracle(pairs, rnd):
    gold = [g for g, _ in pairs]
    pred = [p for _, p in pairs]
    r = score(gold, pred, LABELS)
    exact = oracle_f1(gold, pred, LABELS)
    for lab in LABELS:
        assert r.per_class_f1[lab] == pytest.approx(float(exact[lab]), abs=1e-15)
    support = {lab: gold.count(lab) for lab in LABELS}
    weighted = sum(exact[lab] * support[lab] for lab in LABELS) / len(gold)
    assert r.weighted_f1 == pytest.approx(float(weighted), abs=1e-12)
    assert r.macro_f1 == pytest.approx(float(sum(exact.values()) / 3), abs=1e-12)
    assert min(r.per_class_f1.values()) - 1e-12 <= r.weighted_f1 <= max(r.per_class_f1.values()) + 1e-12
    for i, lab in enumerate(LABELS):
        if support[lab]:
            assert sum(r.confusion[i]) + r.unparseable_share[i] == pytest.approx(1.0, abs=1e-9)

    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    again = score([g for g, _ in shuffled], [p for _, p in shuffled], LABELS)
    assert again == r


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(1, 60), st.integers(0, 1000))
def test_batch_matches_scalar(k, n, seed):
    rng = np.random.default_rng(seed)
    gold = rng.integers(0, k, n)
    pred = rng.integers(0, k, (5, n))
    labels = [str(i) for i in range(k)]
    batch = weighted_f1_batch(gold, pred, k)
    for t in range(5):
        r = score([labels[i] for i in gold], [labels[i] for i in pred[t]], labels)
        assert batch[t] == pytest.approx(r.weighted_f1, abs=1e-12)


def test_random_guessing_six_classes():
    rng = np.random.default_rng(0)
    gold = np.repeat(np.arange(6), 100)
    scores = weighted_f1_batch(gold, rng.integers(0, 6, (10_000, gold.size)), 6)
    assert 100 * scores.mean() == pytest.approx(16.67, abs=0.5)


# ---------------------------------------------------------------- diffs and serialization


def _report(per_class: dict, weighted: float) -> EvalReport:
    labels = tuple(per_class)
    return EvalReport(
        labels,
        per_class,
        weighted,
        sum(per_class.values()) / len(per_class),
        tuple(tuple(0.0 for _ in labels) for _ in labels),
        tuple(0.0 for _ in labels),
        {lab: 1 for lab in labels},
        0,
    )


def test_identical_reports_diff_to_zero():
    r = score(list("abca"), list("abcc"), LABELS)
    d = diff_reports(r, r)
    assert d.weighted_f1 == d.macro_f1 == 0.0
    assert set(d.formatted().values()) == {"+0.000%"}


def test_sad_class_delta():
    before = _report({"sad": 0.8023, "neutral": 0.5}, 0.7)
    after = _report({"sad": 0.8221, "neutral": 0.5}, 0.7)
    d = diff_reports(before, after)
    assert d.per_class["sad"] == pytest.approx(1.98, abs=1e-9)
    assert d.formatted(2)["sad"] == "+1.98%"
    assert d.formatted()["sad"] == "+1.980%"


def test_diff_matches_subtraction():
    rng = np.random.default_rng(8)
    a = _report(dict(zip(LABELS, rng.uniform(size=3))), 0.4)
    b = _report(dict(zip(LABELS, rng.uniform(size=3))), 0.6)
    d = diff_reports(a, b)
    for lab in LABELS:
        assert d.per_class[lab] == pytest.approx(100 * (b.per_class_f1[lab] - a.per_class_f1[lab]))
    assert d.weighted_f1 == pytest.approx(20.0)


def test_diff_label_mismatch():
    with pytest.raises(LabelSetMismatch):
        diff_reports(_report({"a": 1.0, "b": 1.0}, 1), _report({"a": 1.0, "c": 1.0}, 1))


def test_format_delta_sign():
    assert format_delta(-0.0001) == "+0.000%"
    assert format_delta(-2.5) == "-2.500%"


def test_report_round_trip_and_table():
    r = score(list("abcab"), ["a", "c", "c", None, "b"], LABELS)
    doc = json.loads(json.dumps(r.to_dict()))
    assert EvalReport.from_dict(doc).to_dict() == r.to_dict()
    table = format_report(r)
    assert "weighted F1" in table and f"{100 * r.weighted_f1:8.3f}" in table
