import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tisrl.metrics import LabelError, accuracy, contingency, evaluate, nmi, pairwise_f_precision


def brute_accuracy(truth, pred):
    """Best matched fraction over every injective map of predicted labels into true labels."""
    t_labels = sorted(set(truth))
    p_labels = sorted(set(pred))
    pool = t_labels + [object()] * len(p_labels)  # dummy targets never match
    best = 0
    for image in itertools.permutations(pool, len(p_labels)):
        m = dict(zip(p_labels, image))
        best = max(best, sum(m[p] == t for t, p in zip(truth, pred)))
    return best / len(truth)


def brute_pairs(truth, pred):
    tp = fp = fn = 0
    for a, b in itertools.combinations(range(len(truth)), 2):
        st_, sp = truth[a] == truth[b], pred[a] == pred[b]
        tp += st_ and sp
        fp += sp and not st_
        fn += st_ and not sp
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return f, precision


def brute_nmi(truth, pred):
    n = len(truth)
    pt = {a: truth.count(a) / n for a in set(truth)}
    pp = {b: pred.count(b) / n for b in set(pred)}
    joint = {}
    for a, b in zip(truth, pred):
        joint[a, b] = joint.get((a, b), 0) + 1 / n
    mi = sum(p * math.log(p / (pt[a] * pp[b])) for (a, b), p in joint.items())
    ht = -sum(p * math.log(p) for p in pt.values())
    hp = -sum(p * math.log(p) for p in pp.values())
    if ht == 0 and hp == 0:
        return 1.0
    if ht == 0 or hp == 0:
        return 0.0
    return mi / math.sqrt(ht * hp)


class TestExamples:
    def test_identical(self):
        y = [0, 0, 1, 1, 2]
        assert accuracy(y, y) == 1.0
        assert nmi(y, y) == pytest.approx(1.0)
        assert pairwise_f_precision(y, y) == (1.0, 1.0)

    def test_relabeled(self):
        assert accuracy([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_crossed(self):
        truth, pred = [0, 0, 1, 1], [0, 1, 0, 1]
        assert brute_accuracy(truth, pred) == 0.5
        assert accuracy(truth, pred) == 0.5
        assert nmi(truth, pred) == pytest.approx(0.0, abs=1e-15)
        assert brute_pairs(truth, pred) == (0.0, 0.0)
        assert pairwise_f_precision(truth, pred) == (0.0, 0.0)

    def test_single_predicted_cluster(self):
        truth, pred = [0, 0, 1, 1], [0, 0, 0, 0]
        f, p = pairwise_f_precision(truth, pred)
        assert brute_pairs(truth, pred) == pytest.approx((0.5, 2 / 6))
        assert p == pytest.approx(2 / 6)
        assert f == pytest.approx(0.5)

    def test_length_mismatch(self):
        with pytest.raises(LabelError):
            accuracy([0, 1], [0])
        with pytest.raises(LabelError):
            nmi([0, 1], [0, 1, 1])
        with pytest.raises(LabelError):
            pairwise_f_precision([0], [0])

    def test_contingency(self):
        ct = contingency([0, 0, 1, 2], [5, 5, 5, 7])
        np.testing.assert_array_equal(ct.table, [[2, 0], [1, 0], [0, 1]])
        assert ct.n == 4 and ct.table.sum() == 4

    def test_trivial_partitions(self):
        assert nmi([0, 0, 0], [1, 1, 1]) == 1.0
        assert nmi([0, 0, 0], [0, 1, 2]) == 0.0


labels = st.lists(st.integers(0, 2), min_size=2, max_size=8)


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_against_brute_force(data):
    truth = data.draw(labels)
    pred = data.draw(st.lists(st.integers(0, 2), min_size=len(truth), max_size=len(truth)))
    assert accuracy(truth, pred) == brute_accuracy(truth, pred)
    assert nmi(truth, pred) == pytest.approx(brute_nmi(truth, pred), abs=1e-12)
    assert pairwise_f_precision(truth, pred) == pytest.approx(brute_pairs(truth, pred), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_relabeling_invariance_and_range(data):
    truth = data.draw(labels)
    pred = data.draw(st.lists(st.integers(0, 2), min_size=len(truth), max_size=len(truth)))
    perm = data.draw(st.permutations([0, 1, 2]))
    renamed = [perm[p] for p in pred]
    base = evaluate(truth, pred)
    assert evaluate(truth, renamed) == pytest.approx(base)
    assert evaluate([perm[t] for t in truth], pred) == pytest.approx(base)
    assert all(0.0 <= v <= 1.0 for v in base.values())
    assert nmi(truth, pred) == pytest.approx(nmi(pred, truth))
    # a random bijection on the padded m x m table matches n/m samples on average
    assert accuracy(truth, pred) >= 1 / max(len(set(truth)), len(set(pred))) - 1e-12
