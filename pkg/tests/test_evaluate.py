import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hscls.corpus import Corpus, SparseDoc
from hscls.evaluate import confusion_counts, evaluate, harmonic, macro_scores, predict_corpus
from hscls.model import build_dictionaries, new_model
from oracles import brute_macro

HAND_PREDS = [{"a"}, {"a"}, {"a"}]
HAND_GOLDS = [{"a"}, {"a", "b"}, {"b"}]


def test_hand_instance():
    counts, unknown = confusion_counts(HAND_PREDS, HAND_GOLDS, ["a", "b"])
    assert counts == {"a": [2, 1, 0], "b": [0, 0, 2]}
    assert unknown == []
    r = macro_scores(counts)
    assert r.precision == pytest.approx(1 / 3)
    assert r.recall == 0.5
    assert r.f1 == pytest.approx(0.4)
    _, p, rc, f = brute_macro(HAND_PREDS, HAND_GOLDS, ["a", "b"])
    assert (p, rc, f) == (Fraction(1, 3), Fraction(1, 2), Fraction(2, 5))


def test_perfect():
    golds = [{1, 2}, {3}, {1}]
    r = evaluate(golds, golds, [1, 2, 3])
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)
    assert all(fp == fn == 0 for _, fp, fn in r.counts.values())


def test_disjoint():
    r = evaluate([{2}, {1}], [{1}, {2}], [1, 2])
    assert r.f1 == 0.0 and all(tp == 0 for tp, _, _ in r.counts.values())


def test_equal_precision_recall():
    assert harmonic(0.37, 0.37) == pytest.approx(0.37)
    assert harmonic(0.0, 0.0) == 0.0


def test_unknown_prediction_flagged():
    r = evaluate([{1, 7}], [{1}], [1])
    assert r.unknown_predicted == [7]
    assert r.counts[7] == (0, 1, 0)
    assert r.classes == [1, 7]


def test_gold_outside_classes():
    with pytest.raises(ValueError):
        confusion_counts([{1}], [{5}], [1])


def test_length_mismatch():
    with pytest.raises(ValueError):
        confusion_counts([{1}], [{1}, {1}], [1])


def random_instance(rng, n_classes=None, n_docs=None):
    n_classes = n_classes or rng.randint(1, 10)
    n_docs = n_docs or rng.randint(1, 50)
    classes = list(range(n_classes))
    golds = [set(rng.sample(classes, rng.randint(1, min(3, n_classes)))) for _ in range(n_docs)]
    preds = [set(rng.sample(classes, rng.randint(0, min(3, n_classes)))) for _ in range(n_docs)]
    return preds, golds, classes


@given(st.randoms(use_true_random=False))
def test_matches_brute_force(rnd):
    preds, golds, classes = random_instance(rnd)
    r = evaluate(preds, golds, classes)
    counts, p, rc, f = brute_macro(preds, golds, classes)
    assert r.counts == counts
    assert r.precision == pytest.approx(float(p), abs=1e-12)
    assert r.recall == pytest.approx(float(rc), abs=1e-12)
    assert r.f1 == pytest.approx(float(f), abs=1e-12)
    assert 0 <= r.f1 <= min(2 * min(r.precision, r.recall), max(r.precision, r.recall)) + 1e-12


@given(st.randoms(use_true_random=False))
def test_doc_order_irrelevant(rnd):
    preds, golds, classes = random_instance(rnd)
    pairs = list(zip(preds, golds))
    rnd.shuffle(pairs)
    a = evaluate(preds, golds, classes)
    b = evaluate([p for p, _ in pairs], [g for _, g in pairs], classes)
    assert a.counts == b.counts
    assert a.precision == pytest.approx(b.precision, abs=1e-15)
    assert a.recall == pytest.approx(b.recall, abs=1e-15)


@given(st.randoms(use_true_random=False))
def test_unsupported_class_only_changes_denominator(rnd):
    preds, golds, classes = random_instance(rnd)
    a = evaluate(preds, golds, classes)
    b = evaluate(preds, golds, classes + [999])
    assert all(b.counts[c] == a.counts[c] for c in classes)
    assert b.counts[999] == (0, 0, 0)
    c = len(classes)
    assert b.precision == pytest.approx(a.precision * c / (c + 1), abs=1e-12)
    assert b.recall == pytest.approx(a.recall * c / (c + 1), abs=1e-12)


def test_report_json():
    r = evaluate([{1}], [{1}], [1, 2], k=1)
    d = r.as_dict()
    assert d["macro_f1"] == r.f1 and d["k"] == 1 and d["per_class"]["2"] == {"tp": 0, "fp": 0, "fn": 0}


class TestPredictCorpus:
    corpus = Corpus([SparseDoc((1,), ((0, 1.0),)), SparseDoc((2, 3), ((1, 1.0),)), SparseDoc((3,), ((2, 1.0),))])

    @pytest.mark.parametrize("mode", ["hs", "softmax"])
    def test_k_predictions(self, mode):
        model = new_model(build_dictionaries(self.corpus), 3, mode, seed=0)
        for k in (1, 2, 3):
            preds = predict_corpus(model, self.corpus, k)
            assert all(len(p) == k for p in preds)
        preds = predict_corpus(model, self.corpus, 10)
        assert all(sorted(p) == [1, 2, 3] for p in preds)
        r = evaluate(preds, [d.labels for d in self.corpus], [1, 2, 3])
        assert r.recall == 1.0

    def test_empty_doc(self):
        model = new_model(build_dictionaries(self.corpus), 3, "hs")
        assert predict_corpus(model, [SparseDoc((1,), ((77, 1.0),))], 1) == [[]]
        r = evaluate([[]], [[1]], [1, 2, 3])
        assert r.counts[1] == (0, 0, 1)

    def test_argmax(self):
        model = new_model(build_dictionaries(self.corpus), 3, "softmax")
        model.params.output[2] = 5.0  # label row 2 dominates for positive h
        model.params.input[:] = 1.0
        assert predict_corpus(model, self.corpus, 1) == [[model.dicts.index_to_label[2]]] * 3

    def test_bad_k(self):
        model = new_model(build_dictionaries(self.corpus), 3, "hs")
        with pytest.raises(ValueError):
            predict_corpus(model, self.corpus, 0)
