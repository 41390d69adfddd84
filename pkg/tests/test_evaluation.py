import csv
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from resco.evaluation import (
    CorpusItem,
    correlation,
    evaluate_corpus,
    evaluate_scores,
    metric_value,
    ndcg,
    pearson,
)
from resco.gold_standard import RefSim, read_refsim, truncate_topk, write_refsim
from resco.pipeline import DocumentFeatures, RunConfig, select

FAST = RunConfig(restarts=4)


def _item(rng, doc_id, n):
    X = rng.uniform(-1, 1, size=(n, 3))
    feats = DocumentFeatures(doc_id, X, rng.normal(size=(n, 4)))
    return CorpusItem(feats, tuple(rng.uniform(-1, 1, size=n).tolist()))


def test_pearson_exact_relations():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_pearson_textbook_example():
    got = pearson([1, 0, 1, 0], [0.9, 0.1, 0.8, 0.2])
    assert got == pytest.approx(oracles.pearson([1, 0, 1, 0], [0.9, 0.1, 0.8, 0.2]), abs=1e-12)
    assert got == pytest.approx(0.7 / math.sqrt(0.5), abs=1e-12)


def test_pearson_zero_variance_flag():
    assert correlation([1, 1, 1], [0.1, 0.5, 0.2]) == (0.0, True)
    assert correlation([0.1, 0.5, 0.2], [3, 3, 3]) == (0.0, True)


def test_pearson_errors():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [1])


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-10, 10, allow_subnormal=False), min_size=3, max_size=15),
    st.floats(0.1, 10),
    st.floats(-5, 5),
    st.randoms(use_true_random=False),
)
def test_pearson_affine_invariance(x, a, b, rnd):
    y = [rnd.uniform(-1, 1) for _ in x]
    r, deg = correlation(x, y)
    if deg or np.std(x) < 1e-6:
        return
    assert pearson([a * v + b for v in x], y) == pytest.approx(r, abs=1e-12)


def test_ndcg_ideal_is_one():
    assert ndcg([0.9, 0.8, 0.1, 0.0], [1, 1, 0, 0]) == 1.0


def test_ndcg_hand_example():
    value = ndcg([0.9, 0.5, 0.1], [1, 0, 1])
    assert value == pytest.approx(1.5 / (1 + 1 / math.log2(3)), abs=1e-12)
    assert round(value, 5) == 0.91972


def test_ndcg_ties_by_index():
    # all-zero scores keep document order
    assert ndcg([0.0, 0.0, 0.0], [0, 0, 1]) == pytest.approx(0.5)
    assert ndcg([0.0, 0.0, 0.0], [1, 0, 0]) == 1.0


def test_ndcg_needs_relevant():
    with pytest.raises(ValueError):
        ndcg([0.2, 0.1], [0, 0])
    with pytest.raises(ValueError):
        ndcg([0.2], [1, 0])


def test_ndcg_exhaustive_small():
    for n in range(1, 6):
        for rho in range(1, n + 1):
            labels = [1] * rho + [0] * (n - rho)
            values = []
            for perm in itertools.permutations(range(n)):
                scores = [0.0] * n
                for rank, item in enumerate(perm):
                    scores[item] = float(n - rank)
                got = ndcg(scores, labels)
                assert got == pytest.approx(oracles.ndcg_exhaustive(list(perm), labels), abs=1e-12)
                values.append(got)
            anti = [float(i) for i in range(n)]  # relevant items first in index, scored lowest
            assert ndcg(anti, labels) == pytest.approx(min(values), abs=1e-12)


def test_ndcg_monotone_under_upward_swap():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        labels = rng.integers(0, 2, size=n)
        if not labels.any():
            labels[0] = 1
        scores = rng.permutation(n).astype(float)
        order = np.argsort(-scores, kind="stable")
        for pos in range(n - 1):
            hi, lo = order[pos], order[pos + 1]
            if labels[hi] == 0 and labels[lo] == 1:
                swapped = scores.copy()
                swapped[hi], swapped[lo] = scores[lo], scores[hi]
                assert ndcg(swapped, labels) >= ndcg(scores, labels)


def test_metric_value_rho_clamp():
    v, deg, used = metric_value([0.3, 0.1], [0.9, 0.1], "ndcg", 5)
    assert used == 2 and v == 1.0 and not deg
    with pytest.raises(ValueError):
        metric_value([0.1], [0.1, 0.2], "pearson", None)
    with pytest.raises(ValueError):
        metric_value([0.1, 0.2], [0.1, 0.2], "recall", None)


def test_single_document_single_iteration():
    rng = np.random.default_rng(0)
    item = _item(rng, "d0", 9)
    rep = evaluate_corpus([item], "resco-cc", "pearson", iterations=1, base_seed=4, config=FAST)
    sel = select(item.features, FAST, 4, mode="identification").selection
    want = correlation(sel.r, item.refsim)[0]
    assert rep.per_doc == {"d0": want}
    assert rep.mean == want and rep.stddev == 0.0
    assert rep.seeds == [4] and rep.iterations == 1 and rep.mode == "identification"


@pytest.mark.parametrize("metric, rho", [("ndcg", 3), ("pearson", None)])
def test_cen_zero_variance(metric, rho):
    rng = np.random.default_rng(1)
    corpus = [_item(rng, f"d{i}", 8 + i) for i in range(3)]
    rep = evaluate_corpus(corpus, "resco-cen", metric, rho, iterations=5, config=FAST)
    assert all(v == 0.0 for v in rep.per_doc_variance.values())
    assert len(rep.per_doc_variance) == 3


def test_aggregation_oracle():
    rng = np.random.default_rng(2)
    corpus = [_item(rng, f"d{i}", n) for i, n in enumerate([6, 9, 12])]
    rep = evaluate_corpus(corpus, "resco-cc", "ndcg", 3, iterations=3, base_seed=10, config=FAST)
    per_doc = {}
    for item in corpus:
        vals = []
        for seed in (10, 11, 12):
            r = select(item.features, FAST, seed, mode="scoring").selection.r
            vals.append(oracles.ndcg_exhaustive(sorted(range(len(r)), key=lambda i: (-r[i], i)), truncate_topk(item.refsim, 3))
                        if len(r) <= 6 else ndcg(r, truncate_topk(item.refsim, 3)))
        per_doc[item.doc_id] = sum(vals) / 3
    assert rep.per_doc == pytest.approx(per_doc, abs=1e-12)
    m = sum(per_doc.values()) / 3
    sd = math.sqrt(sum((v - m) ** 2 for v in per_doc.values()) / 3)
    assert rep.mean == pytest.approx(m, abs=1e-12)
    assert rep.stddev == pytest.approx(sd, abs=1e-12)
    assert rep.seeds == [10, 11, 12]


def test_skips_single_sentence_and_mismatch():
    rng = np.random.default_rng(4)
    good = _item(rng, "ok", 6)
    single = CorpusItem(DocumentFeatures("one", np.zeros((1, 3)), np.ones((1, 2))), (0.5,))
    bad = CorpusItem(good.features.__class__("bad", good.features.X, good.features.vectors), (0.1, 0.2))
    rep = evaluate_corpus([good, single, bad], "resco-cc", "pearson", iterations=1, config=FAST)
    assert set(rep.per_doc) == {"ok"}
    assert set(rep.skipped) == {"one", "bad"}


def test_external_reader_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    corpus = [_item(rng, f"d{i}", 7) for i in range(3)]
    internal = evaluate_corpus(corpus, "resco-cc", "ndcg", 3, iterations=1, config=FAST)
    scores, refsims = {}, {}
    for item in corpus:
        r = select(item.features, FAST, 0, mode="scoring").selection.r
        path = tmp_path / f"{item.doc_id}.json"
        write_refsim(RefSim(item.doc_id, r), path)
        scores[item.doc_id] = read_refsim(path).scores
        refsims[item.doc_id] = item.refsim
    external = evaluate_scores(scores, refsims, "ndcg", 3)
    assert external.per_doc == internal.per_doc
    assert external.mean == internal.mean
    assert evaluate_scores({"zz": [0.1, 0.2]}, refsims, "pearson").skipped == {"zz": "no gold standard"}


def test_serial_equals_parallel():
    rng = np.random.default_rng(6)
    corpus = [_item(rng, f"d{i}", 10) for i in range(4)]
    a = evaluate_corpus(corpus, "resco-cc", "pearson", iterations=2, config=FAST, workers=1)
    b = evaluate_corpus(corpus, "resco-cc", "pearson", iterations=2, config=FAST, workers=2)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_report_files(tmp_path):
    rng = np.random.default_rng(7)
    rep = evaluate_corpus([_item(rng, "d", 6)], "resco-coh", "ndcg", 2, iterations=1, config=FAST)
    rep.write_json(tmp_path / "r.json", {"config": FAST.to_dict()})
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["method"] == "resco-coh" and data["config"]["restarts"] == 4
    rep.write_csv(tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["doc_id", "method", "metric", "rho", "value"]
    assert float(rows[1][4]) == rep.per_doc["d"]


def test_iterations_must_be_positive():
    with pytest.raises(ValueError):
        evaluate_corpus([], "resco-cc", "pearson", iterations=0)
