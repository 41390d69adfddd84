import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from resco.embedding_store import VectorStore
from resco.errors import FormatError
from resco.gold_standard import (
    RefSim,
    build_refsim,
    discover_pairs,
    read_refsim,
    truncate_topk,
    write_refsim,
)
from resco.text_pipeline import Document, Sentence


def _doc(doc_id, token_lists):
    return Document(doc_id, tuple(Sentence(i, " ".join(t), tuple(t)) for i, t in enumerate(token_lists)))


def _store(rng, vocab, dim=3):
    return VectorStore(vocab, rng.normal(size=(len(vocab), dim)))


def test_identical_single_sentence_refutation():
    store = VectorStore(["a", "b", "c"], [[1, 0], [0, 1], [1, 1]])
    hoax = _doc("h", [["a", "c"], ["b"]])
    ref = _doc("r", [["c", "a"]])
    assert build_refsim(hoax, ref, store).scores[0] == pytest.approx(1.0)


def test_all_oov_hoax_sentence():
    store = VectorStore(["a"], [[1, 0]])
    rs = build_refsim(_doc("h", [["zz"], ["a"]]), _doc("r", [["a"]]), store)
    assert rs.scores == (0.0, pytest.approx(1.0))


def test_three_by_two_double_loop():
    rng = np.random.default_rng(0)
    vocab = [f"w{i}" for i in range(6)]
    store = _store(rng, vocab)
    table = dict(zip(vocab, store.vectors.tolist()))
    H = [["w0", "w1"], ["w2"], ["w3", "w4", "w0"]]
    R = [["w5", "w1"], ["w2", "w3"]]
    got = build_refsim(_doc("h", H), _doc("r", R), store)
    want = oracles.refsim([oracles.sentence_vec(t, table, 3) for t in H], [oracles.sentence_vec(t, table, 3) for t in R])
    assert np.allclose(got.scores, want, atol=1e-12)
    assert got.n == 3 and got.doc_id == "h"


def test_monotone_under_appending_matching_sentence():
    rng = np.random.default_rng(1)
    vocab = [f"w{i}" for i in range(8)]
    store = _store(rng, vocab)
    H = [["w0", "w1"], ["w2", "w7"]]
    R = [["w3"], ["w4", "w5"], ["w6"]]
    before = build_refsim(_doc("h", H), _doc("r", R), store).scores
    after = build_refsim(_doc("h", H), _doc("r", R + [H[1]]), store).scores
    assert after[1] >= before[1]


@given(st.permutations(range(4)))
def test_refutation_order_irrelevant(perm):
    rng = np.random.default_rng(2)
    vocab = [f"w{i}" for i in range(5)]
    store = _store(rng, vocab)
    H = [["w0"], ["w1", "w2"]]
    R = [["w3"], ["w4"], ["w0", "w4"], ["w2"]]
    a = build_refsim(_doc("h", H), _doc("r", R), store).scores
    b = build_refsim(_doc("h", H), _doc("r", [R[i] for i in perm]), store).scores
    assert np.allclose(a, b, atol=1e-14)


def test_truncate_examples():
    assert truncate_topk([0.5, 0.66, 0.63, 0.52], 2) == [0, 1, 1, 0]
    assert truncate_topk([0.1, 0.2, 0.3], 3) == [1, 1, 1]
    assert truncate_topk([0.4, 0.4, 0.4], 1) == [1, 0, 0]
    assert truncate_topk(RefSim("d", (0.2, 0.9)), 1) == [0, 1]


def test_truncate_range():
    with pytest.raises(ValueError):
        truncate_topk([0.1, 0.2], 0)
    with pytest.raises(ValueError):
        truncate_topk([0.1, 0.2], 3)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=20), st.data())
def test_truncate_exactly_rho_ones(scores, data):
    rho = data.draw(st.integers(1, len(scores)))
    labels = truncate_topk(scores, rho)
    assert sum(labels) == rho
    chosen = [s for s, l in zip(scores, labels) if l]
    rest = [s for s, l in zip(scores, labels) if not l]
    assert not rest or min(chosen) >= max(rest)


def test_refsim_round_trip(tmp_path):
    rs = RefSim("abc", (0.25, -0.125, 0.1 + 0.2))
    write_refsim(rs, tmp_path / "abc.json")
    assert read_refsim(tmp_path / "abc.json") == rs


def test_read_external_shape(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps({"scores": [1, 0.5], "source": "published"}))
    assert read_refsim(tmp_path / "x.json") == RefSim("x", (1.0, 0.5))


@pytest.mark.parametrize("body", ["not json", "[1, 2]", '{"scores": ["a"]}', '{"doc_id": "x"}'])
def test_read_rejects_bad_files(tmp_path, body):
    (tmp_path / "bad.json").write_text(body)
    with pytest.raises(FormatError):
        read_refsim(tmp_path / "bad.json")


def test_discover_pairs(tmp_path):
    for side, ids in {"hoax": ["a", "b", "c"], "refutation": ["b", "a", "z"]}.items():
        (tmp_path / side).mkdir()
        for i in ids:
            (tmp_path / side / f"{i}.txt").write_text("X.")
    matched, orphans = discover_pairs(tmp_path)
    assert matched == ["a", "b"]
    assert orphans == {"hoax": ["c"], "refutation": ["z"]}
    assert discover_pairs(tmp_path / "nothing") == ([], {"hoax": [], "refutation": []})
