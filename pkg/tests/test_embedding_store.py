import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resco.embedding_store import (
    VectorStore,
    load_binary,
    load_text,
    load_vectors,
    lookup,
    write_binary,
    write_text,
)
from resco.errors import EmptyStoreError, FormatError


def _raw_binary(path, header, records, newline=True):
    with open(path, "wb") as fh:
        fh.write(header)
        for key, vec in records:
            fh.write(key + b" " + struct.pack(f"<{len(vec)}f", *vec))
            if newline:
                fh.write(b"\n")


def test_minimal_binary(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"2 3\n", [(b"a", [1, 0, 0]), (b"b", [0, 1, 0])])
    store = load_binary(p)
    assert len(store) == 2 and store.dimension == 3
    np.testing.assert_array_equal(store.lookup("a"), [1, 0, 0])
    np.testing.assert_array_equal(store.lookup("b"), [0, 1, 0])


def test_binary_without_trailing_newlines(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"2 2\n", [(b"x", [0.5, -2]), (b"y", [3, 4])], newline=False)
    store = load_binary(p)
    np.testing.assert_array_equal(store.lookup("y"), [3, 4])


def test_binary_values_not_renormalized(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"1 2\n", [(b"big", [30.0, 40.0])])
    np.testing.assert_array_equal(load_binary(p).lookup("big"), [30.0, 40.0])


def test_truncated_payload(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"2 3\n", [(b"a", [1, 0, 0])])
    with pytest.raises(FormatError, match="truncated"):
        load_binary(p)


def test_truncated_inside_vector(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"1 3\n", [(b"a", [1, 0, 0])], newline=False)
    p.write_bytes(p.read_bytes()[:-2])
    with pytest.raises(FormatError, match="truncated"):
        load_binary(p)


@pytest.mark.parametrize("header", [b"two 3\n", b"2\n", b"2 3 4\n", b"2 0\n", b"\xff\xfe 3\n"])
def test_malformed_header(tmp_path, header):
    p = tmp_path / "v.bin"
    _raw_binary(p, header, [(b"a", [1, 0, 0]), (b"b", [0, 1, 0])])
    with pytest.raises(FormatError, match="header"):
        load_binary(p)


def test_trailing_bytes_rejected(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"1 2\n", [(b"a", [1, 0])])
    p.write_bytes(p.read_bytes() + b"junk")
    with pytest.raises(FormatError, match="unexpected bytes"):
        load_binary(p)


def test_duplicate_key_reports_position(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"3 1\n", [(b"a", [1]), (b"b", [2]), (b"a", [3])])
    with pytest.raises(FormatError) as info:
        load_binary(p)
    assert info.value.position == 2


def test_case_fold_collision_keeps_first(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"2 1\n", [(b"Apple", [1]), (b"apple", [2])])
    store = load_binary(p)
    assert len(store) == 1 and store.folded_collisions == 1
    np.testing.assert_array_equal(store.lookup("APPLE"), [1])


def test_binary_utf8_keys(tmp_path):
    p = tmp_path / "v.bin"
    _raw_binary(p, b"1 1\n", [("café".encode(), [1])])
    assert load_binary(p).lookup("Café") is not None


def test_round_trip_binary_text(tmp_path):
    rng = np.random.default_rng(5)
    items = {f"w{i}": rng.normal(size=4) for i in range(50)}
    b = tmp_path / "v.bin"
    write_binary(items, b)
    store = load_binary(b)
    t = tmp_path / "v.txt"
    write_text(store, t)
    again = load_text(t)
    assert again.allclose(store, atol=1e-6)
    assert store.allclose(VectorStore(list(items), np.array(list(items.values()))), atol=1e-6)


def test_round_trip_entity_store(tmp_path):
    t = tmp_path / "e.txt"
    t.write_text("2 2\nENTITY/New_York 0 1\nENTITY/Paris 1 0\n")
    store = load_text(t, kind="entity")
    b = tmp_path / "e.bin"
    write_binary(store, b)
    assert load_binary(b, kind="entity").allclose(store)


def test_text_kind_prefix_convention(tmp_path):
    t = tmp_path / "mixed.txt"
    t.write_text("apple 1 0\nENTITY/New_York 0 1\n")
    ent = load_text(t, kind="entity")
    assert list(ent.keys()) == ["new york"] and ent.kind == "entity"
    words = load_text(t, kind="word")
    assert list(words.keys()) == ["apple"]
    assert len(load_text(t, kind=None)) == 2


def test_text_ragged_line_reports_line(tmp_path):
    t = tmp_path / "r.txt"
    t.write_text("2 2\nbanana 0 1\napple 1\n")
    with pytest.raises(FormatError) as info:
        load_text(t)
    assert info.value.line == 3


def test_text_ragged_without_header(tmp_path):
    t = tmp_path / "r.txt"
    t.write_text("banana 0 1\napple 1\n")
    with pytest.raises(FormatError) as info:
        load_text(t)
    assert info.value.line == 2


def test_text_non_numeric(tmp_path):
    t = tmp_path / "n.txt"
    t.write_text("apple 1 x\n")
    with pytest.raises(FormatError, match="non-numeric") as info:
        load_text(t)
    assert info.value.line == 1


def test_text_header_count_mismatch(tmp_path):
    t = tmp_path / "c.txt"
    t.write_text("3 2\na 1 0\nb 0 1\n")
    with pytest.raises(FormatError, match="declares 3"):
        load_text(t)


def test_empty_file_fails_on_lookup_not_load(tmp_path):
    t = tmp_path / "empty.txt"
    t.write_text("")
    store = load_text(t)
    assert len(store) == 0
    with pytest.raises(EmptyStoreError):
        store.lookup("anything")


def test_lookup_case_folding_and_absence():
    store = VectorStore(["apple"], [[1.0, 2.0]])
    np.testing.assert_array_equal(lookup(store, "Apple"), [1.0, 2.0])
    assert store.lookup("pear") is None
    assert "APPLE" in store and "pear" not in store


def test_absent_distinguishable_from_zero():
    store = VectorStore(["zero"], [[0.0, 0.0]])
    assert store.lookup("zero") is not None
    assert store.lookup("other") is None


def test_case_sensitive_option():
    store = VectorStore(["Apple", "apple"], [[1.0], [2.0]], casefold=False)
    assert store.lookup("Apple")[0] == 1.0 and store.lookup("apple")[0] == 2.0


def test_store_is_immutable():
    store = VectorStore(["a"], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        store.vectors[0, 0] = 5.0
    with pytest.raises(ValueError):
        store.lookup("a")[0] = 5.0
    with pytest.raises(AttributeError):
        store._dimension = 3


def test_load_vectors_dispatch(tmp_path):
    write_binary({"a": [1.0]}, tmp_path / "v.bin")
    (tmp_path / "v.txt").write_text("a 1\n")
    assert load_vectors(tmp_path / "v.bin").allclose(load_vectors(tmp_path / "v.txt"))


def test_lookup_matches_linear_scan_on_large_store(tmp_path):
    rng = np.random.default_rng(0)
    n = 1_000_000
    keys = [f"k{i}" for i in range(n)]
    vecs = rng.normal(size=(n, 2)).astype(np.float32)
    p = tmp_path / "big.bin"
    with open(p, "wb") as fh:
        fh.write(f"{n} 2\n".encode())
        fh.write(b"".join(k.encode() + b" " + v.tobytes() + b"\n" for k, v in zip(keys, vecs)))
    store = load_binary(p)
    assert len(store) == n
    probes = [keys[i] for i in rng.integers(0, n, size=95)] + ["missing", "k", "K7", "k-1", "k1000000"]
    for probe in probes:
        folded = probe.casefold()
        expected = None
        for key, vec in zip(keys, vecs):
            if key == folded:
                expected = vec
                break
        got = store.lookup(probe)
        if expected is None:
            assert got is None, probe
        else:
            np.testing.assert_array_equal(got, expected)


@settings(max_examples=40, deadline=None)
@given(
    st.dictionaries(
        st.text(alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Cc", "Zl", "Zp")), min_size=1, max_size=8),
        st.lists(st.floats(-1e6, 1e6, width=32), min_size=3, max_size=3),
        min_size=1,
        max_size=20,
    )
)
def test_binary_text_agree(tmp_path_factory, items):
    d = tmp_path_factory.mktemp("rt")
    items = {k: v for k, v in items.items() if k.casefold() == k and not k.startswith("ENTITY/")}
    if not items:
        return
    write_binary(items, d / "v.bin")
    store = load_binary(d / "v.bin")
    write_text(store, d / "v.txt")
    assert load_text(d / "v.txt").allclose(store, atol=1e-6)
