"""Read-only stores of pre-trained word or entity vectors.

Two on-disk layouts are understood:

* the word2vec binary layout: an ASCII header ``"<vocab> <dim>\\n"`` followed
  by ``vocab`` records, each a token terminated by a single space, ``dim``
  little-endian float32 values and an optional ``"\\n"``;
* the whitespace-delimited text layout: an optional ``"<count> <dim>"`` header
  and one ``"key v1 ... vd"`` line per entry.

Entity vectors exported from Wikipedia2Vec share the files with words and are
distinguished by an ``ENTITY/`` key prefix, with underscores standing in for
spaces (``ENTITY/New_York``).
"""

from __future__ import annotations

import logging
import os
from types import MappingProxyType
from typing import Iterable, Iterator, Literal, Mapping, Sequence

import numpy as np

from resco.errors import EmptyStoreError, FormatError

logger = logging.getLogger(__name__)

Kind = Literal["word", "entity"]

ENTITY_PREFIX = "ENTITY/"

# rows copied per batch when gathering float payloads out of a binary file
_GATHER_ROWS = 8192


def normalize_key(key: str, casefold: bool = True) -> str:
    return key.casefold() if casefold else key


class VectorStore:
    """Immutable mapping from string keys to fixed-dimension vectors.

    Keys are case-folded on the way in and on lookup (``casefold=True``).
    When two raw keys fold to the same string the first one wins, which for
    frequency-sorted pre-trained files keeps the more common spelling;
    the number of dropped keys is available as :attr:`folded_collisions`.
    Exact duplicate raw keys are a :class:`FormatError`.

    Lookup of a missing key returns ``None`` rather than a zero vector, so
    callers can tell out-of-vocabulary tokens apart from genuine zeros.
    """

    __slots__ = ("_index", "_vectors", "_dimension", "_kind", "_casefold", "_collisions", "_source")

    def __init__(
        self,
        keys: Sequence[str],
        vectors: np.ndarray | Sequence[Sequence[float]],
        *,
        kind: Kind = "word",
        casefold: bool = True,
        dimension: int | None = None,
        source: str | None = None,
    ):
        matrix = np.array(vectors, dtype=np.float64 if not isinstance(vectors, np.ndarray) else None)
        if matrix.size == 0:
            matrix = matrix.reshape(0, dimension or 0)
        if matrix.ndim != 2:
            raise FormatError(f"vectors must form a 2-D array, got shape {matrix.shape}")
        if len(keys) != matrix.shape[0]:
            raise FormatError(f"{len(keys)} keys for {matrix.shape[0]} vectors")
        if dimension is not None and matrix.shape[0] and matrix.shape[1] != dimension:
            raise FormatError(f"declared dimension {dimension}, vectors have {matrix.shape[1]}")

        index: dict[str, int] = {}
        raw_seen: set[str] = set()
        keep: list[int] = []
        collisions = 0
        for pos, raw in enumerate(keys):
            if raw in raw_seen:
                raise FormatError(f"duplicate key {raw!r}", position=pos)
            raw_seen.add(raw)
            key = normalize_key(raw, casefold)
            if key in index:
                collisions += 1
                continue
            index[key] = len(keep)
            keep.append(pos)
        if collisions:
            logger.info("%d keys collapsed by case-folding (first occurrence kept)", collisions)
            matrix = matrix[keep]

        matrix = np.ascontiguousarray(matrix)
        matrix.setflags(write=False)
        self._index = MappingProxyType(index)
        self._vectors = matrix
        self._dimension = int(matrix.shape[1]) if matrix.shape[0] else int(dimension or 0)
        self._kind = kind
        self._casefold = casefold
        self._collisions = collisions
        self._source = source

    def __setattr__(self, name, value):
        if hasattr(self, "_source"):
            raise AttributeError("VectorStore is immutable")
        object.__setattr__(self, name, value)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def kind(self) -> Kind:
        return self._kind

    @property
    def casefold(self) -> bool:
        return self._casefold

    @property
    def folded_collisions(self) -> int:
        return self._collisions

    @property
    def source(self) -> str | None:
        return self._source

    @property
    def vectors(self) -> np.ndarray:
        """Read-only ``(len(store), dimension)`` matrix in key order."""
        return self._vectors

    def keys(self) -> Iterator[str]:
        return iter(self._index)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for key, row in self._index.items():
            yield key, self._vectors[row]

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, key: object) -> bool:
        return isinstance(key, str) and normalize_key(key, self._casefold) in self._index

    def __repr__(self) -> str:
        return f"VectorStore(kind={self._kind!r}, size={len(self)}, dimension={self._dimension})"

    def lookup(self, key: str) -> np.ndarray | None:
        """Return the stored vector for ``key`` or ``None`` when absent.

        Raises:
            EmptyStoreError: the store holds no vectors at all.
        """
        if not self._index:
            raise EmptyStoreError(f"lookup of {key!r} in an empty {self._kind} store")
        row = self._index.get(normalize_key(key, self._casefold))
        return None if row is None else self._vectors[row]

    get = lookup

    def allclose(self, other: VectorStore, atol: float = 1e-6) -> bool:
        if self._dimension != other._dimension or set(self._index) != set(other._index):
            return False
        for key, row in self._index.items():
            if not np.allclose(self._vectors[row], other._vectors[other._index[key]], rtol=0.0, atol=atol):
                return False
        return True

    def metadata(self) -> dict:
        return {
            "kind": self._kind,
            "size": len(self),
            "dimension": self._dimension,
            "source": self._source,
            "folded_collisions": self._collisions,
        }


def lookup(store: VectorStore, key: str) -> np.ndarray | None:
    return store.lookup(key)


def _select_kind(keys: list[str], kind: Kind | None) -> tuple[list[str], list[int]]:
    """Apply the ENTITY/ prefix convention; returns kept keys and their rows."""
    if kind is None:
        return keys, list(range(len(keys)))
    out, rows = [], []
    for pos, key in enumerate(keys):
        is_entity = key.startswith(ENTITY_PREFIX)
        if kind == "entity" and is_entity:
            out.append(key[len(ENTITY_PREFIX):].replace("_", " "))
            rows.append(pos)
        elif kind == "word" and not is_entity:
            out.append(key)
            rows.append(pos)
    return out, rows


def _parse_header(line: bytes | str) -> tuple[int, int] | None:
    fields = line.split()
    if len(fields) != 2:
        return None
    try:
        count, dim = int(fields[0]), int(fields[1])
    except ValueError:
        return None
    if count < 0 or dim <= 0:
        return None
    return count, dim


def load_binary(
    path: str | os.PathLike,
    *,
    kind: Kind | None = "word",
    casefold: bool = True,
) -> VectorStore:
    """Parse a word2vec binary file.

    Every byte of the file must be consumed by the header and the declared
    number of records. Vectors keep their raw values.

    Args:
        path: file to read.
        kind: ``"word"`` drops ``ENTITY/`` keys, ``"entity"`` keeps only
            them (prefix stripped, underscores to spaces), ``None`` keeps all.
        casefold: fold keys to lower case.

    Raises:
        FormatError: malformed header, truncated payload, bad token bytes,
            duplicate key or trailing garbage.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line", line=1)
    try:
        header = _parse_header(data[:nl].decode("ascii"))
    except UnicodeDecodeError:
        header = None
    if header is None:
        raise FormatError(f"malformed header {data[:nl][:40]!r}", line=1)
    vocab, dim = header
    width = 4 * dim

    keys: list[str] = []
    offsets = np.empty(vocab, dtype=np.int64)
    pos = nl + 1
    end = len(data)
    for rec in range(vocab):
        space = data.find(b" ", pos)
        if space < 0:
            raise FormatError(f"truncated payload: {rec} of {vocab} records present", position=rec)
        raw = data[pos:space]
        if not raw:
            raise FormatError("empty token", position=rec)
        try:
            keys.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"token is not valid UTF-8: {exc}", position=rec) from None
        offsets[rec] = space + 1
        pos = space + 1 + width
        if pos > end:
            raise FormatError(
                f"truncated payload: record needs {width} bytes, {end - space - 1} left", position=rec
            )
        if pos < end and data[pos] == 0x0A:
            pos += 1
    if pos != end:
        raise FormatError(f"{end - pos} unexpected bytes after the last record", position=vocab)

    buf = np.frombuffer(data, dtype=np.uint8)
    matrix = np.empty((vocab, dim), dtype=np.float32)
    cols = np.arange(width, dtype=np.int64)
    for start in range(0, vocab, _GATHER_ROWS):
        block = offsets[start:start + _GATHER_ROWS]
        raw = buf[block[:, None] + cols]
        matrix[start:start + len(block)] = raw.view("<f4")

    kept, rows = _select_kind(keys, kind)
    if len(rows) != vocab:
        matrix = matrix[rows]
    return VectorStore(
        kept, matrix, kind=kind or "word", casefold=casefold, dimension=dim, source=os.fspath(path)
    )


def load_text(
    path: str | os.PathLike,
    *,
    kind: Kind | None = "word",
    casefold: bool = True,
    encoding: str = "utf-8",
) -> VectorStore:
    """Parse a whitespace-delimited text vector file.

    The first line is treated as a ``count dim`` header when it holds exactly
    two non-negative integers; without a header the dimension is taken from
    the first data line. An empty file yields an empty store (lookups on it
    raise :class:`EmptyStoreError`).

    Raises:
        FormatError: ragged line, non-numeric component, or a header count
            that disagrees with the number of data lines.
    """
    keys: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    declared: int | None = None
    with open(path, encoding=encoding) as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if dim is None and not keys and declared is None:
                header = _parse_header(line)
                if header is not None:
                    declared, dim = header
                    continue
            if dim is None:
                dim = len(fields) - 1
                if dim <= 0:
                    raise FormatError("data line has no vector components", line=lineno)
            if len(fields) != dim + 1:
                raise FormatError(
                    f"expected {dim} components, found {len(fields) - 1}", line=lineno
                )
            try:
                rows.append([float(x) for x in fields[1:]])
            except ValueError:
                raise FormatError("non-numeric vector component", line=lineno) from None
            keys.append(fields[0])
    if declared is not None and declared != len(keys):
        raise FormatError(f"header declares {declared} entries, file has {len(keys)}")

    kept, sel = _select_kind(keys, kind)
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim or 0)[sel]
    return VectorStore(
        kept, matrix, kind=kind or "word", casefold=casefold, dimension=dim, source=os.fspath(path)
    )


def load_vectors(path: str | os.PathLike, *, kind: Kind = "word", casefold: bool = True) -> VectorStore:
    """Load ``path`` as binary when it ends in ``.bin``, as text otherwise."""
    if os.fspath(path).endswith(".bin"):
        return load_binary(path, kind=kind, casefold=casefold)
    return load_text(path, kind=kind, casefold=casefold)


def _disk_keys(store: VectorStore) -> Iterable[str]:
    for key in store.keys():
        yield ENTITY_PREFIX + key.replace(" ", "_") if store.kind == "entity" else key


def write_text(store: VectorStore, path: str | os.PathLike, *, header: bool = True) -> None:
    """Write ``store`` in the text layout; values are written exactly (shortest repr)."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(store)} {store.dimension}\n")
        for key, row in zip(_disk_keys(store), store.vectors):
            fh.write(key + " " + " ".join(repr(float(x)) for x in row) + "\n")


def write_binary(
    items: Mapping[str, Sequence[float]] | VectorStore,
    path: str | os.PathLike,
    *,
    dimension: int | None = None,
    trailing_newline: bool = True,
) -> None:
    """Write vectors in the word2vec binary layout (float32, little-endian)."""
    if isinstance(items, VectorStore):
        pairs = list(zip(_disk_keys(items), items.vectors))
        dimension = items.dimension
    else:
        pairs = list(items.items())
        if dimension is None:
            dimension = len(pairs[0][1]) if pairs else 1
    with open(path, "wb") as fh:
        fh.write(f"{len(pairs)} {dimension}\n".encode("ascii"))
        for key, vec in pairs:
            arr = np.asarray(vec, dtype="<f4")
            if arr.shape != (dimension,):
                raise FormatError(f"vector for {key!r} has shape {arr.shape}, expected ({dimension},)")
            fh.write(key.encode("utf-8") + b" " + arr.tobytes())
            if trailing_newline:
                fh.write(b"\n")
