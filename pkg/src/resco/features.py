"""Sentence vectors and the three-feature (relevance, smoothness, coherence) embedding.

Every similarity here is a cosine with the convention that any cosine
involving a zero vector is 0, which keeps the features defined for
sentences whose tokens are all out of vocabulary.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from resco.embedding_store import VectorStore
from resco.errors import DegenerateDocumentError
from resco.text_pipeline import Document, Sentence

logger = logging.getLogger(__name__)

CohFallback = Literal["zero", "doc-mean"]


@dataclass(frozen=True)
class SentenceVec:
    index: int
    v: np.ndarray
    oov_ratio: float


@dataclass(frozen=True)
class ReScoPoint:
    index: int
    rel: float
    smo: float
    coh: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.rel, self.smo, self.coh)


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    # prescale by the max-abs entry so squared norms cannot underflow or overflow
    peak = np.abs(vectors).max(axis=-1, keepdims=True)
    zero = peak == 0.0
    scaled = vectors / np.where(zero, 1.0, peak)
    norms = np.linalg.norm(scaled, axis=-1, keepdims=True)
    return np.where(zero, 0.0, scaled / np.where(zero, 1.0, norms))


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not x.any() or not y.any():
        return 0.0
    return float(np.clip(_unit_rows(x) @ _unit_rows(y), -1.0, 1.0))


def cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    """Pairwise cosines of the rows of ``vectors``; zero rows give 0 everywhere."""
    unit = _unit_rows(np.asarray(vectors, dtype=np.float64))
    return np.clip(unit @ unit.T, -1.0, 1.0)


def sentence_vector(sentence: Sentence, word_store: VectorStore) -> SentenceVec:
    """Unweighted mean of the in-vocabulary token vectors."""
    found = []
    for tok in sentence.tokens:
        vec = word_store.lookup(tok)
        if vec is not None:
            found.append(vec)
    dim = word_store.dimension
    if not found:
        return SentenceVec(sentence.index, np.zeros(dim), 1.0)
    v = np.mean(np.asarray(found, dtype=np.float64), axis=0)
    oov = 1.0 - len(found) / len(sentence.tokens)
    return SentenceVec(sentence.index, v, oov)


def _stack(doc_vectors: Sequence[SentenceVec] | np.ndarray) -> np.ndarray:
    if isinstance(doc_vectors, np.ndarray):
        return doc_vectors.astype(np.float64, copy=False)
    return np.asarray([sv.v for sv in doc_vectors], dtype=np.float64)


def _require_multi(n: int) -> None:
    if n < 2:
        raise DegenerateDocumentError("relevance and smoothness need at least two sentences")


def relevance(doc_vectors: Sequence[SentenceVec] | np.ndarray, i: int) -> float:
    """Mean cosine between sentence ``i`` and every other sentence."""
    V = _stack(doc_vectors)
    n = len(V)
    _require_multi(n)
    return sum(cosine(V[i], V[j]) for j in range(n) if j != i) / (n - 1)


def smoothness(doc_vectors: Sequence[SentenceVec] | np.ndarray, i: int) -> float:
    """Cosine with the neighbouring sentence(s); interior sentences average both sides."""
    V = _stack(doc_vectors)
    n = len(V)
    _require_multi(n)
    if i == 0:
        return cosine(V[0], V[1])
    if i == n - 1:
        return cosine(V[n - 2], V[n - 1])
    return 0.5 * (cosine(V[i - 1], V[i]) + cosine(V[i], V[i + 1]))


def _entity_matrix(entities: Iterable[str], entity_store: VectorStore) -> np.ndarray:
    rows = []
    for key in sorted(entities):
        vec = entity_store.lookup(key)
        if vec is None:
            logger.warning("entity %r not in the entity store; dropped", key)
            continue
        rows.append(vec)
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), entity_store.dimension)


def coherence_or_none(sentence: Sentence, entity_store: VectorStore) -> float | None:
    """Mean pairwise entity cosine, or ``None`` with fewer than two entities."""
    E = _entity_matrix(sentence.entities, entity_store)
    m = len(E)
    if m < 2:
        return None
    S = cosine_matrix(E)
    off = S.sum() - np.trace(S)
    return float(off / (m * (m - 1)))


def coherence(sentence: Sentence, entity_store: VectorStore, fallback: float = 0.0) -> float:
    value = coherence_or_none(sentence, entity_store)
    return fallback if value is None else value


def feature_matrix(
    vectors: np.ndarray,
    coh: np.ndarray,
    *,
    zscore: bool = False,
) -> np.ndarray:
    """Stack relevance, smoothness and the given coherence column into ``(n, 3)``."""
    V = np.asarray(vectors, dtype=np.float64)
    n = len(V)
    _require_multi(n)
    S = cosine_matrix(V)
    rel = (S.sum(axis=1) - np.diag(S)) / (n - 1)
    adj = np.diag(S, k=1)
    smo = np.empty(n)
    smo[0] = adj[0]
    smo[-1] = adj[-1]
    smo[1:-1] = 0.5 * (adj[:-1] + adj[1:])
    X = np.column_stack([rel, smo, np.asarray(coh, dtype=np.float64)])
    if zscore:
        X = X - X.mean(axis=0)
        sd = X.std(axis=0)
        X = X / np.where(sd == 0.0, 1.0, sd)
    return X


def coherence_column(doc: Document, entity_store: VectorStore, fallback: CohFallback = "zero") -> np.ndarray:
    values = [coherence_or_none(s, entity_store) for s in doc]
    measured = [v for v in values if v is not None]
    if fallback == "zero":
        fill = 0.0
    elif fallback == "doc-mean":
        fill = float(np.mean(measured)) if measured else 0.0
    else:
        raise ValueError(f"unknown coherence fallback {fallback!r}")
    return np.array([fill if v is None else v for v in values])


def sentence_vectors(doc: Document, word_store: VectorStore) -> list[SentenceVec]:
    return [sentence_vector(s, word_store) for s in doc]


def to_points(X: np.ndarray) -> list[ReScoPoint]:
    return [ReScoPoint(i, float(r), float(s), float(c)) for i, (r, s, c) in enumerate(X)]


def points_array(points: Sequence[ReScoPoint] | np.ndarray) -> np.ndarray:
    """``(n, 3)`` float array from points; arrays pass through as float64."""
    if isinstance(points, np.ndarray):
        return points.astype(np.float64, copy=False)
    return np.array([p.as_tuple() for p in points], dtype=np.float64).reshape(len(points), 3)


def embed_document(
    doc: Document,
    word_store: VectorStore,
    entity_store: VectorStore,
    *,
    coh_fallback: CohFallback = "zero",
    zscore: bool = False,
) -> list[ReScoPoint]:
    """One feature point per sentence, aligned with ``doc`` order.

    Raises:
        DegenerateDocumentError: the document has fewer than two sentences.
    """
    doc.require_multi()
    V = _stack(sentence_vectors(doc, word_store))
    X = feature_matrix(V, coherence_column(doc, entity_store, coh_fallback), zscore=zscore)
    return to_points(X)


def write_feature_dump(points: Sequence[ReScoPoint], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index\trel\tsmo\tcoh\n")
        for p in points:
            fh.write(f"{p.index}\t{p.rel!r}\t{p.smo!r}\t{p.coh!r}\n")
