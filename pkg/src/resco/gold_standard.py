"""Refutation-similarity gold standard built from (hoax, refutation) pairs.

Corpus layout::

    <root>/hoax/<id>.txt
    <root>/refutation/<id>.txt
    <root>/refsim/<id>.json      # written by build step, {"doc_id", "scores"}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from resco.embedding_store import VectorStore
from resco.errors import CorpusError, FormatError
from resco.features import cosine_matrix, sentence_vectors
from resco.text_pipeline import Document


@dataclass(frozen=True)
class RefSim:
    doc_id: str
    scores: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.scores)

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "scores": list(self.scores)}


def build_refsim(hoax: Document, refutation: Document, word_store: VectorStore) -> RefSim:
    """Score each hoax sentence by its mean cosine to the refutation's sentences.

    Both sides use the same averaged word-vector sentence encoder as the
    feature embedding, with zero vectors scoring 0.
    """
    if refutation.n < 1:
        raise CorpusError(f"refutation for {hoax.id!r} has no sentences")
    H = np.asarray([sv.v for sv in sentence_vectors(hoax, word_store)])
    R = np.asarray([sv.v for sv in sentence_vectors(refutation, word_store)])
    S = cosine_matrix(np.vstack([H, R]))[: len(H), len(H):]
    return RefSim(hoax.id, tuple(float(x) for x in S.mean(axis=1)))


def truncate_topk(refsim: RefSim | Sequence[float], rho: int) -> list[int]:
    """Binary labels marking the ``rho`` highest scores; ties favour lower indices."""
    scores = refsim.scores if isinstance(refsim, RefSim) else tuple(refsim)
    n = len(scores)
    if not 1 <= rho <= n:
        raise ValueError(f"rho must be in [1, {n}], got {rho}")
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    top = set(order[:rho])
    return [1 if i in top else 0 for i in range(n)]


def write_refsim(refsim: RefSim, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(refsim.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_refsim(path: str | os.PathLike) -> RefSim:
    """Read a refsim JSON file (ours or an externally published one in the same shape)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "scores" not in data:
        raise FormatError(f"{path}: expected an object with a 'scores' array")
    try:
        scores = tuple(float(x) for x in data["scores"])
    except (TypeError, ValueError):
        raise FormatError(f"{path}: 'scores' must be numeric") from None
    return RefSim(str(data.get("doc_id", Path(path).stem)), scores)


def discover_pairs(root: str | os.PathLike) -> tuple[list[str], dict[str, list[str]]]:
    """Matched ids and the orphans on each side, all sorted."""
    root = Path(root)
    hoax = {p.stem for p in (root / "hoax").glob("*.txt")} if (root / "hoax").is_dir() else set()
    refu = {p.stem for p in (root / "refutation").glob("*.txt")} if (root / "refutation").is_dir() else set()
    matched = sorted(hoax & refu)
    orphans = {"hoax": sorted(hoax - refu), "refutation": sorted(refu - hoax)}
    return matched, orphans
