"""End-to-end composition: document -> feature points -> clusters -> per-sentence outputs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from resco import __version__
from resco.clustering import ElbowSweep, elbow_sweep
from resco.embedding_store import VectorStore, load_vectors
from resco.errors import ResCoError
from resco.features import coherence_column, feature_matrix, sentence_vectors
from resco.selector import (
    METHODS,
    SelectionOutput,
    identify,
    rank_by_centroid,
    score,
    select_cohesive_cluster,
)
from resco.text_pipeline import DEFAULT_MAX_SPAN, Document, attach_entities

logger = logging.getLogger(__name__)

ENV_WORD_VECTORS = "RESCO_WORD_VECTORS"
ENV_ENTITY_VECTORS = "RESCO_ENTITY_VECTORS"


class ConfigError(ResCoError, ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    word_vectors: str | None = None
    entity_vectors: str | None = None
    segmentation: str = "auto"
    k_min: int = 2
    k_max: int | None = None
    k_cap: int = 10
    restarts: int = 20
    tol: float = 1e-6
    max_iters: int = 100
    seed: int = 0
    method: str = "resco-cc"
    mode: str = "identification"
    zscore: bool = False
    coh_fallback: str = "zero"
    coh_space: str = "resco"
    max_span: int = DEFAULT_MAX_SPAN
    pearson_scored: bool = False

    def __post_init__(self):
        if self.segmentation not in ("auto", "pre-segmented"):
            raise ConfigError(f"segmentation must be auto or pre-segmented, got {self.segmentation!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.mode not in ("identification", "scoring"):
            raise ConfigError(f"mode must be identification or scoring, got {self.mode!r}")
        if self.coh_fallback not in ("zero", "doc-mean"):
            raise ConfigError(f"coh_fallback must be zero or doc-mean, got {self.coh_fallback!r}")
        if self.coh_space not in ("resco", "sentence"):
            raise ConfigError(f"coh_space must be resco or sentence, got {self.coh_space!r}")
        if self.k_min < 1 or self.k_cap < 1 or self.restarts < 1 or self.max_iters < 1 or self.max_span < 1:
            raise ConfigError("k_min, k_cap, restarts, max_iters and max_span must be positive")
        if self.k_max is not None and self.k_max < self.k_min:
            raise ConfigError(f"k_max={self.k_max} is below k_min={self.k_min}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> RunConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def with_env_defaults(self) -> RunConfig:
        return self.replace(
            word_vectors=self.word_vectors or os.environ.get(ENV_WORD_VECTORS),
            entity_vectors=self.entity_vectors or os.environ.get(ENV_ENTITY_VECTORS),
        )

    def load_stores(self) -> tuple[VectorStore, VectorStore]:
        if not self.word_vectors or not self.entity_vectors:
            raise ConfigError(
                f"word and entity vector files are required (flags or {ENV_WORD_VECTORS}/{ENV_ENTITY_VECTORS})"
            )
        return load_vectors(self.word_vectors, kind="word"), load_vectors(self.entity_vectors, kind="entity")


@dataclass
class DocumentFeatures:
    """Seed-independent part of the pipeline for one document."""

    doc_id: str
    X: np.ndarray
    vectors: np.ndarray
    oov: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.X)


@dataclass
class PipelineResult:
    selection: SelectionOutput
    features: DocumentFeatures
    sweep: ElbowSweep | None
    degenerate: bool = False


def featurize(
    doc: Document,
    word_store: VectorStore,
    entity_store: VectorStore,
    config: RunConfig = RunConfig(),
    *,
    detect: bool = True,
) -> DocumentFeatures:
    """Sentence vectors and feature points; a one-sentence document gets no points.

    With ``detect`` the entity mentions are (re)computed by gazetteer matching;
    pass ``detect=False`` to keep the entity sets already on ``doc``.
    """
    if detect:
        doc = attach_entities(doc, entity_store, config.max_span)
    svs = sentence_vectors(doc, word_store)
    V = np.asarray([sv.v for sv in svs], dtype=np.float64)
    oov = [sv.oov_ratio for sv in svs]
    if doc.n < 2:
        return DocumentFeatures(doc.id, np.zeros((doc.n, 3)), V, oov)
    coh = coherence_column(doc, entity_store, config.coh_fallback)  # type: ignore[arg-type]
    return DocumentFeatures(doc.id, feature_matrix(V, coh, zscore=config.zscore), V, oov)


def _sweep(X: np.ndarray, config: RunConfig, seed: int) -> ElbowSweep:
    return elbow_sweep(
        X,
        config.k_min,
        config.k_max,
        seed,
        restarts=config.restarts,
        cap=config.k_cap,
        max_iters=config.max_iters,
        tol=config.tol,
    )


def select(
    features: DocumentFeatures,
    config: RunConfig = RunConfig(),
    seed: int | None = None,
    *,
    method: str | None = None,
    mode: str | None = None,
) -> PipelineResult:
    """Cluster the feature points with ``seed`` and apply the selection method.

    One-sentence documents short-circuit to ``r = [1]`` flagged degenerate.
    The centroid ablation takes its cut size from an elbow sweep run with the
    configured base seed, so its output never depends on ``seed``.
    """
    seed = config.seed if seed is None else seed
    method = method or config.method
    mode = mode or config.mode
    X = features.X
    if features.n < 2:
        sel = SelectionOutput(features.doc_id, mode, method, (1.0,) * features.n, None, seed, 1,  # type: ignore[arg-type]
                              {"degenerate": "single-sentence document"})
        return PipelineResult(sel, features, None, degenerate=True)

    if method == "resco-cen":
        sweep = _sweep(X, config, config.seed) if mode == "identification" else None
        sel = rank_by_centroid(X, mode, k_bar=sweep.k if sweep else None, doc_id=features.doc_id, seed=seed)  # type: ignore[arg-type]
        return PipelineResult(sel, features, sweep)

    sweep = _sweep(X, config, seed)
    clustering = sweep.best
    if method == "resco-cc":
        fn = identify if mode == "identification" else score
        sel = fn(clustering, X, doc_id=features.doc_id)
    else:
        vecs = features.vectors if config.coh_space == "sentence" else None
        sel = select_cohesive_cluster(clustering, X, mode, sentence_vectors=vecs, doc_id=features.doc_id)  # type: ignore[arg-type]
    if len(np.unique(X, axis=0)) == 1:
        sel.flags["identical_points"] = True
    return PipelineResult(sel, features, sweep)


def run_document(
    doc: Document,
    word_store: VectorStore,
    entity_store: VectorStore,
    config: RunConfig = RunConfig(),
    seed: int | None = None,
    *,
    detect: bool = True,
) -> PipelineResult:
    return select(featurize(doc, word_store, entity_store, config, detect=detect), config, seed)


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def selection_record(
    result: PipelineResult,
    doc: Document,
    config: RunConfig,
    stores: Sequence[VectorStore] = (),
) -> dict[str, Any]:
    """JSON-ready record for one document; embeds the config and package version."""
    sel = result.selection
    X = result.features.X
    sentences = []
    for s, r_i in zip(doc, sel.r):
        entry = {"index": s.index, "sha256": text_hash(s.text), "r": r_i}
        if not result.degenerate:
            rel, smo, coh = (float(v) for v in X[s.index])
            entry.update(rel=rel, smo=smo, coh=coh)
        sentences.append(entry)
    record = {
        "version": __version__,
        "config": config.to_dict(),
        "doc_id": sel.doc_id,
        "method": sel.method,
        "mode": sel.mode,
        "seed": sel.seed,
        "K": sel.k,
        "chosen_cluster": sel.chosen_cluster,
        "flags": sel.flags,
        "stores": [s.metadata() for s in stores],
        "sentences": sentences,
    }
    if result.sweep is not None:
        record["elbow"] = [{"k": k, "inertia": i} for k, i in zip(result.sweep.ks, result.sweep.inertias)]
    return record


def dumps(record: dict[str, Any]) -> str:
    return json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def scores_from_record(record: dict[str, Any]) -> list[float]:
    """Per-sentence ``r`` values from a selection record, in sentence order."""
    sentences = sorted(record["sentences"], key=lambda e: e["index"])
    return [float(e["r"]) for e in sentences]
