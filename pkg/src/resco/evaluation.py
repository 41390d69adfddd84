"""Pearson and NDCG against the refsim gold standard, averaged over seeds and documents."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Mapping, Sequence

import numpy as np

from resco.gold_standard import truncate_topk
from resco.pipeline import DocumentFeatures, RunConfig, select

Metric = Literal["pearson", "ndcg"]


def correlation(x: Sequence[float], y: Sequence[float]) -> tuple[float, bool]:
    """Pearson's r and a flag that is True when either side has zero variance (r is then 0)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise ValueError("pearson needs at least two values")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        return 0.0, True
    return float(min(1.0, max(-1.0, (dx @ dy) / (sx * sy)))), False


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    return correlation(x, y)[0]


def ndcg(ranking_scores: Sequence[float], labels: Sequence[int]) -> float:
    """NDCG over the full list; equal scores are ordered by ascending index."""
    s = np.asarray(ranking_scores, dtype=np.float64)
    g = np.asarray(labels, dtype=np.float64)
    if s.shape != g.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {g.shape}")
    if not np.any(g):
        raise ValueError("ndcg needs at least one relevant label")
    order = np.argsort(-s, kind="stable")
    discount = 1.0 / np.log2(np.arange(2, len(s) + 2))
    dcg = float(g[order] @ discount)
    idcg = float(np.sort(g)[::-1] @ discount)
    return dcg / idcg


@dataclass
class EvalReport:
    method: str
    metric: str
    rho: int | None
    per_doc: dict[str, float]
    mean: float
    stddev: float
    iterations: int
    seeds: list[int]
    per_doc_variance: dict[str, float] = field(default_factory=dict)
    degenerate: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)
    rho_clamped: dict[str, int] = field(default_factory=dict)
    mode: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def write_json(self, path: str | os.PathLike, extra: Mapping | None = None) -> None:
        data = self.to_dict()
        if extra:
            data.update(extra)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["doc_id", "method", "metric", "rho", "value"])
            for doc_id, v in self.per_doc.items():
                w.writerow([doc_id, self.method, self.metric, "" if self.rho is None else self.rho, repr(v)])


@dataclass
class CorpusItem:
    features: DocumentFeatures
    refsim: tuple[float, ...]

    @property
    def doc_id(self) -> str:
        return self.features.doc_id


def metric_value(r: Sequence[float], refsim: Sequence[float], metric: str, rho: int | None) -> tuple[float, bool, int | None]:
    """One document's metric value, its degenerate flag and the rho actually used."""
    if len(r) != len(refsim):
        raise ValueError(f"output has {len(r)} sentences, gold standard {len(refsim)}")
    if metric == "pearson":
        value, degenerate = correlation(r, refsim)
        return value, degenerate, None
    if metric == "ndcg":
        if rho is None:
            raise ValueError("ndcg needs rho")
        used = min(rho, len(refsim))
        return ndcg(r, truncate_topk(refsim, used)), False, used
    raise ValueError(f"unknown metric {metric!r}")


def _mean(values: Sequence[float]) -> float:
    # shifted by the first value so repeated identical values average back exactly
    v = np.asarray(values, dtype=np.float64)
    return float(v[0] + np.mean(v - v[0]))


def _aggregate(
    method: str,
    metric: str,
    rho: int | None,
    values: dict[str, list[float]],
    degenerate: dict[str, int],
    skipped: dict[str, str],
    clamped: dict[str, int],
    seeds: list[int],
    mode: str | None,
) -> EvalReport:
    per_doc = {d: _mean(v) for d, v in values.items()}
    var = {d: float(np.var(v)) for d, v in values.items()}
    arr = np.array(list(per_doc.values()))
    return EvalReport(
        method=method,
        metric=metric,
        rho=rho,
        per_doc=per_doc,
        mean=float(arr.mean()) if len(arr) else float("nan"),
        stddev=float(arr.std()) if len(arr) else float("nan"),
        iterations=len(seeds),
        seeds=seeds,
        per_doc_variance=var,
        degenerate={d: c for d, c in degenerate.items() if c},
        skipped=skipped,
        rho_clamped=clamped,
        mode=mode,
    )


def evaluate_scores(
    scores: Mapping[str, Sequence[float]],
    refsims: Mapping[str, Sequence[float]],
    metric: Metric,
    rho: int | None = None,
    *,
    method: str = "external",
) -> EvalReport:
    """Evaluate precomputed per-document scores (e.g. an external system's output)."""
    values, degenerate, skipped, clamped = {}, {}, {}, {}
    for doc_id in sorted(scores):
        if doc_id not in refsims:
            skipped[doc_id] = "no gold standard"
            continue
        v, deg, used = metric_value(scores[doc_id], refsims[doc_id], metric, rho)
        values[doc_id] = [v]
        degenerate[doc_id] = int(deg)
        if used is not None and used != rho:
            clamped[doc_id] = used
    return _aggregate(method, metric, rho, values, degenerate, skipped, clamped, [], None)


def metric_mode(metric: str, config: RunConfig) -> str:
    if metric == "ndcg" or config.pearson_scored:
        return "scoring"
    return "identification"


def _eval_item(args) -> tuple[str, list[float], int, int | None]:
    item, method, mode, metric, rho, seeds, config = args
    values, degenerate, used = [], 0, None
    for seed in seeds:
        sel = select(item.features, config, seed, method=method, mode=mode).selection
        v, deg, used = metric_value(sel.r, item.refsim, metric, rho)
        values.append(v)
        degenerate += int(deg)
    return item.doc_id, values, degenerate, used


def evaluate_corpus(
    corpus: Iterable[CorpusItem],
    method: str,
    metric: Metric,
    rho: int | None = None,
    iterations: int = 100,
    base_seed: int = 0,
    config: RunConfig = RunConfig(),
    *,
    mode: str | None = None,
    workers: int = 1,
) -> EvalReport:
    """Run ``method`` on every document for ``iterations`` seeds and aggregate.

    Iteration ``t`` uses seed ``base_seed + t``. Per-document values are first
    averaged over iterations; the report's mean and (population) standard
    deviation are then taken across documents. Single-sentence documents are
    listed under ``skipped``. When a document is shorter than ``rho`` the
    gold cut is clamped to its length and recorded in ``rho_clamped``.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    mode = mode or metric_mode(metric, config)
    seeds = [base_seed + t for t in range(iterations)]
    items = list(corpus)
    skipped = {}
    jobs = []
    for item in items:
        if item.features.n < 2:
            skipped[item.doc_id] = "single-sentence document"
            continue
        if len(item.refsim) != item.features.n:
            skipped[item.doc_id] = f"gold standard has {len(item.refsim)} scores for {item.features.n} sentences"
            continue
        jobs.append((item, method, mode, metric, rho, seeds, config))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_item, jobs))
    else:
        results = [_eval_item(job) for job in jobs]

    values, degenerate, clamped = {}, {}, {}
    for doc_id, vals, deg, used in sorted(results, key=lambda t: t[0]):
        values[doc_id] = vals
        degenerate[doc_id] = deg
        if used is not None and used != rho:
            clamped[doc_id] = used
    return _aggregate(method, metric, rho, values, degenerate, skipped, clamped, seeds, mode)
