"""Choosing the key-disinformation cluster and turning it into per-sentence outputs.

Cluster choice is euclidean (distance between a cluster centroid and the
document's feature-space centroid) while per-sentence scores are cosines to
the chosen centroid; the two metrics are deliberately kept as they are.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np

from resco.clustering import ClusteringResult
from resco.features import ReScoPoint, cosine, cosine_matrix, points_array

Mode = Literal["identification", "scoring"]
Method = Literal["resco-cc", "resco-coh", "resco-cen"]
METHODS: tuple[str, ...] = ("resco-cc", "resco-coh", "resco-cen")


@dataclass(frozen=True)
class SelectionOutput:
    doc_id: str
    mode: Mode
    method: Method
    r: tuple[float, ...]
    chosen_cluster: int | None
    seed: int | None
    k: int | None = None
    flags: dict = field(default_factory=dict)

    def support(self) -> list[int]:
        return [i for i, v in enumerate(self.r) if v != 0.0]

    def to_dict(self) -> dict:
        return asdict(self)


def _len_check(clustering: ClusteringResult, X: np.ndarray) -> None:
    if len(clustering.assignment) != len(X):
        raise ValueError(
            f"clustering covers {len(clustering.assignment)} points, got {len(X)}"
        )


def select_central_cluster(
    clustering: ClusteringResult,
    points: Sequence[ReScoPoint] | np.ndarray,
) -> int:
    """Cluster whose centroid is euclidean-closest to the mean of all points."""
    X = points_array(points)
    _len_check(clustering, X)
    center = X.mean(axis=0)
    dist = np.sqrt(((np.asarray(clustering.centroids) - center) ** 2).sum(axis=1))
    return _first_within(dist, dist.min())


TIE_TOL = 1e-12


def _first_within(values: np.ndarray, target: float) -> int:
    # equal-size k=2 splits put both centroids at the same distance from the mean;
    # rounding must not decide those ties
    tol = TIE_TOL * max(1.0, float(np.abs(values).max()))
    return int(np.flatnonzero(np.abs(values - target) <= tol)[0])


def cluster_cohesion(Y: np.ndarray) -> float:
    """Mean cosine over unordered member pairs; a singleton counts as 1.0."""
    m = len(Y)
    if m < 2:
        return 1.0
    S = cosine_matrix(Y)
    iu = np.triu_indices(m, k=1)
    return float(S[iu].mean())


def select_cohesive_by(clustering: ClusteringResult, space: np.ndarray) -> int:
    _len_check(clustering, space)
    scores = np.array([cluster_cohesion(space[clustering.members(c)]) for c in range(clustering.k)])
    return _first_within(scores, scores.max())


def _outputs(
    chosen: int,
    clustering: ClusteringResult,
    X: np.ndarray,
    mode: Mode,
    method: Method,
    doc_id: str,
) -> SelectionOutput:
    members = clustering.assignment == chosen
    flags: dict = {}
    if mode == "identification":
        r = tuple(1.0 if m else 0.0 for m in members)
    elif mode == "scoring":
        centroid = X[members].mean(axis=0)
        r_list = []
        zero = []
        for i, m in enumerate(members):
            if not m:
                r_list.append(0.0)
                continue
            if not np.any(X[i]):
                zero.append(i)
            r_list.append(cosine(X[i], centroid))
        r = tuple(r_list)
        if zero:
            flags["zero_points"] = zero
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return SelectionOutput(doc_id, mode, method, r, chosen, clustering.seed, clustering.k, flags)


def identify(
    clustering: ClusteringResult,
    points: Sequence[ReScoPoint] | np.ndarray,
    *,
    doc_id: str = "doc",
) -> SelectionOutput:
    """1 for members of the central cluster, 0 for everyone else."""
    X = points_array(points)
    return _outputs(select_central_cluster(clustering, X), clustering, X, "identification", "resco-cc", doc_id)


def score(
    clustering: ClusteringResult,
    points: Sequence[ReScoPoint] | np.ndarray,
    *,
    doc_id: str = "doc",
) -> SelectionOutput:
    """Cosine to the central cluster's centroid for members, exactly 0.0 otherwise."""
    X = points_array(points)
    return _outputs(select_central_cluster(clustering, X), clustering, X, "scoring", "resco-cc", doc_id)


def select_cohesive_cluster(
    clustering: ClusteringResult,
    points: Sequence[ReScoPoint] | np.ndarray,
    mode: Mode = "identification",
    *,
    sentence_vectors: np.ndarray | None = None,
    doc_id: str = "doc",
) -> SelectionOutput:
    """Ablation dropping centrality: take the cluster with the highest member cohesion.

    Cohesion is measured on the feature points unless ``sentence_vectors`` is
    given, in which case the members' sentence vectors are compared instead.
    Ties go to the lowest cluster id.
    """
    X = points_array(points)
    space = X if sentence_vectors is None else np.asarray(sentence_vectors, dtype=np.float64)
    chosen = select_cohesive_by(clustering, space)
    return _outputs(chosen, clustering, X, mode, "resco-coh", doc_id)


def rank_by_centroid(
    points: Sequence[ReScoPoint] | np.ndarray,
    mode: Mode = "scoring",
    *,
    k_bar: int | None = None,
    doc_id: str = "doc",
    seed: int | None = None,
) -> SelectionOutput:
    """Ablation dropping clustering: cosine of every point to the global centroid.

    In identification mode the top ``ceil(n / k_bar)`` sentences are marked,
    ties broken toward lower sentence index, so the selected set is about
    the size one cluster would be.
    """
    X = points_array(points)
    n = len(X)
    if n < 1:
        raise ValueError("need at least one point")
    center = X.mean(axis=0)
    scores = [cosine(x, center) for x in X]
    flags: dict = {}
    if mode == "scoring":
        r = tuple(scores)
    elif mode == "identification":
        if not k_bar or k_bar < 1:
            raise ValueError("identification mode needs the elbow-chosen k_bar >= 1")
        top = math.ceil(n / k_bar)
        order = sorted(range(n), key=lambda i: (-scores[i], i))
        chosen = set(order[:top])
        r = tuple(1.0 if i in chosen else 0.0 for i in range(n))
        flags["cut"] = top
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return SelectionOutput(doc_id, mode, "resco-cen", r, None, seed, k_bar, flags)
