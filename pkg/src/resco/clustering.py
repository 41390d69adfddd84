"""Seeded K-Means with k-means++ initialisation and elbow selection of K.

All work happens on the points sorted lexicographically by value (index as
the final key), so the result depends only on the multiset of points and
the seed, never on input order. Each restart draws its k uniforms from its
own stream ``SeedSequence(seed, spawn_key=(k, restart))``; the Lloyd loop
itself is a compiled kernel with no randomness of its own.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from resco.features import ReScoPoint, points_array

DEFAULT_K_CAP = 10
DEFAULT_RESTARTS = 20
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    k: int
    assignment: np.ndarray
    centroids: np.ndarray
    inertia: float
    seed: int
    restart: int = 0
    n_iter: int = 0
    trace: tuple[float, ...] = ()

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def identical(self, other: ClusteringResult) -> bool:
        return (
            self.k == other.k
            and self.seed == other.seed
            and self.restart == other.restart
            and self.inertia == other.inertia
            and np.array_equal(self.assignment, other.assignment)
            and np.array_equal(self.centroids, other.centroids)
        )


def restart_rng(seed: int, k: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k, restart)))


def distinct_count(X: np.ndarray) -> int:
    return int(len(np.unique(X, axis=0))) if len(X) else 0


def _sort_order(X: np.ndarray) -> np.ndarray:
    # lexsort: last key is primary and the sort is stable, so index breaks ties
    return np.lexsort(tuple(X[:, c] for c in reversed(range(X.shape[1]))))


@numba.njit(cache=True)
def _sq(X, i, C, j):
    s = 0.0
    for c in range(X.shape[1]):
        t = X[i, c] - C[j, c]
        s += t * t
    return s


@numba.njit(cache=True)
def _lloyd(X, k, draws, max_iters, tol):
    """k-means++ seeding from ``draws`` then Lloyd updates with empty-cluster repair."""
    n, d = X.shape
    C = np.empty((k, d))
    D2 = np.empty(n)
    first = min(int(draws[0] * n), n - 1)
    C[0] = X[first]
    for i in range(n):
        D2[i] = _sq(X, i, C, 0)
    for j in range(1, k):
        total = 0.0
        for i in range(n):
            total += D2[i]
        target = draws[j] * total
        cum = 0.0
        pick = n - 1
        for i in range(n):
            cum += D2[i]
            if cum > target:
                pick = i
                break
        C[j] = X[pick]
        for i in range(n):
            dist = _sq(X, i, C, j)
            if dist < D2[i]:
                D2[i] = dist

    assign = np.zeros(n, dtype=np.int64)
    own = np.empty(n)
    counts = np.zeros(k, dtype=np.int64)
    newC = np.empty((k, d))
    trace = np.empty(max_iters)
    n_iter = 0
    for it in range(max_iters):
        counts[:] = 0
        for i in range(n):
            best = 0
            bd = _sq(X, i, C, 0)
            for j in range(1, k):
                dist = _sq(X, i, C, j)
                if dist < bd:
                    bd = dist
                    best = j
            assign[i] = best
            own[i] = bd
            counts[best] += 1
        for j in range(k):
            if counts[j] == 0:
                far = -1
                fd = -1.0
                for i in range(n):
                    if counts[assign[i]] > 1 and own[i] > fd:
                        fd = own[i]
                        far = i
                counts[assign[far]] -= 1
                assign[far] = j
                counts[j] = 1
                own[far] = 0.0
        newC[:] = 0.0
        for i in range(n):
            for c in range(d):
                newC[assign[i], c] += X[i, c]
        for j in range(k):
            for c in range(d):
                newC[j, c] /= counts[j]
        cost = 0.0
        for i in range(n):
            cost += _sq(X, i, newC, assign[i])
        shift = 0.0
        for j in range(k):
            m = 0.0
            for c in range(d):
                t = newC[j, c] - C[j, c]
                m += t * t
            if m > shift:
                shift = m
        C[:] = newC
        trace[it] = cost
        n_iter = it + 1
        if math.sqrt(shift) < tol:
            break
    return assign, C, trace[:n_iter].copy(), n_iter


def _run(
    points: Sequence[ReScoPoint] | np.ndarray,
    jobs: Sequence[tuple[int, int]],
    seed: int,
    max_iters: int,
    tol: float,
) -> list[ClusteringResult]:
    """Run every ``(k, restart)`` job; results come back in job order."""
    X = points_array(points)
    n = len(X)
    if n == 0:
        raise ValueError("cannot cluster an empty point set")
    d = distinct_count(X)
    order = _sort_order(X)
    Xs = np.ascontiguousarray(X[order])
    results = []
    for k, r in jobs:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if k > d:
            raise ValueError(f"k={k} exceeds the {d} distinct points")
        draws = restart_rng(seed, k, r).random(k)
        assign_s, centroids, trace, n_iter = _lloyd(Xs, k, draws, max_iters, tol)
        assignment = np.empty(n, dtype=np.int64)
        assignment[order] = assign_s
        assignment.setflags(write=False)
        centroids.setflags(write=False)
        results.append(
            ClusteringResult(
                k=k,
                assignment=assignment,
                centroids=centroids,
                inertia=float(trace[-1]),
                seed=seed,
                restart=int(r),
                n_iter=int(n_iter),
                trace=tuple(float(t) for t in trace),
            )
        )
    return results


def _best(results: Sequence[ClusteringResult]) -> ClusteringResult:
    return min(results, key=lambda r: (r.inertia, r.restart))


def kmeans(
    points: Sequence[ReScoPoint] | np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    *,
    restart: int = 0,
) -> ClusteringResult:
    """Single Lloyd run from k-means++ seeding.

    Iterates until no centroid moves by ``tol`` or more (euclidean) or
    ``max_iters`` updates have been made. Clusters that go empty are refilled
    with the point farthest from its centroid.

    Raises:
        ValueError: empty input, or ``k`` larger than the number of distinct points.
    """
    return _run(points, [(k, restart)], seed, max_iters, tol)[0]


def best_kmeans(
    points: Sequence[ReScoPoint] | np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> ClusteringResult:
    """Lowest-inertia result over ``restarts`` runs (ties go to the lower restart)."""
    return _best(_run(points, [(k, r) for r in range(restarts)], seed, max_iters, tol))


def knee(ks: Sequence[int], inertias: Sequence[float]) -> int:
    """K whose ``(k, inertia)`` point lies farthest from the end-to-end chord.

    Distances within ``1e-12`` (relative to the curve's scale) count as ties
    and go to the smaller K, so an affine curve yields its first K.
    """
    ks = np.asarray(ks, dtype=np.float64)
    ys = np.asarray(inertias, dtype=np.float64)
    if len(ks) <= 2:
        return int(ks[0])
    x1, y1, x2, y2 = ks[0], ys[0], ks[-1], ys[-1]
    num = np.abs((y2 - y1) * ks - (x2 - x1) * ys + x2 * y1 - y2 * x1)
    dist = num / math.hypot(y2 - y1, x2 - x1)
    tie = 1e-12 * max(1.0, float(np.abs(ys).max()))
    return int(ks[np.flatnonzero(dist >= dist.max() - tie)[0]])


@dataclass
class ElbowSweep:
    k: int
    ks: list[int] = field(default_factory=list)
    inertias: list[float] = field(default_factory=list)
    results: dict[int, ClusteringResult] = field(default_factory=dict)

    @property
    def best(self) -> ClusteringResult:
        return self.results[self.k]

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "inertia"])
            for k, inertia in zip(self.ks, self.inertias):
                w.writerow([k, repr(inertia)])


def elbow_sweep(
    points: Sequence[ReScoPoint] | np.ndarray,
    k_min: int = 2,
    k_max: int | None = None,
    seed: int = 0,
    *,
    restarts: int = DEFAULT_RESTARTS,
    cap: int = DEFAULT_K_CAP,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> ElbowSweep:
    """Best-of-``restarts`` inertia for each K in range, plus the chosen knee.

    ``k_max`` defaults to ``min(cap, n - 1)`` and is always clamped to the cap
    and to the number of distinct points. With fewer than three distinct
    points no sweep is run and K is ``k_min`` clamped to the distinct count.
    """
    X = points_array(points)
    if k_min < 1:
        raise ValueError(f"k_min must be >= 1, got {k_min}")
    d = distinct_count(X)
    if d == 0:
        raise ValueError("cannot cluster an empty point set")
    if d < 3:
        k = min(k_min, d)
        res = best_kmeans(X, k, seed, restarts, max_iters, tol)
        return ElbowSweep(k, [k], [res.inertia], {k: res})
    if k_max is None:
        k_max = min(cap, len(X) - 1)
    k_max = min(k_max, cap, d)
    k_min = min(k_min, k_max)
    sweep = ElbowSweep(k_min)
    ks = list(range(k_min, k_max + 1))
    runs = _run(X, [(k, r) for k in ks for r in range(restarts)], seed, max_iters, tol)
    for i, k in enumerate(ks):
        res = _best(runs[i * restarts:(i + 1) * restarts])
        sweep.ks.append(k)
        sweep.inertias.append(res.inertia)
        sweep.results[k] = res
    sweep.k = knee(sweep.ks, sweep.inertias)
    return sweep


def choose_k_elbow(
    points: Sequence[ReScoPoint] | np.ndarray,
    k_min: int = 2,
    k_max: int | None = None,
    seed: int = 0,
    **kwargs,
) -> int:
    return elbow_sweep(points, k_min, k_max, seed, **kwargs).k
