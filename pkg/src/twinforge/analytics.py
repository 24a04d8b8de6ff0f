"""Change-point detection (exact PELT plus a brute-force DP oracle), seeded
K-means, silhouette scoring, and segment-statistics extraction.

Cost model is multivariate L2: sum over dimensions of within-segment squared
deviation from the segment mean. The objective minimized is
sum(segment costs) + penalty * (number of change points). Everything here is
a pure function; floating-point reductions are fixed-order so results are
identical across runs and thread counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import rng
from .errors import (
    DimensionMismatch,
    EmptyInput,
    KExceedsN,
    LengthMismatch,
    SeriesTooLong,
    SeriesTooShort,
    TooFewPoints,
)
from .readiness import FeatureSeries

BRUTE_FORCE_MAX_N = 512

# Guard band on the pruning inequality: a candidate within this margin of
# optimal is kept, so rounding noise can never prune a candidate the
# unpruned DP would pick. Costs this close are ties for every practical
# purpose and the tolerance on total_cost is 1e-9 anyway.
_PRUNE_SLACK = 1e-9


@dataclass(frozen=True)
class PeltConfig:
    penalty: float = 40.0
    min_segment: int = 2

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")
        if self.min_segment < 1:
            raise ValueError("min_segment must be >= 1")


@dataclass(frozen=True)
class Segmentation:
    """Change points are the first block index of each new segment, strictly
    increasing within (0, n_blocks)."""

    change_points: tuple[int, ...]
    n_blocks: int
    total_cost: float

    @property
    def segments(self) -> list[tuple[int, int]]:
        bounds = (0,) + self.change_points + (self.n_blocks,)
        return list(zip(bounds[:-1], bounds[1:]))


def _as_matrix(features: Union[FeatureSeries, Sequence, np.ndarray]) -> np.ndarray:
    if isinstance(features, FeatureSeries):
        x = features.peaks
    else:
        x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _prefix_sums(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, d = x.shape
    s1 = np.zeros((n + 1, d))
    s2 = np.zeros((n + 1, d))
    np.cumsum(x, axis=0, out=s1[1:])
    np.cumsum(x * x, axis=0, out=s2[1:])
    return s1, s2


def _segment_costs(s1: np.ndarray, s2: np.ndarray, starts: np.ndarray, end: int) -> np.ndarray:
    """L2 cost of segments [start, end) for a vector of starts."""
    lengths = (end - starts).astype(np.float64)
    dsum = s1[end] - s1[starts]
    dsq = s2[end] - s2[starts]
    return (dsq - dsum * dsum / lengths[:, None]).sum(axis=1)


def objective_cost(features, change_points: Sequence[int], penalty: float) -> float:
    """Objective value of a given segmentation (used to report total_cost)."""
    x = _as_matrix(features)
    s1, s2 = _prefix_sums(x)
    bounds = [0, *change_points, x.shape[0]]
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        total += float(_segment_costs(s1, s2, np.array([a]), b)[0])
    return total + penalty * len(change_points)


def pelt_segment(features, config: PeltConfig) -> Segmentation:
    """Exact penalized segmentation via PELT.

    Recursion F(t) = min over admissible s of F(s) + C(s, t) + penalty, with
    candidates pruned once F(s) + C(s, t) > F(t). Because segments must be at
    least min_segment blocks, a pruned candidate is only dropped for steps
    past t + min_segment (the dominating split at t is not admissible
    earlier); this keeps the result identical to the unpruned DP.
    """
    x = _as_matrix(features)
    n = x.shape[0]
    m = config.min_segment
    beta = config.penalty
    if n < m:
        raise SeriesTooShort(f"{n} blocks < min_segment {m}")
    s1, s2 = _prefix_sums(x)

    f = np.full(n + 1, np.inf)
    f[0] = -beta
    prev = np.zeros(n + 1, dtype=np.int64)
    cands: list[int] = [0]
    kill: dict[int, int] = {}

    for t in range(m, n + 1):
        newcomer = t - m
        if newcomer >= m:
            cands.append(newcomer)
        if kill:
            cands = [s for s in cands if kill.get(s, t + 1) > t]
        arr = np.asarray(cands, dtype=np.int64)
        costs = _segment_costs(s1, s2, arr, t)
        totals = f[arr] + costs
        best = int(np.argmin(totals))  # first minimum: smallest s wins ties
        f[t] = totals[best] + beta
        prev[t] = arr[best]
        doomed = totals > f[t] + _PRUNE_SLACK
        if doomed.any():
            deadline = t + m
            for s in arr[doomed]:
                kill.setdefault(int(s), deadline)

    cps: list[int] = []
    t = n
    while t > 0:
        s = int(prev[t])
        if s > 0:
            cps.append(s)
        t = s
    cps.reverse()
    return Segmentation(
        change_points=tuple(cps),
        n_blocks=n,
        total_cost=objective_cost(x, cps, beta),
    )


def brute_force_segment(features, config: PeltConfig) -> Segmentation:
    """Exact optimal segmentation by full O(n^2) dynamic programming over all
    admissible last-change positions. Exactness oracle for pelt_segment."""
    x = _as_matrix(features)
    n = x.shape[0]
    m = config.min_segment
    beta = config.penalty
    if n < m:
        raise SeriesTooShort(f"{n} blocks < min_segment {m}")
    if n > BRUTE_FORCE_MAX_N:
        raise SeriesTooLong(f"{n} blocks > {BRUTE_FORCE_MAX_N}")
    s1, s2 = _prefix_sums(x)

    f = np.full(n + 1, np.inf)
    f[0] = -beta
    prev = np.zeros(n + 1, dtype=np.int64)
    for t in range(m, n + 1):
        starts = np.concatenate(
            (np.zeros(1, dtype=np.int64), np.arange(m, t - m + 1, dtype=np.int64))
        )
        totals = f[starts] + _segment_costs(s1, s2, starts, t) + beta
        best = int(np.argmin(totals))
        f[t] = totals[best]
        prev[t] = starts[best]

    cps: list[int] = []
    t = n
    while t > 0:
        s = int(prev[t])
        if s > 0:
            cps.append(s)
        t = s
    cps.reverse()
    return Segmentation(change_points=tuple(cps), n_blocks=n, total_cost=float(f[n]))


@dataclass(frozen=True)
class KMeansModel:
    k: int
    centroids: np.ndarray  # (k, d)
    labels: np.ndarray  # (n,)
    inertia: float
    seed: int
    iterations_run: int
    inertia_history: tuple[float, ...]


def _kmeanspp_init(x: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Deterministic k-means++ seeding: D^2-weighted draws from a
    counter-based stream keyed on the seed."""
    n = x.shape[0]
    key = rng.stream_key(seed, "kmeans++")
    u = rng.uniforms(key, np.arange(k, dtype=np.uint64))
    first = min(int(u[0] * n), n - 1)
    centroids = [x[first]]
    d2 = ((x - x[first]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(np.searchsorted(np.cumsum(d2), u[j] * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = min(int(u[j] * n), n - 1)
        centroids.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centroids)


def kmeans_fit(
    vectors, k: int, seed: int, max_iter: int = 100, tol: float = 1e-9
) -> KMeansModel:
    """Lloyd's algorithm with k-means++ seeding, fully deterministic given
    (vectors, k, seed).

    Assignment ties break toward the lowest centroid index; an empty cluster
    is repaired by re-seeding it on the point farthest from its assigned
    centroid. Iterates until max centroid movement < tol or max_iter.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise EmptyInput("kmeans_fit needs at least one vector")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KExceedsN(f"k={k} > n={n}")

    centroids = _kmeanspp_init(x, k, seed)
    labels = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        assigned = d2[np.arange(n), labels]
        for j in range(k):
            if not (labels == j).any():
                p = int(assigned.argmax())
                labels[p] = j
                assigned[p] = -1.0
        new_centroids = np.vstack([x[labels == j].mean(axis=0) for j in range(k)])
        movement = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        history.append(float(((x - centroids[labels]) ** 2).sum()))
        if movement < tol:
            break

    # settle labels against the converged centroids
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    history.append(inertia)
    return KMeansModel(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        seed=seed,
        iterations_run=iterations,
        inertia_history=tuple(history),
    )


def kmeans_assign(model: KMeansModel, vector) -> int:
    """Index of the nearest centroid (squared Euclidean, ties to lowest)."""
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (model.centroids.shape[1],):
        raise DimensionMismatch(
            f"vector shape {v.shape} vs centroid dim {model.centroids.shape[1]}"
        )
    return int(((model.centroids - v) ** 2).sum(axis=1).argmin())


def silhouette_score(vectors, labels) -> float:
    """Mean silhouette in [-1, 1].

    s_i = (b_i - a_i) / max(a_i, b_i) with a_i the mean intra-cluster
    distance and b_i the lowest mean distance to another cluster; singleton
    clusters score 0, as does a degenerate single-cluster labeling.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise TooFewPoints("silhouette needs at least 2 points")
    lab = np.asarray(labels)
    if lab.shape[0] != n:
        raise LengthMismatch(f"{lab.shape[0]} labels for {n} points")
    clusters = np.unique(lab)
    if clusters.size == 1:
        return 0.0

    dist = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(n)
    masks = {c: lab == c for c in clusters}
    sizes = {c: int(masks[c].sum()) for c in clusters}
    for i in range(n):
        own = lab[i]
        if sizes[own] == 1:
            continue  # singleton: s_i = 0
        a = dist[i, masks[own]].sum() / (sizes[own] - 1)
        b = min(dist[i, masks[c]].mean() for c in clusters if c != own)
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


@dataclass(frozen=True)
class SegmentSummary:
    segment_index: int
    block_range: tuple[int, int]
    cluster_label: int
    mean: tuple[float, ...]
    peak: tuple[float, ...]
    duration_blocks: int


def segment_features(features, seg: Segmentation, labels) -> list[SegmentSummary]:
    """Per-segment statistics: per-axis mean and max, duration, and the
    majority block label (ties to the lowest label)."""
    x = _as_matrix(features)
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape[0] != x.shape[0]:
        raise LengthMismatch(f"{lab.shape[0]} labels for {x.shape[0]} blocks")
    if seg.n_blocks != x.shape[0]:
        raise LengthMismatch(f"segmentation over {seg.n_blocks} != {x.shape[0]} blocks")
    out = []
    for i, (a, b) in enumerate(seg.segments):
        block = x[a:b]
        majority = int(np.bincount(lab[a:b]).argmax())
        out.append(
            SegmentSummary(
                segment_index=i,
                block_range=(a, b),
                cluster_label=majority,
                mean=tuple(float(v) for v in block.mean(axis=0)),
                peak=tuple(float(v) for v in block.max(axis=0)),
                duration_blocks=b - a,
            )
        )
    return out
