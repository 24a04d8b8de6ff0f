"""Zero-configuration replication: spawn a hyperparameter grid of pipeline
replicas against an immutable window of archived data, version and rank their
outputs, flag rare-cluster segments as anomalies, and feed augmentation
events back into the twin.

Replicas share no mutable state, so they can run on any number of workers;
ranking re-sorts deterministically, making parallel and sequential execution
indistinguishable.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .analytics import (
    PeltConfig,
    Segmentation,
    SegmentSummary,
    kmeans_fit,
    pelt_segment,
    segment_features,
    silhouette_score,
)
from .archive import Archive, SegmentRecord, SegmentStats, WindowQuery
from .errors import AxisLengthMismatch, EmptyGrid, MixedVersions, NoData, NoResults, TwinForgeError
from .readiness import FeatureSeries, ReadinessConfig, run_readiness
from .twin import LifecyclePhase, TwinInstance
from .wire import ACCEL_CHANNELS, Quality, TelemetrySample

DEFAULT_RARITY_THRESHOLD = 0.05

# ZeroConf sweep: no caller-supplied configuration needed.
DEFAULT_GRID: dict[str, list] = {
    "penalty": [10.0, 40.0, 160.0],
    "k": [2, 3, 4, 5],
    "block_size": [25, 50],
}

RANKING_RULE = "silhouette desc, segment_count asc, penalty asc, version asc"

_HP_FIELDS = ("block_size", "penalty", "k")


@dataclass(frozen=True)
class HyperParams:
    block_size: int = 50
    penalty: float = 40.0
    k: int = 4
    readiness: tuple[tuple[str, object], ...] = ()

    def readiness_config(self) -> ReadinessConfig:
        return ReadinessConfig(block_size=self.block_size).with_overrides(
            **dict(self.readiness)
        )

    def canonical(self) -> str:
        return json.dumps(
            {
                "block_size": self.block_size,
                "penalty": self.penalty,
                "k": self.k,
                "readiness": dict(self.readiness),
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:8]


@dataclass(frozen=True)
class ReplicaResult:
    replica_version: str
    hyperparams: HyperParams
    segmentation: Segmentation
    labels: np.ndarray
    silhouette: float
    segment_count: int
    wall_time: float
    features: FeatureSeries
    segments: tuple[SegmentSummary, ...]
    window_start_ts: int


@dataclass(frozen=True)
class AnomalyEvent:
    machine: str
    replica_version: str
    segment_index: int
    block_range: tuple[int, int]
    cluster_label: int
    rarity: float
    ts: int


@dataclass(frozen=True)
class BenchmarkReport:
    results: tuple[ReplicaResult, ...]
    selected: str
    ranking_rule_applied: str = RANKING_RULE


@dataclass(frozen=True)
class Timeline:
    """Segment rows tiling [0, n_blocks) exactly once."""

    rows: tuple[tuple[int, int, int, bool], ...]  # (start, end, cluster, is_anomaly)
    change_points: tuple[int, ...]

    def to_csv(self) -> str:
        lines = ["block_start,block_end,cluster,is_anomaly"]
        for a, b, label, flagged in self.rows:
            lines.append(f"{a},{b},{label},{'true' if flagged else 'false'}")
        return "\n".join(lines) + "\n"


def spawn_replica_grid(grids: Mapping[str, Sequence]) -> list[HyperParams]:
    """Cartesian product of the grid, parameters iterated in sorted-name
    order with values kept in their given order. Unknown parameter names are
    treated as readiness-stage overrides."""
    names = sorted(grids)
    for name in names:
        if len(grids[name]) == 0:
            raise EmptyGrid(f"empty value list for {name!r}")
    combos = itertools.product(*(grids[name] for name in names))
    out = []
    for combo in combos:
        assignment = dict(zip(names, combo))
        fields = {k: assignment.pop(k) for k in _HP_FIELDS if k in assignment}
        out.append(
            HyperParams(readiness=tuple(sorted(assignment.items())), **fields)
        )
    return out


def _axis_series(window: Sequence[TelemetrySample]):
    """Split a queried window into three aligned accel arrays plus the ts
    array of the first axis. Missing-quality samples become NaN (filled by
    the readiness stage)."""
    per_channel: dict = {ch: [] for ch in ACCEL_CHANNELS}
    ts: list[int] = []
    for s in window:
        if s.channel in per_channel:
            value = float("nan") if s.quality is Quality.missing else s.value
            per_channel[s.channel].append(value)
            if s.channel is ACCEL_CHANNELS[0]:
                ts.append(s.ts)
    lengths = {ch.value: len(v) for ch, v in per_channel.items()}
    if len(set(lengths.values())) != 1 or not ts:
        raise AxisLengthMismatch(f"accel channels misaligned: {lengths}")
    return (
        np.array(per_channel[ACCEL_CHANNELS[0]]),
        np.array(per_channel[ACCEL_CHANNELS[1]]),
        np.array(per_channel[ACCEL_CHANNELS[2]]),
        ts,
    )


def run_replica(
    window: Sequence[TelemetrySample], hp: HyperParams, seed: int, seq: int = 1
) -> ReplicaResult:
    """One pipeline replica over an immutable window: readiness ->
    segmentation -> clustering -> segment stats -> silhouette.

    Deterministic given (window, hp, seed); any stage error is re-raised
    annotated with the replica version.
    """
    version = f"v{seq}-{hp.digest()}"
    started = time.perf_counter()
    try:
        x, y, z, ts = _axis_series(window)
        features = run_readiness(x, y, z, hp.readiness_config())
        segmentation = pelt_segment(features, PeltConfig(penalty=hp.penalty))
        model = kmeans_fit(features.peaks, hp.k, seed)
        summaries = segment_features(features, segmentation, model.labels)
        score = silhouette_score(features.peaks, model.labels)
    except TwinForgeError as exc:
        raise type(exc)(f"{version}: {exc}") from exc
    return ReplicaResult(
        replica_version=version,
        hyperparams=hp,
        segmentation=segmentation,
        labels=model.labels,
        silhouette=score,
        segment_count=len(segmentation.segments),
        wall_time=time.perf_counter() - started,
        features=features,
        segments=tuple(summaries),
        window_start_ts=ts[0],
    )


def rank_replicas(results: Sequence[ReplicaResult]) -> BenchmarkReport:
    """Total order: silhouette desc, then segment count asc, penalty asc,
    version asc; first entry is selected."""
    if not results:
        raise NoResults("no replica results to rank")
    ranked = sorted(
        results,
        key=lambda r: (
            -r.silhouette,
            r.segment_count,
            r.hyperparams.penalty,
            r.replica_version,
        ),
    )
    return BenchmarkReport(results=tuple(ranked), selected=ranked[0].replica_version)


def flag_anomalies(
    records: Sequence[SegmentRecord],
    rarity_threshold: float = DEFAULT_RARITY_THRESHOLD,
    machine: str = "",
) -> list[AnomalyEvent]:
    """Flag every segment whose cluster covers less than rarity_threshold of
    all blocks; rarity is that cluster's block frequency."""
    if not records:
        return []
    versions = {r.replica_version for r in records}
    if len(versions) != 1:
        raise MixedVersions(f"records span versions {sorted(versions)}")
    total_blocks = sum(r.stats.duration_blocks for r in records)
    cluster_blocks: dict[int, int] = {}
    for r in records:
        cluster_blocks[r.cluster_label] = (
            cluster_blocks.get(r.cluster_label, 0) + r.stats.duration_blocks
        )
    events = []
    for r in records:
        rarity = cluster_blocks[r.cluster_label] / total_blocks
        if rarity < rarity_threshold:
            events.append(
                AnomalyEvent(
                    machine=machine,
                    replica_version=r.replica_version,
                    segment_index=r.segment_index,
                    block_range=r.block_range,
                    cluster_label=r.cluster_label,
                    rarity=rarity,
                    ts=r.created_ts,
                )
            )
    return events


def build_timeline(
    features: FeatureSeries,
    segmentation: Segmentation,
    labels,
    anomalies: Sequence[AnomalyEvent],
) -> Timeline:
    """Segment rows (block range, majority cluster, anomaly flag) plus the
    change-point list, tiling [0, n_blocks) exactly once."""
    summaries = segment_features(features, segmentation, labels)
    flagged = {a.segment_index for a in anomalies}
    rows = tuple(
        (s.block_range[0], s.block_range[1], s.cluster_label, s.segment_index in flagged)
        for s in summaries
    )
    return Timeline(rows=rows, change_points=segmentation.change_points)


def emit_augmentation_event(twin: TwinInstance, anomaly: AnomalyEvent):
    """Append an anomaly_detected event to a Synchronized twin; in any other
    phase the event is suppressed and nothing is appended."""
    if twin.phase is LifecyclePhase.Synchronized:
        return twin.append_event("anomaly_detected", ts=anomaly.ts, payload=anomaly)
    return SuppressedEvent(reason=f"twin in {twin.phase.name}", anomaly=anomaly)


@dataclass(frozen=True)
class SuppressedEvent:
    reason: str
    anomaly: AnomalyEvent


def worker_count(n_tasks: int, max_workers: Optional[int] = None) -> int:
    """Worker cap: explicit argument, else TWINFORGE_THREADS, else 4."""
    if max_workers is None:
        env = os.environ.get("TWINFORGE_THREADS")
        max_workers = int(env) if env else 4
    return max(1, min(max_workers, n_tasks))


def records_for(result: ReplicaResult, block_ns: int) -> list[SegmentRecord]:
    """Materialize a replica's segment summaries as archive records.

    created_ts is the data timestamp of the segment's first block, so records
    are reproducible across runs.
    """
    return [
        SegmentRecord(
            replica_version=result.replica_version,
            segment_index=s.segment_index,
            block_range=s.block_range,
            cluster_label=s.cluster_label,
            stats=SegmentStats(
                mean=s.mean, peak=s.peak, duration_blocks=s.duration_blocks
            ),
            created_ts=result.window_start_ts + s.block_range[0] * block_ns,
        )
        for s in result.segments
    ]


def zeroconf_run(
    archive: Archive,
    machine: str,
    time_range: tuple[int, int],
    grid: Optional[Mapping[str, Sequence]] = None,
    rarity_threshold: float = DEFAULT_RARITY_THRESHOLD,
    twin: Optional[TwinInstance] = None,
    seed: int = 42,
    max_workers: Optional[int] = None,
) -> tuple[BenchmarkReport, Timeline, list[AnomalyEvent]]:
    """End-to-end ZeroConf pipeline over one machine's archived window.

    Queries the window, sweeps the default replica grid, ranks by silhouette,
    records the winner's segment statistics back to the archive (idempotent
    on rerun), flags rare-cluster anomalies, assembles the timeline, and
    emits augmentation events to the twin when one is attached. The raw
    sample log is never touched.
    """
    query = WindowQuery(
        asset_id=machine,
        t_start=time_range[0],
        t_end=time_range[1],
        channels=frozenset(ACCEL_CHANNELS),
    )
    entries = archive.query_window(query)
    if not entries:
        raise NoData(f"no samples for {machine} in {time_range}")
    window = [e.sample for e in entries]

    hps = spawn_replica_grid(grid if grid is not None else DEFAULT_GRID)
    workers = worker_count(len(hps), max_workers)
    if workers == 1:
        results = [run_replica(window, hp, seed, seq=i + 1) for i, hp in enumerate(hps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_replica, window, hp, seed, i + 1)
                for i, hp in enumerate(hps)
            ]
            results = [f.result() for f in futures]

    report = rank_replicas(results)
    winner = report.results[0]

    # nominal sample spacing, for reproducible record timestamps
    ts_x = [s.ts for s in window if s.channel is ACCEL_CHANNELS[0]]
    per_sample_ns = (ts_x[-1] - ts_x[0]) // (len(ts_x) - 1) if len(ts_x) > 1 else 0
    block_ns = winner.hyperparams.block_size * per_sample_ns
    records = records_for(winner, block_ns)
    if winner.replica_version not in archive.replica_versions():
        for record in records:
            archive.record_segment_stats(record)

    anomalies = flag_anomalies(records, rarity_threshold, machine=machine)
    timeline = build_timeline(
        winner.features, winner.segmentation, winner.labels, anomalies
    )
    if twin is not None:
        for anomaly in anomalies:
            emit_augmentation_event(twin, anomaly)
    return report, timeline, anomalies
