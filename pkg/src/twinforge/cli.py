"""Command-line entry point wiring simulator, archive, twins, and the
ZeroConf orchestrator.

Exit codes: 0 ok, 2 bad arguments/malformed input, 3 no data, 4 pipeline
error (message names the replica version). Diagnostics go to stderr; stdout
stays machine-parseable where a format is stated.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .analytics import kmeans_assign, kmeans_fit
from .archive import Archive, WindowQuery
from .errors import InvalidSpec, MalformedLine, NoData, TwinForgeError, UnknownAsset
from .orchestrator import (
    DEFAULT_GRID,
    DEFAULT_RARITY_THRESHOLD,
    flag_anomalies,
    records_for,
    zeroconf_run,
)
from .readiness import ReadinessConfig, run_readiness
from .simulate import (
    DEFAULT_DURATION_S,
    DEFAULT_MACHINES,
    DEFAULT_SAMPLE_RATE,
    DEFAULT_SEED,
    MachineState,
    PhaseInterval,
    ScenarioSpec,
    default_scenario,
    simulate_scenario,
)
from .twin import LifecycleEvent, TwinRuntime
from .wire import ACCEL_CHANNELS, replay_trace, write_trace

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_NO_DATA = 3
EXIT_PIPELINE = 4

FORMAT_VERSIONS = {"trace": 1, "report": 1, "timeline": 1, "anomalies": 1}


def _fail(code: int, message: str) -> int:
    print(f"twinforge: {message}", file=sys.stderr)
    return code


def parse_scenario_file(path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        schedule = tuple(
            PhaseInterval(
                machine=iv["machine"],
                start_s=float(iv["start_s"]),
                end_s=float(iv["end_s"]),
                state=MachineState[iv["state"]],
            )
            for iv in payload.get("schedule", [])
        )
        return ScenarioSpec(
            seed=int(payload.get("seed", DEFAULT_SEED)),
            machines=tuple(payload.get("machines", DEFAULT_MACHINES)),
            duration_s=float(payload.get("duration_s", DEFAULT_DURATION_S)),
            sample_rate=int(payload.get("sample_rate", DEFAULT_SAMPLE_RATE)),
            phase_schedule=schedule,
            failure_windows=tuple(
                (w[0], float(w[1]), float(w[2]))
                for w in payload.get("failure_windows", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad scenario file {path}: {exc}") from exc


def cmd_simulate(args) -> int:
    try:
        if args.spec:
            spec = parse_scenario_file(args.spec)
        else:
            machines = tuple(args.machines.split(",")) if args.machines else DEFAULT_MACHINES
            spec = default_scenario(
                seed=args.seed,
                duration_s=args.duration,
                machines=machines,
                sample_rate=args.rate,
            )
        spec.validate()
        samples, truth = simulate_scenario(spec)
    except (InvalidSpec, OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_BAD_ARGS, f"invalid scenario: {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.jsonl"
    n = write_trace(trace_path, samples)
    (out / "ground_truth.json").write_text(truth.to_json(), encoding="utf-8")
    print(f"wrote {n} samples to {trace_path}", file=sys.stderr)
    return EXIT_OK


def _ingest(trace_path):
    """Replay a trace into a fresh archive through twin shadowing, driving
    each twin Unbound -> Bound -> Synchronized on first contact."""
    runtime = TwinRuntime()
    archive = Archive()
    for sample in replay_trace(trace_path, speed="max"):
        if sample.asset_id not in runtime:
            twin = runtime.create_twin(sample.asset_id)
            twin.apply_lifecycle_event(LifecycleEvent.Bind)
            twin.apply_lifecycle_event(LifecycleEvent.SyncEstablished)
        twin = runtime.get(sample.asset_id)
        twin.shadow_sample(sample)
        archive.append_sample(sample, tags={"phase": twin.phase.name})
    return runtime, archive


def _report_payload(report, machine: str, seed: int, threshold: float, per_sample_ns: int):
    replicas = []
    for r in report.results:
        block_ns = r.hyperparams.block_size * per_sample_ns
        anomaly_count = len(
            flag_anomalies(records_for(r, block_ns), threshold, machine=machine)
        )
        replicas.append(
            {
                "version": r.replica_version,
                "block_size": r.hyperparams.block_size,
                "penalty": r.hyperparams.penalty,
                "k": r.hyperparams.k,
                "silhouette": r.silhouette,
                "segment_count": r.segment_count,
                "change_points": list(r.segmentation.change_points),
                "total_cost": r.segmentation.total_cost,
                "anomaly_count": anomaly_count,
            }
        )
    return {
        "format_version": FORMAT_VERSIONS["report"],
        "machine": machine,
        "seed": seed,
        "rarity_threshold": threshold,
        "ranking_rule": report.ranking_rule_applied,
        "selected": report.selected,
        "replicas": replicas,
    }


def cmd_run(args) -> int:
    try:
        grid = json.loads(args.grid) if args.grid else None
    except json.JSONDecodeError as exc:
        return _fail(EXIT_BAD_ARGS, f"bad --grid JSON: {exc}")
    try:
        runtime, archive = _ingest(args.trace)
    except FileNotFoundError:
        return _fail(EXIT_BAD_ARGS, f"trace not found: {args.trace}")
    except MalformedLine as exc:
        return _fail(EXIT_BAD_ARGS, f"malformed trace: {exc}")

    twin = runtime.get(args.machine) if args.machine in runtime else None
    try:
        if twin is None:
            raise NoData(f"no samples for machine {args.machine!r}")
        all_ts = [e.sample.ts for e in archive.scan(args.machine)]
        time_range = (min(all_ts), max(all_ts) + 1)
        report, timeline, anomalies = zeroconf_run(
            archive,
            args.machine,
            time_range,
            grid=grid,
            rarity_threshold=args.threshold,
            twin=twin,
            seed=args.seed,
        )
    except (NoData, UnknownAsset) as exc:
        return _fail(EXIT_NO_DATA, str(exc))
    except TwinForgeError as exc:
        return _fail(EXIT_PIPELINE, f"pipeline error: {exc}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    accel_entries = archive.query_window(
        WindowQuery(
            asset_id=args.machine,
            t_start=time_range[0],
            t_end=time_range[1],
            channels=frozenset([ACCEL_CHANNELS[0]]),
        )
    )
    ts_x = [e.sample.ts for e in accel_entries]
    per_sample_ns = (ts_x[-1] - ts_x[0]) // (len(ts_x) - 1) if len(ts_x) > 1 else 0

    payload = _report_payload(report, args.machine, args.seed, args.threshold, per_sample_ns)
    (out / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    (out / "timeline.csv").write_text(timeline.to_csv(), encoding="utf-8")
    (out / "changepoints.txt").write_text(
        "".join(f"{cp}\n" for cp in timeline.change_points), encoding="utf-8"
    )
    (out / "anomalies.json").write_text(
        json.dumps(
            [
                {
                    "machine": a.machine,
                    "replica_version": a.replica_version,
                    "segment_index": a.segment_index,
                    "block_range": list(a.block_range),
                    "cluster_label": a.cluster_label,
                    "rarity": a.rarity,
                    "ts": a.ts,
                }
                for a in anomalies
            ],
            sort_keys=True,
            indent=1,
        )
        + "\n",
        encoding="utf-8",
    )
    manifest = {
        "tool_version": __version__,
        "trace": str(args.trace),
        "machine": args.machine,
        "seed": args.seed,
        "rarity_threshold": args.threshold,
        "grid": grid if grid is not None else DEFAULT_GRID,
        "format_versions": FORMAT_VERSIONS,
        "outputs": ["report.json", "timeline.csv", "changepoints.txt", "anomalies.json"],
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    print(
        f"selected {report.selected}: {report.results[0].segment_count} segments, "
        f"{len(anomalies)} anomalies -> {out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        payload = json.loads(Path(args.report).read_text(encoding="utf-8"))
        replicas = payload["replicas"]
        selected = payload["selected"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        return _fail(EXIT_BAD_ARGS, f"malformed report: {exc}")
    if not replicas:
        print("no replicas")
        return EXIT_OK
    header = f"{'':2}{'version':<14}{'penalty':>8}{'k':>3}{'block':>6}{'silhouette':>11}{'segments':>9}{'anomalies':>10}"
    print(header)
    for r in replicas:
        try:
            mark = "*" if r["version"] == selected else " "
            print(
                f"{mark:2}{r['version']:<14}{r['penalty']:>8g}{r['k']:>3}"
                f"{r['block_size']:>6}{r['silhouette']:>11.4f}"
                f"{r['segment_count']:>9}{r['anomaly_count']:>10}"
            )
        except (KeyError, TypeError) as exc:
            return _fail(EXIT_BAD_ARGS, f"malformed report row: {exc}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        warmup: dict[str, dict] = {}
        for s in replay_trace(args.trace, speed="max"):
            if s.channel in ACCEL_CHANNELS:
                warmup.setdefault(s.asset_id, {ch: [] for ch in ACCEL_CHANNELS})[
                    s.channel
                ].append(s.value)
    except FileNotFoundError:
        return _fail(EXIT_BAD_ARGS, f"trace not found: {args.trace}")
    except MalformedLine as exc:
        return _fail(EXIT_BAD_ARGS, f"malformed trace: {exc}")
    if not warmup:
        return _fail(EXIT_NO_DATA, "empty trace")

    # champion: default-config model fitted on the first machine's features
    cfg = ReadinessConfig()
    first = sorted(warmup)[0]
    axes = warmup[first]
    features = run_readiness(
        axes[ACCEL_CHANNELS[0]], axes[ACCEL_CHANNELS[1]], axes[ACCEL_CHANNELS[2]], cfg
    )
    champion = kmeans_fit(features.peaks, k=4, seed=args.seed)

    started = time.perf_counter()
    buffers: dict[str, dict] = {}
    total = 0
    for s in replay_trace(args.trace, speed="max"):
        total += 1
        if s.channel in ACCEL_CHANNELS:
            buffers.setdefault(s.asset_id, {ch: [] for ch in ACCEL_CHANNELS})[
                s.channel
            ].append(s.value)
    assigned = 0
    for machine in sorted(buffers):
        axes = buffers[machine]
        feats = run_readiness(
            axes[ACCEL_CHANNELS[0]], axes[ACCEL_CHANNELS[1]], axes[ACCEL_CHANNELS[2]], cfg
        )
        for vec in feats.peaks:
            kmeans_assign(champion, vec)
            assigned += 1
    elapsed = time.perf_counter() - started
    rate = int(total / elapsed) if elapsed > 0 else 0
    print(f"{rate} samples/s")
    print(f"({total} samples, {assigned} blocks assigned, {elapsed:.3f} s)", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinforge",
        description="Digital-twin runtime and ZeroConf pipeline orchestrator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a production-line scenario")
    p_sim.add_argument("--spec", help="scenario JSON file (overrides the flags)")
    p_sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sim.add_argument("--duration", type=float, default=DEFAULT_DURATION_S)
    p_sim.add_argument("--machines", help="comma-separated machine ids")
    p_sim.add_argument("--rate", type=int, default=DEFAULT_SAMPLE_RATE, help="sample rate in Hz")
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_run = sub.add_parser("run", help="ingest a trace and run the ZeroConf pipeline")
    p_run.add_argument("trace")
    p_run.add_argument("--machine", default=DEFAULT_MACHINES[0])
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--grid", help="JSON grid override, e.g. '{\"penalty\":[40]}'")
    p_run.add_argument("--threshold", type=float, default=DEFAULT_RARITY_THRESHOLD)
    p_run.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("report", help="print the ranking table of a report")
    p_rep.add_argument("report")
    p_rep.set_defaults(func=cmd_report)

    p_bench = sub.add_parser("bench", help="measure pipeline throughput on a trace")
    p_bench.add_argument("trace")
    p_bench.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
