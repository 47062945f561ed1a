"""Post-run analysis: per-kind delay statistics, distance traveled during
the delay, and figures. Reads only the run directory; the CSV/JSON output
is byte-identical across re-runs on the same input.
"""

from __future__ import annotations

import csv
import json
import statistics
from pathlib import Path
from typing import Optional

import numpy as np

from ..domain import RucsError
from .decision import distance_during_delay
from .traces import read_trace

REQUEST_KINDS = ("neighbors", "state", "property", "action")
HISTOGRAM_BINS = 20


class MissingLogs(RucsError):
    code = "missing_logs"


def load_samples(run_dir: Path) -> list[dict]:
    path = Path(run_dir) / "latency.jsonl"
    if not path.exists():
        raise MissingLogs(f"no latency log in {run_dir}")
    samples = []
    with path.open(encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                samples.append(json.loads(line))
    return samples


def kind_stats(rtts: list[float]) -> dict:
    rtts = sorted(rtts)
    return {
        "count": len(rtts),
        "mean": statistics.fmean(rtts),
        "median": statistics.median(rtts),
        "p95": float(np.percentile(rtts, 95)),
        "max": max(rtts),
    }


def histogram(values: list[float], bins: int = HISTOGRAM_BINS) -> list[dict]:
    counts, edges = np.histogram(values, bins=bins)
    return [
        {"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]), "count": int(counts[i])}
        for i in range(len(counts))
    ]


def analyze_run(run_dir: Path, make_figures: bool = True) -> Path:
    """Build the report under <run_dir>/report; returns the report path."""
    run_dir = Path(run_dir)
    samples = load_samples(run_dir)

    scenario_path = run_dir / "scenario.json"
    speed_mps = 50.0 / 3.6
    if scenario_path.exists():
        scenario = json.loads(scenario_path.read_text(encoding="utf-8"))
        speed_mps = float(scenario.get("analysis_speed_mps", speed_mps))

    by_kind: dict[str, list[float]] = {k: [] for k in REQUEST_KINDS}
    proc_by_kind: dict[str, list[float]] = {k: [] for k in REQUEST_KINDS}
    for s in samples:
        kind = s["request_kind"]
        by_kind.setdefault(kind, []).append(float(s["rtt"]))
        proc_by_kind.setdefault(kind, []).append(float(s["server_processing"]))

    summary: dict = {"speed_mps": speed_mps, "kinds": {}}
    for kind in sorted(by_kind):
        rtts = by_kind[kind]
        if not rtts:
            summary["kinds"][kind] = {"no_samples": True}
            continue
        entry = kind_stats(rtts)
        entry["server_processing"] = kind_stats(proc_by_kind[kind])
        entry["mean_distance_m"] = distance_during_delay(speed_mps, entry["mean"])
        summary["kinds"][kind] = entry

    counts_path = run_dir / "counts.json"
    if counts_path.exists():
        summary["counts"] = json.loads(counts_path.read_text(encoding="utf-8"))

    report_dir = run_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    (report_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
    )

    # Delimited tables: one stats row per kind, plus histograms.
    with (report_dir / "delay_stats.csv").open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["kind", "count", "mean_s", "median_s", "p95_s", "max_s", "mean_distance_m"])
        for kind in sorted(summary["kinds"]):
            entry = summary["kinds"][kind]
            if entry.get("no_samples"):
                writer.writerow([kind, 0, "no samples", "", "", "", ""])
            else:
                writer.writerow(
                    [
                        kind,
                        entry["count"],
                        f"{entry['mean']:.6f}",
                        f"{entry['median']:.6f}",
                        f"{entry['p95']:.6f}",
                        f"{entry['max']:.6f}",
                        f"{entry['mean_distance_m']:.3f}",
                    ]
                )

    with (report_dir / "delay_histogram.csv").open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["kind", "bin_lo_s", "bin_hi_s", "count"])
        for kind in sorted(by_kind):
            for b in histogram(by_kind[kind]) if by_kind[kind] else []:
                writer.writerow([kind, f"{b['bin_lo']:.6f}", f"{b['bin_hi']:.6f}", b["count"]])

    all_rtts = [r for rtts in by_kind.values() for r in rtts]
    with (report_dir / "distance_histogram.csv").open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_lo_m", "bin_hi_m", "count"])
        if all_rtts:
            distances = [distance_during_delay(speed_mps, r) for r in all_rtts]
            for b in histogram(distances):
                writer.writerow([f"{b['bin_lo']:.4f}", f"{b['bin_hi']:.4f}", b["count"]])

    if make_figures:
        render_figures(run_dir, report_dir, by_kind, speed_mps)
    return report_dir


def render_figures(
    run_dir: Path, report_dir: Path, by_kind: dict[str, list[float]], speed_mps: float
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # Delay distribution per request kind.
    fig, ax = plt.subplots(figsize=(7, 4))
    kinds = [k for k in sorted(by_kind) if by_kind[k]]
    for kind in kinds:
        ax.hist(by_kind[kind], bins=HISTOGRAM_BINS, alpha=0.55, label=kind)
    ax.set_xlabel("request-response delay (s)")
    ax.set_ylabel("requests")
    ax.set_title("Delay distribution by request kind")
    if kinds:
        ax.legend()
    fig.tight_layout()
    fig.savefig(report_dir / "delay_distribution.png", dpi=120)
    plt.close(fig)

    # Distance traveled while waiting, at the configured speed.
    all_rtts = [r for rtts in by_kind.values() for r in rtts]
    fig, ax = plt.subplots(figsize=(7, 4))
    if all_rtts:
        ax.hist([distance_during_delay(speed_mps, r) for r in all_rtts], bins=HISTOGRAM_BINS)
    ax.set_xlabel(f"distance traveled during delay at {speed_mps * 3.6:.0f} km/h (m)")
    ax.set_ylabel("requests")
    ax.set_title("Distance traveled between request and response")
    fig.tight_layout()
    fig.savefig(report_dir / "distance_during_delay.png", dpi=120)
    plt.close(fig)

    # GPS traces of the run.
    traces_dir = run_dir / "traces"
    fig, ax = plt.subplots(figsize=(7, 5))
    if traces_dir.exists():
        for trace_file in sorted(traces_dir.glob("*.csv")):
            points = read_trace(trace_file)
            ax.plot(
                [p.lon for p in points],
                [p.lat for p in points],
                marker=".",
                markersize=3,
                label=trace_file.stem,
            )
        ax.legend()
    ax.set_xlabel("longitude (deg)")
    ax.set_ylabel("latitude (deg)")
    ax.set_title("Vehicle GPS traces")
    fig.tight_layout()
    fig.savefig(report_dir / "gps_traces.png", dpi=120)
    plt.close(fig)
