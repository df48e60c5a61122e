"""Benchmark aggregation and report rendering.

Produces, per benchmark: a runs CSV (one row per instance/strategy/repeat),
a per-strategy summary (CSV + JSON) using the shifted geometric mean for
times and arithmetic means for counts, a plain-text comparison table, and
matplotlib figures rendered to PNG next to the delimited output. All output
is sorted and timestamp-free so identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .adapters import ERROR, METRIC_NAMES
from .harness import BenchRun, PerturbationResult

TIME_SHIFT_S = 1.0

RUN_CSV_FIELDS = (
    "instance", "strategy", "repeat", "status", "t_total", "n_nodes",
    "n_iter", "t_presolve", "seed", "solver", "perm_digest", "wall_s",
    "shots_budget_s",
)


def shifted_geo_mean(values, shift: float = TIME_SHIFT_S) -> float:
    """Geometric mean of (x + shift) minus shift; robust time aggregate."""
    values = list(values)
    if not values:
        raise ValueError("shifted_geo_mean of no values")
    logs = [math.log(v + shift) for v in values]
    return math.exp(sum(logs) / len(logs)) - shift


@dataclass
class StrategySummary:
    strategy: str
    n_instances: int
    n_errors: int
    t_total_sgm: float | None
    n_nodes_mean: float | None
    n_iter_mean: float | None
    t_presolve_mean: float | None
    speedup: float | None = None


def _median_cell(runs: list[BenchRun]) -> dict:
    """Median metrics over the non-error repeats of one (instance, strategy)."""
    ok = [r.record for r in runs if r.record.status != ERROR]
    cell = {"n_errors": sum(1 for r in runs if r.record.status == ERROR)}
    for name in METRIC_NAMES:
        cell[name] = (
            float(statistics.median([getattr(rec, name) for rec in ok])) if ok else None
        )
    return cell


def aggregate(runs: list[BenchRun], reference: str = "none") -> list[StrategySummary]:
    """Per-strategy aggregates over per-instance medians, order-independent.

    Times aggregate with the shifted geometric mean (shift 1 s); the other
    metrics with arithmetic means. The speedup column is the reference
    strategy's aggregate time over each strategy's (reference defaults to
    'none', falling back to the lexicographically first strategy present).
    """
    cells: dict[tuple[str, str], list[BenchRun]] = {}
    for run in sorted(runs, key=lambda r: (r.record.instance, r.record.strategy, r.repeat)):
        cells.setdefault((run.record.instance, run.record.strategy), []).append(run)

    per_strategy: dict[str, list[dict]] = {}
    for (inst, strategy), cell_runs in sorted(cells.items()):
        per_strategy.setdefault(strategy, []).append(_median_cell(cell_runs))

    summaries = []
    for strategy in sorted(per_strategy):
        cells_ok = [c for c in per_strategy[strategy] if c["t_total"] is not None]
        n_err = sum(c["n_errors"] for c in per_strategy[strategy])
        if cells_ok:
            summary = StrategySummary(
                strategy=strategy,
                n_instances=len(per_strategy[strategy]),
                n_errors=n_err,
                t_total_sgm=shifted_geo_mean([c["t_total"] for c in cells_ok]),
                n_nodes_mean=float(statistics.mean([c["n_nodes"] for c in cells_ok])),
                n_iter_mean=float(statistics.mean([c["n_iter"] for c in cells_ok])),
                t_presolve_mean=float(statistics.mean([c["t_presolve"] for c in cells_ok])),
            )
        else:
            summary = StrategySummary(
                strategy=strategy, n_instances=len(per_strategy[strategy]),
                n_errors=n_err, t_total_sgm=None, n_nodes_mean=None,
                n_iter_mean=None, t_presolve_mean=None,
            )
        summaries.append(summary)

    names = [s.strategy for s in summaries]
    ref = reference if reference in names else (names[0] if names else None)
    ref_time = next((s.t_total_sgm for s in summaries if s.strategy == ref), None)
    if ref_time is not None:
        for s in summaries:
            if s.t_total_sgm:
                s.speedup = ref_time / s.t_total_sgm
    return summaries


def _csv_value(v):
    return "" if v is None else v


def runs_csv_text(runs: list[BenchRun]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RUN_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for run in sorted(runs, key=lambda r: (r.record.instance, r.record.strategy, r.repeat)):
        rec = run.record
        writer.writerow(
            {
                "instance": rec.instance,
                "strategy": rec.strategy,
                "repeat": run.repeat,
                "status": rec.status,
                "t_total": _csv_value(rec.t_total),
                "n_nodes": _csv_value(rec.n_nodes),
                "n_iter": _csv_value(rec.n_iter),
                "t_presolve": _csv_value(rec.t_presolve),
                "seed": rec.seed,
                "solver": rec.solver,
                "perm_digest": rec.perm_digest,
                "wall_s": _csv_value(rec.wall_s),
                "shots_budget_s": _csv_value(run.shots_budget_s),
            }
        )
    return buf.getvalue()


def summary_csv_text(summaries: list[StrategySummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["strategy", "n_instances", "n_errors", "time_sgm_s", "nodes_mean",
         "iterations_mean", "presolve_mean_s", "speedup"]
    )
    for s in summaries:
        writer.writerow(
            [s.strategy, s.n_instances, s.n_errors, _csv_value(s.t_total_sgm),
             _csv_value(s.n_nodes_mean), _csv_value(s.n_iter_mean),
             _csv_value(s.t_presolve_mean), _csv_value(s.speedup)]
        )
    return buf.getvalue()


def summary_json_text(summaries: list[StrategySummary]) -> str:
    payload = [
        {
            "strategy": s.strategy,
            "n_instances": s.n_instances,
            "n_errors": s.n_errors,
            "time_sgm_s": s.t_total_sgm,
            "nodes_mean": s.n_nodes_mean,
            "iterations_mean": s.n_iter_mean,
            "presolve_mean_s": s.t_presolve_mean,
            "speedup": s.speedup,
        }
        for s in summaries
    ]
    return json.dumps(payload, indent=2, sort_keys=True)


def render_table(summaries: list[StrategySummary]) -> str:
    """Plain-text strategy comparison: Time / Nodes / Iterations / Presolve."""

    def fmt(v, digits=2):
        return "-" if v is None else f"{v:.{digits}f}"

    header = f"{'Method':<14} {'Time':>10} {'Nodes':>12} {'Iterations':>14} {'Presolve':>10} {'Speedup':>9}"
    rows = [header, "-" * len(header)]
    for s in summaries:
        rows.append(
            f"{s.strategy:<14} {fmt(s.t_total_sgm):>10} {fmt(s.n_nodes_mean):>12} "
            f"{fmt(s.n_iter_mean):>14} {fmt(s.t_presolve_mean, 4):>10} {fmt(s.speedup):>9}"
        )
    return "\n".join(rows) + "\n"


def fig_strategy_times(summaries: list[StrategySummary], path) -> None:
    """Bar chart of the per-strategy aggregate time, rendered to file."""
    names = [s.strategy for s in summaries]
    times = [s.t_total_sgm if s.t_total_sgm is not None else 0.0 for s in summaries]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(names)), 3.2))
    ax.bar(names, times, color="#4878a8")
    ax.set_ylabel(f"time, shifted geo-mean (s, shift {TIME_SHIFT_S:g})")
    ax.set_xlabel("strategy")
    for i, t in enumerate(times):
        ax.text(i, t, f"{t:.2f}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_perturbation(result: PerturbationResult, path) -> None:
    """Histogram of solve times under random row permutations."""
    times = [r.t_total for r in result.records if r.status != ERROR]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    if times:
        ax.hist(times, bins=min(20, max(5, len(times) // 5)), color="#4878a8", edgecolor="white")
        ax.axvline(result.mean, color="#b04a4a", linestyle="--", linewidth=1.2)
        ax.set_title(
            f"mean {result.mean:.2f}s  stdev {result.stdev:.2f}s  cv {100 * result.cv:.1f}%",
            fontsize=9,
        )
    ax.set_xlabel("solve time (s)")
    ax.set_ylabel("runs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fig_training_curve(log: list[dict], path) -> None:
    """Loss and positive/negative log-likelihood trajectories over epochs."""
    if not log:
        return
    epochs = [e["epoch"] for e in log]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    ax1.plot(epochs, [e["mean_loss"] for e in log], color="#4878a8")
    if any(e.get("val_loss") is not None for e in log):
        ax1.plot(epochs, [e.get("val_loss") for e in log], color="#b04a4a", label="validation")
        ax1.legend(fontsize=8)
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("contrastive loss")
    pos = [e["mean_pos_logprob"] for e in log]
    neg = [e["mean_neg_logprob"] for e in log]
    if any(v is not None for v in pos):
        ax2.plot(epochs, pos, color="#4a8a56", label="positive")
    if any(v is not None for v in neg):
        ax2.plot(epochs, neg, color="#b04a4a", label="negative")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("mean log-probability")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_benchmark_report(runs: list[BenchRun], out_dir, reference: str = "none") -> dict:
    """Write runs.csv, summary.csv/.json, table.txt, and figures under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = aggregate(runs, reference=reference)

    (out / "runs.csv").write_text(runs_csv_text(runs))
    (out / "summary.csv").write_text(summary_csv_text(summaries))
    (out / "summary.json").write_text(summary_json_text(summaries))
    table = render_table(summaries)
    (out / "table.txt").write_text(table)
    fig_strategy_times(summaries, out / "times_by_strategy.png")
    return {
        "summaries": summaries,
        "table": table,
        "n_runs": len(runs),
        "n_errors": sum(1 for r in runs if r.record.status == ERROR),
    }


def write_perturbation_report(result: PerturbationResult, out_dir) -> None:
    """CSV of raw records, JSON stats, and the variability histogram."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "perm_digest", "status", "t_total", "n_nodes",
                     "n_iter", "t_presolve", "seed"])
    for rec in result.records:
        writer.writerow([rec.instance, rec.perm_digest, rec.status,
                         _csv_value(rec.t_total), _csv_value(rec.n_nodes),
                         _csv_value(rec.n_iter), _csv_value(rec.t_presolve), rec.seed])
    (out / "perturbation_runs.csv").write_text(buf.getvalue())
    (out / "perturbation_stats.json").write_text(
        json.dumps(result.to_json(), indent=2, sort_keys=True)
    )
    fig_perturbation(result, out / "perturbation_hist.png")
