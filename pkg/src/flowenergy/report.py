"""Result files: CSV/JSON tables and the figures rendered alongside them."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .engine import Trajectory, _server_power
from .harness import CSV_COLUMNS, RatioRecord, StochasticResult, SweepResult
from .potential import DriftReport


def write_ratio_csv(records: list[RatioRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(v) for v in rec.to_row()])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_json(doc, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _fig_path(out_path, suffix: str) -> Path:
    out = Path(out_path)
    return out.with_name(out.stem + suffix + ".png")


def plot_sweep(result: SweepResult, out_path) -> Path:
    """Log-log ratio-vs-m plot with the fitted growth exponent."""
    ms = [r.m for r in result.records]
    ratios = [r.ratio for r in result.records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(ms, ratios, "o-", label=f"{result.family} ratio")
    if result.slope is not None:
        xs = np.array(ms, dtype=float)
        fit = ratios[0] * (xs / ms[0]) ** result.slope
        ax.loglog(xs, fit, "--", label=f"fitted slope {result.slope:.3f}")
    ax.set_xlabel("servers m")
    ax.set_ylabel("greedy / alternative cost ratio")
    ax.set_title(f"{result.family}, alpha={result.alpha}, w=m^{result.d}")
    ax.legend()
    fig.tight_layout()
    path = _fig_path(out_path, "_sweep")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_drift(reports: list[DriftReport], out_path) -> Path:
    """Per-sample cost-rate-plus-drift against the comparator bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for rep in reports[:8]:
        if not rep.sample_times:
            continue
        slack = np.array(rep.rhs) - np.array(rep.lhs)
        ax.plot(rep.sample_times, slack, ".", ms=3, alpha=0.7)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("time")
    ax.set_ylabel("drift slack (bound - measured)")
    ax.set_title("drift inequality slack at sample times")
    fig.tight_layout()
    path = _fig_path(out_path, "_drift")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_stochastic(result: StochasticResult, out_path) -> Path:
    """Measured cost rate vs the analytic prediction and lower bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = ["measured", "predicted", "lower bound"]
    values = [result.measured_cost_rate, result.predicted_cost_rate, result.lower_bound]
    bars = ax.bar(labels, values, color=["C0", "C1", "C2"])
    if result.std_error != float("inf"):
        ax.errorbar([0], [result.measured_cost_rate], yerr=[3 * result.std_error], fmt="none", ecolor="k", capsize=4)
    ax.bar_label(bars, fmt="%.4g")
    ax.set_ylabel("cost rate")
    ax.set_title(f"gated static, load={result.load:.3g}, m={result.m}, s*={result.gated_speed:.4g}")
    fig.tight_layout()
    path = _fig_path(out_path, "_stochastic")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trajectory(traj: Trajectory, out_path) -> Path:
    """Step plots of the unfinished-job count and total power over time."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ts, ns, ps = [], [], []
    for seg in traj.segments:
        ts.extend([seg.start, seg.end])
        ns.extend([len(seg.remaining)] * 2)
        p = _server_power(traj.power, seg.speeds, seg.servers)
        ps.extend([p] * 2)
    ax1.plot(ts, ns, drawstyle="steps-post")
    ax1.set_ylabel("jobs in system")
    ax2.plot(ts, ps, drawstyle="steps-post", color="C1")
    ax2.set_ylabel("total power")
    ax2.set_xlabel("time")
    fig.tight_layout()
    path = _fig_path(out_path, "_trajectory")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
