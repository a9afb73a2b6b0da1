"""Figure and CSV rendering for training logs and evaluation reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import EvalReport, read_trace


def read_training_log(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def training_curve_csv(records: list[dict], out_csv: str | Path) -> Path:
    out_csv = Path(out_csv)
    fields = [
        "update",
        "samples_so_far",
        "mean_episode_reward",
        "mean_episode_length",
        "episodes_completed",
        "policy_loss",
        "value_loss",
        "entropy",
        "clip_fraction",
        "lr",
    ]
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(records)
    return out_csv


def training_curve_figure(records: list[dict], out_png: str | Path) -> Path:
    out_png = Path(out_png)
    samples = [r["samples_so_far"] for r in records]
    rewards = [r["mean_episode_reward"] for r in records]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(samples, rewards, lw=1.2)
    ax1.set_ylabel("mean total reward / episode")
    ax1.set_title("Training curve")
    ax1.grid(alpha=0.3)
    ax2.plot(samples, [r["entropy"] for r in records], lw=1.0, label="entropy")
    ax2.set_ylabel("policy entropy (nats)")
    ax2.set_xlabel("environment samples")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png


def eval_metrics_csv(report: EvalReport, out_csv: str | Path) -> Path:
    out_csv = Path(out_csv)
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "seed", "total_reward"])
        for i, (seed, r) in enumerate(zip(report.seeds, report.episode_rewards)):
            writer.writerow([i, seed, r])
        writer.writerow([])
        writer.writerow(["metric", "value"])
        writer.writerow(["policy", report.policy])
        writer.writerow(["mean_episode_reward", report.mean_episode_reward])
        writer.writerow(["std_episode_reward", report.std_episode_reward])
        writer.writerow(["mean_belief_distance_per_step", report.mean_belief_distance_per_step])
        writer.writerow(["mean_highlights_per_step", report.mean_highlights_per_step])
        writer.writerow(["detection_events", report.detection["events"]])
        writer.writerow(["detection_detected", report.detection["detected"]])
        writer.writerow(["detection_mean_latency_steps", report.detection["mean_latency_steps"]])
        writer.writerow(["highlight_clear_rate", report.highlight_clearing["clear_rate"]])
    return out_csv


def eval_report_figure(
    report: EvalReport, out_png: str | Path, trace_dir: str | Path | None = None
) -> Path:
    """Per-episode rewards plus, when a trace exists, one episode timeline."""
    out_png = Path(out_png)
    has_trace = bool(report.trace_paths) and trace_dir is not None
    fig, axes = plt.subplots(2 if has_trace else 1, 1, figsize=(7, 6 if has_trace else 3.2))
    ax0 = axes[0] if has_trace else axes
    ax0.plot(report.episode_rewards, marker="o", ms=3, lw=0.8)
    ax0.axhline(report.mean_episode_reward, color="tab:red", lw=1, ls="--", label="mean")
    ax0.set_xlabel("episode")
    ax0.set_ylabel("total reward")
    ax0.set_title(f"{report.policy} on {report.scenario or 'scenario'}")
    ax0.legend()
    ax0.grid(alpha=0.3)
    if has_trace:
        _, steps = read_trace(Path(trace_dir) / report.trace_paths[0])
        t = [rec["t"] for rec in steps]
        n_hl = [sum(rec["s_hlt"]) for rec in steps]
        err = [
            float(np.sum(np.abs(np.array(rec["s_att"]) - np.array(rec["s_usr"]))))
            for rec in steps
        ]
        ax1 = axes[1]
        ax1.plot(t, err, lw=1.0, label="unweighted belief error")
        ax1.set_ylabel("sum |truth - belief|")
        ax1.set_xlabel("time (s)")
        ax1b = ax1.twinx()
        ax1b.step(t, n_hl, color="tab:orange", lw=0.9, label="highlights")
        ax1b.set_ylabel("active highlights")
        ax1.set_title("first episode timeline")
        ax1.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png
