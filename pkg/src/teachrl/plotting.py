"""Aggregate run metrics into a CSV summary and an SVG learning-curve figure.

Runs are grouped by teacher method; within a group, curves are aligned on the
evaluation steps common to all runs, then reduced to mean and population
standard deviation per step.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import numpy as np

# Stable element ids make repeated renders byte-comparable.
matplotlib.rcParams["svg.hashsalt"] = "teachrl"


class PlotError(ValueError):
    """No usable metrics rows were found."""


def read_metrics(run_dir: str | Path) -> tuple[str, np.ndarray, np.ndarray]:
    """(method, steps, success rates) from one run directory's metrics.jsonl."""
    path = Path(run_dir) / "metrics.jsonl"
    if not path.is_file():
        raise PlotError(f"no metrics.jsonl in {run_dir}")
    steps, success, methods = [], [], set()
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            steps.append(int(row["step"]))
            success.append(float(row["success_rate"]))
            methods.add(str(row["method"]))
    if not steps:
        raise PlotError(f"metrics file {path} has no rows")
    if len(methods) != 1:
        raise PlotError(f"metrics file {path} mixes methods: {sorted(methods)}")
    return methods.pop(), np.asarray(steps), np.asarray(success)


def summarize(run_dirs: list[str | Path]) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-method (steps, mean success, population std) across seeds."""
    if not run_dirs:
        raise PlotError("no run directories given")
    by_method: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {}
    for d in run_dirs:
        method, steps, success = read_metrics(d)
        by_method.setdefault(method, []).append((steps, success))
    out = {}
    for method, runs in sorted(by_method.items()):
        common = set(runs[0][0].tolist())
        for steps, _ in runs[1:]:
            common &= set(steps.tolist())
        if not common:
            raise PlotError(f"runs for method {method!r} share no evaluation steps")
        grid = np.asarray(sorted(common))
        curves = []
        for steps, success in runs:
            lookup = dict(zip(steps.tolist(), success.tolist()))
            curves.append([lookup[s] for s in grid])
        stacked = np.asarray(curves)
        mean = stacked.mean(axis=0)
        std = np.sqrt(np.mean((stacked - mean) ** 2, axis=0))
        out[method] = (grid, mean, std)
    return out


def emit_curves(run_dirs: list[str | Path], out_svg: str | Path) -> tuple[Path, Path]:
    """Write the learning-curve SVG and its CSV companion; returns (csv, svg) paths."""
    summary = summarize(run_dirs)
    out_svg = Path(out_svg)
    out_svg.parent.mkdir(parents=True, exist_ok=True)
    out_csv = out_svg.with_suffix(".csv")

    all_steps = sorted(set().union(*(set(grid.tolist()) for grid, _, _ in summary.values())))
    methods = sorted(summary)
    with out_csv.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"{m}_{col}" for m in methods for col in ("mean", "std")])
        lookups = {
            m: dict(zip(grid.tolist(), zip(mean.tolist(), std.tolist())))
            for m, (grid, mean, std) in summary.items()
        }
        for step in all_steps:
            row: list[object] = [step]
            for m in methods:
                pair = lookups[m].get(step)
                row += ["", ""] if pair is None else [f"{pair[0]:.6f}", f"{pair[1]:.6f}"]
            writer.writerow(row)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for method in methods:
        grid, mean, std = summary[method]
        (line,) = ax.plot(grid, mean, label=method, linewidth=1.8)
        ax.fill_between(grid, mean - std, mean + std, alpha=0.2, color=line.get_color())
    ax.set_xlabel("environment steps")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)
    return out_csv, out_svg
