"""Benchmark reports: delimited summary tables plus matplotlib figures."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .harness import RunResult, aggregate, pivot_accuracy, summary_csv, summary_text, text_table


def render_summary(results: Sequence[RunResult], group_by: str | None, header: Sequence[str] = (),
                   with_latency: bool = False, fmt: str = "csv") -> str:
    """Header comment lines, per-group rows and a closing overall row."""
    rows = aggregate(results, group_by) if group_by else []
    rows = rows + aggregate(results, None)
    body = summary_csv(rows, with_latency) if fmt == "csv" else summary_text(rows, with_latency)
    return "".join(f"{h}\n" for h in header) + body


def render_pivot(results: Sequence[RunResult], row_key: str = "variant", col_key: str = "platform") -> str:
    rows, cols, table = pivot_accuracy(results, row_key, col_key)
    body = [[r] + [f"{table[(r, c)]:.2f}" if (r, c) in table else "-" for c in cols] for r in rows]
    return text_table([row_key] + cols, body)


def load_results(path: str | Path) -> list[RunResult]:
    lines = Path(path).read_text("utf-8").splitlines()
    return [RunResult.from_wire(json.loads(ln)) for ln in lines if ln.strip()]


def dump_results(results: Sequence[RunResult], with_timing: bool = True) -> str:
    return "".join(json.dumps(r.to_wire(with_timing), sort_keys=True) + "\n" for r in results)


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_accuracy(results: Sequence[RunResult], group_by: str, path: str | Path) -> None:
    plt = _pyplot()
    rows = aggregate(results, group_by)
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(rows) + 2), 3.2))
    ax.bar([r.group for r in rows], [r.accuracy for r in rows], color="#4c72b0")
    ax.set_ylim(0, 105)
    ax.set_ylabel("accuracy (%)")
    ax.set_xlabel(group_by)
    for i, r in enumerate(rows):
        ax.text(i, r.accuracy + 1, f"{r.accuracy:.1f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_latency(results: Sequence[RunResult], group_by: str, path: str | Path) -> None:
    plt = _pyplot()
    rows = aggregate(results, group_by)
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(rows) + 2), 3.2))
    ax.bar(
        [r.group for r in rows],
        [r.latency_mean * 1000 for r in rows],
        yerr=[(r.latency_sd or 0.0) * 1000 for r in rows],
        color="#dd8452",
        capsize=3,
    )
    ax.set_ylabel("latency per challenge (ms)")
    ax.set_xlabel(group_by)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def write_report(results: Sequence[RunResult], out_dir: str | Path, group_by: str = "platform",
                 header: Sequence[str] = (), with_latency: bool = True) -> list[Path]:
    """Write summary.csv, summary.txt and the figures; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "summary.csv", out / "summary.txt", out / "accuracy.png"]
    paths[0].write_text(render_summary(results, group_by, header, with_latency, "csv"), "utf-8")
    paths[1].write_text(render_summary(results, group_by, header, with_latency, "text"), "utf-8")
    plot_accuracy(results, group_by, paths[2])
    if with_latency:
        paths.append(out / "latency.png")
        plot_latency(results, group_by, paths[3])
    return paths
