"""Matplotlib rendering for reports and single-run traces.

Kept out of the harness core: the CLI calls these to drop figure files next
to the JSON/CSV output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from inspire.harness import Report
from inspire.optimizers import RunTrace


def plot_report(report: Report, path: str) -> str:
    """Median convergence curves with interquartile bands, log-log axes."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for opt in report.spec.optimizers:
        series = report.curves[opt]
        xs, med, lo, hi = [], [], [], []
        for u, m, a, b in zip(report.units, series["median"], series["q1"], series["q3"]):
            if m is None:
                continue
            xs.append(u)
            med.append(m)
            lo.append(a)
            hi.append(b)
        if not xs:
            continue
        (line,) = ax.plot(xs, med, marker="o", markersize=3, label=opt)
        ax.fill_between(xs, lo, hi, alpha=0.15, color=line.get_color())
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("evaluation units")
    ax.set_ylabel("best criterion value (median over replicas)")
    ax.set_title(
        f"{report.spec.generator_id} / {report.spec.criterion} / {report.spec.regime}"
    )
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trace(trace: RunTrace, path: str) -> str:
    """Current and best loss of one run against spent units."""
    units = [p[0] for p in trace.points]
    current = [p[1] for p in trace.points]
    best = [p[2] for p in trace.points]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(units, current, alpha=0.4, label="current")
    ax.plot(units, best, linewidth=2, label="best")
    ax.set_xlabel("evaluation units")
    ax.set_ylabel("criterion value")
    ax.set_yscale("log")
    ax.set_title(f"{trace.optimizer_name} (seed {trace.seed})")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
