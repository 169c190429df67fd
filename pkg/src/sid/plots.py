"""Figure rendering for simulation reports and parameter sweeps.

Uses the Agg backend so figures render in headless environments. Each
renderer writes one PNG next to the delimited output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .simulation import MonteCarloReport, SweepResult

__all__ = ["render_report_figure", "render_sweep_figure"]


def render_report_figure(report: MonteCarloReport, path) -> None:
    """Grouped bar chart of rejection rates, one group per method."""
    methods = list(report.methods)
    alphas = list(report.alphas)
    width = 0.8 / len(alphas)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.5 * len(methods) + 2.0), 3.5))
    for ai, alpha in enumerate(alphas):
        xs = [mi + ai * width for mi in range(len(methods))]
        ys = [report.rate(m, alpha) for m in methods]
        ax.bar(xs, ys, width=width, label=f"alpha={alpha:g}")
        ax.axhline(alpha, color="gray", linewidth=0.6, linestyle=":")
    ax.set_xticks([mi + 0.4 - width / 2 for mi in range(len(methods))])
    ax.set_xticklabels(methods, rotation=20, ha="right")
    ax.set_ylabel("rejection rate")
    ax.set_ylim(0.0, 1.0)
    spec = report.spec
    ax.set_title(f"{spec.scenario}  n={spec.n}  reps={report.reps}")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_sweep_figure(sweep: SweepResult, path) -> None:
    """Rejection-rate curves along the sweep grid.

    For a beta sweep every grid point carries its own single method, so the
    curves are indexed by alpha alone; otherwise one curve per method and
    alpha.
    """
    xs = list(sweep.values)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    first = sweep.reports[0]
    if sweep.param == "beta":
        for alpha in first.alphas:
            ys = [r.rate(r.methods[0], alpha) for r in sweep.reports]
            ax.plot(xs, ys, marker="o", label=f"alpha={alpha:g}")
    else:
        for method in first.methods:
            for alpha in first.alphas:
                ys = [r.rate(method, alpha) for r in sweep.reports]
                label = method if len(first.alphas) == 1 else f"{method} @ {alpha:g}"
                ax.plot(xs, ys, marker="o", label=label)
    for alpha in first.alphas:
        ax.axhline(alpha, color="gray", linewidth=0.6, linestyle=":")
    ax.set_xlabel(sweep.param)
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{sweep.base.scenario}: sweep over {sweep.param}")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
