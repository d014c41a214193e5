"""Figure rendering for the report paths.

Every CLI command that writes a delimited trace or sweep also renders a
PNG next to it; the CSVs stay the machine-readable source of truth.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ErrorTrace, SweepRow


def save_trace_figure(traces: dict[str, ErrorTrace], path, title: str = "Average learning error") -> None:
    """Semilog error curves, one line per labelled trace."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, trace in traces.items():
        ax.semilogy(trace.epochs, trace.avg_error, label=label)
    ax.set_xlabel("training epoch")
    ax.set_ylabel("average learning error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(rows: list[SweepRow], path, title: str = "Learning time constant") -> None:
    """Analytic curve against measured markers over the outage-quality grid."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    capable = [r for r in rows if r.capable and math.isfinite(r.tau_measured)]
    if capable:
        xs = [r.q_delta for r in capable]
        ax.plot(xs, [r.tau_analytic for r in capable], "-o", label="analytic")
        ax.plot(xs, [r.tau_measured for r in capable], "--s", label="measured")
    incapable = [r.q_delta for r in rows if not r.capable]
    for x in incapable:
        ax.axvline(x, color="red", alpha=0.3, linestyle=":")
    ax.set_xlabel("outage-quality product q*delta")
    ax.set_ylabel("time constant (epochs)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
