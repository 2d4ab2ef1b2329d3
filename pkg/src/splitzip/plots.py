"""Figure rendering for CLI reports.

Each helper takes already-computed rows and writes one PNG/PDF/SVG next to
the delimited output; nothing here recomputes results. matplotlib runs on the
Agg backend so figures render identically in headless environments.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "save_ablation_figure",
    "save_sweep_figure",
    "save_breakdown_figure",
    "save_coverage_figure",
]

_DPI = 150


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_ablation_figure(reports, path: str) -> str:
    """Bar chart of compression ratio per variant, escape rate annotated."""
    labels = [r.variant for r in reports]
    ratios = [r.ratio_payload for r in reports]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels) + 1.5), 3.4))
    bars = ax.bar(labels, ratios, color="#4878d0")
    ax.axhline(1.0, color="0.4", lw=0.8, ls="--")
    for bar, report in zip(bars, reports):
        ax.annotate(f"{report.ratio_payload:.3f}\n(esc {report.escape_rate:.2%})",
                    (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.set_ylabel("compression ratio (payload)")
    ax.set_ylim(0, max(ratios) * 1.25)
    ax.tick_params(axis="x", rotation=20)
    return _finish(fig, path)


def save_sweep_figure(rows, path: str) -> str:
    """Native vs. compressed transfer time across the sweep, per batch size."""
    fig, (ax_t, ax_s) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    batches = sorted({r.batch for r in rows})
    for batch in batches:
        pts = [r for r in rows if r.batch == batch]
        seqs = [r.seq_len for r in pts]
        ax_t.plot(seqs, [r.native_ms for r in pts], "o--", ms=3,
                  label=f"native b={batch}")
        ax_t.plot(seqs, [r.compressed_ms for r in pts], "s-", ms=3,
                  label=f"compressed b={batch}")
        ax_s.plot(seqs, [r.speedup for r in pts], "s-", ms=3, label=f"b={batch}")
    for ax in (ax_t, ax_s):
        ax.set_xscale("log", base=2)
        ax.set_xlabel("sequence length")
        ax.legend(fontsize=7)
    ax_t.set_yscale("log")
    ax_t.set_ylabel("transfer time (ms)")
    ax_s.set_ylabel("speedup")
    return _finish(fig, path)


def save_breakdown_figure(breakdown, path: str) -> str:
    """Stacked compressed-path bar next to the native bar, in ms."""
    fig, ax = plt.subplots(figsize=(5.2, 2.8))
    stages = [("encode", breakdown.t_enc, "#d65f5f"),
              ("transfer", breakdown.t_xfer, "#4878d0"),
              ("decode", breakdown.t_dec, "#6acc64")]
    left = 0.0
    for name, t, color in stages:
        ax.barh(["compressed"], [t * 1e3], left=left, color=color, label=name)
        left += t * 1e3
    ax.barh(["native"], [breakdown.t_native * 1e3], color="0.6")
    ax.set_xlabel("time (ms)")
    ax.legend(fontsize=8, loc="lower right")
    ax.set_title(f"speedup {breakdown.speedup:.3f}x", fontsize=9)
    return _finish(fig, path)


def save_coverage_figure(coverages, group_size: int, path: str) -> str:
    """Histogram of per-group codebook coverage."""
    cov = np.asarray(coverages, dtype=float)
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    lo = min(0.98, float(cov.min()) - 0.002) if cov.size else 0.98
    ax.hist(cov, bins=np.linspace(lo, 1.0, 41), color="#4878d0")
    ax.set_xlabel(f"coverage per {group_size}-element group")
    ax.set_ylabel("groups")
    ax.axvline(cov.mean(), color="#d65f5f", lw=1.0,
               label=f"mean {cov.mean():.4f}")
    ax.legend(fontsize=8)
    return _finish(fig, path)
