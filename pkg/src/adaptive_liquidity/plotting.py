"""Three-panel figure of a simulation run: liquidity, slippage, liability."""

from __future__ import annotations

from pathlib import Path

import numpy as np

PANEL_STYLE = {
    "figure.figsize": (8.0, 7.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "font.size": 9,
}


def _regime_spans(records):
    spans, start = [], 0
    for i in range(1, len(records) + 1):
        if i == len(records) or records[i].regime != records[start].regime:
            spans.append((records[start].regime, records[start].t, records[i - 1].t))
            start = i
    return spans


def plot_simulation(records, path, dpi: int = 150) -> Path:
    """Render the run to ``path`` (format from the suffix) and return the path."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    t = np.array([r.t for r in records])
    col = lambda name: np.array([getattr(r, name) for r in records])  # noqa: E731

    with plt.rc_context(PANEL_STYLE):
        fig, axes = plt.subplots(3, 1, sharex=True)
        ax = axes[0]
        ax.plot(t, col("b_eff"), color="k", lw=1.2, label="$b_{eff}$")
        ax.set_ylabel("effective liquidity")

        ax = axes[1]
        ax.plot(t, col("slip_low"), color="tab:red", lw=0.8, alpha=0.7, label="fixed low $b$")
        ax.plot(t, col("slip_high"), color="tab:blue", lw=0.8, alpha=0.7, label="fixed high $b$")
        ax.plot(t, col("slip_mix"), color="k", lw=1.0, label="adaptive")
        ax.set_yscale("symlog", linthresh=1e-4)
        ax.set_ylabel("slippage")

        ax = axes[2]
        ax.plot(t, col("liab_low"), color="tab:red", lw=0.8, alpha=0.7, label="fixed low $b$")
        ax.plot(t, col("liab_high"), color="tab:blue", lw=0.8, alpha=0.7, label="fixed high $b$")
        ax.plot(t, col("liab_mix"), color="k", lw=1.0, label="adaptive")
        ax.set_ylabel("liability")
        ax.set_xlabel("round")

        for label, a, b in _regime_spans(records):
            for ax in axes:
                if label.startswith("T"):
                    ax.axvspan(a, b, color="0.85", lw=0)
            axes[0].text((a + b) / 2, 1.02, label, transform=axes[0].get_xaxis_transform(),
                         ha="center", va="bottom", fontsize=7)
        for ax in axes:
            ax.legend(loc="upper right", frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
    return path
