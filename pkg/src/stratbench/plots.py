"""Report figures rendered next to the delimited output.

Headless matplotlib only; every figure goes to a file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_profile(profile, verdict, path: str) -> str:
    """Steps-vs-parameter panel (linear and log scale) with the fitted class."""
    params = np.array(profile.params(), dtype=float)
    steps = np.array([max(s, 1) for s in profile.maxima()], dtype=float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for ax, yscale in ((ax1, "linear"), (ax2, "log")):
        ax.plot(params, steps, "o-", color="#1f6fb2", markersize=4)
        ax.set_yscale(yscale)
        ax.set_xlabel("template parameter")
        ax.set_ylabel("max observed steps")
        ax.grid(True, alpha=0.3)
    title = f"{profile.strategy} on {profile.template}"
    if verdict is not None:
        title += f" — fit: {verdict.label()} (R²={verdict.fit:.3f})"
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_ability(report, path: str) -> str:
    """Per-instance step maxima with enforcement verdict markers."""
    params = [i.param for i in report.instances]
    steps = [max(i.max_steps, 1) for i in report.instances]
    colors = {
        "enforced": "#2e8b57",
        "violated": "#c03a2b",
        "inconclusive": "#c78f00",
        "no-strategy": "#777777",
    }
    cs = [colors.get(i.enforcement, "#777777") for i in report.instances]
    fig, ax = plt.subplots(figsize=(6.5, 3.6))
    ax.bar(range(len(params)), steps, color=cs)
    ax.set_xticks(range(len(params)), [str(p) for p in params])
    ax.set_yscale("log")
    ax.set_xlabel("template parameter")
    ax.set_ylabel("max observed steps")
    growth = report.growth.label() if report.growth else "n/a"
    ax.set_title(f"{report.mode} ability: {report.verdict} (growth {growth}, bound {report.bound})")
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in colors.values()]
    ax.legend(handles, list(colors), fontsize=7, loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
