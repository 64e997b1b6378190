"""Report figures written next to the CSV outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIG_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def threshold_boxplots(evaluations, thresholds, age_path, rmse_path):
    """Box plots of feature age and reprojection RMSE for the tracks kept at each threshold."""
    groups = []
    for th in thresholds:
        kept = [e for e in evaluations if not e.degenerate and np.isfinite(e.rmse) and e.rmse <= th]
        groups.append(kept)
    labels = [f"<= {th:g} px" for th in thresholds]

    for attr, ylabel, path in (("feature_age", "feature age (s)", age_path),
                               ("rmse", "reprojection RMSE (px)", rmse_path)):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.boxplot([[getattr(e, attr) for e in g] or [np.nan] for g in groups])
        ax.set_xticks(range(1, len(labels) + 1), labels)
        ax.set_ylabel(ylabel)
        ax.set_xlabel("reprojection threshold")
        _finish(fig, path)
    return age_path, rmse_path


def track_overview(tracks, path, width=None, height=None):
    """Image-plane paths of all tracks, coloured by chain."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    cmap = plt.get_cmap("tab20")
    for i, tr in enumerate(tracks):
        ax.plot(tr.x, tr.y, lw=0.8, color=cmap(i % 20))
    if width and height:
        ax.set_xlim(0, width)
        ax.set_ylim(height, 0)
    else:
        ax.invert_yaxis()
    ax.set_aspect("equal")
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    ax.set_title(f"{len(tracks)} tracks")
    return _finish(fig, path)
