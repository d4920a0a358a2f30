"""Figure rendering for the report paths.

All figures go to SVG next to the delimited output.  Rendering is
deterministic: fixed hash salt, no embedded dates.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "fracbubble"

_SAVE_KW = {"metadata": {"Date": None}, "bbox_inches": "tight"}


def rate_plot(report, path) -> None:
    """Log-log sweep values with the fitted power law."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    x = np.asarray(report.values)
    y = np.asarray(report.subtracted)
    ax.loglog(x, y, "o", label="measured")
    ref = y[-1] * (x / x[-1]) ** report.slope
    ax.loglog(x, ref, "-", label=f"slope {report.slope:.3f} (expect {report.expected:.3g})")
    ax.set_xlabel(report.variable)
    ax.set_ylabel("baseline-subtracted value")
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def capacity_plot(report, path) -> None:
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.semilogx(report.thetas, report.products, "o-")
    ax.set_xlabel("theta")
    ax.set_ylabel("seminorm^2 x |log theta|")
    ax.set_title(f"variation {report.variation:.3f}", fontsize=9)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def field_heatmap(field, path, title: str = "") -> None:
    """2D heatmap, or the middle slice for 3D fields."""
    vals = field.values
    if field.grid.dim == 3:
        vals = vals[:, :, vals.shape[2] // 2]
    if field.grid.dim == 1:
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        ax.plot(field.grid.axes()[0], vals)
        ax.set_xlabel("x")
    else:
        fig, ax = plt.subplots(figsize=(4.0, 3.6))
        ax0, ax1 = field.grid.axes()[0], field.grid.axes()[1]
        im = ax.imshow(
            vals.T,
            origin="lower",
            extent=(ax0[0], ax0[-1], ax1[0], ax1[-1]),
            cmap="viridis",
        )
        fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title, fontsize=9)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def sphere_map_plot(result, path) -> None:
    """Sample points versus their normalized barycenters."""
    pts = np.asarray(result.sample_points)
    bets = np.asarray(result.barycenters)
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    if pts.shape[1] == 2:
        ax.plot(pts[:, 0], pts[:, 1], "o", ms=4, label="centers z")
        norm = bets / np.linalg.norm(bets, axis=1)[:, None] * result.radius
        ax.plot(norm[:, 0], norm[:, 1], "x", ms=4, label="R beta-bar")
        for a, b in zip(pts, norm):
            ax.plot([a[0], b[0]], [a[1], b[1]], "-", color="gray", lw=0.5)
        ax.set_aspect("equal")
        ax.legend(fontsize=8)
        ax.set_title(f"degree {result.degree}", fontsize=9)
    else:
        ax.plot(np.linalg.norm(bets, axis=1), "o", ms=3)
        ax.set_ylabel("|beta|")
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def borderline_plot(reports, path) -> None:
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    eps = [r.eps for r in reports]
    ax.plot(eps, [r.slack_energy for r in reports], "o-", label="energy slack")
    ax.plot(eps, [r.slack_mass for r in reports], "s-", label="mass slack")
    ax.axhline(
        reports[0].tolerance * reports[0].mass_at_minimum,
        color="k",
        ls="--",
        lw=0.8,
        label="allowance",
    )
    ax.set_xlabel("eps")
    ax.set_ylabel("slack")
    ax.legend(fontsize=8)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
