"""Figures for flow reports. Uses the Agg backend; nothing is shown on screen."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1) / 2


def new_figure(width=6.0, nrows=1, ncols=1):
    fig, ax = plt.subplots(nrows, ncols, figsize=(width, width * GOLDEN * nrows / ncols * 1.2))
    return fig, ax


def plot_flow(traj, path, title=None):
    """Energy, curvature deviation and radii against time, in one PNG."""
    t = traj.times
    energy = traj.energies
    dev = np.abs(traj.K - traj.target).max(axis=1)
    r = np.array([s.r for s in traj.samples])

    fig, (ax_e, ax_r) = new_figure(7.0, nrows=2)
    positive = energy > 0
    ax_e.semilogy(t[positive], energy[positive], label="energy")
    ax_e.semilogy(t[dev > 0], dev[dev > 0], "--", label=r"$\max_i |K_i - \bar K_i|$")
    if traj.fitted_rate is not None and positive.any():
        n_tail = max(3, int(len(t) * 0.25))
        tt = t[-n_tail:]
        anchor = energy[-n_tail] if energy[-n_tail] > 0 else energy[positive][-1]
        ax_e.semilogy(tt, anchor * np.exp(traj.fitted_rate * (tt - tt[0])), ":", color="k",
                      label=f"tail slope {traj.fitted_rate:.3g}")
    ax_e.set_ylabel("energy / residual")
    ax_e.legend(frameon=False, fontsize=8)
    ax_e.set_title(title or f"flow: {traj.termination.value}")

    ax_r.plot(t, r, lw=0.8)
    ax_r.set_xlabel("t")
    ax_r.set_ylabel("radii")
    for ax in (ax_e, ax_r):
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_probe(report, path):
    fig, ax = new_figure(6.0)
    for row in report.values:
        ax.plot(report.radii, row, lw=0.9)
    ax.set_xlabel("distance from base point")
    ax.set_ylabel("Ricci potential")
    ax.set_title("potential along rays")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
