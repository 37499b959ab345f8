"""Figure rendering for scenario runs and stability reports.

All figures are written to files (Agg backend); nothing opens a window.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .integrator import Trajectory
from .model import ModelParams, TherapyEfficacies
from .scenarios import StabilityReport

__all__ = ["save_trajectory_figure", "save_stability_figure"]


def save_trajectory_figure(traj: Trajectory, path) -> Path:
    """Two-panel figure: log10 total viral load, and the two cell pools."""
    path = Path(path)
    t = traj.times
    vtot = traj.states[:, 2] + traj.states[:, 3]
    with np.errstate(divide="ignore"):
        logv = np.log10(np.where(vtot > 0, vtot, np.nan))

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(t, logv, color="tab:red")
    ax1.axhline(math.log10(100.0), color="gray", ls="--", lw=0.8,
                label="detection limit")
    ax1.set_ylabel(r"$\log_{10}$ viral load (copies/ml)")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(t, traj.states[:, 0], color="tab:blue", label="uninfected T")
    ax2.plot(t, traj.states[:, 1], color="tab:orange", label="infected I")
    ax2.set_xlabel("t (days)")
    ax2.set_ylabel("cells/ml")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_stability_figure(
    p: ModelParams, eff: TherapyEfficacies, rep: StabilityReport, path
) -> Path:
    """Frequency-polynomial panel plus the critical-delay ladder.

    Only meaningful when the endemic point exists; for R0 <= 1 the figure
    carries a single annotation panel.
    """
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))

    if rep.r0 <= 1.0 or not rep.omega_roots:
        ax1.text(0.5, 0.5, f"R0 = {rep.r0:.3f}\nno endemic frequency analysis",
                 ha="center", va="center", transform=ax1.transAxes)
        ax1.set_axis_off()
    else:
        from .stability import char_coefficients

        cc = char_coefficients(p, eff)
        A1 = cc.a0**2 - 2 * cc.a1
        A2 = cc.a1**2 - cc.b1**2 - 2 * cc.a0 * cc.a2
        A3 = cc.a2**2 - cc.b2**2
        wmax = 1.6 * max(rep.omega_roots)
        w = np.linspace(0.0, wmax, 400)
        h = w**6 + A1 * w**4 + A2 * w**2 + A3
        ax1.plot(w, h, color="tab:blue")
        ax1.axhline(0.0, color="k", lw=0.6)
        for wr in rep.omega_roots:
            ax1.axvline(wr, color="tab:red", ls=":", lw=0.9)
        ax1.set_xlabel(r"$\omega$ (rad/day)")
        ax1.set_ylabel(r"$h(\omega)$")
        ax1.set_title("frequency polynomial")

    if rep.tau_ladder:
        ax2.stem(list(rep.tau_ladder), [1.0] * len(rep.tau_ladder))
        ax2.set_xlabel(r"$\tau$ (days)")
        ax2.set_yticks([])
        ax2.set_title(
            rf"critical delays, $\tau_0$ = {rep.tau_ladder[0]:.3f} d"
        )
        if rep.tau_plus:
            ax2.axvline(rep.tau_plus, color="tab:green", ls="--", lw=0.9,
                        label=r"$\tau_+$ bound")
            ax2.legend(loc="best", fontsize=8)
    else:
        ax2.text(0.5, 0.5, "no critical delays", ha="center", va="center",
                 transform=ax2.transAxes)
        ax2.set_axis_off()

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
