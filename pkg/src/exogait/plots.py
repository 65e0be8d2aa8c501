"""Cycle-averaged gait figures as deterministic SVG files.

Figures show the mean curve with a +/- one-standard-deviation band over
0..100% of the gait cycle, with stance shading.  Output bytes are
reproducible for identical inputs: fixed hash salt, no timestamps.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .reflex import MUSCLE_ORDER, GaitPhase  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "exogait"

_PCT = list(range(101))


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _stance_shading(ax, curves):
    ph = curves.get("phase_r")
    if ph is None:
        return
    in_stance = ph["mean"] <= int(GaitPhase.LIFTOFF) + 0.5
    start = None
    for i, s in enumerate(in_stance):
        if s and start is None:
            start = i
        elif not s and start is not None:
            ax.axvspan(start, i, color="0.9", zorder=0)
            start = None
    if start is not None:
        ax.axvspan(start, 100, color="0.9", zorder=0)


def _band(ax, curves, name, label=None, color=None):
    c = curves[name]
    ax.plot(_PCT, c["mean"], label=label or name, color=color)
    ax.fill_between(_PCT, c["mean"] - c["std"], c["mean"] + c["std"],
                    alpha=0.25, color=color, linewidth=0)


def plot_activations(curves, path):
    fig, axes = plt.subplots(1, 7, figsize=(16, 2.6), sharex=True, sharey=True)
    for ax, m in zip(axes, MUSCLE_ORDER):
        if curves:
            _stance_shading(ax, curves)
            _band(ax, curves, f"act_r_{m.lower()}", label=m, color="C0")
        ax.set_title(m)
        ax.set_xlim(0, 100)
        ax.set_ylim(0, 1)
        ax.set_xlabel("% gait cycle")
    axes[0].set_ylabel("activation")
    fig.tight_layout()
    _save(fig, path)


def plot_joint_angles(curves, path):
    fig, axes = plt.subplots(1, 3, figsize=(9, 2.8), sharex=True)
    names = [("q_q_rh", "hip"), ("q_q_rk", "knee"), ("q_q_ra", "ankle")]
    for ax, (col, label) in zip(axes, names):
        if curves:
            _stance_shading(ax, curves)
            _band(ax, curves, col, label=label, color="C1")
        ax.set_title(label)
        ax.set_xlim(0, 100)
        ax.set_xlabel("% gait cycle")
    axes[0].set_ylabel("angle (rad)")
    fig.tight_layout()
    _save(fig, path)


def plot_grf(curves, path):
    fig, ax = plt.subplots(figsize=(4.5, 2.8))
    if curves:
        _stance_shading(ax, curves)
        _band(ax, curves, "grf_r_n", label="right", color="darkgreen")
        _band(ax, curves, "grf_l_n", label="left", color="lightgreen")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlim(0, 100)
    ax.set_xlabel("% gait cycle")
    ax.set_ylabel("normal GRF (N)")
    fig.tight_layout()
    _save(fig, path)


def plot_torques(curves, path):
    fig, axes = plt.subplots(1, 3, figsize=(9, 2.8), sharex=True)
    names = [("tau_r_hip", "hip"), ("tau_r_knee", "knee"), ("tau_r_ankle", "ankle")]
    for ax, (col, label) in zip(axes, names):
        if curves:
            _stance_shading(ax, curves)
            _band(ax, curves, col, label=label, color="C3")
        ax.set_title(label)
        ax.set_xlim(0, 100)
        ax.set_xlabel("% gait cycle")
    axes[0].set_ylabel("torque (N m)")
    fig.tight_layout()
    _save(fig, path)


def emit_plots(metrics, out_dir):
    """Write the standard figure set; empty figures when no cycles exist."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = metrics.get("cycle_curves", {}) if metrics.get("available") else {}
    files = {
        "activations": out / "activations.svg",
        "joint_angles": out / "joint_angles.svg",
        "grf": out / "grf.svg",
        "torques": out / "torques.svg",
    }
    plot_activations(curves, files["activations"])
    plot_joint_angles(curves, files["joint_angles"])
    plot_grf(curves, files["grf"])
    plot_torques(curves, files["torques"])
    return files
