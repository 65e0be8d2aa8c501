"""Gait-cycle segmentation and stride metrics.

A gait cycle runs between consecutive right-heel strikes (entries into early
stance).  Metrics use complete cycles only, so trailing partial data (for
example rows after a fall) cannot change them.  Cycle curves are resampled
to 101 points (0..100% of the cycle) for averaging and correlation.
"""

from __future__ import annotations

import numpy as np

from .harness import LOG_COLUMNS, RolloutResult
from .plant import BodyParams, contact_points
from .reflex import MUSCLE_ORDER, GaitPhase

CYCLE_SAMPLES = 101


def heel_strike_indices(phase_series):
    """Row indices where a leg re-enters early stance (heel strike)."""
    ph = np.asarray(phase_series)
    strikes = []
    for i in range(1, len(ph)):
        if ph[i] == int(GaitPhase.EARLY_STANCE) and ph[i - 1] == int(GaitPhase.LANDING):
            strikes.append(i)
    return strikes


def resample_cycle(series, i0, i1, n=CYCLE_SAMPLES):
    """One cycle of `series` resampled to n points over [i0, i1]."""
    x_old = np.linspace(0.0, 1.0, i1 - i0 + 1)
    x_new = np.linspace(0.0, 1.0, n)
    return np.interp(x_new, x_old, np.asarray(series[i0:i1 + 1], dtype=float))


def curve_correlation(curve_a, curve_b):
    """Pearson correlation of two equal-length sampled curves.

    Returns None when either curve has zero variance (undefined).
    """
    a = np.asarray(curve_a, float)
    b = np.asarray(curve_b, float)
    if a.shape != b.shape:
        raise ValueError("curves must have equal length")
    if np.std(a) == 0.0 or np.std(b) == 0.0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def _right_heel_x(log, body: BodyParams):
    xs = np.empty(log.shape[0])
    for i in range(log.shape[0]):
        q = log[i, 1:12]
        pos, _, _ = contact_points(q, np.zeros(11), body)
        xs[i] = pos[0, 0]
    return xs


def gait_metrics(log, body: BodyParams, dt_sim, fell=False):
    """Stride metrics plus cycle-normalized average curves.

    Needs at least two right-heel strikes; otherwise metrics are flagged
    unavailable.
    """
    phase_r = log[:, LOG_COLUMNS.index("phase_r")]
    strikes = heel_strike_indices(phase_r)
    out = {"available": len(strikes) >= 2, "fell": bool(fell),
           "cycle_count": max(0, len(strikes) - 1)}
    if log.shape[0] >= 2:
        x_ub = log[:, LOG_COLUMNS.index("q_x_ub")]
        t = log[:, LOG_COLUMNS.index("t")]
        out["mean_speed_mps"] = float((x_ub[-1] - x_ub[0]) / max(t[-1] - t[0], dt_sim))
    if not out["available"]:
        return out

    heel_x = _right_heel_x(log, body)
    stride_lengths = np.diff([heel_x[i] for i in strikes])
    cycle_durations = np.diff([i * dt_sim for i in strikes])
    out["stride_length_m"] = float(np.mean(stride_lengths))
    out["stride_length_std_m"] = float(np.std(stride_lengths))
    out["cycle_duration_s"] = float(np.mean(cycle_durations))
    # reported as steps per minute (two steps per gait cycle); the source
    # material leaves the unit unstated
    out["step_frequency_spm"] = float(2.0 * 60.0 / np.mean(cycle_durations))

    peaks = {}
    curves = {}
    channels = {f"act_{s}_{m.lower()}": None for s in ("r", "l") for m in MUSCLE_ORDER}
    extra = ["q_q_rh", "q_q_rk", "q_q_ra", "q_q_lh", "q_q_lk", "q_q_la",
             "tau_r_hip", "tau_r_knee", "tau_r_ankle", "met_rate_w"]
    grf_cols = {"grf_r_n": ("grf_r_heel_n", "grf_r_toe_n"),
                "grf_l_n": ("grf_l_heel_n", "grf_l_toe_n")}
    for name in list(channels) + extra:
        col = log[:, LOG_COLUMNS.index(name)]
        cyc = np.array([resample_cycle(col, strikes[k], strikes[k + 1])
                        for k in range(len(strikes) - 1)])
        curves[name] = {"mean": cyc.mean(axis=0), "std": cyc.std(axis=0)}
        if name.startswith("act_"):
            per_cycle_peaks = cyc.max(axis=1)
            peaks[name] = (float(per_cycle_peaks.mean()), float(per_cycle_peaks.std()))
    for name, (c1, c2) in grf_cols.items():
        col = log[:, LOG_COLUMNS.index(c1)] + log[:, LOG_COLUMNS.index(c2)]
        cyc = np.array([resample_cycle(col, strikes[k], strikes[k + 1])
                        for k in range(len(strikes) - 1)])
        curves[name] = {"mean": cyc.mean(axis=0), "std": cyc.std(axis=0)}
    ph = np.array([resample_cycle(phase_r, strikes[k], strikes[k + 1])
                   for k in range(len(strikes) - 1)])
    curves["phase_r"] = {"mean": ph.mean(axis=0), "std": ph.std(axis=0)}

    out["activation_peaks"] = peaks
    out["cycle_curves"] = curves
    return out


def attach_metrics(result: RolloutResult, body: BodyParams):
    result.metrics = gait_metrics(result.log, body, result.scenario.dt_sim,
                                  fell=result.fell)
    return result


def metrics_summary_text(metrics):
    """Human-readable structured summary of the gait metrics."""
    lines = ["[gait_metrics]"]
    for key in ("available", "fell", "cycle_count", "mean_speed_mps",
                "stride_length_m", "stride_length_std_m", "cycle_duration_s",
                "step_frequency_spm"):
        if key in metrics:
            lines.append(f"{key} = {metrics[key]}")
    if metrics.get("activation_peaks"):
        lines.append("")
        lines.append("[activation_peaks]  # mean +/- std over cycles")
        for name, (m, s) in sorted(metrics["activation_peaks"].items()):
            lines.append(f"{name} = {m:.4f} +/- {s:.4f}")
    return "\n".join(lines) + "\n"
