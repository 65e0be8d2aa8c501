import math

import numpy as np
import pytest

from exogait.harness import LOG_COLUMNS
from exogait.metrics import (curve_correlation, gait_metrics,
                             heel_strike_indices, metrics_summary_text,
                             resample_cycle)
from exogait.plant import BodyParams
from exogait.reflex import GaitPhase


def _synthetic_walk_log(n_cycles=3, cycle_steps=200, dt=0.005, stride=0.6):
    """Scripted log: right leg cycles through the five phases; pelvis and
    right foot advance one stride per cycle."""
    n = n_cycles * cycle_steps + 10
    log = np.zeros((n, len(LOG_COLUMNS)))
    log[:, 0] = np.arange(n) * dt
    i_ph = LOG_COLUMNS.index("phase_r")
    i_x = LOG_COLUMNS.index("q_x_ub")
    i_act = LOG_COLUMNS.index("act_r_sol")
    i_hip = LOG_COLUMNS.index("q_q_rh")
    speed = stride / (cycle_steps * dt)
    for i in range(n):
        c = (i % cycle_steps) / cycle_steps
        if c < 0.35:
            ph = GaitPhase.EARLY_STANCE
        elif c < 0.5:
            ph = GaitPhase.LATE_STANCE
        elif c < 0.6:
            ph = GaitPhase.LIFTOFF
        elif c < 0.85:
            ph = GaitPhase.EARLY_SWING
        else:
            ph = GaitPhase.LANDING
        log[i, i_ph] = int(ph)
        log[i, i_x] = speed * i * dt
        log[i, i_act] = 0.3
        log[i, i_hip] = math.sin(2 * math.pi * c)
    return log


def test_heel_strike_detection():
    log = _synthetic_walk_log()
    ph = log[:, LOG_COLUMNS.index("phase_r")]
    strikes = heel_strike_indices(ph)
    assert len(strikes) == 3
    assert all(ph[i] == 0 and ph[i - 1] == 4 for i in strikes)


def test_stride_metrics_synthetic():
    body = BodyParams()
    log = _synthetic_walk_log(stride=0.6)
    m = gait_metrics(log, body, 0.005)
    assert m["available"]
    assert m["cycle_count"] == 2
    # right heel advances with the pelvis: one stride per cycle
    assert m["stride_length_m"] == pytest.approx(0.6, abs=1e-9)
    assert m["cycle_duration_s"] == pytest.approx(1.0, abs=1e-9)
    assert m["step_frequency_spm"] == pytest.approx(120.0, abs=1e-6)
    assert m["mean_speed_mps"] == pytest.approx(0.6, abs=1e-3)
    # constant activation: peak 0.3 +/- 0
    mean, std = m["activation_peaks"]["act_r_sol"]
    assert mean == pytest.approx(0.3, abs=1e-12)
    assert std == pytest.approx(0.0, abs=1e-12)


def test_metrics_unavailable_with_few_strikes():
    body = BodyParams()
    log = _synthetic_walk_log(n_cycles=1)
    m = gait_metrics(log, body, 0.005)
    assert not m["available"]
    assert "stride_length_m" not in m


def test_metrics_invariant_to_post_fall_rows():
    body = BodyParams()
    log = _synthetic_walk_log()
    m1 = gait_metrics(log, body, 0.005)
    junk = np.zeros((50, len(LOG_COLUMNS)))
    junk[:, 0] = log[-1, 0] + 0.005 * np.arange(1, 51)
    junk[:, LOG_COLUMNS.index("phase_r")] = int(GaitPhase.EARLY_SWING)
    m2 = gait_metrics(np.vstack([log, junk]), body, 0.005, fell=True)
    assert m2["stride_length_m"] == pytest.approx(m1["stride_length_m"], abs=1e-12)
    assert m2["cycle_count"] == m1["cycle_count"]
    peaks1 = m1["activation_peaks"]["act_r_sol"]
    peaks2 = m2["activation_peaks"]["act_r_sol"]
    assert peaks1 == peaks2


def test_resample_cycle_against_analytic_sinusoid():
    n = 400
    t = np.arange(n)
    series = np.sin(2 * math.pi * t / (n - 1))
    out = resample_cycle(series, 0, n - 1)
    assert len(out) == 101
    expected = np.sin(2 * math.pi * np.linspace(0, 1, 101))
    assert np.allclose(out, expected, atol=2e-4)


def test_cycle_curves_shape():
    body = BodyParams()
    m = gait_metrics(_synthetic_walk_log(), body, 0.005)
    curves = m["cycle_curves"]
    assert curves["q_q_rh"]["mean"].shape == (101,)
    # the scripted hip follows one sinusoid per cycle
    expected = np.sin(2 * math.pi * np.linspace(0, 1, 101))
    assert np.allclose(curves["q_q_rh"]["mean"], expected, atol=0.05)


def test_curve_correlation():
    x = np.sin(np.linspace(0, 2 * math.pi, 101))
    assert curve_correlation(x, x) == pytest.approx(1.0, abs=1e-12)
    assert curve_correlation(x, -x) == pytest.approx(-1.0, abs=1e-12)
    assert curve_correlation(x, np.full(101, 2.0)) is None
    a = np.array([1.0, 2.0, 3.0, 4.0])
    b = np.array([2.0, 1.0, 4.0, 3.0])
    # hand-computed Pearson coefficient
    am, bm = a - a.mean(), b - b.mean()
    r_hand = float(np.sum(am * bm) / math.sqrt(np.sum(am**2) * np.sum(bm**2)))
    assert curve_correlation(a, b) == pytest.approx(r_hand, abs=1e-12)
    assert r_hand == pytest.approx(0.6, abs=1e-12)
    with pytest.raises(ValueError):
        curve_correlation(a, b[:3])


def test_summary_text():
    body = BodyParams()
    m = gait_metrics(_synthetic_walk_log(), body, 0.005)
    text = metrics_summary_text(m)
    assert "stride_length_m = 0.6" in text
    assert "act_r_sol" in text
