import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exogait.reflex import (GaitPhase, PARAM_LOWER, PARAM_NAMES, PARAM_UPPER,
                            ReflexParams, classify_gait_phase,
                            classify_leg_phase, excite_fem, excite_glu,
                            excite_ham, excite_ili, excite_plantarflexor,
                            excite_ta, knee_switch, leg_excitations, relu)

ES, LS, LO, SW, LA = (int(p) for p in GaitPhase)


@given(st.floats(-100, 100, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_relu_operator(x):
    y = relu(x)
    assert y >= 0.0
    assert y == (x if x > 0 else 0.0)


def test_knee_switch_examples():
    assert knee_switch(0.1, +0.5, 0.3) == 1   # below-threshold branch
    assert knee_switch(0.5, -0.1, 0.3) == 1   # non-increasing branch
    assert knee_switch(0.5, +0.1, 0.3) == 0   # else branch


def test_excite_ta_examples():
    assert excite_ta(1.1, 0.72, 0.5, 0.0, 0.0) == 0.0
    # at reference length, force inhibition clips negative
    assert excite_ta(0.72, 0.72, 0.3, 1.5, 0.5) == 0.0
    assert excite_ta(0.92, 0.72, 0.1, 1.5, 0.5) == pytest.approx(0.25, abs=1e-12)


def test_excite_plantarflexor_examples():
    for ph in (SW, LA):
        assert excite_plantarflexor(0.9, 5.0, ph) == 0.0
    assert excite_plantarflexor(0.5, 1.2, LS) == pytest.approx(0.6, abs=1e-12)
    assert excite_plantarflexor(0.5, 10.0, ES) == 1.0  # upper clamp


def test_excite_fem_examples():
    assert excite_fem(0.9, 1, SW, 0.3, 0.05, 2.0, 2.0) == pytest.approx(0.05)
    assert excite_fem(0.5, 0, ES, 0.1, 0.05, 0.8, 0.8) == pytest.approx(0.1)
    assert excite_fem(0.5, 1, ES, 0.1, 0.05, 0.8, 0.3) == pytest.approx(0.5)
    assert excite_fem(0.5, 1, LS, 0.1, 0.05, 0.8, 0.3) == pytest.approx(0.25)


def test_excite_ham_examples():
    assert excite_ham(0.1, 0.2, 0.0, 0.9, LO, 0.5, 1.0, 1.0, 1.0) == 0.0
    assert excite_ham(0.1, 0.2, 0.0, 0.9, SW, 0.5, 1.0, 1.0, 1.0) == 0.0
    assert excite_ham(0.0, 0.0, 0.0, 0.2, LA, 0.1, 1.0, 1.0, 0.5) == pytest.approx(0.2)
    # PD term vanishes at reference
    assert excite_ham(-0.05, 0.0, -0.05, 0.0, ES, 0.15, 3.0, 1.0, 1.0) == pytest.approx(0.15)
    # forward lean increases extensor drive
    lean = excite_ham(-0.25, 0.0, -0.05, 0.0, ES, 0.15, 3.0, 1.0, 1.0)
    assert lean == pytest.approx(0.15 + 3.0 * 0.2, abs=1e-12)


def test_excite_glu_examples():
    assert excite_glu(0.1, 0.0, 0.0, 0.9, LO, 0.5, 1.0, 1.0, 1.0) == 0.0
    assert excite_glu(0.0, 0.0, 0.0, 0.25, SW, 0.5, 1.0, 1.0, 0.4) == pytest.approx(0.1)
    assert excite_glu(-0.05, 0.0, -0.05, 0.0, LS, 0.2, 3.0, 1.0, 1.0) == pytest.approx(0.2)


def test_excite_ili_examples():
    p = dict(c1=0.1, c2=0.3, k_q1=1.0, k_qd1=0.5, k_l1=2.0, k_q2=1.0,
             k_qd2=0.5, k_l2=1.0)
    assert excite_ili(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, LO, **p) == pytest.approx(0.3)
    # swing with all feedback at reference
    assert excite_ili(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, SW, **p) == 0.0
    # swing: own stretch excites, antagonist stretch inhibits
    val = excite_ili(0.0, 0.0, 0.0, 1.1, 1.0, 1.05, 1.0, SW, **p)
    assert val == pytest.approx(2.0 * 0.1 - 1.0 * 0.05, abs=1e-12)
    # stance: positive PD
    val = excite_ili(0.1, 0.2, 0.0, 1.0, 1.0, 1.0, 1.0, ES, **p)
    assert val == pytest.approx(0.1 + 1.0 * 0.1 + 0.5 * 0.2, abs=1e-12)


@given(st.integers(0, 4), st.floats(-0.5, 0.5), st.floats(-3, 3),
       st.floats(-1.5, 1.5), st.floats(-8, 8),
       st.lists(st.floats(0.3, 1.8), min_size=7, max_size=7),
       st.lists(st.floats(0.0, 3.0), min_size=7, max_size=7),
       st.lists(st.floats(0.0, 10.0), min_size=29, max_size=29))
@settings(max_examples=150, deadline=None)
def test_all_excitations_bounded(phase, q_ub, qd_ub, kq, kqd, lm, fn, w):
    w = np.asarray(w)
    w[18:21] = np.clip(w[18:21], 0.5, 1.5)
    w[21] = np.clip(w[21], -0.3, 0.3)
    w[22] = np.clip(w[22], 0.0, 1.5)
    sig = np.zeros(7)
    leg_excitations(phase, q_ub, qd_ub, kq, kqd, np.asarray(lm),
                    np.asarray(fn), w, sig)
    assert np.all(sig >= 0.0) and np.all(sig <= 1.0)


def test_reflex_params_round_trip():
    vals = np.linspace(0.1, 2.9, 29)
    p = ReflexParams(vals)
    assert p.to_dict()["k_l_ta"] == pytest.approx(vals[0])
    assert ReflexParams.from_dict(p.to_dict()).to_array() == pytest.approx(vals)
    assert p.k_f_sol == pytest.approx(vals[2])
    with pytest.raises(ValueError):
        ReflexParams(np.zeros(28))
    with pytest.raises(ValueError):
        ReflexParams.from_dict({"k_l_ta": 1.0})


def test_reflex_params_projection():
    vals = np.full(29, 99.0)
    proj = ReflexParams(vals).projected().to_array()
    assert np.all(proj <= PARAM_UPPER) and np.all(proj >= PARAM_LOWER)
    assert len(PARAM_NAMES) == 29


def test_phase_transitions_individual():
    f = 20.0
    # heel strike: landing -> early stance on load
    assert classify_leg_phase(LA, 25.0, 0.0, 0.0, LS, 0.5, 0.0, f) == ES
    # toe-off: liftoff -> early swing when the foot unloads
    assert classify_leg_phase(LO, 5.0, 400.0, 400.0, ES, -0.2, 0.0, f) == SW
    # early -> late stance when the pelvis passes the ankle
    assert classify_leg_phase(ES, 400.0, 0.0, 0.0, SW, 0.1, 0.2, f) == LS
    assert classify_leg_phase(ES, 400.0, 0.0, 0.0, SW, 0.3, 0.2, f) == ES
    # late stance -> liftoff only at a landing-side touchdown edge
    assert classify_leg_phase(LS, 400.0, 100.0, 5.0, LA, 0.0, 0.5, f) == LO
    assert classify_leg_phase(LS, 400.0, 100.0, 90.0, LA, 0.0, 0.5, f) == LS
    assert classify_leg_phase(LS, 400.0, 100.0, 5.0, SW, 0.0, 0.5, f) == LS
    # swing -> landing when the foot passes the pelvis
    assert classify_leg_phase(SW, 0.0, 400.0, 400.0, ES, 0.6, 0.5, f) == LA
    assert classify_leg_phase(SW, 0.0, 400.0, 400.0, ES, 0.4, 0.5, f) == SW


def _scripted_two_cycle_trace():
    """Kinematic script of two symmetric gait cycles for both legs."""
    events = []
    # (right grf, left grf, right foot x, left foot x, pelvis x), 0.3 m steps
    for cycle in range(2):
        base = 1.2 * cycle
        events += [
            (400, 400, base + 0.3, base + 0.0, base + 0.1),   # double support
            (400, 400, base + 0.3, base + 0.0, base + 0.35),  # pelvis past R ankle
            (400, 0, base + 0.3, base + 0.0, base + 0.4),     # L lifts
            (400, 0, base + 0.3, base + 0.3, base + 0.45),    # L swings level
            (400, 0, base + 0.3, base + 0.6, base + 0.5),     # L passes pelvis
            (400, 400, base + 0.3, base + 0.6, base + 0.55),  # L lands -> R liftoff
            (0, 400, base + 0.3, base + 0.6, base + 0.6),     # R lifts
            (0, 400, base + 0.6, base + 0.6, base + 0.65),    # R swings
            (0, 400, base + 0.9, base + 0.6, base + 0.7),     # R passes pelvis
            (400, 400, base + 0.9, base + 0.6, base + 0.75),  # R lands
            (400, 400, base + 0.9, base + 0.6, base + 1.0),   # pelvis past R ankle
        ]
    return events


def test_scripted_trace_visits_phases_in_cycle_order():
    """Replay a scripted two-cycle walking trace: each leg visits all five
    phases twice, strictly in cycle order."""
    phases = np.array([ES, LO], dtype=np.int64)  # staggered start
    prev_grf = (400.0, 400.0)
    hist_r, hist_l = [int(phases[0])], [int(phases[1])]
    for grf_r, grf_l, fr, fl, px in _scripted_two_cycle_trace():
        r, l = classify_gait_phase((grf_r, grf_l), (fr, fl, px),
                                   (phases[0], phases[1]), prev_grf)
        phases[0], phases[1] = int(r), int(l)
        prev_grf = (grf_r, grf_l)
        if hist_r[-1] != phases[0]:
            hist_r.append(phases[0])
        if hist_l[-1] != phases[1]:
            hist_l.append(phases[1])
    for hist in (hist_r, hist_l):
        # transitions follow the cycle order with no skips or reversals
        for a, b in zip(hist[:-1], hist[1:]):
            assert b == (a + 1) % 5
        # every phase visited at least twice over the two cycles
        counts = {p: hist.count(p) for p in range(5)}
        assert all(c >= 2 for c in counts.values()), counts
