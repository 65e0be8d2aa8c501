"""Reflex-based gait controller.

Each leg walks through five phases (early stance, late stance, liftoff,
early swing, landing) classified from ground load and foot/pelvis geometry.
Muscle excitations are phase-gated feedback laws: length and force feedback,
trunk-posture PD terms, and constant stimulations.  The 29 free gains,
reference lengths, thresholds and constants form the optimization vector.

Excitations are rectified ({x}+ keeps the positive part) and clamped to 1 at
the controller output.  Sign conventions: counter-clockwise positive with x
forward and y up, so a backward trunk lean has positive tilt.  The knee
angle driving the extensor-inhibition switch enters extension-positive, so
the switch opens during fast (hyper)extension beyond the threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

MUSCLE_ORDER = ("TA", "SOL", "GAS", "FEM", "HAM", "GLU", "ILI")


class GaitPhase(enum.IntEnum):
    EARLY_STANCE = 0
    LATE_STANCE = 1
    LIFTOFF = 2
    EARLY_SWING = 3
    LANDING = 4


PHASE_CYCLE = (GaitPhase.EARLY_STANCE, GaitPhase.LATE_STANCE, GaitPhase.LIFTOFF,
               GaitPhase.EARLY_SWING, GaitPhase.LANDING)

PARAM_NAMES = (
    "k_l_ta", "k_f_ta", "k_f_sol", "k_f_gas", "k_f1_fem", "k_f2_fem",
    "k_q_ham", "k_qd_ham", "k_f_ham", "k_q_glu", "k_qd_glu", "k_f_glu",
    "k_q1_ili", "k_qd1_ili", "k_l1_ili", "k_q2_ili", "k_qd2_ili", "k_l2_ili",
    "l0_ta", "l0_ili", "l0_ham",
    "q0_ub", "qhat_knee",
    "c1_fem", "c2_fem", "c_ham", "c_glu", "c1_ili", "c2_ili",
)
N_PARAMS = len(PARAM_NAMES)

PARAM_LOWER = np.array([0.0] * 18 + [0.5, 0.5, 0.5, -0.3, 0.0] + [0.0] * 6)
PARAM_UPPER = np.array([10.0] * 18 + [1.5, 1.5, 1.5, 0.3, 1.5] + [10.0] * 6)


@dataclass(frozen=True)
class ReflexParams:
    """The 29-entry reflex parameter vector, addressable by name."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (N_PARAMS,):
            raise ValueError(f"reflex parameter vector must have {N_PARAMS} entries")
        object.__setattr__(self, "values", v)

    def __getattr__(self, name):
        try:
            return float(self.values[PARAM_NAMES.index(name)])
        except ValueError:
            raise AttributeError(name) from None

    def to_array(self):
        return self.values.copy()

    def projected(self):
        return ReflexParams(np.clip(self.values, PARAM_LOWER, PARAM_UPPER))

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - set(PARAM_NAMES)
        missing = set(PARAM_NAMES) - set(d)
        if extra or missing:
            raise ValueError(f"bad reflex parameter record: extra={sorted(extra)} "
                             f"missing={sorted(missing)}")
        return cls(np.array([float(d[n]) for n in PARAM_NAMES]))

    def to_dict(self):
        return {n: float(v) for n, v in zip(PARAM_NAMES, self.values)}


@njit(cache=True)
def relu(x):
    """The {x}+ operator: x when positive, exactly 0 otherwise."""
    return x if x > 0.0 else 0.0


@njit(cache=True)
def _clamp01(x):
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@njit(cache=True)
def knee_switch(q_knee, qd_knee, qhat_knee):
    """Conditional extensor-inhibition switch.

    Returns 1 (force feedback enabled) while the knee angle is below the
    threshold or not increasing; 0 otherwise.
    """
    if q_knee < qhat_knee or qd_knee <= 0.0:
        return 1
    return 0


@njit(cache=True)
def excite_ta(l_ta, l0_ta, f_sol, k_l, k_f):
    return _clamp01(relu(k_l * (l_ta - l0_ta) - k_f * f_sol))


@njit(cache=True)
def excite_plantarflexor(f_self, k_f, phase):
    if phase <= 2:  # early stance / late stance / liftoff
        return _clamp01(relu(k_f * f_self))
    return 0.0


@njit(cache=True)
def excite_fem(f_fem, xi, phase, c1, c2, k_f1, k_f2):
    if phase == 0:
        return _clamp01(relu(c1 + xi * k_f1 * f_fem))
    if phase == 1:
        return _clamp01(relu(c1 + xi * k_f2 * f_fem))
    return _clamp01(relu(c2))


@njit(cache=True)
def excite_ham(q_ub, qd_ub, q0_ub, f_glu, phase, c, k_q, k_qd, k_f):
    if phase <= 1:
        return _clamp01(relu(c - k_q * (q_ub - q0_ub) - k_qd * qd_ub))
    if phase == 4:
        return _clamp01(relu(c + k_f * f_glu))
    return 0.0


@njit(cache=True)
def excite_glu(q_ub, qd_ub, q0_ub, f_glu, phase, c, k_q, k_qd, k_f):
    if phase <= 1:
        return _clamp01(relu(c - k_q * (q_ub - q0_ub) - k_qd * qd_ub))
    if phase == 2:
        return 0.0
    return _clamp01(relu(k_f * f_glu))


@njit(cache=True)
def excite_ili(q_ub, qd_ub, q0_ub, l_ili, l0_ili, l_ham, l0_ham, phase,
               c1, c2, k_q1, k_qd1, k_l1, k_q2, k_qd2, k_l2):
    if phase <= 1:
        return _clamp01(relu(c1 + k_q1 * (q_ub - q0_ub) + k_qd1 * qd_ub))
    if phase == 2:
        return _clamp01(c2)
    return _clamp01(relu(k_l1 * (l_ili - l0_ili) - k_q2 * (q_ub - q0_ub)
                         - k_qd2 * qd_ub - k_l2 * (l_ham - l0_ham)))


@njit(cache=True)
def classify_leg_phase(prev_phase, grf_own, grf_contra, grf_contra_prev,
                       contra_phase, foot_x, pelvis_x, f_contact):
    """One phase-machine step for one leg.

    Transitions follow the cycle order; late stance ends at the
    contralateral touchdown *event* (load rising through the threshold while
    that leg is landing), so neither sustained double stance nor a swing-foot
    scuff triggers it.  Re-entry to stance happens only from landing, which
    together with the geometric gates suppresses chatter.
    """
    if prev_phase == 0:      # early stance -> late stance: pelvis passes ankle
        if pelvis_x > foot_x:
            return 1
        return 0
    if prev_phase == 1:      # late stance -> liftoff: contralateral touchdown
        if (contra_phase >= 4 and grf_contra > f_contact
                and grf_contra_prev <= f_contact):
            return 2
        return 1
    if prev_phase == 2:      # liftoff -> early swing: foot unloads
        if grf_own < f_contact:
            return 3
        return 2
    if prev_phase == 3:      # early swing -> landing: foot passes pelvis
        if foot_x > pelvis_x:
            return 4
        return 3
    # landing -> early stance: foot loads (heel strike)
    if grf_own > f_contact:
        return 0
    return 4


def classify_gait_phase(grf_normal_per_foot, positions, prev_phases,
                        prev_grf=None, f_contact=20.0):
    """Phase update for both legs.

    `grf_normal_per_foot` is (right, left) total normal load; `positions`
    is (right_foot_x, left_foot_x, pelvis_x); `prev_phases` the previous
    (right, left) phases; `prev_grf` the loads at the previous instant
    (defaults to the current ones, i.e. no fresh touchdown).
    """
    grf_r, grf_l = grf_normal_per_foot
    if prev_grf is None:
        prev_grf = grf_normal_per_foot
    foot_r, foot_l, pelvis = positions
    r = classify_leg_phase(int(prev_phases[0]), grf_r, grf_l, prev_grf[1],
                           int(prev_phases[1]), foot_r, pelvis, f_contact)
    l = classify_leg_phase(int(prev_phases[1]), grf_l, grf_r, prev_grf[0],
                           int(prev_phases[0]), foot_l, pelvis, f_contact)
    return GaitPhase(r), GaitPhase(l)


@njit(cache=True)
def leg_excitations(phase, q_ub, qd_ub, knee_q_flex, knee_qd_flex,
                    lm_norm, f_norm, w, sigma_out):
    """All seven excitations of one leg, in MUSCLE_ORDER.

    `lm_norm` and `f_norm` are the leg's normalized fiber lengths and forces
    in MUSCLE_ORDER; `w` is the 29-entry parameter vector.
    """
    xi = knee_switch(knee_q_flex, knee_qd_flex, w[22])
    sigma_out[0] = excite_ta(lm_norm[0], w[18], f_norm[1], w[0], w[1])
    sigma_out[1] = excite_plantarflexor(f_norm[1], w[2], phase)
    sigma_out[2] = excite_plantarflexor(f_norm[2], w[3], phase)
    sigma_out[3] = excite_fem(f_norm[3], xi, phase, w[23], w[24], w[4], w[5])
    sigma_out[4] = excite_ham(q_ub, qd_ub, w[21], f_norm[5], phase,
                              w[25], w[6], w[7], w[8])
    sigma_out[5] = excite_glu(q_ub, qd_ub, w[21], f_norm[5], phase,
                              w[26], w[9], w[10], w[11])
    sigma_out[6] = excite_ili(q_ub, qd_ub, w[21], lm_norm[6], w[19],
                              lm_norm[4], w[20], phase,
                              w[27], w[28], w[12], w[13], w[14], w[15],
                              w[16], w[17])
