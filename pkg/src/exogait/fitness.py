"""Rollout fitness: the step-1 distance objective and the step-2 hybrid
objective (speed tracking, ankle-range penalty, overload penalty, metabolic
effort), plus the per-muscle energy-rate model behind the effort term."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Config
from .harness import RolloutResult

EFFORT_SENTINEL = 1e6


@dataclass(frozen=True)
class MetabolicRates:
    """Per-muscle energy rates (W): activation heat, maintenance heat,
    shortening heat, positive mechanical work."""

    r_a: float
    r_m: float
    r_s: float
    r_w: float

    @property
    def total(self):
        return self.r_a + self.r_m + self.r_s + self.r_w


@dataclass(frozen=True)
class FitnessConfig:
    psi: float
    nu: float
    v_des: float
    w_vel: float
    w_angle: float
    w_grf: float
    w_effort: float
    ankle_max: float     # rad
    ankle_min: float     # rad
    f_grf_hat: float     # N
    mass: float
    g: float
    dt_sim: float

    @classmethod
    def from_config(cls, cfg: Config, scenario):
        return cls(
            psi=cfg["optimization.psi_m"],
            nu=scenario.slope,
            v_des=scenario.v_des,
            w_vel=cfg["optimization.w_vel"],
            w_angle=cfg["optimization.w_angle"],
            w_grf=cfg["optimization.w_grf"],
            w_effort=cfg["optimization.w_effort"],
            ankle_max=math.radians(cfg["optimization.ankle_max_deg"]),
            ankle_min=math.radians(cfg["optimization.ankle_min_deg"]),
            f_grf_hat=cfg["optimization.grf_threshold_n"],
            mass=cfg["optimization.model_mass_kg"],
            g=cfg["body.gravity_m_per_s2"],
            dt_sim=scenario.dt_sim,
        )


def metabolic_rates(activation, l_m_tilde, v_m_tilde, muscle, curves,
                    rate_a=40.0, rate_m=10.0, shortening_coeff=0.25,
                    density=1059.7, specific_tension=250000.0):
    """Energy rates of one muscle at one instant.

    Mass-specific heats scale with a documented muscle mass estimate; the
    shortening heat applies on shortening only and positive mechanical work
    is the positive part of the contractile-element power.
    """
    m_i = muscle.f_opt * muscle.l_opt * density / specific_tension
    fl = float(curves.fl.value(l_m_tilde))
    fv = float(curves.fv.value(v_m_tilde / muscle.v_max))
    f_ce = muscle.f_opt * activation * fl * fv
    v_mps = v_m_tilde * muscle.l_opt
    r_a = m_i * rate_a * activation ** 2
    r_m = m_i * rate_m * fl * activation
    r_s = shortening_coeff * f_ce * (-v_mps) if v_mps < 0.0 else 0.0
    r_w = max(0.0, -f_ce * v_mps)
    return MetabolicRates(r_a=r_a, r_m=r_m, r_s=r_s, r_w=r_w)


def fitness_j1(rollout: RolloutResult, psi, nu):
    """Distance objective: desired distance minus slope-corrected advance."""
    return psi - math.sqrt(nu * nu + 1.0) * rollout.x_com_final


def j_vel(v_com, v_des, fell):
    v = np.asarray(v_com, float)
    if v.size == 0:
        return float(bool(fell))
    return float(np.mean((v - v_des) ** 2) + (1.0 if fell else 0.0))


def j_angle(ankle_angles, q_max, q_min):
    """Time-mean total excess of per-leg ankle angles outside [q_min, q_max]."""
    q = np.atleast_2d(np.asarray(ankle_angles, float))
    if q.shape[0] == 0:
        return 0.0
    excess = np.maximum(q - q_max, 0.0) - np.minimum(q - q_min, 0.0)
    return float(np.mean(np.sum(excess, axis=1)))


def j_grf(leg_normals, f_hat, mass, g):
    """Time-mean overload of per-leg total normal force above the threshold,
    in units of body weight."""
    f = np.atleast_2d(np.asarray(leg_normals, float))
    if f.shape[0] == 0:
        return 0.0
    over = np.maximum(f - f_hat, 0.0)
    return float(np.mean(np.sum(over, axis=1)) / (mass * g))


def j_effort(met_rate_sum, x_com_final, dt_sim, mass):
    """Distance-normalized metabolic cost; sentinel for non-forward rollouts."""
    if x_com_final <= 0.0:
        return EFFORT_SENTINEL
    return float(np.sum(met_rate_sum) * dt_sim / mass / x_com_final)


def fitness_j2(rollout: RolloutResult, fc: FitnessConfig):
    """Weighted hybrid objective; returns (J2, components)."""
    comp = {
        "j_vel": j_vel(rollout.aux[:, 2], fc.v_des, rollout.fell),
        "j_angle": j_angle(rollout.columns(["q_q_ra", "q_q_la"]),
                           fc.ankle_max, fc.ankle_min),
        "j_grf": j_grf(np.column_stack([
            rollout.column("grf_r_heel_n") + rollout.column("grf_r_toe_n"),
            rollout.column("grf_l_heel_n") + rollout.column("grf_l_toe_n")]),
            fc.f_grf_hat, fc.mass, fc.g),
        "j_effort": j_effort(rollout.column("met_rate_w"), rollout.x_com_final,
                             fc.dt_sim, fc.mass),
    }
    total = (fc.w_vel * comp["j_vel"] + fc.w_angle * comp["j_angle"]
             + fc.w_grf * comp["j_grf"] + fc.w_effort * comp["j_effort"])
    return float(total), comp
