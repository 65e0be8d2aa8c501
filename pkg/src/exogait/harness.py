"""Scenario orchestration: builds the packed simulation model from config,
runs rollouts through the compiled engine, and reads/writes the CSV log.

The per-step log schema (LOG_COLUMNS) is fixed: time, the 11 generalized
coordinates and velocities, per-muscle excitation/activation/force for the
14 muscle instances (right then left, TA SOL GAS FEM HAM GLU ILI), the 8
ground-reaction components (4 normal then 4 tangential, at r_heel r_toe
l_heel l_toe), the 6 biological joint torques, the 2 strap interaction
torques, the 2 leg phases, and the summed metabolic rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine
from .config import Config, load_config
from .curves import load_curves
from .geometry import load_geometry, pack_paths
from .muscle import MUSCLES, init_fiber_length, pack_muscles
from .plant import N_Q, Q_NAMES, BodyParams
from .reflex import GaitPhase, ReflexParams

LOG_SCHEMA = "exogait-log/1"

_MUS14 = [f"{side}_{m.lower()}" for side in ("r", "l") for m in MUSCLES]
LOG_COLUMNS = (
    ["t"]
    + [f"q_{n}" for n in Q_NAMES]
    + [f"qd_{n}" for n in Q_NAMES]
    + [f"sig_{m}" for m in _MUS14]
    + [f"act_{m}" for m in _MUS14]
    + [f"f_{m}" for m in _MUS14]
    + ["grf_r_heel_n", "grf_r_toe_n", "grf_l_heel_n", "grf_l_toe_n",
       "grf_r_heel_f", "grf_r_toe_f", "grf_l_heel_f", "grf_l_toe_f"]
    + ["tau_r_hip", "tau_r_knee", "tau_r_ankle",
       "tau_l_hip", "tau_l_knee", "tau_l_ankle"]
    + ["tau_int_r", "tau_int_l"]
    + ["phase_r", "phase_l"]
    + ["met_rate_w"]
)
assert len(LOG_COLUMNS) == engine.N_LOG_COLS

STATUS_NAMES = {engine.STATUS_HORIZON: "horizon", engine.STATUS_FELL: "fell",
                engine.STATUS_NONFINITE: "nonfinite", engine.STATUS_MUSCLE: "muscle"}


@dataclass(frozen=True)
class Scenario:
    name: str
    slope: float          # ground tangent (rise over run)
    v_des: float          # desired COM speed, m/s
    horizon: float = 10.0
    dt_sim: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.horizon <= 0 or self.dt_sim <= 0:
            raise ValueError("horizon and dt_sim must be positive")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt_sim))


def canonical_scenarios(cfg: Config):
    """The four standard evaluation scenarios."""
    nu = cfg["optimization.uphill_slope_tangent"]
    dt = cfg["simulation.dt_sim_s"]
    hz = cfg["simulation.horizon_s"]
    return {
        "flat_0.9": Scenario("flat_0.9", 0.0, 0.9, hz, dt),
        "flat_1.0": Scenario("flat_1.0", 0.0, 1.0, hz, dt),
        "flat_1.1": Scenario("flat_1.1", 0.0, 1.1, hz, dt),
        "uphill_1.0": Scenario("uphill_1.0", nu, 1.0, hz, dt),
    }


def make_scenario(cfg: Config, terrain, speed, horizon=None, dt_sim=None, seed=0):
    nu = cfg["optimization.uphill_slope_tangent"] if terrain == "uphill" else 0.0
    return Scenario(f"{terrain}_{speed}", nu, speed,
                    horizon if horizon is not None else cfg["simulation.horizon_s"],
                    dt_sim if dt_sim is not None else cfg["simulation.dt_sim_s"],
                    seed)


@dataclass
class RolloutResult:
    """Full time-series log plus scalar outcomes of one simulation."""

    log: np.ndarray               # (steps, N_LOG_COLS)
    aux: np.ndarray               # (steps, 4): x_com, y_com, vx_com, fell flag
    status: str
    scenario: Scenario
    metrics: dict = field(default_factory=dict)
    fitness: dict = field(default_factory=dict)

    @property
    def steps(self):
        return self.log.shape[0]

    @property
    def fell(self):
        return self.status == "fell"

    @property
    def x_com_final(self):
        return float(self.aux[-1, 0]) if self.steps else 0.0

    def column(self, name):
        return self.log[:, LOG_COLUMNS.index(name)]

    def columns(self, names):
        idx = [LOG_COLUMNS.index(n) for n in names]
        return self.log[:, idx]

    def to_csv(self, path):
        write_log_csv(path, self.log)

    def summary(self):
        out = {"status": self.status, "steps": self.steps,
               "duration_s": self.steps * self.scenario.dt_sim,
               "x_com_final_m": self.x_com_final}
        out.update(self.metrics)
        out.update({f"fitness_{k}": v for k, v in self.fitness.items()})
        return out


def write_log_csv(path, log):
    with open(path, "w", newline="") as f:
        f.write(f"# {LOG_SCHEMA}\n")
        f.write(",".join(LOG_COLUMNS) + "\n")
        for row in log:
            f.write(",".join("%.17g" % v for v in row) + "\n")


def read_log_csv(path):
    with open(path) as f:
        schema_line = f.readline().strip()
        if schema_line != f"# {LOG_SCHEMA}":
            raise ValueError(f"unsupported log schema line: {schema_line!r}")
        header = f.readline().strip().split(",")
        if header != LOG_COLUMNS:
            raise ValueError("log columns do not match the current schema")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, len(LOG_COLUMNS))
    return data


class SimModel:
    """Packed, immutable simulation model shared by all rollouts."""

    def __init__(self, cfg: Config = None, curves=None, geometry=None):
        self.cfg = cfg if cfg is not None else load_config()
        self.body = self.cfg.body_params()
        self.contact = self.cfg.contact_params()
        self.muscles = self.cfg.muscle_params()
        self.curves = curves if curves is not None else load_curves()
        self.paths = geometry if geometry is not None else load_geometry()

        self.body_pack = self.body.pack()
        self.mus_pack = pack_muscles(self.muscles)
        self.path_pack = pack_paths(self.paths, MUSCLES)
        self.curve_pack = self.curves.pack()
        self.contact_pack = (self.contact.k, self.contact.c, self.contact.mu_s,
                             self.contact.mu_d, self.contact.mu_v, self.contact.v_t)
        rho = self.cfg["metabolic.muscle_density_kg_per_m3"]
        sig = self.cfg["metabolic.specific_tension_pa"]
        mus_mass = np.array([m.f_opt * m.l_opt * rho / sig for m in self.muscles])
        self.met_pack = (mus_mass,
                         self.cfg["metabolic.activation_rate_w_per_kg"],
                         self.cfg["metabolic.maintenance_rate_w_per_kg"],
                         self.cfg["metabolic.shortening_coeff"])
        self.k_int, self.d_int = self.cfg.interaction_per_rad()
        self.f_contact = self.cfg["contact.contact_threshold_n"]
        self.fall_frac = self.cfg["simulation.fall_height_fraction"]
        self.eps_rel = self.cfg["hill.newton_tol_rel"]
        self.n_sub = int(round(self.cfg["simulation.dt_sim_s"]
                               / self.cfg["simulation.rk4_substep_s"]))

    def initial_state(self, scenario: Scenario):
        """Mid-gait start, pelvis advancing at v_des: the trailing (right)
        leg is in late stance carrying the weight, the leading (left) leg is
        swung forward and about to strike heel-first."""
        nu = scenario.slope
        chi = math.atan(nu)
        q0 = np.zeros(N_Q)
        q0[2] = self.cfg["init.trunk_pitch_rad"]
        q0[3] = -self.cfg["init.trail_hip_rad"] - q0[2]
        q0[4] = -self.cfg["init.trail_knee_flex_rad"]
        q0[5] = (chi + self.cfg["init.trail_foot_pitch_rad"]
                 - (q0[2] + q0[3] + q0[4]))     # heel-off attitude
        q0[7] = self.cfg["init.lead_hip_rad"] - q0[2]
        q0[8] = -self.cfg["init.lead_knee_flex_rad"]
        q0[9] = (chi + self.cfg["init.lead_foot_pitch_rad"]
                 - (q0[2] + q0[7] + q0[8]))     # heel-first attitude
        # pelvis height: static vertical trim on the trailing foot (total
        # preload = weight), leading foot airborne with a little clearance
        from .plant import contact_points
        q0[1] = 1.0
        pos, _, _ = contact_points(q0, np.zeros(N_Q), self.body)
        s = math.hypot(1.0, nu)
        dist = (pos[:, 1] - nu * pos[:, 0]) / s   # plane distance at y_ub = 1
        weight = self.body.total_mass * self.body.g
        k = self.contact.k
        r = self.body.sphere_radius

        def preload(y_ub):
            d = dist[:2] + (y_ub - 1.0) / s
            pen = np.maximum(r - d, 0.0)
            return float(np.sum(k * pen ** 1.5))

        lo = 1.0 + (r - dist[:2].min()) * s - 0.05
        hi = 1.0 + (r - dist[:2].min()) * s
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if preload(mid) > weight:
                lo = mid
            else:
                hi = mid
        q0[1] = 0.5 * (lo + hi)
        # flex the leading knee further if its foot would touch down already
        for _ in range(40):
            pos, _, _ = contact_points(q0, np.zeros(N_Q), self.body)
            clearance = (pos[2:, 1] - nu * pos[2:, 0]) / s - r
            if clearance.min() > 0.002:
                break
            q0[8] -= 0.02
            q0[9] += 0.02
        # velocity trim: pelvis advances at v_des while loaded contacts stay
        # put, i.e. the body rolls forward over the stance foot.  Free rates
        # (pelvis vertical, stance hip with its foot kept flat) minimize the
        # loaded contact-sphere speeds in least squares.
        qd0 = np.zeros(N_Q)
        qd0[0] = scenario.v_des
        pos, _, cjac = contact_points(q0, np.zeros(N_Q), self.body)
        loaded = (r - (pos[:, 1] - nu * pos[:, 0]) / s) > 0.0
        rows = np.concatenate([loaded, loaded])
        basis = np.zeros((N_Q, 2))
        basis[1, 0] = 1.0                       # pelvis vertical rate
        basis[3, 1], basis[5, 1] = 1.0, -1.0    # stance hip, foot kept flat
        u, *_ = np.linalg.lstsq(cjac[rows] @ basis, -cjac[rows] @ qd0, rcond=None)
        qd0 = qd0 + basis @ u

        a0 = np.full(engine.N_MUS, self.muscles[0].a_min)
        lm0 = np.zeros(engine.N_MUS)
        for i in range(engine.N_MUS):
            k = i % 7
            l_mt, _, _ = engine._muscle_geometry(q0, i, *self.path_pack)
            lm0[i] = init_fiber_length(l_mt, self.muscles[k].a_min, self.curves,
                                       self.muscles[k])
        phases0 = np.array([int(GaitPhase.LATE_STANCE), int(GaitPhase.LANDING)],
                           dtype=np.int64)
        return q0, qd0, a0, lm0, phases0

    def rollout(self, params, scenario: Scenario, exo_torque=None):
        """Simulate one scenario.  `exo_torque` is an optional callable
        t -> (tau_r, tau_l) sampled at the controller rate (default zero:
        passive exoskeleton)."""
        w = params.to_array() if isinstance(params, ReflexParams) else np.asarray(params, float)
        if w.shape != (29,):
            raise ValueError("reflex parameter vector must have 29 entries")
        n = scenario.n_steps
        profile = np.zeros((n, 2))
        if exo_torque is not None:
            for k in range(n):
                tr, tl = exo_torque(k * scenario.dt_sim)
                profile[k, 0] = tr
                profile[k, 1] = tl
        log = np.zeros((n, engine.N_LOG_COLS))
        aux = np.zeros((n, 4))
        q0, qd0, a0, lm0, phases0 = self.initial_state(scenario)
        steps, status = engine.run_rollout(
            q0, qd0, a0, lm0, phases0, w,
            self.mus_pack, self.path_pack, self.curve_pack, self.body_pack,
            self.contact_pack, self.met_pack, self.k_int, self.d_int,
            scenario.slope, scenario.dt_sim, self.n_sub, n, self.f_contact,
            self.fall_frac, self.eps_rel, profile, log, aux)
        return RolloutResult(log=log[:steps].copy(), aux=aux[:steps].copy(),
                             status=STATUS_NAMES[int(status)], scenario=scenario)


def run_scenario(model: SimModel, params, scenario: Scenario, out_dir=None,
                 exo_torque=None, fitness_config=None):
    """Simulate one scenario, compute gait metrics, optionally write the CSV
    log and metrics summary into out_dir."""
    from .metrics import attach_metrics, metrics_summary_text

    result = model.rollout(params, scenario, exo_torque=exo_torque)
    attach_metrics(result, model.body)
    if fitness_config is not None:
        from .fitness import fitness_j1, fitness_j2
        j2, comp = fitness_j2(result, fitness_config)
        result.fitness = {"j1": fitness_j1(result, fitness_config.psi,
                                           fitness_config.nu),
                          "j2": j2, **comp}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.to_csv(out / f"{scenario.name}.csv")
        with open(out / f"{scenario.name}_metrics.txt", "w") as f:
            f.write(f"# scenario {scenario.name} status={result.status} "
                    f"x_com={result.x_com_final:.6g}\n")
            f.write(metrics_summary_text(result.metrics))
    return result
