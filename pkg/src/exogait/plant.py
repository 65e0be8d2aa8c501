"""Rigid-body plant: 9 segments, 11 DOF, ground contact, exo coupling.

Generalized coordinates q = (x_ub, y_ub, q_ub, q_rh, q_rk, q_ra, q_re,
q_lh, q_lk, q_la, q_le): pelvis translation, trunk tilt from vertical, then
per-leg hip, knee, ankle and exoskeleton-thigh angles, all counter-clockwise
positive with x forward and y up.  Segment absolute angles are linear in q,
so the angular inertia block of the mass matrix is constant and the
Coriolis matrix reduces to J^T M Jdot over the COM translation Jacobian.

Every segment COM and contact point is a short chain of rotating link
vectors; kinematics, Jacobians and their time derivatives are evaluated in
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

N_Q = 11
N_SEG = 9
SEGMENT_NAMES = ("upper_body", "r_thigh", "r_shank", "r_foot", "r_exo_thigh",
                 "l_thigh", "l_shank", "l_foot", "l_exo_thigh")
Q_NAMES = ("x_ub", "y_ub", "q_ub", "q_rh", "q_rk", "q_ra", "q_re",
           "q_lh", "q_lk", "q_la", "q_le")

# which q indices each segment's absolute angle sums over
_SEG_DEPS = (
    (2,), (2, 3), (2, 3, 4), (2, 3, 4, 5), (2, 3, 6),
    (2, 7), (2, 7, 8), (2, 7, 8, 9), (2, 7, 10),
)

CONTACT_NAMES = ("r_heel", "r_toe", "l_heel", "l_toe")


class RolloutAbort(RuntimeError):
    """Simulation became numerically invalid (NaN state or failed solve)."""


@dataclass(frozen=True)
class ContactParams:
    k: float = 160000.0        # N * m^(-3/2)
    c: float = 1.0             # s/m
    mu_s: float = 0.9
    mu_d: float = 0.6
    mu_v: float = 0.6          # s/m
    v_t: float = 0.15          # m/s

    def __post_init__(self):
        if min(self.k, self.c, self.v_t) <= 0:
            raise ValueError("contact k, c, v_t must be positive")
        if not (self.mu_s >= self.mu_d >= 0):
            raise ValueError("need mu_s >= mu_d >= 0")


@dataclass(frozen=True)
class BodyParams:
    """Segment anthropometrics plus foot/contact geometry.

    Foot coordinates are in the ankle frame of the reference pose (x toward
    the toes, y up); heel/toe entries locate the contact sphere centers.
    """

    masses: np.ndarray = field(default_factory=lambda: np.array(
        [47.82028, 7.05314, 3.27971, 1.02271, 2.0,
         7.05314, 3.27971, 1.02271, 2.0]))
    inertias: np.ndarray = field(default_factory=lambda: np.array(
        [2.60, 0.1298, 0.0528, 0.0144, 0.02,
         0.1298, 0.0528, 0.0144, 0.02]))
    trunk_com: float = 0.35      # above the hip along the trunk
    thigh_com: float = 0.18      # below the hip along the thigh
    shank_com: float = 0.18
    exo_com: float = 0.20
    thigh_len: float = 0.42
    shank_len: float = 0.42
    foot_com: tuple = (0.06, -0.04)
    heel: tuple = (-0.06, -0.05)
    toe: tuple = (0.19, -0.05)
    sphere_radius: float = 0.03
    g: float = 9.794

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        i = np.asarray(self.inertias, dtype=float)
        if m.shape != (N_SEG,) or i.shape != (N_SEG,):
            raise ValueError("need 9 segment masses and inertias")
        if np.any(m <= 0) or np.any(i <= 0):
            raise ValueError("segment masses and inertias must be positive")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "inertias", i)

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def standing_pelvis_height(self, penetration=0.0):
        """Pelvis height with straight legs and sphere centers `penetration`
        into the ground."""
        return (self.thigh_len + self.shank_len - self.heel[1]
                + self.sphere_radius - penetration)

    def chain_tables(self):
        """Flat term tables for the closed-form kinematics kernels."""
        c1, c2, c3, c5 = self.trunk_com, self.thigh_com, self.shank_com, self.exo_com
        lth, lsh = self.thigh_len, self.shank_len
        afc, bfc = self.foot_com
        seg_chains = [
            [(-c1, 0, 0)],
            [(c2, 0, 1)],
            [(lth, 0, 1), (c3, 0, 2)],
            [(lth, 0, 1), (lsh, 0, 2), (afc, 1, 3), (-bfc, 0, 3)],
            [(c5, 0, 4)],
            [(c2, 0, 5)],
            [(lth, 0, 5), (c3, 0, 6)],
            [(lth, 0, 5), (lsh, 0, 6), (afc, 1, 7), (-bfc, 0, 7)],
            [(c5, 0, 8)],
        ]
        ah, bh = self.heel
        at, bt = self.toe
        contact_chains = [
            [(lth, 0, 1), (lsh, 0, 2), (ah, 1, 3), (-bh, 0, 3)],
            [(lth, 0, 1), (lsh, 0, 2), (at, 1, 3), (-bt, 0, 3)],
            [(lth, 0, 5), (lsh, 0, 6), (ah, 1, 7), (-bh, 0, 7)],
            [(lth, 0, 5), (lsh, 0, 6), (at, 1, 7), (-bt, 0, 7)],
        ]
        return _pack_chains(seg_chains), _pack_chains(contact_chains)

    def pack(self):
        seg_tab, con_tab = self.chain_tables()
        dep_count = np.array([len(d) for d in _SEG_DEPS], dtype=np.int64)
        dep_idx = np.full((N_SEG, 4), -1, dtype=np.int64)
        for j, deps in enumerate(_SEG_DEPS):
            dep_idx[j, :len(deps)] = deps
        imat = np.zeros((N_Q, N_Q))
        for j, deps in enumerate(_SEG_DEPS):
            for a in deps:
                for b in deps:
                    imat[a, b] += self.inertias[j]
        return (self.masses, imat, dep_count, dep_idx, *seg_tab, *con_tab,
                self.sphere_radius, self.g)


def _pack_chains(chains):
    n = len(chains)
    counts = np.array([len(c) for c in chains], dtype=np.int64)
    coef = np.zeros((n, 4))
    kind = np.zeros((n, 4), dtype=np.int64)
    phi = np.zeros((n, 4), dtype=np.int64)
    for i, ch in enumerate(chains):
        for t, (co, k, p) in enumerate(ch):
            coef[i, t], kind[i, t], phi[i, t] = co, k, p
    return counts, coef, kind, phi


@njit(cache=True)
def _phi_of(q, dep_count, dep_idx):
    phis = np.zeros(N_SEG)
    for j in range(N_SEG):
        s = 0.0
        for t in range(dep_count[j]):
            s += q[dep_idx[j, t]]
        phis[j] = s
    return phis


@njit(cache=True)
def chain_positions(q, counts, coef, kind, phi_tab, dep_count, dep_idx):
    """World positions of chain endpoints rooted at the pelvis."""
    phis = _phi_of(q, dep_count, dep_idx)
    n = counts.shape[0]
    pos = np.zeros((n, 2))
    for i in range(n):
        x, y = q[0], q[1]
        for t in range(counts[i]):
            p = phi_tab[i, t]
            s, c = math.sin(phis[p]), math.cos(phis[p])
            if kind[i, t] == 0:
                x += coef[i, t] * s
                y += coef[i, t] * (-c)
            else:
                x += coef[i, t] * c
                y += coef[i, t] * s
        pos[i, 0], pos[i, 1] = x, y
    return pos


@njit(cache=True)
def chain_jacobians(q, qd, counts, coef, kind, phi_tab, dep_count, dep_idx):
    """Positions, velocities, J = d pos/dq and Jdot for a chain table.

    Rows of J are [x_0..x_{n-1}, y_0..y_{n-1}] like the stacked COM
    coordinate vector.
    """
    phis = _phi_of(q, dep_count, dep_idx)
    phid = _phi_of(qd, dep_count, dep_idx)
    n = counts.shape[0]
    pos = np.zeros((n, 2))
    vel = np.zeros((n, 2))
    jac = np.zeros((2 * n, N_Q))
    jdot = np.zeros((2 * n, N_Q))
    for i in range(n):
        pos[i, 0], pos[i, 1] = q[0], q[1]
        vel[i, 0], vel[i, 1] = qd[0], qd[1]
        jac[i, 0] = 1.0
        jac[n + i, 1] = 1.0
        for t in range(counts[i]):
            p = phi_tab[i, t]
            co = coef[i, t]
            s, c = math.sin(phis[p]), math.cos(phis[p])
            pd = phid[p]
            if kind[i, t] == 0:
                pos[i, 0] += co * s
                pos[i, 1] += co * (-c)
                dx, dy = co * c, co * s          # d/dphi of (s, -c) scaled
                ddx, ddy = -co * s * pd, co * c * pd
            else:
                pos[i, 0] += co * c
                pos[i, 1] += co * s
                dx, dy = -co * s, co * c
                ddx, ddy = -co * c * pd, -co * s * pd
            vel[i, 0] += dx * pd
            vel[i, 1] += dy * pd
            for u in range(dep_count[p]):
                iq = dep_idx[p, u]
                jac[i, iq] += dx
                jac[n + i, iq] += dy
                jdot[i, iq] += ddx
                jdot[n + i, iq] += ddy
    return pos, vel, jac, jdot


@njit(cache=True)
def eom_matrices(q, qd, masses, imat, dep_count, dep_idx,
                 seg_counts, seg_coef, seg_kind, seg_phi, g):
    """Inertia matrix, Coriolis matrix and gravity vector."""
    _, _, jac, jdot = chain_jacobians(q, qd, seg_counts, seg_coef, seg_kind,
                                      seg_phi, dep_count, dep_idx)
    m18 = np.empty(2 * N_SEG)
    for j in range(N_SEG):
        m18[j] = masses[j]
        m18[N_SEG + j] = masses[j]
    jm = jac * m18.reshape(-1, 1)
    d = imat + jac.T @ jm
    cmat = jm.T @ jdot
    grav = np.zeros(N_Q)
    for j in range(N_SEG):
        w = masses[j] * g
        for i in range(N_Q):
            grav[i] += w * jac[N_SEG + j, i]
    return d, cmat, grav


@njit(cache=True)
def normal_contact(delta, ddelta, k, c):
    """Compliant normal force, clamped non-adhesive."""
    if delta <= 0.0:
        return 0.0
    f = k * delta * math.sqrt(delta) * (1.0 + 1.5 * c * ddelta)
    return f if f > 0.0 else 0.0


@njit(cache=True)
def friction_force(f_n, v_slip, mu_s, mu_d, mu_v, v_t):
    """Regularized friction magnitude for slip speed `v_slip` >= 0."""
    r = v_slip / v_t
    blend = r if r < 1.0 else 1.0
    return f_n * (blend * (mu_d + 2.0 * (mu_s - mu_d) / (1.0 + r * r))
                  + mu_v * v_slip)


@njit(cache=True)
def interaction_torque(q_e, qd_e, k_int, d_int):
    """Kelvin-Voigt strap torque (inputs in rad, coefficients per rad)."""
    return k_int * q_e + d_int * qd_e


@njit(cache=True)
def contact_forces(pos, vel, nu, radius, k, c, mu_s, mu_d, mu_v, v_t,
                   fx_out, fy_out, fn_out, ff_out):
    """World-frame contact forces for the 4 sphere centers.

    Ground surface is y = nu * x.  Returns per-point world components plus
    the normal/tangential magnitudes (tangential signed against slip).
    """
    s = math.sqrt(1.0 + nu * nu)
    nx, ny = -nu / s, 1.0 / s
    tx, ty = 1.0 / s, nu / s
    for i in range(pos.shape[0]):
        dist = (pos[i, 1] - nu * pos[i, 0]) / s
        delta = radius - dist
        if delta <= 0.0:
            fx_out[i] = 0.0
            fy_out[i] = 0.0
            fn_out[i] = 0.0
            ff_out[i] = 0.0
            continue
        ddelta = -(vel[i, 1] - nu * vel[i, 0]) / s
        fn = normal_contact(delta, ddelta, k, c)
        slip = (vel[i, 0] + nu * vel[i, 1]) / s
        ff = friction_force(fn, abs(slip), mu_s, mu_d, mu_v, v_t)
        if slip > 0.0:
            ff = -ff
        elif slip == 0.0:
            ff = 0.0
        else:
            ff = abs(ff)
        fn_out[i] = fn
        ff_out[i] = ff
        fx_out[i] = fn * nx + ff * tx
        fy_out[i] = fn * ny + ff * ty


def mass_matrix(q, body: BodyParams):
    """Symmetric positive-definite generalized inertia matrix."""
    p = body.pack()
    d, _, _ = eom_matrices(np.asarray(q, float), np.zeros(N_Q), p[0], p[1],
                           p[2], p[3], p[4], p[5], p[6], p[7], p[13])
    return d


def coriolis_matrix(q, qd, body: BodyParams):
    p = body.pack()
    _, c, _ = eom_matrices(np.asarray(q, float), np.asarray(qd, float), p[0],
                           p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[13])
    return c


def gravity_vector(q, body: BodyParams):
    p = body.pack()
    _, _, g = eom_matrices(np.asarray(q, float), np.zeros(N_Q), p[0], p[1],
                           p[2], p[3], p[4], p[5], p[6], p[7], p[13])
    return g


def kinetic_energy(q, qd, body: BodyParams):
    qd = np.asarray(qd, float)
    return 0.5 * qd @ mass_matrix(q, body) @ qd


def potential_energy(q, body: BodyParams):
    pos = segment_positions(q, body)
    return float(body.g * (body.masses * pos[:, 1]).sum())


def segment_positions(q, body: BodyParams):
    p = body.pack()
    return chain_positions(np.asarray(q, float), p[4], p[5], p[6], p[7],
                           p[2], p[3])


def contact_points(q, qd, body: BodyParams):
    """Positions and velocities of the four contact sphere centers."""
    p = body.pack()
    pos, vel, jac, _ = chain_jacobians(np.asarray(q, float),
                                       np.asarray(qd, float),
                                       p[8], p[9], p[10], p[11], p[2], p[3])
    return pos, vel, jac


def com_position_velocity(q, qd, body: BodyParams):
    p = body.pack()
    pos, vel, _, _ = chain_jacobians(np.asarray(q, float), np.asarray(qd, float),
                                     p[4], p[5], p[6], p[7], p[2], p[3])
    m = body.masses
    tot = m.sum()
    return (m @ pos) / tot, (m @ vel) / tot


def grf_jacobian(q, body: BodyParams):
    """8x11 Jacobian stacking d(contact x)/dq rows then d(contact y)/dq."""
    _, _, jac = contact_points(q, np.zeros(N_Q), body)
    return jac


def tau_joint_vector(torques):
    """Place the six biological joint torques into the generalized slots."""
    out = np.zeros(N_Q)
    out[3], out[4], out[5] = torques[("r", "hip")], torques[("r", "knee")], torques[("r", "ankle")]
    out[7], out[8], out[9] = torques[("l", "hip")], torques[("l", "knee")], torques[("l", "ankle")]
    return out


def tau_exo_vector(tau_r, tau_l):
    out = np.zeros(N_Q)
    out[6], out[10] = tau_r, tau_l
    return out


def tau_int_vector(tau_r, tau_l):
    """Equal-and-opposite strap couple between thigh and exo thigh."""
    out = np.zeros(N_Q)
    out[3], out[6] = tau_r, -tau_r
    out[7], out[10] = tau_l, -tau_l
    return out


def generalized_forces(tau_joint, tau_exo, tau_int, f_grf, q, body: BodyParams):
    """Q = tau_joint + tau_exo + tau_int + J_grf^T F_grf.

    `f_grf` is (4, 2) world-frame forces at (r_heel, r_toe, l_heel, l_toe).
    """
    jac = grf_jacobian(q, body)
    f = np.asarray(f_grf, float)
    stacked = np.concatenate([f[:, 0], f[:, 1]])
    return (np.asarray(tau_joint, float) + np.asarray(tau_exo, float)
            + np.asarray(tau_int, float) + jac.T @ stacked)


def forward_dynamics(q, qd, q_force, body: BodyParams):
    """Solve D qdd = Q - C qd - G for the generalized accelerations."""
    p = body.pack()
    q = np.asarray(q, float)
    qd = np.asarray(qd, float)
    d, c, g = eom_matrices(q, qd, p[0], p[1], p[2], p[3], p[4], p[5], p[6],
                           p[7], p[13])
    rhs = np.asarray(q_force, float) - c @ qd - g
    try:
        qdd = np.linalg.solve(d, rhs)
    except np.linalg.LinAlgError as e:
        raise RolloutAbort(f"mass-matrix solve failed: {e}") from e
    if not np.all(np.isfinite(qdd)):
        raise RolloutAbort("non-finite accelerations")
    return qdd


def rk4_step(deriv, t, y, h):
    """Classic fourth-order Runge-Kutta step for dy/dt = deriv(t, y)."""
    k1 = deriv(t, y)
    k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = deriv(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
