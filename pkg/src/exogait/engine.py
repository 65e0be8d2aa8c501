"""Compiled rollout engine.

One controller step = reflex evaluation at the 5 ms controller period
(phase update, excitations, log row) followed by RK4 substeps at 0.5 ms
advancing the coupled ODE state (generalized coordinates and velocities,
muscle activations, fiber lengths).  Excitations are held over the
controller period; fiber velocity is an algebraic variable re-solved at
every stage evaluation.

Everything here is numba-compiled; the Python-facing wrapper lives in
harness.py.  Status codes: 0 horizon reached, 1 fall, 2 non-finite state,
3 fiber-velocity solve failure.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .muscle import _pennation_sincos, _solve_fiber_velocity_njit, activation_rate
from .plant import N_Q, chain_jacobians, contact_forces, eom_matrices
from .reflex import classify_leg_phase, leg_excitations

N_MUS = 14
N_STATE = 2 * N_Q + 2 * N_MUS

STATUS_HORIZON = 0
STATUS_FELL = 1
STATUS_NONFINITE = 2
STATUS_MUSCLE = 3

# log column offsets (see harness.LOG_COLUMNS for the full ordered schema)
C_T = 0
C_Q = 1
C_QD = 12
C_SIG = 23
C_ACT = 37
C_F = 51
C_GRF = 65
C_TAU = 73
C_TINT = 79
C_PHASE = 81
C_MET = 83
N_LOG_COLS = 84


@njit(cache=True)
def _curve_val(xk, ctrl, lo, hi, x):
    if x <= xk[0]:
        return ctrl[0, 0] + lo * (x - xk[0])
    n = xk.shape[0] - 1
    if x >= xk[n]:
        return ctrl[n - 1, 5] + hi * (x - xk[n])
    i = 0
    for k in range(n - 1):
        if x >= xk[k + 1]:
            i = k + 1
    u = (x - xk[i]) / (xk[i + 1] - xk[i])
    c = ctrl[i]
    b0 = c[0] + (c[1] - c[0]) * u
    b1 = c[1] + (c[2] - c[1]) * u
    b2 = c[2] + (c[3] - c[2]) * u
    b3 = c[3] + (c[4] - c[3]) * u
    b4 = c[4] + (c[5] - c[4]) * u
    c0 = b0 + (b1 - b0) * u
    c1 = b1 + (b2 - b1) * u
    c2 = b2 + (b3 - b2) * u
    c3 = b3 + (b4 - b3) * u
    d0 = c0 + (c1 - c0) * u
    d1 = c1 + (c2 - c1) * u
    d2 = c2 + (c3 - c2) * u
    e0 = d0 + (d1 - d0) * u
    e1 = d1 + (d2 - d1) * u
    return e0 + (e1 - e0) * u


@njit(cache=True)
def _muscle_geometry(q, i, kind, jid, p1, p2, tb2):
    """Musculotendon length and signed per-joint arms for muscle instance i."""
    base = 3 if i < 7 else 7
    k = i % 7
    th1 = q[base + jid[k, 0]]
    u0, u1 = p1[k, 0], p1[k, 1]
    c1, s1 = np.cos(th1), np.sin(th1)
    if kind[k] == 0:
        wx = c1 * p2[k, 0] - s1 * p2[k, 1]
        wy = s1 * p2[k, 0] + c1 * p2[k, 1]
        dx, dy = u0 - wx, u1 - wy
        dist = np.sqrt(dx * dx + dy * dy)
        arm1 = -(u0 * wy - u1 * wx) / dist
        return dist, arm1, 0.0
    th2 = q[base + jid[k, 1]]
    c2, s2 = np.cos(th2), np.sin(th2)
    vx = c2 * p2[k, 0] - s2 * p2[k, 1]
    vy = s2 * p2[k, 0] + c2 * p2[k, 1]
    bx, by = tb2[k, 0] + vx, tb2[k, 1] + vy
    wx = c1 * bx - s1 * by
    wy = s1 * bx + c1 * by
    dx, dy = u0 - wx, u1 - wy
    dist = np.sqrt(dx * dx + dy * dy)
    arm1 = -(u0 * wy - u1 * wx) / dist
    # proximal attachment expressed in the far joint's frame
    ux = c1 * u0 + s1 * u1 - tb2[k, 0]
    uy = -s1 * u0 + c1 * u1 - tb2[k, 1]
    arm2 = -(ux * vy - uy * vx) / dist
    return dist, arm1, arm2


@njit(cache=True)
def muscle_pass(q, a, lm, v_last, eps_rel, path_pack, mus_pack, curve_pack,
                force_out, vm_out, tau_out):
    """Solve all 14 muscles and accumulate joint torques into tau_out."""
    (kind, jid, p1, p2, tb2) = path_pack
    (f_opt, l_opt, l_slack, sin_a_opt, beta, v_max, tau_act, tau_deact, a_min) = mus_pack
    (fl_xk, fl_c, fv_xk, fv_c, fpe_xk, fpe_c, ft_xk, ft_c, ext) = curve_pack
    for i in range(N_MUS):
        k = i % 7
        base = 3 if i < 7 else 7
        l_mt, arm1, arm2 = _muscle_geometry(q, i, kind, jid, p1, p2, tb2)
        sin_a, cos_a = _pennation_sincos(lm[i], sin_a_opt[k])
        l_t = (l_mt - lm[i] * l_opt[k] * cos_a) / l_slack[k]
        v, ok = _solve_fiber_velocity_njit(
            a[i], lm[i], l_t, cos_a, f_opt[k], beta[k], v_max[k],
            eps_rel * f_opt[k], v_last[i],
            fl_xk, fl_c, fv_xk, fv_c, fpe_xk, fpe_c, ft_xk, ft_c, ext)
        if not ok:
            return False
        v_last[i] = v
        fl = _curve_val(fl_xk, fl_c, ext[0], ext[1], lm[i])
        fv = _curve_val(fv_xk, fv_c, ext[2], ext[3], v / v_max[k])
        fpe = _curve_val(fpe_xk, fpe_c, ext[4], ext[5], lm[i])
        f_m = f_opt[k] * (a[i] * fl * fv + beta[k] * v + fpe)
        force_out[i] = f_m
        vm_out[i] = v
        f_line = f_m * cos_a
        tau_out[base + jid[k, 0]] += f_line * arm1
        if kind[k] == 1:
            tau_out[base + jid[k, 1]] += f_line * arm2
    return True


@njit(cache=True)
def _stage(y, ydot, sigma, v_last, eps_rel, mus_pack, path_pack, curve_pack,
           body_pack, contact_pack, nu, tau_exo_r, tau_exo_l, k_int, d_int,
           force_scratch, vm_scratch):
    """One vector-field evaluation of the coupled ODE."""
    (masses, imat, dep_count, dep_idx, seg_counts, seg_coef, seg_kind, seg_phi,
     con_counts, con_coef, con_kind, con_phi, radius, grav) = body_pack
    (ck, cc, mu_s, mu_d, mu_v, v_t) = contact_pack
    (f_opt, l_opt, l_slack, sin_a_opt, beta, v_max, tau_act, tau_deact, a_min) = mus_pack

    q = y[:N_Q]
    qd = y[N_Q:2 * N_Q]
    a = y[2 * N_Q:2 * N_Q + N_MUS]
    lm = y[2 * N_Q + N_MUS:]
    for i in range(y.shape[0]):
        if not np.isfinite(y[i]):
            return False

    tau = np.zeros(N_Q)
    if not muscle_pass(q, a, lm, v_last, eps_rel, path_pack, mus_pack,
                       curve_pack, force_scratch, vm_scratch, tau):
        return False

    t_int_r = k_int * q[6] + d_int * qd[6]
    t_int_l = k_int * q[10] + d_int * qd[10]
    tau[3] += t_int_r
    tau[6] += tau_exo_r - t_int_r
    tau[7] += t_int_l
    tau[10] += tau_exo_l - t_int_l

    cpos, cvel, cjac, _ = chain_jacobians(q, qd, con_counts, con_coef,
                                          con_kind, con_phi, dep_count, dep_idx)
    fx = np.zeros(4)
    fy = np.zeros(4)
    fn = np.zeros(4)
    ff = np.zeros(4)
    contact_forces(cpos, cvel, nu, radius, ck, cc, mu_s, mu_d, mu_v, v_t,
                   fx, fy, fn, ff)
    for p in range(4):
        for iq in range(N_Q):
            tau[iq] += cjac[p, iq] * fx[p] + cjac[4 + p, iq] * fy[p]

    d, cmat, gvec = eom_matrices(q, qd, masses, imat, dep_count, dep_idx,
                                 seg_counts, seg_coef, seg_kind, seg_phi, grav)
    qdd = np.linalg.solve(d, tau - cmat @ qd - gvec)

    for i in range(N_Q):
        ydot[i] = qd[i]
        ydot[N_Q + i] = qdd[i]
    for i in range(N_MUS):
        ydot[2 * N_Q + i] = activation_rate(a[i], sigma[i], tau_act[i % 7],
                                            tau_deact[i % 7])
        ydot[2 * N_Q + N_MUS + i] = vm_scratch[i]
    return True


@njit(cache=True)
def _com_state(q, qd, body_pack):
    (masses, imat, dep_count, dep_idx, seg_counts, seg_coef, seg_kind, seg_phi,
     con_counts, con_coef, con_kind, con_phi, radius, grav) = body_pack
    pos, vel, _, _ = chain_jacobians(q, qd, seg_counts, seg_coef, seg_kind,
                                     seg_phi, dep_count, dep_idx)
    tot = 0.0
    cx = 0.0
    cy = 0.0
    vx = 0.0
    for j in range(pos.shape[0]):
        tot += masses[j]
        cx += masses[j] * pos[j, 0]
        cy += masses[j] * pos[j, 1]
        vx += masses[j] * vel[j, 0]
    return cx / tot, cy / tot, vx / tot


@njit(cache=True)
def run_rollout(q0, qd0, a0, lm0, phase0, w,
                mus_pack, path_pack, curve_pack, body_pack, contact_pack,
                met_pack, k_int, d_int, nu, dt_sim, n_sub, n_steps, f_contact,
                fall_frac, eps_rel, tau_exo_profile, log_out, aux_out):
    """Simulate up to n_steps controller periods.

    Returns (steps_logged, status).  aux_out rows carry
    (x_com, y_com, vx_com, fell_flag).
    """
    (masses, imat, dep_count, dep_idx, seg_counts, seg_coef, seg_kind, seg_phi,
     con_counts, con_coef, con_kind, con_phi, radius, grav) = body_pack
    (ck, cc, mu_s, mu_d, mu_v, v_t) = contact_pack
    (f_opt, l_opt, l_slack, sin_a_opt, beta, v_max, tau_act, tau_deact, a_min) = mus_pack
    (fl_xk, fl_c, fv_xk, fv_c, fpe_xk, fpe_c, ft_xk, ft_c, ext) = curve_pack
    (met_mass, met_rate_a, met_rate_m, met_shorten) = met_pack

    h = dt_sim / n_sub
    q = q0.copy()
    qd = qd0.copy()
    a = a0.copy()
    lm = lm0.copy()
    phases = phase0.copy()
    v_last = np.zeros(N_MUS)
    sigma = np.zeros(N_MUS)
    force = np.zeros(N_MUS)
    vm = np.zeros(N_MUS)
    fx = np.zeros(4)
    fy = np.zeros(4)
    fn = np.zeros(4)
    ff = np.zeros(4)
    tau_log = np.zeros(N_Q)
    sig_leg = np.zeros(7)
    lm_leg = np.zeros(7)
    fn_leg = np.zeros(7)
    fstage = np.zeros(N_MUS)
    vstage = np.zeros(N_MUS)

    y = np.zeros(N_STATE)
    ytmp = np.zeros(N_STATE)
    k1 = np.zeros(N_STATE)
    k2 = np.zeros(N_STATE)
    k3 = np.zeros(N_STATE)
    k4 = np.zeros(N_STATE)

    slope_norm = np.sqrt(1.0 + nu * nu)
    h_ref = (q[1] - nu * q[0]) / slope_norm

    status = STATUS_HORIZON
    steps = 0
    for step in range(n_steps):
        # muscle snapshot at the controller instant (reflex inputs + log)
        tau_log[:] = 0.0
        if not muscle_pass(q, a, lm, v_last, eps_rel, path_pack, mus_pack,
                           curve_pack, force, vm, tau_log):
            status = STATUS_MUSCLE
            break

        cpos, cvel, _, _ = chain_jacobians(q, qd, con_counts, con_coef,
                                           con_kind, con_phi, dep_count, dep_idx)
        contact_forces(cpos, cvel, nu, radius, ck, cc, mu_s, mu_d, mu_v, v_t,
                       fx, fy, fn, ff)
        grf_r = fn[0] + fn[1]
        grf_l = fn[2] + fn[3]
        if step == 0:
            grf_r_prev = grf_r
            grf_l_prev = grf_l
        foot_r_x = 0.5 * (cpos[0, 0] + cpos[1, 0])
        foot_l_x = 0.5 * (cpos[2, 0] + cpos[3, 0])
        ph_r_old = phases[0]
        ph_l_old = phases[1]
        phases[0] = classify_leg_phase(ph_r_old, grf_r, grf_l, grf_l_prev,
                                       ph_l_old, foot_r_x, q[0], f_contact)
        phases[1] = classify_leg_phase(ph_l_old, grf_l, grf_r, grf_r_prev,
                                       ph_r_old, foot_l_x, q[0], f_contact)
        grf_r_prev = grf_r
        grf_l_prev = grf_l

        for leg in range(2):
            off = 7 * leg
            # knee angle fed extension-positive so the conditional switch
            # inhibits the extensor during (hyper)extension
            knee_q = q[4 + 4 * leg]
            knee_qd = qd[4 + 4 * leg]
            for m in range(7):
                lm_leg[m] = lm[off + m]
                fnm = force[off + m] / f_opt[m]
                fn_leg[m] = fnm if fnm > 0.0 else 0.0
            leg_excitations(phases[leg], q[2], qd[2], knee_q, knee_qd,
                            lm_leg, fn_leg, w, sig_leg)
            for m in range(7):
                sigma[off + m] = sig_leg[m]

        tau_exo_r = tau_exo_profile[step, 0]
        tau_exo_l = tau_exo_profile[step, 1]
        t_int_r = k_int * q[6] + d_int * qd[6]
        t_int_l = k_int * q[10] + d_int * qd[10]

        met = 0.0
        for i in range(N_MUS):
            kk = i % 7
            fl_i = _curve_val(fl_xk, fl_c, ext[0], ext[1], lm[i])
            fv_i = _curve_val(fv_xk, fv_c, ext[2], ext[3], vm[i] / v_max[kk])
            f_ce = f_opt[kk] * a[i] * fl_i * fv_i
            v_mps = vm[i] * l_opt[kk]
            r_a = met_mass[kk] * met_rate_a * a[i] * a[i]
            r_m = met_mass[kk] * met_rate_m * fl_i * a[i]
            r_s = met_shorten * f_ce * (-v_mps) if v_mps < 0.0 else 0.0
            r_w = -f_ce * v_mps if f_ce * v_mps < 0.0 else 0.0
            met += r_a + r_m + r_s + r_w

        row = log_out[step]
        row[C_T] = step * dt_sim
        for i in range(N_Q):
            row[C_Q + i] = q[i]
            row[C_QD + i] = qd[i]
        for i in range(N_MUS):
            row[C_SIG + i] = sigma[i]
            row[C_ACT + i] = a[i]
            row[C_F + i] = force[i]
        for i in range(4):
            row[C_GRF + i] = fn[i]
            row[C_GRF + 4 + i] = ff[i]
        row[C_TAU + 0] = tau_log[3]
        row[C_TAU + 1] = tau_log[4]
        row[C_TAU + 2] = tau_log[5]
        row[C_TAU + 3] = tau_log[7]
        row[C_TAU + 4] = tau_log[8]
        row[C_TAU + 5] = tau_log[9]
        row[C_TINT + 0] = t_int_r
        row[C_TINT + 1] = t_int_l
        row[C_PHASE + 0] = phases[0]
        row[C_PHASE + 1] = phases[1]
        row[C_MET] = met

        cx, cy, vx = _com_state(q, qd, body_pack)
        aux_out[step, 0] = cx
        aux_out[step, 1] = cy
        aux_out[step, 2] = vx
        aux_out[step, 3] = 0.0
        steps = step + 1

        h_now = (q[1] - nu * q[0]) / slope_norm
        if h_now < fall_frac * h_ref:
            aux_out[step, 3] = 1.0
            status = STATUS_FELL
            break

        abort = False
        for _ in range(n_sub):
            for i in range(N_Q):
                y[i] = q[i]
                y[N_Q + i] = qd[i]
            for i in range(N_MUS):
                y[2 * N_Q + i] = a[i]
                y[2 * N_Q + N_MUS + i] = lm[i]

            if not _stage(y, k1, sigma, v_last, eps_rel, mus_pack, path_pack,
                          curve_pack, body_pack, contact_pack, nu, tau_exo_r,
                          tau_exo_l, k_int, d_int, fstage, vstage):
                abort = True
                break
            for i in range(N_STATE):
                ytmp[i] = y[i] + 0.5 * h * k1[i]
            if not _stage(ytmp, k2, sigma, v_last, eps_rel, mus_pack, path_pack,
                          curve_pack, body_pack, contact_pack, nu, tau_exo_r,
                          tau_exo_l, k_int, d_int, fstage, vstage):
                abort = True
                break
            for i in range(N_STATE):
                ytmp[i] = y[i] + 0.5 * h * k2[i]
            if not _stage(ytmp, k3, sigma, v_last, eps_rel, mus_pack, path_pack,
                          curve_pack, body_pack, contact_pack, nu, tau_exo_r,
                          tau_exo_l, k_int, d_int, fstage, vstage):
                abort = True
                break
            for i in range(N_STATE):
                ytmp[i] = y[i] + h * k3[i]
            if not _stage(ytmp, k4, sigma, v_last, eps_rel, mus_pack, path_pack,
                          curve_pack, body_pack, contact_pack, nu, tau_exo_r,
                          tau_exo_l, k_int, d_int, fstage, vstage):
                abort = True
                break

            for i in range(N_STATE):
                y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i]
                                           + k4[i])
            for i in range(N_Q):
                q[i] = y[i]
                qd[i] = y[N_Q + i]
            for i in range(N_MUS):
                ai = y[2 * N_Q + i]
                lo = a_min[i % 7]
                if ai < lo:
                    ai = lo
                elif ai > 1.0:
                    ai = 1.0
                a[i] = ai
                lm[i] = y[2 * N_Q + N_MUS + i]

        if abort:
            status = STATUS_MUSCLE
            break
        finite = True
        for i in range(N_Q):
            if not (np.isfinite(q[i]) and np.isfinite(qd[i])):
                finite = False
        for i in range(N_MUS):
            if not (np.isfinite(a[i]) and np.isfinite(lm[i])):
                finite = False
        if not finite:
            status = STATUS_NONFINITE
            break

    return steps, status
