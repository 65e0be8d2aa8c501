"""Hill-type musculotendon unit.

Excitation-to-activation is a first-order lag with activation-dependent time
constant.  Force production follows the modified Hill model: active element
scaled by force-length and force-velocity curves, a parallel damper, and a
parallel elastic element, all in series with a nonlinear-spring tendon.  The
fiber velocity is implicit (it appears inside the force-velocity curve and in
the damper), so each evaluation solves the fiber/tendon force balance with
Newton iterations, falling back to damped steps and bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .curves import CurveSet, curve_value, curve_vd

MUSCLES = ("TA", "SOL", "GAS", "FEM", "HAM", "GLU", "ILI")

ALPHA_MAX = math.radians(84.0)   # pennation clamp for near-collapsed fibers
FIBER_LENGTH_FLOOR = 0.05        # absolute floor on normalized fiber length
NEWTON_MAX_ITER = 100
DAMPED_MAX_ITER = 50
DAMPED_STEP = 0.5
BISECT_MAX_ITER = 200


class FiberVelocityError(RuntimeError):
    """Fiber-velocity solve failed to converge; the muscle state is pathological."""


@dataclass(frozen=True)
class MuscleParams:
    name: str
    f_opt: float          # peak isometric force, N
    l_opt: float          # optimal fiber length, m
    tendon_slack: float   # tendon slack length, m
    alpha_opt: float      # pennation at optimal fiber length, rad
    beta: float = 0.1     # parallel damping coefficient
    v_max: float = 10.0   # max shortening speed, optimal lengths per second
    tau_act: float = 0.01
    tau_deact: float = 0.04
    a_min: float = 0.01

    def __post_init__(self):
        if min(self.f_opt, self.l_opt, self.tendon_slack, self.tau_act,
               self.tau_deact, self.v_max) <= 0:
            raise ValueError(f"{self.name}: physiological parameters must be positive")
        if self.alpha_opt < 0 or self.alpha_opt >= math.pi / 2:
            raise ValueError(f"{self.name}: alpha_opt out of [0, pi/2)")
        if not 0 < self.a_min < 1:
            raise ValueError(f"{self.name}: a_min must be in (0,1)")


@dataclass
class MuscleState:
    activation: float
    l_m_tilde: float      # fiber length / l_opt
    v_m_tilde: float      # d(l_m_tilde)/dt, 1/s
    alpha: float          # pennation angle, rad
    l_t_tilde: float      # tendon length / slack length
    force: float          # total fiber force, N


@njit(cache=True)
def activation_rate(a, sigma, tau_act, tau_deact):
    """First-order excitation-to-activation lag (faster when turning on)."""
    if sigma > a:
        tau = tau_act * (0.5 + 1.5 * a)
    else:
        tau = tau_deact / (0.5 + 1.5 * a)
    return (sigma - a) / tau


@njit(cache=True)
def _pennation_sincos(l_m_tilde, sin_alpha_opt):
    if sin_alpha_opt <= 0.0:
        return 0.0, 1.0
    lo = max(FIBER_LENGTH_FLOOR, 1.05 * sin_alpha_opt)
    lm = l_m_tilde if l_m_tilde > lo else lo
    s = sin_alpha_opt / lm
    s_max = math.sin(ALPHA_MAX)
    if s > s_max:
        s = s_max
    return s, math.sqrt(1.0 - s * s)


def pennation(l_m_tilde, alpha_opt):
    """Pennation angle from the constant-height constraint l_m sin(alpha)."""
    s, _ = _pennation_sincos(float(l_m_tilde), math.sin(alpha_opt))
    return math.asin(s)


@njit(cache=True)
def _fiber_force_njit(a, l_m_tilde, v_m_tilde, f_opt, beta, v_max,
                      fl_xk, fl_c, fv_xk, fv_c, fpe_xk, fpe_c, ext):
    fl = curve_value(fl_xk, fl_c, ext[0], ext[1], l_m_tilde)
    fv = curve_value(fv_xk, fv_c, ext[2], ext[3], v_m_tilde / v_max)
    fpe = curve_value(fpe_xk, fpe_c, ext[4], ext[5], l_m_tilde)
    return f_opt * (a * fl * fv + beta * v_m_tilde + fpe)


@njit(cache=True)
def _tendon_force_njit(l_t_tilde, f_opt, ft_xk, ft_c, ext):
    return f_opt * curve_value(ft_xk, ft_c, ext[6], ext[7], l_t_tilde)


@njit(cache=True)
def _equilibrium_residual(v, a, fl, fpe, ft, cos_alpha, f_opt, beta, v_max,
                          fv_xk, fv_c, lo, hi):
    fv, dfv = curve_vd(fv_xk, fv_c, lo, hi, v / v_max)
    eps = f_opt * (a * fl * fv + beta * v + fpe) * cos_alpha - f_opt * ft
    deps = f_opt * (a * fl * dfv / v_max + beta) * cos_alpha
    return eps, deps


@njit(cache=True)
def _solve_fiber_velocity_njit(a, l_m_tilde, l_t_tilde, cos_alpha, f_opt, beta,
                               v_max, eps0, v_guess,
                               fl_xk, fl_c, fv_xk, fv_c, fpe_xk, fpe_c,
                               ft_xk, ft_c, ext):
    fl = curve_value(fl_xk, fl_c, ext[0], ext[1], l_m_tilde)
    fpe = curve_value(fpe_xk, fpe_c, ext[4], ext[5], l_m_tilde)
    ft = curve_value(ft_xk, ft_c, ext[6], ext[7], l_t_tilde)

    v = v_guess
    for _ in range(NEWTON_MAX_ITER):
        eps, deps = _equilibrium_residual(v, a, fl, fpe, ft, cos_alpha, f_opt,
                                          beta, v_max, fv_xk, fv_c, ext[2], ext[3])
        if abs(eps) < eps0:
            return v, True
        v = v - eps / deps

    # damped steps, then bisection on a bracket (residual is monotone in v)
    for _ in range(DAMPED_MAX_ITER):
        eps, deps = _equilibrium_residual(v, a, fl, fpe, ft, cos_alpha, f_opt,
                                          beta, v_max, fv_xk, fv_c, ext[2], ext[3])
        if abs(eps) < eps0:
            return v, True
        step = eps / deps
        if step > DAMPED_STEP * v_max:
            step = DAMPED_STEP * v_max
        elif step < -DAMPED_STEP * v_max:
            step = -DAMPED_STEP * v_max
        v = v - step

    lo_v, hi_v = -2.0 * v_max, 2.0 * v_max
    for _ in range(60):
        e_lo, _ = _equilibrium_residual(lo_v, a, fl, fpe, ft, cos_alpha, f_opt,
                                        beta, v_max, fv_xk, fv_c, ext[2], ext[3])
        e_hi, _ = _equilibrium_residual(hi_v, a, fl, fpe, ft, cos_alpha, f_opt,
                                        beta, v_max, fv_xk, fv_c, ext[2], ext[3])
        if e_lo <= 0.0 <= e_hi:
            break
        if e_lo > 0.0:
            lo_v *= 2.0
        if e_hi < 0.0:
            hi_v *= 2.0
    else:
        return v, False
    for _ in range(BISECT_MAX_ITER):
        v = 0.5 * (lo_v + hi_v)
        eps, _ = _equilibrium_residual(v, a, fl, fpe, ft, cos_alpha, f_opt,
                                       beta, v_max, fv_xk, fv_c, ext[2], ext[3])
        if abs(eps) < eps0:
            return v, True
        if eps < 0.0:
            lo_v = v
        else:
            hi_v = v
    return v, False


def fiber_force(a, l_m_tilde, v_m_tilde, curves: CurveSet, f_opt, beta=0.1,
                v_max=10.0):
    """Total fiber force: active (length x velocity scaled), damper, passive."""
    p = curves.pack()
    return _fiber_force_njit(a, l_m_tilde, v_m_tilde, f_opt, beta, v_max,
                             p[0], p[1], p[2], p[3], p[4], p[5], p[8])


def tendon_force(l_t_tilde, curves: CurveSet, f_opt):
    """Tendon tension; zero at or below slack length."""
    p = curves.pack()
    return _tendon_force_njit(l_t_tilde, f_opt, p[6], p[7], p[8])


def equilibrium_residual(v_m_tilde, a, l_m_tilde, l_t_tilde, curves: CurveSet,
                         params: MuscleParams):
    """Fiber/tendon force imbalance and its derivative wrt fiber velocity."""
    p = curves.pack()
    _, cos_a = _pennation_sincos(l_m_tilde, math.sin(params.alpha_opt))
    fl = curve_value(p[0], p[1], p[8][0], p[8][1], l_m_tilde)
    fpe = curve_value(p[4], p[5], p[8][4], p[8][5], l_m_tilde)
    ft = curve_value(p[6], p[7], p[8][6], p[8][7], l_t_tilde)
    return _equilibrium_residual(v_m_tilde, a, fl, fpe, ft, cos_a,
                                 params.f_opt, params.beta, params.v_max,
                                 p[2], p[3], p[8][2], p[8][3])


def solve_fiber_velocity(a, l_m_tilde, l_t_tilde, curves: CurveSet,
                         params: MuscleParams, v_guess=0.0, eps_rel=1e-6):
    """Fiber velocity satisfying the force balance to |residual| < eps_rel*f_opt."""
    p = curves.pack()
    _, cos_a = _pennation_sincos(l_m_tilde, math.sin(params.alpha_opt))
    v, ok = _solve_fiber_velocity_njit(a, l_m_tilde, l_t_tilde, cos_a,
                                       params.f_opt, params.beta, params.v_max,
                                       eps_rel * params.f_opt, v_guess,
                                       *p)
    if not ok:
        raise FiberVelocityError(
            f"{params.name}: fiber-velocity solve did not converge "
            f"(a={a:.4g}, l_m={l_m_tilde:.4g}, l_t={l_t_tilde:.4g})")
    return v


def init_fiber_length(l_mt, a_init, curves: CurveSet, params: MuscleParams):
    """Static-equilibrium fiber length for a given musculotendon length.

    Roots the isometric force balance; if no root brackets (very short
    musculotendon), place the tendon at slack instead.
    """
    sin_a_opt = math.sin(params.alpha_opt)

    def residual(lm):
        s, c = _pennation_sincos(lm, sin_a_opt)
        l_t = (l_mt - lm * params.l_opt * c) / params.tendon_slack
        fl = curves.fl.value(lm)
        fpe = curves.fpe.value(lm)
        ft = curves.ft.value(l_t)
        return (a_init * fl + fpe) * c - ft

    lo, hi = 0.3, 1.7
    if residual(lo) * residual(hi) < 0:
        return brentq(residual, lo, hi, xtol=1e-12)
    # tendon-at-slack fallback: l_m cos(a) = l_mt - slack, l_m sin(a) fixed
    free = max(l_mt - params.tendon_slack, 1e-6)
    lm = math.hypot(free, params.l_opt * sin_a_opt) / params.l_opt
    return max(lm, FIBER_LENGTH_FLOOR)


def muscle_state(a, l_m_tilde, l_mt, curves: CurveSet, params: MuscleParams,
                 v_guess=0.0):
    """Assemble the full muscle state (solves fiber velocity and forces)."""
    alpha = pennation(l_m_tilde, params.alpha_opt)
    l_t = (l_mt - l_m_tilde * params.l_opt * math.cos(alpha)) / params.tendon_slack
    v = solve_fiber_velocity(a, l_m_tilde, l_t, curves, params, v_guess)
    f = fiber_force(a, l_m_tilde, v, curves, params.f_opt, params.beta,
                    params.v_max)
    return MuscleState(activation=a, l_m_tilde=l_m_tilde, v_m_tilde=v,
                       alpha=alpha, l_t_tilde=l_t, force=f)


def pack_muscles(muscles):
    """Per-muscle parameter arrays for the compiled rollout kernel."""
    n = len(muscles)
    out = {k: np.zeros(n) for k in
           ("f_opt", "l_opt", "tendon_slack", "sin_alpha_opt", "beta", "v_max",
            "tau_act", "tau_deact", "a_min")}
    for i, m in enumerate(muscles):
        out["f_opt"][i] = m.f_opt
        out["l_opt"][i] = m.l_opt
        out["tendon_slack"][i] = m.tendon_slack
        out["sin_alpha_opt"][i] = math.sin(m.alpha_opt)
        out["beta"][i] = m.beta
        out["v_max"][i] = m.v_max
        out["tau_act"][i] = m.tau_act
        out["tau_deact"][i] = m.tau_deact
        out["a_min"][i] = m.a_min
    return (out["f_opt"], out["l_opt"], out["tendon_slack"], out["sin_alpha_opt"],
            out["beta"], out["v_max"], out["tau_act"], out["tau_deact"],
            out["a_min"])
