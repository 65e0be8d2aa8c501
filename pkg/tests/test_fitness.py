import math

import numpy as np
import pytest

from exogait.fitness import (EFFORT_SENTINEL, FitnessConfig, MetabolicRates,
                             fitness_j1, fitness_j2, j_angle, j_effort, j_grf,
                             j_vel, metabolic_rates)
from exogait.harness import LOG_COLUMNS, RolloutResult, Scenario


def _fake_rollout(n=100, dt=0.005, v=1.0, fell=False, ankle=0.0, grf_leg=0.0,
                  met=0.0, x_final=2.0):
    log = np.zeros((n, len(LOG_COLUMNS)))
    log[:, 0] = np.arange(n) * dt
    log[:, LOG_COLUMNS.index("q_q_ra")] = ankle
    log[:, LOG_COLUMNS.index("q_q_la")] = ankle
    log[:, LOG_COLUMNS.index("grf_r_heel_n")] = grf_leg / 2
    log[:, LOG_COLUMNS.index("grf_r_toe_n")] = grf_leg / 2
    log[:, LOG_COLUMNS.index("met_rate_w")] = met
    aux = np.zeros((n, 4))
    aux[:, 0] = np.linspace(0, x_final, n)
    aux[:, 2] = v
    sc = Scenario("t", 0.0, 1.0, horizon=n * dt, dt_sim=dt)
    return RolloutResult(log=log, aux=aux, status="fell" if fell else "horizon",
                         scenario=sc)


@pytest.fixture
def fc():
    return FitnessConfig(psi=10.0, nu=0.0, v_des=1.0, w_vel=100.0, w_angle=0.1,
                         w_grf=10.0, w_effort=0.1, ankle_max=math.radians(60),
                         ankle_min=math.radians(-60), f_grf_hat=1096.4,
                         mass=74.5314, g=9.794, dt_sim=0.005)


def test_fitness_j1_examples():
    r = _fake_rollout(x_final=4.0)
    assert fitness_j1(r, 10.0, 0.0) == pytest.approx(6.0, abs=1e-12)
    r = _fake_rollout(x_final=12.0)
    j1 = fitness_j1(r, 10.0, 0.0)
    assert j1 == pytest.approx(-2.0, abs=1e-12)
    assert j1 < 0  # the step-1 -> step-2 switch condition
    r = _fake_rollout(x_final=4.0)
    assert fitness_j1(r, 10.0, 0.1) == pytest.approx(10.0 - math.sqrt(1.01) * 4.0,
                                                     abs=1e-12)


def test_j_vel_examples():
    assert j_vel(np.full(50, 1.0), 1.0, False) == 0.0
    assert j_vel(np.full(50, 1.1), 1.0, False) == pytest.approx(0.01, abs=1e-12)
    assert j_vel(np.full(50, 1.0), 1.0, True) == pytest.approx(1.0, abs=1e-12)


def test_j_angle_examples():
    q_max, q_min = math.radians(60), math.radians(-60)
    angles = np.zeros((100, 2))
    assert j_angle(angles, q_max, q_min) == 0.0
    # one leg constantly 5 degrees above the max for the whole rollout
    angles[:, 0] = q_max + math.radians(5)
    assert j_angle(angles, q_max, q_min) == pytest.approx(math.radians(5), abs=1e-12)
    # excess below the minimum counts positively
    angles[:, 0] = q_min - math.radians(3)
    assert j_angle(angles, q_max, q_min) == pytest.approx(math.radians(3), abs=1e-12)


def test_j_grf_examples():
    mg = 74.5314 * 9.794
    f = np.zeros((100, 2))
    f[:, 0] = 1000.0
    assert j_grf(f, 1096.4, 74.5314, 9.794) == 0.0
    # constant exceedance of one body weight on one leg
    f[:, 0] = 1096.4 + mg
    assert j_grf(f, 1096.4, 74.5314, 9.794) == pytest.approx(1.0, rel=1e-12)
    assert j_grf(np.zeros((10, 2)), 1096.4, 74.5314, 9.794) == 0.0


def test_j_effort_examples():
    assert j_effort(np.zeros(100), 2.0, 0.005, 74.5314) == 0.0
    # constant rate R over duration T and distance X -> R*T/(m*X)
    rate = 300.0
    n, dt, x = 200, 0.005, 2.0
    val = j_effort(np.full(n, rate), x, dt, 74.5314)
    assert val == pytest.approx(rate * n * dt / (74.5314 * x), rel=1e-12)
    # doubling the distance at equal heat halves the effort
    assert j_effort(np.full(n, rate), 2 * x, dt, 74.5314) == pytest.approx(val / 2)
    assert j_effort(np.full(n, rate), 0.0, dt, 74.5314) == EFFORT_SENTINEL
    assert j_effort(np.full(n, rate), -1.0, dt, 74.5314) == EFFORT_SENTINEL


def test_fitness_j2_weighted_sum(fc):
    r = _fake_rollout(v=1.0, x_final=2.0)
    j2, comp = fitness_j2(r, fc)
    assert comp["j_vel"] == 0.0 and comp["j_angle"] == 0.0 and comp["j_grf"] == 0.0
    assert j2 == pytest.approx(0.1 * comp["j_effort"], abs=1e-12)
    # synthetic: j_vel = 0.01 and others zero -> J2 = 1.0 under Table weights
    r = _fake_rollout(v=1.1, x_final=2.0)
    j2, comp = fitness_j2(r, fc)
    assert comp["j_vel"] == pytest.approx(0.01, abs=1e-14)
    assert j2 == pytest.approx(100.0 * 0.01 + 0.1 * comp["j_effort"], abs=1e-12)


def test_j2_components_match_single_pass_oracle(fc, rng):
    """Independent one-pass recomputation of all four components agrees to
    1e-10 (spec invariant)."""
    n = 400
    r = _fake_rollout(n=n)
    r.aux[:, 2] = rng.uniform(0.5, 1.5, n)
    r.log[:, LOG_COLUMNS.index("q_q_ra")] = rng.uniform(-1.5, 1.5, n)
    r.log[:, LOG_COLUMNS.index("q_q_la")] = rng.uniform(-1.5, 1.5, n)
    for c in ("grf_r_heel_n", "grf_r_toe_n", "grf_l_heel_n", "grf_l_toe_n"):
        r.log[:, LOG_COLUMNS.index(c)] = rng.uniform(0, 800, n)
    r.log[:, LOG_COLUMNS.index("met_rate_w")] = rng.uniform(0, 500, n)

    _, comp = fitness_j2(r, fc)

    acc_vel = acc_ang = acc_grf = acc_eff = 0.0
    for i in range(n):
        acc_vel += (r.aux[i, 2] - fc.v_des) ** 2
        for c in ("q_q_ra", "q_q_la"):
            qa = r.log[i, LOG_COLUMNS.index(c)]
            acc_ang += max(qa - fc.ankle_max, 0.0) - min(qa - fc.ankle_min, 0.0)
        for heel, toe in (("grf_r_heel_n", "grf_r_toe_n"),
                          ("grf_l_heel_n", "grf_l_toe_n")):
            tot = (r.log[i, LOG_COLUMNS.index(heel)]
                   + r.log[i, LOG_COLUMNS.index(toe)])
            acc_grf += max(tot - fc.f_grf_hat, 0.0)
        acc_eff += r.log[i, LOG_COLUMNS.index("met_rate_w")]
    assert comp["j_vel"] == pytest.approx(acc_vel / n, abs=1e-10)
    assert comp["j_angle"] == pytest.approx(acc_ang / n, abs=1e-10)
    assert comp["j_grf"] == pytest.approx(acc_grf / n / (fc.mass * fc.g), abs=1e-10)
    assert comp["j_effort"] == pytest.approx(
        acc_eff * fc.dt_sim / fc.mass / r.x_com_final, abs=1e-10)
    for v in comp.values():
        assert v >= 0.0


def test_metabolic_rates(curves, sol_muscle):
    # near rest: only the activation/maintenance floor remains
    r = metabolic_rates(0.01, 1.0, 0.0, sol_muscle, curves)
    assert r.r_s == 0.0 and r.r_w == 0.0
    assert r.r_a > 0.0 and r.r_m > 0.0
    # no positive work during lengthening
    r = metabolic_rates(0.5, 1.0, 2.0, sol_muscle, curves)
    assert r.r_w == 0.0 and r.r_s == 0.0
    # shortening produces both shortening heat and positive work
    r = metabolic_rates(0.5, 1.0, -2.0, sol_muscle, curves)
    assert r.r_w > 0.0 and r.r_s > 0.0
    assert r.total == pytest.approx(r.r_a + r.r_m + r.r_s + r.r_w)
    assert isinstance(r, MetabolicRates)


def test_metabolic_total_monotone_in_activation(curves, sol_muscle):
    for v in (-1.0, 0.0, 1.0):
        totals = [metabolic_rates(a, 1.0, v, sol_muscle, curves).total
                  for a in np.linspace(0.01, 1.0, 30)]
        assert np.all(np.diff(totals) > 0)
