import itertools
import math

import numpy as np
import pytest

from exogait.geometry import (JOINTS, MusclePath, Transform2D,
                              aggregate_torques, load_geometry,
                              moment_arm_bi, moment_arm_mono, mt_length_velocity,
                              muscle_torque, signed_arms_and_length)

RANGES = {"hip": (-0.7, 0.9), "knee": (-1.5, 0.35), "ankle": (-0.7, 0.7)}


@pytest.fixture(scope="module")
def paths():
    return load_geometry()


def test_moment_arm_hand_example():
    # |p1 x p2| / |p1 - p2| with p1=(0, 0.1), p2=(0.05, -0.2)
    path = MusclePath("X", ("knee",), np.array([0.0, 0.1]), np.array([0.05, -0.2]))
    d = moment_arm_mono(path, 0.0)
    assert d == pytest.approx(0.005 / math.hypot(-0.05, 0.3), abs=1e-12)
    assert d == pytest.approx(0.016440, abs=5e-6)


def test_moment_arm_collinear_is_zero():
    path = MusclePath("X", ("knee",), np.array([0.0, 0.1]), np.array([0.0, -0.2]))
    assert moment_arm_mono(path, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_degenerate_geometry_raises():
    path = MusclePath("X", ("knee",), np.array([0.1, 0.1]), np.array([0.1, 0.1]))
    with pytest.raises(ValueError, match="degenerate"):
        moment_arm_mono(path, 0.0)


def test_biarticular_identity_rotation_matches_straight_path():
    p1 = np.array([-0.05, 0.0])
    p3 = np.array([-0.03, -0.02])
    path = MusclePath("X", ("hip", "knee"), p1, p3,
                      t_b_j2=Transform2D(0.0, 0.0, -0.4))
    d1, d2 = moment_arm_bi(path, 0.0, 0.0)
    # both arms equal the perpendicular offsets of the straight path
    L, arms = signed_arms_and_length(path, (0.0, 0.0))
    assert d1 == pytest.approx(abs(arms[0]), abs=1e-12)
    assert d2 == pytest.approx(abs(arms[1]), abs=1e-12)
    w = p3 + np.array([0.0, -0.4])
    cross = p1[0] * w[1] - p1[1] * w[0]
    assert d1 == pytest.approx(abs(cross) / np.linalg.norm(p1 - w), abs=1e-12)


def test_unsigned_arm_equals_abs_signed(paths, rng):
    for p in paths.values():
        nj = len(p.joints)
        for _ in range(20):
            th = [rng.uniform(*RANGES[j]) for j in p.joints]
            _, arms = signed_arms_and_length(p, th)
            if nj == 1:
                assert moment_arm_mono(p, th[0]) == pytest.approx(abs(arms[0]), abs=1e-12)
            else:
                d1, d2 = moment_arm_bi(p, *th)
                assert d1 == pytest.approx(abs(arms[0]), abs=1e-12)
                assert d2 == pytest.approx(abs(arms[1]), abs=1e-12)


def test_virtual_work_consistency(paths, rng):
    """Acceptance criterion 3: every muscle, 100 random postures,
    |d_mus - |dL/dtheta|| < 1e-4 m via central differences."""
    h = 1e-6
    for p in paths.values():
        nj = len(p.joints)
        for _ in range(100):
            th = np.array([rng.uniform(*RANGES[j]) for j in p.joints])
            _, arms = signed_arms_and_length(p, th)
            for j in range(nj):
                e = np.zeros(nj)
                e[j] = h
                lp, _ = signed_arms_and_length(p, th + e)
                lm, _ = signed_arms_and_length(p, th - e)
                fd = -(lp - lm) / (2 * h)
                assert abs(fd - arms[j]) < 1e-4


def test_ham_arms_positive_and_bounded_mid_stance(paths):
    # mid-stance-ish posture: slight hip extension, slight knee flexion
    d1, d2 = moment_arm_bi(paths["HAM"], -0.1, -0.2)
    assert 0.0 < d1 < 0.08
    assert 0.0 < d2 < 0.08


def test_mt_length_velocity(paths, rng):
    ham = paths["HAM"]
    l, v = mt_length_velocity(ham, (0.2, -0.3), (0.0, 0.0))
    assert v == 0.0
    # velocity equals -sum(arm * rate), cross-checked by finite differences
    for _ in range(30):
        th = np.array([rng.uniform(*RANGES[j]) for j in ham.joints])
        thd = rng.uniform(-3, 3, 2)
        _, v = mt_length_velocity(ham, th, thd)
        h = 1e-6
        lp, _ = mt_length_velocity(ham, th + h * thd, (0, 0))
        lm, _ = mt_length_velocity(ham, th - h * thd, (0, 0))
        assert v == pytest.approx((lp - lm) / (2 * h), abs=1e-5)
    # monoarticular: v = -arm * rate with the signed-arm convention
    sol = paths["SOL"]
    _, arms = signed_arms_and_length(sol, (0.1,))
    _, v = mt_length_velocity(sol, (0.1,), (2.0,))
    assert v == pytest.approx(-arms[0] * 2.0, abs=1e-12)


def test_length_continuous_over_range(paths):
    for p in paths.values():
        grids = [np.linspace(*RANGES[j], 200) for j in p.joints]
        if len(p.joints) == 1:
            ls = [signed_arms_and_length(p, (t,))[0] for t in grids[0]]
            assert np.all(np.abs(np.diff(ls)) < 0.01)


def test_muscle_torque_examples():
    assert muscle_torque(0.0, 0.3, 0.05) == 0.0
    assert muscle_torque(1000.0, 0.0, 0.05) == pytest.approx(50.0, abs=1e-12)
    assert muscle_torque(1000.0, math.radians(60), 0.05) == pytest.approx(25.0, abs=1e-9)


def test_aggregate_torques():
    contrib = {("r", "ankle"): [10.0, -2.0], ("r", "knee"): [5.0]}
    out = aggregate_torques(contrib)
    assert out[("r", "ankle")] == pytest.approx(8.0)
    assert out[("r", "knee")] == pytest.approx(5.0)
    assert out[("l", "hip")] == 0.0
    with pytest.raises(KeyError):
        aggregate_torques({("r", "elbow"): [1.0]})


def test_antagonist_signs_at_ankle(paths):
    _, ta = signed_arms_and_length(paths["TA"], (0.0,))
    _, sol = signed_arms_and_length(paths["SOL"], (0.0,))
    assert ta[0] * sol[0] < 0  # dorsiflexor vs plantarflexor


def test_biarticular_couplings(paths):
    # gastrocnemius: knee flexor and plantarflexor
    _, gas = signed_arms_and_length(paths["GAS"], (0.0, 0.0))
    assert gas[0] < 0 and gas[1] < 0
    # hamstrings: hip extensor and knee flexor
    _, ham = signed_arms_and_length(paths["HAM"], (0.0, 0.0))
    assert ham[0] < 0 and ham[1] < 0
    # FEM extends the knee, ILI flexes the hip, GLU extends the hip
    assert signed_arms_and_length(paths["FEM"], (0.0,))[1][0] > 0
    assert signed_arms_and_length(paths["ILI"], (0.0,))[1][0] > 0
    assert signed_arms_and_length(paths["GLU"], (0.0,))[1][0] < 0


def test_arm_signs_consistent_over_gait_range(paths):
    for p in paths.values():
        grids = [np.linspace(*RANGES[j], 25) for j in p.joints]
        signs = None
        for combo in itertools.product(*grids):
            _, arms = signed_arms_and_length(p, combo)
            s = tuple(math.copysign(1, a) for a in arms)
            if signs is None:
                signs = s
            assert s == signs, (p.name, combo)


def test_transform_rigidity():
    t = Transform2D(0.3, 0.1, -0.2)
    m = t.matrix()
    r = m[:2, :2]
    assert np.allclose(r @ r.T, np.eye(2), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)
    p = np.array([0.4, -0.7])
    assert np.allclose(t.inverse_apply(t.apply(p)), p, atol=1e-12)


def test_geometry_schema_validation(tmp_path):
    import json
    with pytest.raises(ValueError, match="unsupported geometry schema"):
        p = tmp_path / "g.json"
        p.write_text(json.dumps({"schema": "nope", "muscles": {}}))
        load_geometry(p)
