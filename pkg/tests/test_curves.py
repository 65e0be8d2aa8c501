import json
from pathlib import Path

import numpy as np
import pytest

from exogait.curves import CurveSet, SplineCurve, default_curves, load_curves

DATA = Path(__file__).parent.parent / "src" / "exogait" / "data" / "curves.json"


def bezier_oracle(ctrl, u):
    """Independent de Casteljau evaluation via explicit recursion."""
    pts = list(ctrl)
    while len(pts) > 1:
        pts = [(1 - u) * a + u * b for a, b in zip(pts[:-1], pts[1:])]
    return pts[0]


def test_value_matches_de_casteljau_oracle(curves, rng):
    for c in (curves.fl, curves.fv, curves.fpe, curves.ft):
        for _ in range(200):
            seg = rng.integers(0, c.ctrl.shape[0])
            u = rng.uniform(0, 1)
            x = c.x_knots[seg] + u * (c.x_knots[seg + 1] - c.x_knots[seg])
            assert c.value(x) == pytest.approx(bezier_oracle(c.ctrl[seg], u), abs=1e-12)


def test_active_force_length_shape(curves):
    xs = np.linspace(0.3, 1.9, 1000)
    ys = curves.fl.value(xs)
    assert np.all(ys >= -1e-12)
    assert curves.fl.value(1.0) == pytest.approx(1.0, abs=1e-12)
    assert ys.max() <= 1.0 + 1e-12
    assert curves.fl.value(0.4) == pytest.approx(0.0, abs=1e-12)
    assert curves.fl.value(1.8) == pytest.approx(0.0, abs=1e-12)


def test_force_velocity_shape(curves):
    xs = np.linspace(-1.0, 1.0, 1000)
    ys = curves.fv.value(xs)
    assert np.all(np.diff(ys) >= -1e-12)
    interior = np.diff(ys)[xs[:-1] > -0.99]
    assert np.all(interior > 0)
    assert curves.fv.value(-1.0) == pytest.approx(0.0, abs=1e-12)
    assert curves.fv.value(0.0) == pytest.approx(1.0, abs=1e-12)
    assert curves.fv.value(1.0) == pytest.approx(1.4, abs=1e-12)
    assert curves.fv.value(-1.2) >= 0.0


def test_passive_and_tendon_shapes(curves):
    xs = np.linspace(0.8, 1.0, 500)
    assert np.allclose(curves.fpe.value(xs), 0.0, atol=1e-14)
    xs = np.linspace(1.0, 2.0, 1000)
    assert np.all(np.diff(curves.fpe.value(xs)) >= 0)
    assert curves.fpe.value(1.7) == pytest.approx(1.0, abs=1e-12)

    xs = np.linspace(0.9, 1.0, 300)
    assert np.allclose(curves.ft.value(xs), 0.0, atol=1e-14)
    xs = np.linspace(1.0, 1.15, 1000)
    assert np.all(np.diff(curves.ft.value(xs)) >= 0)
    assert curves.ft.value(1.049) == pytest.approx(1.0, abs=1e-12)


def test_c2_continuity_at_knots(curves):
    for c in (curves.fl, curves.fv, curves.fpe, curves.ft):
        for xk in c.x_knots[1:-1]:
            e = 1e-7
            left = c.second_derivative(float(xk) - e)
            right = c.second_derivative(float(xk) + e)
            assert right == pytest.approx(left, abs=1e-3 * max(1.0, abs(left)))


def test_derivative_matches_finite_difference(curves, rng):
    for c in (curves.fl, curves.fv, curves.fpe, curves.ft):
        lo, hi = c.domain
        xs = rng.uniform(lo + 1e-3, hi - 1e-3, 200)
        h = 1e-6
        fd = (c.value(xs + h) - c.value(xs - h)) / (2 * h)
        assert np.allclose(c.derivative(xs), fd, rtol=1e-5, atol=1e-6)


def test_fv_inverse(curves):
    lo, hi = curves.fv_inverse_domain
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert hi == pytest.approx(1.4, abs=1e-12)
    for y in (0.1, 0.5, 1.0, 1.3):
        v = curves.fv_inverse(y)
        assert curves.fv.value(v) == pytest.approx(y, abs=1e-9)


def test_shipped_data_file_matches_builder(curves):
    shipped = load_curves(DATA)
    for a, b in zip((shipped.fl, shipped.fv, shipped.fpe, shipped.ft),
                    (curves.fl, curves.fv, curves.fpe, curves.ft)):
        assert np.allclose(a.x_knots, b.x_knots, atol=1e-12)
        assert np.allclose(a.ctrl, b.ctrl, atol=1e-12)


def test_json_round_trip(curves, tmp_path):
    p = tmp_path / "c.json"
    with open(p, "w") as f:
        json.dump(curves.to_json_dict(), f)
    again = load_curves(p)
    xs = np.linspace(-1.5, 2.0, 300)
    assert np.allclose(again.fv.value(xs), curves.fv.value(xs), atol=1e-15)


def test_bad_control_points_rejected():
    seg = {"x": [0, 0.3, 0.4, 0.6, 0.8, 1.0], "y": [0, 0, 0, 0, 0, 1]}
    with pytest.raises(ValueError, match="equally spaced"):
        SplineCurve.from_control_points([seg], 0.0, 0.0)
    with pytest.raises(ValueError, match="unsupported curves schema"):
        CurveSet.from_json_dict({"schema": "bogus"})
