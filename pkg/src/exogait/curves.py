"""Muscle characteristic curves as C2-continuous quintic Bezier splines.

Four curves describe the contractile machinery: active force-length (fL),
force-velocity (fV), passive force-length (fPE) and tendon force-length (fT).
Each curve is a chain of quintic Bezier segments whose x control points are
equally spaced, so the Bezier parameter is an affine function of x and
evaluation needs no inner root-find.  Outside the spline domain the curves
continue linearly (slope 0 where the physical curve is flat).

Segments are generated from Hermite knot data (x, y, y', y''); adjacent
segments share knot data, which makes the spline C2 by construction.  The
default knot tables below are documented constants, shipped in
data/curves.json and overridable through the config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

CURVES_SCHEMA = "exogait-curves/1"

# Default shape constants (see module docstring).
ACTIVE_FL_RANGE = (0.4, 1.8)      # fiber lengths with nonzero active force
FV_ECC_PLATEAU = 1.4              # eccentric force plateau of fV
FV_ISO_SLOPE = 5.0                # d fV/dv at v = 0
FV_CONC_SHAPE = 0.25              # concentric rectangular-hyperbola shape factor
PE_ONE_LENGTH = 1.7               # fiber length where fPE reaches 1.0
TENDON_ONE_STRAIN = 0.049         # tendon strain where fT reaches 1.0
TENDON_END_STIFFNESS = 1.375 / TENDON_ONE_STRAIN  # d fT/d(l~T) at nominal strain

_DATA_DIR = Path(__file__).parent / "data"


@njit(cache=True)
def _bezier_val(c, u):
    # de Casteljau on the 6 y control points of one segment
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
def _bezier_d1(c, u):
    # derivative wrt u: degree-4 Bezier of the forward differences, times 5
    d0 = c[1] - c[0]
    d1 = c[2] - c[1]
    d2 = c[3] - c[2]
    d3 = c[4] - c[3]
    d4 = c[5] - c[4]
    b0 = d0 + (d1 - d0) * u
    b1 = d1 + (d2 - d1) * u
    b2 = d2 + (d3 - d2) * u
    b3 = d3 + (d4 - d3) * u
    c0 = b0 + (b1 - b0) * u
    c1 = b1 + (b2 - b1) * u
    c2 = b2 + (b3 - b2) * u
    e0 = c0 + (c1 - c0) * u
    e1 = c1 + (c2 - c1) * u
    return 5.0 * (e0 + (e1 - e0) * u)


@njit(cache=True)
def _bezier_d2(c, u):
    # second derivative wrt u: degree-3 Bezier of second differences, times 20
    d0 = c[2] - 2.0 * c[1] + c[0]
    d1 = c[3] - 2.0 * c[2] + c[1]
    d2 = c[4] - 2.0 * c[3] + c[2]
    d3 = c[5] - 2.0 * c[4] + c[3]
    b0 = d0 + (d1 - d0) * u
    b1 = d1 + (d2 - d1) * u
    b2 = d2 + (d3 - d2) * u
    c0 = b0 + (b1 - b0) * u
    c1 = b1 + (b2 - b1) * u
    return 20.0 * (c0 + (c1 - c0) * u)


@njit(cache=True)
def _segment_index(xk, x):
    n = xk.shape[0] - 1
    i = 0
    for k in range(n - 1):
        if x >= xk[k + 1]:
            i = k + 1
    return i


@njit(cache=True)
def curve_value(xk, ctrl, lo_slope, hi_slope, x):
    if x <= xk[0]:
        return ctrl[0, 0] + lo_slope * (x - xk[0])
    n = xk.shape[0] - 1
    if x >= xk[n]:
        return ctrl[n - 1, 5] + hi_slope * (x - xk[n])
    i = _segment_index(xk, x)
    u = (x - xk[i]) / (xk[i + 1] - xk[i])
    return _bezier_val(ctrl[i], u)


@njit(cache=True)
def curve_vd(xk, ctrl, lo_slope, hi_slope, x):
    """Value and first derivative in one call (hot path of the Newton solve)."""
    if x <= xk[0]:
        return ctrl[0, 0] + lo_slope * (x - xk[0]), lo_slope
    n = xk.shape[0] - 1
    if x >= xk[n]:
        return ctrl[n - 1, 5] + hi_slope * (x - xk[n]), hi_slope
    i = _segment_index(xk, x)
    h = xk[i + 1] - xk[i]
    u = (x - xk[i]) / h
    return _bezier_val(ctrl[i], u), _bezier_d1(ctrl[i], u) / h


@njit(cache=True)
def curve_d2(xk, ctrl, x):
    if x <= xk[0] or x >= xk[xk.shape[0] - 1]:
        return 0.0
    i = _segment_index(xk, x)
    h = xk[i + 1] - xk[i]
    u = (x - xk[i]) / h
    return _bezier_d2(ctrl[i], u) / (h * h)


def _hermite_controls(knots):
    """Quintic Bezier control points from (x, y, y', y'') knot rows."""
    knots = np.asarray(knots, dtype=float)
    xk = knots[:, 0].copy()
    if np.any(np.diff(xk) <= 0):
        raise ValueError("curve knots must have strictly increasing x")
    n = len(xk) - 1
    ctrl = np.zeros((n, 6))
    for i in range(n):
        x0, y0, yp0, ypp0 = knots[i]
        x1, y1, yp1, ypp1 = knots[i + 1]
        h = x1 - x0
        p0 = y0
        p1 = y0 + h * yp0 / 5.0
        p2 = ypp0 * h * h / 20.0 + 2.0 * p1 - p0
        p5 = y1
        p4 = y1 - h * yp1 / 5.0
        p3 = ypp1 * h * h / 20.0 + 2.0 * p4 - p5
        ctrl[i] = (p0, p1, p2, p3, p4, p5)
    return xk, ctrl


@dataclass(frozen=True)
class SplineCurve:
    """One characteristic curve: segments plus linear continuations."""

    x_knots: np.ndarray
    ctrl: np.ndarray
    lo_slope: float
    hi_slope: float

    @classmethod
    def from_knots(cls, knots, lo_slope=0.0, hi_slope=None):
        xk, ctrl = _hermite_controls(knots)
        if hi_slope is None:
            hi_slope = float(knots[-1][2])
        return cls(xk, ctrl, float(lo_slope), float(hi_slope))

    @property
    def domain(self):
        return float(self.x_knots[0]), float(self.x_knots[-1])

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return curve_value(self.x_knots, self.ctrl, self.lo_slope, self.hi_slope, float(x))
        return np.array([curve_value(self.x_knots, self.ctrl, self.lo_slope, self.hi_slope, xi)
                         for xi in x.ravel()]).reshape(x.shape)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return curve_vd(self.x_knots, self.ctrl, self.lo_slope, self.hi_slope, float(x))[1]
        return np.array([curve_vd(self.x_knots, self.ctrl, self.lo_slope, self.hi_slope, xi)[1]
                         for xi in x.ravel()]).reshape(x.shape)

    def second_derivative(self, x):
        return curve_d2(self.x_knots, self.ctrl, float(x))

    def control_points(self):
        """Segments as explicit 2D control points (x equally spaced per segment)."""
        out = []
        for i in range(self.ctrl.shape[0]):
            xs = np.linspace(self.x_knots[i], self.x_knots[i + 1], 6)
            out.append({"x": xs.tolist(), "y": self.ctrl[i].tolist()})
        return out

    @classmethod
    def from_control_points(cls, segments, lo_slope, hi_slope):
        xk = [segments[0]["x"][0]]
        ctrl = []
        for seg in segments:
            xs = np.asarray(seg["x"], dtype=float)
            ys = np.asarray(seg["y"], dtype=float)
            if len(xs) != 6 or len(ys) != 6:
                raise ValueError("each segment needs 6 control points")
            expect = np.linspace(xs[0], xs[5], 6)
            if not np.allclose(xs, expect, atol=1e-12):
                raise ValueError("x control points must be equally spaced within a segment")
            if abs(xs[0] - xk[-1]) > 1e-12:
                raise ValueError("segments must be contiguous")
            xk.append(xs[5])
            ctrl.append(ys)
        return cls(np.asarray(xk), np.asarray(ctrl), float(lo_slope), float(hi_slope))


def _fv_knots():
    """Force-velocity knot table: Hill hyperbola (concentric) joined to a
    saturating eccentric branch with f(1) = FV_ECC_PLATEAU."""
    a_f = FV_CONC_SHAPE

    def conc(v):
        y = (1.0 + v) / (1.0 - v / a_f)
        yp = (1.0 + 1.0 / a_f) / (1.0 - v / a_f) ** 2
        ypp = 2.0 * (1.0 + 1.0 / a_f) / a_f / (1.0 - v / a_f) ** 3
        return y, yp, ypp

    gain = FV_ECC_PLATEAU - 1.0
    b = gain / (FV_ISO_SLOPE - gain)

    def ecc(v):
        y = 1.0 + gain * (1.0 + b) * v / (v + b)
        yp = gain * (1.0 + b) * b / (v + b) ** 2
        ypp = -2.0 * gain * (1.0 + b) * b / (v + b) ** 3
        return y, yp, ypp

    rows = [(-1.0, 0.0, 0.0, 0.0)]
    for v in (-0.6, -0.3, -0.15):
        y, yp, ypp = conc(v)
        rows.append((v, y, yp, ypp))
    rows.append((0.0, 1.0, FV_ISO_SLOPE, 0.0))
    for v in (0.1, 0.3, 1.0):
        y, yp, ypp = ecc(v)
        rows.append((v, y, yp, ypp))
    return rows


def _fl_knots():
    lo, hi = ACTIVE_FL_RANGE
    return [
        (lo, 0.0, 0.0, 0.0),
        (0.70, 0.30, 1.90, 6.0),
        (1.00, 1.00, 0.0, -9.0),
        (1.40, 0.35, -2.0, 4.0),
        (hi, 0.0, 0.0, 0.0),
    ]


def _fpe_knots():
    # exactly ((x-1)/w)^3 on [1, 1+w]; quintic Hermite reproduces the cubic
    w = PE_ONE_LENGTH - 1.0
    return [
        (1.0, 0.0, 0.0, 0.0),
        (PE_ONE_LENGTH, 1.0, 3.0 / w, 6.0 / w**2),
    ]


def _ft_knots():
    e0 = TENDON_ONE_STRAIN
    return [
        (1.0, 0.0, 0.0, 0.0),
        (1.0 + e0, 1.0, TENDON_END_STIFFNESS, 0.0),
    ]


@dataclass(frozen=True)
class CurveSet:
    """The four characteristic curves plus the invertible domain of fV."""

    fl: SplineCurve
    fv: SplineCurve
    fpe: SplineCurve
    ft: SplineCurve

    @property
    def fv_inverse_domain(self):
        lo, hi = self.fv.domain
        return float(self.fv.value(lo)), float(self.fv.value(hi))

    def fv_inverse(self, y):
        """Invert the monotone force-velocity curve (bisection + Newton)."""
        lo, hi = self.fv.domain
        ylo, yhi = self.fv_inverse_domain
        if y <= ylo:
            return lo if self.fv.lo_slope == 0.0 else lo + (y - ylo) / self.fv.lo_slope
        if y >= yhi:
            return hi + (y - yhi) / self.fv.hi_slope
        a, b = lo, hi
        for _ in range(80):
            m = 0.5 * (a + b)
            if self.fv.value(m) < y:
                a = m
            else:
                b = m
            if b - a < 1e-13:
                break
        return 0.5 * (a + b)

    def pack(self):
        """Flat tuple of arrays for the compiled kernels."""
        return (
            self.fl.x_knots, self.fl.ctrl,
            self.fv.x_knots, self.fv.ctrl,
            self.fpe.x_knots, self.fpe.ctrl,
            self.ft.x_knots, self.ft.ctrl,
            np.array([self.fl.lo_slope, self.fl.hi_slope,
                      self.fv.lo_slope, self.fv.hi_slope,
                      self.fpe.lo_slope, self.fpe.hi_slope,
                      self.ft.lo_slope, self.ft.hi_slope]),
        )

    def to_json_dict(self):
        def one(c):
            return {"segments": c.control_points(),
                    "lo_slope": c.lo_slope, "hi_slope": c.hi_slope}
        return {"schema": CURVES_SCHEMA,
                "curves": {"active_force_length": one(self.fl),
                           "force_velocity": one(self.fv),
                           "passive_force_length": one(self.fpe),
                           "tendon_force_length": one(self.ft)}}

    @classmethod
    def from_json_dict(cls, d):
        if d.get("schema") != CURVES_SCHEMA:
            raise ValueError(f"unsupported curves schema: {d.get('schema')!r}")
        cs = d["curves"]

        def one(name):
            c = cs[name]
            return SplineCurve.from_control_points(c["segments"], c["lo_slope"], c["hi_slope"])
        return cls(fl=one("active_force_length"), fv=one("force_velocity"),
                   fpe=one("passive_force_length"), ft=one("tendon_force_length"))


def default_curves():
    return CurveSet(
        fl=SplineCurve.from_knots(_fl_knots(), lo_slope=0.0, hi_slope=0.0),
        fv=SplineCurve.from_knots(_fv_knots(), lo_slope=0.0),
        fpe=SplineCurve.from_knots(_fpe_knots(), lo_slope=0.0),
        ft=SplineCurve.from_knots(_ft_knots(), lo_slope=0.0),
    )


def load_curves(path=None):
    if path is None:
        path = _DATA_DIR / "curves.json"
    with open(path) as f:
        return CurveSet.from_json_dict(json.load(f))


def write_default_curves(path):
    with open(path, "w") as f:
        json.dump(default_curves().to_json_dict(), f, indent=1)
        f.write("\n")
