"""Musculotendon path geometry: lengths, velocities, moment arms, torques.

Muscle paths are straight lines between attachment points expressed in
joint-centered frames.  A monoarticular path keeps the proximal attachment
fixed in the joint frame while the distal attachment rotates with the joint
angle; a biarticular path chains a second rotation through the middle bone.
Signed moment arms are the (negative) partial derivatives of path length with
respect to the joint angles, so muscle force maps to joint torque by
virtual work.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GEOMETRY_SCHEMA = "exogait-geometry/1"
_DATA_DIR = Path(__file__).parent / "data"

JOINTS = ("hip", "knee", "ankle")


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Transform2D:
    """Rigid planar transform: rotate by `angle`, then translate."""

    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def apply(self, p):
        return _rot(self.angle) @ np.asarray(p, dtype=float) + np.array([self.tx, self.ty])

    def inverse_apply(self, p):
        return _rot(-self.angle) @ (np.asarray(p, dtype=float) - np.array([self.tx, self.ty]))

    def matrix(self):
        m = np.eye(3)
        m[:2, :2] = _rot(self.angle)
        m[:2, 2] = (self.tx, self.ty)
        return m

    @classmethod
    def from_list(cls, v):
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def to_list(self):
        return [self.angle, self.tx, self.ty]


@dataclass(frozen=True)
class MusclePath:
    """Straight-line muscle path over one joint or two.

    For a monoarticular path, `p1` lives on the proximal bone (frame {A},
    mapped into the joint frame by `t_a`) and `p2` on the distal bone (frame
    {B}, mapped by `t_b`, then rotated by the joint angle).  A biarticular
    path adds the middle-bone transform `t_b_j2` locating the second joint
    and `t_c` mapping the far attachment (`p2` reused as the {C} attachment).
    """

    name: str
    joints: tuple                      # ("ankle",) or ("hip", "knee")
    p1: np.ndarray
    p2: np.ndarray
    t_a: Transform2D = field(default_factory=Transform2D)
    t_b: Transform2D = field(default_factory=Transform2D)
    t_b_j2: Transform2D = field(default_factory=Transform2D)
    t_c: Transform2D = field(default_factory=Transform2D)

    def __post_init__(self):
        if len(self.joints) not in (1, 2):
            raise ValueError(f"{self.name}: paths span one or two joints")
        for j in self.joints:
            if j not in JOINTS:
                raise ValueError(f"{self.name}: unknown joint {j!r}")
        if not (np.all(np.isfinite(self.p1)) and np.all(np.isfinite(self.p2))):
            raise ValueError(f"{self.name}: attachment vectors must be finite")

    @property
    def biarticular(self):
        return len(self.joints) == 2

    def endpoints_j1(self, *thetas):
        """Both attachment points expressed in the first joint's frame."""
        u = self.t_a.apply(self.p1)
        if not self.biarticular:
            w = _rot(thetas[0]) @ self.t_b.apply(self.p2)
        else:
            v = self.t_c.apply(self.p2)
            v = self.t_b_j2.apply(_rot(thetas[1]) @ v)
            w = _rot(thetas[0]) @ self.t_b.apply(v)
        return u, w


def _arm_from_points(u, w):
    """Eq.-23-style moment arm about the frame origin for the line u-w."""
    chord = u - w
    dist = math.hypot(chord[0], chord[1])
    if dist < 1e-9:
        raise ValueError("degenerate muscle path: coincident attachment points")
    cross = u[0] * w[1] - u[1] * w[0]
    return abs(cross) / dist, -cross / dist, dist


def moment_arm_mono(path: MusclePath, theta):
    """Perpendicular distance from the joint to the muscle line (unsigned)."""
    u, w = path.endpoints_j1(theta)
    d, _, _ = _arm_from_points(u, w)
    return d


def moment_arm_bi(path: MusclePath, theta1, theta2):
    """Unsigned moment arms about both spanned joints."""
    u, w = path.endpoints_j1(theta1, theta2)
    d1, _, _ = _arm_from_points(u, w)
    # express both endpoints in the second joint's frame, where only the far
    # attachment rotates with theta2
    u_b = path.t_b.inverse_apply(_rot(-theta1) @ u)
    u_j2 = path.t_b_j2.inverse_apply(u_b)
    v_j2 = _rot(theta2) @ path.t_c.apply(path.p2)
    d2, _, _ = _arm_from_points(u_j2, v_j2)
    return d1, d2


def signed_arms_and_length(path: MusclePath, thetas):
    """Path length plus signed per-joint arms (positive arm = positive
    counter-clockwise torque on the distal side for a pulling muscle)."""
    if path.biarticular:
        u, w = path.endpoints_j1(*thetas)
        _, s1, dist = _arm_from_points(u, w)
        u_b = path.t_b.inverse_apply(_rot(-thetas[0]) @ u)
        u_j2 = path.t_b_j2.inverse_apply(u_b)
        v_j2 = _rot(thetas[1]) @ path.t_c.apply(path.p2)
        _, s2, _ = _arm_from_points(u_j2, v_j2)
        return dist, (s1, s2)
    u, w = path.endpoints_j1(thetas[0])
    _, s1, dist = _arm_from_points(u, w)
    return dist, (s1,)


def mt_length_velocity(path: MusclePath, thetas, theta_dots):
    """Path length and lengthening rate for joint angles and rates."""
    dist, arms = signed_arms_and_length(path, thetas)
    v = 0.0
    for s, td in zip(arms, theta_dots):
        v += -s * td
    return dist, v


def muscle_torque(f_m, alpha, d_signed):
    """Joint torque of one muscle: tendon-direction force times signed arm."""
    return f_m * math.cos(alpha) * d_signed


def aggregate_torques(contributions):
    """Sum per-muscle signed torques into the six biological joint slots.

    `contributions` maps (side, joint) -> iterable of torques, with side in
    {"r", "l"} and joint in JOINTS.  Returns a dict over all six slots.
    """
    out = {(s, j): 0.0 for s in ("r", "l") for j in JOINTS}
    for key, vals in contributions.items():
        if key not in out:
            raise KeyError(f"unknown joint slot {key!r}")
        out[key] += float(sum(vals))
    return out


def load_geometry(path=None):
    """Muscle path table from the versioned geometry data file."""
    if path is None:
        path = _DATA_DIR / "muscle_geometry.json"
    with open(path) as f:
        d = json.load(f)
    if d.get("schema") != GEOMETRY_SCHEMA:
        raise ValueError(f"unsupported geometry schema: {d.get('schema')!r}")
    paths = {}
    for name, rec in d["muscles"].items():
        joints = tuple(rec["joints"])
        paths[name] = MusclePath(
            name=name,
            joints=joints,
            p1=np.asarray(rec["p1"], dtype=float),
            p2=np.asarray(rec["p2"], dtype=float),
            t_a=Transform2D.from_list(rec.get("t_a", [0, 0, 0])),
            t_b=Transform2D.from_list(rec.get("t_b", [0, 0, 0])),
            t_b_j2=Transform2D.from_list(rec.get("t_b_j2", [0, 0, 0])),
            t_c=Transform2D.from_list(rec.get("t_c", [0, 0, 0])),
        )
    return paths


def dump_geometry(paths, fp):
    recs = {}
    for name, p in paths.items():
        recs[name] = {
            "joints": list(p.joints),
            "p1": np.asarray(p.p1).tolist(),
            "p2": np.asarray(p.p2).tolist(),
            "t_a": p.t_a.to_list(),
            "t_b": p.t_b.to_list(),
            "t_b_j2": p.t_b_j2.to_list(),
            "t_c": p.t_c.to_list(),
        }
    json.dump({"schema": GEOMETRY_SCHEMA, "muscles": recs}, fp, indent=1)
    fp.write("\n")


def pack_paths(paths, muscle_order):
    """Geometry arrays for the compiled kernel, in muscle order.

    Only identity-rotation transforms are packed (the shipped defaults);
    general transforms are folded into effective attachment coordinates.
    """
    n = len(muscle_order)
    kind = np.zeros(n, dtype=np.int64)
    jid = np.zeros((n, 2), dtype=np.int64)
    p1 = np.zeros((n, 2))
    p2 = np.zeros((n, 2))
    tb2 = np.zeros((n, 2))
    jmap = {"hip": 0, "knee": 1, "ankle": 2}
    for i, name in enumerate(muscle_order):
        p = paths[name]
        if any(abs(t.angle) > 1e-12 for t in (p.t_a, p.t_b, p.t_b_j2, p.t_c)):
            raise ValueError(f"{name}: kernel pack assumes identity-rotation transforms")
        kind[i] = 1 if p.biarticular else 0
        jid[i, 0] = jmap[p.joints[0]]
        jid[i, 1] = jmap[p.joints[1]] if p.biarticular else -1
        p1[i] = p.t_a.apply(p.p1)
        if p.biarticular:
            p2[i] = p.t_c.apply(p.p2)
            tb2[i] = (p.t_b_j2.tx + p.t_b.tx, p.t_b_j2.ty + p.t_b.ty)
        else:
            p2[i] = p.t_b.apply(p.p2)
    return kind, jid, p1, p2, tb2
