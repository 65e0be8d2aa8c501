"""Configuration loading, validation, and typed parameter assembly.

Configs are TOML: the shipped defaults carry the published parameter tables,
a user file overrides individual keys.  Every leaf is checked against the
schema (type plus range); unknown keys are rejected with a close-match
suggestion.  Degree-quoted table entries are converted to radians here, at
the boundary.
"""

from __future__ import annotations

import difflib
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .muscle import MUSCLES, MuscleParams
from .plant import BodyParams, ContactParams

CONFIG_SCHEMA = "exogait-config/1"
_DATA_DIR = Path(__file__).parent / "data"


class ConfigError(ValueError):
    """Bad configuration: unknown key, wrong type, or out-of-range value."""


@dataclass(frozen=True)
class Field:
    lo: float
    hi: float
    kind: type = float

    def check(self, key, value):
        if self.kind is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{key}: expected integer, got {value!r}")
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{key}: expected number, got {value!r}")
        if not (self.lo <= value <= self.hi):
            raise ConfigError(
                f"{key}: value {value!r} outside allowed range [{self.lo}, {self.hi}]")


def _muscle_fields():
    out = {}
    for m in MUSCLES:
        k = m.lower()
        out[f"muscles.{k}.f_opt_n"] = Field(1.0, 1e5)
        out[f"muscles.{k}.l_opt_m"] = Field(0.005, 1.0)
        out[f"muscles.{k}.tendon_slack_m"] = Field(0.005, 2.0)
        out[f"muscles.{k}.alpha_opt_deg"] = Field(0.0, 60.0)
    return out


SCHEMA = {
    "schema": None,  # checked explicitly
    "simulation.dt_sim_s": Field(1e-4, 0.1),
    "simulation.rk4_substep_s": Field(1e-5, 0.01),
    "simulation.horizon_s": Field(0.01, 600.0),
    "simulation.fall_height_fraction": Field(0.1, 0.95),
    "contact.k_n_per_m32": Field(1.0, 1e8),
    "contact.c_s_per_m": Field(0.0, 100.0),
    "contact.mu_s": Field(0.0, 5.0),
    "contact.mu_d": Field(0.0, 5.0),
    "contact.mu_v_s_per_m": Field(0.0, 10.0),
    "contact.v_t_m_per_s": Field(1e-4, 10.0),
    "contact.sphere_radius_m": Field(0.001, 0.2),
    "contact.contact_threshold_n": Field(0.1, 500.0),
    "interaction.k_int_nm_per_deg": Field(0.0, 1e4),
    "interaction.d_int_nms_per_deg": Field(0.0, 1e4),
    "activation.tau_act_s": Field(1e-4, 1.0),
    "activation.tau_deact_s": Field(1e-4, 1.0),
    "activation.a_min": Field(1e-4, 0.5),
    "hill.beta": Field(0.0, 10.0),
    "hill.newton_tol_rel": Field(1e-12, 1e-2),
    "hill.v_max_per_s": Field(1.0, 50.0),
    **_muscle_fields(),
    "body.trunk_mass_kg": Field(1.0, 200.0),
    "body.thigh_mass_kg": Field(0.1, 50.0),
    "body.shank_mass_kg": Field(0.1, 50.0),
    "body.foot_mass_kg": Field(0.05, 20.0),
    "body.exo_thigh_mass_kg": Field(0.01, 20.0),
    "body.trunk_inertia_kgm2": Field(1e-3, 50.0),
    "body.thigh_inertia_kgm2": Field(1e-5, 5.0),
    "body.shank_inertia_kgm2": Field(1e-5, 5.0),
    "body.foot_inertia_kgm2": Field(1e-6, 5.0),
    "body.exo_thigh_inertia_kgm2": Field(1e-6, 5.0),
    "body.trunk_com_m": Field(0.01, 1.0),
    "body.thigh_com_m": Field(0.01, 1.0),
    "body.shank_com_m": Field(0.01, 1.0),
    "body.exo_thigh_com_m": Field(0.01, 1.0),
    "body.thigh_len_m": Field(0.1, 1.0),
    "body.shank_len_m": Field(0.1, 1.0),
    "body.foot_com_x_m": Field(-0.3, 0.3),
    "body.foot_com_y_m": Field(-0.3, 0.3),
    "body.heel_x_m": Field(-0.3, 0.3),
    "body.heel_y_m": Field(-0.3, 0.0),
    "body.toe_x_m": Field(-0.3, 0.4),
    "body.toe_y_m": Field(-0.3, 0.0),
    "body.gravity_m_per_s2": Field(1.0, 20.0),
    "metabolic.activation_rate_w_per_kg": Field(0.0, 1e3),
    "metabolic.maintenance_rate_w_per_kg": Field(0.0, 1e3),
    "metabolic.shortening_coeff": Field(0.0, 10.0),
    "metabolic.muscle_density_kg_per_m3": Field(100.0, 5000.0),
    "metabolic.specific_tension_pa": Field(1e4, 1e7),
    "optimization.psi_m": Field(0.1, 1e3),
    "optimization.w_vel": Field(0.0, 1e6),
    "optimization.w_angle": Field(0.0, 1e6),
    "optimization.w_grf": Field(0.0, 1e6),
    "optimization.w_effort": Field(0.0, 1e6),
    "optimization.ankle_max_deg": Field(-180.0, 180.0),
    "optimization.ankle_min_deg": Field(-180.0, 180.0),
    "optimization.grf_threshold_n": Field(1.0, 1e5),
    "optimization.model_mass_kg": Field(1.0, 500.0),
    "optimization.population": Field(2, 200, int),
    "optimization.sigma0": Field(1e-6, 2.0),
    "optimization.step1_max_gens": Field(1, 100000, int),
    "optimization.step2_max_gens": Field(0, 100000, int),
    "optimization.box_penalty": Field(0.0, 1e9),
    "optimization.uphill_slope_tangent": Field(0.0, 1.0),
    "init.lead_hip_rad": Field(0.0, 0.8),
    "init.trail_hip_rad": Field(0.0, 0.8),
    "init.lead_knee_flex_rad": Field(0.0, 0.8),
    "init.trail_knee_flex_rad": Field(0.0, 0.8),
    "init.lead_foot_pitch_rad": Field(-0.3, 0.3),
    "init.trail_foot_pitch_rad": Field(-0.6, 0.3),
    "init.trunk_pitch_rad": Field(-0.5, 0.5),
}


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _validate(flat):
    if flat.get("schema") != CONFIG_SCHEMA:
        raise ConfigError(f"config schema must be {CONFIG_SCHEMA!r}, "
                          f"got {flat.get('schema')!r}")
    for key, value in flat.items():
        if key == "schema":
            continue
        field = SCHEMA.get(key)
        if field is None:
            hint = difflib.get_close_matches(key, SCHEMA.keys(), n=1)
            extra = f" (did you mean {hint[0]!r}?)" if hint else ""
            raise ConfigError(f"unknown configuration key {key!r}{extra}")
        field.check(key, value)
    mass_keys = ("body.trunk_mass_kg", "body.thigh_mass_kg", "body.shank_mass_kg",
                 "body.foot_mass_kg", "body.exo_thigh_mass_kg")
    total = flat["body.trunk_mass_kg"] + 2 * sum(flat[k] for k in mass_keys[1:])
    if abs(total - flat["optimization.model_mass_kg"]) > 1e-3:
        raise ConfigError(
            f"body segment masses sum to {total:.4f} kg but "
            f"optimization.model_mass_kg is {flat['optimization.model_mass_kg']}")


class Config:
    """Validated flat configuration with typed parameter builders."""

    def __init__(self, flat):
        self._flat = dict(flat)

    def __getitem__(self, key):
        return self._flat[key]

    def keys(self):
        return self._flat.keys()

    def body_params(self):
        f = self._flat
        return BodyParams(
            masses=np.array([f["body.trunk_mass_kg"], f["body.thigh_mass_kg"],
                             f["body.shank_mass_kg"], f["body.foot_mass_kg"],
                             f["body.exo_thigh_mass_kg"], f["body.thigh_mass_kg"],
                             f["body.shank_mass_kg"], f["body.foot_mass_kg"],
                             f["body.exo_thigh_mass_kg"]]),
            inertias=np.array([f["body.trunk_inertia_kgm2"], f["body.thigh_inertia_kgm2"],
                               f["body.shank_inertia_kgm2"], f["body.foot_inertia_kgm2"],
                               f["body.exo_thigh_inertia_kgm2"], f["body.thigh_inertia_kgm2"],
                               f["body.shank_inertia_kgm2"], f["body.foot_inertia_kgm2"],
                               f["body.exo_thigh_inertia_kgm2"]]),
            trunk_com=f["body.trunk_com_m"],
            thigh_com=f["body.thigh_com_m"],
            shank_com=f["body.shank_com_m"],
            exo_com=f["body.exo_thigh_com_m"],
            thigh_len=f["body.thigh_len_m"],
            shank_len=f["body.shank_len_m"],
            foot_com=(f["body.foot_com_x_m"], f["body.foot_com_y_m"]),
            heel=(f["body.heel_x_m"], f["body.heel_y_m"]),
            toe=(f["body.toe_x_m"], f["body.toe_y_m"]),
            sphere_radius=f["contact.sphere_radius_m"],
            g=f["body.gravity_m_per_s2"],
        )

    def contact_params(self):
        f = self._flat
        return ContactParams(k=f["contact.k_n_per_m32"], c=f["contact.c_s_per_m"],
                             mu_s=f["contact.mu_s"], mu_d=f["contact.mu_d"],
                             mu_v=f["contact.mu_v_s_per_m"], v_t=f["contact.v_t_m_per_s"])

    def muscle_params(self):
        f = self._flat
        out = []
        for name in MUSCLES:
            k = name.lower()
            out.append(MuscleParams(
                name=name,
                f_opt=f[f"muscles.{k}.f_opt_n"],
                l_opt=f[f"muscles.{k}.l_opt_m"],
                tendon_slack=f[f"muscles.{k}.tendon_slack_m"],
                alpha_opt=math.radians(f[f"muscles.{k}.alpha_opt_deg"]),
                beta=f["hill.beta"],
                v_max=f["hill.v_max_per_s"],
                tau_act=f["activation.tau_act_s"],
                tau_deact=f["activation.tau_deact_s"],
                a_min=f["activation.a_min"],
            ))
        return out

    def interaction_per_rad(self):
        """Strap stiffness/damping converted from per-degree to per-radian."""
        f = self._flat
        scale = 180.0 / math.pi
        return (f["interaction.k_int_nm_per_deg"] * scale,
                f["interaction.d_int_nms_per_deg"] * scale)


def override(cfg: Config, updates):
    """New Config with dotted-key updates applied (re-validated)."""
    flat = dict(cfg._flat)
    flat.update(updates)
    _validate(flat)
    return Config(flat)


def load_config(path=None):
    """Merged configuration: shipped defaults overlaid with a user file."""
    with open(_DATA_DIR / "defaults.toml", "rb") as f:
        merged = _flatten(tomllib.load(f))
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        with open(p, "rb") as f:
            try:
                user = tomllib.load(f)
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"{p}: {e}") from e
        user_flat = _flatten(user)
        user_flat.setdefault("schema", merged["schema"])
        merged.update(user_flat)
    _validate(merged)
    return Config(merged)
