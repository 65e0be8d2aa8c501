import math

import numpy as np
import pytest

from exogait.config import load_config, override
from exogait.curves import default_curves
from exogait.harness import SimModel
from exogait.muscle import MuscleParams

# Table S2's printed per-degree strap coefficients are kept as config
# defaults, but their damping mode sits outside explicit-RK4 stability at
# the 0.5 ms substep, so rollout-based tests run with the spec's anticipated
# override (about 100 N*m/rad and 20 N*m*s/rad).
WALK_OVERRIDES = {"interaction.k_int_nm_per_deg": 1.75,
                  "interaction.d_int_nms_per_deg": 0.35}


@pytest.fixture(scope="session")
def curves():
    return default_curves()


@pytest.fixture(scope="session")
def walk_config():
    return override(load_config(), WALK_OVERRIDES)


@pytest.fixture(scope="session")
def model(walk_config):
    return SimModel(walk_config)


@pytest.fixture(scope="session")
def sol_muscle():
    return MuscleParams("SOL", 3549.0, 0.05, 0.25, math.radians(25.0))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240809)
