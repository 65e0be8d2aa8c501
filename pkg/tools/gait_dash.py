"""Quick rollout dashboard for manual reflex tuning (dev tool)."""
import json
import sys

import numpy as np

from exogait.config import load_config, override
from exogait.harness import SimModel, Scenario
from exogait.optimize import load_seed_params, save_params
from exogait.reflex import ReflexParams

STRAP = {"interaction.k_int_nm_per_deg": 1.75, "interaction.d_int_nms_per_deg": 0.35}


def dashboard(model, params, v=1.0, horizon=6.0, every=0.1):
    res = model.rollout(params, Scenario("t", 0.0, v, horizon=horizon))
    n = res.steps
    print(f"== status={res.status} dur={n*0.005:.2f}s x_com={res.x_com_final:.2f} ==")
    step = max(1, int(every / 0.005))
    idx = np.arange(0, n, step)
    rows = {
        "t": res.column("t"),
        "q_ub": res.column("q_q_ub"),
        "rh": res.column("q_q_rh"), "rk": res.column("q_q_rk"), "ra": res.column("q_q_ra"),
        "lh": res.column("q_q_lh"), "lk": res.column("q_q_lk"), "la": res.column("q_q_la"),
        "ph_r": res.column("phase_r"), "ph_l": res.column("phase_l"),
        "grf_r": res.column("grf_r_heel_n") + res.column("grf_r_toe_n"),
        "grf_l": res.column("grf_l_heel_n") + res.column("grf_l_toe_n"),
    }
    for k, vv in rows.items():
        prec = 0 if k.startswith("grf") else (1 if k.startswith("ph") or k == "t" else 2)
        print(f"{k:6s}", np.array2string(vv[idx], precision=prec, suppress_small=True,
                                         max_line_width=250))
    return res


if __name__ == "__main__":
    model = SimModel(override(load_config(), STRAP))
    params = load_seed_params()
    if len(sys.argv) > 1:
        upd = json.loads(sys.argv[1])
        d = params.to_dict()
        d.update(upd)
        params = ReflexParams.from_dict(d)
    dashboard(model, params)
