"""Two-step reflex-parameter optimization.

Step 1 maximizes walking distance (minimizes the distance shortfall J1);
when any evaluated particle achieves J1 < 0 the search re-initializes at
that particle and switches to the hybrid objective J2.  Candidates live in
a normalized box (each of the 29 parameters scaled to [0, 1]); out-of-box
samples are projected back and carry a quadratic penalty.

Evaluation fans out over a process pool (results are reduced in candidate
order, so the outcome is independent of worker scheduling); the optimizer
state is checkpointed to JSON after every generation and can be resumed
bit-exactly.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cmaes import CMAES
from .config import Config, load_config
from .fitness import FitnessConfig, fitness_j1, fitness_j2
from .harness import Scenario, SimModel
from .reflex import PARAM_LOWER, PARAM_UPPER, N_PARAMS, ReflexParams

CHECKPOINT_SCHEMA = "exogait-checkpoint/1"


def to_normalized(w):
    return (np.asarray(w, float) - PARAM_LOWER) / (PARAM_UPPER - PARAM_LOWER)


def from_normalized(z):
    return PARAM_LOWER + np.asarray(z, float) * (PARAM_UPPER - PARAM_LOWER)


def project_box(z):
    return np.clip(z, 0.0, 1.0)


@dataclass
class EvalResult:
    fitness: float
    j_raw: float
    penalty: float
    x_com: float
    status: str
    components: dict = field(default_factory=dict)


_WORKER_MODEL = None
_WORKER_CTX = None


def _worker_init(cfg_flat):
    global _WORKER_MODEL
    _WORKER_MODEL = SimModel(Config(cfg_flat))


def _worker_eval(args):
    z, scenario_tuple, step, fc_dict = args
    return _evaluate(_WORKER_MODEL, np.asarray(z), Scenario(*scenario_tuple),
                     step, FitnessConfig(**fc_dict))


def _evaluate(model, z, scenario, step, fc):
    zp = project_box(z)
    penalty = float(model.cfg["optimization.box_penalty"] * np.sum((z - zp) ** 2))
    rollout = model.rollout(from_normalized(zp), scenario)
    if step == 1:
        j = fitness_j1(rollout, fc.psi, fc.nu)
        comp = {}
    else:
        j, comp = fitness_j2(rollout, fc)
    return EvalResult(fitness=j + penalty, j_raw=j, penalty=penalty,
                      x_com=rollout.x_com_final, status=rollout.status,
                      components=comp)


class Evaluator:
    """Serial or process-pool candidate evaluation, order-preserving."""

    def __init__(self, model: SimModel, workers=1):
        self.model = model
        self.workers = max(1, int(workers))
        self._pool = None
        if self.workers > 1:
            ctx = mp.get_context("fork")
            self._pool = ctx.Pool(self.workers, initializer=_worker_init,
                                  initargs=(model.cfg._flat,))

    def __call__(self, zs, scenario, step, fc):
        sc_tuple = (scenario.name, scenario.slope, scenario.v_des,
                    scenario.horizon, scenario.dt_sim, scenario.seed)
        if self._pool is None:
            return [_evaluate(self.model, z, scenario, step, fc) for z in zs]
        args = [(z, sc_tuple, step, fc.__dict__) for z in zs]
        return self._pool.map(_worker_eval, args)

    def close(self):
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None


@dataclass
class OptState:
    """Serializable optimizer state (one running two-step schedule)."""

    step: int
    cmaes: CMAES
    generation: int
    evals: int
    step1_generation: int
    best_fitness: float
    best_z: np.ndarray
    status: str
    switch: dict | None = None
    history: list = field(default_factory=list)

    def best_params(self):
        return ReflexParams(from_normalized(project_box(self.best_z)))

    def to_dict(self, scenario: Scenario):
        return {
            "schema": CHECKPOINT_SCHEMA,
            "scenario": {"name": scenario.name, "slope": scenario.slope,
                         "v_des": scenario.v_des, "horizon": scenario.horizon,
                         "dt_sim": scenario.dt_sim, "seed": scenario.seed},
            "step": self.step,
            "generation": self.generation,
            "evals": self.evals,
            "step1_generation": self.step1_generation,
            "best_fitness": self.best_fitness,
            "best_z": self.best_z.tolist(),
            "best_params": self.best_params().to_dict(),
            "status": self.status,
            "switch": self.switch,
            "history": self.history,
            "cmaes": self.cmaes.state_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != CHECKPOINT_SCHEMA:
            raise ValueError(f"unsupported checkpoint schema {d.get('schema')!r}")
        return cls(step=d["step"], cmaes=CMAES.from_state_dict(d["cmaes"]),
                   generation=d["generation"], evals=d["evals"],
                   step1_generation=d["step1_generation"],
                   best_fitness=d["best_fitness"],
                   best_z=np.asarray(d["best_z"], float), status=d["status"],
                   switch=d.get("switch"), history=d.get("history", []))


def save_checkpoint(path, state: OptState, scenario: Scenario):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(state.to_dict(scenario), f)
        f.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path) as f:
        d = json.load(f)
    sc = d["scenario"]
    scenario = Scenario(sc["name"], sc["slope"], sc["v_des"], sc["horizon"],
                        sc["dt_sim"], sc["seed"])
    return OptState.from_dict(d), scenario


def initial_mean(cfg: Config = None, params: ReflexParams = None):
    if params is None:
        params = load_seed_params()
    return to_normalized(params.to_array())


def load_seed_params(path=None):
    """The shipped hand-tuned starting parameter vector."""
    from .config import _DATA_DIR
    import sys
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    p = Path(path) if path is not None else _DATA_DIR / "seed_params.toml"
    with open(p, "rb") as f:
        d = tomllib.load(f)
    return ReflexParams.from_dict(d["reflex"])


def save_params(path, params: ReflexParams):
    with open(path, "w") as f:
        f.write("# reflex parameter record\n[reflex]\n")
        for k, v in params.to_dict().items():
            f.write("%s = %.17g\n" % (k, v))


def load_params(path):
    import sys
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(path, "rb") as f:
        d = tomllib.load(f)
    return ReflexParams.from_dict(d["reflex"])


def run_optimization(model: SimModel, scenario: Scenario, seed=0,
                     step1_gens=None, step2_gens=None, sigma0=None,
                     workers=1, checkpoint=None, resume=None, x0=None,
                     psi=None, log=print):
    """Full two-step schedule; returns the final OptState."""
    cfg = model.cfg
    lam = cfg["optimization.population"]
    sigma0 = sigma0 if sigma0 is not None else cfg["optimization.sigma0"]
    step1_gens = step1_gens if step1_gens is not None else cfg["optimization.step1_max_gens"]
    step2_gens = step2_gens if step2_gens is not None else cfg["optimization.step2_max_gens"]
    fc = FitnessConfig.from_config(cfg, scenario)
    if psi is not None:
        fc = FitnessConfig(**{**fc.__dict__, "psi": psi})

    if resume is not None:
        state, scenario = load_checkpoint(resume)
    else:
        z0 = x0 if x0 is not None else initial_mean(cfg)
        state = OptState(step=1, cmaes=CMAES(z0, sigma0, lam, seed=seed),
                         generation=0, evals=0, step1_generation=0,
                         best_fitness=np.inf, best_z=np.asarray(z0, float),
                         status="step1")

    evaluator = Evaluator(model, workers)
    try:
        while True:
            if state.step == 1 and state.step1_generation >= step1_gens:
                state.status = "step1-incomplete"
                break
            if state.step == 2 and state.generation - state.step1_generation >= step2_gens:
                state.status = "done"
                break

            xs = state.cmaes.ask()
            results = evaluator(xs, scenario, state.step, fc)
            fs = [r.fitness for r in results]
            state.cmaes.tell(xs, fs)
            state.generation += 1
            state.evals += len(xs)
            if state.step == 1:
                state.step1_generation += 1

            gen_best = int(np.argmin(fs))
            if fs[gen_best] < state.best_fitness:
                state.best_fitness = float(fs[gen_best])
                state.best_z = project_box(np.asarray(xs[gen_best], float))
            state.history.append({
                "generation": state.generation, "step": state.step,
                "best": float(min(fs)), "median": float(np.median(fs)),
                "best_so_far": state.best_fitness,
                "x_com_best": results[gen_best].x_com,
                "status_best": results[gen_best].status,
            })
            if log is not None:
                log(f"gen {state.generation:4d} step {state.step} "
                    f"best {min(fs):9.4f} med {np.median(fs):9.4f} "
                    f"x_com {results[gen_best].x_com:6.2f} "
                    f"[{results[gen_best].status}] sigma {state.cmaes.sigma:.3e}")

            if state.step == 1:
                # switch rule: any particle walked past the target distance
                for i, r in enumerate(results):
                    if r.j_raw < 0.0 and r.penalty == 0.0:
                        zsw = project_box(np.asarray(xs[i], float))
                        state.switch = {
                            "generation": state.generation,
                            "j1": r.j_raw,
                            "particle": ReflexParams(from_normalized(zsw)).to_dict(),
                        }
                        state.step = 2
                        state.cmaes = CMAES(zsw, sigma0, lam,
                                            seed=seed + 1_000_000 + state.generation)
                        state.best_fitness = np.inf
                        state.best_z = zsw
                        state.status = "step2"
                        if log is not None:
                            log(f"step 1 -> 2 switch at gen {state.generation} "
                                f"(J1 = {r.j_raw:.3f})")
                        break

            if checkpoint is not None:
                save_checkpoint(checkpoint, state, scenario)
    finally:
        evaluator.close()
    if checkpoint is not None:
        save_checkpoint(checkpoint, state, scenario)
    return state
