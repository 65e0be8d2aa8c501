"""Covariance matrix adaptation evolution strategy.

Canonical (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation and
active (negative-weight) covariance update, following the standard published
parameterization.  Operates on an unconstrained real vector; box handling
(projection plus penalty) belongs to the caller.  Fully deterministic given
the seeded generator, and serializable for checkpoint/resume.
"""

from __future__ import annotations

import math

import numpy as np


class CMAES:
    def __init__(self, x0, sigma0, popsize, seed=0, rng_state=None):
        x0 = np.asarray(x0, dtype=float)
        self.n = x0.size
        self.mean = x0.copy()
        self.sigma = float(sigma0)
        self.lam = int(popsize)
        self.mu = self.lam // 2

        n, lam, mu = self.n, self.lam, self.mu
        w_raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, lam + 1))
        w_pos = w_raw[:mu]
        w_neg = w_raw[mu:]
        self.mu_eff = float(w_pos.sum() ** 2 / np.sum(w_pos ** 2))
        mu_eff_neg = float(w_neg.sum() ** 2 / np.sum(w_neg ** 2))

        a_cov = 2.0
        self.c_1 = a_cov / ((n + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(1.0 - self.c_1,
                        a_cov * (0.25 + self.mu_eff + 1.0 / self.mu_eff - 2.0)
                        / ((n + 2.0) ** 2 + a_cov * self.mu_eff / 2.0))
        self.c_sigma = (self.mu_eff + 2.0) / (n + self.mu_eff + 5.0)
        self.d_sigma = (1.0 + 2.0 * max(0.0, math.sqrt((self.mu_eff - 1.0) / (n + 1.0)) - 1.0)
                        + self.c_sigma)
        self.c_c = (4.0 + self.mu_eff / n) / (n + 4.0 + 2.0 * self.mu_eff / n)
        self.chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

        a_mu = 1.0 + self.c_1 / self.c_mu
        a_mueff = 1.0 + 2.0 * mu_eff_neg / (self.mu_eff + 2.0)
        a_posdef = (1.0 - self.c_1 - self.c_mu) / (n * self.c_mu)
        scale_neg = min(a_mu, a_mueff, a_posdef) / np.abs(w_neg).sum()
        self.weights = np.concatenate([w_pos / w_pos.sum(), scale_neg * w_neg])

        self.cov = np.eye(self.n)
        self.p_sigma = np.zeros(self.n)
        self.p_c = np.zeros(self.n)
        self.generation = 0
        self.rng = np.random.Generator(np.random.PCG64(seed))
        if rng_state is not None:
            self.rng.bit_generator.state = rng_state
        self._decompose()

    def _decompose(self):
        c = 0.5 * (self.cov + self.cov.T)
        vals, vecs = np.linalg.eigh(c)
        floor = max(vals.max(), 1.0) * 1e-14
        vals = np.maximum(vals, floor)
        self.cov = (vecs * vals) @ vecs.T
        self._b = vecs
        self._d = np.sqrt(vals)

    def ask(self):
        """Sample the population; rows are candidate vectors."""
        z = self.rng.standard_normal((self.lam, self.n))
        y = z @ (self._b * self._d).T
        return self.mean + self.sigma * y

    def tell(self, xs, fitnesses):
        """Rank-based distribution update (lower fitness is better)."""
        xs = np.asarray(xs, float)
        f = np.asarray(fitnesses, float)
        order = np.argsort(f, kind="stable")
        y_all = (xs[order] - self.mean) / self.sigma
        w_pos = self.weights[:self.mu]
        y_w = w_pos @ y_all[:self.mu]
        self.mean = self.mean + self.sigma * y_w

        c_inv_half = (self._b / self._d) @ self._b.T
        self.p_sigma = ((1.0 - self.c_sigma) * self.p_sigma
                        + math.sqrt(self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff)
                        * (c_inv_half @ y_w))
        g = self.generation + 1
        ps_norm = float(np.linalg.norm(self.p_sigma))
        denom = math.sqrt(1.0 - (1.0 - self.c_sigma) ** (2 * g))
        h_sigma = 1.0 if ps_norm / denom / self.chi_n < 1.4 + 2.0 / (self.n + 1.0) else 0.0
        self.p_c = ((1.0 - self.c_c) * self.p_c
                    + h_sigma * math.sqrt(self.c_c * (2.0 - self.c_c) * self.mu_eff) * y_w)

        # active update: negative weights rescaled into the sampling metric
        w_adj = self.weights.copy()
        if np.any(w_adj < 0):
            norms = np.sum((y_all @ c_inv_half.T) ** 2, axis=1)
            for i in range(self.mu, self.lam):
                w_adj[i] = self.weights[i] * self.n / max(norms[i], 1e-30)
        rank_mu = (y_all.T * w_adj) @ y_all
        delta_h = (1.0 - h_sigma) * self.c_c * (2.0 - self.c_c)
        self.cov = ((1.0 + self.c_1 * delta_h - self.c_1 - self.c_mu * self.weights.sum())
                    * self.cov
                    + self.c_1 * np.outer(self.p_c, self.p_c)
                    + self.c_mu * rank_mu)
        self.sigma *= math.exp((self.c_sigma / self.d_sigma)
                               * (ps_norm / self.chi_n - 1.0))
        self.generation = g
        self._decompose()

    def state_dict(self):
        return {
            "n": self.n,
            "popsize": self.lam,
            "mean": self.mean.tolist(),
            "sigma": self.sigma,
            "cov": self.cov.tolist(),
            "eig_b": self._b.tolist(),
            "eig_d": self._d.tolist(),
            "p_sigma": self.p_sigma.tolist(),
            "p_c": self.p_c.tolist(),
            "generation": self.generation,
            "rng_state": _rng_state_to_json(self.rng.bit_generator.state),
        }

    @classmethod
    def from_state_dict(cls, d):
        obj = cls(np.asarray(d["mean"], float), d["sigma"], d["popsize"],
                  rng_state=_rng_state_from_json(d["rng_state"]))
        obj.cov = np.asarray(d["cov"], float)
        # restore the eigenbasis verbatim so resumed sampling is bit-exact
        obj._b = np.asarray(d["eig_b"], float)
        obj._d = np.asarray(d["eig_d"], float)
        obj.p_sigma = np.asarray(d["p_sigma"], float)
        obj.p_c = np.asarray(d["p_c"], float)
        obj.generation = int(d["generation"])
        return obj


def _rng_state_to_json(state):
    return {"bit_generator": state["bit_generator"],
            "state": {"state": str(state["state"]["state"]),
                      "inc": str(state["state"]["inc"])},
            "has_uint32": state["has_uint32"],
            "uinteger": state["uinteger"]}


def _rng_state_from_json(d):
    return {"bit_generator": d["bit_generator"],
            "state": {"state": int(d["state"]["state"]),
                      "inc": int(d["state"]["inc"])},
            "has_uint32": d["has_uint32"],
            "uinteger": d["uinteger"]}
