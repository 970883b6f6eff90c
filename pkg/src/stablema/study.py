"""Configuration-driven Monte Carlo studies of the contrast estimator.

A study simulates ``reps`` independent paths per sample size, estimates
the free parameters on each, and reports |bias| and standard deviation per
parameter.  Replication seeds derive from (seed, cell, replication), so a
report is byte-identical regardless of the worker count.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from multiprocessing import get_context

import numpy as np

from . import estimator
from .errors import ParameterError
from .kernels import get_family
from .simulate import SimConfig, derive_rng, simulate_path

__all__ = ["StudyConfig", "MonteCarloReport", "run_study", "worker_count"]

FAILURE_FLAG_FRACTION = 0.2


@dataclass(frozen=True)
class StudyConfig:
    """One Monte Carlo cell set: a family, a truth, and estimation settings.

    ``fixed`` maps parameter names to pinned values (e.g. sigma = 1 for
    the two-parameter OU submodel); ``start`` lists starting values for
    the free parameters in family order.
    """

    family: str
    xi0: tuple
    m: int
    n_list: tuple
    reps: int
    nu: float
    nodes_per_dim: int
    start: tuple
    seed: int = 20240
    fixed: dict = field(default_factory=dict)
    k: int = 2
    grid_step: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "xi0", tuple(float(v) for v in self.xi0))
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "n_list",
                           tuple(int(n) for n in np.atleast_1d(self.n_list)))
        object.__setattr__(self, "fixed",
                           {str(k): float(v) for k, v in self.fixed.items()})
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        model = self.model()
        model.check(self.xi0)
        free_idx, fixed = estimator._free_indices(model, self.fixed)
        if len(self.start) != len(free_idx):
            raise ValueError(
                f"start has {len(self.start)} values; {len(free_idx)} "
                f"parameters are free"
            )
        start_xi = estimator._embed(model, free_idx, fixed,
                                    np.asarray(self.start))
        if not model.is_admissible(start_xi):
            raise ParameterError(
                f"starting point {self.start} is inadmissible for "
                f"{self.family} with fixed={self.fixed}"
            )

    def model(self):
        if self.family == "lfsm":
            return get_family("lfsm", k=self.k)
        return get_family(self.family)

    def to_json(self, file=None):
        payload = asdict(self)
        text = json.dumps(payload, indent=2, sort_keys=True)
        if file is not None:
            with open(file, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        if hasattr(source, "read"):
            payload = json.load(source)
        elif isinstance(source, str) and source.lstrip().startswith("{"):
            payload = json.loads(source)
        else:
            with open(source) as fh:
                payload = json.load(fh)
        known = cls.__dataclass_fields__.keys()
        unknown = set(payload) - set(known)
        if unknown:
            raise ValueError(f"unknown StudyConfig keys: {sorted(unknown)}")
        return cls(**payload)


CSV_HEADER = "family,beta0,theta0_1,theta0_2,n,reps,param,abs_bias,std,failures"


@dataclass
class MonteCarloReport:
    """Per-(n, parameter) |bias| / std rows plus failure diagnostics."""

    rows: list
    flagged: list

    def to_csv(self, file=None):
        lines = [CSV_HEADER]
        for row in self.rows:
            lines.append(
                "{family},{beta0!r},{theta0_1!r},{theta0_2!r},{n},{reps},"
                "{param},{abs_bias!r},{std!r},{failures}".format(**row)
            )
        text = "\n".join(lines) + "\n"
        if file is not None:
            with open(file, "w") as fh:
                fh.write(text)
        return text

    def cell(self, n, param):
        for row in self.rows:
            if row["n"] == n and row["param"] == param:
                return row
        raise KeyError(f"no report row for n={n}, param={param}")


@lru_cache(maxsize=32)
def _cell_setup(family, k, m, nu, nodes_per_dim):
    model = get_family("lfsm", k=k) if family == "lfsm" else get_family(family)
    grid = estimator.build_grid(
        m, nodes_per_dim, estimator.WeightSpec(nu=nu, m=m)
    )
    return model, grid


def _run_replication(job):
    config, cell_index, n, rep = job
    model, grid = _cell_setup(
        config.family, config.k, config.m, config.nu, config.nodes_per_dim
    )
    rng = derive_rng(config.seed, cell_index, rep)
    path = simulate_path(
        model, config.xi0, n, SimConfig(grid_step=config.grid_step), rng
    )
    result = estimator.estimate(
        path, model, config.m, grid, config.start, fixed=config.fixed
    )
    free_idx, _ = estimator._free_indices(model, config.fixed)
    return (
        tuple(result.xi_hat[i] for i in free_idx),
        bool(result.converged),
    )


def worker_count(explicit=None):
    """Worker pool size: explicit argument, else STABLEMA_WORKERS, else 1."""
    if explicit is not None:
        return max(1, int(explicit))
    return max(1, int(os.environ.get("STABLEMA_WORKERS", "1")))


def run_study(config, workers=None):
    """Run all cells of a study; deterministic for a given config seed.

    Non-converged minimizations are excluded from the bias/std aggregates
    and counted in the ``failures`` column; cells losing more than 20% of
    replications are flagged (the run still completes).
    """
    model = config.model()
    free_idx, _ = estimator._free_indices(model, config.fixed)
    free_names = [model.param_names[i] for i in free_idx]
    xi0_free = [config.xi0[i] for i in free_idx]

    jobs = [
        (config, cell_index, n, rep)
        for cell_index, n in enumerate(config.n_list)
        for rep in range(config.reps)
    ]
    n_workers = worker_count(workers)
    if n_workers == 1:
        outcomes = [_run_replication(job) for job in jobs]
    else:
        with get_context("fork").Pool(processes=n_workers) as pool:
            outcomes = pool.map(_run_replication, jobs, chunksize=1)

    rows, flagged = [], []
    base = dict(
        family=config.family,
        beta0=config.xi0[0],
        theta0_1=config.xi0[1],
        theta0_2=config.xi0[2],
        reps=config.reps,
    )
    for cell_index, n in enumerate(config.n_list):
        cell = outcomes[cell_index * config.reps:(cell_index + 1) * config.reps]
        kept = np.array([est for est, ok in cell if ok])
        failures = config.reps - kept.shape[0]
        if failures > FAILURE_FLAG_FRACTION * config.reps:
            flagged.append(
                f"n={n}: {failures}/{config.reps} minimizations failed"
            )
        for j, name in enumerate(free_names):
            if kept.shape[0] == 0:
                abs_bias, std = float("nan"), float("nan")
            else:
                abs_bias = float(abs(kept[:, j].mean() - xi0_free[j]))
                std = float(kept[:, j].std(ddof=1)) if kept.shape[0] > 1 else 0.0
                if kept.shape[0] == 1:
                    flagged.append(
                        f"n={n}: single usable replication, std degenerate"
                    )
            rows.append(dict(
                base, n=n, param=name, abs_bias=abs_bias, std=std,
                failures=failures,
            ))
    return MonteCarloReport(rows=rows, flagged=sorted(set(flagged)))
