"""Empirical verification of the central limit behaviour.

Checks two things the theory promises: the scaled partial sums of window
cosines have the limit covariance given by the lag series of cosine
covariances, and the minimal contrast estimates are asymptotically normal
on the sqrt(n) scale.  Both are Monte Carlo checks against independently
computed targets, not proofs.
"""

from dataclasses import dataclass, field

import numpy as np

from . import charfn, estimator
from .charfn import CovSeriesSpec
from .errors import ModelError
from .simulate import SimConfig, derive_rng, simulate_path

__all__ = [
    "CltReport", "EstimatorNormalityReport", "vn_statistic", "verify_clt",
    "verify_estimator_normality",
]


@dataclass
class CltReport:
    """Monte Carlo vs series covariance of the partial-sum statistic.

    ``mc_cov`` uses the exact partial-sum statistic; ``mc_cov_ecf`` the
    sqrt(n)-scaled empirical-CF deviation, which differs by a boundary
    term of order (m-1)/sqrt(n) -- both conventions are reported.
    """

    u_points: np.ndarray
    mc_cov: np.ndarray
    mc_cov_ecf: np.ndarray
    series_cov: np.ndarray
    relative_gap: np.ndarray
    relative_gap_ecf: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    n: int
    reps: int
    lag_cut: int

    def to_csv(self, file):
        with open(file, "w") as fh:
            fh.write("i,j,mc_cov,mc_cov_ecf,series_cov,relative_gap\n")
            p = self.u_points.shape[0]
            for i in range(p):
                for j in range(p):
                    fh.write(
                        f"{i},{j},{self.mc_cov[i, j]!r},"
                        f"{self.mc_cov_ecf[i, j]!r},"
                        f"{self.series_cov[i, j]!r},"
                        f"{self.relative_gap[i, j]!r}\n"
                    )


def _moment_summary(columns):
    centered = columns - columns.mean(axis=0)
    std = centered.std(axis=0, ddof=1)
    std = np.where(std == 0.0, 1.0, std)
    z = centered / std
    skew = (z ** 3).mean(axis=0)
    kurt = (z ** 4).mean(axis=0) - 3.0
    return skew, kurt


def vn_statistic(path, model, xi, u_points, m, phi=None):
    """Partial-sum statistic of window cosines, one value per u point.

    V_n[j] = n^{-1/2} sum_{s=0}^{n-m} (cos<u_j, Z_s> - phi_xi(u_j)).
    ``phi`` may carry precomputed theoretical CF values.
    """
    u_points = np.atleast_2d(np.asarray(u_points, dtype=float))
    if u_points.shape[1] != m:
        raise ValueError(f"u points must have m={m} coordinates")
    xi = model.check(xi)
    if phi is None:
        phi = np.array([
            charfn.theoretical_cf(model, xi, u) for u in u_points
        ])
    values = path.values if hasattr(path, "values") else np.asarray(path)
    n = values.shape[0]
    cos_sums = n * charfn.empirical_cf(values, u_points)
    return (cos_sums - (n - m + 1) * phi) / np.sqrt(n)


def verify_clt(model, xi, u_points, m, n, reps, spec=CovSeriesSpec(),
               seed=0, cfg=None):
    """Simulate ``reps`` paths and compare cov(V_n) to the lag series.

    Refuses reps < 50 (the covariance estimate would be meaningless).
    Seeds derive from (seed, replication), so results do not depend on
    scheduling.
    """
    if reps < 50:
        raise ValueError(
            f"reps must be >= 50 for a usable covariance estimate, got {reps}"
        )
    xi = model.check(xi)
    u_points = np.atleast_2d(np.asarray(u_points, dtype=float))
    p = u_points.shape[0]
    cfg = cfg or SimConfig()
    phi = np.array([charfn.theoretical_cf(model, xi, u) for u in u_points])

    vn = np.empty((reps, p))
    vn_ecf = np.empty((reps, p))
    for rep in range(reps):
        path = simulate_path(model, xi, n, cfg, derive_rng(seed, rep))
        vn[rep] = vn_statistic(path, model, xi, u_points, m, phi=phi)
        ecf = charfn.empirical_cf(path.values, u_points)
        vn_ecf[rep] = np.sqrt(n) * (ecf - phi)

    mc_cov = np.cov(vn.T, ddof=1).reshape(p, p)
    mc_cov_ecf = np.cov(vn_ecf.T, ddof=1).reshape(p, p)

    series = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            series[i, j] = series[j, i] = charfn.asymptotic_cov(
                model, xi, u_points[i], u_points[j], spec
            )

    denom = np.maximum(np.abs(series), 1e-12)
    skew, kurt = _moment_summary(vn)
    return CltReport(
        u_points=u_points,
        mc_cov=mc_cov,
        mc_cov_ecf=mc_cov_ecf,
        series_cov=series,
        relative_gap=np.abs(mc_cov - series) / denom,
        relative_gap_ecf=np.abs(mc_cov_ecf - series) / denom,
        skewness=skew,
        excess_kurtosis=kurt,
        n=n,
        reps=reps,
        lag_cut=spec.lag_cut,
    )


@dataclass
class EstimatorNormalityReport:
    """Moment summary of sqrt(n) (xi_hat - xi0) across replications."""

    free_names: tuple
    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    n: int
    reps: int
    failures: int
    scaled: np.ndarray = field(repr=False, default=None)


def verify_estimator_normality(model, xi0, m, n, reps, grid, start,
                               fixed=None, seed=0, cfg=None,
                               gram_tol=1e-6):
    """Monte Carlo normality check of the scaled estimation errors.

    Requires the identifiability Gram matrix restricted to the free
    parameters to be positive definite at xi0; otherwise raises
    :class:`ModelError` naming the degeneracy.  No closed-form limiting
    covariance is attempted: the check is mean ~ 0 plus moment bands.
    """
    xi0 = model.check(xi0)
    free_idx, fixed = estimator._free_indices(model, fixed)
    gram = estimator.gram_hessian(model, xi0, grid)
    sub = gram[np.ix_(free_idx, free_idx)]
    eigs = np.linalg.eigvalsh(sub)
    if eigs[0] <= gram_tol * np.trace(sub) / len(free_idx):
        raise ModelError(
            f"{model.family_id}: CF derivative Gram matrix is numerically "
            f"singular for free parameters "
            f"{tuple(model.param_names[i] for i in free_idx)} at m={grid.m} "
            f"(min eig {eigs[0]:.3e}); the parameters are not identifiable "
            "at this window size"
        )
    cfg = cfg or SimConfig()
    xi0_free = np.array([xi0[i] for i in free_idx])

    rows = []
    failures = 0
    for rep in range(reps):
        path = simulate_path(model, xi0, n, cfg, derive_rng(seed, rep))
        res = estimator.estimate(path, model, m, grid, start, fixed=fixed)
        if not res.converged:
            failures += 1
            continue
        est_free = np.array([res.xi_hat[i] for i in free_idx])
        rows.append(np.sqrt(n) * (est_free - xi0_free))
    scaled = np.array(rows)
    skew, kurt = _moment_summary(scaled)
    return EstimatorNormalityReport(
        free_names=tuple(model.param_names[i] for i in free_idx),
        mean=scaled.mean(axis=0),
        std=scaled.std(axis=0, ddof=1),
        skewness=skew,
        excess_kurtosis=kurt,
        n=n,
        reps=reps,
        failures=failures,
        scaled=scaled,
    )
