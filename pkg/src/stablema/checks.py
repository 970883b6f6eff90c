"""Closed-form identities versus independent numeric integration.

Each check draws random admissible parameters, evaluates a closed-form
identity, recomputes the same quantity by adaptive quadrature of its
defining integral, and records the worst relative discrepancy.  This is
the oracle suite behind the ``cf-check`` CLI subcommand and the
acceptance test.
"""

import numpy as np

from . import charfn, kernels
from .integrate import adaptive_integral, geometric_tail_breaks

__all__ = ["closed_form_check", "CLOSED_FORM_TOL"]

CLOSED_FORM_TOL = 1e-6


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _tail_integral(f, lo, hi, breaks=(), tol=1e-11):
    pts = set(breaks) | set(geometric_tail_breaks(max(lo, 0.0) + 1.0, hi))
    return adaptive_integral(f, lo, hi, breakpoints=sorted(pts), abs_tol=tol)


def _check_ou_norm(rng, rounds):
    fam = kernels.get_family("ou")
    worst = 0.0
    for _ in range(rounds):
        sigma, lam = rng.uniform(0.3, 2.5, 2)
        beta = rng.uniform(0.3, 1.95)
        u2 = rng.uniform(0.0, 2.0)
        u1 = u2 + rng.uniform(0.05, 2.5)
        closed = kernels.ou_norm_closed_form(sigma, lam, beta, u1, u2)
        numeric = charfn.beta_norm(fam, (beta, sigma, lam), (u1, u2))
        worst = max(worst, _rel(closed, numeric))
    return worst


def _check_periodic_norm(rng, rounds):
    fam = kernels.get_family("periodic-ou")
    worst = 0.0
    for _ in range(rounds):
        th1, th2 = rng.uniform(0.4, 2.0, 2)
        beta = rng.uniform(0.4, 1.95)
        u2 = rng.uniform(0.0, 1.5)
        u1 = u2 + rng.uniform(0.05, 2.0)
        closed = kernels.periodic_norm_closed_form((th1, th2), beta, u1, u2)
        numeric = charfn.beta_norm(fam, (beta, th1, th2), (u1, u2))
        worst = max(worst, _rel(closed, numeric))
    return worst


def _check_modou_scale(rng, rounds):
    worst = 0.0
    for _ in range(rounds):
        th1, th2 = rng.uniform(0.3, 2.5, 2)
        beta = rng.uniform(0.3, 1.95)
        closed = kernels.modou_scale_identity(th1, th2, beta)

        def f(s, th1=th1, th2=th2, beta=beta):
            return (th1 * s * np.exp(-th2 * s)) ** beta

        hi = 10.0 + 40.0 / (beta * th2)
        numeric = _tail_integral(f, 0.0, hi)
        worst = max(worst, _rel(closed, numeric))
    return worst


def _check_modou_covariation(rng, rounds):
    fam = kernels.get_family("modulated-ou")
    worst = 0.0
    for _ in range(rounds):
        th1, th2 = rng.uniform(0.3, 2.2, 2)
        beta = rng.uniform(1.05, 1.95)
        closed = kernels.modou_covariation_closed_form(th1, th2, beta)
        numeric = kernels.covariation(fam, (beta, th1, th2))
        worst = max(worst, _rel(closed, numeric))
    return worst


def _check_carma_c(rng, rounds):
    worst = 0.0
    for _ in range(rounds):
        lam = -rng.uniform(0.3, 2.0)
        theta = rng.uniform(0.1, 2.0)
        beta = rng.uniform(0.3, 1.95)
        closed = kernels.carma_c(theta, lam, beta)

        def f(x, theta=theta, lam=lam, beta=beta):
            return (1.0 + theta * x) ** beta * np.exp(lam * beta * x)

        hi = 10.0 + 40.0 / (-lam * beta)
        numeric = _tail_integral(f, 0.0, hi)
        worst = max(worst, _rel(closed, numeric))
    return worst


def _check_carma_covariation(rng, rounds):
    fam = kernels.get_family("carma21")
    worst = 0.0
    for _ in range(rounds):
        lam = -rng.uniform(0.3, 2.0)
        theta = rng.uniform(0.1, 2.0)
        beta = rng.uniform(1.05, 1.95)
        closed = kernels.carma_covariation_identity(theta, lam, beta)
        numeric = kernels.covariation(fam, (beta, theta - lam, lam))
        worst = max(worst, _rel(closed, numeric))
    return worst


def _check_incomplete_gamma(rng, rounds):
    worst = 0.0
    for _ in range(rounds):
        a = rng.uniform(0.3, 3.0)
        x = rng.uniform(0.05, 5.0)
        closed = kernels.incomplete_gamma(a, x)

        def f(y, a=a):
            return y ** (a - 1.0) * np.exp(-y)

        numeric = _tail_integral(f, x, x + 60.0)
        worst = max(worst, _rel(closed, numeric))
    return worst


def closed_form_check(rounds=50, seed=1234):
    """Worst relative error of each closed form over random inputs."""
    rng = np.random.default_rng(seed)
    return {
        "ou_norm": _check_ou_norm(rng, rounds),
        "periodic_norm": _check_periodic_norm(rng, rounds),
        "modou_scale": _check_modou_scale(rng, rounds),
        "modou_covariation": _check_modou_covariation(rng, rounds),
        "carma_c": _check_carma_c(rng, rounds),
        "carma_covariation": _check_carma_covariation(rng, rounds),
        "incomplete_gamma": _check_incomplete_gamma(rng, rounds),
    }
