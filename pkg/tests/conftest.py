import numpy as np
import pytest

from stablema.kernels import get_family

# interior parameter points and windows used across test modules
FAMILY_POINTS = {
    "ou": (1.5, 1.0, 1.0),
    "lfsm": (1.8, 0.8, 0.3),
    "periodic-ou": (1.5, 1.0, 1.0),
    "modulated-ou": (1.5, 1.0, 1.0),
    "gen-modulated-ou": (1.2, 1.25, 0.5),
    "carma21": (1.5, 2.0, -1.0),
}


def sample_admissible(family_id, rng, continuous=True):
    """A random interior parameter point for a family.

    For lfsm, ``continuous`` restricts to the H > 1/beta sub-case where
    the kernel is bounded and the power envelope holds.
    """
    fam = get_family(family_id)
    while True:
        if family_id == "lfsm":
            beta = rng.uniform(1.3, 1.95)
            lo = 1.0 / beta + 0.03 if continuous else 0.05
            hi = min(0.97, 2.0 - 1.0 / beta - 0.03)
            if hi <= lo:
                continue
            xi = (beta, rng.uniform(lo, hi), rng.uniform(0.2, 2.0))
        elif family_id == "carma21":
            lam = -rng.uniform(0.3, 1.8)
            xi = (rng.uniform(1.05, 1.95), rng.uniform(0.1, 2.0) - lam, lam)
        elif family_id == "modulated-ou":
            xi = (rng.uniform(1.05, 1.95), rng.uniform(0.3, 2.0),
                  rng.uniform(0.3, 2.0))
        else:
            xi = (rng.uniform(0.5, 1.95), rng.uniform(0.3, 2.0),
                  rng.uniform(0.3, 2.0))
        if fam.is_admissible(xi):
            return xi


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
