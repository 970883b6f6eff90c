"""Minimal contrast estimation for heavy-tailed stable moving averages.

Simulates Levy-driven moving averages with symmetric beta-stable noise,
evaluates joint characteristic functions of observation windows, and
estimates the stability index together with multi-dimensional kernel
parameters by a weighted-L2 contrast between empirical and theoretical
characteristic functions.
"""

from .charfn import (CovSeriesSpec, asymptotic_cov, beta_norm, cf_at_nodes,
                     dependence_U, empirical_cf, norms_at_nodes, r_ell,
                     rho_mu, theoretical_cf)
from .clt import verify_clt, verify_estimator_normality, vn_statistic
from .errors import ModelError, NumericError, ParameterError, StablemaError
from .estimator import (EstimationResult, QuadratureGrid, WeightSpec,
                        build_grid, contrast, estimate, gaussian_weight,
                        gram_hessian, minimize)
from .kernels import (FAMILIES, carma_c, carma_covariation_identity,
                      covariation, envelope_constants, eval_kernel,
                      get_family, incomplete_gamma,
                      modou_covariation_closed_form, modou_scale_identity,
                      ou_norm_closed_form, periodic_norm_closed_form)
from .simulate import (SamplePath, SimConfig, derive_rng, load_path_csv,
                       sample_symmetric_stable, save_path_csv,
                       simulate_lfsm_increments, simulate_path)
from .study import MonteCarloReport, StudyConfig, run_study

__version__ = "0.1.0"
