import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import FAMILY_POINTS, sample_admissible
from stablema import charfn
from stablema.errors import ModelError, ParameterError
from stablema.kernels import (FAMILIES, Carma21, LfsmIncrements,
                              carma_c, carma_covariation_identity,
                              covariation, envelope_constants, eval_kernel,
                              get_family, incomplete_gamma,
                              lfsm_asymptotic_constant,
                              modou_covariation_closed_form,
                              modou_scale_identity, ou_norm_closed_form,
                              periodic_norm_closed_form)

ALL_IDS = sorted(FAMILY_POINTS)


class TestRegistry:
    def test_ids(self):
        assert set(FAMILIES) == {
            "ou", "lfsm", "periodic-ou", "modulated-ou",
            "gen-modulated-ou", "carma21",
        }

    def test_unknown_family(self):
        with pytest.raises(KeyError):
            get_family("arma")

    def test_lfsm_order_configurable(self):
        assert get_family("lfsm", k=3).k == 3


class TestKernelValues:
    def test_ou_indicator_open_at_zero(self):
        assert eval_kernel(get_family("ou"), (1.5, 1.0, 1.0), 0.0) == 0.0

    def test_carma_value(self):
        val = eval_kernel(get_family("carma21"), (1.5, 2.0, -1.0), 1.0)
        assert val == pytest.approx(2.0 * math.exp(-1.0), rel=1e-12)

    def test_lfsm_first_term_only(self):
        val = eval_kernel(get_family("lfsm"), (1.6, 0.8, 1.0), 0.5)
        assert val == pytest.approx(0.5 ** 0.175, rel=1e-12)

    @pytest.mark.parametrize("family_id", ALL_IDS)
    def test_zero_on_nonpositive_axis(self, family_id):
        fam = get_family(family_id)
        xi = FAMILY_POINTS[family_id]
        x = np.array([-3.0, -1e-9, 0.0])
        assert np.all(fam.kernel(fam.check(xi), x) == 0.0)

    def test_inadmissible_named(self):
        with pytest.raises(ParameterError, match="lam > 0"):
            eval_kernel(get_family("ou"), (1.5, 1.0, -1.0), 1.0)
        with pytest.raises(ParameterError, match="beta in \\(1, 2\\)"):
            eval_kernel(get_family("modulated-ou"), (0.9, 1.0, 1.0), 1.0)
        with pytest.raises(ParameterError, match="b0 \\+ lam > 0"):
            eval_kernel(get_family("carma21"), (1.5, 0.5, -1.0), 1.0)

    def test_lfsm_jump_weights(self):
        # the (1, -2, 1) increment weights appear as the kernel's jump
        # coefficients (x - j)_+^eta picked up at the integer offsets
        fam = get_family("lfsm")
        beta, hurst, sigma = 1.8, 0.8, 0.7
        eta = hurst - 1.0 / beta
        xi = fam.check((beta, hurst, sigma))
        eps = 1e-9
        for j, coef in zip(range(3), (1.0, -2.0, 1.0)):
            if j == 0:
                lead = fam.kernel(xi, np.array([eps]))[0] / eps ** eta
            else:
                gap = fam.kernel(xi, np.array([j + eps]))[0] \
                    - fam.kernel(xi, np.array([j - eps]))[0]
                lead = gap / eps ** eta
            assert lead == pytest.approx(sigma * coef, rel=1e-4)


class TestDomains:
    def test_lfsm_domain_inequality(self):
        fam = get_family("lfsm")
        with pytest.raises(ParameterError, match="H < k - 1/beta"):
            fam.check((0.6, 0.9, 1.0))

    def test_lfsm_continuous_case_never_k1(self):
        fam = LfsmIncrements(k=1)
        # H < 1 - 1/beta and H > 1/beta cannot hold together for k = 1
        with pytest.raises(ParameterError, match="k = 1"):
            xi = fam.check((1.9, 0.4, 1.0))
            fam.require_continuous(xi)

    def test_start_point_is_admissible_but_not_continuous(self):
        fam = get_family("lfsm")
        xi = fam.check((1.5, 0.5, 2.0))
        assert not fam.is_continuous_case(xi)

    @pytest.mark.parametrize("family_id", ALL_IDS)
    def test_random_points_admissible(self, family_id, rng):
        fam = get_family(family_id)
        for _ in range(10):
            xi = sample_admissible(family_id, rng)
            assert fam.is_admissible(xi)


class TestEnvelope:
    @pytest.mark.parametrize("family_id", ALL_IDS)
    def test_bound_on_dense_grid(self, family_id, rng):
        # envelope inequality at 1000 log-spaced points for 100 random
        # admissible parameter points
        fam = get_family(family_id)
        x = np.geomspace(1e-6, 1e3, 1000)
        for _ in range(100):
            xi = fam.check(sample_admissible(family_id, rng))
            k_const, kappa, alpha = fam.envelope(xi)
            bound = k_const * np.where(x < 1.0, x ** kappa, x ** -alpha)
            vals = np.abs(fam.kernel(xi, x))
            assert np.all(vals <= bound * (1.0 + 1e-9))

    @pytest.mark.parametrize("family_id", ALL_IDS)
    def test_assumption_b_inequalities(self, family_id, rng):
        fam = get_family(family_id)
        for _ in range(25):
            xi = fam.check(sample_admissible(family_id, rng))
            _, kappa, alpha = fam.envelope(xi)
            beta = xi[0]
            assert alpha * beta > 2.0
            assert kappa > -1.0 / beta

    def test_lfsm_constants_exact(self):
        k_const, kappa, alpha = envelope_constants(
            get_family("lfsm"), (1.6, 0.8, 1.0)
        )
        assert kappa == pytest.approx(0.8 - 1 / 1.6)
        assert alpha == pytest.approx(2 + 1 / 1.6 - 0.8)

    def test_ou_alpha_choice(self):
        k_const, kappa, alpha = envelope_constants(
            get_family("ou"), (1.5, 1.0, 1.0)
        )
        assert alpha == pytest.approx(2.0)
        x = np.geomspace(1.0, 100.0, 500)
        assert np.all(np.exp(-x) <= k_const * x ** -alpha + 1e-15)

    def test_modulated_kappa(self):
        fam = get_family("modulated-ou")
        xi = fam.check((1.5, 1.0, 1.0))
        _, kappa, _ = fam.envelope(xi)
        assert kappa == 1.0
        x = np.array([1e-7, 1e-8])
        assert fam.kernel(xi, x) / x == pytest.approx([1.0, 1.0], rel=1e-6)

    def test_lfsm_envelope_needs_continuity(self):
        fam = get_family("lfsm")
        with pytest.raises(ModelError, match="continuous"):
            fam.envelope(fam.check((1.5, 0.5, 2.0)))

    def test_lfsm_asymptotic_ratio(self):
        beta, hurst, sigma = 1.6, 0.8, 1.0
        const = lfsm_asymptotic_constant(beta, hurst, sigma, k=2)
        fam = get_family("lfsm")
        xi = fam.check((beta, hurst, sigma))
        eta = hurst - 1.0 / beta

        def ratio(u):
            return float(fam.kernel(xi, np.array([u]))[0]) \
                / (const * u ** (eta - 2.0))

        assert ratio(1e4) == pytest.approx(ratio(1e5), rel=1e-2)
        assert ratio(1e5) == pytest.approx(1.0, rel=1e-3)


class TestClosedForms:
    def test_ou_norm_exact_values(self):
        assert ou_norm_closed_form(1, 1, 1, 2, 1) == pytest.approx(3.0, abs=1e-14)
        assert ou_norm_closed_form(2, 1, 1, 1, 0) == pytest.approx(2.0, abs=1e-14)
        assert ou_norm_closed_form(1, 1, 1.5, 1, 0) == pytest.approx(
            1 / 1.5, rel=1e-14
        )

    def test_ou_norm_cone_precondition(self):
        with pytest.raises(ValueError, match="u1 > u2"):
            ou_norm_closed_form(1, 1, 1.5, 1.0, 1.0)

    def test_modou_scale_values(self):
        assert modou_scale_identity(1, 1, 1) == pytest.approx(1.0, rel=1e-14)
        assert modou_scale_identity(1, 2, 1) == pytest.approx(0.25, rel=1e-14)
        # frozen from an adaptive-quadrature oracle of the defining integral
        assert modou_scale_identity(1, 1, 1.5) == pytest.approx(
            0.48240083637217845, rel=1e-10
        )
        with pytest.raises(ParameterError):
            modou_scale_identity(-1.0, 1.0, 1.5)

    def test_incomplete_gamma_values(self):
        assert incomplete_gamma(1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
        assert incomplete_gamma(2.0, 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-14)
        # frozen quadrature oracle value
        assert incomplete_gamma(1.5, 0.7) == pytest.approx(
            0.6252638756351397, rel=1e-12
        )
        with pytest.raises(ValueError):
            incomplete_gamma(1.5, 0.0)

    def test_incomplete_gamma_recurrence(self, rng):
        for _ in range(25):
            a = rng.uniform(0.2, 3.0)
            x = rng.uniform(0.05, 6.0)
            lhs = incomplete_gamma(a + 1.0, x)
            rhs = a * incomplete_gamma(a, x) + x ** a * math.exp(-x)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_carma_c_values(self):
        assert carma_c(1.0, -1.0, 1.0) == pytest.approx(2.0, rel=1e-12)
        # frozen quadrature oracle value at beta = 1.5
        assert carma_c(1.0, -1.0, 1.5) == pytest.approx(
            1.513348766710436, rel=1e-10
        )
        # theta -> 0 limit reduces to the plain exponential integral
        assert carma_c(1e-9, -1.0, 1.0) == pytest.approx(1.0, rel=1e-6)
        with pytest.raises(ParameterError, match="lam < 0"):
            carma_c(1.0, 0.5, 1.5)

    def test_periodic_reduces_to_ou(self):
        val = periodic_norm_closed_form(
            (0.7, 0.4), 1.5, 1.2, 0.3, modulation=lambda x: np.zeros_like(x)
        )
        assert val == pytest.approx(
            ou_norm_closed_form(1.0, 0.7, 1.5, 1.2, 0.3), rel=1e-10
        )

    def test_periodic_against_beta_norm(self):
        # frozen from the direct two-window quadrature oracle
        val = periodic_norm_closed_form((1.0, 1.0), 1.5, 1.0, 0.5)
        assert val == pytest.approx(2.9198601602151313, rel=1e-9)
        num = charfn.beta_norm(
            get_family("periodic-ou"), (1.5, 1.0, 1.0), (1.0, 0.5)
        )
        assert val == pytest.approx(num, rel=1e-6)

    def test_periodic_marginal_when_u2_zero(self):
        fam = get_family("periodic-ou")
        val = periodic_norm_closed_form((1.0, 1.0), 1.5, 0.8, 0.0)
        assert val == pytest.approx(
            charfn.beta_norm(fam, (1.5, 1.0, 1.0), (0.8,)), rel=1e-7
        )

    def test_periodic_cone_precondition(self):
        with pytest.raises(ValueError, match="u1 > u2"):
            periodic_norm_closed_form((1.0, 1.0), 1.5, 0.5, 0.5)


class TestCovariation:
    def test_requires_beta_above_one(self):
        with pytest.raises(ModelError, match="beta > 1"):
            covariation(get_family("ou"), (1.0, 1.0, 1.0))

    def test_ou_factorization(self):
        # g(s+1) = e^-lam g(s) for the OU kernel
        val = covariation(get_family("ou"), (1.5, 1.0, 1.0))
        assert val == pytest.approx(math.exp(-1.0) / 1.5, rel=1e-9)

    def test_modou_identity_beta_one_branch(self):
        # analytic continuation check of the closed form at beta = 1
        closed = modou_covariation_closed_form(1.0, 1.0, 1.0)
        direct = quad(lambda s: (s + 1) * np.exp(-(s + 1)), 0, 60,
                      epsabs=1e-13)[0]
        assert closed == pytest.approx(2 * math.exp(-1), rel=1e-12)
        assert closed == pytest.approx(direct, rel=1e-10)

    def test_carma_identity_beta_one_branch(self):
        closed = carma_covariation_identity(1.0, -1.0, 1.0)
        direct = quad(lambda s: (2 + s) * np.exp(-(s + 1)), 0, 60,
                      epsabs=1e-13)[0]
        assert closed == pytest.approx(3 * math.exp(-1), rel=1e-12)
        assert closed == pytest.approx(direct, rel=1e-10)

    def test_modou_numeric_matches_closed(self, rng):
        fam = get_family("modulated-ou")
        for _ in range(5):
            xi = sample_admissible("modulated-ou", rng)
            beta, th1, th2 = xi
            assert covariation(fam, xi) == pytest.approx(
                modou_covariation_closed_form(th1, th2, beta), rel=1e-7
            )

    def test_carma_numeric_matches_closed(self, rng):
        fam = get_family("carma21")
        for _ in range(5):
            xi = sample_admissible("carma21", rng)
            beta, b0, lam = xi
            assert covariation(fam, xi) == pytest.approx(
                carma_covariation_identity(b0 + lam, lam, beta), rel=1e-7
            )

    def test_modou_injectivity_map_decreasing(self):
        # covariation/scale cross-ratio reduces theta2 identification to
        # x -> (1+x) e^-x, strictly decreasing on (0, 10]
        x = np.linspace(1e-3, 10.0, 300)
        vals = (1.0 + x) * np.exp(-x)
        assert np.all(np.diff(vals) < 0.0)


class TestDiagnostics:
    def test_periodic_beta_one_note(self):
        fam = get_family("periodic-ou")
        assert fam.diagnostics((1.0, 1.0, 1.0))
        assert not fam.diagnostics((1.5, 1.0, 1.0))

    def test_carma_positive_kernel(self):
        fam = get_family("carma21")
        xi = fam.check((1.5, 2.0, -1.0))
        x = np.geomspace(1e-3, 50, 200)
        assert np.all(fam.kernel(xi, x) >= 0.0)
