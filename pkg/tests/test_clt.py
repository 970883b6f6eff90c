import numpy as np
import pytest

from stablema import charfn
from stablema.charfn import CovSeriesSpec
from stablema.clt import verify_clt, verify_estimator_normality, vn_statistic
from stablema.errors import ModelError
from stablema.estimator import WeightSpec, build_grid
from stablema.kernels import get_family
from stablema.simulate import SamplePath, SimConfig, derive_rng, simulate_path


class TestVnStatistic:
    def test_zero_frequency_is_exact_zero(self):
        path = SamplePath(values=np.arange(1.0, 11.0))
        model = get_family("ou")
        xi = (1.5, 1.0, 1.0)
        val = vn_statistic(path, model, xi, [(0.0,)], 1)
        assert val[0] == 0.0

    def test_relation_to_empirical_cf(self):
        # V_n = sqrt(n) (phi_n - phi) + (m - 1) phi / sqrt(n), checked
        # algebraically on a length-10 path
        path = SamplePath(values=np.linspace(-1.0, 2.0, 10))
        model = get_family("ou")
        xi = (1.5, 1.0, 1.0)
        m = 3
        u = (0.8, 0.3, 1.1)
        phi = charfn.theoretical_cf(model, xi, u)
        n = path.n
        lhs = vn_statistic(path, model, xi, [u], m)[0]
        ecf = charfn.empirical_cf(path, u)
        rhs = np.sqrt(n) * (ecf - phi) + (m - 1) * phi / np.sqrt(n)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_hand_computation(self):
        path = SamplePath(values=np.array([np.pi, 0.0, np.pi]))
        model = get_family("ou")
        xi = (1.5, 1.0, 1.0)
        phi = charfn.theoretical_cf(model, xi, (1.0,))
        val = vn_statistic(path, model, xi, [(1.0,)], 1)[0]
        assert val == pytest.approx((-1.0 - 3 * phi) / np.sqrt(3), rel=1e-12)

    def test_centering_over_replications(self):
        model = get_family("ou")
        xi = (1.5, 1.0, 1.0)
        reps, n = 200, 2000
        u = [(1.0,)]
        phi = np.array([charfn.theoretical_cf(model, xi, (1.0,))])
        vals = np.empty(reps)
        for rep in range(reps):
            path = simulate_path(model, xi, n, SimConfig(), derive_rng(55, rep))
            vals[rep] = vn_statistic(path, model, xi, u, 1, phi=phi)[0]
        se = vals.std(ddof=1) / np.sqrt(reps)
        assert abs(vals.mean()) <= 3.0 * se + 0.02


class TestVerifyClt:
    def test_refuses_too_few_reps(self):
        with pytest.raises(ValueError, match="50"):
            verify_clt(get_family("ou"), (1.5, 1.0, 1.0), [(1.0,)], 1,
                       500, 20)

    def test_degenerate_u_gives_zero_matrices(self):
        report = verify_clt(
            get_family("ou"), (1.5, 1.0, 1.0), [(0.0,)], 1, 200, 60,
            CovSeriesSpec(lag_cut=5),
        )
        assert np.allclose(report.mc_cov, 0.0)
        assert np.allclose(report.series_cov, 0.0)

    def test_small_run_matches_series(self):
        report = verify_clt(
            get_family("ou"), (1.5, 1.0, 1.0), [(0.5,), (1.0,)], 1,
            2000, 150, CovSeriesSpec(lag_cut=60), seed=101,
        )
        assert report.mc_cov.shape == (2, 2)
        # covariance estimate with 150 reps: ~25% bands
        for i in range(2):
            assert report.relative_gap[i, i] < 0.35
        assert np.all(np.linalg.eigvalsh(report.series_cov) > -1e-8)
        # reported alongside: the ecf-scaled convention
        assert report.mc_cov_ecf.shape == (2, 2)

    def test_frobenius_trend_in_n(self):
        # doubling n moves cov(V_n) toward the series value, up to the MC
        # noise of a 200-replication covariance estimate: for the
        # short-memory OU the finite-n gap is already inside that noise,
        # so the sharp content is "no significant divergence"
        spec = CovSeriesSpec(lag_cut=60)
        reps = 200
        dists = []
        for n in (2000, 4000):
            report = verify_clt(
                get_family("ou"), (1.5, 1.0, 1.0), [(0.5,), (1.0,)], 1,
                n, reps, spec, seed=3,
            )
            dists.append(float(np.linalg.norm(
                report.mc_cov - report.series_cov
            )))
        noise = np.sqrt(2.0 / reps) * float(
            np.linalg.norm(report.series_cov)
        )
        assert dists[1] <= dists[0] + 3.0 * noise

    def test_csv_round_trip(self, tmp_path):
        report = verify_clt(
            get_family("ou"), (1.5, 1.0, 1.0), [(1.0,)], 1, 500, 60,
            CovSeriesSpec(lag_cut=20),
        )
        file = tmp_path / "clt.csv"
        report.to_csv(file)
        lines = file.read_text().splitlines()
        assert lines[0].startswith("i,j,mc_cov")
        assert len(lines) == 2


class TestEstimatorNormality:
    def test_non_identifiable_configuration_rejected(self):
        model = get_family("modulated-ou")
        grid = build_grid(1, 16, WeightSpec(nu=1.0, m=1))
        with pytest.raises(ModelError, match="not identifiable"):
            verify_estimator_normality(
                model, (1.5, 1.0, 1.0), 1, 500, 60, grid, (1.4, 0.8, 0.8),
            )

    def test_ou_submodel_scaled_errors_centered(self):
        model = get_family("ou")
        grid = build_grid(1, 20, WeightSpec(nu=1.0, m=1))
        report = verify_estimator_normality(
            model, (1.8, 1.0, 1.0), 1, 1000, 80, grid, (1.5, 0.5),
            fixed={"sigma": 1.0}, seed=17,
        )
        assert report.free_names == ("beta", "lam")
        assert report.failures == 0
        for j in range(2):
            se = report.std[j] / np.sqrt(report.reps)
            assert abs(report.mean[j]) <= 4.0 * se
        # loose normality screen at this replication count
        assert np.all(np.abs(report.skewness) < 1.0)
        assert np.all(np.abs(report.excess_kurtosis) < 2.0)
