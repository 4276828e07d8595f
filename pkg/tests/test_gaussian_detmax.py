"""Barrier det-max solver against the closed forms and its own certificate."""

import numpy as np
import pytest

from sordf import (
    AlignedGaussianParams,
    DetMaxConfig,
    GaussianSource,
    achieving_reproduction,
    aligned_sordf_closed_form,
    detmax_sordf,
    gaussian_rd_rate,
    gaussian_semantic_only_rate,
    mmse_of,
    scalar_sordf,
)


def example_three_sensor_source():
    """Two-dimensional state observed through three noisy linear sensors."""
    H = np.array([[1.0, 0.0], [0.0, -1.0], [0.5, 1.0]])
    return GaussianSource.from_linear_model(
        H, np.diag([1.0, 2.0]), np.diag([10.0, 1.0, 0.1])
    )


def random_scalar_source(rng):
    sigma_x = rng.uniform(0.3, 4.0)
    sigma_s = rng.uniform(0.3, 4.0)
    rho = rng.uniform(-0.95, 0.95)
    sigma_sx = rho * np.sqrt(sigma_s * sigma_x)
    return GaussianSource([[sigma_s]], [[sigma_sx]], [[sigma_x]])


class TestDetmaxSordf:
    def test_full_budgets_give_zero_rate(self):
        src = example_three_sensor_source()
        sol = detmax_sordf(src, np.trace(src.sigma_s) + 1.0, np.trace(src.sigma_x) + 1.0)
        assert sol.status == "zero_rate"
        assert sol.rate == 0.0
        np.testing.assert_allclose(sol.delta_star, src.sigma_x)

    def test_scalar_closed_form_agreement(self):
        src = GaussianSource([[1.0]], [[1.0]], [[2.0]])
        sol = detmax_sordf(src, 0.75, 0.1)
        assert sol.status == "converged"
        assert sol.rate == pytest.approx(0.5 * np.log(20.0), abs=1e-4)

    def test_random_scalars_match_closed_form(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            src = random_scalar_source(rng)
            mmse = mmse_of(src)
            d_s = mmse + rng.uniform(0.01, 1.0) * float(src.sigma_s[0, 0])
            d_a = rng.uniform(0.02, 1.2) * float(src.sigma_x[0, 0])
            closed = scalar_sordf(src, d_s, d_a)
            sol = detmax_sordf(src, d_s, d_a)
            assert sol.rate == pytest.approx(closed.rate, abs=1e-4)

    def test_semantic_only_limit(self):
        src = example_three_sensor_source()
        d_s = mmse_of(src) + 0.6
        sol = detmax_sordf(src, d_s, np.inf)
        ref = gaussian_semantic_only_rate(src, d_s)
        assert sol.rate == pytest.approx(ref.rate, abs=1e-6)

    def test_appearance_only_limit(self):
        src = example_three_sensor_source()
        sol = detmax_sordf(src, np.inf, 2.5)
        assert sol.rate == pytest.approx(
            gaussian_rd_rate(src.sigma_x, 2.5), abs=1e-6
        )

    def test_aligned_agreement_small_grid(self):
        params = AlignedGaussianParams(m=3, sigma_s2=1.0, sigma_z2=1.0)
        src = params.to_gaussian()
        for d_s in (0.45, 0.7, 1.1):
            for d_a in (0.8, 2.0, 5.0):
                closed, _ = aligned_sordf_closed_form(params, d_s, d_a)
                sol = detmax_sordf(src, d_s, d_a)
                assert sol.rate == pytest.approx(closed.rate, abs=1e-4)

    def test_infeasible_budgets(self):
        src = example_three_sensor_source()
        assert detmax_sordf(src, mmse_of(src), 1.0).status == "infeasible"
        assert detmax_sordf(src, mmse_of(src) - 0.1, 1.0).status == "infeasible"
        assert detmax_sordf(src, 2.0, 0.0).status == "infeasible"

    def test_constraints_respected(self):
        src = example_three_sensor_source()
        d_s = mmse_of(src) + 0.5
        sol = detmax_sordf(src, d_s, 3.0)
        assert sol.achieved_tr_delta <= 3.0 + 1e-7
        assert sol.achieved_tr_mdm <= 0.5 + 1e-7
        eigs = np.linalg.eigvalsh(sol.delta_star)
        assert eigs.min() >= -1e-8
        gap = np.linalg.eigvalsh(src.sigma_x - sol.delta_star)
        assert gap.min() >= -1e-8

    def test_barrier_path_descends_to_the_answer(self):
        src = example_three_sensor_source()
        sol = detmax_sordf(src, mmse_of(src) + 0.5, 3.0)
        rates = [r for _, r in sol.barrier_path]
        # successive centers sharpen the objective estimate monotonically
        assert all(a >= b - 1e-9 for a, b in zip(rates, rates[1:]))
        ts = [t for t, _ in sol.barrier_path]
        assert all(b == pytest.approx(10.0 * a) for a, b in zip(ts, ts[1:]))

    def test_multiplier_sensitivity_consistent_with_slackness(self):
        """Perturbing a slack budget must not move the rate; perturbing an
        active one must."""
        src = example_three_sensor_source()
        d_s = mmse_of(src) + 0.25
        d_a = 12.0  # generous: appearance constraint slack at the optimum
        base = detmax_sordf(src, d_s, d_a)
        slack_a = d_a - base.achieved_tr_delta
        assert slack_a > 1e-2
        bumped_a = detmax_sordf(src, d_s, d_a + 0.05)
        assert abs(bumped_a.rate - base.rate) < 1e-6
        bumped_s = detmax_sordf(src, d_s + 0.01, d_a)
        assert base.rate - bumped_s.rate > 1e-4


class TestAchievingReproduction:
    def test_full_covariance_channel(self):
        src = example_three_sensor_source()
        M = src.estimator_matrix()
        ds, da, rate = achieving_reproduction(src, src.sigma_x)
        assert da == pytest.approx(np.trace(src.sigma_x), abs=1e-12)
        assert ds == pytest.approx(np.trace(M @ src.sigma_x @ M.T), abs=1e-12)
        assert rate == pytest.approx(0.0, abs=1e-12)

    def test_half_covariance_scalar(self):
        src = GaussianSource([[1.0]], [[1.0]], [[2.0]])
        ds, da, rate = achieving_reproduction(src, 0.5 * src.sigma_x)
        assert rate == pytest.approx(0.5 * np.log(2.0), abs=1e-12)
        assert da == pytest.approx(1.0, abs=1e-12)
        assert ds == pytest.approx(0.25, abs=1e-12)  # M = 1/2, delta = 1

    def test_reconstruction_matches_solver_on_random_sources(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            m, l = int(rng.integers(1, 4)), int(rng.integers(1, 3))
            H = rng.normal(size=(m, l))
            sigma_s = np.diag(rng.uniform(0.3, 2.0, size=l))
            sigma_w = np.diag(rng.uniform(0.2, 2.0, size=m))
            src = GaussianSource.from_linear_model(H, sigma_s, sigma_w)
            mmse = mmse_of(src)
            d_s = mmse + rng.uniform(0.05, 0.8) * max(np.trace(sigma_s) - mmse, 0.1)
            d_a = rng.uniform(0.1, 0.9) * np.trace(src.sigma_x)
            sol = detmax_sordf(src, d_s, d_a)
            if sol.status != "converged":
                continue
            ds, da, rate = achieving_reproduction(src, sol.delta_star)
            assert ds == pytest.approx(sol.achieved_tr_mdm, abs=1e-8)
            assert da == pytest.approx(sol.achieved_tr_delta, abs=1e-8)
            assert rate == pytest.approx(sol.rate, abs=1e-8)

    def test_invalid_delta_rejected(self):
        src = example_three_sensor_source()
        with pytest.raises(ValueError, match="positive semidefinite"):
            achieving_reproduction(src, -0.1 * np.eye(3))
        with pytest.raises(ValueError, match="delta_star <= sigma_x"):
            achieving_reproduction(src, 2.0 * src.sigma_x)
        with pytest.raises(ValueError, match="symmetric"):
            achieving_reproduction(src, np.triu(np.ones((3, 3))))
