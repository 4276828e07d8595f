"""Closed-form Gaussian surfaces and the allocation cross-check."""

import numpy as np
import pytest

from sordf import (
    AlignedGaussianParams,
    AlignedRegion,
    GaussianSource,
    aligned_eigenbasis,
    aligned_sordf_allocation,
    aligned_sordf_closed_form,
    gaussian_semantic_only_rate,
    mmse_of,
    reverse_waterfill,
    scalar_sordf,
)


def aligned_spectrum_rate(params, budget):
    """Hand waterfilling for the aligned spectrum (one big, m-1 small).

    Written out from the two-level structure so it shares no code with
    the library's allocation routine.
    """
    m, z = params.m, params.sigma_z2
    p1 = params.top_eigenvalue
    if budget >= p1 + (m - 1) * z:
        return 0.0
    if budget <= m * z:
        theta = budget / m
        return 0.5 * np.log(p1 / theta) + 0.5 * (m - 1) * np.log(z / theta)
    theta = budget - (m - 1) * z
    return 0.5 * np.log(p1 / theta)


def region_match_count(params, d_s, d_a):
    """Evaluate all five region predicates independently of the library."""
    m, z = params.m, params.sigma_z2
    p1 = params.top_eigenvalue
    dsx = params.alpha**2 * (d_s - params.mmse)
    checks = [
        m * dsx <= d_a <= dsx + (m - 1) * z,
        d_a < m * z and dsx >= d_a / m,
        dsx < p1 and d_a > dsx + (m - 1) * z,
        m * z <= d_a < m * (params.sigma_s2 + z) and dsx >= d_a - (m - 1) * z,
        d_a >= m * (params.sigma_s2 + z) and dsx >= p1,
    ]
    return sum(checks)


class TestReverseWaterfill:
    def test_budget_above_total_power(self):
        rate, d, theta = reverse_waterfill([1.0, 2.0, 3.0], 10.0)
        assert rate == 0.0
        np.testing.assert_allclose(d, [1.0, 2.0, 3.0])

    def test_equal_variances_split_evenly(self):
        rate, d, theta = reverse_waterfill([2.0, 2.0], 1.0)
        np.testing.assert_allclose(d, [0.5, 0.5])
        assert rate == pytest.approx(np.log(2.0 / 0.5), abs=1e-14)

    def test_matches_scan_oracle_two_components(self):
        """Brute minimization over the split of the budget between two
        components must agree with the waterfilling solution."""
        var = np.array([3.0, 0.7])
        budget = 1.1
        splits = np.linspace(1e-9, budget - 1e-9, 20001)
        d1 = np.minimum(splits, var[0])
        d2 = np.minimum(budget - splits, var[1])
        rates = 0.5 * (
            np.log(np.maximum(var[0] / d1, 1.0)) + np.log(np.maximum(var[1] / d2, 1.0))
        )
        rate, _, _ = reverse_waterfill(var, budget)
        assert rate == pytest.approx(rates.min(), abs=1e-7)

    def test_allocation_never_exceeds_power(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            var = rng.uniform(0.1, 4.0, size=rng.integers(1, 6))
            budget = rng.uniform(0.05, var.sum() * 1.2)
            rate, d, theta = reverse_waterfill(var, budget)
            assert np.all(d <= var + 1e-12)
            np.testing.assert_allclose(
                d, np.minimum(theta, var), atol=1e-9
            )
            assert d.sum() <= max(budget, var.sum()) + 1e-9

    def test_nonpositive_budget_rejected(self):
        with pytest.raises(ValueError):
            reverse_waterfill([1.0], 0.0)


class TestSemanticOnlyRate:
    def test_budget_beyond_estimate_power_is_zero(self):
        src = GaussianSource([[1.0]], [[0.5]], [[1.0]])
        # estimate power 0.25, mmse 0.75
        point = gaussian_semantic_only_rate(src, 1.2)
        assert point.rate == 0.0
        assert point.status == "zero_rate"

    def test_scalar_half_log_five(self):
        src = GaussianSource([[1.0]], [[0.5]], [[1.0]])
        point = gaussian_semantic_only_rate(src, 0.8)
        assert point.rate == pytest.approx(0.8047189562170502, abs=1e-12)

    def test_matches_aligned_surface_when_appearance_is_loose(self):
        params = AlignedGaussianParams(m=2, sigma_s2=1.0, sigma_z2=1.0)
        for t in (0.05, 0.2, 0.5):
            d_s = params.mmse + t
            only = gaussian_semantic_only_rate(params.to_gaussian(), d_s)
            closed, region = aligned_sordf_closed_form(params, d_s, 1e9)
            assert only.rate == pytest.approx(closed.rate, abs=1e-10)

    def test_infeasible_at_mmse(self):
        src = GaussianSource([[1.0]], [[0.5]], [[1.0]])
        point = gaussian_semantic_only_rate(src, mmse_of(src))
        assert point.status == "infeasible"
        assert np.isnan(point.rate)


class TestScalarSordf:
    def test_zero_rate_when_budgets_cover_power(self):
        src = GaussianSource([[1.0]], [[1.0]], [[1.0]])
        point = scalar_sordf(src, 1.0, 1.0)
        assert point.rate == 0.0
        assert point.status == "zero_rate"

    def test_half_log_twenty(self):
        src = GaussianSource([[1.0]], [[1.0]], [[2.0]])
        point = scalar_sordf(src, 0.75, 0.1)
        assert point.rate == pytest.approx(1.4978661367769955, abs=1e-12)
        assert point.status == "exact"

    def test_independent_state_leaves_appearance_operand(self):
        src = GaussianSource([[1.0]], [[0.0]], [[2.0]])
        point = scalar_sordf(src, 1.5, 0.5)  # d_s > mmse = sigma_s
        assert point.rate == pytest.approx(0.5 * np.log(2.0 / 0.5), abs=1e-12)

    def test_infeasible_flags(self):
        src = GaussianSource([[1.0]], [[1.0]], [[2.0]])
        assert scalar_sordf(src, 0.4, 0.1).status == "infeasible"  # below mmse
        assert scalar_sordf(src, 0.75, 0.0).status == "infeasible"

    def test_vector_source_rejected(self):
        src = GaussianSource(np.eye(2), np.zeros((2, 2)), np.eye(2))
        with pytest.raises(ValueError):
            scalar_sordf(src, 1.0, 1.0)


class TestAlignedEigenbasis:
    def test_single_observation(self):
        params = AlignedGaussianParams(m=1, sigma_s2=1.0, sigma_z2=1.0)
        np.testing.assert_allclose(aligned_eigenbasis(params), [[1.0]])

    def test_two_observations_explicit(self):
        params = AlignedGaussianParams(m=2, sigma_s2=1.0, sigma_z2=1.0)
        B = aligned_eigenbasis(params)
        r = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(B[0], [r, r], atol=1e-15)
        np.testing.assert_allclose(B[1], [r, -r], atol=1e-15)

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 6])
    def test_orthonormal_and_diagonalizing(self, m):
        params = AlignedGaussianParams(m=m, sigma_s2=1.3, sigma_z2=0.6)
        B = aligned_eigenbasis(params)
        np.testing.assert_allclose(B @ B.T, np.eye(m), atol=1e-12)
        diag = B @ params.to_gaussian().sigma_x @ B.T
        expected = np.diag([params.top_eigenvalue] + [0.6] * (m - 1))
        np.testing.assert_allclose(diag, expected, atol=1e-10)

    def test_spectrum_matches_generic_eigendecomposition(self):
        params = AlignedGaussianParams(m=4, sigma_s2=1.0, sigma_z2=1.0)
        eigs = np.linalg.eigvalsh(params.to_gaussian().sigma_x)
        np.testing.assert_allclose(
            np.sort(eigs), [1.0, 1.0, 1.0, 5.0], atol=1e-10
        )


class TestAlignedClosedForm:
    def test_zero_rate_region_is_exact_zero(self):
        params = AlignedGaussianParams(m=3, sigma_s2=1.0, sigma_z2=0.5)
        rng = np.random.default_rng(2021)
        da_edge = params.m * (params.sigma_s2 + params.sigma_z2)
        ds_edge = params.mmse + params.top_eigenvalue / params.alpha**2
        for _ in range(200):
            d_a = da_edge * (1.0 + rng.uniform(0.0, 3.0))
            d_s = ds_edge * (1.0 + rng.uniform(0.0, 3.0))
            point, region = aligned_sordf_closed_form(params, d_s, d_a)
            assert point.rate == 0.0
            assert region is AlignedRegion.ZERO_RATE
        # corner of the region exactly
        point, region = aligned_sordf_closed_form(params, ds_edge, da_edge)
        assert point.rate == 0.0

    def test_m1_reduces_to_scalar(self):
        params = AlignedGaussianParams(m=1, sigma_s2=1.0, sigma_z2=0.7)
        src = params.to_gaussian()
        rng = np.random.default_rng(9)
        for _ in range(50):
            d_s = params.mmse + rng.uniform(0.01, 2.0)
            d_a = rng.uniform(0.05, 3.0)
            closed, _ = aligned_sordf_closed_form(params, d_s, d_a)
            scalar = scalar_sordf(src, d_s, d_a)
            assert closed.rate == pytest.approx(scalar.rate, abs=1e-12)

    def test_two_observation_point_matches_allocation(self):
        params = AlignedGaussianParams(m=2, sigma_s2=1.0, sigma_z2=1.0)
        point, region = aligned_sordf_closed_form(params, 0.6, 0.5)
        alloc = aligned_sordf_allocation(params, 0.6, 0.5)
        assert point.rate == pytest.approx(alloc.rate, abs=1e-6)
        assert region is AlignedRegion.APPEARANCE_DOMINATED

    @pytest.mark.parametrize(
        "m,sigma_s2,sigma_z2",
        [(1, 1.0, 1.0), (2, 1.0, 1.0), (3, 0.5, 2.0), (5, 2.0, 0.3)],
    )
    def test_exactly_one_region_in_the_interior(self, m, sigma_s2, sigma_z2):
        params = AlignedGaussianParams(m=m, sigma_s2=sigma_s2, sigma_z2=sigma_z2)
        rng = np.random.default_rng(100 + m)
        scale_a = m * (sigma_s2 + sigma_z2)
        for _ in range(10_000):
            d_s = params.mmse * (1.0 + rng.uniform(1e-6, 3.0))
            d_a = rng.uniform(1e-6, 2.0) * scale_a
            count = region_match_count(params, d_s, d_a)
            point, region = aligned_sordf_closed_form(params, d_s, d_a)
            assert count >= 1, (d_s, d_a)
            assert region is not None
            if count > 1:
                # overlaps exist only on measure-zero boundary lines
                dsx = params.alpha**2 * (d_s - params.mmse)
                on_boundary = (
                    abs(m * dsx - d_a) < 1e-9
                    or abs(d_a - dsx - (m - 1) * sigma_z2) < 1e-9
                    or abs(d_a - m * sigma_z2) < 1e-9
                )
                assert on_boundary, (d_s, d_a, count)

    def test_formulas_agree_on_sampled_boundaries(self):
        params = AlignedGaussianParams(m=3, sigma_s2=1.0, sigma_z2=1.0)
        m, z = 3, 1.0
        rng = np.random.default_rng(55)
        for _ in range(200):
            # boundary between the tradeoff band and the semantic-only region
            dsx = rng.uniform(0.05, 0.95) * z
            d_s = params.mmse + dsx / params.alpha**2
            d_a = dsx + (m - 1) * z
            inside, _ = aligned_sordf_closed_form(params, d_s, d_a * (1 - 1e-11))
            outside, _ = aligned_sordf_closed_form(params, d_s, d_a * (1 + 1e-11))
            assert inside.rate == pytest.approx(outside.rate, abs=1e-9)
            # boundary between the tradeoff band and equal-split region
            d_a2 = m * dsx
            low, _ = aligned_sordf_closed_form(params, d_s, d_a2 * (1 - 1e-11))
            high, _ = aligned_sordf_closed_form(params, d_s, d_a2 * (1 + 1e-11))
            assert low.rate == pytest.approx(high.rate, abs=1e-9)

    def test_appearance_only_limit_matches_waterfilling(self):
        params = AlignedGaussianParams(m=4, sigma_s2=1.0, sigma_z2=0.5)
        huge_ds = params.mmse + 100.0 * params.top_eigenvalue / params.alpha**2
        for budget in (0.3, 1.0, 2.5, 5.0):
            point, _ = aligned_sordf_closed_form(params, huge_ds, budget)
            assert point.rate == pytest.approx(
                aligned_spectrum_rate(params, budget), abs=1e-8
            )

    def test_surface_monotone_and_midpoint_convex(self):
        params = AlignedGaussianParams(m=3, sigma_s2=1.0, sigma_z2=1.0)
        ds_axis = np.linspace(params.mmse + 0.02, 1.2, 12)
        da_axis = np.linspace(0.2, 7.0, 12)
        grid = np.array([
            [aligned_sordf_closed_form(params, s, a)[0].rate for a in da_axis]
            for s in ds_axis
        ])
        assert (np.diff(grid, axis=0) <= 1e-8).all()
        assert (np.diff(grid, axis=1) <= 1e-8).all()
        rng = np.random.default_rng(77)
        for _ in range(200):
            s1, s2 = rng.uniform(params.mmse + 0.02, 1.2, size=2)
            a1, a2 = rng.uniform(0.2, 7.0, size=2)
            r1, _ = aligned_sordf_closed_form(params, s1, a1)
            r2, _ = aligned_sordf_closed_form(params, s2, a2)
            mid, _ = aligned_sordf_closed_form(
                params, 0.5 * (s1 + s2), 0.5 * (a1 + a2)
            )
            assert mid.rate <= 0.5 * (r1.rate + r2.rate) + 1e-8

    def test_infeasible_at_mmse_and_below(self):
        params = AlignedGaussianParams(m=2, sigma_s2=1.0, sigma_z2=1.0)
        point, region = aligned_sordf_closed_form(params, params.mmse, 0.5)
        assert point.status == "infeasible" and region is None
        point, region = aligned_sordf_closed_form(params, 0.1, 0.5)
        assert point.status == "infeasible"
        point, region = aligned_sordf_closed_form(params, 1.0, 0.0)
        assert point.status == "infeasible"


class TestAllocation:
    def test_loose_appearance_budget_caps_only_component_one(self):
        params = AlignedGaussianParams(m=3, sigma_s2=1.0, sigma_z2=0.8)
        cap = params.alpha**2 * (0.5 - params.mmse)
        sol = aligned_sordf_allocation(params, 0.5, 1e6)
        assert sol.component_distortions[0] == pytest.approx(
            min(cap, params.top_eigenvalue), abs=1e-12
        )
        np.testing.assert_allclose(sol.component_distortions[1:], 0.8, atol=1e-12)

    def test_equal_split_region_matches_formula(self):
        params = AlignedGaussianParams(m=4, sigma_s2=1.0, sigma_z2=1.0)
        m, z = 4, 1.0
        d_a = 2.0  # below m z, semantic cap loose enough
        d_s = params.mmse + (d_a / m) * 1.5 / params.alpha**2
        sol = aligned_sordf_allocation(params, d_s, d_a)
        np.testing.assert_allclose(sol.component_distortions, d_a / m, atol=1e-10)
        expected = 0.5 * np.log(m * params.top_eigenvalue / d_a) + (
            0.5 * (m - 1) * np.log(m * z / d_a)
        )
        assert sol.rate == pytest.approx(expected, abs=1e-9)

    def test_cross_check_against_closed_form(self):
        rng = np.random.default_rng(21)
        for m in (1, 2, 3, 5):
            params = AlignedGaussianParams(m=m, sigma_s2=1.0, sigma_z2=1.0)
            for _ in range(60):
                d_s = params.mmse + rng.uniform(1e-3, 1.5)
                d_a = rng.uniform(0.05, 1.5) * m * 2.0
                closed, _ = aligned_sordf_closed_form(params, d_s, d_a)
                alloc = aligned_sordf_allocation(params, d_s, d_a)
                assert closed.rate == pytest.approx(alloc.rate, abs=1e-6)

    def test_allocation_respects_budgets(self):
        params = AlignedGaussianParams(m=3, sigma_s2=1.0, sigma_z2=1.0)
        sol = aligned_sordf_allocation(params, 0.7, 1.3)
        cap = params.alpha**2 * (0.7 - params.mmse)
        assert sol.component_distortions[0] <= cap + 1e-10
        assert sol.component_distortions.sum() <= 1.3 + 1e-10
        assert sol.achieved_d_s <= 0.7 + 1e-10

    def test_infeasible_raises(self):
        params = AlignedGaussianParams(m=2, sigma_s2=1.0, sigma_z2=1.0)
        with pytest.raises(ValueError, match="infeasible"):
            aligned_sordf_allocation(params, params.mmse, 0.5)
