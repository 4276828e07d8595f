"""Batched adaptive Simpson against scipy and analytic integrals."""

import numpy as np
import pytest
from scipy.integrate import quad

from sordf import adaptive_simpson


def test_polynomial_is_exact():
    # Simpson integrates cubics exactly
    val = adaptive_simpson(lambda x: x**3 - 2 * x + 1, -1.0, 3.0)
    assert val == pytest.approx(np.polyval([0.25, 0, -1, 1, 0], 3.0)
                                - np.polyval([0.25, 0, -1, 1, 0], -1.0), abs=1e-12)


def test_gaussian_density_mass():
    f = lambda x: np.exp(-x**2 / 2) / np.sqrt(2 * np.pi)
    val = adaptive_simpson(f, -10.0, 10.0, tol=1e-12)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_matches_scipy_on_oscillatory_integrand():
    f = lambda x: np.sin(7.0 * x) * np.exp(-x / 3.0)
    ref, _ = quad(lambda x: np.sin(7 * x) * np.exp(-x / 3), 0.0, 5.0, limit=200)
    val = adaptive_simpson(f, 0.0, 5.0, tol=1e-12)
    assert val == pytest.approx(ref, abs=1e-9)


def test_narrow_feature_resolved_with_seed_points():
    # a spike of width 1e-3 that plain panels would step over
    f = lambda x: np.exp(-((x / 1e-3) ** 2))
    ref = 1e-3 * np.sqrt(np.pi)
    val = adaptive_simpson(f, -5.0, 5.0, tol=1e-13,
                           seed_points=[-1e-3, 0.0, 1e-3])
    assert val == pytest.approx(ref, rel=1e-8)


def test_reversed_and_empty_bounds():
    f = lambda x: x
    assert adaptive_simpson(f, 2.0, 2.0) == 0.0
    assert adaptive_simpson(f, 3.0, 1.0) == pytest.approx(-4.0, abs=1e-12)


def test_kinked_integrand():
    f = lambda x: np.abs(x)
    val = adaptive_simpson(f, -1.0, 2.0, tol=1e-12, seed_points=[0.0])
    assert val == pytest.approx(2.5, abs=1e-12)


def test_infinite_bounds_rejected():
    with pytest.raises(ValueError):
        adaptive_simpson(lambda x: x, 0.0, np.inf)
