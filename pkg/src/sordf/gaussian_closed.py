"""Closed-form Gaussian rate evaluations.

Covers the three analytically solvable members of the jointly Gaussian
family:

* semantic-only rate (appearance budget unconstrained): estimate the
  state, then compress the estimate by reverse waterfilling;
* fully scalar source: a two-operand max of log ratios;
* the repeated-observation model x = 1_m s + z, whose surface splits
  into five regions. The same surface is recomputed by an explicit
  distortion-allocation (capped waterfilling) solver, which serves as an
  in-family cross-check of the region formulas.

All rates are in nats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import AlignedGaussianParams, GaussianSource, RDPoint, mmse_of

__all__ = [
    "AlignedRegion",
    "AllocationSolution",
    "reverse_waterfill",
    "gaussian_rd_rate",
    "gaussian_semantic_only_rate",
    "scalar_sordf",
    "aligned_eigenbasis",
    "aligned_sordf_closed_form",
    "aligned_sordf_allocation",
]


def reverse_waterfill(variances, budget: float):
    """Distortion allocation for independent Gaussian components.

    Returns (rate_nats, per_component_distortions, water_level) for the
    standard rule D_i = min(theta, var_i) with sum D_i = budget. Solved
    exactly segment by segment (no iteration): sort the variances and
    locate the water level on the piecewise-linear allocation curve.
    """
    var = np.asarray(variances, dtype=float)
    if np.any(var < -1e-12):
        raise ValueError("variances must be nonnegative")
    var = np.clip(var, 0.0, None)
    total = float(var.sum())
    if budget <= 0:
        raise ValueError("distortion budget must be positive")
    if budget >= total:
        return 0.0, var.copy(), float(var.max(initial=0.0))
    order = np.argsort(var)
    v = var[order]
    n = len(v)
    filled = 0.0  # sum of variances already below the water level
    for k in range(n):
        # water level theta in (v[k-1], v[k]] fills k components fully
        theta_cap = v[k]
        if filled + theta_cap * (n - k) >= budget:
            theta = (budget - filled) / (n - k)
            d = np.minimum(var, theta)
            rate = float(0.5 * np.sum(np.log(np.maximum(var, theta) / theta)))
            return rate, d, float(theta)
        filled += v[k]
    raise AssertionError("unreachable: budget < total was checked")


def gaussian_rd_rate(covariance, budget: float) -> float:
    """Squared-error rate of a Gaussian vector, by reverse waterfilling."""
    eigs = np.linalg.eigvalsh(np.asarray(covariance, dtype=float))
    rate, _, _ = reverse_waterfill(np.clip(eigs, 0.0, None), budget)
    return rate


def gaussian_semantic_only_rate(src: GaussianSource, d_s: float) -> RDPoint:
    """Rate with the appearance budget removed.

    Equals the rate-distortion function of the state estimate
    sigma_sx sigma_x^-1 x at budget d_s - mmse: estimating first and
    compressing the estimate is optimal when only the state matters.
    """
    mmse = mmse_of(src)
    excess = d_s - mmse
    if excess <= 0:
        return RDPoint(
            d_s, float("inf"), float("nan"), "nats", "infeasible",
            {"mmse": mmse, "iterations": 0, "residual": float("nan")},
        )
    # covariance of the estimate: sigma_sx sigma_x^-1 sigma_sx^T
    est_cov = src.sigma_sx @ np.linalg.solve(src.sigma_x, src.sigma_sx.T)
    eigs = np.clip(np.linalg.eigvalsh(est_cov), 0.0, None)
    rate, d, theta = reverse_waterfill(eigs, excess)
    status = "zero_rate" if rate == 0.0 else "exact"
    return RDPoint(
        d_s, float("inf"), rate, "nats", status,
        {"mmse": mmse, "water_level": theta, "iterations": 0, "residual": 0.0},
    )


def scalar_sordf(src: GaussianSource, d_s: float, d_a: float) -> RDPoint:
    """Closed form for the fully scalar source.

    R = 1/2 max{ (ln(sigma_x / d_a))+, (ln(sigma_sx^2 / (sigma_x (d_s - mmse))))+ }.
    Both reproduction goals point along the same (degenerate) direction,
    so whichever constraint is harder sets the rate alone.
    """
    if src.state_dim != 1 or src.obs_dim != 1:
        raise ValueError("scalar_sordf requires a 1x1 source")
    mmse = mmse_of(src)
    meta = {"mmse": mmse, "iterations": 0, "residual": 0.0}
    if d_a <= 0 or d_s <= mmse:
        return RDPoint(d_s, d_a, float("nan"), "nats", "infeasible",
                       {**meta, "residual": float("nan")})
    sx = float(src.sigma_x[0, 0])
    cross2 = float(src.sigma_sx[0, 0]) ** 2
    operand_a = max(np.log(sx / d_a), 0.0)
    if cross2 == 0.0:
        operand_s = 0.0
    else:
        operand_s = max(np.log(cross2 / (sx * (d_s - mmse))), 0.0)
    rate = 0.5 * max(operand_a, operand_s)
    status = "zero_rate" if rate == 0.0 else "exact"
    return RDPoint(d_s, d_a, rate, "nats", status, meta)


def aligned_eigenbasis(params: AlignedGaussianParams) -> np.ndarray:
    """Orthonormal basis that diagonalizes the observation covariance.

    Row 1 is the normalized all-ones direction (the estimator direction,
    eigenvalue m sigma_s2 + sigma_z2); row i >= 2 has i-1 leading entries
    1/sqrt(i(i-1)) followed by -sqrt((i-1)/i) and zeros (eigenvalue
    sigma_z2).
    """
    m = params.m
    B = np.zeros((m, m))
    B[0] = 1.0 / np.sqrt(m)
    for i in range(2, m + 1):
        B[i - 1, : i - 1] = 1.0 / np.sqrt(i * (i - 1))
        B[i - 1, i - 1] = -np.sqrt((i - 1) / i)
    return B


class AlignedRegion(enum.Enum):
    """The five closed-form cases of the aligned surface, in listed order."""

    TRADEOFF_BOTH = "tradeoff_both"
    APPEARANCE_DOMINATED = "appearance_dominated"
    SEMANTIC_ONLY = "semantic_only"
    APPEARANCE_ONLY = "appearance_only"
    ZERO_RATE = "zero_rate"


def aligned_sordf_closed_form(
    params: AlignedGaussianParams, d_s: float, d_a: float
) -> tuple[RDPoint, AlignedRegion | None]:
    """Five-region closed form for x = 1_m s + z.

    Writing ds_x = alpha^2 (d_s - mmse) for the semantic budget mapped
    into observation coordinates, p1 = m sigma_s2 + sigma_z2 and
    z = sigma_z2, the regions in evaluation order are:

    1. m ds_x <= d_a <= ds_x + (m-1) z: both constraints active,
       R = 1/2 ln(p1/ds_x) + (m-1)/2 ln((m-1) z / (d_a - ds_x));
    2. d_a < m z and ds_x >= d_a/m: appearance budget split equally,
       R = 1/2 ln(m p1 / d_a) + (m-1)/2 ln(m z / d_a);
    3. ds_x < p1 and d_a > ds_x + (m-1) z: semantic constraint alone,
       R = 1/2 ln(p1/ds_x);
    4. m z <= d_a < m (sigma_s2 + z) and ds_x >= d_a - (m-1) z:
       appearance constraint alone, R = 1/2 ln(p1 / (d_a - (m-1) z));
    5. d_a >= m (sigma_s2 + z) and ds_x >= p1: R = 0.

    Boundaries between regions agree; the first matching predicate
    labels the point. Returns (point, region), with region None when the
    budgets are infeasible.
    """
    m = params.m
    z = params.sigma_z2
    p1 = params.top_eigenvalue
    mmse = params.mmse
    meta = {"mmse": mmse, "alpha": params.alpha, "iterations": 0, "residual": 0.0}
    infeasible = RDPoint(d_s, d_a, float("nan"), "nats", "infeasible",
                         {**meta, "residual": float("nan")})
    if d_a <= 0 or d_s < mmse:
        return infeasible, None
    ds_x = params.alpha**2 * (d_s - mmse)
    # predicates padded by a relative epsilon so rounded boundary points
    # (exactly on two region edges at once) cannot fall between regions
    tol = 1e-12 * max(1.0, p1, d_a, ds_x)

    region: AlignedRegion | None = None
    rate = None
    if ds_x > 0 and m * ds_x <= d_a + tol and d_a <= ds_x + (m - 1) * z + tol:
        region = AlignedRegion.TRADEOFF_BOTH
        rate = 0.5 * np.log(p1 / ds_x)
        if m > 1:
            rate += 0.5 * (m - 1) * np.log(
                (m - 1) * z / max(d_a - ds_x, tol)
            )
    elif d_a < m * z + tol and ds_x >= d_a / m - tol:
        region = AlignedRegion.APPEARANCE_DOMINATED
        rate = 0.5 * np.log(m * p1 / d_a) + 0.5 * (m - 1) * np.log(m * z / d_a)
    elif ds_x > 0 and ds_x < p1 + tol and d_a > ds_x + (m - 1) * z - tol:
        region = AlignedRegion.SEMANTIC_ONLY
        rate = 0.5 * np.log(p1 / ds_x)
    elif (m * z - tol <= d_a < m * (params.sigma_s2 + z) + tol
          and ds_x >= d_a - (m - 1) * z - tol):
        region = AlignedRegion.APPEARANCE_ONLY
        rate = 0.5 * np.log(p1 / (d_a - (m - 1) * z))
    elif d_a >= m * (params.sigma_s2 + z) - tol and ds_x >= p1 - tol:
        region = AlignedRegion.ZERO_RATE
        rate = 0.0

    if region is None:
        # only reachable when d_s == mmse with a binding semantic budget
        return infeasible, None
    # boundary formulas agree exactly in real arithmetic; float dust below
    # 1e-12 nats is genuinely zero rate
    rate = float(rate) if rate > 1e-12 else 0.0
    status = "zero_rate" if rate == 0.0 else "exact"
    meta["region"] = region.value
    return RDPoint(d_s, d_a, rate, "nats", status, meta), region


@dataclass(frozen=True)
class AllocationSolution:
    """Capped-waterfilling solution behind the aligned surface.

    component_distortions D_1..D_m allocate the appearance budget across
    the decorrelated observation components; D_1 additionally respects
    the semantic cap alpha^2 (d_s - mmse). achieved_d_s folds D_1 back
    into state coordinates (mmse + D_1 / alpha^2).
    """

    component_distortions: np.ndarray
    achieved_d_s: float
    achieved_d_a: float
    rate: float  # nats
    water_level: float


def aligned_sordf_allocation(
    params: AlignedGaussianParams,
    d_s: float,
    d_a: float,
    sum_tol: float = 1e-12,
) -> AllocationSolution:
    """Independent recomputation of the aligned surface.

    Minimizes 1/2 (ln(p1/D_1))+ + sum_{i>=2} 1/2 (ln(z/D_i))+ subject to
    D_1 <= alpha^2 (d_s - mmse) and sum D_i <= d_a. Components 2..m share
    a common water level; D_1 takes the smaller of its cap and the water
    level, saturating at its component power p1. The water level is
    bisected until the allocation sum matches the effective appearance
    budget to within ``sum_tol``.
    """
    m = params.m
    z = params.sigma_z2
    p1 = params.top_eigenvalue
    mmse = params.mmse
    cap = params.alpha**2 * (d_s - mmse)
    if d_a <= 0 or cap <= 0:
        raise ValueError(
            f"infeasible budgets: need d_s > mmse ({mmse!r}) and d_a > 0, "
            f"got d_s={d_s!r}, d_a={d_a!r}"
        )

    def allocation(theta: float) -> np.ndarray:
        d = np.full(m, min(theta, z))
        d[0] = min(theta, cap, p1)
        return d

    full = allocation(np.inf)
    if full.sum() <= d_a:
        d = full
        theta = float(max(z, min(cap, p1)))
    else:
        lo, hi = 0.0, max(p1, z)
        for _ in range(200):
            theta = 0.5 * (lo + hi)
            s = allocation(theta).sum()
            if abs(s - d_a) <= sum_tol:
                break
            if s < d_a:
                lo = theta
            else:
                hi = theta
        d = allocation(theta)
    with np.errstate(divide="ignore"):
        powers = np.full(m, z)
        powers[0] = p1
        rate = float(0.5 * np.sum(np.maximum(np.log(powers / d), 0.0)))
    return AllocationSolution(
        component_distortions=d,
        achieved_d_s=mmse + d[0] / params.alpha**2,
        achieved_d_a=float(d.sum()),
        rate=rate,
        water_level=float(theta),
    )
