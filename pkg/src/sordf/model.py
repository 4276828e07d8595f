"""Source models, distortion metrics, and the reduced semantic distortion.

A semantic source is a pair (s, x): an intrinsic state s that is never
observed directly, and an extrinsic observation x that is what actually
gets encoded. Fidelity is measured twice, once against the state
(semantic distortion) and once against the observation (appearance
distortion). Because the encoder only sees x, the semantic metric
d_s(s, s_hat) is replaced by its posterior average

    d_hat_s(x, s_hat) = (1/p(x)) * sum_s p(s, x) d_s(s, s_hat),

which turns the hidden-state problem into an ordinary two-constraint
rate-distortion problem on x. Everything downstream (the discrete
solver, the Gaussian closed forms, the classification case) consumes the
types defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

PMF_TOL = 1e-12
PSD_TOL = 1e-10

Unit = str  # "nats" or "bits"

_LN2 = float(np.log(2.0))


def _as_matrix(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class DiscreteSemanticSource:
    """Finite-alphabet source given by a joint pmf p(s, x).

    Rows index the state alphabet, columns the observation alphabet.
    Columns with zero marginal probability are rejected: the posterior
    p(s | x) is undefined there, and dropping them silently would shift
    the observation indexing.
    """

    joint_pmf: np.ndarray

    def __post_init__(self):
        pmf = _as_matrix(self.joint_pmf, "joint_pmf")
        if np.any(pmf < 0):
            raise ValueError("joint_pmf entries must be nonnegative")
        total = float(pmf.sum())
        if abs(total - 1.0) > PMF_TOL:
            raise ValueError(f"joint_pmf must sum to 1 (got {total!r})")
        if np.any(pmf.sum(axis=0) <= 0.0):
            raise ValueError(
                "every observation column must have positive marginal p(x)"
            )
        object.__setattr__(self, "joint_pmf", pmf)

    @property
    def state_alphabet_size(self) -> int:
        return self.joint_pmf.shape[0]

    @property
    def obs_alphabet_size(self) -> int:
        return self.joint_pmf.shape[1]

    @property
    def obs_marginal(self) -> np.ndarray:
        """p(x), guaranteed strictly positive."""
        return self.joint_pmf.sum(axis=0)


@dataclass(frozen=True)
class DistortionTable:
    """Per-letter distortion d(source letter, reproduction letter) >= 0."""

    values: np.ndarray

    def __post_init__(self):
        vals = _as_matrix(self.values, "distortion values")
        if np.any(vals < 0):
            raise ValueError("distortion values must be nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def source_alphabet_size(self) -> int:
        return self.values.shape[0]

    @property
    def reproduction_alphabet_size(self) -> int:
        return self.values.shape[1]

    @staticmethod
    def hamming(n: int) -> "DistortionTable":
        return DistortionTable(1.0 - np.eye(n))


@dataclass(frozen=True)
class GaussianSource:
    """Zero-mean jointly Gaussian pair with block covariance.

    sigma_s is the l x l state covariance, sigma_x the m x m observation
    covariance (required positive definite), sigma_sx the l x m cross
    block. The full (l+m) x (l+m) covariance must be positive
    semidefinite up to a relative eigenvalue tolerance, since
    user-entered matrices carry rounding.
    """

    sigma_s: np.ndarray
    sigma_sx: np.ndarray
    sigma_x: np.ndarray

    def __post_init__(self):
        ss = _as_matrix(self.sigma_s, "sigma_s")
        sx = _as_matrix(self.sigma_sx, "sigma_sx")
        xx = _as_matrix(self.sigma_x, "sigma_x")
        l = ss.shape[0]
        m = xx.shape[0]
        if ss.shape != (l, l) or xx.shape != (m, m) or sx.shape != (l, m):
            raise ValueError(
                f"inconsistent covariance block shapes: sigma_s {ss.shape}, "
                f"sigma_sx {sx.shape}, sigma_x {xx.shape}"
            )
        for name, mat in (("sigma_s", ss), ("sigma_x", xx)):
            if not np.allclose(mat, mat.T, atol=1e-10, rtol=0):
                raise ValueError(f"{name} must be symmetric")
        scale = max(float(np.linalg.eigvalsh(xx).max(initial=0.0)), 1.0)
        if np.linalg.eigvalsh(xx).min() <= PSD_TOL * scale:
            raise ValueError("sigma_x must be positive definite")
        if l and np.linalg.eigvalsh(ss).min() < -PSD_TOL * max(
            float(np.linalg.eigvalsh(ss).max(initial=0.0)), 1.0
        ):
            raise ValueError("sigma_s must be positive semidefinite")
        full = np.block([[ss, sx], [sx.T, xx]])
        eigs = np.linalg.eigvalsh(full)
        if eigs.min() < -PSD_TOL * max(float(eigs.max(initial=0.0)), 1.0):
            raise ValueError("joint covariance is not positive semidefinite")
        object.__setattr__(self, "sigma_s", ss)
        object.__setattr__(self, "sigma_sx", sx)
        object.__setattr__(self, "sigma_x", xx)

    @property
    def state_dim(self) -> int:
        return self.sigma_s.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.sigma_x.shape[0]

    def estimator_matrix(self) -> np.ndarray:
        """M = sigma_sx sigma_x^-1, the linear MMSE estimator of s from x."""
        return np.linalg.solve(self.sigma_x.T, self.sigma_sx.T).T

    @staticmethod
    def from_linear_model(H, sigma_s, sigma_w) -> "GaussianSource":
        """Source for x = H s + w with independent state s and noise w."""
        H = _as_matrix(H, "H")
        sigma_s = _as_matrix(sigma_s, "sigma_s")
        sigma_w = _as_matrix(sigma_w, "sigma_w")
        sigma_x = H @ sigma_s @ H.T + sigma_w
        sigma_sx = sigma_s @ H.T
        return GaussianSource(sigma_s, sigma_sx, sigma_x)


@dataclass(frozen=True)
class AlignedGaussianParams:
    """The repeated-observation model x = 1_m s + z.

    s ~ N(0, sigma_s2) scalar, z ~ N(0, sigma_z2 I_m). The estimator
    direction coincides with the top eigenvector of sigma_x, which is
    what makes the closed-form surface possible.
    """

    m: int
    sigma_s2: float
    sigma_z2: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be an integer >= 1")
        object.__setattr__(self, "m", int(self.m))
        if not (self.sigma_s2 > 0 and np.isfinite(self.sigma_s2)):
            raise ValueError("sigma_s2 must be positive and finite")
        if not (self.sigma_z2 > 0 and np.isfinite(self.sigma_z2)):
            raise ValueError("sigma_z2 must be positive and finite")

    @property
    def mmse(self) -> float:
        """sigma_s2 * sigma_z2 / (m sigma_s2 + sigma_z2), in (0, sigma_s2)."""
        return self.sigma_s2 * self.sigma_z2 / (self.m * self.sigma_s2 + self.sigma_z2)

    @property
    def alpha(self) -> float:
        """(m sigma_s2 + sigma_z2) / (sqrt(m) sigma_s2)."""
        return (self.m * self.sigma_s2 + self.sigma_z2) / (
            np.sqrt(self.m) * self.sigma_s2
        )

    @property
    def top_eigenvalue(self) -> float:
        """m sigma_s2 + sigma_z2, the observation power along 1_m."""
        return self.m * self.sigma_s2 + self.sigma_z2

    def to_gaussian(self) -> GaussianSource:
        ones = np.ones((self.m, 1))
        return GaussianSource(
            sigma_s=np.array([[self.sigma_s2]]),
            sigma_sx=self.sigma_s2 * ones.T,
            sigma_x=self.sigma_s2 * (ones @ ones.T) + self.sigma_z2 * np.eye(self.m),
        )


@dataclass(frozen=True)
class ClassificationParams:
    """Binary-state Gaussian-mixture source.

    s is uniform on {0, 1}; x ~ N(+A, sigma2) under s = 0 and
    N(-A, sigma2) under s = 1. Semantic distortion is Hamming on the
    state, appearance distortion squared error on x.
    """

    A: float
    sigma2: float

    def __post_init__(self):
        if not (self.A > 0 and np.isfinite(self.A)):
            raise ValueError("A must be positive and finite")
        if not (self.sigma2 > 0 and np.isfinite(self.sigma2)):
            raise ValueError("sigma2 must be positive and finite")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def bayes_error(self) -> float:
        """Q(A/sigma), the minimal achievable semantic distortion."""
        from scipy.special import erfc

        return float(0.5 * erfc((self.A / self.sigma) / np.sqrt(2.0)))


@dataclass(frozen=True)
class RDPoint:
    """One evaluated point of the rate-distortion surface.

    status semantics:
      exact      closed-form evaluation
      converged  iterative solver met its tolerance
      zero_rate  both constraints satisfiable at rate 0
      infeasible rate undefined (semantic target below its floor, or
                 nonpositive appearance target); rate is NaN
    """

    d_s: float
    d_a: float
    rate: float
    unit: Unit = "nats"
    status: str = "exact"
    solver_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.unit not in ("nats", "bits"):
            raise ValueError(f"unknown unit {self.unit!r}")
        if self.status not in ("exact", "converged", "infeasible", "zero_rate"):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "infeasible":
            if not np.isnan(self.rate):
                raise ValueError("infeasible points must carry rate NaN")
        elif not (self.rate >= -1e-12):
            raise ValueError(f"rate must be nonnegative, got {self.rate!r}")

    def in_unit(self, unit: Unit) -> "RDPoint":
        if unit == self.unit:
            return self
        if unit == "bits":
            rate = self.rate / _LN2
        elif unit == "nats":
            rate = self.rate * _LN2
        else:
            raise ValueError(f"unknown unit {unit!r}")
        return RDPoint(self.d_s, self.d_a, rate, unit, self.status, self.solver_meta)


@dataclass(frozen=True)
class RDSurface:
    """Rate evaluations over a rectangular (d_s, d_a) grid.

    points are ordered with d_s as the slow axis and d_a as the fast
    axis, matching the CSV emission order.
    """

    ds_axis: np.ndarray
    da_axis: np.ndarray
    points: list[RDPoint]

    def __post_init__(self):
        object.__setattr__(self, "ds_axis", np.asarray(self.ds_axis, dtype=float))
        object.__setattr__(self, "da_axis", np.asarray(self.da_axis, dtype=float))
        expected = len(self.ds_axis) * len(self.da_axis)
        if len(self.points) != expected:
            raise ValueError(
                f"expected {expected} points for the grid, got {len(self.points)}"
            )

    def rate_grid(self) -> np.ndarray:
        """Rates as a (len(ds_axis), len(da_axis)) array, NaN if infeasible."""
        grid = np.array([p.rate for p in self.points], dtype=float)
        return grid.reshape(len(self.ds_axis), len(self.da_axis))

    def monotonicity_violation(self, tol: float = 1e-9) -> float:
        """Largest increase of rate along growing d_s or d_a (0 if monotone).

        Infeasible points (NaN) are skipped; a finite rate following a NaN
        along an axis is not a violation.
        """
        grid = self.rate_grid()
        worst = 0.0
        for axis in (0, 1):
            diffs = np.diff(grid, axis=axis)
            finite = np.isfinite(diffs)
            if finite.any():
                worst = max(worst, float(diffs[finite].max(initial=0.0)))
        return worst if worst > tol else 0.0


def reduce_distortion(
    src: DiscreteSemanticSource, d_s: DistortionTable
) -> DistortionTable:
    """Posterior-average the semantic metric onto the observation alphabet.

    Returns the table d_hat_s(x, s_hat) = sum_s p(s | x) d_s(s, s_hat),
    rows indexed by x and columns by the state reproduction letter. The
    expected semantic distortion of any encoding of x is unchanged by
    this substitution, which is what licenses solving the two-constraint
    problem directly on x.
    """
    if d_s.source_alphabet_size != src.state_alphabet_size:
        raise ValueError(
            f"d_s has {d_s.source_alphabet_size} rows but the state alphabet "
            f"has {src.state_alphabet_size} letters"
        )
    p_x = src.obs_marginal
    reduced = (src.joint_pmf.T @ d_s.values) / p_x[:, None]
    return DistortionTable(reduced)


def verify_distortion_equivalence(
    src: DiscreteSemanticSource,
    d_s: DistortionTable,
    channel: np.ndarray,
) -> tuple[float, float]:
    """Expected distortion computed two ways across the chain s - x - s_hat.

    channel is the conditional pmf p(s_hat | x), one row per observation
    letter. Returns (expected_direct, expected_reduced): the first
    averages d_s(s, s_hat) under the full coupling p(s, x) p(s_hat | x),
    the second averages the reduced metric d_hat_s(x, s_hat) under
    p(x) p(s_hat | x). The two agree identically; the pair is exposed so
    callers can assert it.
    """
    channel = _as_matrix(channel, "channel")
    if channel.shape[0] != src.obs_alphabet_size:
        raise ValueError("channel must have one row per observation letter")
    row_sums = channel.sum(axis=1)
    if np.any(channel < -1e-15) or np.any(np.abs(row_sums - 1.0) > 1e-9):
        raise ValueError("channel rows must be probability vectors")

    # direct: sum_{s,x,shat} p(s,x) p(shat|x) d_s(s, shat)
    direct = float(np.einsum("sx,xr,sr->", src.joint_pmf, channel, d_s.values))
    reduced_table = reduce_distortion(src, d_s)
    p_x = src.obs_marginal
    reduced = float(np.einsum("x,xr,xr->", p_x, channel, reduced_table.values))
    return direct, reduced


def mmse_of(src: GaussianSource) -> float:
    """tr[sigma_s - sigma_sx sigma_x^-1 sigma_sx^T].

    The minimum mean-squared error of estimating the state from the
    observation, which is also the floor of the semantic distortion: no
    coding scheme can do better than the best estimator that sees x
    perfectly.
    """
    back = np.linalg.solve(src.sigma_x, src.sigma_sx.T)
    val = float(np.trace(src.sigma_s) - np.trace(src.sigma_sx @ back))
    return max(val, 0.0)
