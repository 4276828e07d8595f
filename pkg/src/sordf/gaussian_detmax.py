"""Barrier solver for the general jointly Gaussian surface.

For budgets (d_s, d_a) the rate is

    R = min 1/2 ln(det sigma_x / det Delta)

over error covariances Delta in the feasible set

    A = { 0 <= Delta <= sigma_x,
          tr(M Delta M^T) <= d_s - mmse,
          tr(Delta) <= d_a },        M = sigma_sx sigma_x^-1.

``detmax_sordf`` maximizes ln det Delta with a log-det barrier
path-following method: damped Newton steps on

    f_t(Delta) = -t ln det Delta - ln det(sigma_x - Delta)
                 - ln(d_a - tr Delta) - ln(d_s - mmse - tr(M Delta M^T))

with the schedule t <- mu t until (m + n_scalar)/t clears the gap
tolerance. The matrix variable is vectorized on its upper triangle; the
Hessian is assembled from Kronecker products through a cached
duplication matrix. ``achieving_reproduction`` rebuilds the optimal
test channel's covariance algebra from Delta* and must reproduce the
solver's rate and distortions, which certifies the equality case of the
Gaussian maximum-entropy bound for every converged solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .model import GaussianSource, mmse_of

__all__ = [
    "DetMaxConfig",
    "FeasibleSetSpec",
    "DetMaxSolution",
    "detmax_sordf",
    "achieving_reproduction",
]

RATE_WARNING_NATS = 50.0


@dataclass(frozen=True)
class DetMaxConfig:
    gap_tol: float = 1e-9  # stop when barrier-parameter count / t < gap_tol
    mu: float = 10.0  # geometric growth of t between centering stages
    t0: float = 1.0
    max_newton_per_center: int = 60
    center_tol: float = 1e-10  # Newton decrement / normalized gradient tolerance
    armijo: float = 0.25


@dataclass(frozen=True)
class FeasibleSetSpec:
    """The constraint data of one solve, derived from a source and budgets."""

    sigma_x: np.ndarray
    M: np.ndarray  # sigma_sx sigma_x^-1
    budget_s: float  # d_s - mmse, may be +inf
    budget_a: float  # d_a, may be +inf

    @staticmethod
    def from_source(src: GaussianSource, d_s: float, d_a: float) -> "FeasibleSetSpec":
        return FeasibleSetSpec(
            sigma_x=src.sigma_x,
            M=src.estimator_matrix(),
            budget_s=d_s - mmse_of(src),
            budget_a=d_a,
        )


@dataclass(frozen=True)
class DetMaxSolution:
    delta_star: np.ndarray | None
    rate: float  # nats; NaN when infeasible
    status: str  # converged | zero_rate | infeasible
    achieved_tr_delta: float
    achieved_tr_mdm: float  # tr(M Delta* M^T), semantic distortion above mmse
    kkt_residual: float
    barrier_path: list[tuple[float, float]] = field(default_factory=list)
    newton_iterations: int = 0
    rate_warning: bool = False


@lru_cache(maxsize=32)
def _duplication(m: int) -> np.ndarray:
    """Maps the stacked upper triangle of a symmetric matrix to its vec."""
    pairs = [(i, j) for j in range(m) for i in range(j + 1)]
    D = np.zeros((m * m, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        D[i * m + j, k] = 1.0
        D[j * m + i, k] = 1.0
        if i == j:
            D[i * m + j, k] = 1.0
    return D


def _chol_logdet(mat: np.ndarray):
    """(cholesky factor, log det) or (None, None) if not positive definite."""
    try:
        L = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None, None
    return L, 2.0 * float(np.log(np.diag(L)).sum())


def detmax_sordf(
    src: GaussianSource,
    d_s: float,
    d_a: float,
    cfg: DetMaxConfig | None = None,
) -> DetMaxSolution:
    """Rate of the general jointly Gaussian source at budgets (d_s, d_a).

    Either budget may be passed as ``inf`` to drop its constraint, which
    recovers the two single-constraint surfaces as limits.
    """
    cfg = cfg or DetMaxConfig()
    m = src.obs_dim
    sigma_x = src.sigma_x
    M = src.estimator_matrix()
    mmse = mmse_of(src)
    budget_s = d_s - mmse
    budget_a = float(d_a)
    tr_sx = float(np.trace(sigma_x))
    G = M.T @ M
    tr_mxm = float(np.trace(M @ sigma_x @ M.T))

    infeasible = DetMaxSolution(
        delta_star=None, rate=float("nan"), status="infeasible",
        achieved_tr_delta=float("nan"), achieved_tr_mdm=float("nan"),
        kkt_residual=float("nan"),
    )
    if budget_a <= 0 or np.isnan(budget_s):
        return infeasible
    # the semantic constraint is vacuous when the estimator is trivial
    has_s = np.isfinite(budget_s) and tr_mxm > 1e-14
    has_a = np.isfinite(budget_a)
    if np.isfinite(budget_s) and budget_s <= 0 and tr_mxm > 1e-14:
        return infeasible
    if budget_s < 0:
        return infeasible

    _, logdet_sx = _chol_logdet(sigma_x)
    if logdet_sx is None:
        raise ValueError("sigma_x must be positive definite")

    # Delta = sigma_x is optimal whenever it is feasible
    if (not has_a or budget_a >= tr_sx) and (not has_s or budget_s >= tr_mxm):
        return DetMaxSolution(
            delta_star=sigma_x.copy(), rate=0.0, status="zero_rate",
            achieved_tr_delta=tr_sx, achieved_tr_mdm=tr_mxm,
            kkt_residual=0.0,
        )

    # strictly feasible start along sigma_x
    eps = 0.5 * min(
        1.0,
        budget_a / (2.0 * tr_sx) if has_a else 1.0,
        budget_s / (2.0 * tr_mxm) if has_s else 1.0,
    )
    X = eps * sigma_x

    D = _duplication(m)
    nv = D.shape[1]
    n_barrier = m + int(has_a) + int(has_s)
    eye = np.eye(m)
    vec_I = eye.reshape(-1)
    vec_G = G.reshape(-1)

    def barrier_value(Xc, t):
        Lx, ld_x = _chol_logdet(Xc)
        if Lx is None:
            return None
        Ls, ld_s = _chol_logdet(sigma_x - Xc)
        if Ls is None:
            return None
        val = -t * ld_x - ld_s
        if has_a:
            slack = budget_a - np.trace(Xc)
            if slack <= 0:
                return None
            val -= np.log(slack)
        if has_s:
            slack = budget_s - float(np.sum(G * Xc))
            if slack <= 0:
                return None
            val -= np.log(slack)
        return float(val)

    t = cfg.t0
    path: list[tuple[float, float]] = []
    total_newton = 0
    kkt = float("nan")
    while True:
        for _ in range(cfg.max_newton_per_center):
            Xi = np.linalg.inv(X)
            S = sigma_x - X
            Si = np.linalg.inv(S)
            grad_mat = -t * Xi + Si
            H = t * np.kron(Xi, Xi) + np.kron(Si, Si)
            if has_a:
                sl_a = budget_a - float(np.trace(X))
                grad_mat = grad_mat + eye / sl_a
                H = H + np.outer(vec_I, vec_I) / sl_a**2
            if has_s:
                sl_s = budget_s - float(np.sum(G * X))
                grad_mat = grad_mat + G / sl_s
                H = H + np.outer(vec_G, vec_G) / sl_s**2
            g = D.T @ grad_mat.reshape(-1)
            Hs = D.T @ H @ D
            step = None
            ridge = 0.0
            for _attempt in range(6):
                try:
                    step = np.linalg.solve(Hs + ridge * np.eye(nv), -g)
                    break
                except np.linalg.LinAlgError:
                    ridge = max(ridge * 100.0, 1e-10 * np.abs(Hs).max())
            if step is None:
                raise RuntimeError(
                    "Newton system unsolvable in the det-max barrier; "
                    f"barrier path so far: {path!r}"
                )
            decrement2 = float(-g @ step)
            grad_scale = float(np.linalg.norm(g)) / max(t, 1.0)
            if min(decrement2 / 2.0, grad_scale) < cfg.center_tol:
                break
            V = (D @ step).reshape(m, m)
            f0 = barrier_value(X, t)
            alpha = 1.0
            accepted = False
            for _bt in range(60):
                fn = barrier_value(X + alpha * V, t)
                if fn is not None and fn <= f0 - cfg.armijo * alpha * decrement2:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break  # stalled by conditioning; the gap bound still holds
            X = X + alpha * V
            total_newton += 1
        _, ld_x = _chol_logdet(X)
        path.append((t, 0.5 * (logdet_sx - ld_x)))
        # stationarity residual of the original program at the current center
        lam_parts = np.linalg.inv(sigma_x - X) / t
        resid = np.linalg.inv(X) - lam_parts
        if has_a:
            resid = resid - eye / (t * (budget_a - np.trace(X)))
        if has_s:
            resid = resid - G / (t * (budget_s - float(np.sum(G * X))))
        kkt = float(np.linalg.norm(resid))
        if n_barrier / t < cfg.gap_tol:
            break
        t *= cfg.mu

    _, ld_x = _chol_logdet(X)
    rate = max(0.5 * (logdet_sx - ld_x), 0.0)
    return DetMaxSolution(
        delta_star=X,
        rate=rate,
        status="converged",
        achieved_tr_delta=float(np.trace(X)),
        achieved_tr_mdm=float(np.sum(G * X)),
        kkt_residual=kkt,
        barrier_path=path,
        newton_iterations=total_newton,
        rate_warning=rate > RATE_WARNING_NATS,
    )


def achieving_reproduction(
    src: GaussianSource, delta_star: np.ndarray, tol: float = 1e-8
) -> tuple[float, float, float]:
    """Covariance algebra of the test channel that attains a given Delta*.

    The channel draws x_hat ~ N(0, sigma_x - Delta*) independent of the
    error, and sets s_hat = sigma_sx sigma_x^-1 x_hat. Returns the
    triple (semantic distortion above mmse, appearance distortion,
    mutual information in nats) computed from those covariances:
    tr(M Delta* M^T), tr(Delta*), and the entropy difference
    1/2 [ln det(cov(x_hat) + cov(error)) - ln det(cov(error))].
    A converged solver output must match all three to 1e-8.
    """
    delta = np.asarray(delta_star, dtype=float)
    m = src.obs_dim
    if delta.shape != (m, m) or not np.allclose(delta, delta.T, atol=1e-9):
        raise ValueError("delta_star must be a symmetric m x m matrix")
    scale = max(float(np.linalg.eigvalsh(src.sigma_x).max()), 1.0)
    if np.linalg.eigvalsh(delta).min() < -tol * scale:
        raise ValueError("delta_star must be positive semidefinite")
    gap = src.sigma_x - delta
    if np.linalg.eigvalsh(gap).min() < -tol * scale:
        raise ValueError("delta_star must satisfy delta_star <= sigma_x")

    M = src.estimator_matrix()
    distortion_s = float(np.trace(M @ delta @ M.T))
    distortion_a = float(np.trace(delta))
    sign, ld_total = np.linalg.slogdet(gap + delta)
    _, ld_err = np.linalg.slogdet(delta)
    rate = max(0.5 * (ld_total - ld_err), 0.0)
    return distortion_s, distortion_a, rate
