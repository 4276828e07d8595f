"""Two-constraint rate-distortion for finite alphabets.

The rate R(D_s, D_a) is the minimum of I(x; s_hat, x_hat) over test
channels p(s_hat, x_hat | x) meeting a reduced-semantic and an
appearance distortion budget. Three routes are provided:

* ``ba_fixed_multipliers``: Blahut-Arimoto over the joint reproduction
  alphabet with the exponent -lambda_s d_hat_s - lambda_a d_a. Each
  multiplier pair lands on one point of the lower convex envelope.
* ``ba_target``: drives the achieved distortions to a requested target
  by bracketed bisection on each multiplier (a constraint that is slack
  at multiplier 0 stays pinned to 0).
* ``oracle_grid_search``: solver-independent verification for tiny
  alphabets. Enumerates test channels on a simplex lattice, walks the
  lattice locally at increasing resolution (the objective is convex in
  the channel, so local descent is global), then polishes with an SQP
  solve. Never touches the BA iteration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.special import xlogy

from .model import DiscreteSemanticSource, DistortionTable, RDPoint, reduce_distortion

__all__ = [
    "BAConfig",
    "BASolution",
    "ba_fixed_multipliers",
    "ba_target",
    "oracle_grid_search",
]


@dataclass(frozen=True)
class BAConfig:
    max_iters: int = 10000
    tolerance: float = 1e-9  # convergence threshold on per-iteration rate change
    target_tol: float = 1e-8  # absolute tolerance when bisecting to a distortion target
    bracket_limit: float = 1e12


@dataclass(frozen=True)
class BASolution:
    """One converged point of the parametric (multiplier-indexed) curve."""

    reproduction_joint: np.ndarray  # q(s_hat, x_hat)
    test_channel: np.ndarray  # p(s_hat, x_hat | x), shape (nx, n_shat, n_xhat)
    achieved_d_s: float
    achieved_d_a: float
    rate: float  # nats
    lambda_s: float
    lambda_a: float
    iterations: int
    converged: bool
    lagrangian_drift: float  # max uphill move of I + lam_s D_s + lam_a D_a


def _joint_costs(d_hat_s: DistortionTable, d_a: DistortionTable):
    """Per-(x, joint letter) cost matrices over the flattened alphabet.

    Joint letter k enumerates (s_hat, x_hat) with x_hat fastest, so
    k = s_hat * n_xhat + x_hat.
    """
    nx = d_hat_s.values.shape[0]
    if d_a.values.shape[0] != nx:
        raise ValueError("d_hat_s and d_a must share the observation alphabet")
    n_shat = d_hat_s.reproduction_alphabet_size
    n_xhat = d_a.reproduction_alphabet_size
    cost_s = np.repeat(d_hat_s.values, n_xhat, axis=1)
    cost_a = np.tile(d_a.values, (1, n_shat))
    return cost_s, cost_a, n_shat, n_xhat


def _ba_iterate(p_x, cost_s, cost_a, lam_s, lam_a, cfg, channel=None):
    """Core alternating update; returns (rate, D_s, D_a, channel, iters, conv, drift).

    Runs in log space: the row update is the softmax of log q - cost, so
    arbitrarily large multipliers (reached while growing bisection
    brackets) cannot underflow the row normalizer.
    """
    nx, K = cost_s.shape
    cost = lam_s * cost_s + lam_a * cost_a
    cost = cost - cost.min(axis=1, keepdims=True)
    if not np.all(np.isfinite(cost)):
        raise FloatingPointError("non-finite Blahut-Arimoto exponent")
    if channel is None:
        P = np.full((nx, K), 1.0 / K)
    else:
        # a strictly positive start keeps every letter revivable
        P = np.maximum(channel, 1e-12)
        P = P / P.sum(axis=1, keepdims=True)
    rate_prev = np.inf
    lagr_prev = np.inf
    drift = 0.0
    rate = 0.0
    iters = 0
    converged = False
    revivals = 0
    log_z = np.zeros(nx)
    with np.errstate(divide="ignore"):
        for iters in range(1, cfg.max_iters + 1):
            q = p_x @ P
            scores = np.log(q)[None, :] - cost  # -inf where a letter has died
            shift = scores.max(axis=1, keepdims=True)
            expd = np.exp(scores - shift)
            norm = expd.sum(axis=1, keepdims=True)
            P = expd / norm
            log_z = (shift + np.log(norm))[:, 0]
            # I(x; letters), using log(P/q) = -cost - log z rowwise
            rate = float(p_x @ (-(P * cost).sum(axis=1) - log_z))
            lagr = rate + float(
                p_x @ (P * (lam_s * cost_s + lam_a * cost_a)).sum(axis=1)
            )
            if lagr > lagr_prev:
                drift = max(drift, lagr - lagr_prev)
            lagr_prev = lagr
            if abs(rate - rate_prev) < cfg.tolerance:
                # support-optimality certificate: a fixed point is the global
                # minimum iff T_k = sum_x p(x) e^{-cost(x,k)} / Z_x <= 1 for
                # every letter; a violating (necessarily dead) letter is
                # reseeded and the iteration continues
                T = p_x @ np.exp(-cost - log_z[:, None])
                violating = T > 1.0 + 1e-10
                if violating.any() and revivals < 64:
                    revivals += 1
                    P[:, violating] = np.maximum(P[:, violating], 1e-10)
                    P = P / P.sum(axis=1, keepdims=True)
                    rate_prev = np.inf
                    lagr_prev = np.inf
                    continue
                converged = not violating.any()
                break
            rate_prev = rate
    d_s = float(p_x @ (P * cost_s).sum(axis=1))
    d_a = float(p_x @ (P * cost_a).sum(axis=1))
    return max(rate, 0.0), d_s, d_a, P, iters, converged, drift


def ba_fixed_multipliers(
    src: DiscreteSemanticSource,
    d_hat_s: DistortionTable,
    d_a: DistortionTable,
    lambda_s: float,
    lambda_a: float,
    cfg: BAConfig | None = None,
    channel_init: np.ndarray | None = None,
) -> BASolution:
    """Blahut-Arimoto at fixed multipliers over the joint reproduction alphabet.

    Alternates q(s_hat, x_hat) <- sum_x p(x) p(s_hat, x_hat | x) with the
    row softmax p(s_hat, x_hat | x) proportional to
    q * exp(-lambda_s d_hat_s - lambda_a d_a) until the rate change per
    iteration drops below the tolerance. The returned point lies on the
    lower convex envelope of the surface.
    """
    if not (lambda_s >= 0 and lambda_a >= 0):
        raise ValueError("multipliers must be nonnegative")
    if not (np.isfinite(lambda_s) and np.isfinite(lambda_a)):
        raise ValueError("multipliers must be finite")
    cfg = cfg or BAConfig()
    cost_s, cost_a, n_shat, n_xhat = _joint_costs(d_hat_s, d_a)
    if cost_s.shape[0] != src.obs_alphabet_size:
        raise ValueError("distortion tables must have one row per observation letter")
    p_x = src.obs_marginal
    init = None
    if channel_init is not None:
        init = np.asarray(channel_init, dtype=float).reshape(len(p_x), -1)
    rate, ds, da, P, iters, conv, drift = _ba_iterate(
        p_x, cost_s, cost_a, lambda_s, lambda_a, cfg, init
    )
    q = p_x @ P
    return BASolution(
        reproduction_joint=q.reshape(n_shat, n_xhat),
        test_channel=P.reshape(len(p_x), n_shat, n_xhat),
        achieved_d_s=ds,
        achieved_d_a=da,
        rate=rate,
        lambda_s=lambda_s,
        lambda_a=lambda_a,
        iterations=iters,
        converged=conv,
        lagrangian_drift=drift,
    )


def _distortion_floors(p_x, cost_s, cost_a):
    """Minimum achievable distortions (best letter chosen per observation)."""
    return float(p_x @ cost_s.min(axis=1)), float(p_x @ cost_a.min(axis=1))


def _zero_rate_feasible(p_x, cost_s, cost_a, tds, tda, tol=1e-12):
    """Whether a constant (mixture) reproduction meets both budgets.

    Rate 0 forces the channel to ignore x, so the achievable pairs are
    the convex hull of the per-letter average costs; minimizing the
    worse violation of two linear functionals over a simplex needs at
    most two support letters, hence the pair scan.
    """
    cs = p_x @ cost_s
    ca = p_x @ cost_a
    if np.any((cs <= tds + tol) & (ca <= tda + tol)):
        return True
    K = len(cs)
    for i in range(K):
        for j in range(i + 1, K):
            lo, hi = 0.0, 1.0
            for vi, vj, tgt in ((cs[i], cs[j], tds), (ca[i], ca[j], tda)):
                den = vi - vj
                if abs(den) < 1e-15:
                    if vj > tgt + tol:
                        lo, hi = 1.0, -1.0
                else:
                    bound = (tgt + tol - vj) / den
                    if den > 0:
                        hi = min(hi, bound)
                    else:
                        lo = max(lo, bound)
            if lo <= hi:
                return True
    return False


def ba_target(
    src: DiscreteSemanticSource,
    d_s: DistortionTable,
    d_a: DistortionTable,
    target: tuple[float, float],
    cfg: BAConfig | None = None,
) -> RDPoint:
    """Evaluate the surface at a distortion target via multiplier search.

    The semantic table is reduced onto the observation alphabet first.
    Each multiplier is solved by bracketed bisection against its own
    constraint while the other is held fixed (the achieved distortion is
    monotone in its multiplier); the two solves alternate until both
    constraints are met. A constraint already slack at multiplier 0 is
    pinned there. Blahut-Arimoto runs are warm-started across the search.
    """
    cfg = cfg or BAConfig()
    target_ds, target_da = float(target[0]), float(target[1])
    d_hat_s = reduce_distortion(src, d_s)
    cost_s, cost_a, n_shat, n_xhat = _joint_costs(d_hat_s, d_a)
    p_x = src.obs_marginal
    nx = len(p_x)

    floor_s, floor_a = _distortion_floors(p_x, cost_s, cost_a)
    if target_ds < floor_s - 1e-12 or target_da < floor_a - 1e-12:
        return RDPoint(
            target_ds,
            target_da,
            float("nan"),
            "nats",
            "infeasible",
            {"floor_d_s": floor_s, "floor_d_a": floor_a, "iterations": 0,
             "residual": float("nan")},
        )
    if _zero_rate_feasible(p_x, cost_s, cost_a, target_ds, target_da):
        return RDPoint(
            target_ds, target_da, 0.0, "nats", "zero_rate",
            {"iterations": 0, "residual": 0.0},
        )

    state = {"P": None, "evals": 0, "iters": 0, "best": None, "conv": True}

    def run(lam_s, lam_a):
        rate, ds, da, P, iters, conv, _ = _ba_iterate(
            p_x, cost_s, cost_a, lam_s, lam_a, cfg, state["P"]
        )
        state["P"] = P
        state["evals"] += 1
        state["iters"] += iters
        state["conv"] = conv
        # every envelope point meeting the budgets witnesses an upper bound
        if ds <= target_ds + cfg.target_tol and da <= target_da + cfg.target_tol:
            if state["best"] is None or rate < state["best"][0]:
                state["best"] = (rate, ds, da, lam_s, lam_a, conv)
        return rate, ds, da, conv

    def bisect_to_target(evaluate, pick_index, tgt, label):
        """Drive one coordinate of evaluate(lam) to tgt by bisection.

        ``evaluate(lam)`` returns (lam, rate, ds, da). When the achieved
        distortion jumps across the target inside a vanishing bracket
        (the surface has a linear segment there and no multiplier lands
        on it), the two bracket endpoints are timeshared: their convex
        combination is achievable and lies on the same tangent line, so
        the interpolated point is optimal at the target.
        """
        pick = lambda p: p[pick_index]
        point = evaluate(0.0)
        if pick(point) <= tgt + cfg.target_tol:
            return point
        lo, lo_point = 0.0, point
        hi = 1.0
        hi_point = evaluate(hi)
        # targets sitting exactly on the distortion floor are reachable only
        # in the limit, so bracket growth must tolerate target_tol jitter
        while pick(hi_point) > tgt + cfg.target_tol:
            lo, lo_point = hi, hi_point
            hi *= 2.0
            if hi > cfg.bracket_limit:
                raise RuntimeError(
                    f"multiplier bracket exceeded {cfg.bracket_limit:g} while "
                    f"driving {label} to {tgt!r}; the target is likely at the "
                    "distortion floor"
                )
            hi_point = evaluate(hi)
        if abs(pick(hi_point) - tgt) <= cfg.target_tol:
            return hi_point
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            mid_point = evaluate(mid)
            if pick(mid_point) > tgt:
                lo, lo_point = mid, mid_point
            else:
                hi, hi_point = mid, mid_point
            if abs(pick(mid_point) - tgt) < cfg.target_tol:
                return mid_point
            if hi - lo < 1e-11 * (1.0 + hi):
                break
        # timeshare across the jump: pick(lo_point) > tgt >= pick(hi_point)
        span = pick(lo_point) - pick(hi_point)
        theta = 0.0 if span <= 0 else (tgt - pick(hi_point)) / span
        theta = min(max(theta, 0.0), 1.0)
        mixed = tuple(
            theta * a + (1.0 - theta) * b for a, b in zip(lo_point, hi_point)
        )
        return mixed

    inner_lam = {"value": 0.0}

    def solve_inner(lam_s):
        """Drive D_a to its target at fixed lam_s; lam_a pins to 0 when slack."""
        def evaluate(lam_a):
            rate, ds, da, _ = run(lam_s, lam_a)
            return (lam_a, rate, ds, da)

        point = bisect_to_target(evaluate, 3, target_da, "D_a")
        inner_lam["value"] = point[0]
        return point

    # outer bisection on lam_s against D_s, with the inner solve nested
    def evaluate_outer(lam_s):
        _, rate, ds, da = solve_inner(lam_s)
        return (lam_s, rate, ds, da)

    lam_s, rate, ds, da = bisect_to_target(evaluate_outer, 2, target_ds, "D_s")
    lam_a = inner_lam["value"]

    conv = state["conv"]
    if (
        state["best"] is not None
        and state["best"][0] < rate
        and state["best"][1] <= ds + cfg.target_tol
        and state["best"][2] <= da + cfg.target_tol
    ):
        rate, ds, da, lam_s, lam_a, conv = state["best"]
    residual = max(0.0, ds - target_ds, da - target_da)
    return RDPoint(
        target_ds,
        target_da,
        rate,
        "nats",
        "converged",
        {
            "iterations": state["iters"],
            "residual": residual,
            "lambda_s": lam_s,
            "lambda_a": lam_a,
            "achieved_d_s": ds,
            "achieved_d_a": da,
            "ba_converged": conv,
            "ba_evals": state["evals"],
        },
    )


# ---------------------------------------------------------------------------
# Grid-search oracle
# ---------------------------------------------------------------------------


def _simplex_lattice(K: int, res: int) -> np.ndarray:
    """All integer compositions of res into K nonnegative parts."""
    out = np.zeros((comb(res + K - 1, K - 1), K), dtype=np.int64)
    row = 0
    stack = [([], res)]
    while stack:
        prefix, rem = stack.pop()
        if len(prefix) == K - 1:
            out[row, : K - 1] = prefix
            out[row, K - 1] = rem
            row += 1
            continue
        for v in range(rem, -1, -1):
            stack.append((prefix + [v], rem - v))
    return out[:row]


def _channel_rate(p_x, rows):
    """I(x; letter) = H(q) - sum_x p(x) H(row_x) for a stacked channel."""
    q = p_x @ rows
    return float(-xlogy(q, q).sum() + (p_x * xlogy(rows, rows).sum(axis=1)).sum())


def _row_moves(K: int) -> np.ndarray:
    """Zero-sum integer moves used by the lattice walk.

    Pair transfers at two magnitudes plus three-letter recombinations;
    rich enough that a convex objective cannot jam except within one
    lattice cell of the optimum.
    """
    moves = [np.zeros(K, dtype=np.int64)]
    for i, j in itertools.permutations(range(K), 2):
        for mag in (1, 2):
            m = np.zeros(K, dtype=np.int64)
            m[i] += mag
            m[j] -= mag
            moves.append(m)
    for i, j, k in itertools.permutations(range(K), 3):
        if j < k:
            m = np.zeros(K, dtype=np.int64)
            m[i] += 2
            m[j] -= 1
            m[k] -= 1
            moves.append(m)
            moves.append(-m)
    return np.unique(np.array(moves), axis=0)


def _walk_lattice(p_x, cost_s, cost_a, tds, tda, rows_int, res, max_steps=400):
    """Greedy joint-row descent on the res-denominator lattice.

    Accepts only feasible candidates; stops at a lattice-local minimum.
    Returns (best_rate, best_rows_int) with rate = inf if no feasible
    point was ever seen.
    """
    nx, K = cost_s.shape
    moves = _row_moves(K)
    pair_moves = [(a, b) for a in range(nx) for b in range(nx) if a < b]

    def evaluate(cand):
        rows = cand / res
        ds = float((p_x[:, None] * rows * cost_s).sum())
        da = float((p_x[:, None] * rows * cost_a).sum())
        if ds > tds + 1e-12 or da > tda + 1e-12:
            return np.inf
        return _channel_rate(p_x, rows)

    current = rows_int.copy()
    best = evaluate(current)
    for _ in range(max_steps):
        improved = False
        # single-row moves, then coordinated two-row moves
        for rows_touched in [(r,) for r in range(nx)] + pair_moves:
            if len(rows_touched) == 1:
                r = rows_touched[0]
                cands = np.repeat(current[None, :, :], len(moves), axis=0)
                cands[:, r, :] += moves
            else:
                r1, r2 = rows_touched
                n = len(moves)
                cands = np.repeat(current[None, :, :], n * n, axis=0)
                cands[:, r1, :] += np.repeat(moves, n, axis=0)
                cands[:, r2, :] += np.tile(moves, (n, 1))
            valid = (cands >= 0).all(axis=(1, 2))
            cands = cands[valid]
            rows = cands / res
            ds = np.einsum("x,cxk,xk->c", p_x, rows, cost_s)
            da = np.einsum("x,cxk,xk->c", p_x, rows, cost_a)
            feas = (ds <= tds + 1e-12) & (da <= tda + 1e-12)
            if not feas.any():
                continue
            rows = rows[feas]
            cands = cands[feas]
            q = np.einsum("x,cxk->ck", p_x, rows)
            rates = -xlogy(q, q).sum(axis=1) + np.einsum(
                "x,cx->c", p_x, xlogy(rows, rows).sum(axis=2)
            )
            k = int(np.argmin(rates))
            if rates[k] < best - 1e-14:
                best = float(rates[k])
                current = cands[k]
                improved = True
        if not improved:
            break
    return best, current


def _convex_polish(p_x, cost_s, cost_a, tds, tda):
    """High-accuracy polish via an exponential-cone program.

    The mutual information is DCP-representable as
    sum rel_entr(p(x) P[x,k], p(x) q[k]) since both arguments are linear
    in the channel, so the whole problem hands off to a conic solver.
    This route shares no code with the Blahut-Arimoto iteration. Returns
    (rate, rows) recomputed from the (projected) solution, or
    (inf, None) when the solve fails or lands infeasible.
    """
    import cvxpy as cp

    nx, K = cost_s.shape
    P = cp.Variable((nx, K), nonneg=True)
    weights = np.tile(p_x[:, None], (1, K))
    q_rows = cp.vstack([p_x @ P for _ in range(nx)])
    objective = cp.sum(cp.rel_entr(cp.multiply(weights, P),
                                   cp.multiply(weights, q_rows)))
    constraints = [
        cp.sum(P, axis=1) == 1,
        cp.sum(cp.multiply(p_x[:, None] * cost_s, P)) <= tds,
        cp.sum(cp.multiply(p_x[:, None] * cost_a, P)) <= tda,
    ]
    problem = cp.Problem(cp.Minimize(objective), constraints)
    try:
        problem.solve(solver="CLARABEL")
    except cp.error.SolverError:
        try:
            problem.solve(solver="SCS")
        except cp.error.SolverError:
            return np.inf, None
    if P.value is None:
        return np.inf, None
    rows = np.clip(P.value, 0.0, None)
    rows = rows / rows.sum(axis=1, keepdims=True)
    ds = float((p_x[:, None] * rows * cost_s).sum())
    da = float((p_x[:, None] * rows * cost_a).sum())
    if ds > tds + 1e-8 or da > tda + 1e-8:
        return np.inf, None
    return _channel_rate(p_x, rows), rows


def oracle_grid_search(
    src: DiscreteSemanticSource,
    d_s: DistortionTable,
    d_a: DistortionTable,
    target: tuple[float, float],
    grid_resolution: int = 48,
    refine: bool = True,
) -> RDPoint:
    """Verification oracle: direct search over test channels.

    Stage 1 exhaustively enumerates channels whose rows live on a
    simplex lattice (full cross product over observation letters) and
    keeps the cheapest feasible one. Stage 2 (``refine=True``) walks the
    requested-resolution lattice and two finer ones around the
    incumbent, then applies an SQP polish; convexity of the mutual
    information in the channel makes the local descent globally valid.
    The result upper-bounds the true rate, within O(1/grid_resolution)
    even without refinement.

    Restricted to alphabets of at most 3 letters each; the search cost
    is combinatorial.
    """
    d_hat_s = reduce_distortion(src, d_s)
    cost_s, cost_a, n_shat, n_xhat = _joint_costs(d_hat_s, d_a)
    if max(src.state_alphabet_size, src.obs_alphabet_size, n_shat, n_xhat) > 3:
        raise ValueError("oracle_grid_search is limited to alphabets of size <= 3")
    if not (1 <= grid_resolution <= 64):
        raise ValueError("grid_resolution must lie in [1, 64]")
    target_ds, target_da = float(target[0]), float(target[1])
    p_x = src.obs_marginal
    nx = len(p_x)
    K = n_shat * n_xhat

    floor_s, floor_a = _distortion_floors(p_x, cost_s, cost_a)
    if target_ds < floor_s - 1e-12 or target_da < floor_a - 1e-12:
        return RDPoint(
            target_ds, target_da, float("nan"), "nats", "infeasible",
            {"floor_d_s": floor_s, "floor_d_a": floor_a, "iterations": 0,
             "residual": float("nan")},
        )
    if _zero_rate_feasible(p_x, cost_s, cost_a, target_ds, target_da):
        return RDPoint(
            target_ds, target_da, 0.0, "nats", "zero_rate",
            {"iterations": 0, "residual": 0.0},
        )

    # full enumeration resolution, capped so the cross product stays ~1e6
    res0 = grid_resolution
    while res0 > 2 and comb(res0 + K - 1, K - 1) ** nx > 1_200_000:
        res0 -= 1
    if not refine and res0 < grid_resolution:
        raise ValueError(
            f"full enumeration at resolution {grid_resolution} needs "
            f"{comb(grid_resolution + K - 1, K - 1) ** nx} channel evaluations; "
            "pass refine=True"
        )
    lattice = _simplex_lattice(K, res0).astype(float) / res0
    a_cost = lattice @ cost_s.T  # (N, nx): semantic cost of using a row at x
    b_cost = lattice @ cost_a.T
    neg_h = xlogy(lattice, lattice).sum(axis=1)

    best_rate = np.inf
    best_rows = None
    n_lattice = len(lattice)
    for combo in itertools.product(range(n_lattice), repeat=nx - 1):
        ds_head = sum(p_x[i] * a_cost[c, i] for i, c in enumerate(combo))
        da_head = sum(p_x[i] * b_cost[c, i] for i, c in enumerate(combo))
        feas = (ds_head + p_x[-1] * a_cost[:, -1] <= target_ds + 1e-12) & (
            da_head + p_x[-1] * b_cost[:, -1] <= target_da + 1e-12
        )
        if not feas.any():
            continue
        idx = np.flatnonzero(feas)
        q = p_x[-1] * lattice[idx]
        for i, c in enumerate(combo):
            q = q + p_x[i] * lattice[c]
        rates = -xlogy(q, q).sum(axis=1)
        rates += sum(p_x[i] * neg_h[c] for i, c in enumerate(combo))
        rates += p_x[-1] * neg_h[idx]
        j = int(np.argmin(rates))
        if rates[j] < best_rate:
            best_rate = float(rates[j])
            best_rows = np.vstack(
                [lattice[c] for c in combo] + [lattice[idx[j]]]
            )
    if best_rows is None:
        # budgets sit between the floor and the coarsest lattice points
        best_rate = np.inf

    final_res = res0
    if refine:
        if best_rows is None:
            # fall back to the per-letter floor channel, always feasible
            best_rows = np.zeros((nx, K))
            picks_s = cost_s.argmin(axis=1)
            best_rows[np.arange(nx), picks_s] = 1.0
        for res in (grid_resolution, 4 * grid_resolution):
            rows_int = _round_to_lattice(best_rows, res)
            rate, rows_int = _walk_lattice(
                p_x, cost_s, cost_a, target_ds, target_da, rows_int, res
            )
            if rate < best_rate:
                best_rate = rate
                best_rows = rows_int / res
            final_res = res
        polish_rate, polish_rows = _convex_polish(
            p_x, cost_s, cost_a, target_ds, target_da
        )
        if polish_rate < best_rate:
            best_rate = polish_rate
            best_rows = polish_rows
    if not np.isfinite(best_rate):
        raise RuntimeError(
            "no feasible lattice channel found despite feasible budgets; "
            "increase grid_resolution"
        )
    grid_error = (float(max(cost_s.max(), cost_a.max(), 1.0)) * K) / final_res
    return RDPoint(
        target_ds,
        target_da,
        max(best_rate, 0.0),
        "nats",
        "converged",
        {
            "iterations": 0,
            "residual": 0.0,
            "enumeration_resolution": res0,
            "final_resolution": final_res,
            "grid_error": grid_error,
            "refined": refine,
        },
    )


def _round_to_lattice(rows: np.ndarray, res: int) -> np.ndarray:
    """Largest-remainder rounding of each row onto the res-lattice."""
    scaled = rows * res
    base = np.floor(scaled).astype(np.int64)
    out = base.copy()
    for r in range(rows.shape[0]):
        short = res - int(base[r].sum())
        if short > 0:
            order = np.argsort(-(scaled[r] - base[r]))
            out[r, order[:short]] += 1
    return out
