"""Numerical solver for capacity under an estimation-cost budget.

The core is a multiplicatively-updated ascent on the input distribution
(classical alternating maximization of mutual information) extended with a
linear cost tilt: each step reweights

    p'(x) proportional to p(x) * exp( D(P_y|x || P_y) - lambda * cost(x) )

which is monotone in the Lagrangian objective I(p) - lambda * E_p[cost].
An outer bisection on the multiplier hits the cost budget, with degenerate
budgets handled on the minimum-cost face.  A vectorized grid search over the
input simplex doubles as an independent oracle for small alphabets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import (
    ChannelModel,
    FloatArray,
    InputDistribution,
    _as_probs,
    optimal_estimator,
)
from .errors import (
    AlphabetTooLarge,
    DimensionMismatch,
    InfeasibleConstraints,
    InfeasibleDistortion,
    SolverNonmonotone,
)

# Tolerance for deciding that a per-letter cost sits on the minimum-cost face.
FACE_TOL = 1e-12

# Tolerance applied to curve monotonicity / concavity checks.
CURVE_TOL = 1e-7


@dataclass(frozen=True)
class SolverOptions:
    """Tuning knobs for the iterative solver.

    ba_tol        : stop the inner ascent once the objective increment drops
                    to this value (default 1e-10)
    ba_max_iter   : inner iteration cap (default 10_000)
    cert_tol      : early exit once the optimality-gap certificate
                    max_x score(x) - objective falls below this
    cost_tol      : outer bisection stops when the achieved cost is within
                    this of the budget (default 1e-8)
    max_bisections: outer iteration cap (default 200)
    lambda_cap    : largest multiplier tried before falling back to the
                    minimum-cost face (default 1e6)
    stall_cert    : largest certificate the increment-based inner stop may
                    accept; bounds the suboptimality a stalled ascent can
                    leave behind (default 1e-6)
    debug         : assert objective monotonicity on every inner step
    """

    ba_tol: float = 1e-10
    ba_max_iter: int = 10_000
    cert_tol: float = 1e-11
    cost_tol: float = 1e-8
    max_bisections: int = 200
    lambda_cap: float = 1e6
    stall_cert: float = 1e-6
    debug: bool = False


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True, eq=False)
class CDPoint:
    """One point of the tradeoff curve.

    convergence_warning is None on a clean solve; otherwise it names the
    iteration cap or fallback that fired (never silently dropped).
    """

    distortion_budget: float
    capacity: float
    optimizer: InputDistribution
    constraint_active: bool
    convergence_warning: str | None = None


@dataclass(frozen=True, eq=False)
class CDCurve:
    points: tuple[CDPoint, ...]
    d_min: float
    d_max: float


@dataclass(frozen=True, eq=False)
class CostConstraint:
    """A linear budget: sum_x p(x) cost_vector[x] <= budget."""

    cost_vector: FloatArray
    budget: float

    def __post_init__(self):
        vec = np.asarray(self.cost_vector, dtype=np.float64)
        vec.setflags(write=False)
        object.__setattr__(self, "cost_vector", vec)


# ---------------------------------------------------------------------------
# inner ascent
# ---------------------------------------------------------------------------


def _channel_terms(pyx: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Precompute log P(y|x) (masked) and the per-row sum_y P log P."""
    with np.errstate(divide="ignore"):
        log_pyx = np.where(pyx > 0, np.log(np.maximum(pyx, 1e-300)), 0.0)
    row_self = np.sum(pyx * log_pyx, axis=1)
    return log_pyx, row_self


class _Objective:
    """Weighted mutual-information objective over one or more channels."""

    def __init__(self, weighted_channels: Sequence[tuple[float, FloatArray]]):
        self.terms = []
        for weight, pyx in weighted_channels:
            if weight <= 0.0:
                continue
            log_pyx, row_self = _channel_terms(pyx)
            self.terms.append((float(weight), pyx, row_self))
        self.n_inputs = weighted_channels[0][1].shape[0]

    def scores(self, p: FloatArray) -> FloatArray:
        """sum_i w_i * D(P_i(.|x) || P_i(.)) per input letter, at input law p."""
        total = np.zeros(self.n_inputs)
        for weight, pyx, row_self in self.terms:
            py = p @ pyx
            log_py = np.log(np.maximum(py, 1e-300))
            total += weight * (row_self - pyx @ log_py)
        return total

    def value(self, p: FloatArray) -> float:
        return float(p @ self.scores(p))


def _ascend(
    objective: _Objective,
    tilt: FloatArray,
    opts: SolverOptions,
    p0: FloatArray | None = None,
) -> tuple[FloatArray, float, bool]:
    """Maximize objective(p) - tilt . p over the simplex.

    Returns (maximizer, certified optimality gap, hit_iteration_cap).  The
    gap bounds the true suboptimality from above: for any feasible q,
    objective(q) - tilt.q <= max_x score(x), while the iterate achieves
    p . score.
    """
    n = objective.n_inputs
    if p0 is None:
        log_p = np.full(n, -math.log(n))
    else:
        # Floor warm-start masses.  The update is multiplicative, so a
        # coordinate whose warm mass is near zero regrows only by tiny value
        # increments and the increment stop below would otherwise fire long
        # before optimality.  A floor (unlike a uniform blend) leaves healthy
        # interior warm starts untouched.
        start = np.maximum(np.asarray(p0, dtype=np.float64), 1e-5 / n)
        start /= start.sum()
        log_p = np.log(start)
    prev_value = -np.inf
    cert = np.inf
    hist: list[FloatArray] = []  # recent consecutive log-iterates
    for it in range(opts.ba_max_iter):
        p = np.exp(log_p)
        p /= p.sum()
        score = objective.scores(p) - tilt
        value = float(p @ score)
        cert = float(np.max(score) - value)
        if opts.debug and value < prev_value - 1e-12:
            raise AssertionError(
                f"objective decreased: {prev_value!r} -> {value!r}"
            )
        if cert <= opts.cert_tol:
            return p, cert, False
        # The increment stop needs a certificate bound too: increments decay
        # geometrically while mass drains toward a face, so a stalled ascent
        # can still be visibly suboptimal.  The certificate bounds the
        # suboptimality, so accepting only small ones caps the damage.
        if value - prev_value <= opts.ba_tol and np.isfinite(prev_value):
            if cert <= opts.stall_cert:
                return p, cert, False
            # Frozen far from optimal: a multiplicative update cannot grow a
            # tiny coordinate whose score advantage is itself tiny (the
            # per-step log gain equals the certificate).  Move toward the
            # best-scoring vertex with an exact line search instead -- the
            # objective is concave along the segment, so this is monotone
            # and it escapes the freeze in one jump.
            x_star = int(np.argmax(score))
            direction = -p.copy()
            direction[x_star] += 1.0

            def along(t: float) -> float:
                q = p + t * direction
                return float(q @ (objective.scores(q) - tilt))

            lo, hi = 0.0, 1.0
            for _ in range(48):
                m1 = lo + (hi - lo) / 3.0
                m2 = hi - (hi - lo) / 3.0
                if along(m1) < along(m2):
                    lo = m1
                else:
                    hi = m2
            t_best = 0.5 * (lo + hi)
            if along(t_best) > value:
                log_p = np.log(np.maximum(p + t_best * direction, 1e-300))
                hist.clear()
                prev_value = value
                continue
            return p, cert, False  # the segment is numerically flat: accept
        prev_value = value
        log_p = log_p + score
        log_p -= np.max(log_p)
        log_p -= math.log(np.sum(np.exp(log_p)))
        hist.append(log_p)
        if len(hist) > 3:
            del hist[0]
        # With an optimum near a face the update contracts at rate
        # 1 - O(smallest mass) and plain iteration crawls.  That slow mode is
        # geometric in log space, so Aitken extrapolation through three
        # consecutive iterates jumps to its limit; the jump is kept only when
        # it strictly improves the objective, preserving monotonicity.
        if len(hist) == 3 and it % 16 == 15:
            d1 = hist[2] - hist[1]
            d0 = hist[1] - hist[0]
            denom = d1 - d0
            contracting = (np.abs(denom) > 1e-12) & (np.abs(d1) < np.abs(d0))
            jump = np.where(contracting, -d1 * d1 / np.where(contracting, denom, 1.0), 0.0)
            if np.any(jump != 0.0):
                cand = hist[2] + jump
                cand -= np.max(cand)
                q = np.exp(cand)
                q /= q.sum()
                if float(q @ (objective.scores(q) - tilt)) > value:
                    log_p = np.log(np.maximum(q, 1e-300))
                    hist.clear()
    p = np.exp(log_p)
    p /= p.sum()
    score = objective.scores(p) - tilt
    cert = float(np.max(score) - float(p @ score))
    return p, cert, True


def lagrangian_ba_step(model: ChannelModel, px, lam: float, cost_vector=None) -> InputDistribution:
    """One multiplicative update of the tilted ascent, exposed for inspection.

    With lam = 0 this is the classical capacity iteration; its fixed points
    are exactly the unconstrained optimizers.
    """
    probs = _as_probs(px, model.input_size)
    if cost_vector is None:
        cost_vector = optimal_estimator(model).cost_vector
    cost_vector = np.asarray(cost_vector, dtype=np.float64)
    objective = _Objective([(1.0, model.output_given_input)])
    score = objective.scores(probs) - lam * cost_vector
    with np.errstate(divide="ignore"):
        log_p = np.where(probs > 0, np.log(np.maximum(probs, 1e-300)), -np.inf) + score
    log_p -= np.max(log_p)
    updated = np.exp(log_p)
    return InputDistribution(updated / updated.sum())


# ---------------------------------------------------------------------------
# single-budget solver
# ---------------------------------------------------------------------------


def feasible_range(model: ChannelModel, opts: SolverOptions = DEFAULT_OPTIONS) -> tuple[float, float]:
    """(d_min, d_max): the smallest achievable cost and the cost at the
    unconstrained capacity achiever.  Budgets >= d_max leave the constraint
    slack; budgets below d_min are infeasible."""
    policy = optimal_estimator(model)
    objective = _Objective([(1.0, model.output_given_input)])
    p, _, _ = _ascend(objective, np.zeros(model.input_size), opts)
    d_min = float(np.min(policy.cost_vector))
    d_max = float(p @ policy.cost_vector)
    return d_min, max(d_min, d_max)


def _face_solve(
    pyx: FloatArray, cost_vector: FloatArray, opts: SolverOptions
) -> tuple[FloatArray, float]:
    """Unconstrained ascent restricted to the minimum-cost letters."""
    d_min = float(np.min(cost_vector))
    face = cost_vector <= d_min + FACE_TOL
    sub = _Objective([(1.0, pyx[face])])
    p_sub, _, _ = _ascend(sub, np.zeros(int(face.sum())), opts)
    p = np.zeros(cost_vector.size)
    p[face] = p_sub
    return p, sub.value(p_sub)


def capacity_distortion_point(
    model: ChannelModel, budget: float, opts: SolverOptions = DEFAULT_OPTIONS
) -> CDPoint:
    """Best achievable rate (nats per use) with expected estimation cost <= budget.

    Strategy: solve unconstrained first and return it if already feasible;
    otherwise bisect the cost multiplier until the achieved cost lands within
    ``opts.cost_tol`` below the budget.  When no multiplier attains the
    budget exactly (the tradeoff has a linear segment there), the two
    bracketing solutions are mixed, which is optimal by concavity.
    """
    policy = optimal_estimator(model)
    cost_vector = policy.cost_vector
    pyx = model.output_given_input
    d_min = float(np.min(cost_vector))
    if budget < d_min - FACE_TOL:
        raise InfeasibleDistortion(
            f"budget {budget} below minimum achievable estimation cost {d_min}", d_min=d_min
        )
    objective = _Objective([(1.0, pyx)])

    if budget <= d_min:
        p, capacity = _face_solve(pyx, cost_vector, opts)
        return CDPoint(budget, max(0.0, capacity), InputDistribution(p), True)

    p_free, _, capped = _ascend(objective, np.zeros(model.input_size), opts)
    warning = "inner ascent hit its iteration cap" if capped else None
    cost_free = float(p_free @ cost_vector)
    if cost_free <= budget:
        return CDPoint(
            budget, max(0.0, objective.value(p_free)), InputDistribution(p_free), False, warning
        )

    # Grow the multiplier geometrically until the budget side is bracketed.
    lam_lo, p_lo, cost_lo = 0.0, p_free, cost_free
    lam_hi = 1.0
    p_warm = p_free
    while True:
        p_hi, _, capped = _ascend(objective, lam_hi * cost_vector, opts, p0=p_warm)
        warning = warning or ("inner ascent hit its iteration cap" if capped else None)
        cost_hi = float(p_hi @ cost_vector)
        p_warm = p_hi
        if cost_hi <= budget:
            break
        lam_lo, p_lo, cost_lo = lam_hi, p_hi, cost_hi
        lam_hi *= 2.0
        if lam_hi > opts.lambda_cap:
            p, capacity = _face_solve(pyx, cost_vector, opts)
            return CDPoint(
                budget,
                max(0.0, capacity),
                InputDistribution(p),
                True,
                "multiplier cap reached; returned the minimum-cost face",
            )

    for _ in range(opts.max_bisections):
        if budget - cost_hi <= opts.cost_tol:
            break
        if lam_hi - lam_lo <= 1e-15 * max(1.0, lam_hi):
            # No multiplier hits the budget: the curve is linear here, so the
            # cost-matched mixture of the bracketing solutions is optimal.
            alpha = (budget - cost_hi) / (cost_lo - cost_hi)
            p_mix = alpha * p_lo + (1.0 - alpha) * p_hi
            return CDPoint(
                budget,
                max(0.0, objective.value(p_mix)),
                InputDistribution(p_mix),
                True,
                warning,
            )
        lam_mid = 0.5 * (lam_lo + lam_hi)
        p_mid, _, capped = _ascend(objective, lam_mid * cost_vector, opts, p0=p_warm)
        warning = warning or ("inner ascent hit its iteration cap" if capped else None)
        p_warm = p_mid
        cost_mid = float(p_mid @ cost_vector)
        if cost_mid > budget:
            lam_lo, p_lo, cost_lo = lam_mid, p_mid, cost_mid
        else:
            lam_hi, p_hi, cost_hi = lam_mid, p_mid, cost_mid
    else:
        warning = warning or "bisection hit its iteration cap"

    return CDPoint(budget, max(0.0, objective.value(p_hi)), InputDistribution(p_hi), True, warning)


def cd_curve(model: ChannelModel, grid, opts: SolverOptions = DEFAULT_OPTIONS) -> CDCurve:
    """Tradeoff curve on a budget grid.

    ``grid`` is either a point count n (n budgets spanning [d_min, d_max];
    n = 1 evaluates the single point d_max) or an explicit sequence of
    budgets, which is sorted.  The computed curve is checked to be
    nondecreasing and concave within 1e-7; violations raise
    ``SolverNonmonotone`` rather than returning a silently bad curve.
    """
    d_min, d_max = feasible_range(model, opts)
    if isinstance(grid, (int, np.integer)):
        n = int(grid)
        if n < 1:
            raise ValueError("grid size must be >= 1")
        budgets = np.array([d_max]) if n == 1 else np.linspace(d_min, d_max, n)
    else:
        budgets = np.sort(np.asarray(list(grid), dtype=np.float64))
        if budgets.size == 0:
            raise ValueError("empty budget grid")
    points = tuple(capacity_distortion_point(model, float(b), opts) for b in budgets)

    caps = np.array([pt.capacity for pt in points])
    if np.any(np.diff(caps) < -CURVE_TOL):
        raise SolverNonmonotone("capacity decreased along increasing budgets beyond 1e-7")
    for i in range(len(points) - 2):
        d0, d1, d2 = budgets[i], budgets[i + 1], budgets[i + 2]
        if d2 - d0 <= 0:
            continue
        chord = caps[i] + (caps[i + 2] - caps[i]) * (d1 - d0) / (d2 - d0)
        if caps[i + 1] < chord - CURVE_TOL:
            raise SolverNonmonotone("curve concavity violated beyond 1e-7")
    return CDCurve(points, d_min, d_max)


# ---------------------------------------------------------------------------
# several simultaneous budgets
# ---------------------------------------------------------------------------


def _feasibility_lp(cost_rows: FloatArray, budgets: FloatArray) -> float:
    """min over the simplex of max_j (cost_j . p - budget_j), via scipy LP."""
    from scipy.optimize import linprog

    n_cons, n = cost_rows.shape
    # variables: p (n) then t
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.hstack([cost_rows, -np.ones((n_cons, 1))])
    b_ub = budgets.copy()
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    if not res.success:
        raise InfeasibleConstraints("feasibility check failed to solve")
    return float(res.x[-1])


def _bisect_multiplier(
    objective: _Objective,
    base_tilt: FloatArray,
    cost_vector: FloatArray,
    budget: float,
    opts: SolverOptions,
    p_warm: FloatArray,
) -> tuple[float, FloatArray]:
    """Smallest multiplier on one cost vector meeting its budget, others fixed."""
    p0, _, _ = _ascend(objective, base_tilt, opts, p0=p_warm)
    cost0 = float(p0 @ cost_vector)
    if cost0 <= budget + opts.cost_tol:
        return 0.0, p0
    lam_lo, p_lo, cost_lo = 0.0, p0, cost0
    lam_hi = 1.0
    while True:
        p_hi, _, _ = _ascend(objective, base_tilt + lam_hi * cost_vector, opts, p0=p_warm)
        cost_hi = float(p_hi @ cost_vector)
        p_warm = p_hi
        if cost_hi <= budget:
            break
        lam_lo, p_lo, cost_lo = lam_hi, p_hi, cost_hi
        lam_hi *= 2.0
        if lam_hi > opts.lambda_cap:
            return lam_hi, p_hi
    for _ in range(opts.max_bisections):
        if budget - cost_hi <= opts.cost_tol or lam_hi - lam_lo <= 1e-15 * max(1.0, lam_hi):
            break
        lam_mid = 0.5 * (lam_lo + lam_hi)
        p_mid, _, _ = _ascend(objective, base_tilt + lam_mid * cost_vector, opts, p0=p_warm)
        p_warm = p_mid
        cost_mid = float(p_mid @ cost_vector)
        if cost_mid > budget:
            lam_lo, p_lo, cost_lo = lam_mid, p_mid, cost_mid
        else:
            lam_hi, p_hi, cost_hi = lam_mid, p_mid, cost_mid
    if budget - cost_hi > opts.cost_tol and cost_lo > budget:
        # Warm-started ascents can freeze across a sliver of multipliers, so
        # the bracket may collapse with the cost stuck short of the budget.
        # The cost-matched mixture of the bracketing solutions lands on the
        # budget exactly and is optimal there up to the (tiny) chord error.
        alpha = (budget - cost_hi) / (cost_lo - cost_hi)
        p_hi = alpha * p_lo + (1.0 - alpha) * p_hi
    return lam_hi, p_hi


def multi_constraint_point(
    model: ChannelModel,
    constraints: Sequence[CostConstraint],
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> CDPoint:
    """Capacity under several simultaneous linear cost budgets.

    Coordinate-wise multiplier adjustment: each sweep re-bisects one
    multiplier with the rest frozen, which is dual coordinate descent.  The
    reported ``distortion_budget`` is the first constraint's budget.
    """
    if not constraints:
        raise ValueError("need at least one constraint")
    cost_rows = np.stack([c.cost_vector for c in constraints])
    budgets = np.array([c.budget for c in constraints], dtype=np.float64)
    if cost_rows.shape[1] != model.input_size:
        raise DimensionMismatch(
            f"cost vectors have length {cost_rows.shape[1]}, expected {model.input_size}"
        )
    best_single = cost_rows.min(axis=1)
    if np.any(best_single > budgets + FACE_TOL):
        j = int(np.argmax(best_single - budgets))
        raise InfeasibleConstraints(
            f"constraint {j}: cheapest letter costs {best_single[j]}, budget {budgets[j]}"
        )
    if _feasibility_lp(cost_rows, budgets) > 1e-12:
        raise InfeasibleConstraints("no input distribution satisfies every budget")

    objective = _Objective([(1.0, model.output_given_input)])
    lams = np.zeros(len(constraints))
    p = np.full(model.input_size, 1.0 / model.input_size)
    warning: str | None = None
    for _ in range(60):
        moved = 0.0
        for j in range(len(constraints)):
            base_tilt = (lams @ cost_rows) - lams[j] * cost_rows[j]
            new_lam, p = _bisect_multiplier(
                objective, base_tilt, cost_rows[j], budgets[j], opts, p
            )
            moved = max(moved, abs(new_lam - lams[j]))
            lams[j] = new_lam
        # The last coordinate's bisection leaves p solved at the full tilt
        # (possibly budget-matched by mixing); re-ascending here would only
        # undo that correction.
        costs = cost_rows @ p
        if np.all(costs <= budgets + opts.cost_tol) and moved <= 1e-9 * (1.0 + np.max(lams)):
            break
    else:
        costs = cost_rows @ p
        if np.any(costs > budgets + opts.cost_tol):
            warning = "multiplier sweeps hit their cap before satisfying every budget"

    active = bool(np.any(cost_rows @ p >= budgets - 1e-6))
    return CDPoint(
        float(budgets[0]), max(0.0, objective.value(p)), InputDistribution(p), active, warning
    )


# ---------------------------------------------------------------------------
# independent oracle
# ---------------------------------------------------------------------------


def _simplex_grid(n_inputs: int, step: float) -> FloatArray:
    n = int(round(1.0 / step))
    if n_inputs == 2:
        t = np.linspace(0.0, 1.0, n + 1)
        return np.stack([1.0 - t, t], axis=1)
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = (i + j) <= n
    i, j = i[keep], j[keep]
    return np.stack([i, j, n - i - j], axis=1) / n


def batch_mutual_information(model: ChannelModel, batch: FloatArray) -> FloatArray:
    """I(X; Y) in nats for every row of a (T, |X|) batch of input laws."""
    pyx = model.output_given_input
    _, row_self = _channel_terms(pyx)
    py = batch @ pyx
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(py > 0, -py * np.log(py), 0.0).sum(axis=1)
    return np.maximum(0.0, ent + batch @ row_self)


def grid_search_capacity(model: ChannelModel, budget: float, step: float | None = None) -> float:
    """Exhaustive simplex search, usable as an independent check of the solver.

    Only tiny input alphabets are supported (2 or 3 letters); the default
    step is 1e-4 for two letters and 1e-2 for three, giving an O(step)
    approximation from below.
    """
    if model.input_size > 3:
        raise AlphabetTooLarge("grid search supports input alphabets of size 2 or 3")
    if step is None:
        step = 1e-4 if model.input_size == 2 else 1e-2
    cost_vector = optimal_estimator(model).cost_vector
    if model.input_size == 1:
        if cost_vector[0] > budget + FACE_TOL:
            raise InfeasibleDistortion("budget below the single letter's cost", d_min=float(cost_vector[0]))
        return 0.0
    grid = _simplex_grid(model.input_size, step)
    feasible = grid @ cost_vector <= budget + 1e-12
    if not np.any(feasible):
        raise InfeasibleDistortion(
            f"budget {budget} below minimum achievable estimation cost", d_min=float(cost_vector.min())
        )
    return float(np.max(batch_mutual_information(model, grid[feasible])))


__all__ = [
    "CDCurve",
    "CDPoint",
    "CostConstraint",
    "DEFAULT_OPTIONS",
    "SolverOptions",
    "batch_mutual_information",
    "capacity_distortion_point",
    "cd_curve",
    "feasible_range",
    "grid_search_capacity",
    "lagrangian_ba_step",
    "multi_constraint_point",
]
