"""Capacity per unit estimation cost, and robustness to an uncertain prior.

Two extensions of the budgeted solver live here.  The first is the limiting
rate-per-cost figure: when exactly one input letter has zero estimation
cost, it reduces to a ratio of divergences against that letter; with two or
more free letters it is infinite; and it can always be approached through
sup over budgets of capacity(budget) / budget.  The second is a max-min
problem over a finite family of state priors sharing one transition law and
one distortion: choose the input law that maximizes the worst-case mutual
information while meeting the cost budget under every prior simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .channel import (
    ChannelModel,
    FloatArray,
    InputDistribution,
    optimal_estimator,
    validate_channel,
)
from .errors import (
    InfeasibleDistortion,
    NoZeroCostLetter,
    NotCertified,
)
from .solver import (
    DEFAULT_OPTIONS,
    SolverOptions,
    _ascend,
    _bisect_multiplier,
    _feasibility_lp,
    _Objective,
    batch_mutual_information,
    capacity_distortion_point,
    _simplex_grid,
)

ZERO_COST_TOL = 1e-12

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# capacity per unit cost
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CpudResult:
    """Capacity per unit estimation cost.

    value     : nats per unit distortion, possibly math.inf
    witness   : input letter index (ratio route) or the optimizing input law
                (sup route); for infinite values, the letters triggering it
    method    : "ratio-formula" or "sup-definition"
    condition : names the trigger when the value is infinite, else None
    """

    value: float
    witness: object
    method: str
    condition: str | None = None


def _zero_cost_letters(cost_vector: FloatArray) -> np.ndarray:
    return np.flatnonzero(cost_vector <= ZERO_COST_TOL)


def _divergence_rows(pyx: FloatArray, reference: FloatArray) -> FloatArray:
    """D(P(.|x) || reference) per row, +inf where not absolutely continuous."""
    out = np.empty(pyx.shape[0])
    for x in range(pyx.shape[0]):
        row = pyx[x]
        support = row > 0
        if np.any(support & (reference <= 0)):
            out[x] = np.inf
            continue
        out[x] = float(np.sum(row[support] * (np.log(row[support]) - np.log(reference[support]))))
    return out


def cpud_ratio_formula(model: ChannelModel, opts: SolverOptions = DEFAULT_OPTIONS) -> CpudResult:
    """Rate per unit cost via divergences against the unique free letter.

    Requires some letter with zero estimation cost.  With two or more such
    letters the value is infinite (communicate over the free letters at
    vanishing cost).  With exactly one free letter x0,

        value = max over x != x0 of D(P(.|x) || P(.|x0)) / d*(x),

    infinite if some numerator diverges.
    """
    cost_vector = optimal_estimator(model).cost_vector
    free = _zero_cost_letters(cost_vector)
    if free.size == 0:
        raise NoZeroCostLetter(
            "no input letter has zero estimation cost; use the sup-definition route"
        )
    if free.size >= 2:
        return CpudResult(
            math.inf, tuple(int(i) for i in free), "ratio-formula", "multiple zero-cost letters"
        )
    x0 = int(free[0])
    pyx = model.output_given_input
    divs = _divergence_rows(pyx, pyx[x0])
    ratios = np.full(model.input_size, -np.inf)
    for x in range(model.input_size):
        if x == x0:
            continue
        ratios[x] = divs[x] / cost_vector[x]
    best = int(np.argmax(ratios))
    value = float(ratios[best])
    if math.isinf(value):
        return CpudResult(math.inf, best, "ratio-formula", "divergent likelihood ratio")
    return CpudResult(value, best, "ratio-formula")


def cpud_sup_definition(model: ChannelModel, opts: SolverOptions = DEFAULT_OPTIONS) -> CpudResult:
    """Rate per unit cost as sup over budgets of capacity(budget) / budget.

    The infinite cases are detected from the same structural conditions as
    the ratio route.  Otherwise the profile capacity(b) / b is sampled on a
    100-point grid (geometric near the lower end, where the sup of a concave
    curve through the origin lives, plus a uniform sweep as a unimodality
    safeguard) and the best point is refined by golden-section search.
    """
    cost_vector = optimal_estimator(model).cost_vector
    free = _zero_cost_letters(cost_vector)
    if free.size >= 2:
        return CpudResult(
            math.inf, tuple(int(i) for i in free), "sup-definition", "multiple zero-cost letters"
        )
    if free.size == 1:
        x0 = int(free[0])
        pyx = model.output_given_input
        divs = _divergence_rows(pyx, pyx[x0])
        divs[x0] = 0.0
        if np.any(np.isinf(divs)):
            return CpudResult(
                math.inf,
                int(np.argmax(np.isinf(divs))),
                "sup-definition",
                "divergent likelihood ratio",
            )
    d_min = float(np.min(cost_vector))
    d_max_letter = float(np.max(cost_vector))
    if model.input_size == 1:
        return CpudResult(0.0, InputDistribution(np.ones(1)), "sup-definition")

    cache: dict[float, object] = {}

    def point(budget: float):
        if budget not in cache:
            cache[budget] = capacity_distortion_point(model, budget, opts)
        return cache[budget]

    def ratio(budget: float) -> float:
        return point(budget).capacity / budget

    if d_max_letter <= d_min + ZERO_COST_TOL:
        # Uniform cost: every input law spends d_min, so the sup sits there.
        pt = point(d_min)
        return CpudResult(pt.capacity / d_min, pt.optimizer, "sup-definition")

    hi = d_max_letter
    lo = max(d_min, 1e-9) if d_min <= ZERO_COST_TOL else d_min
    # Balance curvature bias against solver noise when probing near zero.
    if d_min <= ZERO_COST_TOL:
        lo = max(1e-6 * hi, 2e-5)
    grid = np.unique(
        np.concatenate(
            [
                np.geomspace(lo, hi, 50),
                np.linspace(lo, hi, 50),
            ]
        )
    )
    values = np.array([ratio(float(b)) for b in grid])
    k = int(np.argmax(values))
    a = grid[max(0, k - 1)]
    b = grid[min(grid.size - 1, k + 1)]
    # Golden-section refinement on the bracket around the best grid point.
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = ratio(float(x1)), ratio(float(x2))
    while (b - a) > 1e-5 * max(abs(a), abs(b)):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = ratio(float(x2))
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = ratio(float(x1))
    candidates = [float(g) for g in (grid[k], x1, x2)]
    best_b = max(candidates, key=ratio)
    pt = point(best_b)
    return CpudResult(pt.capacity / best_b, pt.optimizer, "sup-definition")


# ---------------------------------------------------------------------------
# uncertain state prior
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompoundFamily:
    """One transition law and distortion shared by several candidate priors."""

    transition: FloatArray
    priors: tuple[FloatArray, ...]
    distortion: FloatArray

    def __post_init__(self):
        models = tuple(
            validate_channel(self.transition, prior, self.distortion) for prior in self.priors
        )
        if not models:
            raise ValueError("need at least one prior")
        object.__setattr__(self, "transition", models[0].transition)
        object.__setattr__(self, "distortion", models[0].distortion)
        object.__setattr__(self, "priors", tuple(m.state_prior for m in models))
        object.__setattr__(self, "_models", models)

    @property
    def models(self) -> tuple[ChannelModel, ...]:
        return self._models


@dataclass(frozen=True, eq=False)
class CompoundResult:
    value: float
    optimizer: InputDistribution
    worst_theta: int
    gap: float
    certified: bool


def _solve_weighted(
    channels: Sequence[FloatArray],
    weights: FloatArray,
    cost_rows: FloatArray,
    budget: float,
    opts: SolverOptions,
    lams: FloatArray,
    p_warm: FloatArray,
) -> tuple[FloatArray, FloatArray, float]:
    """Maximize sum_i w_i I_i(p) subject to every cost row <= budget.

    Dual coordinate descent on the per-constraint multipliers, warm-started
    from the previous outer iteration.  Returns (p, multipliers, dual_bound)
    where dual_bound is a rigorous upper bound on the constrained optimum:
    for any multipliers, max over x of the tilted score plus the paid-for
    budgets bounds the Lagrangian from above.
    """
    objective = _Objective(list(zip(weights, channels)))
    n_cons = cost_rows.shape[0]
    # The certificate machinery around this solve rests on dual bounds and on
    # verified-feasible iterates, not on inner optimality, so both the sweep
    # loop and the per-coordinate bisections can run at relaxed precision;
    # whatever slack they leave shows up honestly in the reported gap.
    inner = replace(opts, cost_tol=1e-6, max_bisections=80, stall_cert=1e-5)
    lams = lams.copy()
    p = p_warm
    for _ in range(12):
        moved = 0.0
        for j in range(n_cons):
            base_tilt = (lams @ cost_rows) - lams[j] * cost_rows[j]
            new_lam, p = _bisect_multiplier(objective, base_tilt, cost_rows[j], budget, inner, p)
            moved = max(moved, abs(new_lam - lams[j]))
            lams[j] = new_lam
        p, _, _ = _ascend(objective, lams @ cost_rows, inner, p0=p)
        if np.all(cost_rows @ p <= budget + inner.cost_tol) and moved <= 1e-6 * (1.0 + lams.max()):
            break
    score = objective.scores(p) - lams @ cost_rows
    dual_bound = float(np.max(score)) + budget * float(lams.sum())
    return p, lams, dual_bound


def _grid_max_min(
    family: CompoundFamily, budget: float, step: float
) -> tuple[float, FloatArray]:
    grid = _simplex_grid(family.models[0].input_size, step)
    cost_rows = np.stack([optimal_estimator(m).cost_vector for m in family.models])
    feasible = np.all(grid @ cost_rows.T <= budget + 1e-12, axis=1)
    if not np.any(feasible):
        raise InfeasibleDistortion("no grid point satisfies every prior's budget")
    grid = grid[feasible]
    worst = np.full(grid.shape[0], np.inf)
    for m in family.models:
        worst = np.minimum(worst, batch_mutual_information(m, grid))
    k = int(np.argmax(worst))
    return float(worst[k]), grid[k]


def compound_cd(
    family: CompoundFamily,
    budget: float,
    opts: SolverOptions = DEFAULT_OPTIONS,
    gap_tol: float = 1e-4,
    max_outer: int = 400,
) -> CompoundResult:
    """Worst-case capacity over a finite prior family, budget enforced per prior.

    Multiplicative-weights play over the priors: the inner solve maximizes
    the weight-mixed information under all budgets, the weights then shift
    toward the currently worst prior.  Every inner optimum also yields an
    upper bound (the mixed value), and pure single-prior solves are probed as
    candidate bounds; the reported gap is best upper bound minus best lower
    bound.  If the gap cannot be certified below ``gap_tol``, an exhaustive
    grid search over input laws takes over for alphabets of size <= 3, and
    otherwise ``NotCertified`` is raised.
    """
    models = family.models
    n_theta = len(models)
    channels = [m.output_given_input for m in models]
    cost_rows = np.stack([optimal_estimator(m).cost_vector for m in models])
    n = models[0].input_size

    least = float(np.max(cost_rows.min(axis=1)))
    if budget < least - ZERO_COST_TOL:
        raise InfeasibleDistortion(
            f"budget {budget} below some prior's minimum achievable cost {least}", d_min=least
        )
    if _feasibility_lp(cost_rows, np.full(n_theta, budget)) > 1e-12:
        raise InfeasibleDistortion(
            f"no input distribution meets budget {budget} under every prior", d_min=least
        )

    if n_theta == 1:
        # One prior is not a game at all; delegate to the plain solver, whose
        # convergence is much tighter than the minimax machinery's.
        point = capacity_distortion_point(models[0], budget, opts)
        return CompoundResult(point.capacity, point.optimizer, 0, 0.0, True)

    def info_values(p: FloatArray) -> FloatArray:
        return batch_mutual_information_multi(channels, p)

    def feasible(p: FloatArray) -> FloatArray | None:
        """Return p (repaired if needed) when it meets every budget, else None.

        Inner solves may overshoot a budget by their convergence slack; mixing
        a little mass toward the letter cheapest under every prior restores
        feasibility at a proportionally small value change.
        """
        excess = float(np.max(cost_rows @ p)) - budget
        if excess <= 1e-9:
            return p
        anchor = int(np.argmin(cost_rows.max(axis=0)))
        room = float(np.max(cost_rows @ p) - np.max(cost_rows[:, anchor]))
        if excess > 1e-4 or room <= 0.0:
            return None
        alpha = min(1.0, excess / room + 1e-12)
        repaired = (1.0 - alpha) * p
        repaired[anchor] += alpha
        if float(np.max(cost_rows @ repaired)) - budget > 1e-9:
            return None
        return repaired

    best_lb = -np.inf
    best_p: FloatArray | None = None
    best_ub = np.inf

    # Pure-prior probes: solving one prior's objective under the full
    # constraint set yields a rigorous upper bound via its dual value and,
    # when the iterate meets every budget, a feasible candidate.
    lams0 = np.zeros(n_theta)
    p0 = np.full(n, 1.0 / n)
    for k in range(n_theta):
        w = np.zeros(n_theta)
        w[k] = 1.0
        p_k, _, ub_k = _solve_weighted(channels, w, cost_rows, budget, opts, lams0, p0)
        best_ub = min(best_ub, ub_k)
        p_ok = feasible(p_k)
        if p_ok is not None:
            lb = float(info_values(p_ok).min())
            if lb > best_lb:
                best_lb, best_p = lb, p_ok

    weights = np.full(n_theta, 1.0 / n_theta)
    lams = np.zeros(n_theta)
    p = best_p if best_p is not None else p0
    for t in range(1, max_outer + 1):
        if best_ub - best_lb <= gap_tol:
            break
        p, lams, ub_t = _solve_weighted(channels, weights, cost_rows, budget, opts, lams, p)
        vals = info_values(p)
        best_ub = min(best_ub, ub_t)
        p_ok = feasible(p)
        if p_ok is not None:
            lb = float(info_values(p_ok).min())
            if lb > best_lb:
                best_lb, best_p = lb, p_ok
        eta = math.sqrt(8.0 * math.log(max(n_theta, 2)) / t)
        weights = weights * np.exp(-eta * vals / max(float(vals.max()), 1e-12))
        weights /= weights.sum()

    gap = best_ub - best_lb
    certified = gap <= gap_tol
    if not certified or best_p is None:
        if n <= 3:
            step = 1e-4 if n == 2 else 1e-2
            g_val, g_p = _grid_max_min(family, budget, step)
            if g_val > best_lb or best_p is None:
                best_lb, best_p = g_val, g_p
            certified = True
            gap = min(gap, max(best_ub - best_lb, 0.0))
        else:
            raise NotCertified(
                f"duality gap {gap:.3e} above {gap_tol:.0e} and alphabet too large for grid fallback"
            )

    vals = info_values(best_p)
    return CompoundResult(
        max(0.0, best_lb),
        InputDistribution(best_p),
        int(np.argmin(vals)),
        max(0.0, gap),
        certified,
    )


def batch_mutual_information_multi(channels: Sequence[FloatArray], p: FloatArray) -> FloatArray:
    """I(X; Y) under one input law for each channel matrix in the sequence."""
    out = np.empty(len(channels))
    for i, pyx in enumerate(channels):
        py = p @ pyx
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(pyx > 0, np.log(np.maximum(pyx, 1e-300)) - np.log(np.maximum(py[None, :], 1e-300)), 0.0)
        out[i] = max(0.0, float(np.sum(p[:, None] * pyx * ratio)))
    return out


__all__ = [
    "CompoundFamily",
    "CompoundResult",
    "CpudResult",
    "compound_cd",
    "cpud_ratio_formula",
    "cpud_sup_definition",
]
