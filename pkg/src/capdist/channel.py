"""State-dependent memoryless channels over finite alphabets.

A channel here is a conditional law P(y | x, s) together with an i.i.d.
state prior P(s) and a per-letter distortion d(s, s_hat) charged to the
transmitter-side estimate of the state.  Everything downstream (solvers,
closed forms, simulation) is built on the derived quantities computed in
this module: output marginals, state posteriors, the optimal one-shot
estimator and its per-letter cost vector, and mutual information.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .errors import (
    AlphabetOverflow,
    DimensionMismatch,
    NegativeDistortion,
    NotAProbability,
    ZeroProbabilityConditioning,
)

# Row sums may be off by less than this on ingestion; they are then
# renormalized to machine precision.  Anything worse is rejected.
PROB_TOL = 1e-9

# Default cap on the size of a super-symbol alphabet (inputs or outputs).
ALPHABET_CAP = 2**20

FloatArray = NDArray[np.float64]


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Finite-alphabet channel with i.i.d. state and a state distortion.

    transition   : array (|X|, |S|, |Y|), transition[x, s] is P(. | x, s)
    state_prior  : array (|S|,)
    distortion   : array (|S|, |S|), distortion[s, s_hat] = d(s, s_hat)

    Instances are immutable; build them through ``validate_channel`` so the
    probability and shape invariants are guaranteed to hold.
    """

    transition: FloatArray
    state_prior: FloatArray
    distortion: FloatArray

    def __post_init__(self):
        for name in ("transition", "state_prior", "distortion"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.transition.ndim != 3:
            raise DimensionMismatch("transition must have shape (|X|, |S|, |Y|)")
        if self.state_prior.shape != (self.transition.shape[1],):
            raise DimensionMismatch("state_prior length must match the state axis of transition")
        if self.distortion.shape != (self.state_prior.size, self.state_prior.size):
            raise DimensionMismatch("distortion must be square over the state alphabet")

    @property
    def input_size(self) -> int:
        return self.transition.shape[0]

    @property
    def state_size(self) -> int:
        return self.transition.shape[1]

    @property
    def output_size(self) -> int:
        return self.transition.shape[2]

    @cached_property
    def output_given_input(self) -> FloatArray:
        """P(y | x) with the state averaged out, shape (|X|, |Y|)."""
        pyx = np.einsum("xsy,s->xy", self.transition, self.state_prior)
        pyx.setflags(write=False)
        return pyx


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Probability vector over the input alphabet."""

    probs: FloatArray

    def __post_init__(self):
        probs = np.atleast_1d(np.asarray(self.probs, dtype=np.float64))
        if probs.ndim != 1:
            raise DimensionMismatch("input distribution must be a vector")
        _check_prob_rows(probs[None, :], "input distribution")
        probs = probs / probs.sum()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True, eq=False)
class EstimatorPolicy:
    """Optimal one-shot state estimator for a channel.

    table       : array (|X|, |Y|) of state indices, the estimate for (x, y)
    cost_vector : array (|X|,), per-letter expected distortion d*(x)
    reachable   : bool array (|X|, |Y|), False where P(y | x) = 0; those table
                  entries are fixed to 0 and contribute nothing to the cost
    """

    table: NDArray[np.int64]
    cost_vector: FloatArray
    reachable: NDArray[np.bool_]

    def __post_init__(self):
        for name in ("table", "cost_vector", "reachable"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _check_prob_rows(rows: FloatArray, field: str) -> None:
    if np.any(rows < 0):
        raise NotAProbability(f"{field}: negative entry")
    if not np.all(np.isfinite(rows)):
        raise NotAProbability(f"{field}: non-finite entry")
    sums = rows.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) >= PROB_TOL):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise NotAProbability(f"{field}: row sum off by {worst:.3e} (tolerance {PROB_TOL:.0e})")


def validate_channel(
    transition,
    state_prior,
    distortion,
    *,
    input_size: int | None = None,
    output_size: int | None = None,
    state_size: int | None = None,
) -> ChannelModel:
    """Validate raw arrays and assemble an immutable ``ChannelModel``.

    Probability rows must sum to 1 within ``PROB_TOL``; valid rows are
    renormalized to machine precision.  Declared alphabet sizes, when given,
    are checked against the tensor shapes.
    """
    transition = np.asarray(transition, dtype=np.float64)
    state_prior = np.asarray(state_prior, dtype=np.float64)
    distortion = np.asarray(distortion, dtype=np.float64)

    if transition.ndim != 3:
        raise DimensionMismatch(
            f"transition must be a rank-3 array [x][s][y], got rank {transition.ndim}"
        )
    nx, ns, ny = transition.shape
    if state_prior.shape != (ns,):
        raise DimensionMismatch(
            f"state_prior has length {state_prior.size}, transition expects {ns} states"
        )
    if distortion.shape != (ns, ns):
        raise DimensionMismatch(
            f"distortion has shape {distortion.shape}, expected ({ns}, {ns})"
        )
    declared = {"x": (input_size, nx), "y": (output_size, ny), "s": (state_size, ns)}
    for axis, (given, actual) in declared.items():
        if given is not None and given != actual:
            raise DimensionMismatch(f"declared size {axis}={given} but tensors imply {actual}")

    _check_prob_rows(transition, "transition")
    _check_prob_rows(state_prior[None, :], "state_prior")
    if not np.all(np.isfinite(distortion)):
        raise NegativeDistortion("distortion: non-finite entry")
    if np.any(distortion < 0):
        raise NegativeDistortion("distortion: negative entry")

    transition = transition / transition.sum(axis=-1, keepdims=True)
    state_prior = state_prior / state_prior.sum()
    return ChannelModel(transition, state_prior, distortion)


def _as_probs(px, size: int, what: str = "input distribution") -> FloatArray:
    if isinstance(px, InputDistribution):
        probs = px.probs
    else:
        probs = InputDistribution(np.asarray(px, dtype=np.float64)).probs
    if probs.size != size:
        raise DimensionMismatch(f"{what} has length {probs.size}, expected {size}")
    return probs


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------


def output_marginal(model: ChannelModel, px_or_letter) -> FloatArray:
    """Output distribution P(y | x) for a letter, or P(y) for an input law."""
    if isinstance(px_or_letter, (int, np.integer)):
        x = int(px_or_letter)
        if not 0 <= x < model.input_size:
            raise DimensionMismatch(f"input letter {x} outside alphabet of size {model.input_size}")
        return model.output_given_input[x]
    probs = _as_probs(px_or_letter, model.input_size)
    return probs @ model.output_given_input


def state_posterior(model: ChannelModel, x: int, y: int) -> FloatArray:
    """P(s | x, y) by Bayes rule on the single-letter channel law."""
    if not (0 <= x < model.input_size and 0 <= y < model.output_size):
        raise DimensionMismatch("letter index outside alphabet")
    joint = model.transition[x, :, y] * model.state_prior
    total = joint.sum()
    if total <= 0.0:
        raise ZeroProbabilityConditioning(
            f"P(y={y} | x={x}) = 0; posterior undefined for this pair"
        )
    return joint / total


def optimal_estimator(model: ChannelModel) -> EstimatorPolicy:
    """Best state estimate per (input, output) pair and its cost vector.

    For each (x, y) the estimate minimizes the posterior expected distortion
    sum_s P(s | x, y) d(s, s_hat); ties go to the smallest state index.  The
    cost vector is d*(x) = sum_y P(y | x) min_s_hat E[d | x, y], the expected
    distortion of this estimator when letter x is sent.  Pairs with
    P(y | x) = 0 are flagged unreachable and contribute nothing.
    """
    # weight[x, s, y] = P(y | x, s) P(s): the unnormalized posterior.  Using it
    # directly folds the P(y | x) factor of the cost into the minimization, so
    # zero-probability outputs never divide by zero.
    weight = model.transition * model.state_prior[None, :, None]
    risk = np.einsum("xsy,st->xyt", weight, model.distortion)
    table = np.argmin(risk, axis=2)  # argmin takes the smallest index on ties
    cost_vector = risk.min(axis=2).sum(axis=1)
    reachable = model.output_given_input > 0.0
    return EstimatorPolicy(table.astype(np.int64), cost_vector, reachable)


def mutual_information(model: ChannelModel, px) -> float:
    """I(X; Y) in nats under the given input law, with 0 log 0 = 0."""
    probs = _as_probs(px, model.input_size)
    pyx = model.output_given_input
    py = probs @ pyx
    # Mask out unused letters too: a cell with p(x) = 0 but P(y|x) > 0 can
    # face p(y) = 0, and its log-ratio must not pollute the sum.
    mask = (pyx > 0.0) & (probs[:, None] > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, np.log(pyx) - np.log(py[None, :]), 0.0)
        mi = float(np.sum(np.where(mask, probs[:, None] * pyx * ratio, 0.0)))
    return max(0.0, mi)  # guard against -1e-17 style noise


def average_cost(px, policy: EstimatorPolicy) -> float:
    """Expected estimation cost sum_x p(x) d*(x)."""
    probs = _as_probs(px, policy.cost_vector.size)
    return float(probs @ policy.cost_vector)


# ---------------------------------------------------------------------------
# super-symbol construction
# ---------------------------------------------------------------------------


def block_to_super_symbol(model: ChannelModel, block_len: int, cap: int = ALPHABET_CAP) -> ChannelModel:
    """Channel for a block of uses that share one state realization.

    The block channel has inputs X^K, outputs Y^K and, conditional on the
    state, factorizes across positions: P(y_block | x_block, s) =
    prod_k P(y_k | x_k, s).  Tuples map to indices big-endian (first use most
    significant), so the all-zeros tuple is index 0.  Rates computed on the
    result are per super-symbol; divide by ``block_len`` for per-use values.
    """
    if block_len < 1:
        raise DimensionMismatch("block_len must be >= 1")
    if model.input_size**block_len > cap or model.output_size**block_len > cap:
        raise AlphabetOverflow(
            f"super-symbol alphabet exceeds cap {cap}: "
            f"|X|^K = {model.input_size}**{block_len}, |Y|^K = {model.output_size}**{block_len}"
        )
    stacked = []
    for s in range(model.state_size):
        mat = model.transition[:, s, :]
        super_mat = mat
        for _ in range(block_len - 1):
            super_mat = np.kron(super_mat, mat)
        stacked.append(super_mat)
    transition = np.stack(stacked, axis=1)
    return validate_channel(transition, model.state_prior, model.distortion)
