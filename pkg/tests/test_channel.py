"""Core model container, validation, estimator, and information measures."""

from __future__ import annotations

import math

import numpy as np
import pytest

import capdist as cd

HAMMING2 = [[0.0, 1.0], [1.0, 0.0]]


def _random_channel(rng, nx, ns, ny):
    transition = rng.random((nx, ns, ny)) + 1e-3
    transition /= transition.sum(axis=2, keepdims=True)
    prior = rng.random(ns) + 1e-3
    prior /= prior.sum()
    distortion = rng.random((ns, ns))
    return cd.validate_channel(transition, prior, distortion)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_validate_channel_accepts_and_freezes():
    model = cd.scalar_multiplicative_model(0.4)
    assert model.input_size == 2
    assert model.state_size == 2
    assert model.output_size == 2
    assert not model.transition.flags.writeable
    assert not model.state_prior.flags.writeable
    rows = model.transition.sum(axis=2)
    assert np.allclose(rows, 1.0, atol=1e-12)


def test_validate_channel_renormalizes_slightly_off_rows():
    t = np.array([[[0.5, 0.5 + 4e-10], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]])
    model = cd.validate_channel(t, [0.6, 0.4], HAMMING2)
    assert np.allclose(model.transition.sum(axis=2), 1.0, atol=1e-15)


def test_validate_channel_rejects_bad_rows():
    t = np.array([[[0.7, 0.7], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]])
    with pytest.raises(cd.NotAProbability):
        cd.validate_channel(t, [0.6, 0.4], HAMMING2)
    with pytest.raises(cd.NotAProbability):
        cd.validate_channel(np.abs(t) * 0 + 0.5, [0.6, 0.5], HAMMING2)
    neg = np.array([[[1.2, -0.2], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]])
    with pytest.raises(cd.NotAProbability):
        cd.validate_channel(neg, [0.6, 0.4], HAMMING2)


def test_validate_channel_rejects_declared_size_mismatch():
    model = cd.scalar_multiplicative_model(0.4)
    with pytest.raises(cd.DimensionMismatch):
        cd.validate_channel(model.transition, model.state_prior, model.distortion, input_size=3)
    with pytest.raises(cd.DimensionMismatch):
        cd.validate_channel(model.transition, [0.5, 0.3, 0.2], model.distortion)
    with pytest.raises(cd.DimensionMismatch):
        cd.validate_channel(model.transition, model.state_prior, [[0.0]])


def test_validate_channel_rejects_bad_distortion():
    model = cd.scalar_multiplicative_model(0.4)
    with pytest.raises(cd.NegativeDistortion):
        cd.validate_channel(model.transition, model.state_prior, [[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(cd.NegativeDistortion):
        cd.validate_channel(model.transition, model.state_prior, [[0.0, math.inf], [1.0, 0.0]])


def test_input_distribution_validates():
    px = cd.InputDistribution([0.25, 0.75])
    assert np.allclose(px.probs, [0.25, 0.75])
    with pytest.raises(cd.NotAProbability):
        cd.InputDistribution([0.5, 0.6])
    with pytest.raises(cd.NotAProbability):
        cd.InputDistribution([-0.1, 1.1])


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------


def test_optimal_estimator_scalar_family():
    # Silent input: the best guess is the prior mode, costing the minority mass.
    model = cd.scalar_multiplicative_model(0.4)
    policy = cd.optimal_estimator(model)
    assert policy.table[0, 0] == 0          # y=0 after x=0: guess the majority state
    assert policy.table[1, 0] == 0          # y=0 after x=1 reveals s=0
    assert policy.table[1, 1] == 1          # y=1 after x=1 reveals s=1
    assert policy.cost_vector[0] == pytest.approx(0.4, abs=1e-15)
    assert policy.cost_vector[1] == pytest.approx(0.0, abs=1e-15)
    assert not policy.reachable[0, 1]       # y=1 impossible after x=0
    assert policy.reachable[0, 0]


def test_optimal_estimator_tie_breaks_to_smallest_state():
    # r = 0.5 makes both states equally likely after the silent input.
    model = cd.scalar_multiplicative_model(0.5)
    policy = cd.optimal_estimator(model)
    assert policy.table[0, 0] == 0


def test_optimal_estimator_beats_random_tables():
    rng = np.random.default_rng(7)
    for _ in range(25):
        nx, ns, ny = rng.integers(2, 4, size=3)
        model = _random_channel(rng, nx, ns, ny)
        policy = cd.optimal_estimator(model)
        weight = model.transition * model.state_prior[None, :, None]
        for _ in range(8):
            table = rng.integers(0, ns, size=(nx, ny))
            cost = np.zeros(nx)
            for x in range(nx):
                for y in range(ny):
                    cost[x] += weight[x, :, y] @ model.distortion[:, table[x, y]]
            assert np.all(policy.cost_vector <= cost + 1e-12)


def test_estimator_cost_zero_when_output_reveals_state():
    model = cd.additive_mod2_model(0.3)
    policy = cd.optimal_estimator(model)
    assert np.allclose(policy.cost_vector, 0.0, atol=1e-15)


def test_average_cost_matches_direct_sum():
    model = cd.scalar_multiplicative_model(0.3)
    policy = cd.optimal_estimator(model)
    px = cd.InputDistribution([0.2, 0.8])
    assert cd.average_cost(px, policy) == pytest.approx(0.2 * 0.3, abs=1e-15)


# ---------------------------------------------------------------------------
# information measures
# ---------------------------------------------------------------------------


def test_mutual_information_known_value():
    # Frozen scratch value: I at the D=0.1 optimizer of the r=0.4 channel.
    model = cd.scalar_multiplicative_model(0.4)
    mi = cd.mutual_information(model, cd.InputDistribution([0.25, 0.75]))
    assert mi == pytest.approx(0.10610555179795111, abs=1e-12)


def test_mutual_information_bounds_and_degenerate_cases():
    rng = np.random.default_rng(11)
    for _ in range(40):
        nx, ns, ny = rng.integers(2, 4, size=3)
        model = _random_channel(rng, nx, ns, ny)
        p = rng.random(nx) + 1e-6
        p /= p.sum()
        mi = cd.mutual_information(model, cd.InputDistribution(p))
        assert 0.0 <= mi <= math.log(min(nx, ny)) + 1e-12
    # Point mass carries no information.
    model = cd.scalar_multiplicative_model(0.4)
    assert cd.mutual_information(model, cd.InputDistribution([1.0, 0.0])) == 0.0


def test_output_marginal_and_state_posterior():
    model = cd.scalar_multiplicative_model(0.4)
    py = cd.output_marginal(model, cd.InputDistribution([0.5, 0.5]))
    assert py == pytest.approx([0.8, 0.2], abs=1e-15)
    post = cd.state_posterior(model, 1, 1)  # x=1, y=1 forces s=1
    assert post == pytest.approx([0.0, 1.0], abs=1e-15)
    post0 = cd.state_posterior(model, 0, 0)  # silent input: posterior = prior
    assert post0 == pytest.approx([0.6, 0.4], abs=1e-15)
    with pytest.raises(cd.ZeroProbabilityConditioning):
        cd.state_posterior(model, 0, 1)


# ---------------------------------------------------------------------------
# block builder
# ---------------------------------------------------------------------------


def test_block_builder_shapes_and_normalization():
    for K in (1, 2, 3):
        model = cd.block_multiplicative_model(0.3, K)
        assert model.input_size == 2**K
        assert model.output_size == 2**K
        assert model.state_size == 2
        assert np.allclose(model.transition.sum(axis=2), 1.0, atol=1e-12)


def test_block_builder_shares_one_state_across_positions():
    model = cd.block_multiplicative_model(0.3, 2)
    # Input block (1,1) is index 3 (big-endian); y must equal (s,s).
    assert model.transition[3, 0, 0] == pytest.approx(1.0)   # s=0 -> y=(0,0)
    assert model.transition[3, 1, 3] == pytest.approx(1.0)   # s=1 -> y=(1,1)
    # Mixed block (0,1) is index 1; s=1 gives y=(0,1), index 1.
    assert model.transition[1, 1, 1] == pytest.approx(1.0)
    # Every nonzero block reveals the state, so only the silent block costs.
    policy = cd.optimal_estimator(model)
    assert policy.cost_vector[0] == pytest.approx(0.3, abs=1e-15)
    assert np.allclose(policy.cost_vector[1:], 0.0, atol=1e-15)


def test_block_builder_matches_kron_of_rows():
    rng = np.random.default_rng(3)
    base = cd.scalar_multiplicative_model(0.25)
    model = cd.block_to_super_symbol(base, 2)
    for x in range(4):
        x1, x2 = divmod(x, 2)
        for s in range(2):
            expect = np.kron(base.transition[x1, s], base.transition[x2, s])
            assert np.allclose(model.transition[x, s], expect, atol=1e-15)
    del rng


def test_block_builder_overflow_guard():
    base = cd.scalar_multiplicative_model(0.3)
    with pytest.raises(cd.AlphabetOverflow):
        cd.block_to_super_symbol(base, 3, cap=7)
