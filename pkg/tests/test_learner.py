import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from adaptive_liquidity.errors import InvalidBudgetError, InvalidLossError, MarketError, ShapeError
from adaptive_liquidity.learner import (
    DEFAULT_PROFILES,
    LearnerConfig,
    MetaExpertGrid,
    best_switching_comparator,
    brute_force_comparator,
    count_switches,
    fixed_share_run,
    fixed_share_update,
    learner_regret,
    marginal_liquidity_weights,
    meta_losses,
    switching_complexity,
    tracking_bound,
)

GRID = MetaExpertGrid(2, DEFAULT_PROFILES)
S_EX = np.array([0.120115, 0.010911])
L_EX = np.array([0.686445, 0.3])


def test_grid_indexing():
    assert GRID.size == 10
    for k, m in itertools.product(range(2), range(5)):
        assert GRID.unflat(GRID.flat(k, m)) == (k, m)
    with pytest.raises(MarketError):
        MetaExpertGrid(2, ((1.0, 0.0),))


def test_meta_loss_examples():
    assert_allclose(meta_losses([0.3, 0.3], [0, 0], GRID), 0.0)
    losses = meta_losses(S_EX, L_EX, GRID, (1.0, 4.0))
    # inputs are given to six digits; expected values follow from the formula directly
    assert losses[GRID.flat(0, 2)] == pytest.approx(1.5 * 0.054602 + 1.5 * 0.686445 / 4, abs=1e-12)
    assert losses[GRID.flat(0, 2)] == pytest.approx(0.339320, abs=5e-7)
    assert losses[GRID.flat(0, 4)] == pytest.approx(0.2 * 0.054602 + 6 * 0.686445 / 4, abs=1e-12)
    assert losses[GRID.flat(0, 4)] == pytest.approx(1.040587, abs=1e-6)
    with pytest.raises(ShapeError):
        meta_losses([0.1], [0.1, 0.2], GRID)


def test_fixed_share_examples():
    assert_allclose(fixed_share_update([0.2, 0.8], [0.7, 0.7], LearnerConfig(0.5, 0.0)), [0.2, 0.8], atol=1e-15)
    assert_allclose(
        fixed_share_update([0.5, 0.5], [0, 1], LearnerConfig(0.5, 0.0)), [0.6224593312018546, 0.3775406687981454], atol=1e-15
    )
    assert_allclose(fixed_share_update([0.5, 0.5], [0, 1], LearnerConfig(0.5, 0.1)), [0.610213, 0.389787], atol=5e-7)
    with pytest.raises(InvalidLossError):
        fixed_share_update([0.5, 0.5], [0, np.inf], LearnerConfig())


@given(
    st.lists(st.floats(0, 50), min_size=2, max_size=8),
    st.floats(1e-4, 2),
    st.floats(0, 1),
    st.floats(-100, 100),
)
def test_fixed_share_properties(losses, eta, alpha, shift):
    losses = np.array(losses)
    w = np.full(losses.size, 1 / losses.size)
    cfg = LearnerConfig(eta, alpha)
    out = fixed_share_update(w, losses, cfg)
    assert abs(out.sum() - 1) <= 1e-12
    assert np.all(out >= alpha / losses.size - 1e-15)
    assert_allclose(fixed_share_update(w, losses + shift, cfg), out, atol=1e-12)


def test_clip_mode():
    cfg = LearnerConfig(1.0, 0.0, U=1.0)
    assert_allclose(fixed_share_update([0.5, 0.5], [5.0, 1.0], cfg, clip=True), [0.5, 0.5])


def test_marginal_examples():
    assert_allclose(marginal_liquidity_weights(GRID.uniform(), GRID), [0.5, 0.5])
    one_hot = np.eye(10)[7]
    assert_allclose(marginal_liquidity_weights(one_hot, GRID), [0, 1])
    meta = np.array([0.07] * 5 + [0.13] * 5)
    assert_allclose(marginal_liquidity_weights(meta, GRID), [0.35, 0.65])


def test_tracking_bound_examples():
    assert tracking_bound(50, 1, 0) == 0.0
    assert tracking_bound(100, 2, 1) == pytest.approx(37.36686824248048, abs=1e-10)
    assert tracking_bound(100, 2, 1) == pytest.approx(37.367, abs=5e-4)
    for T in (1, 7, 400):
        assert tracking_bound(T, 2, 0) == pytest.approx(math.sqrt(2 * T * math.log(2)))
    assert tracking_bound(100, 2, 1, U=3.0) == pytest.approx(3 * tracking_bound(100, 2, 1))
    with pytest.raises(InvalidBudgetError):
        tracking_bound(5, 2, 5)
    with pytest.raises(InvalidBudgetError):
        switching_complexity(0, 2, 0)


def test_tuned_config():
    cfg = LearnerConfig.tuned(256, 5, 2)
    A = 3 * math.log(5) + 2 * math.log(math.e * 255 / 2)
    assert cfg.eta == pytest.approx(math.sqrt(8 * A / 256))
    assert cfg.alpha == pytest.approx(2 / 255)


def test_comparator_examples():
    losses = np.array([[0, 1], [1, 0], [0, 1]], dtype=float)
    assert best_switching_comparator(losses, 0) == (1.0, [0, 0, 0])
    assert best_switching_comparator(losses, 2) == (0.0, [0, 1, 0])
    rng = np.random.default_rng(0)
    big = rng.uniform(size=(12, 4))
    assert best_switching_comparator(big, 11)[0] == pytest.approx(big.min(axis=1).sum())
    with pytest.raises(InvalidBudgetError):
        best_switching_comparator(losses, -1)


def test_comparator_ties_prefer_low_index():
    total, seq = best_switching_comparator(np.zeros((4, 3)), 2)
    assert total == 0.0 and seq == [0, 0, 0, 0]


@pytest.mark.parametrize("T", range(1, 9))
def test_dp_equals_brute_force_full_sweep(T):
    rng = np.random.default_rng(T)
    for M in (1, 2, 3):
        for J in range(0, min(3, T - 1) + 1):
            # integer losses force ties, exercising the tie-break rule
            for losses in (rng.uniform(size=(T, M)), rng.integers(0, 3, size=(T, M)).astype(float)):
                dp = best_switching_comparator(losses, J)
                bf = brute_force_comparator(losses, J)
                assert dp[0] == pytest.approx(bf[0], abs=1e-12)
                assert dp[1] == bf[1]
                assert count_switches(dp[1]) <= J


def test_fixed_share_regret_below_bound():
    rng = np.random.default_rng(11)
    T, M = 256, 5
    for J in (0, 1, 2):
        for _ in range(5):
            losses = rng.uniform(size=(T, M))
            w = fixed_share_run(losses, LearnerConfig.tuned(T, M, J), clip=True)
            assert learner_regret(losses, w, J) <= tracking_bound(T, M, J)


def test_fixed_share_run_starts_uniform():
    w = fixed_share_run(np.ones((3, 4)), LearnerConfig())
    assert_allclose(w[0], 0.25)
