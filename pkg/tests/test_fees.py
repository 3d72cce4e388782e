import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptive_liquidity.errors import ConfigError
from adaptive_liquidity.experts import CostExpert
from adaptive_liquidity.fees import (
    FeePolicy,
    GridSpec,
    fee_global,
    fee_pathwise,
    fee_restricted,
    grid_states,
    reduced_states,
)
from adaptive_liquidity.market import pair_betting
from adaptive_liquidity.mixture import MixtureSpec, lmsr_mixture, mix_cost

SPEC = lmsr_mixture((1.0, 12.0))
HALF = np.array([0.5, 0.5])
SHIFT = np.array([0.9, 0.1])
DROP_AT_ORIGIN = 1.605541171020043  # log 2049 - log 411.4, mpmath

simplex2 = st.floats(1e-3, 1 - 1e-3).map(lambda a: np.array([a, 1 - a]))


def test_identical_weights_cost_nothing():
    assert fee_global(SPEC, HALF, HALF) == 0.0
    assert fee_pathwise(SPEC, [3, 1], HALF, HALF) == 0.0


def test_shift_toward_larger_cost_is_free():
    assert fee_global(SPEC, HALF, [1e-12, 1 - 1e-12]) == 0.0


def test_shift_toward_low_liquidity():
    fee = fee_global(SPEC, HALF, SHIFT)
    assert fee_pathwise(SPEC, [0, 0], HALF, SHIFT) == pytest.approx(DROP_AT_ORIGIN, abs=1e-12)
    assert fee >= DROP_AT_ORIGIN - 1e-12
    xs = GridSpec().points()
    brute = max(mix_cost(SPEC, [x, 0], HALF) - mix_cost(SPEC, [x, 0], SHIFT) for x in xs)
    assert fee == pytest.approx(brute, abs=1e-12)


def test_restricted_examples():
    full = grid_states(SPEC, GridSpec())
    assert fee_restricted(SPEC, HALF, SHIFT, full) == pytest.approx(fee_global(SPEC, HALF, SHIFT), abs=1e-14)
    assert fee_restricted(SPEC, HALF, SHIFT, [[0.0, 0.0]]) == pytest.approx(
        fee_pathwise(SPEC, [0, 0], HALF, SHIFT), abs=1e-14
    )
    assert fee_restricted(SPEC, HALF, SHIFT, full[::7]) <= fee_global(SPEC, HALF, SHIFT) + 1e-12


@given(simplex2, simplex2, st.integers(1, 20))
def test_restricted_monotone_in_region(u, v, stride):
    full = grid_states(SPEC, GridSpec(count=501))
    assert fee_restricted(SPEC, u, v, full[::stride]) <= fee_restricted(SPEC, u, v, full) + 1e-12


@given(simplex2, simplex2, st.floats(-140, 140))
def test_nonnegative_and_dominating(u, v, x):
    fee = fee_global(SPEC, u, v)
    assert fee >= 0
    assert fee_pathwise(SPEC, [x, 0], u, v) >= 0
    for q in reduced_states(GridSpec(count=101).points()):
        assert mix_cost(SPEC, q, u) <= mix_cost(SPEC, q, v) + fee + 1e-9


def test_pathwise_below_global_on_grid():
    rng = np.random.default_rng(0)
    xs = GridSpec().points()
    for _ in range(50):
        u, v = rng.dirichlet([1, 1]), rng.dirichlet([1, 1])
        x = rng.choice(xs)
        assert fee_pathwise(SPEC, [x, 0], u, v) <= fee_global(SPEC, u, v) + 1e-12


def test_grid_resolution_stability():
    rng = np.random.default_rng(1)
    fine = GridSpec(count=10001)
    for _ in range(20):
        u, v = rng.dirichlet([1, 1]), rng.dirichlet([1, 1])
        assert abs(fee_global(SPEC, u, v) - fee_global(SPEC, u, v, fine)) < 1e-3


def test_grid_validation():
    with pytest.raises(ConfigError):
        GridSpec(count=0)
    with pytest.raises(ConfigError):
        GridSpec(lo=1, hi=0)
    with pytest.raises(ConfigError):
        fee_restricted(SPEC, HALF, SHIFT, np.empty((0, 2)))
    pb = MixtureSpec((CostExpert(pair_betting(3), 1.0), CostExpert(pair_betting(3), 4.0)))
    with pytest.raises(ConfigError):
        fee_global(pb, HALF, SHIFT)
    with pytest.raises(ConfigError):
        FeePolicy("bogus")


def test_explicit_grid_for_pair_betting():
    pb = MixtureSpec((CostExpert(pair_betting(3), 1.0), CostExpert(pair_betting(3), 4.0)))
    states = np.vstack([np.zeros(6), np.random.default_rng(2).normal(scale=5, size=(200, 6))])
    fee = fee_global(pb, HALF, SHIFT, states)
    assert fee >= fee_pathwise(pb, np.zeros(6), HALF, SHIFT) > 0


def test_policy_variants():
    q_prev, q_next = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    path = FeePolicy("pathwise").fee(SPEC, q_prev, q_next, HALF, SHIFT)
    restr = FeePolicy("restricted", radius=5.0).fee(SPEC, q_prev, q_next, HALF, SHIFT)
    glob = FeePolicy().fee(SPEC, q_prev, q_next, HALF, SHIFT)
    assert path <= restr + 1e-12 <= glob + 2e-12
    assert path == pytest.approx(fee_pathwise(SPEC, q_next, HALF, SHIFT))
