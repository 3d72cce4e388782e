"""Switch-budget fees charged when the mixture weights move.

The global fee is the positive part of the largest drop of the mixed
potential, sup_q [C_mix(q; w_old) - C_mix(q; w_new)]_+, evaluated on a
grid.  For binary LMSR mixtures the supremum reduces to the coordinate
x = q_1 - q_2 (translation invariance), evaluated at q = (x, 0).  For any
other market the caller supplies explicit states and the result is a
lower approximation of the true supremum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .market import check_weights
from .mixture import WEIGHT_FLOOR, MixtureSpec, _log_weights, mix_cost

FEE_VARIANTS = ("global_grid", "restricted", "pathwise")


@dataclass(frozen=True)
class GridSpec:
    """Linearly spaced reduced coordinates ``x = q_1 - q_2``."""

    lo: float = -140.0
    hi: float = 140.0
    count: int = 5001

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("fee grid must contain at least one point")
        if self.count > 1 and not self.hi > self.lo:
            raise ConfigError("fee grid needs hi > lo")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "count": self.count}


def reduced_states(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    return np.column_stack([x, np.zeros_like(x)])


def grid_states(spec: MixtureSpec, grid) -> np.ndarray:
    """Resolve a GridSpec (binary LMSR only) or an explicit state array."""
    if isinstance(grid, GridSpec):
        if not spec.market.is_binary_arrow_debreu:
            raise ConfigError("a reduced 1-d grid is only valid for binary LMSR mixtures")
        return reduced_states(grid.points())
    states = np.atleast_2d(np.asarray(grid, dtype=float))
    if states.size == 0:
        raise ConfigError("empty fee grid")
    if states.shape[1] != spec.market.d:
        raise ConfigError(f"grid states must have {spec.market.d} columns")
    return states


@lru_cache(maxsize=32)
def _cached_kernel(spec: MixtureSpec, grid: GridSpec) -> np.ndarray:
    out = _kernel(spec, grid_states(spec, grid))
    out.setflags(write=False)
    return out


def _kernel(spec: MixtureSpec, states) -> np.ndarray:
    """exp(beta C_k(q)) per state, divided by its row maximum."""
    z = spec.beta * np.stack([e.cost_batch(states) for e in spec.experts], axis=-1)
    return np.exp(z - z.max(axis=-1, keepdims=True))


def potential_drop(spec: MixtureSpec, states, w_old, w_new) -> np.ndarray:
    """C_mix(q; w_old) - C_mix(q; w_new) on each state (or on a GridSpec).

    The drop only depends on the ratio of the two weighted sums of
    exp(beta C_k), so the row-normalized kernel is computed once per
    (spec, grid) and every round costs two mat-vecs.
    """
    if isinstance(states, GridSpec):
        kernel = _cached_kernel(spec, states)
    else:
        kernel = _kernel(spec, grid_states(spec, states))
    old = kernel @ np.exp(_log_weights(spec, w_old))
    new = kernel @ np.exp(_log_weights(spec, w_new))
    return np.log(old / new) / spec.beta


def fee_global(spec: MixtureSpec, w_old, w_new, grid=GridSpec(), floor: float = WEIGHT_FLOOR) -> float:
    check_weights(w_old, spec.m, floor)
    check_weights(w_new, spec.m, floor)
    return max(float(np.max(potential_drop(spec, grid, w_old, w_new))), 0.0)


def fee_restricted(spec: MixtureSpec, w_old, w_new, region_grid, floor: float = WEIGHT_FLOOR) -> float:
    """Same as :func:`fee_global` but over the reachable region only."""
    return fee_global(spec, w_old, w_new, region_grid, floor)


def fee_pathwise(spec: MixtureSpec, q_t, w_old, w_new, floor: float = WEIGHT_FLOOR) -> float:
    check_weights(w_old, spec.m, floor)
    check_weights(w_new, spec.m, floor)
    return max(mix_cost(spec, q_t, w_old) - mix_cost(spec, q_t, w_new), 0.0)


@dataclass(frozen=True)
class FeePolicy:
    """Which switch budget the engine charges.

    ``radius`` only matters for the restricted variant: the region is the
    set of grid states within ``radius`` (sup-norm, or reduced coordinate
    for 1-d grids) of the post-trade state, plus the pre- and post-trade
    states themselves.
    """

    variant: str = "global_grid"
    grid: object = field(default_factory=GridSpec)
    radius: float = 10.0

    def __post_init__(self):
        if self.variant not in FEE_VARIANTS:
            raise ConfigError(f"unknown fee variant {self.variant!r}")

    def fee(self, spec: MixtureSpec, q_prev, q_next, w_old, w_new) -> float:
        if self.variant == "pathwise":
            return fee_pathwise(spec, q_next, w_old, w_new)
        if self.variant == "global_grid":
            return fee_global(spec, w_old, w_new, self.grid)
        states = grid_states(spec, self.grid)
        q_prev = np.asarray(q_prev, dtype=float)
        q_next = np.asarray(q_next, dtype=float)
        if isinstance(self.grid, GridSpec):
            x = q_next[0] - q_next[1]
            near = states[np.abs(states[:, 0] - x) <= self.radius]
            exact = reduced_states([q_prev[0] - q_prev[1], x])
        else:
            near = states[np.max(np.abs(states - q_next), axis=1) <= self.radius]
            exact = np.vstack([q_prev, q_next])
        return fee_restricted(spec, w_old, w_new, np.vstack([near, exact]))
