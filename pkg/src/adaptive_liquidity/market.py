"""Outcome spaces, payoff maps and simplex weight vectors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidOutcomeError, InvalidWeightsError, MarketError

SIMPLEX_TOL = 1e-12
MAX_PERMUTATION_SIZE = 6


@dataclass(frozen=True, eq=False)
class MarketDef:
    """A finite outcome space together with its payoff map.

    ``payoffs`` has one row per outcome; row ``o`` is the payoff vector
    paid out on an inventory of one share in every coordinate when ``o``
    occurs.  Use :func:`arrow_debreu` or :func:`pair_betting` to build one.
    """

    kind: str
    payoffs: np.ndarray = field(repr=False)
    labels: tuple = field(default=(), repr=False)

    def __post_init__(self):
        payoffs = np.array(self.payoffs, dtype=float)
        if payoffs.ndim != 2 or payoffs.shape[0] == 0 or payoffs.shape[1] == 0:
            raise MarketError("payoff matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(payoffs)):
            raise MarketError("payoff vectors must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(payoffs.shape[0])))

    @property
    def d(self) -> int:
        return self.payoffs.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.payoffs.shape[0]

    @property
    def outcomes(self) -> range:
        return range(self.n_outcomes)

    def payoff(self, o: int) -> np.ndarray:
        if not isinstance(o, (int, np.integer)) or not 0 <= o < self.n_outcomes:
            raise InvalidOutcomeError(f"unknown outcome {o!r}")
        return self.payoffs[o]

    @property
    def is_binary_arrow_debreu(self) -> bool:
        return self.kind == "arrow_debreu" and self.d == 2

    def __eq__(self, other):
        if not isinstance(other, MarketDef):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.payoffs, other.payoffs)

    def __hash__(self):
        return hash((self.kind, self.payoffs.shape, self.payoffs.tobytes()))


def arrow_debreu(k: int) -> MarketDef:
    """Categorical market on ``k`` outcomes with payoffs ``e_i``."""
    if k < 1:
        raise MarketError("need at least one outcome")
    return MarketDef("arrow_debreu", np.eye(k))


def ordered_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def pair_betting(n: int) -> MarketDef:
    """Pair-betting market over the permutations of ``n`` items.

    Outcomes are the permutations of ``range(n)`` in lexicographic order;
    a permutation ``sigma`` assigns rank ``sigma[i]`` to item ``i``.  The
    coordinate for ordered pair ``(i, j)`` pays 1 iff ``sigma[i] < sigma[j]``.
    """
    if not 2 <= n <= MAX_PERMUTATION_SIZE:
        raise MarketError(f"pair betting supports 2 <= n <= {MAX_PERMUTATION_SIZE}")
    perms = list(itertools.permutations(range(n)))
    pairs = ordered_pairs(n)
    rows = np.array(
        [[1.0 if sigma[i] < sigma[j] else 0.0 for i, j in pairs] for sigma in perms]
    )
    return MarketDef("pair_betting", rows, labels=tuple(perms))


def payoff_matrix(m: MarketDef) -> np.ndarray:
    """Rows are payoff vectors, one per outcome (read-only view)."""
    return m.payoffs


def normalize_weights(v) -> np.ndarray:
    """Scale a nonnegative vector onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidWeightsError("weights must be a nonempty vector")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InvalidWeightsError("weights must be finite and nonnegative")
    total = v.sum()
    if total <= 0:
        raise InvalidWeightsError("weights have no positive mass")
    return v / total


def check_weights(w, size: int | None = None, floor: float = 0.0) -> np.ndarray:
    """Validate simplex membership (and an optional per-entry floor)."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or (size is not None and w.size != size):
        raise InvalidWeightsError(f"expected a weight vector of length {size}, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidWeightsError("weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidWeightsError(f"weights sum to {w.sum()!r}, not 1")
    if floor > 0 and np.any(w < floor):
        raise InvalidWeightsError(f"weight floor {floor} violated (min {w.min()!r})")
    return w
