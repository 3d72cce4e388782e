"""Convex cost-function experts.

Every expert here is a scaled log-partition function over the payoff rows
of its market,

    C(q) = s * log sum_o exp(rho(o) . q / s),

which is the LMSR for Arrow-Debreu markets and the pair-betting cost over
permutations otherwise.  Gradients, Hessians and liabilities are exact;
pair-betting sums enumerate every permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from .numerics import logsumexp, softmax

from .errors import InvalidScaleError
from .market import MarketDef, arrow_debreu

CONJUGATE_T_CAP = 50.0
CONJUGATE_TOL = 1e-10


@dataclass(frozen=True)
class CostExpert:
    """One scaled log-partition cost.

    ``anchored=True`` subtracts ``C(0)`` so that the expert costs nothing at
    the origin.  Prices, Hessians, slippage and liability are unaffected;
    only level comparisons between experts (and hence mixture posteriors)
    change.
    """

    market: MarketDef
    scale: float
    anchored: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise InvalidScaleError(f"scale must be positive, got {self.scale!r}")

    @property
    def kind(self) -> str:
        return "lmsr" if self.market.kind == "arrow_debreu" else "pair_betting"

    @property
    def origin_cost(self) -> float:
        """Unanchored cost at q = 0, i.e. ``s * log |O|``."""
        return self.scale * math.log(self.market.n_outcomes)

    @property
    def offset(self) -> float:
        return self.origin_cost if self.anchored else 0.0

    def _logits(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.market.kind == "arrow_debreu":
            return q / self.scale
        return q @ self.market.payoffs.T / self.scale

    def cost(self, q) -> float:
        return float(self.scale * logsumexp(self._logits(q)) - self.offset)

    def cost_batch(self, states) -> np.ndarray:
        """Costs of many states at once; ``states`` has shape (n, d)."""
        z = self._logits(np.atleast_2d(states))
        return self.scale * logsumexp(z, axis=-1) - self.offset

    def outcome_probs(self, q) -> np.ndarray:
        """Gibbs distribution over outcomes at ``q`` (the dual point)."""
        return softmax(self._logits(q))

    def price(self, q) -> np.ndarray:
        p = self.outcome_probs(q)
        if self.market.kind == "arrow_debreu":
            return p
        return p @ self.market.payoffs

    def hessian(self, q) -> np.ndarray:
        p = self.outcome_probs(q)
        rows = self.market.payoffs
        mean = p @ rows
        second = (rows * p[:, None]).T @ rows
        return (second - np.outer(mean, mean)) / self.scale

    def liability(self, q) -> float:
        """Worst-case payout net of the cost collected since the origin."""
        q = np.asarray(q, dtype=float)
        exposure = float(np.max(self.market.payoffs @ q))
        return exposure - (self.cost(q) - self.cost(np.zeros_like(q)))

    def conjugate_bound(self) -> float:
        """max_o C*(rho(o)), approached by a line search along each payoff ray."""
        best = -math.inf
        for row in self.market.payoffs:
            prev = -math.inf
            t = 0.0
            while t <= CONJUGATE_T_CAP * self.scale:
                value = float(row @ (t * row)) - self.cost(t * row)
                if value - prev < CONJUGATE_TOL and t > 0:
                    prev = max(prev, value)
                    break
                prev = value
                t += self.scale
            best = max(best, prev)
        return best


def lmsr(b: float, k: int = 2, anchored: bool = False) -> CostExpert:
    return CostExpert(arrow_debreu(k), b, anchored)


def perspective_scale(base: CostExpert, eta: float) -> CostExpert:
    """Return the expert computing ``eta * C(q / eta)``."""
    if not (math.isfinite(eta) and eta > 0):
        raise InvalidScaleError(f"perspective scale must be positive, got {eta!r}")
    return replace(base, scale=base.scale * eta)


def payoff_diameter_sq(market: MarketDef) -> float:
    """Largest squared Euclidean distance between two payoff vectors."""
    rows = market.payoffs
    sq = np.sum(rows * rows, axis=1)
    dist = sq[:, None] + sq[None, :] - 2.0 * rows @ rows.T
    return float(dist.max())


def smoothness(expert: CostExpert) -> float:
    """Euclidean smoothness constant of a log-partition expert.

    The Hessian is a payoff covariance divided by the scale, and the
    variance of ``u . rho`` for a unit ``u`` is at most a quarter of the
    squared payoff diameter.  For the K-outcome LMSR this is ``1 / (2 b)``.
    """
    return payoff_diameter_sq(expert.market) / (4.0 * expert.scale)
