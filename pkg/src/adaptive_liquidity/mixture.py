"""Log-sum-exp mixture of cost experts.

    C_mix(q; w) = (1/beta) log sum_k w_k exp(beta C_k(q))

The posterior pi(q; w) is the softmax of ``log w_k + beta C_k(q)`` and
plays the role of pricing weights: the mixed price is the pi-average of
expert prices.  Norms in the smoothness bound are Euclidean on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from .numerics import logsumexp

from .errors import InvalidWeightsError, MarketError
from .experts import CostExpert, smoothness
from .market import check_weights

WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class MixtureSpec:
    experts: tuple[CostExpert, ...]
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "experts", tuple(self.experts))
        if not self.experts:
            raise MarketError("a mixture needs at least one expert")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise MarketError(f"beta must be positive, got {self.beta!r}")
        market = self.experts[0].market
        if any(e.market != market for e in self.experts[1:]):
            raise MarketError("all experts must share one market")

    @property
    def market(self):
        return self.experts[0].market

    @property
    def m(self) -> int:
        return len(self.experts)

    @property
    def scales(self) -> np.ndarray:
        return np.array([e.scale for e in self.experts])


def lmsr_mixture(scales, beta: float = 1.0, k: int = 2, anchored: bool = False) -> MixtureSpec:
    from .experts import lmsr

    return MixtureSpec(tuple(lmsr(b, k, anchored) for b in scales), beta)


def expert_costs(spec: MixtureSpec, q) -> np.ndarray:
    return np.array([e.cost(q) for e in spec.experts])


def expert_prices(spec: MixtureSpec, q) -> np.ndarray:
    """Matrix of expert gradients, one row per expert."""
    return np.array([e.price(q) for e in spec.experts])


def _log_weights(spec: MixtureSpec, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.m,):
        raise InvalidWeightsError(f"expected {spec.m} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
        raise InvalidWeightsError("weights must be nonnegative with positive mass")
    with np.errstate(divide="ignore"):
        return np.log(w)


def mix_cost(spec: MixtureSpec, q, w) -> float:
    lw = _log_weights(spec, w)
    return float(logsumexp(lw + spec.beta * expert_costs(spec, q)) / spec.beta)


def mix_cost_batch(spec: MixtureSpec, states, w) -> np.ndarray:
    """C_mix evaluated on every row of ``states``."""
    lw = _log_weights(spec, w)
    costs = np.stack([e.cost_batch(states) for e in spec.experts], axis=-1)
    return logsumexp(lw + spec.beta * costs, axis=-1) / spec.beta


def _posterior_from_costs(spec: MixtureSpec, costs, w) -> np.ndarray:
    z = _log_weights(spec, w) + spec.beta * costs
    return np.exp(z - logsumexp(z))


def posterior(spec: MixtureSpec, q, w) -> np.ndarray:
    return _posterior_from_costs(spec, expert_costs(spec, q), w)


def mix_grad(spec: MixtureSpec, q, w) -> np.ndarray:
    return posterior(spec, q, w) @ expert_prices(spec, q)


def mix_hessian(spec: MixtureSpec, q, w) -> np.ndarray:
    pi = posterior(spec, q, w)
    grads = expert_prices(spec, q)
    mean = pi @ grads
    centered = grads - mean
    spread = (centered * pi[:, None]).T @ centered
    curv = sum(p * e.hessian(q) for p, e in zip(pi, spec.experts))
    return curv + spec.beta * spread


def gradient_bound(spec: MixtureSpec) -> float:
    """Largest Euclidean norm of a payoff vector; bounds every expert price."""
    return float(np.max(np.linalg.norm(spec.market.payoffs, axis=1)))


def smoothness_constant(spec: MixtureSpec, grad_bound: float) -> float:
    """L_max + beta * G**2 for the mixed potential."""
    l_max = max(smoothness(e) for e in spec.experts)
    return l_max + spec.beta * grad_bound**2


def weight_gradient(spec: MixtureSpec, q, w) -> np.ndarray:
    """Gradient of C_mix(q; .) in the weights: exp(beta C_k) / (beta Z)."""
    costs = expert_costs(spec, q)
    z = logsumexp(_log_weights(spec, w) + spec.beta * costs)
    return np.exp(spec.beta * costs - z) / spec.beta


def weight_update_bound(spec: MixtureSpec, q, w_old, w_new, floor: float = WEIGHT_FLOOR) -> float:
    """First-order (concavity) upper bound on C_mix(q; w_new) - C_mix(q; w_old)."""
    w_old = check_weights(w_old, spec.m, floor)
    w_new = check_weights(w_new, spec.m, floor)
    return float(weight_gradient(spec, q, w_old) @ (w_new - w_old))
