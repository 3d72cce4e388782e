"""The adaptive market maker: round protocol, payments and loss accounting.

Each round follows the same order: the current weights w_t are fixed, a
trade r_t arrives, the inventory moves to q_t = q_{t-1} + r_t, the weights
are updated to w_{t+1}, and the trader pays

    C_mix(q_t; w_{t+1}) - C_mix(q_{t-1}; w_t) + fee_t

where the fee depends on (w_t, w_{t+1}) through the configured FeePolicy.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InfeasibleTargetError, PoisonedStateError, ShapeError
from .fees import FeePolicy
from .market import MarketDef, check_weights
from .mixture import (
    WEIGHT_FLOOR,
    MixtureSpec,
    expert_prices,
    mix_cost,
    mix_grad,
    mix_hessian,
    posterior,
)


@dataclass(frozen=True)
class TradeDiagnostics:
    """Everything the learner may look at before choosing w_{t+1}."""

    q_prev: np.ndarray
    q_next: np.ndarray
    w: np.ndarray
    slippage: np.ndarray
    liability: np.ndarray
    pi_before: np.ndarray
    pi_after: np.ndarray
    grads_prev: np.ndarray

    @property
    def trade(self) -> np.ndarray:
        return self.q_next - self.q_prev


@dataclass(frozen=True)
class RoundRecord:
    t: int
    trade: np.ndarray
    q_prev: np.ndarray
    q_next: np.ndarray
    w_before: np.ndarray
    w_after: np.ndarray
    payment: float
    fee: float
    cost_before: float
    cost_after: float
    pi_before: np.ndarray
    pi_after: np.ndarray
    slippage: np.ndarray
    liability: np.ndarray
    grads_prev: np.ndarray


@dataclass
class EngineState:
    q: np.ndarray
    w: np.ndarray
    z: float = 0.0
    t: int = 0
    ledger: list = field(default_factory=list)
    poisoned: bool = False


def expert_slippages(experts, q_prev, q_next) -> np.ndarray:
    r = np.asarray(q_next, dtype=float) - np.asarray(q_prev, dtype=float)
    return np.array(
        [e.cost(q_next) - e.cost(q_prev) - e.price(q_prev) @ r for e in experts]
    )


class AdaptiveMarket:
    """Single-writer market state machine over a mixture of experts."""

    def __init__(
        self,
        spec: MixtureSpec,
        w1,
        q0=None,
        policy: FeePolicy | None = None,
        weight_floor: float = WEIGHT_FLOOR,
    ):
        self.spec = spec
        self.policy = policy or FeePolicy()
        self.weight_floor = weight_floor
        q0 = np.zeros(spec.market.d) if q0 is None else np.array(q0, dtype=float)
        if q0.shape != (spec.market.d,) or not np.all(np.isfinite(q0)):
            raise ShapeError(f"initial inventory must be a finite vector of length {spec.market.d}")
        w1 = check_weights(np.array(w1, dtype=float), spec.m, weight_floor)
        self.q0 = q0.copy()
        self.w1 = w1.copy()
        self.state = EngineState(q=q0, w=w1)

    @property
    def market(self) -> MarketDef:
        return self.spec.market

    @property
    def ledger(self) -> list[RoundRecord]:
        return self.state.ledger

    def _trade(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if r.shape != (self.market.d,):
            raise ShapeError(f"trade must have length {self.market.d}")
        if not np.all(np.isfinite(r)):
            raise ShapeError("trade must be finite")
        return r

    def quote(self, r) -> float:
        """Frozen-weight price of ``r``; does not touch the state."""
        q = self.state.q
        return mix_cost(self.spec, q + self._trade(r), self.state.w) - mix_cost(self.spec, q, self.state.w)

    def diagnostics(self, r) -> TradeDiagnostics:
        spec, q_prev, w = self.spec, self.state.q, self.state.w
        q_next = q_prev + self._trade(r)
        return TradeDiagnostics(
            q_prev=q_prev.copy(),
            q_next=q_next,
            w=w.copy(),
            slippage=expert_slippages(spec.experts, q_prev, q_next),
            liability=np.array([e.liability(q_next) for e in spec.experts]),
            pi_before=posterior(spec, q_prev, w),
            pi_after=posterior(spec, q_next, w),
            grads_prev=expert_prices(spec, q_prev),
        )

    def preview_round(self, r, w_next) -> RoundRecord:
        """Compute the record ``execute_round`` would produce, without committing.

        ``w_next`` is either a weight vector or a callable receiving the
        TradeDiagnostics of the trade and returning one.
        """
        if self.state.poisoned:
            raise PoisonedStateError("market state is poisoned by an earlier non-finite round")
        diag = self.diagnostics(r)
        if callable(w_next):
            w_next = w_next(diag)
        w_next = check_weights(np.array(w_next, dtype=float), self.spec.m, self.weight_floor)
        w = self.state.w
        fee = self.policy.fee(self.spec, diag.q_prev, diag.q_next, w, w_next)
        cost_before = mix_cost(self.spec, diag.q_prev, w)
        cost_after = mix_cost(self.spec, diag.q_next, w_next)
        payment = cost_after - cost_before + fee
        return RoundRecord(
            t=self.state.t + 1,
            trade=diag.trade,
            q_prev=diag.q_prev,
            q_next=diag.q_next,
            w_before=w.copy(),
            w_after=w_next,
            payment=payment,
            fee=fee,
            cost_before=cost_before,
            cost_after=cost_after,
            pi_before=diag.pi_before,
            pi_after=diag.pi_after,
            slippage=diag.slippage,
            liability=diag.liability,
            grads_prev=diag.grads_prev,
        )

    def execute_round(self, r, w_next) -> RoundRecord:
        rec = self.preview_round(r, w_next)
        if not (math.isfinite(rec.payment) and math.isfinite(rec.fee)):
            self.state.poisoned = True
            raise PoisonedStateError(f"non-finite payment in round {rec.t}")
        s = self.state
        s.q = rec.q_next
        s.w = rec.w_after
        s.z += rec.fee
        s.t = rec.t
        s.ledger.append(rec)
        return rec

    def total_payments(self) -> float:
        return math.fsum(rec.payment for rec in self.ledger)

    def loss_under_outcome(self, o: int) -> float:
        return loss_under_outcome(self.ledger, o, self.market)

    def telescoping_gap(self) -> float:
        """Σ payments minus [C_mix(q_T; w_{T+1}) - C_mix(q_0; w_1) + z]; zero up to rounding."""
        s = self.state
        rhs = mix_cost(self.spec, s.q, s.w) - mix_cost(self.spec, self.q0, self.w1) + s.z
        return self.total_payments() - rhs

    def copy(self) -> "AdaptiveMarket":
        return copy.deepcopy(self)


def loss_under_outcome(ledger, o: int, market: MarketDef) -> float:
    """Market maker's loss if ``o`` occurs: payout on the net position minus payments."""
    payoff = market.payoff(o)
    if not ledger:
        return 0.0
    net = ledger[-1].q_next - ledger[0].q_prev
    return float(payoff @ net) - math.fsum(rec.payment for rec in ledger)


def loss_bound(spec: MixtureSpec, q0, w1) -> float:
    """Horizon-free bound on the worst-case loss of the adaptive market."""
    q0 = np.asarray(q0, dtype=float)
    b_max = max(e.conjugate_bound() for e in spec.experts)
    min_payout = float(np.min(spec.market.payoffs @ q0))
    return b_max + math.log(spec.m) / spec.beta + mix_cost(spec, q0, w1) - min_payout


class SolveResult(NamedTuple):
    q: np.ndarray
    converged: bool
    iterations: int
    residual: float


def _check_interior(market: MarketDef, p: np.ndarray):
    if p.shape != (market.d,) or not np.all(np.isfinite(p)):
        raise InfeasibleTargetError("target price has the wrong shape")
    if market.kind == "arrow_debreu":
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InfeasibleTargetError("target must be a strictly positive probability vector")
    elif np.any(p <= 0) or np.any(p >= 1):
        raise InfeasibleTargetError("pairwise target prices must lie strictly inside (0, 1)")


def solve_state_for_price(
    spec: MixtureSpec,
    w,
    target_p,
    tol: float = 1e-8,
    max_iters: int = 200,
    armijo: float = 1e-4,
    shrink: float = 0.5,
) -> SolveResult:
    """Find an inventory whose mixed price is ``target_p``.

    Minimizes the convex objective C_mix(q; w) - q . p with damped Newton
    steps (minimum-norm solves, since the Hessian is singular along the
    translation directions) and falls back to a gradient step when the
    Newton direction is not a descent direction.
    """
    p = np.asarray(target_p, dtype=float)
    _check_interior(spec.market, p)
    w = np.asarray(w, dtype=float)

    def objective(q):
        return mix_cost(spec, q, w) - q @ p

    if spec.market.kind == "arrow_debreu":
        harmonic = 1.0 / float(np.dot(w, 1.0 / spec.scales))
        q = harmonic * np.log(p)
    else:
        q = np.zeros(spec.market.d)
    f = objective(q)
    best = (math.inf, q)
    for it in range(max_iters + 1):
        g = mix_grad(spec, q, w) - p
        resid = float(np.max(np.abs(g)))
        if resid < best[0]:
            best = (resid, q.copy())
        if resid <= tol:
            return SolveResult(q, True, it, resid)
        if it == max_iters:
            break
        step = -np.linalg.lstsq(mix_hessian(spec, q, w), g, rcond=1e-12)[0]
        slope = g @ step
        if not np.all(np.isfinite(step)) or slope >= 0:
            step, slope = -g, -(g @ g)
        alpha = 1.0
        while True:
            cand = q + alpha * step
            f_cand = objective(cand)
            if f_cand <= f + armijo * alpha * slope or alpha < 1e-12:
                break
            alpha *= shrink
        q, f = cand, f_cand
    return SolveResult(best[1], False, max_iters, best[0])


class Interval(NamedTuple):
    s_min: float
    s_max: float


# profits below this are rounding noise (e.g. exactly-zero-margin directions)
MIN_PROFIT = 1e-12


def _longest_positive_run(s_grid: np.ndarray, profit: np.ndarray, min_profit: float) -> Interval | None:
    best, start = None, None
    for i, positive in enumerate(profit > min_profit):
        if positive and start is None:
            start = i
        if start is not None and (not positive or i == len(profit) - 1):
            end = i if positive else i - 1
            if best is None or end - start > best[1] - best[0]:
                best = (start, end)
            start = None
    if best is None:
        return None
    return Interval(float(s_grid[best[0]]), float(s_grid[best[1]]))


def _check_scan(v, s_grid):
    v = np.asarray(v, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    if not np.linalg.norm(v) > 0:
        raise ShapeError("direction must be nonzero")
    if s_grid.ndim != 1 or s_grid.size == 0 or np.any(s_grid <= 0) or np.any(np.diff(s_grid) <= 0):
        raise ShapeError("trade sizes must be positive and strictly increasing")
    return v, s_grid


def profit_curve(market: AdaptiveMarket, o: int, v, s_grid, fees=None) -> np.ndarray:
    """Realized profit of buying s * v at frozen weights, minus a quadratic fee model."""
    v, s_grid = _check_scan(v, s_grid)
    if fees is None:
        fees = (market.ledger[-1].fee if market.ledger else 0.0, 0.0, 0.0)
    f0, f1, f2 = fees
    spec, q, w = market.spec, market.state.q, market.state.w
    payoff = market.market.payoff(o)
    base = mix_cost(spec, q, w)
    norm = np.linalg.norm(v)
    out = np.empty(s_grid.size)
    for i, s in enumerate(s_grid):
        pay = mix_cost(spec, q + s * v, w) - base
        out[i] = payoff @ (s * v) - pay - f0 - f1 * norm * s - f2 * norm**2 * s**2
    return out


def upside_scan(
    market: AdaptiveMarket, o: int, v, s_grid, fees=None, min_profit: float = MIN_PROFIT
) -> Interval | None:
    """Longest run of trade sizes with strictly positive realized profit, or None.

    ``fees`` is the triple (F0, F1, F2) of the quadratic fee model
    F0 + F1 |v| s + F2 |v|^2 s^2; by default F0 is the last round's fee.
    """
    v, s_grid = _check_scan(v, s_grid)
    return _longest_positive_run(s_grid, profit_curve(market, o, v, s_grid, fees), min_profit)


def adaptive_upside_scan(
    market: AdaptiveMarket,
    o: int,
    v,
    s_grid,
    update: Callable[[TradeDiagnostics], np.ndarray],
    min_profit: float = MIN_PROFIT,
) -> Interval | None:
    """Scan realized profit under the real adaptive payment (weight update and fee included)."""
    v, s_grid = _check_scan(v, s_grid)
    payoff = market.market.payoff(o)
    profit = np.array(
        [payoff @ (s * v) - market.preview_round(s * v, update).payment for s in s_grid]
    )
    return _longest_positive_run(s_grid, profit, min_profit)
