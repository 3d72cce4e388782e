"""Fixed-Share learning over (liquidity, coefficient profile) meta-experts.

Also holds the switching-regret tooling: the tracking bound, the exact
best-J-switch comparator (dynamic program) and the regret decomposition
of a closed-loop run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBudgetError, InvalidLossError, MarketError, ShapeError
from .market import check_weights

DEFAULT_PROFILES = ((6.0, 0.2), (3.0, 0.7), (1.5, 1.5), (0.7, 3.0), (0.2, 6.0))


@dataclass(frozen=True)
class MetaExpertGrid:
    """Product of liquidity experts and hybrid-signal coefficient profiles.

    Flat index of (k, m) is ``k * len(profiles) + m``.
    """

    liquidity_count: int
    profiles: tuple = DEFAULT_PROFILES

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(tuple(map(float, p)) for p in self.profiles))
        if self.liquidity_count < 1 or not self.profiles:
            raise MarketError("meta-expert grid must be nonempty")
        if any(len(p) != 2 or min(p) <= 0 for p in self.profiles):
            raise MarketError("profile coefficients must be positive pairs")

    @property
    def size(self) -> int:
        return self.liquidity_count * len(self.profiles)

    def flat(self, k: int, m: int) -> int:
        return k * len(self.profiles) + m

    def unflat(self, i: int) -> tuple[int, int]:
        return divmod(i, len(self.profiles))

    def uniform(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)


@dataclass(frozen=True)
class LearnerConfig:
    eta: float = 5e-4
    alpha: float = 1e-4
    U: float = 1.0

    def __post_init__(self):
        if not self.eta > 0:
            raise MarketError("learning rate must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise MarketError("share parameter must lie in [0, 1]")

    @classmethod
    def tuned(cls, T: int, M: int, J: int, U: float = 1.0) -> "LearnerConfig":
        """Rates matched to the tracking bound for horizon T and J switches."""
        A = switching_complexity(T, M, J)
        eta = math.sqrt(8.0 * A / T) / U if A > 0 else 1.0 / U
        alpha = J / (T - 1) if T > 1 else 0.0
        return cls(eta=eta, alpha=alpha, U=U)


def meta_losses(S, L, grid: MetaExpertGrid, scales=(1.0, 4.0)) -> np.ndarray:
    """Loss of every meta-expert: a_m (S_k - mean S)/sigma_slip + b_m L_k/sigma_liab."""
    S = np.asarray(S, dtype=float)
    L = np.asarray(L, dtype=float)
    if S.shape != (grid.liquidity_count,) or L.shape != S.shape:
        raise ShapeError("slippage and liability must have one entry per liquidity expert")
    sigma_slip, sigma_liab = scales
    prof = np.array(grid.profiles)
    centered = (S - S.mean()) / sigma_slip
    liab = L / sigma_liab
    return (centered[:, None] * prof[None, :, 0] + liab[:, None] * prof[None, :, 1]).ravel()


def fixed_share_update(w, losses, cfg: LearnerConfig, clip: bool = False) -> np.ndarray:
    """Exponential-weights step followed by mixing with the uniform distribution."""
    losses = np.asarray(losses, dtype=float)
    w = check_weights(w, losses.size)
    if not np.all(np.isfinite(losses)):
        raise InvalidLossError("losses must be finite")
    if clip:
        losses = np.clip(losses, 0.0, cfg.U)
    with np.errstate(divide="ignore"):
        z = np.log(w) - cfg.eta * (losses - losses.min())
    v = np.exp(z - z.max())
    v /= v.sum()
    return (1.0 - cfg.alpha) * v + cfg.alpha / w.size


def marginal_liquidity_weights(meta_w, grid: MetaExpertGrid) -> np.ndarray:
    meta_w = np.asarray(meta_w, dtype=float)
    if meta_w.shape != (grid.size,):
        raise ShapeError(f"expected {grid.size} meta weights")
    out = meta_w.reshape(grid.liquidity_count, len(grid.profiles)).sum(axis=1)
    return out / out.sum()


def switching_complexity(T: int, M: int, J: int) -> float:
    """(J+1) log M + J log(e (T-1) / J), with the J = 0 term read as 0."""
    if T < 1 or M < 1:
        raise InvalidBudgetError("need T >= 1 and M >= 1")
    if not 0 <= J <= T - 1:
        raise InvalidBudgetError(f"switch budget {J} outside [0, {T - 1}]")
    tail = J * math.log(math.e * (T - 1) / J) if J > 0 else 0.0
    return (J + 1) * math.log(M) + tail


def tracking_bound(T: int, M: int, J: int, U: float = 1.0) -> float:
    if not U > 0:
        raise InvalidBudgetError("loss range must be positive")
    return U * math.sqrt(2.0 * T * switching_complexity(T, M, J))


def best_switching_comparator(loss_matrix, J: int) -> tuple[float, list[int]]:
    """Cheapest expert sequence with at most J switches (0-based indices).

    Among optimal sequences the lexicographically smallest one is returned,
    i.e. lower expert indices win ties first.
    """
    losses = np.asarray(loss_matrix, dtype=float)
    if losses.ndim != 2 or losses.shape[0] == 0 or losses.shape[1] == 0:
        raise ShapeError("loss matrix must be T x M with T, M >= 1")
    T, M = losses.shape
    if not 0 <= J:
        raise InvalidBudgetError("switch budget must be nonnegative")
    J = min(J, T - 1)
    # future[t, k, j]: best loss of rounds t.. given expert k at round t and j switches left
    future = np.empty((T, M, J + 1))
    future[T - 1] = losses[T - 1][:, None]
    for t in range(T - 2, -1, -1):
        stay = future[t + 1]
        best_other = np.full((M, J + 1), np.inf)
        if J > 0:
            for k in range(M):
                others = np.delete(stay, k, axis=0)
                if others.size:
                    best_other[k, 1:] = others[:, :-1].min(axis=0)
        future[t] = losses[t][:, None] + np.minimum(stay, best_other)
    tol = 1e-12 * max(1.0, float(np.abs(losses).sum()))
    k = int(np.flatnonzero(future[0, :, J] <= future[0, :, J].min() + tol)[0])
    total = float(future[0, k, J])
    seq, left = [k], J
    for t in range(1, T):
        target = future[t - 1, k, left] - losses[t - 1, k]
        for nxt in range(M):
            need = left if nxt == k else left - 1
            if need >= 0 and abs(future[t, nxt, need] - target) <= tol:
                break
        else:  # pragma: no cover - the dynamic program always has a witness
            raise RuntimeError("comparator backtracking failed")
        left, k = need, nxt
        seq.append(k)
    return total, seq


def count_switches(seq) -> int:
    return sum(1 for a, b in zip(seq, seq[1:]) if a != b)


def brute_force_comparator(loss_matrix, J: int) -> tuple[float, list[int]]:
    """Exhaustive search over all sequences; exponential, for testing."""
    import itertools

    losses = np.asarray(loss_matrix, dtype=float)
    T, M = losses.shape
    best = None
    for seq in itertools.product(range(M), repeat=T):
        if count_switches(seq) > J:
            continue
        total = float(losses[np.arange(T), seq].sum())
        if best is None or total < best[0] - 1e-12:
            best = (total, list(seq))
    return best


def fixed_share_run(loss_matrix, cfg: LearnerConfig, clip: bool = True) -> np.ndarray:
    """Weights w_1..w_T played by Fixed-Share on a loss array."""
    losses = np.asarray(loss_matrix, dtype=float)
    T, M = losses.shape
    w = np.full(M, 1.0 / M)
    out = np.empty((T, M))
    for t in range(T):
        out[t] = w
        w = fixed_share_update(w, losses[t], cfg, clip=clip)
    return out


def learner_regret(loss_matrix, weights, J: int) -> float:
    losses = np.asarray(loss_matrix, dtype=float)
    played = float(np.sum(np.asarray(weights) * losses))
    return played - best_switching_comparator(losses, J)[0]


@dataclass(frozen=True)
class RegretReport:
    comparator_total: float
    comparator: list
    surrogate_regret: float
    realized_regret: float
    mismatch: float
    drift: float
    update_cost: float
    fee_cost: float
    prefix_slack: np.ndarray

    @property
    def bound(self) -> float:
        return self.surrogate_regret + self.mismatch + self.drift + self.update_cost + self.fee_cost

    @property
    def holds(self) -> bool:
        return bool(np.all(self.prefix_slack >= -1e-6))

    def as_row(self) -> dict:
        return {
            "comparator_total": self.comparator_total,
            "surrogate_regret": self.surrogate_regret,
            "realized_regret": self.realized_regret,
            "mismatch": self.mismatch,
            "drift": self.drift,
            "update_cost": self.update_cost,
            "fee_cost": self.fee_cost,
            "bound": self.bound,
            "min_prefix_slack": float(self.prefix_slack.min()) if self.prefix_slack.size else 0.0,
        }


def regret_report(signals, J: int, a: float) -> RegretReport:
    """Realized-vs-surrogate regret decomposition of a sequence of RoundSignals.

    ``prefix_slack[t]`` is the decomposition's right side minus its left
    side after t + 1 rounds.  The comparator cancels between the two sides,
    so the inequality at every prefix reduces to cumulative per-round terms.
    """
    if not signals:
        raise ShapeError("no rounds to report on")
    gamma = np.array([s.gamma_hyb for s in signals])
    surr = np.array([s.gamma_surr for s in signals])
    real = np.array([s.gamma_realized for s in signals])
    mism = a * np.abs([s.E1 for s in signals])
    drift = a * np.array([s.E2 for s in signals])
    upd = a * np.maximum([s.update_term for s in signals], 0.0)
    fee = a * np.array([s.fee for s in signals])
    total, seq = best_switching_comparator(gamma, J)
    slack = np.cumsum(surr + mism + drift + upd + fee - real)
    return RegretReport(
        comparator_total=total,
        comparator=seq,
        surrogate_regret=float(surr.sum() - total),
        realized_regret=float(real.sum() - total),
        mismatch=float(mism.sum()),
        drift=float(drift.sum()),
        update_cost=float(upd.sum()),
        fee_cost=float(fee.sum()),
        prefix_slack=slack,
    )
