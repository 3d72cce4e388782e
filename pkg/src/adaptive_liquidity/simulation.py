"""Regime-driven closed-loop simulation of the adaptive market."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Regime, SimConfig
from .engine import AdaptiveMarket
from .errors import MarketError
from .fees import FeePolicy
from .learner import (
    LearnerConfig,
    MetaExpertGrid,
    RegretReport,
    fixed_share_update,
    marginal_liquidity_weights,
    meta_losses,
    regret_report,
)
from .mixture import lmsr_mixture
from .signals import SignalCoeffs, mixed_liability, mixed_slippage, round_signals


@dataclass(frozen=True)
class SimRecord:
    t: int
    regime: str
    x: float
    b_eff: float
    slip_mix: float
    slip_low: float
    slip_high: float
    liab_mix: float
    liab_low: float
    liab_high: float
    fee: float
    payment: float
    reserve: float
    weights: tuple
    meta_entropy: float
    cum_surrogate: float
    cum_realized: float
    cum_mismatch: float
    cum_drift: float
    cum_update: float
    cum_fee: float

    @property
    def decomposition_slack(self) -> float:
        return (
            self.cum_surrogate + self.cum_mismatch + self.cum_drift + self.cum_update + self.cum_fee
        ) - self.cum_realized


@dataclass
class SimResult:
    records: list
    report: RegretReport
    market: AdaptiveMarket
    labels: list


def generate_flow(cfg: SimConfig, seed: int = 42) -> tuple[np.ndarray, list[str]]:
    """Trade sizes on outcome 1 and the regime label of every round.

    Between consecutive regimes a transition ``T<i>`` of
    ``cfg.transition_rounds`` rounds either unwinds the inventory linearly
    to neutral (before an oscillating regime) or ramps the trade size
    linearly up to the next amplitude (before a directional regime).
    """
    rng = np.random.default_rng(seed)
    sizes: list[float] = []
    labels: list[str] = []
    x = 0.0
    for i, reg in enumerate(cfg.regimes):
        n = cfg.transition_rounds
        if i > 0 and n > 0:
            if reg.kind == "oscillating":
                ramp = [-x / n] * n
            else:
                ramp = [reg.direction * reg.amplitude * (j + 1) / (n + 1) for j in range(n)]
            sizes.extend(ramp)
            labels.extend([f"T{i}"] * n)
            x += math.fsum(ramp)
        block = _regime_block(reg, rng)
        sizes.extend(block)
        labels.extend([reg.label] * reg.rounds)
        x += math.fsum(block)
    return np.array(sizes), labels


def _regime_block(reg: Regime, rng: np.random.Generator) -> list[float]:
    t = np.arange(reg.rounds)
    if reg.kind == "directional":
        sign = np.full(reg.rounds, np.sign(reg.direction) or 1.0)
    else:
        sign = np.where((t // (reg.period // 2)) % 2 == 0, 1.0, -1.0)
    noise = 1.0 + reg.jitter * rng.uniform(-1.0, 1.0, reg.rounds) if reg.jitter else 1.0
    return list(sign * reg.amplitude * noise)


def effective_liquidity(pi, b) -> float:
    """Harmonic pi-average of the liquidity scales."""
    pi = np.asarray(pi, dtype=float)
    b = np.asarray(b, dtype=float)
    return 1.0 / float(np.sum(pi / b))


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def run_simulation(cfg: SimConfig | None = None, seed: int = 42) -> SimResult:
    cfg = cfg or SimConfig()
    spec = lmsr_mixture(cfg.scales, cfg.beta, k=2, anchored=cfg.anchored)
    grid = MetaExpertGrid(spec.m, cfg.profiles)
    learner = LearnerConfig(eta=cfg.eta, alpha=cfg.alpha)
    coeffs = SignalCoeffs(cfg.report_coeffs[0], cfg.report_coeffs[1], cfg.sigma_slip, cfg.sigma_liab)
    policy = FeePolicy(cfg.fee_variant, cfg.fee_grid, cfg.fee_radius)

    meta_w = grid.uniform()
    market = AdaptiveMarket(spec, marginal_liquidity_weights(meta_w, grid), policy=policy)
    sizes, labels = generate_flow(cfg, seed)
    lo, hi = int(np.argmin(spec.scales)), int(np.argmax(spec.scales))

    pending = {}

    def update(diag):
        losses = meta_losses(diag.slippage, diag.liability, grid, (cfg.sigma_slip, cfg.sigma_liab))
        pending["meta"] = fixed_share_update(meta_w, losses, learner)
        return marginal_liquidity_weights(pending["meta"], grid)

    records, sigs = [], []
    cum = np.zeros(6)
    a = coeffs.a_eff
    for t, (size, label) in enumerate(zip(sizes, labels), start=1):
        try:
            rec = market.execute_round(np.array([size, 0.0]), update)
        except MarketError as exc:
            raise type(exc)(f"round {t}: {exc}") from exc
        meta_w = pending["meta"]
        sig = round_signals(spec, rec, coeffs)
        sigs.append(sig)
        cum += (
            sig.gamma_surr,
            sig.gamma_realized,
            a * abs(sig.E1),
            a * sig.E2,
            a * max(sig.update_term, 0.0),
            a * sig.fee,
        )
        w = rec.w_before
        records.append(
            SimRecord(
                t=t,
                regime=label,
                x=float(rec.q_next[0] - rec.q_next[1]),
                b_eff=effective_liquidity(rec.pi_after, spec.scales),
                slip_mix=mixed_slippage(spec, rec.q_prev, rec.q_next, w),
                slip_low=float(rec.slippage[lo]),
                slip_high=float(rec.slippage[hi]),
                liab_mix=max(mixed_liability(spec, rec.q_next, w), 0.0),
                liab_low=float(rec.liability[lo]),
                liab_high=float(rec.liability[hi]),
                fee=rec.fee,
                payment=rec.payment,
                reserve=market.state.z,
                weights=tuple(float(v) for v in rec.w_after),
                meta_entropy=_entropy(meta_w),
                cum_surrogate=float(cum[0]),
                cum_realized=float(cum[1]),
                cum_mismatch=float(cum[2]),
                cum_drift=float(cum[3]),
                cum_update=float(cum[4]),
                cum_fee=float(cum[5]),
            )
        )
    J = min(cfg.report_switches, max(len(sigs) - 1, 0))
    report = regret_report(sigs, J, a)
    return SimResult(records, report, market, labels)


SCALAR_COLUMNS = (
    "t", "regime", "x", "b_eff", "slip_mix", "slip_low", "slip_high",
    "liab_mix", "liab_low", "liab_high", "fee", "payment", "reserve",
)
TAIL_COLUMNS = (
    "meta_entropy", "cum_surrogate", "cum_realized", "cum_mismatch",
    "cum_drift", "cum_update", "cum_fee",
)


def csv_header(m: int = 2) -> list[str]:
    return [*SCALAR_COLUMNS, *(f"w_{k + 1}" for k in range(m)), *TAIL_COLUMNS]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def emit_csv(records, path, m: int | None = None) -> None:
    """Write one header line then one line per record (9 significant digits)."""
    if m is None:
        m = len(records[0].weights) if records else 2
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(csv_header(m))
            for r in records:
                row = [getattr(r, c) for c in SCALAR_COLUMNS]
                row += list(r.weights)
                row += [getattr(r, c) for c in TAIL_COLUMNS]
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def emit_trades_csv(sizes, labels, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "regime", "r_1", "r_2"])
        for t, (s, lab) in enumerate(zip(sizes, labels), start=1):
            writer.writerow([t, lab, _fmt(float(s)), _fmt(0.0)])


def regime_means(records, field_name: str) -> dict[str, float]:
    out: dict[str, list] = {}
    for r in records:
        out.setdefault(r.regime, []).append(getattr(r, field_name))
    return {k: float(np.mean(v)) for k, v in out.items()}
