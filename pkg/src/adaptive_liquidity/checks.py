"""Randomized property suites behind the ``check`` subcommand.

Every suite returns a :class:`CheckResult`; nothing here asserts, so the
same code drives the CLI, the acceptance module and the unit tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import SimConfig
from .engine import (
    AdaptiveMarket,
    adaptive_upside_scan,
    loss_bound,
    solve_state_for_price,
    upside_scan,
)
from .experts import lmsr
from .fees import FeePolicy, GridSpec
from .learner import (
    LearnerConfig,
    MetaExpertGrid,
    best_switching_comparator,
    brute_force_comparator,
    fixed_share_run,
    fixed_share_update,
    learner_regret,
    marginal_liquidity_weights,
    meta_losses,
    tracking_bound,
)
from .mixture import (
    MixtureSpec,
    gradient_bound,
    lmsr_mixture,
    mix_cost,
    mix_grad,
    mix_hessian,
    posterior,
    smoothness_constant,
    weight_update_bound,
)
from .signals import (
    SignalCoeffs,
    bridge_errors,
    hybrid_signal,
    l1_dominance_bound,
    mixed_liability,
    mixed_signal,
    mixed_slippage,
    surrogate_signal,
)
from .simulation import emit_csv, regime_means, run_simulation

TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    instances: int
    elapsed: float
    worst: float = 0.0
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: {self.instances} instances, worst slack {self.worst:.3g}, "
            f"{self.elapsed:.2f}s{'; ' + self.detail if self.detail else ''}"
        )


def _timed(name: str, fn: Callable[[], tuple[bool, int, float, str, dict]], limit: float | None = None):
    start = time.perf_counter()
    ok, n, worst, detail, extra = fn()
    elapsed = time.perf_counter() - start
    if limit is not None and elapsed >= limit:
        ok = False
        detail = f"{detail}; over the {limit:.0f}s budget".lstrip("; ")
    return CheckResult(name, ok, n, elapsed, worst, detail, extra)


def _random_weights(rng: np.random.Generator, m: int, floor: float = 1e-3) -> np.ndarray:
    w = rng.dirichlet(np.ones(m))
    w = np.maximum(w, floor)
    return w / w.sum()


def _random_binary_spec(rng: np.random.Generator, anchored: bool = False) -> MixtureSpec:
    m = int(rng.integers(2, 4))
    scales = np.sort(rng.uniform(0.5, 15.0, m))
    return lmsr_mixture(scales, beta=float(rng.uniform(0.5, 2.0)), k=2, anchored=anchored)


# no-arbitrage and worst-case loss ------------------------------------------------

def random_runs(n_runs: int = 1000, seed: int = 0, max_rounds: int = 50, max_trade: float = 3.0):
    """Closed-loop runs with random trades and random full-support weight paths.

    Yields ``(market, bound)`` pairs.  The fee grid covers every reachable
    reduced state, so the global fee upper-bounds the drop along the path.
    """
    rng = np.random.default_rng(seed)
    reach = 2 * max_trade * max_rounds + 20.0
    policy = FeePolicy("global_grid", GridSpec(-reach, reach, int(10 * reach) + 1))
    for _ in range(n_runs):
        spec = _random_binary_spec(rng)
        q0 = rng.uniform(-5.0, 5.0, 2)
        w1 = _random_weights(rng, spec.m)
        mkt = AdaptiveMarket(spec, w1, q0=q0, policy=policy)
        for _ in range(int(rng.integers(1, max_rounds + 1))):
            r = rng.uniform(-max_trade, max_trade, 2)
            mkt.execute_round(r, _random_weights(rng, spec.m))
        yield mkt, loss_bound(spec, q0, w1)


def _arbitrage_and_loss(n_runs: int, seed: int):
    arb, loss = [], []
    for mkt, bound in random_runs(n_runs, seed):
        payoffs = mkt.market.payoffs
        net = mkt.state.q - mkt.q0
        arb.append(mkt.total_payments() - float(np.min(payoffs @ net)))
        worst = max(mkt.loss_under_outcome(o) for o in mkt.market.outcomes)
        loss.append(bound - worst)
    return np.array(arb), np.array(loss)


def no_arbitrage_and_loss_suites(n_runs: int = 1000, seed: int = 0, limit: float | None = 30.0):
    """Both trajectory suites share the same runs; the runtime is charged to both."""
    start = time.perf_counter()
    arb, loss = _arbitrage_and_loss(n_runs, seed)
    elapsed = time.perf_counter() - start
    over = limit is not None and elapsed >= limit
    results = []
    for name, slack in (("no-arbitrage", arb), ("worst-case loss", loss)):
        ok = bool(np.all(slack >= -TOL)) and not over
        detail = f"{int(np.sum(slack < -TOL))} violations"
        if over:
            detail += f"; over the {limit:.0f}s budget"
        results.append(CheckResult(name, ok, len(slack), elapsed, float(slack.min()), detail))
    return results


# calculus ------------------------------------------------------------------------

def _calculus_specs(rng: np.random.Generator):
    from .experts import CostExpert
    from .market import pair_betting

    binary = _random_binary_spec(rng)
    k = int(rng.integers(3, 5))
    multi = lmsr_mixture(rng.uniform(0.5, 10.0, 3), beta=float(rng.uniform(0.5, 2.0)), k=k)
    pb = pair_betting(3)
    pairs = MixtureSpec(tuple(CostExpert(pb, s) for s in rng.uniform(1.0, 8.0, 2)), beta=1.0)
    return binary, multi, pairs


def calculus_suite(n_points: int = 200, seed: int = 1, limit: float | None = 10.0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        grad_err = hess_err = 0.0
        ray_slack = math.inf
        h_g, h_h = 1e-5, 1e-5
        for i in range(n_points):
            spec = _calculus_specs(rng)[i % 3]
            d = spec.market.d
            q = rng.uniform(-8.0, 8.0, d)
            w = _random_weights(rng, spec.m)
            g = mix_grad(spec, q, w)
            eye = np.eye(d)
            fd = np.array(
                [(mix_cost(spec, q + h_g * e, w) - mix_cost(spec, q - h_g * e, w)) / (2 * h_g) for e in eye]
            )
            grad_err = max(grad_err, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12)))
            fd_h = np.array(
                [(mix_grad(spec, q + h_h * e, w) - mix_grad(spec, q - h_h * e, w)) / (2 * h_h) for e in eye]
            )
            H = mix_hessian(spec, q, w)
            hess_err = max(hess_err, float(np.max(np.abs(fd_h - H))))
            L = smoothness_constant(spec, gradient_bound(spec))
            v = rng.normal(size=d)
            rayleigh = max(float(v @ H @ v / (v @ v)), float(np.linalg.eigvalsh((H + H.T) / 2).max()))
            ray_slack = min(ray_slack, L + 1e-6 - rayleigh)
        ok = grad_err <= 1e-6 and hess_err <= 1e-4 and ray_slack >= 0
        detail = f"grad rel err {grad_err:.2e}, hessian err {hess_err:.2e}"
        return ok, n_points, ray_slack, detail, {"grad_err": grad_err, "hess_err": hess_err}

    return _timed("calculus", run, limit)


# inequalities (anchored experts) ------------------------------------------------

def _random_round(rng: np.random.Generator):
    spec = _random_binary_spec(rng, anchored=True)
    q_prev = rng.uniform(-30.0, 30.0, 2)
    q_next = q_prev + rng.uniform(-6.0, 6.0, 2)
    w = _random_weights(rng, spec.m)
    return spec, q_prev, q_next, w


def inequality_suite(n: int = 1000, seed: int = 2, n_dominance: int = 10_000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    def bridge():
        worst = math.inf
        for _ in range(n):
            spec, q_prev, q_next, w = _random_round(rng)
            c = SignalCoeffs(*rng.uniform(0.1, 6.0, 2), *rng.uniform(0.5, 5.0, 2))
            S = np.array([e.cost(q_next) - e.cost(q_prev) - e.price(q_prev) @ (q_next - q_prev) for e in spec.experts])
            L = np.array([e.liability(q_next) for e in spec.experts])
            grads = np.array([e.price(q_prev) for e in spec.experts])
            g_surr = surrogate_signal(w, hybrid_signal(S, L, c))
            g_mix = mixed_signal(spec, q_prev, q_next, w, S, c)
            e1, e2 = bridge_errors(spec, q_prev, q_next, w, S, grads)
            worst = min(worst, g_surr + c.a_eff * (e1 + e2) - g_mix)
        return worst >= -TOL, n, worst, "", {}

    def liability_level():
        worst = math.inf
        for _ in range(n):
            spec, _, q, w = _random_round(rng)
            L = np.array([e.liability(q) for e in spec.experts])
            worst = min(worst, float(w @ L) - mixed_liability(spec, q, w))
        return worst >= -TOL, n, worst, "", {}

    def slippage_bound():
        worst = math.inf
        for _ in range(n):
            spec, q_prev, q_next, w = _random_round(rng)
            S = np.array([e.cost(q_next) - e.cost(q_prev) - e.price(q_prev) @ (q_next - q_prev) for e in spec.experts])
            grads = np.array([e.price(q_prev) for e in spec.experts])
            _, e2 = bridge_errors(spec, q_prev, q_next, w, S, grads)
            rhs = float(posterior(spec, q_next, w) @ S) + e2
            worst = min(worst, rhs - mixed_slippage(spec, q_prev, q_next, w))
        return worst >= -TOL, n, worst, "", {}

    def concavity():
        worst = math.inf
        for _ in range(n):
            spec, _, q, u = _random_round(rng)
            v = _random_weights(rng, spec.m)
            lam = float(rng.uniform())
            mix = mix_cost(spec, q, lam * u + (1 - lam) * v)
            chord = lam * mix_cost(spec, q, u) + (1 - lam) * mix_cost(spec, q, v)
            first_order = weight_update_bound(spec, q, u, v) - (mix_cost(spec, q, v) - mix_cost(spec, q, u))
            worst = min(worst, mix - chord, first_order)
        return worst >= -TOL, n, worst, "", {}

    def dominance():
        worst = math.inf
        count = 0
        for _ in range(n_dominance):
            m = int(rng.integers(2, 6))
            u, v = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
            gap = np.abs(u - v).sum()
            for j in range(m):
                worst = min(worst, l1_dominance_bound(u, v, j) - gap)
                count += 1
        return worst >= -1e-12, count, worst, "", {}

    def ledger_identities():
        tele, pay = math.inf, math.inf
        for _ in range(n):
            spec = _random_binary_spec(rng, anchored=True)
            w1 = _random_weights(rng, spec.m)
            mkt = AdaptiveMarket(spec, w1, q0=rng.uniform(-3.0, 3.0, 2), policy=FeePolicy("global_grid", GridSpec(-80, 80, 3201)))
            for _ in range(int(rng.integers(1, 11))):
                mkt.execute_round(rng.uniform(-3.0, 3.0, 2), _random_weights(rng, spec.m))
            scale = max(1.0, abs(mkt.total_payments()))
            tele = min(tele, -abs(mkt.telescoping_gap()) / scale)
            lower = mix_cost(spec, mkt.state.q, w1) - mix_cost(spec, mkt.q0, w1)
            pay = min(pay, mkt.total_payments() - lower)
        return tele, pay

    for name, fn in (
        ("bridge inequality", bridge),
        ("liability-level bound", liability_level),
        ("slippage bound", slippage_bound),
        ("weight concavity", concavity),
        ("dominance lemma", dominance),
    ):
        out.append(_timed(name, fn))

    start = time.perf_counter()
    tele, pay = ledger_identities()
    elapsed = time.perf_counter() - start
    out.append(CheckResult("telescoping identity", tele >= -TOL, n, elapsed, tele))
    out.append(CheckResult("payment lower bound", pay >= -TOL, n, elapsed, pay))
    return out


# expressiveness -----------------------------------------------------------------

def expressiveness_suite(n: int = 100, seed: int = 3, limit: float | None = 5.0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        spec = lmsr_mixture((1.0, 12.0), beta=1.0)
        w = np.array([0.5, 0.5])
        worst, iters, failures = math.inf, 0, 0
        for _ in range(n):
            p = rng.dirichlet(np.ones(2))
            res = solve_state_for_price(spec, w, p, tol=1e-8, max_iters=200)
            resid = float(np.max(np.abs(mix_grad(spec, res.q, w) - p)))
            iters = max(iters, res.iterations)
            worst = min(worst, 1e-6 - resid)
            failures += int(resid > 1e-6 or res.iterations > 200)
        return failures == 0, n, worst, f"max {iters} Newton iterations", {"max_iterations": iters}

    return _timed("expressiveness", run, limit)


# positive upside ----------------------------------------------------------------

UPSIDE_SIZES = np.linspace(0.05, 60.0, 1200)


def _meta_update_rule(spec: MixtureSpec, cfg: SimConfig):
    grid = MetaExpertGrid(spec.m, cfg.profiles)
    learner = LearnerConfig(cfg.eta, cfg.alpha)
    meta_w = grid.uniform()

    def update(diag):
        losses = meta_losses(diag.slippage, diag.liability, grid, (cfg.sigma_slip, cfg.sigma_liab))
        return marginal_liquidity_weights(fixed_share_update(meta_w, losses, learner), grid)

    return marginal_liquidity_weights(meta_w, grid), update


def upside_suite() -> CheckResult:
    def run():
        single = AdaptiveMarket(MixtureSpec((lmsr(1.0),)), [1.0])
        v = np.array([1.0, 0.0])
        found = {f0: upside_scan(single, 0, v, UPSIDE_SIZES, (f0, 0.0, 0.0)) for f0 in (0.0, 0.1, 0.8)}
        cfg = SimConfig(eta=5e-4, alpha=1e-4)
        spec = lmsr_mixture(cfg.scales, cfg.beta)
        w1, update = _meta_update_rule(spec, cfg)
        adaptive = AdaptiveMarket(spec, w1, policy=FeePolicy("global_grid", cfg.fee_grid))
        p = mix_grad(spec, adaptive.state.q, adaptive.state.w)
        margin = float((adaptive.market.payoff(0) - p) @ v / np.linalg.norm(v))
        interval = adaptive_upside_scan(adaptive, 0, v, UPSIDE_SIZES, update)
        ok = (
            found[0.0] is not None
            and found[0.1] is not None
            and found[0.8] is None
            and margin >= 0.3
            and interval is not None
        )
        show = lambda iv: "empty" if iv is None else f"[{iv.s_min:.2f}, {iv.s_max:.2f}]"  # noqa: E731
        detail = ", ".join(f"F0={k}: {show(iv)}" for k, iv in found.items())
        detail += f", adaptive (margin {margin:.2f}): {show(interval)}"
        return ok, 4, margin - 0.3, detail, {"intervals": found, "adaptive": interval}

    return _timed("positive upside", run)


# tracking -----------------------------------------------------------------------

def tracking_suite(seed: int = 4, repeats: int = 2, n_arrays: int = 50, limit: float | None = 60.0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        mismatches, cases = 0, 0
        for T in range(1, 9):
            for M in range(1, 4):
                for J in range(0, min(3, T - 1) + 1):
                    for _ in range(repeats):
                        losses = rng.uniform(0.0, 1.0, (T, M))
                        dp_total, dp_seq = best_switching_comparator(losses, J)
                        bf_total, bf_seq = brute_force_comparator(losses, J)
                        cases += 1
                        mismatches += int(abs(dp_total - bf_total) > 1e-12 or dp_seq != bf_seq)
        worst = math.inf
        T, M = 256, 5
        for i in range(n_arrays):
            J = i % 3
            losses = rng.uniform(0.0, 1.0, (T, M))
            weights = fixed_share_run(losses, LearnerConfig.tuned(T, M, J), clip=True)
            worst = min(worst, tracking_bound(T, M, J) - learner_regret(losses, weights, J))
        ok = mismatches == 0 and worst >= 0
        detail = f"{cases} comparator cases, {mismatches} mismatches"
        return ok, cases + n_arrays, worst, detail, {}

    return _timed("tracking", run, limit)


# simulation ---------------------------------------------------------------------

def simulation_suite(seed: int = 42, cfg: SimConfig | None = None, limit: float | None = 60.0) -> CheckResult:
    def run():
        res = run_simulation(cfg, seed)
        recs = res.records
        b = regime_means(recs, "b_eff")
        r3 = [r for r in recs if r.regime == "R3"]
        between = np.mean(
            [min(r.slip_low, r.slip_high) - 1e-12 <= r.slip_mix <= max(r.slip_low, r.slip_high) + 1e-12 for r in r3]
        )
        peak_r1 = max(r.liab_mix for r in recs if r.regime == "R1")
        r2_ratio = max(r.liab_mix for r in recs if r.regime == "R2") / peak_r1
        tracked = [r for r in recs if r.regime in ("R1", "R4")]
        corr = float(np.corrcoef([r.liab_mix for r in tracked], [r.liab_high for r in tracked])[0, 1])
        checks = {
            "b_eff R2 > R1": b["R2"] > b["R1"],
            "b_eff R2 > R4": b["R2"] > b["R4"],
            "R3 slippage between baselines": between >= 0.9,
            "R2 liability < 10% of R1 peak": r2_ratio < 0.1,
            "R1/R4 liability tracks high-liability expert": corr > 0.9,
        }
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        detail = (
            f"b_eff R1 {b['R1']:.2f} R2 {b['R2']:.2f} R4 {b['R4']:.2f}; R3 between {between:.0%}; "
            f"R2/R1 liability {r2_ratio:.3f}; corr {corr:.3f}"
        )
        if failed:
            detail += "; failed: " + ", ".join(failed)
        extra = {"b_eff": b, "between": between, "r2_ratio": r2_ratio, "corr": corr, "result": res}
        return ok, len(recs), min(between - 0.9, 0.1 - r2_ratio, corr - 0.9), detail, extra

    return _timed("simulation ordinal", run, limit)


def determinism_check(tmpdir, seed: int = 42, cfg: SimConfig | None = None) -> CheckResult:
    from pathlib import Path

    def run():
        paths = [Path(tmpdir) / f"run{i}.csv" for i in (1, 2)]
        for p in paths:
            emit_csv(run_simulation(cfg, seed).records, p)
        same = paths[0].read_bytes() == paths[1].read_bytes()
        return same, 2, 0.0, "byte-identical" if same else "CSV bytes differ", {}

    return _timed("determinism", run)


def run_all(quick: bool = False, tmpdir=None) -> list[CheckResult]:
    """All suites in order; ``quick`` shrinks instance counts for smoke runs."""
    import tempfile

    scale = 10 if quick else 1
    results = list(no_arbitrage_and_loss_suites(1000 // scale))
    results.append(calculus_suite(200 // scale))
    results.extend(inequality_suite(1000 // scale, n_dominance=10_000 // scale))
    results.append(expressiveness_suite(100 // scale))
    results.append(upside_suite())
    results.append(tracking_suite(n_arrays=50 // scale))
    if not quick:
        results.append(simulation_suite())
        with tempfile.TemporaryDirectory(dir=tmpdir) as d:
            results.append(determinism_check(d))
    return results
