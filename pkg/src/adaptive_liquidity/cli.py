"""Command-line entry point: ``adaptive-liquidity <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import SimConfig, load_config
from .errors import MarketError
from .fees import FeePolicy, GridSpec, fee_global
from .mixture import MixtureSpec, lmsr_mixture, mix_grad


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _fmt_vec(v) -> str:
    return "(" + ", ".join(format(float(x), ".9g") for x in v) + ")"


def cmd_simulate(args) -> int:
    from .simulation import emit_csv, emit_trades_csv, generate_flow, regime_means, run_simulation

    cfg = load_config(args.config) if args.config else SimConfig()
    if args.dump_config:
        print(json.dumps(cfg.to_dict(), indent=2))
        return 0
    out = Path(args.out)
    res = run_simulation(cfg, args.seed)
    emit_csv(res.records, out, m=len(cfg.scales))
    print(f"wrote {len(res.records)} rounds to {out}")
    if args.trades:
        emit_trades_csv(*generate_flow(cfg, args.seed), args.trades)
        print(f"wrote trade flow to {args.trades}")
    if not args.no_plot:
        from .plotting import plot_simulation

        fig = Path(args.plot) if args.plot else out.with_suffix(".png")
        plot_simulation(res.records, fig)
        print(f"wrote figure to {fig}")
    for name in ("b_eff", "slip_mix", "liab_mix"):
        means = regime_means(res.records, name)
        print(f"mean {name}: " + "  ".join(f"{k}={v:.4g}" for k, v in means.items()))
    row = res.report.as_row()
    print(f"final reserve {res.market.state.z:.6g}; regret decomposition "
          f"{'holds' if res.report.holds else 'VIOLATED'} (min prefix slack {row['min_prefix_slack']:.3g})")
    return 0


def cmd_check(args) -> int:
    from .checks import run_all

    results = run_all(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    return 1 if failed else 0


def _spec(args) -> MixtureSpec:
    return lmsr_mixture(args.scales, beta=args.beta, k=2)


def cmd_fee_grid(args) -> int:
    spec = _spec(args)
    grid = GridSpec(args.lo, args.hi, args.count)
    fee = fee_global(spec, np.array(args.w_old), np.array(args.w_new), grid)
    print(format(fee, ".9g"))
    return 0


def cmd_solve_price(args) -> int:
    from .engine import solve_state_for_price

    spec = lmsr_mixture(args.scales, beta=args.beta, k=len(args.target))
    w = np.array(args.weights) if args.weights else np.full(spec.m, 1.0 / spec.m)
    res = solve_state_for_price(spec, w, np.array(args.target), tol=args.tol, max_iters=args.max_iters)
    p = mix_grad(spec, res.q, w)
    print(f"q = {_fmt_vec(res.q)}")
    print(f"price = {_fmt_vec(p)}")
    print(f"converged = {res.converged} after {res.iterations} iterations, residual {res.residual:.3g}")
    return 0 if res.converged else 1


def cmd_upside(args) -> int:
    from .engine import AdaptiveMarket, adaptive_upside_scan, upside_scan

    spec = _spec(args)
    w = np.array(args.weights) if args.weights else np.full(spec.m, 1.0 / spec.m)
    market = AdaptiveMarket(spec, w, q0=args.q0, policy=FeePolicy("global_grid", GridSpec()))
    v = np.array(args.direction)
    sizes = np.linspace(args.s_max / args.count, args.s_max, args.count)
    if args.adaptive:
        from .checks import _meta_update_rule

        cfg = SimConfig(scales=tuple(args.scales), beta=args.beta, eta=args.eta, alpha=args.alpha)
        w1, update = _meta_update_rule(spec, cfg)
        market = AdaptiveMarket(spec, w1, q0=args.q0, policy=FeePolicy("global_grid", GridSpec()))
        interval = adaptive_upside_scan(market, args.outcome, v, sizes, update)
    else:
        interval = upside_scan(market, args.outcome, v, sizes, (args.f0, args.f1, args.f2))
    if interval is None:
        print("no profitable trade size on the scanned range")
    else:
        print(f"profitable sizes: [{interval.s_min:.6g}, {interval.s_max:.6g}]")
    return 0


def cmd_regret(args) -> int:
    from .learner import LearnerConfig, fixed_share_run, learner_regret, tracking_bound

    rng = np.random.default_rng(args.seed)
    bound = tracking_bound(args.T, args.M, args.J, 1.0)
    cfg = LearnerConfig.tuned(args.T, args.M, args.J)
    worst = -np.inf
    for i in range(args.trials):
        losses = rng.uniform(0.0, 1.0, (args.T, args.M))
        regret = learner_regret(losses, fixed_share_run(losses, cfg, clip=True), args.J)
        worst = max(worst, regret)
        if args.verbose:
            print(f"trial {i}: regret {regret:.6g}")
    print(f"eta={cfg.eta:.6g} alpha={cfg.alpha:.6g}")
    print(f"max regret {worst:.6g} over {args.trials} trials; tracking bound {bound:.6g}")
    return 0 if worst <= bound else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-liquidity", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the regime simulation and write the CSV and figure")
    p.add_argument("--config", help="JSON config file (defaults are used for missing keys)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="simulation.csv")
    p.add_argument("--plot", help="figure path (default: CSV path with .png suffix)")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--trades", help="also write the generated trade flow to this CSV")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run the randomized property suites")
    p.add_argument("--quick", action="store_true", help="fewer instances, skip the simulation suites")
    p.set_defaults(func=cmd_check)

    def market_args(p, scales=(1.0, 12.0)):
        p.add_argument("--scales", type=_floats, default=list(scales))
        p.add_argument("--beta", type=float, default=1.0)

    p = sub.add_parser("fee-grid", help="switch fee for a pair of weight vectors")
    market_args(p)
    p.add_argument("--w-old", type=_floats, required=True)
    p.add_argument("--w-new", type=_floats, required=True)
    p.add_argument("--lo", type=float, default=-140.0)
    p.add_argument("--hi", type=float, default=140.0)
    p.add_argument("--count", type=int, default=5001)
    p.set_defaults(func=cmd_fee_grid)

    p = sub.add_parser("solve-price", help="find an inventory that quotes a target price")
    market_args(p)
    p.add_argument("--target", type=_floats, required=True)
    p.add_argument("--weights", type=_floats)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200)
    p.set_defaults(func=cmd_solve_price)

    p = sub.add_parser("upside", help="scan trade sizes for strictly positive profit")
    market_args(p, scales=(1.0,))
    p.add_argument("--weights", type=_floats)
    p.add_argument("--q0", type=_floats, default=[0.0, 0.0])
    p.add_argument("--outcome", type=int, default=0)
    p.add_argument("--direction", type=_floats, default=[1.0, 0.0])
    p.add_argument("--f0", type=float, default=0.0)
    p.add_argument("--f1", type=float, default=0.0)
    p.add_argument("--f2", type=float, default=0.0)
    p.add_argument("--s-max", type=float, default=60.0)
    p.add_argument("--count", type=int, default=1200)
    p.add_argument("--adaptive", action="store_true", help="charge the real adaptive payment")
    p.add_argument("--eta", type=float, default=5e-4)
    p.add_argument("--alpha", type=float, default=1e-4)
    p.set_defaults(func=cmd_upside)

    p = sub.add_parser("regret", help="tuned Fixed-Share regret on random losses vs the tracking bound")
    p.add_argument("--T", type=int, default=256)
    p.add_argument("--M", type=int, default=5)
    p.add_argument("--J", type=int, default=2)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_regret)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MarketError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
