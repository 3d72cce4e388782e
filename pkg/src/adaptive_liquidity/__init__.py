"""Adaptive-liquidity prediction market maker built on mixtures of cost functions."""

from .config import Regime, SimConfig, load_config
from .engine import (
    AdaptiveMarket,
    RoundRecord,
    loss_bound,
    loss_under_outcome,
    solve_state_for_price,
    upside_scan,
)
from .errors import MarketError
from .experts import CostExpert, lmsr, perspective_scale
from .fees import FeePolicy, GridSpec, fee_global, fee_pathwise, fee_restricted
from .learner import (
    LearnerConfig,
    MetaExpertGrid,
    best_switching_comparator,
    fixed_share_update,
    tracking_bound,
)
from .market import MarketDef, arrow_debreu, normalize_weights, pair_betting, payoff_matrix
from .mixture import MixtureSpec, lmsr_mixture, mix_cost, mix_grad, mix_hessian, posterior
from .signals import SignalCoeffs, round_signals
from .simulation import emit_csv, generate_flow, run_simulation

__version__ = "0.1.0"

__all__ = [
    "AdaptiveMarket", "CostExpert", "FeePolicy", "GridSpec", "LearnerConfig", "MarketDef",
    "MarketError", "MetaExpertGrid", "MixtureSpec", "Regime", "RoundRecord", "SignalCoeffs",
    "SimConfig", "arrow_debreu", "best_switching_comparator", "emit_csv", "fee_global",
    "fee_pathwise", "fee_restricted", "fixed_share_update", "generate_flow", "lmsr",
    "lmsr_mixture", "load_config", "loss_bound", "loss_under_outcome", "mix_cost", "mix_grad",
    "mix_hessian", "normalize_weights", "pair_betting", "payoff_matrix", "perspective_scale",
    "posterior", "round_signals", "run_simulation", "solve_state_for_price", "tracking_bound",
    "upside_scan",
]
