"""Slippage, liability and the hybrid learning signals.

Coefficients enter as effective weights a / sigma_slip and b / sigma_liab;
with the default scales (1, 4) this matches the experiment normalization,
while ``SignalCoeffs.raw`` keeps the unscaled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MarketError, ShapeError
from .experts import CostExpert
from .mixture import MixtureSpec, mix_cost, mix_grad, posterior, weight_gradient


@dataclass(frozen=True)
class SignalCoeffs:
    a: float = 1.0
    b: float = 1.0
    sigma_slip: float = 1.0
    sigma_liab: float = 4.0

    def __post_init__(self):
        for name in ("a", "b", "sigma_slip", "sigma_liab"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise MarketError(f"{name} must be positive, got {value!r}")

    @classmethod
    def raw(cls, a: float = 1.0, b: float = 1.0) -> "SignalCoeffs":
        return cls(a, b, 1.0, 1.0)

    @property
    def a_eff(self) -> float:
        return self.a / self.sigma_slip

    @property
    def b_eff(self) -> float:
        return self.b / self.sigma_liab


@dataclass(frozen=True)
class RoundSignals:
    S: np.ndarray
    L: np.ndarray
    gamma_hyb: np.ndarray
    gamma_surr: float
    gamma_mix: float
    gamma_realized: float
    E1: float
    E2: float
    update_term: float
    fee: float

    def bridge_slack(self, coeffs: SignalCoeffs) -> float:
        """Right side minus left side of the mixed-to-surrogate bridge; >= 0."""
        a = coeffs.a_eff
        return self.gamma_surr + a * self.E1 + a * self.E2 - self.gamma_mix

    def transfer_slack(self, coeffs: SignalCoeffs) -> float:
        a = coeffs.a_eff
        rhs = (
            self.gamma_surr
            + a * abs(self.E1)
            + a * self.E2
            + a * max(self.update_term, 0.0)
            + a * self.fee
        )
        return rhs - self.gamma_realized


def slippage(e: CostExpert, q_prev, q_next) -> float:
    """Bregman divergence D_C(q_next, q_prev)."""
    q_prev = np.asarray(q_prev, dtype=float)
    q_next = np.asarray(q_next, dtype=float)
    return e.cost(q_next) - e.cost(q_prev) - float(e.price(q_prev) @ (q_next - q_prev))


def mixed_slippage(spec: MixtureSpec, q_prev, q_next, w) -> float:
    q_prev = np.asarray(q_prev, dtype=float)
    q_next = np.asarray(q_next, dtype=float)
    grad = mix_grad(spec, q_prev, w)
    return mix_cost(spec, q_next, w) - mix_cost(spec, q_prev, w) - float(grad @ (q_next - q_prev))


def mixed_liability(spec: MixtureSpec, q, w) -> float:
    q = np.asarray(q, dtype=float)
    exposure = float(np.max(spec.market.payoffs @ q))
    return exposure - (mix_cost(spec, q, w) - mix_cost(spec, np.zeros_like(q), w))


def _vec(x, n=None, name="vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (n is not None and x.size != n):
        raise ShapeError(f"{name} has shape {x.shape}, expected ({n},)")
    return x


def hybrid_signal(S, L, c: SignalCoeffs) -> np.ndarray:
    S = _vec(S, name="slippage")
    L = _vec(L, S.size, "liability")
    return c.a_eff * (S - S.mean()) + c.b_eff * L


def surrogate_signal(w, gamma_hyb) -> float:
    gamma_hyb = _vec(gamma_hyb, name="hybrid signal")
    w = _vec(w, gamma_hyb.size, "weights")
    return float(w @ gamma_hyb)


def mixed_signal(spec: MixtureSpec, q_prev, q_next, w, S, c: SignalCoeffs) -> float:
    S = _vec(S, spec.m, "slippage")
    d_mix = mixed_slippage(spec, q_prev, q_next, w)
    return c.a_eff * (d_mix - S.mean()) + c.b_eff * mixed_liability(spec, q_next, w)


def bridge_errors(
    spec: MixtureSpec, q_prev, q_next, w, S, grads_prev, reference=None
) -> tuple[float, float]:
    """Pricing/learning mismatch E1 and intra-trade posterior drift E2.

    ``reference`` is the weight vector the surrogate is taken against
    (default ``w``); see :func:`surrogate_weights`.
    """
    S = _vec(S, spec.m, "slippage")
    q_prev = np.asarray(q_prev, dtype=float)
    q_next = np.asarray(q_next, dtype=float)
    grads_prev = np.asarray(grads_prev, dtype=float)
    if grads_prev.shape != (spec.m, spec.market.d):
        raise ShapeError("expert gradients must be an (M, d) array")
    w = _vec(w, spec.m, "weights")
    pi_next = posterior(spec, q_next, w)
    pi_prev = posterior(spec, q_prev, w)
    ref = w if reference is None else _vec(reference, spec.m, "reference weights")
    e1 = float((pi_next - ref) @ S)
    e2 = float((pi_next - pi_prev) @ (grads_prev @ (q_next - q_prev)))
    return e1, e2


def realized_signal(gamma_mix: float, spec: MixtureSpec, q_next, w_t, w_next, fee: float, a: float) -> float:
    """Mixed signal plus the weight-update shift and fee, both scaled by ``a``."""
    shift = mix_cost(spec, q_next, w_next) - mix_cost(spec, q_next, w_t)
    return gamma_mix + a * shift + a * fee


def l1_dominance_bound(u, v, j: int) -> float:
    u = _vec(u, name="u")
    v = _vec(v, u.size, "v")
    if not 0 <= j < u.size:
        raise ShapeError(f"index {j} out of range")
    return 2.0 * (1.0 - u[j]) + 2.0 * (1.0 - v[j])


def surrogate_weights(spec: MixtureSpec, w) -> np.ndarray:
    """Weights against which the bridge inequality holds for ``spec``.

    The liability-level step of the bridge needs experts that cost zero at
    the origin.  Unanchored experts are equivalent to anchored ones with
    weights reweighted by exp(beta C_k(0)), which is exactly the posterior
    at the origin; for anchored experts this returns ``w`` itself.
    """
    if all(e.offset == e.origin_cost for e in spec.experts):
        return np.asarray(w, dtype=float)
    return posterior(spec, np.zeros(spec.market.d), w)


def round_signals(spec: MixtureSpec, rec, coeffs: SignalCoeffs, reference=None) -> RoundSignals:
    """All signals of one ledger record.

    ``reference`` defaults to :func:`surrogate_weights` of the round's
    learning weights; pass ``rec.w_before`` to use the learner weights
    verbatim.
    """
    w = rec.w_before
    ref = surrogate_weights(spec, w) if reference is None else np.asarray(reference, dtype=float)
    gamma = hybrid_signal(rec.slippage, rec.liability, coeffs)
    g_mix = mixed_signal(spec, rec.q_prev, rec.q_next, w, rec.slippage, coeffs)
    e1, e2 = bridge_errors(spec, rec.q_prev, rec.q_next, w, rec.slippage, rec.grads_prev, ref)
    update = float(weight_gradient(spec, rec.q_next, w) @ (rec.w_after - w))
    return RoundSignals(
        S=rec.slippage,
        L=rec.liability,
        gamma_hyb=gamma,
        gamma_surr=surrogate_signal(ref, gamma),
        gamma_mix=g_mix,
        gamma_realized=realized_signal(g_mix, spec, rec.q_next, w, rec.w_after, rec.fee, coeffs.a_eff),
        E1=e1,
        E2=e2,
        update_term=update,
        fee=rec.fee,
    )
