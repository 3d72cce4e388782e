"""Simulation configuration: defaults, JSON loading and validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .fees import FEE_VARIANTS, GridSpec
from .learner import DEFAULT_PROFILES

REGIME_KINDS = ("directional", "oscillating")


@dataclass(frozen=True)
class Regime:
    """One block of trade flow on outcome 1.

    ``directional`` regimes trade ``direction * amplitude`` every round;
    ``oscillating`` regimes flip sign every ``period // 2`` rounds.  ``jitter``
    scales each trade by ``1 + jitter * u`` with ``u ~ U(-1, 1)``.
    """

    label: str
    kind: str
    rounds: int
    amplitude: float
    direction: float = 1.0
    period: int = 2
    jitter: float = 0.0

    def __post_init__(self):
        if self.kind not in REGIME_KINDS:
            raise ConfigError(f"regime {self.label!r}: unknown kind {self.kind!r}")
        if self.rounds < 1:
            raise ConfigError(f"regime {self.label!r}: rounds must be positive")
        if not (abs(self.amplitude) < float("inf")) or self.amplitude < 0:
            raise ConfigError(f"regime {self.label!r}: amplitude must be finite and >= 0")
        if self.period < 2 or self.period % 2:
            raise ConfigError(f"regime {self.label!r}: period must be a positive even integer")
        if not 0.0 <= self.jitter < 1.0:
            raise ConfigError(f"regime {self.label!r}: jitter must lie in [0, 1)")


DEFAULT_REGIMES = (
    Regime("R1", "directional", 400, 1.0, jitter=0.1),
    Regime("R2", "oscillating", 400, 0.25),
    Regime("R3", "oscillating", 400, 5.0, jitter=0.1),
    Regime("R4", "directional", 400, 1.0, jitter=0.1),
)


@dataclass(frozen=True)
class SimConfig:
    scales: tuple = (1.0, 12.0)
    beta: float = 1.0
    eta: float = 5e-4
    alpha: float = 1e-4
    sigma_slip: float = 1.0
    sigma_liab: float = 4.0
    profiles: tuple = DEFAULT_PROFILES
    fee_variant: str = "global_grid"
    fee_grid: GridSpec = field(default_factory=GridSpec)
    fee_radius: float = 10.0
    anchored: bool = False
    regimes: tuple = DEFAULT_REGIMES
    transition_rounds: int = 20
    report_coeffs: tuple = (1.5, 1.5)
    report_switches: int = 6

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(b) for b in self.scales))
        object.__setattr__(self, "profiles", tuple(tuple(map(float, p)) for p in self.profiles))
        object.__setattr__(self, "regimes", tuple(self.regimes))
        object.__setattr__(self, "report_coeffs", tuple(map(float, self.report_coeffs)))
        if not self.scales or min(self.scales) <= 0:
            raise ConfigError("liquidity scales must be positive")
        if self.beta <= 0 or self.eta <= 0 or not 0 <= self.alpha <= 1:
            raise ConfigError("need beta > 0, eta > 0 and alpha in [0, 1]")
        if self.sigma_slip <= 0 or self.sigma_liab <= 0:
            raise ConfigError("normalization scales must be positive")
        if self.fee_variant not in FEE_VARIANTS:
            raise ConfigError(f"unknown fee variant {self.fee_variant!r}")
        if self.transition_rounds < 0 or self.report_switches < 0:
            raise ConfigError("transition_rounds and report_switches must be >= 0")
        if len(self.report_coeffs) != 2 or min(self.report_coeffs) <= 0:
            raise ConfigError("report_coeffs must be a positive (a, b) pair")
        if not self.regimes:
            raise ConfigError("at least one regime is required")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scales"] = list(self.scales)
        d["profiles"] = [list(p) for p in self.profiles]
        d["report_coeffs"] = list(self.report_coeffs)
        d["regimes"] = [asdict(r) for r in self.regimes]
        return d


def _reject_unknown(data: dict, allowed, where: str):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def config_from_dict(data: dict) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(data, [f.name for f in fields(SimConfig)], "config")
    data = dict(data)
    try:
        if "fee_grid" in data:
            grid = data["fee_grid"]
            _reject_unknown(grid, ("lo", "hi", "count"), "fee_grid")
            data["fee_grid"] = replace(GridSpec(), **grid)
        if "regimes" in data:
            regs = []
            for r in data["regimes"]:
                _reject_unknown(r, [f.name for f in fields(Regime)], "regime")
                regs.append(Regime(**r))
            data["regimes"] = tuple(regs)
        return SimConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)
