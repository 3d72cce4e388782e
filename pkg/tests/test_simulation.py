import csv
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from adaptive_liquidity.config import DEFAULT_REGIMES, Regime, SimConfig, config_from_dict, load_config
from adaptive_liquidity.engine import AdaptiveMarket
from adaptive_liquidity.errors import ConfigError
from adaptive_liquidity.learner import regret_report
from adaptive_liquidity.mixture import MixtureSpec, lmsr_mixture
from adaptive_liquidity.experts import lmsr
from adaptive_liquidity.signals import SignalCoeffs, round_signals
from adaptive_liquidity.simulation import (
    csv_header,
    effective_liquidity,
    emit_csv,
    emit_trades_csv,
    generate_flow,
    run_simulation,
)


@pytest.fixture(scope="module")
def default_run():
    return run_simulation(SimConfig(), seed=42)


def test_effective_liquidity_examples():
    assert effective_liquidity([1, 0], [1, 12]) == 1
    assert effective_liquidity([0, 1], [1, 12]) == 12
    assert effective_liquidity([0.5, 0.5], [1, 12]) == pytest.approx(24 / 13)


def test_flow_examples():
    osc = SimConfig(regimes=(Regime("R2", "oscillating", 400, 0.25),))
    sizes, labels = generate_flow(osc)
    assert math.fsum(sizes) == 0.0 and set(labels) == {"R2"}
    ramp = SimConfig(regimes=(Regime("R1", "directional", 100, 1.0),))
    sizes, _ = generate_flow(ramp)
    assert math.fsum(sizes) == 100.0
    assert np.all(sizes == 1.0)


def test_default_flow_structure():
    sizes, labels = generate_flow(SimConfig(), seed=42)
    assert len(sizes) == 4 * 400 + 3 * 20
    assert [lab for i, lab in enumerate(labels) if i == 0 or labels[i - 1] != lab] == ["R1", "T1", "R2", "T2", "R3", "T3", "R4"]
    r1 = sizes[[i for i, lab in enumerate(labels) if lab == "R1"]]
    assert np.all((r1 >= 0.9) & (r1 <= 1.1))
    # inventory is back to neutral before each oscillating regime
    x = np.cumsum(sizes)
    assert abs(x[labels.index("R2") - 1]) < 1e-9
    r3 = sizes[[i for i, lab in enumerate(labels) if lab == "R3"]]
    assert np.all(np.sign(r3[::2]) == 1) and np.all(np.sign(r3[1::2]) == -1)


def test_flow_deterministic():
    a, _ = generate_flow(SimConfig(), seed=7)
    b, _ = generate_flow(SimConfig(), seed=7)
    c, _ = generate_flow(SimConfig(), seed=8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_zero_flow_keeps_liquidity():
    cfg = SimConfig(regimes=(Regime("R1", "directional", 30, 0.0),), transition_rounds=0)
    res = run_simulation(cfg)
    b = [r.b_eff for r in res.records]
    assert max(b) - min(b) < 1e-12
    assert all(r.slip_mix == r.slip_low == r.slip_high == 0 for r in res.records)


def test_default_run_invariants(default_run):
    recs = default_run.records
    assert len(recs) == 1660
    assert all(1.0 - 1e-12 <= r.b_eff <= 12.0 + 1e-12 for r in recs)
    z = [r.reserve for r in recs]
    assert all(b >= a for a, b in zip(z, z[1:]))
    assert default_run.report.holds
    assert np.all(default_run.report.prefix_slack >= -1e-6)
    assert all(r.decomposition_slack >= -1e-6 for r in recs)
    assert all(r.liab_mix >= 0 for r in recs)


def test_regret_report_single_expert():
    spec = MixtureSpec((lmsr(2.0),))
    m = AdaptiveMarket(spec, [1.0])
    c = SignalCoeffs.raw()
    rng = np.random.default_rng(0)
    sigs = [round_signals(spec, m.execute_round(rng.uniform(-2, 2, 2), [1.0]), c) for _ in range(20)]
    rep = regret_report(sigs, 3, c.a_eff)
    assert rep.surrogate_regret == pytest.approx(0.0, abs=1e-12)
    assert rep.mismatch == rep.drift == rep.update_cost == rep.fee_cost == 0.0
    assert rep.realized_regret == pytest.approx(0.0, abs=1e-12)


def test_regret_report_identical_experts():
    spec = lmsr_mixture((3.0, 3.0))
    m = AdaptiveMarket(spec, [0.5, 0.5])
    rng = np.random.default_rng(1)
    c = SignalCoeffs.raw()
    sigs = [round_signals(spec, m.execute_round(rng.uniform(-2, 2, 2), rng.dirichlet([2, 2])), c) for _ in range(20)]
    assert all(abs(s.E1) < 1e-12 and abs(s.E2) < 1e-12 for s in sigs)
    assert all(0.0 <= s.fee <= 1e-12 for s in sigs)
    assert regret_report(sigs, 2, 1.0).holds


def test_csv_structure(tmp_path, default_run):
    path = tmp_path / "sim.csv"
    emit_csv(default_run.records, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == csv_header(2)
    assert len(rows) == 1661
    assert all(len(r) == len(rows[0]) for r in rows)
    assert rows[1][0] == "1" and rows[1][1] == "R1"
    for cell in rows[1][2:]:
        float(cell)
        assert "," not in cell
        digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) <= 9


def test_csv_small_cases(tmp_path, default_run):
    empty = tmp_path / "empty.csv"
    emit_csv([], empty)
    assert empty.read_text().splitlines() == [",".join(csv_header(2))]
    one = tmp_path / "one.csv"
    emit_csv(default_run.records[:1], one)
    assert len(one.read_text().splitlines()) == 2
    with pytest.raises(OSError, match="cannot write"):
        emit_csv(default_run.records[:1], tmp_path / "missing" / "x.csv")


def test_trades_csv(tmp_path):
    sizes, labels = generate_flow(SimConfig())
    emit_trades_csv(sizes, labels, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,regime,r_1,r_2" and len(lines) == len(sizes) + 1


def test_config_round_trip(tmp_path):
    cfg = SimConfig()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg
    custom = config_from_dict({"scales": [2, 8], "fee_grid": {"count": 101}, "regimes": [
        {"label": "A", "kind": "oscillating", "rounds": 10, "amplitude": 1.0, "period": 4}
    ]})
    assert custom.scales == (2.0, 8.0) and custom.fee_grid.count == 101 and custom.fee_grid.lo == -140
    assert custom.regimes[0].period == 4


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"fee_grid": {"lo": 0, "step": 1}},
        {"regimes": [{"label": "A", "kind": "sideways", "rounds": 1, "amplitude": 1}]},
        {"regimes": [{"label": "A", "kind": "directional", "rounds": 1, "amplitude": 1, "colour": 2}]},
        {"scales": [1, -2]},
        {"fee_variant": "sometimes"},
        {"regimes": []},
        [1, 2],
    ],
)
def test_config_rejects(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_defaults_pinned():
    cfg = SimConfig()
    assert cfg.scales == (1.0, 12.0) and cfg.beta == 1.0
    assert (cfg.eta, cfg.alpha, cfg.sigma_slip, cfg.sigma_liab) == (5e-4, 1e-4, 1.0, 4.0)
    assert cfg.profiles == ((6.0, 0.2), (3.0, 0.7), (1.5, 1.5), (0.7, 3.0), (0.2, 6.0))
    assert cfg.fee_grid.to_dict() == {"lo": -140.0, "hi": 140.0, "count": 5001}
    assert [(r.label, r.rounds, r.amplitude) for r in DEFAULT_REGIMES] == [
        ("R1", 400, 1.0), ("R2", 400, 0.25), ("R3", 400, 5.0), ("R4", 400, 1.0)
    ]


def test_alternative_fee_policies_run():
    regs = (Regime("R1", "directional", 30, 1.0), Regime("R2", "oscillating", 30, 2.0))
    for variant in ("pathwise", "restricted"):
        res = run_simulation(SimConfig(fee_variant=variant, regimes=regs, transition_rounds=5))
        assert len(res.records) == 65
        assert res.report.holds


def test_round_index_attached_to_errors(monkeypatch):
    from adaptive_liquidity import simulation
    from adaptive_liquidity.errors import InvalidWeightsError

    calls = {"n": 0}
    real = simulation.marginal_liquidity_weights

    def broken(meta_w, grid):
        calls["n"] += 1
        if calls["n"] > 3:
            return np.array([0.7, 0.7])
        return real(meta_w, grid)

    monkeypatch.setattr(simulation, "marginal_liquidity_weights", broken)
    with pytest.raises(InvalidWeightsError, match="round 3"):
        run_simulation(SimConfig(regimes=(Regime("R1", "directional", 10, 1.0),)))


def test_anchored_run_matches_prices():
    regs = (Regime("R1", "directional", 20, 1.0),)
    res = run_simulation(SimConfig(anchored=True, regimes=regs))
    assert_allclose([r.slip_low for r in res.records], [r.slip_low for r in run_simulation(SimConfig(regimes=regs)).records])
