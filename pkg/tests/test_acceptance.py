"""Acceptance suite: one test per primary criterion, each recording a PASS/FAIL line."""

import contextlib
import io
import itertools
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from meshsim import cli, engine as E, forecast as fc, mesh, powerctl as pc, propagation as prop
from meshsim import sustain as su, traffic as tr
from meshsim.errors import DomainError, NonPositiveInput
from oracles import (brute_force_oracle, chromatic_number, cost231_decimal, fspl_decimal,
                     max_rel_error, numeric_lstm_grads)

GOLDEN = Path(__file__).parent / "golden"


def record(acceptance, num, checks: dict, extra=""):
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = extra if ok else f"failed: {', '.join(failed)}; {extra}"
    acceptance[num] = (ok, detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_propagation(acceptance):
    rng = np.random.default_rng(1)
    pts = [(rng.uniform(1500, 2000), rng.uniform(30, 200), rng.uniform(1, 10), rng.uniform(1, 20),
            bool(rng.integers(2)), rng.uniform(1, 5000), rng.uniform(100, 6000)) for _ in range(1000)]
    t0 = time.perf_counter()
    got = [(prop.cost231(f, h, m, d, "metro" if metro else "medium"), prop.fspl(dm, ff))
           for f, h, m, d, metro, dm, ff in pts]
    golden = (prop.cost231(2000, 50, 1.5, 5, "metro"), prop.fspl(250, 2400))
    elapsed = time.perf_counter() - t0
    worst = max(max(abs(c - float(cost231_decimal(f, h, m, d, metro))), abs(s - float(fspl_decimal(dm, ff))))
                for (c, s), (f, h, m, d, metro, dm, ff) in zip(got, pts))

    def rejects(fn, exc):
        try:
            fn()
        except exc:
            return True
        return False

    checks = {
        "161.28 dB": abs(golden[0] - float(cost231_decimal(2000, 50, 1.5, 5, True))) <= 1e-9
        and round(golden[0], 2) == 161.28,
        "88.01 dB": abs(golden[1] - float(fspl_decimal(250, 2400))) <= 1e-9 and round(golden[1], 2) == 88.01,
        "1000-point sweep <= 1e-9 dB": worst <= 1e-9,
        "domain f": rejects(lambda: prop.cost231(1400, 50, 1.5, 5), DomainError),
        "domain h_bs": rejects(lambda: prop.cost231(1800, 201, 1.5, 5), DomainError),
        "domain h_ms": rejects(lambda: prop.cost231(1800, 50, 11, 5), DomainError),
        "domain d": rejects(lambda: prop.cost231(1800, 50, 1.5, 0.5), DomainError),
        "fspl near field": rejects(lambda: prop.fspl(0.5, 2400), NonPositiveInput),
        "runtime < 1 s": elapsed < 1.0,
    }
    record(acceptance, 1, checks, f"worst sweep error {worst:.2e} dB, {elapsed:.3f} s")


def test_criterion_2_sustainability(acceptance):
    t0 = time.perf_counter()
    hajj = su.event_report(su.load_event_preset("hajj_5day"))
    ledger, capex = su.load_cost_preset()
    opex = su.opex_report(ledger)
    cx = su.capex_compare(*capex)
    saved = su.diesel_to_co2(14_000_000)
    elapsed = time.perf_counter() - t0
    checks = {
        "7000x500x5 = 17.5 M L": hajj.liters_traditional == 17_500_000,
        "17.5 M L -> 46,900 t": su.diesel_to_co2(17_500_000) == 46_900 and hajj.co2_traditional_t == 46_900,
        # exact 37,520; the quoted ~37,000 is that value truncated to thousands
        "14 M L -> 37,520 t (~37,000)": saved == 37_520 and saved // 1000 * 1000 == 37_000,
        "840 kW vs 180 kW -> 79%": hajj.power_traditional_w == 840_000 and hajj.power_mesh_w == 180_000
        and su.round_to(hajj.power_reduction_pct, 1) == 79,
        "OPEX 114.7 / 73.6": opex.total_trad == Fraction("114.7") and opex.total_prop == Fraction("73.6"),
        "OPEX ~36%": su.round_to(opex.savings_pct, 1) == 36,
        "CapEx 420 vs 108 -> 74%": su.round_to(cx, 1) == 74,
        "runtime < 1 s": elapsed < 1.0,
    }
    record(acceptance, 2, checks, f"CO2 saved {float(saved):,.0f} t, power cut {float(hajj.power_reduction_pct):.2f}%, "
           f"OPEX saving {float(opex.savings_pct):.2f}%, CapEx cut {float(cx):.2f}%")


def test_criterion_3_lstm(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        m = fc.LstmModel.init(4, rng, scale=0.5)
        m.b = rng.uniform(-0.5, 0.5, 16)
        m.b_y = float(rng.uniform(-0.5, 0.5))
        seq, target = rng.normal(size=5), float(rng.normal())
        g = fc.lstm_gradients(m, seq, target)
        ana = {"W": g.W, "b": g.b, "w_y": g.w_y, "b_y": np.array([g.b_y])}
        worst = max(worst, max_rel_error(ana, numeric_lstm_grads(m, seq, target)))
    period, horizon = 60, 5
    sine = np.sin(2 * np.pi * np.arange(10 * period) / period)
    model, _ = fc.train_forecaster(sine, fc.ForecastConfig(window=30, horizon=horizon, hidden_dim=8,
                                                            lr=0.05, epochs=10, seed=0))
    # persistence error in normalised units (unit sine has std 1/sqrt 2) and in raw units
    bar = min(fc.persistence_mse_sinusoid(horizon, period, math.sqrt(2)),
              fc.persistence_mse_sinusoid(horizon, period))
    elapsed = time.perf_counter() - t0
    checks = {
        "gradient rel error <= 1e-5": worst <= 1e-5,
        "sinusoid MSE <= 0.05": model.train_mse <= 0.05,
        "below persistence": model.train_mse < bar,
        "runtime < 60 s": elapsed < 60.0,
    }
    record(acceptance, 3, checks, f"max grad rel err {worst:.2e}, sinusoid MSE {model.train_mse:.2e} "
           f"vs persistence {bar:.3f}, {elapsed:.1f} s")


ORACLE_SET = {
    "n1_floor": (1, pc.RewardConfig(0, 1, -85, 1, (3,))),
    "n2_interference": (2, pc.RewardConfig(1, 0.001, -60)),
    "n2_floor": (2, pc.RewardConfig(1, 1, -70, 2, (6, 3))),
    "n3_floor": (3, pc.RewardConfig(1, 1, -85, 2, (6, 0, 6))),
    "n3_energy_only": (3, pc.RewardConfig(0, 1, -85)),
    "n3_mixed": (3, pc.RewardConfig(1, 0.5, -80, 1.5, (6, 6, 3))),
}


def test_criterion_4_rl_oracle(acceptance):
    t0 = time.perf_counter()
    checks, notes = {}, []
    for name, (n, cfg) in ORACLE_SET.items():
        pos = [(i * 250.0, 0.0) for i in range(n)]
        topo = mesh.topology_from_positions(pos, max(1.0, (n - 1) * 250.0), 2400.0, 0.0)
        env = pc.PowerControlEnv(topo, cfg, p_min_dbm=0, p_max_dbm=6, k=2)
        best, r_opt = brute_force_oracle(topo.xy, [0] * n, 2400, env.levels(), cfg.alpha, cfg.beta,
                                         cfg.i_threshold_dbm, cfg.qos_weight, cfg.qos_floor_dbm)
        q, _ = pc.train_policy(env, pc.TrainHyper(episodes=600, lr=1.0), seed=0)
        finals = [pc.greedy_rollout(env, q, env.make_state(s)) for s in itertools.product(env.levels(), repeat=n)]
        worst = min(r for _, r, _ in finals)
        checks[f"{name} >= 95% of optimum"] = worst >= r_opt - 0.05 * abs(r_opt)
        if cfg.alpha == 0 and not cfg.qos_weight:
            checks[f"{name} all p_min"] = all(tuple(s.powers_dbm) == (0.0,) * n for s, _, _ in finals)
        notes.append(f"{name} {worst:.4g}/{r_opt:.4g}")
    elapsed = time.perf_counter() - t0
    checks["runtime < 120 s"] = elapsed < 120.0
    record(acceptance, 4, checks, f"worst/optimal: {', '.join(notes)}; {elapsed:.1f} s")


def test_criterion_5_zones(acceptance):
    checks = {"conflict-free": True, "<= chromatic + 1": True}
    rng = np.random.default_rng(5)
    produced = 0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        im = mesh.InterferenceMatrix(rng.uniform(-110, -40, (n, n)))
        thr = float(rng.uniform(-95, -50))
        z = mesh.partition_zones(im, thr)
        adj = mesh.conflict_graph(im, thr)
        produced += 1
        same = [(i, j) for i in range(n) for j in range(n) if i != j and adj[i, j] and z.zone_of[i] == z.zone_of[j]]
        checks["conflict-free"] &= not same
        checks["<= chromatic + 1"] &= z.n_zones <= chromatic_number(adj) + 1
    for n in (10, 50, 100):
        pos = mesh.generate_topology(n, 2000, 2400, "uniform", 20.0, seed=n)
        im = mesh.build_interference_matrix(pos)
        z = mesh.partition_zones(im, -70)
        checks["conflict-free"] &= mesh.same_zone_conflicts(im, z, -70) == []
        produced += 1
    checks["1 zone -> N"] = mesh.reuse_capacity_gain(mesh.ZoneAssignment((0,) * 20, 1)) == 20
    checks["N zones -> 1"] = mesh.reuse_capacity_gain(mesh.ZoneAssignment(tuple(range(20)), 20)) == 1
    record(acceptance, 5, checks, f"{produced} assignments checked")


def test_criterion_6_desk_comparison(acceptance):
    t0 = time.perf_counter()
    rep = E.compare_architectures(E.desk_macro(), E.desk_mesh(), E.desk_scenario(), range(10))
    elapsed = time.perf_counter() - t0
    power, upw = rep.power_ratio, rep.upw_ratio
    arith_power = rep.values("mesh", "mean_power_w").mean() / rep.values("macro", "mean_power_w").mean()
    cov = min(rep.values(s, "coverage_min").min() for s in ("macro", "mesh"))
    checks = {
        "mesh power <= 50% of macro": power <= 0.5 and arith_power <= 0.5,
        "users/W >= 10x macro": upw >= 10.0,
        "coverage targets met": cov >= E.desk_mesh().coverage_target,
        "matches pinned golden": rep.to_csv() == (GOLDEN / "desk_comparison.csv").read_text(),
        "runtime < 5 min": elapsed < 300.0,
    }
    _, _, lo, hi = rep.gain("users_per_watt")
    record(acceptance, 6, checks, f"power ratio {power:.3f}, users/W x{upw:.1f} (95% CI {lo:.1f}-{hi:.1f}), "
           f"worst-seed users/W x{rep.ratios('users_per_watt').min():.1f}, {elapsed:.1f} s")


TINY = """
[run]
seeds = 2
[traffic]
n_cells = 36
duration_ticks = 60
day_ticks = 60
[forecast]
window = 10
horizon = 2
hidden_dim = 4
epochs = 1
[train]
episodes = 3
steps_per_episode = 5
"""


def test_criterion_7_determinism(acceptance, tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY)
    commands = {
        "pathloss": None,
        "run": ["run", "--config", str(cfg)],
        "compare": ["compare", "--config", str(cfg)],
        "sustain": ["sustain", "--preset", "hajj_5day"],
        "train-forecast": ["train-forecast", "--config", str(cfg)],
        "train-policy": ["train-policy", "--config", str(cfg)],
    }
    checks = {}
    for name, argv in commands.items():
        if argv is None:
            outs = []
            for _ in range(2):
                buf = io.StringIO()
                with contextlib.redirect_stdout(buf):
                    cli.main(["pathloss", "--f", "2000", "--hbs", "50", "--hms", "1.5", "--d", "5"])
                outs.append(buf.getvalue())
            checks[name] = outs[0] == outs[1]
            continue
        manifests, payloads = [], []
        for i in range(2):
            d = tmp_path / f"{name}-{i}"
            code = cli.main(argv + ["--out", str(d)])
            manifests.append((d / "manifest").read_bytes() if code == 0 else b"")
            payloads.append({p.name: p.read_bytes() for p in d.iterdir()} if code == 0 else {})
        checks[name] = bool(manifests[0]) and manifests[0] == manifests[1] and payloads[0] == payloads[1]
    record(acceptance, 7, checks, "manifests and files byte-identical across two runs")


def test_criterion_8_traffic(acceptance):
    stats, conserved = [], True
    for seed in range(10):
        ser = tr.generate_demand(tr.with_seed(E.desk_scenario(), seed))
        conserved &= bool(np.all(ser.counts.sum(axis=1) == ser.totals))
        conserved &= int(ser.totals.sum()) == int(ser.counts.sum())
        stats.append(tr.concentration_stat(ser, 0.2))
    checks = {
        "concentration 0.95 +/- 0.01": all(abs(s - 0.95) <= 0.01 for s in stats),
        "per-tick conservation": conserved,
    }
    record(acceptance, 8, checks, f"concentration_stat(0.2) over 10 seeds in [{min(stats):.4f}, {max(stats):.4f}]")
