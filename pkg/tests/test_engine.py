from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshsim import engine as E
from meshsim import forecast as fc
from meshsim import mesh, powerctl as pc
from meshsim.errors import ConfigMismatch, CoverageUnmet, UntrainedPolicy
from meshsim.traffic import Surge, TrafficSeries, generate_demand, with_seed

GOLDEN = Path(__file__).parent / "golden"
SMALL = E.desk_scenario(n_cells=36, duration_ticks=80, day_ticks=80)


def one_server_links(n_cells=1, cost=0.1):
    # share 1 MHz at se_max 1 (SNR far above 1): cost = rate / 1e6
    return E.CellLinks(gain_db=np.zeros((1, n_cells)), server=np.zeros(n_cells, dtype=int),
                       share_hz=np.array([1e6]), noise_dbm=np.array([-100.0]),
                       sensitivity_dbm=-95.0, se_max=1.0), cost * 1e6


def zone_links(n_zones):
    gain = np.array([[0.0, -200.0], [-200.0, 0.0]])
    zones = mesh.ZoneAssignment(tuple(range(n_zones)) if n_zones == 2 else (0, 0), n_zones)
    return E.make_links(gain, zones, 20e6, 7.0, -95.0, 6.0)


@pytest.fixture(scope="module")
def small_series():
    return generate_demand(SMALL)


class TestCapacityModel:
    def test_zero_demand(self):
        links, rate = one_server_links()
        served, cong = E.capacity_model([30.0], links, [0], rate)
        assert served.tolist() == [0] and cong.tolist() == [0]

    def test_saturation(self):
        links, rate = one_server_links()
        served, cong = E.capacity_model([30.0], links, [25], rate)
        assert served.tolist() == [10] and cong.tolist() == [15]

    def test_cheapest_cell_first(self):
        links = E.CellLinks(gain_db=np.array([[0.0, -80.0]]), server=np.array([0, 0]),
                            share_hz=np.array([1e6]), noise_dbm=np.array([-100.0]),
                            sensitivity_dbm=-95.0, se_max=6.0)
        # cell 0 at se 6, cell 1 near the noise floor: cell 0 fills first
        served, _ = E.capacity_model([10.0], links, [3, 50], 1e6)
        assert served[0] == 3
        assert served[1] < 50

    def test_uncovered_cell_serves_nobody(self):
        links = E.CellLinks(gain_db=np.array([[0.0, -200.0]]), server=np.array([0, 0]),
                            share_hz=np.array([1e6]), noise_dbm=np.array([-100.0]),
                            sensitivity_dbm=-95.0, se_max=1.0)
        served, cong = E.capacity_model([0.0], links, [2, 7], 1e5)
        assert served.tolist() == [2, 0]
        assert cong.tolist() == [0, 7]

    def test_two_zones_versus_reuse(self):
        # two nodes far apart: reuse (one zone) gives each the whole band; two zones halve it
        demand, rate = [10_000, 10_000], 1e6
        reuse, _ = E.capacity_model([20.0, 20.0], zone_links(1), demand, rate)
        split, _ = E.capacity_model([20.0, 20.0], zone_links(2), demand, rate)
        assert reuse.sum() == 2 * split.sum()
        assert split.sum() == 2 * 60

    def test_negative_demand(self):
        links, rate = one_server_links()
        with pytest.raises(ValueError):
            E.capacity_model([30.0], links, [-1], rate)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**16), st.lists(st.integers(0, 40), min_size=12, max_size=12),
           st.lists(st.integers(0, 15), min_size=12, max_size=12))
    def test_more_demand_never_serves_fewer(self, seed, d, extra):
        rng = np.random.default_rng(seed)
        gain = rng.uniform(-130, -60, (3, 12))
        links = E.make_links(gain, mesh.ZoneAssignment((0, 1, 0), 2), 20e6, 7.0, -95.0, 6.0)
        p = rng.uniform(0, 30, 3)
        s1, c1 = E.capacity_model(p, links, d, 1e6)
        s2, _ = E.capacity_model(p, links, np.add(d, extra), 1e6)
        assert s2.sum() >= s1.sum()
        assert np.all(s1 + c1 == d)


class TestRunSimulation:
    def test_fixed_macro_flat(self, small_series):
        rep = E.run_simulation(E.desk_macro(), small_series, 0)
        assert np.ptp(rep.power_w) == 0.0
        assert rep.power_w[0] == pytest.approx(5 * 10 ** 1.6, rel=1e-12)

    def test_zero_traffic_floor(self):
        arch = E.desk_mesh(coverage_target=0.0, n_nodes=20, side_m=1000.0)
        rep = E.run_simulation(arch, TrafficSeries(np.zeros((10, 25), dtype=int)), 1)
        assert np.all(rep.power_w == pytest.approx(20 * 1e-4, rel=1e-12))
        assert rep.served.sum() == 0 and rep.congestion_events == 0

    def test_energy_accounting(self, small_series):
        series = TrafficSeries(small_series.counts, (), tick_seconds=2.5)
        rep = E.run_simulation(E.desk_mesh(), series, 0)
        assert rep.total_energy_j == float(np.sum(rep.power_w)) * 2.5
        assert rep.total_energy_j == pytest.approx(sum(rep.power_w.tolist()) * 2.5, rel=1e-12)
        assert 0.0 <= rep.energy_to_user <= 1.0

    def test_conservation(self, small_series):
        rep = E.run_simulation(E.desk_mesh(), small_series, 0)
        np.testing.assert_array_equal(rep.served + rep.congestion + rep.uncovered, rep.demand)

    def test_aggregates_recomputable(self, small_series):
        rep = E.run_simulation(E.desk_mesh(), small_series, 0)
        agg = rep.aggregates()
        assert agg["users_per_watt"] == pytest.approx(rep.served.mean() / rep.power_w.mean(), rel=1e-12)
        assert agg["served_ratio"] == pytest.approx(rep.served.sum() / rep.demand.sum(), rel=1e-12)

    def test_deterministic(self, small_series):
        a = E.run_simulation(E.desk_mesh(), small_series, 3)
        b = E.run_simulation(E.desk_mesh(), small_series, 3)
        assert a.to_csv() == b.to_csv()
        assert a.summary() == b.summary()

    def test_adaptive_tracks_load(self, small_series):
        rep = E.run_simulation(E.desk_mesh(), small_series, 0)
        hi, lo = np.argmax(rep.demand), np.argmin(rep.demand)
        assert rep.power_w[hi] > rep.power_w[lo]

    def test_heuristic_carries_provision(self, small_series):
        arch = E.desk_mesh()
        topo = E.build_topology(arch, 0)
        links, _ = E.setup_links(arch, topo, small_series.n_cells, 0)
        d = small_series.counts[10]
        p = E.heuristic_powers(links, d, arch.power_levels, 1e6)
        _, cong = E.capacity_model(p, links, d, 1e6)
        p_top, _ = E.capacity_model(np.full(topo.n, arch.p_max_dbm), links, d, 1e6)
        assert cong.sum() <= (d - p_top).sum()

    def test_untrained_policy(self, small_series):
        with pytest.raises(UntrainedPolicy):
            E.run_simulation(E.desk_mesh(power_policy="rl"), small_series, 0)
        with pytest.raises(UntrainedPolicy):
            E.run_simulation(E.desk_mesh(forecaster=True), small_series, 0)

    def test_policy_header_mismatch(self, small_series):
        tiny = E.desk_mesh(n_nodes=4, side_m=600.0, p_max_dbm=2.0)
        env = E._rl_env(tiny, E.build_topology(tiny, 0))
        q, _ = pc.train_policy(env, pc.TrainHyper(episodes=2), seed=0)
        with pytest.raises(ConfigMismatch):
            E.run_simulation(E.desk_mesh(power_policy="rl"), small_series, 0, policy_text=pc.save_policy(q))


class TestRlMode:
    def test_policy_only_adds_power(self):
        arch = E.desk_mesh(n_nodes=4, side_m=600.0, p_max_dbm=2.0, power_policy="rl")
        series = generate_demand(E.desk_scenario(n_cells=16, duration_ticks=20, day_ticks=20))
        env = E._rl_env(arch, E.build_topology(arch, 0))
        q, _ = pc.train_policy(env, pc.TrainHyper(episodes=40), seed=0)
        rl = E.run_simulation(arch, series, 0, policy_text=pc.save_policy(q))
        heur = E.run_simulation(E.desk_mesh(n_nodes=4, side_m=600.0, p_max_dbm=2.0), series, 0)
        assert np.all(rl.power_w >= heur.power_w - 1e-12)
        again = E.run_simulation(arch, series, 0, policy_text=pc.save_policy(q))
        assert again.to_csv() == rl.to_csv()


class TestCompare:
    def test_self_comparison(self):
        rep = E.compare_architectures(E.desk_mesh(), E.desk_mesh(), SMALL, [0, 1])
        for _, metric in E.RATIO_METRICS:
            r = rep.ratios(metric)
            assert np.all((r == 1.0) | np.isnan(r))
        assert rep.power_ratio == 1.0

    def test_swap_inverts(self):
        ab = E.compare_architectures(E.desk_macro(), E.desk_mesh(), SMALL, [0, 1, 2])
        ba = E.compare_architectures(E.desk_mesh(), E.desk_macro(), SMALL, [0, 1, 2])
        for metric in ("mean_power_w", "users_per_watt", "mean_users_served"):
            np.testing.assert_allclose(ab.ratios(metric) * ba.ratios(metric), 1.0, rtol=1e-12)
            g, gsd, lo, hi = ab.gain(metric)
            g2, gsd2, lo2, hi2 = ba.gain(metric)
            assert g * g2 == pytest.approx(1.0, rel=1e-12)
            assert gsd == pytest.approx(gsd2, rel=1e-12)
            assert lo * hi2 == pytest.approx(1.0, rel=1e-12)

    def test_workers_match_serial(self):
        a = E.compare_architectures(E.desk_macro(), E.desk_mesh(), SMALL, [0, 1])
        b = E.compare_architectures(E.desk_macro(), E.desk_mesh(), SMALL, [0, 1], workers=2)
        assert a.to_csv() == b.to_csv()
        assert a.per_seed_csv() == b.per_seed_csv()

    def test_coverage_guard(self):
        weak = E.desk_mesh(p_max_dbm=-10.0)
        with pytest.raises(CoverageUnmet) as ei:
            E.compare_architectures(E.desk_macro(), weak, SMALL, [0])
        assert "mesh" in str(ei.value)

    def test_mismatched_targets(self):
        with pytest.raises(ConfigMismatch):
            E.compare_architectures(E.desk_macro(coverage_target=0.9), E.desk_mesh(), SMALL, [0])

    def test_golden_comparison(self):
        rep = E.compare_architectures(E.desk_macro(), E.desk_mesh(), SMALL, [0, 1, 2])
        assert rep.to_csv() == (GOLDEN / "comparison_small.csv").read_text()

    def test_csv_layout(self):
        rep = E.compare_architectures(E.desk_macro(), E.desk_mesh(), SMALL, [0])
        lines = rep.to_csv().splitlines()
        assert lines[0].startswith("metric,macro_mean,macro_std,mesh_mean")
        assert [ln.split(",")[0] for ln in lines[1:]] == [m for m, _ in E.RATIO_METRICS]
        curve = rep.load_curve_csv().splitlines()
        assert curve[0].startswith("architecture,load_bin_users")
        assert "np." not in rep.load_curve_csv()


class TestForecastBenefit:
    def test_surge_congestion_not_worse(self):
        sc = E.desk_scenario(surge=Surge(300, 420, 2.0))
        model, _ = E.train_traffic_forecaster(sc, fc.ForecastConfig(window=30, horizon=5, epochs=5))
        cong = {}
        for on in (False, True):
            arch = E.desk_mesh(forecaster=on)
            cong[on] = sum(E.run_simulation(arch, generate_demand(with_seed(sc, s)), s, forecaster=model)
                           .congestion_events for s in range(3))
        assert cong[True] <= cong[False]

    def test_forecaster_raises_provision_only(self):
        sc = E.desk_scenario(n_cells=16, duration_ticks=120, day_ticks=120)
        model, _ = E.train_traffic_forecaster(sc, fc.ForecastConfig(window=10, horizon=3, epochs=1))
        counts = generate_demand(sc).counts
        prov = E._provisioning(counts, E.desk_mesh(forecaster=True), model)
        base = E._provisioning(counts, E.desk_mesh(), None)
        assert np.all(prov >= base)
        np.testing.assert_array_equal(base[1:], counts[:-1])
