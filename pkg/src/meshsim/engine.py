"""Discrete-time macro vs mesh simulation and the matched-coverage comparison.

Per tick the loop is: provision demand (last observation, optionally
raised to an LSTM forecast ``horizon`` ticks ahead) -> set node powers ->
serve the actual demand -> log power, users served and congestion.

Serving model
-------------
* Each traffic cell is served by the node with the best path gain
  (static association; ties to the lower node id).
* Nodes are split into reuse zones once, from the node-to-node
  interference matrix at maximum power.  Same-zone nodes share the whole
  band; every node gets ``bandwidth / n_zones``.  Zones are conflict-free
  by construction so same-zone interference is neglected.
* A cell is covered when its best server's received power is at least
  ``sensitivity_dbm``.  A covered user costs ``rate / (share * se)`` of
  its server's resources with ``se = min(se_max, log2(1 + SNR))``.
  Servers fill their cheapest cells first; users left over are congestion.

Power draw is radiated power plus a fixed per-site overhead.
"""

from __future__ import annotations

import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import stats

from . import forecast as fc
from . import mesh
from .errors import ConfigMismatch, CoverageUnmet, UntrainedPolicy
from .powerctl import PowerControlEnv, RewardConfig, greedy_rollout, load_policy
from .traffic import TrafficScenario, TrafficSeries, generate_demand, with_seed

THERMAL_NOISE_DBM_HZ = -174.0


class PowerPolicy(enum.Enum):
    FIXED = "fixed"
    HEURISTIC = "heuristic"
    RL = "rl"


@dataclass(frozen=True)
class ArchitectureConfig:
    name: str = "mesh"
    kind: str = "mesh"                      # "macro" | "mesh"
    n_nodes: int = 50
    placement: str = "uniform"              # "uniform" | "grid" | "explicit"
    positions: tuple[tuple[float, float], ...] | None = None
    min_sep_m: float = 100.0
    model: str = "fspl"                     # "fspl" | "cost231"
    h_bs_m: float = 30.0
    environment: str = "metro"
    p_min_dbm: float = 20.0
    p_max_dbm: float = 30.0
    fixed_power_dbm: float | None = None    # fixed policy; defaults to p_max
    gain_dbi: float = 2.0
    excess_loss_db: float = 0.0
    overhead_w: float = 0.0
    power_policy: str = "heuristic"
    forecaster: bool = False
    conflict_threshold_dbm: float = -60.0
    shadowing_sigma_db: float = 0.0
    # shared radio / QoS parameters; must agree across compared architectures
    side_m: float = 2000.0
    f_mhz: float = 1800.0
    bandwidth_mhz: float = 20.0
    noise_figure_db: float = 7.0
    sensitivity_dbm: float = -95.0
    se_max: float = 6.0
    per_user_rate_mbps: float = 1.0
    ue_gain_dbi: float = 0.0
    h_ms_m: float = 1.5
    coverage_target: float = 0.95
    rl_max_steps: int = 0

    def __post_init__(self):
        if self.kind not in ("macro", "mesh"):
            raise ValueError(f"kind must be 'macro' or 'mesh', got {self.kind!r}")
        PowerPolicy(self.power_policy)
        mesh.LinkModel.parse(self.model)
        if self.p_min_dbm > self.p_max_dbm:
            raise ValueError("p_min_dbm exceeds p_max_dbm")
        if not 0.0 <= self.coverage_target <= 1.0:
            raise ValueError("coverage_target must lie in [0, 1]")
        if self.placement == "explicit" and not self.positions:
            raise ValueError("explicit placement needs positions")
        if self.positions is not None:
            object.__setattr__(self, "positions", tuple(tuple(map(float, p)) for p in self.positions))
            object.__setattr__(self, "n_nodes", len(self.positions))

    @property
    def policy(self) -> PowerPolicy:
        return PowerPolicy(self.power_policy)

    @property
    def power_levels(self) -> np.ndarray:
        steps = int(math.floor((self.p_max_dbm - self.p_min_dbm) / 3.0 + 1e-9))
        lv = [self.p_min_dbm + 3.0 * s for s in range(steps + 1)]
        if self.p_max_dbm - lv[-1] > 1e-9:
            lv.append(self.p_max_dbm)
        return np.array(lv)

    def qos_key(self) -> tuple:
        return (self.coverage_target, self.side_m, self.sensitivity_dbm, self.per_user_rate_mbps)


def build_topology(arch: ArchitectureConfig, seed: int) -> mesh.Topology:
    if arch.placement == "explicit":
        return mesh.topology_from_positions(arch.positions, arch.side_m, arch.f_mhz,
                                            arch.p_max_dbm, arch.gain_dbi)
    return mesh.generate_topology(arch.n_nodes, arch.side_m, arch.f_mhz, arch.placement,
                                  arch.min_sep_m, seed, arch.p_max_dbm, arch.gain_dbi)


@dataclass(frozen=True)
class CellLinks:
    """Everything the serving model needs about node-to-cell links."""

    gain_db: np.ndarray        # (S, C) node gain + UE gain - path loss
    server: np.ndarray         # (C,) serving node per cell
    share_hz: np.ndarray       # (S,) bandwidth available to each node
    noise_dbm: np.ndarray      # (S,) noise power in that bandwidth
    sensitivity_dbm: float
    se_max: float

    @property
    def n_servers(self) -> int:
        return self.gain_db.shape[0]

    @property
    def n_cells(self) -> int:
        return self.gain_db.shape[1]

    def serving_gain(self) -> np.ndarray:
        return self.gain_db[self.server, np.arange(self.n_cells)]

    def user_cost(self, powers_dbm, rate_bps: float) -> np.ndarray:
        """Per-cell fraction of the server's resources one user consumes (inf if uncovered)."""
        p = np.asarray(powers_dbm, dtype=float)[self.server]
        rx = p + self.serving_gain()
        snr_db = rx - self.noise_dbm[self.server]
        se = np.minimum(self.se_max, np.log2(1.0 + 10.0 ** (snr_db / 10.0)))
        cost = rate_bps / (self.share_hz[self.server] * se)
        return np.where(rx >= self.sensitivity_dbm, cost, np.inf)


def make_links(gain_db: np.ndarray, zones: mesh.ZoneAssignment, bandwidth_hz: float,
               noise_figure_db: float, sensitivity_dbm: float, se_max: float) -> CellLinks:
    server = np.argmax(gain_db, axis=0)
    share = np.full(gain_db.shape[0], bandwidth_hz / zones.n_zones)
    noise = THERMAL_NOISE_DBM_HZ + 10.0 * np.log10(share) + noise_figure_db
    return CellLinks(gain_db, server, share, noise, sensitivity_dbm, se_max)


def _fill(server: np.ndarray, cost: np.ndarray, demand: np.ndarray, n_servers: int) -> np.ndarray:
    """Cheapest-first integer filling of each server's unit budget."""
    demand = np.asarray(demand, dtype=np.int64)
    C = len(demand)
    order = np.lexsort((np.arange(C), cost, server))
    s, c, d = server[order], cost[order], demand[order]
    ok = np.isfinite(c)
    # uncovered cells sort last within a server and never consume budget
    use = np.where(ok & (d > 0), d * np.where(ok, c, 0.0), 0.0)
    cum = np.cumsum(use)
    starts = np.searchsorted(s, np.arange(n_servers))
    base = np.concatenate([[0.0], cum])[starts][s]
    before = cum - use - base
    after = before + use
    tol = 1e-9
    served = np.where(after <= 1.0 + tol, d, 0)
    partial = (after > 1.0 + tol) & (before <= 1.0 + tol) & ok
    room = np.floor((1.0 - before[partial]) / c[partial] + tol).astype(np.int64)
    served[partial] = np.clip(room, 0, d[partial])
    served = np.where(ok, served, 0)
    out = np.empty(C, dtype=np.int64)
    out[order] = served
    return out


def capacity_model(powers_dbm, links: CellLinks, demand_per_cell,
                   per_user_rate_bps: float) -> tuple[np.ndarray, np.ndarray]:
    """Users served per cell and users left unserved (congestion) per cell."""
    demand = np.asarray(demand_per_cell, dtype=np.int64)
    if np.any(demand < 0):
        raise ValueError("demand must be non-negative")
    cost = links.user_cost(powers_dbm, per_user_rate_bps)
    served = _fill(links.server, cost, demand, links.n_servers)
    return served, demand - served


def coverage_fraction(powers_dbm, links: CellLinks) -> float:
    rx = np.asarray(powers_dbm, dtype=float)[:, None] + links.gain_db
    return float(np.mean(rx.max(axis=0) >= links.sensitivity_dbm))


def heuristic_powers(links: CellLinks, provision, levels: np.ndarray,
                     rate_bps: float, keep_coverage: bool = True) -> np.ndarray:
    """Lowest power level at which each node carries its provisioned load.

    With ``keep_coverage`` the level must also cover every cell the node
    serves (cells no level can cover are ignored).  Nodes that cannot
    meet the conditions at any level go to the highest.
    """
    provision = np.asarray(provision, dtype=float)
    S = links.n_servers
    top = links.user_cost(np.full(S, levels[-1]), rate_bps)
    coverable = np.isfinite(top) & keep_coverage
    need = np.empty((len(levels), S))
    for li, p in enumerate(levels):
        cost = links.user_cost(np.full(S, p), rate_bps)
        use = provision * np.where(provision > 0, cost, 0.0)
        need[li] = np.bincount(links.server, weights=use, minlength=S)
        gaps = np.bincount(links.server, weights=coverable & ~np.isfinite(cost), minlength=S)
        need[li][gaps > 0] = np.inf
    ok = need <= 1.0 + 1e-9
    first = np.where(ok.any(axis=0), ok.argmax(axis=0), len(levels) - 1)
    return levels[first]


@dataclass
class SimReport:
    arch: ArchitectureConfig
    seed: int
    tick_seconds: float
    power_w: np.ndarray
    demand: np.ndarray
    served: np.ndarray
    congestion: np.ndarray
    uncovered: np.ndarray
    coverage: np.ndarray
    useful_rf_w: np.ndarray
    mean_node_power_dbm: np.ndarray
    n_zones: int
    n_nodes: int

    @property
    def total_energy_j(self) -> float:
        return float(np.sum(self.power_w) * self.tick_seconds)

    @property
    def useful_energy_j(self) -> float:
        return float(np.sum(self.useful_rf_w) * self.tick_seconds)

    @property
    def mean_power_w(self) -> float:
        return float(np.mean(self.power_w))

    @property
    def users_per_watt(self) -> float:
        return float(np.mean(self.served)) / self.mean_power_w

    @property
    def energy_to_user(self) -> float:
        return self.useful_energy_j / self.total_energy_j

    @property
    def served_ratio(self) -> float:
        d = float(np.sum(self.demand))
        return float(np.sum(self.served)) / d if d else 1.0

    @property
    def congestion_events(self) -> int:
        return int(np.sum(self.congestion))

    @property
    def reuse_gain(self) -> float:
        return self.n_nodes / self.n_zones

    def aggregates(self) -> dict[str, float]:
        return {
            "mean_power_w": self.mean_power_w,
            "total_energy_j": self.total_energy_j,
            "useful_energy_j": self.useful_energy_j,
            "users_per_watt": self.users_per_watt,
            "energy_to_user": self.energy_to_user,
            "mean_users_served": float(np.mean(self.served)),
            "served_ratio": self.served_ratio,
            "congestion_events": float(self.congestion_events),
            "coverage_min": float(np.min(self.coverage)),
            "coverage_mean": float(np.mean(self.coverage)),
            "n_zones": float(self.n_zones),
            "reuse_gain": self.reuse_gain,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("tick,power_w,demand,served,congestion,uncovered,coverage,useful_rf_w,mean_node_power_dbm\n")
        for t in range(len(self.power_w)):
            buf.write(f"{t},{self.power_w[t]!r},{int(self.demand[t])},{int(self.served[t])},"
                      f"{int(self.congestion[t])},{int(self.uncovered[t])},{self.coverage[t]!r},"
                      f"{self.useful_rf_w[t]!r},{self.mean_node_power_dbm[t]!r}\n")
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"architecture={self.arch.name} kind={self.arch.kind} seed={self.seed}"]
        lines += [f"{k}={v!r}" for k, v in self.aggregates().items()]
        return "\n".join(lines) + "\n"


def _provisioning(counts: np.ndarray, arch: ArchitectureConfig,
                  model: fc.LstmModel | None) -> np.ndarray:
    """Demand each tick is provisioned for, known before the tick starts."""
    prev = np.vstack([counts[:1], counts[:-1]]).astype(float)
    if not arch.forecaster:
        return prev
    if model is None:
        raise UntrainedPolicy("forecaster enabled but no trained forecaster was supplied")
    totals = counts.sum(axis=1).astype(float)
    T = len(totals)
    w = model.window
    out = prev.copy()
    if T - 1 < w:
        return out
    # forecast made at the end of tick t-1 (window ending there), for tick t-1+horizon
    windows = np.lib.stride_tricks.sliding_window_view(totals, w)[: T - w]
    ahead = fc.predict_batch(model, windows)           # for ticks w .. T-1 (as "t")
    prev_tot = totals[w - 1:T - 1]
    share = np.where(prev_tot[:, None] > 0,
                     counts[w - 1:T - 1] / np.maximum(prev_tot[:, None], 1.0),
                     1.0 / counts.shape[1])
    out[w:] = np.maximum(prev[w:], ahead[:, None] * share)
    return out


def _rl_env(arch: ArchitectureConfig, topo: mesh.Topology, cfg: RewardConfig | None = None):
    cfg = cfg or RewardConfig(alpha=0.1, beta=1.0, i_threshold_dbm=arch.conflict_threshold_dbm)
    return PowerControlEnv(topo, cfg, p_min_dbm=arch.p_min_dbm, p_max_dbm=arch.p_max_dbm,
                           k=3, model=arch.model, h_bs_m=arch.h_bs_m, h_ms_m=arch.h_ms_m,
                           environment=arch.environment, excess_loss_db=arch.excess_loss_db)


def setup_links(arch: ArchitectureConfig, topo: mesh.Topology, n_cells: int,
                seed: int) -> tuple[CellLinks, mesh.ZoneAssignment]:
    cells = mesh.grid_points(n_cells, arch.side_m)
    kw = dict(h_bs_m=arch.h_bs_m, h_ms_m=arch.h_ms_m, environment=arch.environment)
    loss = mesh.point_loss(topo.xy, cells, arch.model, arch.f_mhz, clamp_min_km=True, **kw)
    loss = loss + arch.excess_loss_db
    if arch.shadowing_sigma_db > 0:
        rng = np.random.default_rng([seed, 0x5AD0])
        loss = loss + rng.normal(0.0, arch.shadowing_sigma_db, loss.shape)
    gain = topo.gains_dbi[:, None] + arch.ue_gain_dbi - loss
    node_gain = mesh.link_gain_matrix(topo, arch.model, **kw) - arch.excess_loss_db
    imat = mesh.interference_from_gains(node_gain, np.full(topo.n, arch.p_max_dbm))
    zones = mesh.partition_zones(imat, arch.conflict_threshold_dbm)
    links = make_links(gain, zones, arch.bandwidth_mhz * 1e6, arch.noise_figure_db,
                       arch.sensitivity_dbm, arch.se_max)
    return links, zones


def run_simulation(arch: ArchitectureConfig, traffic: TrafficSeries, seed: int = 0, *,
                   forecaster: fc.LstmModel | None = None, policy_text: str | None = None,
                   reward_cfg: RewardConfig | None = None) -> SimReport:
    """Simulate one architecture over a demand series; deterministic per seed."""
    if traffic.n_cells < 1:
        raise ConfigMismatch("traffic has no cells")
    topo = build_topology(arch, seed)
    links, zones = setup_links(arch, topo, traffic.n_cells, seed)
    rate = arch.per_user_rate_mbps * 1e6
    levels = arch.power_levels
    counts = traffic.counts
    provision = _provisioning(counts, arch, forecaster)

    policy = arch.policy
    q = env = None
    if policy is PowerPolicy.RL:
        if policy_text is None:
            raise UntrainedPolicy(f"{arch.name}: rl power policy requested without a policy file")
        env = _rl_env(arch, topo, reward_cfg)
        try:
            q = load_policy(policy_text, env)
        except ValueError as exc:
            raise ConfigMismatch(f"{arch.name}: {exc}") from None
    fixed = np.full(topo.n, arch.p_max_dbm if arch.fixed_power_dbm is None else arch.fixed_power_dbm)

    T = counts.shape[0]
    out = {k: np.zeros(T) for k in ("power", "served", "cong", "unc", "cov", "useful", "meanp")}
    overhead = arch.overhead_w * topo.n
    for t in range(T):
        if policy is PowerPolicy.FIXED:
            p = fixed
        else:
            p = heuristic_powers(links, provision[t], levels, rate, arch.coverage_target > 0)
            if policy is PowerPolicy.RL:
                steps = arch.rl_max_steps or 2 * topo.n
                state, _, _ = greedy_rollout(env, q, env.make_state(p), steps, floor_dbm=p)
                p = np.asarray(state.powers_dbm)
        served, cong = capacity_model(p, links, counts[t], rate)
        cost = links.user_cost(p, rate)
        unc = np.where(np.isfinite(cost), 0, counts[t])
        rx_w = 10.0 ** ((p[links.server] + links.serving_gain() - 30.0) / 10.0)
        watts = 10.0 ** ((p - 30.0) / 10.0)
        out["power"][t] = watts.sum() + overhead
        out["served"][t] = served.sum()
        out["cong"][t] = (cong - unc).sum()
        out["unc"][t] = unc.sum()
        out["cov"][t] = coverage_fraction(p, links)
        out["useful"][t] = float(np.sum(served * rx_w))
        out["meanp"][t] = 10.0 * np.log10(watts.mean()) + 30.0
    return SimReport(arch, seed, traffic.tick_seconds, out["power"], counts.sum(axis=1).astype(float),
                     out["served"], out["cong"], out["unc"], out["cov"], out["useful"],
                     out["meanp"], zones.n_zones, topo.n)


RATIO_METRICS = (
    ("users_per_watt", "users_per_watt"),
    ("energy_to_user", "energy_to_user"),
    ("mean_power_w", "mean_power_w"),
    ("reuse_gain", "reuse_gain"),
    ("mean_users_served", "mean_users_served"),
    ("served_ratio", "served_ratio"),
    ("congestion_events", "congestion_events"),
    ("coverage_min", "coverage_min"),
)


@dataclass
class ComparisonReport:
    seeds: list[int]
    macro: list[SimReport]
    mesh: list[SimReport]

    def values(self, side: str, metric: str) -> np.ndarray:
        return np.array([r.aggregates()[metric] for r in getattr(self, side)])

    def ratios(self, metric: str) -> np.ndarray:
        """Per-seed mesh / macro ratio (NaN where the macro value is zero)."""
        a, b = self.values("macro", metric), self.values("mesh", metric)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(a != 0, b / a, np.nan)

    def gain(self, metric: str) -> tuple[float, float, float, float]:
        """Geometric mean ratio, geometric std factor and 95% t-interval."""
        r = self.ratios(metric)
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            return (math.nan,) * 4
        lg = np.log(r)
        m = float(lg.mean())
        if len(lg) < 2:
            return math.exp(m), 1.0, math.exp(m), math.exp(m)
        sd = float(lg.std(ddof=1))
        half = float(stats.t.ppf(0.975, len(lg) - 1)) * sd / math.sqrt(len(lg))
        return math.exp(m), math.exp(sd), math.exp(m - half), math.exp(m + half)

    @property
    def power_ratio(self) -> float:
        return self.gain("mean_power_w")[0]

    @property
    def upw_ratio(self) -> float:
        return self.gain("users_per_watt")[0]

    @property
    def served_ratio(self) -> float:
        return self.gain("mean_users_served")[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("metric,macro_mean,macro_std,mesh_mean,mesh_std,gain,gain_gsd,gain_ci_low,gain_ci_high\n")
        for label, metric in RATIO_METRICS:
            a, b = self.values("macro", metric), self.values("mesh", metric)
            sd = lambda v: float(v.std(ddof=1)) if len(v) > 1 else 0.0  # noqa: E731
            g = self.gain(metric)
            cells = [float(a.mean()), sd(a), float(b.mean()), sd(b), *g]
            buf.write(label + "," + ",".join("NA" if not math.isfinite(v) else repr(v) for v in cells) + "\n")
        return buf.getvalue()

    def per_seed_csv(self) -> str:
        buf = io.StringIO()
        cols = [m for _, m in RATIO_METRICS]
        buf.write("seed,architecture," + ",".join(cols) + "\n")
        for side in ("macro", "mesh"):
            for r in getattr(self, side):
                agg = r.aggregates()
                buf.write(f"{r.seed},{r.arch.name}," + ",".join(repr(agg[c]) for c in cols) + "\n")
        return buf.getvalue()

    def load_curve_csv(self) -> str:
        """Power and users/W against offered load, averaged over seeds, per architecture."""
        buf = io.StringIO()
        buf.write("architecture,load_bin_users,ticks,mean_power_w,users_per_watt,mean_node_power_dbm\n")
        for side in ("macro", "mesh"):
            reps = getattr(self, side)
            demand = np.concatenate([r.demand for r in reps])
            power = np.concatenate([r.power_w for r in reps])
            served = np.concatenate([r.served for r in reps])
            node = np.concatenate([r.mean_node_power_dbm for r in reps])
            if demand.max() <= 0:
                continue
            edges = np.linspace(0.0, demand.max(), 11)
            idx = np.clip(np.digitize(demand, edges[1:-1]), 0, 9)
            for b in range(10):
                sel = idx == b
                if not np.any(sel):
                    continue
                buf.write(f"{reps[0].arch.name},{float(0.5 * (edges[b] + edges[b + 1]))!r},{int(sel.sum())},"
                          f"{float(power[sel].mean())!r},{float(served[sel].mean() / power[sel].mean())!r},"
                          f"{float(node[sel].mean())!r}\n")
        return buf.getvalue()


def _one_run(args):
    arch, traffic, seed, kw = args
    if isinstance(traffic, TrafficScenario):
        traffic = generate_demand(with_seed(traffic, seed))
    return run_simulation(arch, traffic, seed, **kw)


def compare_architectures(macro: ArchitectureConfig, mesh_arch: ArchitectureConfig,
                          traffic, seeds, *, workers: int = 1, macro_kw: dict | None = None,
                          mesh_kw: dict | None = None, check_coverage: bool = True) -> ComparisonReport:
    """Run both architectures per seed under identical traffic and QoS targets.

    ``traffic`` is either a fixed :class:`TrafficSeries` or a
    :class:`TrafficScenario` regenerated with each seed.  Raises
    :class:`CoverageUnmet` if either side's worst-tick coverage falls
    below the shared target.
    """
    if macro.qos_key() != mesh_arch.qos_key():
        raise ConfigMismatch("compared architectures must share coverage target, area, "
                             "sensitivity and per-user rate")
    seeds = [int(s) for s in seeds]
    jobs = [(macro, traffic, s, macro_kw or {}) for s in seeds]
    jobs += [(mesh_arch, traffic, s, mesh_kw or {}) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    rep = ComparisonReport(seeds, results[:len(seeds)], results[len(seeds):])
    if check_coverage:
        for side in ("macro", "mesh"):
            for r in getattr(rep, side):
                cov = float(np.min(r.coverage))
                if cov < r.arch.coverage_target:
                    raise CoverageUnmet(f"{r.arch.name} (seed {r.seed})", cov, r.arch.coverage_target)
    return rep


def train_traffic_forecaster(scenario: TrafficScenario, cfg: fc.ForecastConfig,
                             history_seed_offset: int = 10_000) -> tuple[fc.LstmModel, fc.LossCurve]:
    """Fit the shared forecaster on a separately seeded history of total demand."""
    hist = generate_demand(replace(scenario, seed=scenario.seed + history_seed_offset))
    return fc.train_forecaster(hist.totals.astype(float), cfg)


def config_dict(arch: ArchitectureConfig) -> dict:
    return {f.name: getattr(arch, f.name) for f in fields(arch)}


# Desk-scale matched-coverage setup: 5 macro sites vs 50 mesh nodes over 2 km x 2 km.
DESK_MACRO_SITES = ((0.0, 0.0), (2000.0, 0.0), (0.0, 2000.0), (2000.0, 2000.0), (1000.0, 1000.0))
DESK_CONFLICT_DBM = -90.0
# street-level clutter for low-mounted nodes on top of FSPL
DESK_MESH_EXCESS_LOSS_DB = 28.0


def desk_macro(**over) -> ArchitectureConfig:
    base = dict(name="macro", kind="macro", placement="explicit", positions=DESK_MACRO_SITES,
                model="cost231", h_bs_m=40.0, p_min_dbm=30.0, p_max_dbm=46.0, gain_dbi=15.0,
                power_policy="fixed", conflict_threshold_dbm=DESK_CONFLICT_DBM)
    base.update(over)
    return ArchitectureConfig(**base)


def desk_mesh(**over) -> ArchitectureConfig:
    base = dict(name="mesh", kind="mesh", n_nodes=50, placement="uniform", min_sep_m=100.0,
                model="fspl", p_min_dbm=-10.0, p_max_dbm=30.0, gain_dbi=2.0,
                excess_loss_db=DESK_MESH_EXCESS_LOSS_DB, power_policy="heuristic",
                conflict_threshold_dbm=DESK_CONFLICT_DBM)
    base.update(over)
    return ArchitectureConfig(**base)


def desk_scenario(**over) -> TrafficScenario:
    base = dict(n_cells=100, duration_ticks=600, base_users=200.0, diurnal_amplitude=0.6,
                day_ticks=600, noise_sigma=0.05)
    base.update(over)
    return TrafficScenario(**base)
