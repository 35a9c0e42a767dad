"""Node placement, pairwise links, interference matrices and reuse zones."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import propagation as prop
from .errors import CoLocated, DomainError, KOutOfRange, PlacementInfeasible


class Placement(enum.Enum):
    UNIFORM_RANDOM = "uniform"
    GRID = "grid"

    @classmethod
    def parse(cls, value) -> "Placement":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "")
        if key in ("uniform", "uniformrandom", "random"):
            return cls.UNIFORM_RANDOM
        if key == "grid":
            return cls.GRID
        raise ValueError(f"unknown placement {value!r}; use 'uniform' or 'grid'")


class LinkModel(enum.Enum):
    FSPL = "fspl"
    COST231 = "cost231"

    @classmethod
    def parse(cls, value) -> "LinkModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown link model {value!r}; use 'fspl' or 'cost231'") from None


@dataclass(frozen=True)
class Node:
    id: int
    x_m: float
    y_m: float
    p_tx_dbm: float = 20.0
    g_dbi: float = 0.0


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    side_m: float
    f_mhz: float
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 1:
            raise ValueError("a topology needs at least 1 node")
        if [n.id for n in self.nodes] != list(range(len(self.nodes))):
            raise ValueError("node ids must be contiguous from 0 in order")
        for n in self.nodes:
            if not (0.0 <= n.x_m <= self.side_m and 0.0 <= n.y_m <= self.side_m):
                raise DomainError(f"node {n.id} position", (n.x_m, n.y_m),
                                  f"[0, {self.side_m:g}]^2")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def xy(self) -> np.ndarray:
        return np.array([[n.x_m, n.y_m] for n in self.nodes], dtype=float)

    @property
    def powers_dbm(self) -> np.ndarray:
        return np.array([n.p_tx_dbm for n in self.nodes], dtype=float)

    @property
    def gains_dbi(self) -> np.ndarray:
        return np.array([n.g_dbi for n in self.nodes], dtype=float)

    def with_powers(self, powers_dbm: Sequence[float]) -> "Topology":
        if len(powers_dbm) != self.n:
            raise ValueError("power vector length does not match node count")
        nodes = tuple(replace(nd, p_tx_dbm=float(p)) for nd, p in zip(self.nodes, powers_dbm))
        return replace(self, nodes=nodes)

    def to_table(self) -> str:
        """Plain-text CSV table; scenario metadata rides in ``#`` comment lines."""
        buf = io.StringIO()
        buf.write(f"# side_m={self.side_m!r}\n# f_mhz={self.f_mhz!r}\n# seed={self.seed!r}\n")
        buf.write("id,x_m,y_m,p_tx_dbm,g_dbi\n")
        for n in self.nodes:
            buf.write(f"{n.id},{n.x_m!r},{n.y_m!r},{n.p_tx_dbm!r},{n.g_dbi!r}\n")
        return buf.getvalue()

    @classmethod
    def from_table(cls, text: str, side_m: float | None = None,
                   f_mhz: float | None = None) -> "Topology":
        meta = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
                continue
            if line.startswith("id,"):
                continue
            parts = line.split(",")
            rows.append(Node(int(parts[0]), float(parts[1]), float(parts[2]),
                             float(parts[3]), float(parts[4])))
        seed = meta.get("seed")
        return cls(
            nodes=tuple(rows),
            side_m=float(side_m if side_m is not None else meta["side_m"]),
            f_mhz=float(f_mhz if f_mhz is not None else meta["f_mhz"]),
            seed=None if seed in (None, "None") else int(seed),
        )


def grid_shape(n: int) -> tuple[int, int]:
    """(rows, cols) with rows*cols == n, rows <= cols and cols-rows minimal."""
    rows = int(math.isqrt(n))
    while n % rows:
        rows -= 1
    return rows, n // rows


def grid_points(n: int, side_m: float) -> np.ndarray:
    """Evenly spaced points with half-spacing margins, row-major (x fastest)."""
    rows, cols = grid_shape(n)
    sx, sy = side_m / cols, side_m / rows
    return np.array([((c + 0.5) * sx, (r + 0.5) * sy)
                     for r in range(rows) for c in range(cols)], dtype=float)


def generate_topology(n: int, side_m: float, f_mhz: float,
                      placement=Placement.UNIFORM_RANDOM, min_sep_m: float = 1.0,
                      seed: int = 0, p_tx_dbm: float = 20.0, g_dbi: float = 0.0,
                      max_attempts_per_node: int = 1000) -> Topology:
    """Place ``n`` nodes in a square of side ``side_m``.

    Uniform placement uses rejection sampling against ``min_sep_m`` with a
    bounded number of draws per node; running out raises
    :class:`PlacementInfeasible` carrying the achieved count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if side_m <= 0:
        raise ValueError("side_m must be positive")
    if min_sep_m < 1.0:
        raise ValueError("min_sep_m must be >= 1 m")
    placement = Placement.parse(placement)

    if placement is Placement.GRID:
        pts = grid_points(n, side_m)
        rows, cols = grid_shape(n)
        spacing = min(side_m / rows, side_m / cols)
        if spacing < min_sep_m:
            raise PlacementInfeasible(n, 0, min_sep_m)
    else:
        rng = np.random.default_rng(seed)
        pts = np.empty((n, 2))
        placed = 0
        budget = max_attempts_per_node * n
        while placed < n:
            if budget == 0:
                raise PlacementInfeasible(n, placed, min_sep_m)
            budget -= 1
            cand = rng.uniform(0.0, side_m, size=2)
            if placed and np.min(np.hypot(*(pts[:placed] - cand).T)) < min_sep_m:
                continue
            pts[placed] = cand
            placed += 1

    nodes = tuple(Node(i, float(x), float(y), float(p_tx_dbm), float(g_dbi))
                  for i, (x, y) in enumerate(pts))
    return Topology(nodes=nodes, side_m=float(side_m), f_mhz=float(f_mhz), seed=seed)


def topology_from_positions(positions, side_m: float, f_mhz: float,
                            p_tx_dbm: float = 20.0, g_dbi: float = 0.0) -> Topology:
    nodes = tuple(Node(i, float(x), float(y), float(p_tx_dbm), float(g_dbi))
                  for i, (x, y) in enumerate(positions))
    return Topology(nodes=nodes, side_m=float(side_m), f_mhz=float(f_mhz), seed=None)


def distance(a: Node, b: Node) -> float:
    return math.hypot(a.x_m - b.x_m, a.y_m - b.y_m)


def fspl_array(d_m: np.ndarray, f_mhz: float) -> np.ndarray:
    """Vectorised :func:`propagation.fspl` (no validation)."""
    return 20.0 * np.log10(d_m) + 20.0 * math.log10(f_mhz) + prop.FSPL_CONSTANT_DB


def cost231_array(d_km: np.ndarray, f_mhz: float, h_bs_m: float, h_ms_m: float,
                  environment=prop.Environment.MEDIUM_CITY) -> np.ndarray:
    """Vectorised COST-231; scalar parameters are domain-checked once."""
    env = prop.Environment.parse(environment)
    # validates f, heights; distance range is the caller's job
    at_1km = prop.cost231(f_mhz, h_bs_m, h_ms_m, 1.0, env)
    slope = 44.9 - 6.55 * math.log10(h_bs_m)
    return at_1km + slope * np.log10(d_km)


def point_loss(src_xy: np.ndarray, dst_xy: np.ndarray, model, f_mhz: float, *,
               h_bs_m: float = 30.0, h_ms_m: float = 1.5,
               environment=prop.Environment.MEDIUM_CITY,
               clamp_min_km: bool = False) -> np.ndarray:
    """Path loss (dB) from every source point to every destination point.

    With ``clamp_min_km`` COST-231 distances under 1 km are evaluated at
    1 km (the model's lower bound), which overstates loss close to a site.
    Without it they raise :class:`DomainError`.
    """
    model = LinkModel.parse(model)
    d = np.hypot(src_xy[:, None, 0] - dst_xy[None, :, 0],
                 src_xy[:, None, 1] - dst_xy[None, :, 1])
    if model is LinkModel.FSPL:
        return fspl_array(np.maximum(d, 1.0), f_mhz)
    d_km = d / 1000.0
    if clamp_min_km:
        d_km = np.maximum(d_km, prop.D_RANGE_KM[0])
    bad = np.argwhere((d_km < prop.D_RANGE_KM[0]) | (d_km > prop.D_RANGE_KM[1]))
    if bad.size:
        i, j = bad[0]
        raise DomainError(f"d_km[{i},{j}]", float(d_km[i, j]), "[1, 20]")
    return cost231_array(d_km, f_mhz, h_bs_m, h_ms_m, environment)


class InterferenceMatrix:
    """N x N received powers in dBm; entry (i, j) is power at j from i.

    The diagonal is undefined.  Indexing it raises ``IndexError`` instead
    of handing back a number; :meth:`as_array` exposes it as NaN.
    """

    __slots__ = ("_m",)

    def __init__(self, entries: np.ndarray):
        m = np.array(entries, dtype=float, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("interference matrix must be square")
        np.fill_diagonal(m, np.nan)
        off = ~np.eye(m.shape[0], dtype=bool)
        if not np.all(np.isfinite(m[off])):
            raise ValueError("off-diagonal interference entries must be finite")
        m.setflags(write=False)
        self._m = m

    @property
    def n(self) -> int:
        return self._m.shape[0]

    def entry(self, i: int, j: int) -> float:
        if i == j:
            raise IndexError(f"diagonal entry ({i}, {i}) of an interference matrix is undefined")
        return float(self._m[i, j])

    def __getitem__(self, ij: tuple[int, int]) -> float:
        return self.entry(*ij)

    def as_array(self) -> np.ndarray:
        """Read-only view, NaN on the diagonal."""
        return self._m

    def off_diagonal_mask(self) -> np.ndarray:
        return ~np.eye(self.n, dtype=bool)

    def incoming_mw(self) -> np.ndarray:
        """Total received interference per node in mW (diagonal excluded)."""
        return np.nansum(10.0 ** (self._m / 10.0), axis=0)

    def to_csv(self) -> str:
        lines = []
        for i in range(self.n):
            lines.append(",".join("NA" if i == j else repr(float(self._m[i, j]))
                                  for j in range(self.n)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "InterferenceMatrix":
        rows = [[math.nan if tok == "NA" else float(tok) for tok in line.split(",")]
                for line in text.splitlines() if line.strip()]
        return cls(np.array(rows))


def link_loss_matrix(topology: Topology, model=LinkModel.FSPL, *,
                     h_bs_m: float = 30.0, h_ms_m: float = 1.5,
                     environment=prop.Environment.MEDIUM_CITY) -> np.ndarray:
    """Pairwise path loss in dB with a NaN diagonal."""
    model = LinkModel.parse(model)
    xy = topology.xy
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    off = ~np.eye(topology.n, dtype=bool)
    close = np.argwhere((d < 1.0) & off)
    if close.size:
        i, j = close[0]
        raise CoLocated(f"d[{i},{j}]", float(d[i, j]), ">= 1 m")
    np.fill_diagonal(d, 1000.0)  # placeholder, overwritten below
    if model is LinkModel.FSPL:
        loss = fspl_array(d, topology.f_mhz)
    else:
        d_km = d / 1000.0
        bad = np.argwhere(((d_km < 1.0) | (d_km > 20.0)) & off)
        if bad.size:
            i, j = bad[0]
            raise DomainError(f"d_km[{i},{j}]", float(d_km[i, j]), "[1, 20]")
        loss = cost231_array(d_km, topology.f_mhz, h_bs_m, h_ms_m, environment)
    np.fill_diagonal(loss, np.nan)
    return loss


def link_gain_matrix(topology: Topology, model=LinkModel.FSPL, **kw) -> np.ndarray:
    """G_i + G_j - PL(d_ij): the power-independent part of the link equation."""
    g = topology.gains_dbi
    return g[:, None] + g[None, :] - link_loss_matrix(topology, model, **kw)


def interference_from_gains(gain_matrix: np.ndarray, powers_dbm) -> InterferenceMatrix:
    p = np.asarray(powers_dbm, dtype=float)
    return InterferenceMatrix(p[:, None] + gain_matrix)


def build_interference_matrix(topology: Topology, model=LinkModel.FSPL, *,
                              powers_dbm=None, **kw) -> InterferenceMatrix:
    """Received power ``P_i + G_i + G_j - PL(d_ij)`` for every ordered pair.

    ``powers_dbm`` overrides the node powers stored in the topology.
    Keyword arguments (heights, environment) go to the COST-231 model.
    """
    powers = topology.powers_dbm if powers_dbm is None else powers_dbm
    return interference_from_gains(link_gain_matrix(topology, model, **kw), powers)


def top_k_interferers(imat: InterferenceMatrix, node_id: int, k: int) -> list[tuple[int, float]]:
    """The ``k`` strongest incoming entries at ``node_id``, strongest first.

    Ties go to the smaller source id.
    """
    if not 1 <= k <= imat.n - 1:
        raise KOutOfRange(f"k={k} outside [1, {imat.n - 1}]")
    col = imat.as_array()[:, node_id]
    sources = [i for i in range(imat.n) if i != node_id]
    sources.sort(key=lambda i: (-col[i], i))
    return [(i, float(col[i])) for i in sources[:k]]


def top_k_features(imat: InterferenceMatrix, k: int) -> np.ndarray:
    """(N, k) array of the top-k incoming powers per node, descending."""
    if not 1 <= k <= imat.n - 1:
        raise KOutOfRange(f"k={k} outside [1, {imat.n - 1}]")
    m = imat.as_array()
    out = np.empty((imat.n, k))
    for j in range(imat.n):
        col = np.delete(m[:, j], j)
        out[j] = -np.sort(-col)[:k]
    return out


@dataclass(frozen=True)
class ZoneAssignment:
    zone_of: tuple[int, ...]
    n_zones: int

    @property
    def n(self) -> int:
        return len(self.zone_of)

    def members(self, zone: int) -> list[int]:
        return [i for i, z in enumerate(self.zone_of) if z == zone]


def conflict_graph(imat: InterferenceMatrix, conflict_threshold_dbm: float) -> np.ndarray:
    """Boolean adjacency: i, j conflict if either direction exceeds the threshold."""
    m = imat.as_array()
    with np.errstate(invalid="ignore"):
        hot = m > conflict_threshold_dbm
    adj = hot | hot.T
    np.fill_diagonal(adj, False)
    return adj


def _welsh_powell(adj: np.ndarray) -> list[int]:
    """First-fit colouring by descending degree, ties by ascending id."""
    n = adj.shape[0]
    degree = adj.sum(axis=1)
    order = np.lexsort((np.arange(n), -degree))
    zone = np.full(n, -1)
    for i in order:
        used = zone[adj[i] & (zone >= 0)]
        free = np.ones(len(used) + 1, dtype=bool)
        free[used[used <= len(used)]] = False
        zone[i] = int(np.argmax(free))
    return zone.tolist()


def _clique_lower_bound(adj: np.ndarray) -> int:
    """Size of a greedily grown clique; no colouring can use fewer colours."""
    n = adj.shape[0]
    if n == 0:
        return 0
    degree = adj.sum(axis=1)
    best = 1
    for v in range(n):
        cand = adj[v].copy()
        size = 1
        while cand.any():
            u = int(np.argmax(np.where(cand, degree, -1)))
            size += 1
            cand &= adj[u]
        best = max(best, size)
    return best


def partition_zones(imat: InterferenceMatrix, conflict_threshold_dbm: float) -> ZoneAssignment:
    """Conflict-free zones from Welsh-Powell greedy colouring.

    Plain Welsh-Powell can use fewer colours on a graph with *more*
    edges, which would make the reuse gain jump up as the threshold
    drops.  Any colouring of a lower-threshold (super)graph is also
    valid here, so the greedy colouring is run on the conflict graph and
    on each of its threshold supergraphs and the one with fewest zones
    is kept (earliest, i.e. highest threshold, on ties).  That makes the
    zone count monotone in the threshold by construction.  The search
    stops early once a greedy clique bound shows no better count exists.
    """
    if not math.isfinite(conflict_threshold_dbm):
        raise ValueError("conflict threshold must be finite")
    adj = conflict_graph(imat, conflict_threshold_dbm)
    best = _welsh_powell(adj)
    best_n = max(best) + 1
    floor = _clique_lower_bound(adj)
    m = imat.as_array()
    w = np.fmax(m, m.T)
    iu, ju = np.triu_indices(imat.n, 1)
    weights = w[iu, ju]
    missing = np.flatnonzero(~adj[iu, ju])
    # add non-edges strongest first; each distinct weight is one supergraph
    missing = missing[np.lexsort((missing, -weights[missing]))]
    sup = adj.copy()
    k = 0
    while k < len(missing) and best_n > floor:
        wk = weights[missing[k]]
        while k < len(missing) and weights[missing[k]] == wk:
            a, b = iu[missing[k]], ju[missing[k]]
            sup[a, b] = sup[b, a] = True
            k += 1
        cand = _welsh_powell(sup)
        if max(cand) + 1 < best_n:
            best, best_n = cand, max(cand) + 1
    return ZoneAssignment(zone_of=tuple(best), n_zones=best_n)


def same_zone_conflicts(imat: InterferenceMatrix, zones: ZoneAssignment,
                        conflict_threshold_dbm: float) -> list[tuple[int, int]]:
    """Every (i, j), i < j, sharing a zone while in conflict; empty when valid."""
    adj = conflict_graph(imat, conflict_threshold_dbm)
    z = zones.zone_of
    return [(i, j) for i in range(imat.n) for j in range(i + 1, imat.n)
            if adj[i, j] and z[i] == z[j]]


def reuse_capacity_gain(zones: ZoneAssignment) -> float:
    """Average number of co-channel nodes active at once: N / n_zones."""
    return zones.n / zones.n_zones
