"""Synthetic per-cell user demand: diurnal swing, hotspot concentration, surges."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidScenario


@dataclass(frozen=True)
class Surge:
    start: int
    end: int
    multiplier: float = 1.0

    def factor(self, t: np.ndarray) -> np.ndarray:
        return np.where((t >= self.start) & (t < self.end), self.multiplier, 1.0)


@dataclass(frozen=True)
class TrafficScenario:
    n_cells: int = 100
    duration_ticks: int = 600
    tick_seconds: float = 1.0
    base_users: float = 400.0
    diurnal_amplitude: float = 0.0
    hotspot_area: float = 0.2
    hotspot_users: float = 0.95
    surge: Surge | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    day_ticks: int | None = None

    def __post_init__(self):
        def bad(name, why):
            raise InvalidScenario(name, why)

        if self.n_cells < 1:
            bad("n_cells", "must be >= 1")
        if self.duration_ticks < 1:
            bad("duration_ticks", "must be >= 1")
        if not self.tick_seconds > 0:
            bad("tick_seconds", "must be > 0")
        if not self.base_users >= 0:
            bad("base_users", "must be >= 0")
        if not 0.0 <= self.diurnal_amplitude < 1.0:
            bad("diurnal_amplitude", "must lie in [0, 1)")
        if not 0.0 < self.hotspot_area < 1.0:
            bad("hotspot_area", "must lie in (0, 1)")
        if not self.hotspot_area <= self.hotspot_users <= 1.0:
            bad("hotspot_users", "must lie in [hotspot_area, 1]")
        if self.surge is not None and self.surge.multiplier < 1.0:
            bad("surge.multiplier", "must be >= 1")
        if self.noise_sigma < 0:
            bad("noise_sigma", "must be >= 0")
        if self.day_ticks is not None and self.day_ticks < 1:
            bad("day_ticks", "must be >= 1")

    @property
    def n_hotspots(self) -> int:
        # guard against 0.2 * 10 = 2.0000000000000004
        return min(self.n_cells, math.ceil(self.hotspot_area * self.n_cells - 1e-9))

    @property
    def effective_day_ticks(self) -> int:
        if self.day_ticks is not None:
            return self.day_ticks
        return max(1, round(86400.0 / self.tick_seconds))

    @property
    def time_scale(self) -> float:
        """Real seconds per simulated day divided by simulated seconds per day."""
        return 86400.0 / (self.effective_day_ticks * self.tick_seconds)


@dataclass(frozen=True)
class TrafficSeries:
    counts: np.ndarray          # (ticks, cells) int64
    hotspot_cells: tuple[int, ...] = ()
    tick_seconds: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2:
            raise ValueError("counts must be (ticks, cells)")
        if np.any(c < 0):
            raise ValueError("user counts must be non-negative")
        c = c.astype(np.int64, copy=True)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n_ticks(self) -> int:
        return self.counts.shape[0]

    @property
    def n_cells(self) -> int:
        return self.counts.shape[1]

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("tick,cell_id,users\n")
        for t, row in enumerate(self.counts):
            for cell, u in enumerate(row):
                buf.write(f"{t},{cell},{int(u)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, tick_seconds: float = 1.0) -> "TrafficSeries":
        rows = [line.split(",") for line in text.splitlines()[1:] if line.strip()]
        if not rows:
            raise ValueError("empty traffic CSV")
        arr = np.array(rows, dtype=np.int64)
        counts = np.zeros((arr[:, 0].max() + 1, arr[:, 1].max() + 1), dtype=np.int64)
        counts[arr[:, 0], arr[:, 1]] = arr[:, 2]
        return cls(counts, (), tick_seconds)


def apportion(total: int, quotas: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``quotas`` to integers summing to ``total``.

    Ties on the remainder go to the lower index.
    """
    floors = np.floor(quotas).astype(np.int64)
    short = int(total - floors.sum())
    if short > 0:
        rem = quotas - floors
        order = np.lexsort((np.arange(len(quotas)), -rem))
        floors[order[:short]] += 1
    return floors


def expected_totals(s: TrafficScenario) -> np.ndarray:
    """Noise-free total demand per tick (real-valued)."""
    t = np.arange(s.duration_ticks)
    tot = s.base_users * (1.0 + s.diurnal_amplitude * np.sin(2 * np.pi * t / s.effective_day_ticks))
    if s.surge is not None:
        tot = tot * s.surge.factor(t)
    return tot


def generate_demand(s: TrafficScenario) -> TrafficSeries:
    """Draw a per-cell demand series.

    Total users per tick follow the diurnal/surge envelope times
    ``1 + eps`` with ``eps ~ N(0, sigma^2)`` clipped at -1, rounded to an
    integer.  A share ``hotspot_users`` of each tick's users goes to the
    seeded choice of hotspot cells, the rest spreads uniformly over the
    other cells; both splits use largest-remainder rounding.
    """
    rng = np.random.default_rng(s.seed)
    hotspots = np.sort(rng.choice(s.n_cells, size=s.n_hotspots, replace=False))
    eps = rng.normal(0.0, s.noise_sigma, s.duration_ticks) if s.noise_sigma > 0 else np.zeros(s.duration_ticks)
    totals = np.floor(expected_totals(s) * (1.0 + np.maximum(eps, -1.0)) + 0.5).astype(np.int64)

    is_hot = np.zeros(s.n_cells, dtype=bool)
    is_hot[hotspots] = True
    n_hot = int(is_hot.sum())
    n_cold = s.n_cells - n_hot
    p = 1.0 if n_cold == 0 else s.hotspot_users

    # split each tick between the two groups first, then evenly inside each,
    # so the hotspot share stays within half a user of p * total
    counts = np.zeros((s.duration_ticks, s.n_cells), dtype=np.int64)
    for t, tot in enumerate(totals):
        hot, cold = apportion(int(tot), np.array([tot * p, tot * (1.0 - p)]))
        counts[t, is_hot] = apportion(int(hot), np.full(n_hot, hot / n_hot))
        if n_cold:
            counts[t, ~is_hot] = apportion(int(cold), np.full(n_cold, cold / n_cold))
    return TrafficSeries(counts, tuple(int(c) for c in hotspots), s.tick_seconds)


def concentration_stat(series: TrafficSeries, area_fraction: float) -> float:
    """Time-averaged share of users in the busiest ``ceil(a * n_cells)`` cells."""
    if not 0.0 < area_fraction < 1.0:
        raise ValueError("area_fraction must lie in (0, 1)")
    k = min(series.n_cells, math.ceil(area_fraction * series.n_cells - 1e-9))
    c = series.counts
    tot = c.sum(axis=1)
    live = tot > 0
    if not np.any(live):
        return 0.0
    top = -np.sort(-c[live], axis=1)[:, :k].sum(axis=1)
    return float(np.mean(top / tot[live]))


def with_seed(s: TrafficScenario, seed: int) -> TrafficScenario:
    return replace(s, seed=seed)
