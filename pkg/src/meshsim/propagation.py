"""Closed-form path loss and link budgets.

Two models are provided:

* COST-231 Hata for urban macro links (1500-2000 MHz, 30-200 m base
  station, 1-10 m mobile, 1-20 km).  Inputs outside that box raise
  :class:`DomainError`; the model is not extrapolated.
* Free-space path loss for short mesh links, any positive frequency.

The mobile-height correction ``a(h_ms)`` uses the Hata small/medium-city
form for both environments; the metropolitan case differs only by the
+3 dB clutter term.  COST-231 carries roughly 3 dB of model error for
above-rooftop antennas; that is a modelling caveat, not sampled noise.

All public quantities are in dB / dBm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, NonPositiveInput, OrderError

F_RANGE_MHZ = (1500.0, 2000.0)
H_BS_RANGE_M = (30.0, 200.0)
H_MS_RANGE_M = (1.0, 10.0)
D_RANGE_KM = (1.0, 20.0)

# 20*log10(4*pi/c) with d in m and f in MHz
FSPL_CONSTANT_DB = -27.55


class Environment(enum.Enum):
    MEDIUM_CITY = "medium"
    METROPOLITAN = "metro"

    @property
    def clutter_db(self) -> float:
        return 3.0 if self is Environment.METROPOLITAN else 0.0

    @classmethod
    def parse(cls, value) -> "Environment":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "medium": cls.MEDIUM_CITY, "mediumcity": cls.MEDIUM_CITY,
            "medium_city": cls.MEDIUM_CITY, "suburban": cls.MEDIUM_CITY,
            "metro": cls.METROPOLITAN, "metropolitan": cls.METROPOLITAN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown environment {value!r}; use 'medium' or 'metro'") from None


def _check(field: str, value: float, lo: float, hi: float) -> None:
    if not (math.isfinite(value) and lo <= value <= hi):
        raise DomainError(field, value, f"[{lo:g}, {hi:g}]")


@dataclass(frozen=True)
class PathLossParams:
    f_mhz: float
    h_bs_m: float
    h_ms_m: float
    d_km: float
    environment: Environment = Environment.MEDIUM_CITY

    def __post_init__(self):
        object.__setattr__(self, "environment", Environment.parse(self.environment))
        _check("f_mhz", self.f_mhz, *F_RANGE_MHZ)
        _check("h_bs_m", self.h_bs_m, *H_BS_RANGE_M)
        _check("h_ms_m", self.h_ms_m, *H_MS_RANGE_M)
        _check("d_km", self.d_km, *D_RANGE_KM)


@dataclass(frozen=True)
class LinkBudget:
    p_tx_dbm: float
    g_tx_dbi: float
    g_rx_dbi: float
    loss_db: float


def mobile_height_correction(f_mhz: float, h_ms_m: float,
                             environment=Environment.MEDIUM_CITY) -> float:
    """Mobile antenna height correction a(h_ms) in dB.

    ``(1.1 log f - 0.7) h - (1.56 log f - 0.8)``; identical for both
    environments (see module docstring).
    """
    Environment.parse(environment)
    _check("f_mhz", f_mhz, *F_RANGE_MHZ)
    _check("h_ms_m", h_ms_m, *H_MS_RANGE_M)
    lf = math.log10(f_mhz)
    return (1.1 * lf - 0.7) * h_ms_m - (1.56 * lf - 0.8)


def cost231_path_loss(params: PathLossParams) -> float:
    """COST-231 Hata path loss in dB for a validated parameter set."""
    lf = math.log10(params.f_mhz)
    lh = math.log10(params.h_bs_m)
    a_hms = mobile_height_correction(params.f_mhz, params.h_ms_m, params.environment)
    return (46.3 + 33.9 * lf - 13.82 * lh - a_hms
            + (44.9 - 6.55 * lh) * math.log10(params.d_km)
            + params.environment.clutter_db)


def cost231(f_mhz: float, h_bs_m: float, h_ms_m: float, d_km: float,
            environment=Environment.MEDIUM_CITY) -> float:
    """Convenience wrapper building :class:`PathLossParams`."""
    return cost231_path_loss(PathLossParams(f_mhz, h_bs_m, h_ms_m, d_km, environment))


def fspl(d_m: float, f_mhz: float) -> float:
    """Free-space path loss in dB (d in metres, f in MHz).

    Distances below 1 m are rejected rather than clamped: the far-field
    formula diverges there.
    """
    if not (math.isfinite(d_m) and d_m >= 1.0):
        raise NonPositiveInput("d_m", d_m, ">= 1 m")
    if not (math.isfinite(f_mhz) and f_mhz > 0.0):
        raise NonPositiveInput("f_mhz", f_mhz, "> 0 MHz")
    return 20.0 * math.log10(d_m) + 20.0 * math.log10(f_mhz) + FSPL_CONSTANT_DB


def received_power(budget: LinkBudget) -> float:
    """Received power in dBm: tx power plus both gains minus path loss."""
    for name in ("p_tx_dbm", "g_tx_dbi", "g_rx_dbi", "loss_db"):
        v = getattr(budget, name)
        if not math.isfinite(v):
            raise DomainError(name, v, "finite")
    return budget.p_tx_dbm + budget.g_tx_dbi + budget.g_rx_dbi - budget.loss_db


def proximity_gain_db(d_far_m: float, d_near_m: float, f_mhz: float) -> tuple[float, float]:
    """Link-budget gain from moving a transmitter from ``d_far_m`` to ``d_near_m``.

    Returns ``(delta_db, linear_factor)``.  Under free space the result
    does not depend on frequency, but ``f_mhz`` is still validated.
    """
    if not d_far_m > d_near_m:
        raise OrderError(f"d_far_m={d_far_m} must exceed d_near_m={d_near_m}")
    delta = fspl(d_far_m, f_mhz) - fspl(d_near_m, f_mhz)
    return delta, 10.0 ** (delta / 10.0)


def distance_for_gain(delta_db: float, d_near_m: float) -> float:
    """Inverse of :func:`proximity_gain_db`: far distance giving ``delta_db``."""
    return d_near_m * 10.0 ** (delta_db / 20.0)


def dbm_to_mw(p_dbm):
    return 10.0 ** (p_dbm / 10.0)


def dbm_to_w(p_dbm):
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def w_to_dbm(p_w):
    return 10.0 * math.log10(p_w) + 30.0
