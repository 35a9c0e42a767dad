"""KPI ratios, diesel/CO2 arithmetic and the CapEx/OPEX comparison.

Scenario arithmetic runs on :class:`fractions.Fraction` so totals are exact
before any display rounding; floats only appear in the returned reports.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .errors import IncompleteLedger, ZeroDenominator

CO2_KG_PER_LITER = Fraction("2.68")

OPEX_CATEGORIES = (
    "fuel_costs",
    "infrastructure_deployment",
    "infrastructure_maintenance",
    "operations_staffing",
    "equipment_replacement",
    "monitoring_systems",
    "training_costs",
    "regulatory_compliance",
)


def _positive(value, kpi: str):
    if not value > 0:
        raise ZeroDenominator(kpi)


def users_per_watt(users_served: float, site_power_w: float) -> float:
    _positive(site_power_w, "users_per_watt")
    return users_served / site_power_w


def energy_to_user(useful_energy_j: float, total_energy_j: float) -> float:
    """Fraction of site energy arriving at receivers; lies in [0, 1]."""
    _positive(total_energy_j, "energy_to_user")
    if useful_energy_j < 0 or useful_energy_j > total_energy_j:
        raise ValueError("useful energy must lie in [0, total energy]")
    return useful_energy_j / total_energy_j


def co2_intensity(co2_tonnes: float, traffic_gb: float) -> float:
    _positive(traffic_gb, "co2_intensity")
    return co2_tonnes / traffic_gb


def cost_to_capacity(annual_cost_usd: float, throughput_gbps: float) -> float:
    _positive(throughput_gbps, "cost_to_capacity")
    return annual_cost_usd / throughput_gbps


@dataclass(frozen=True)
class KpiInputs:
    users_served: float
    site_power_w: float
    useful_energy_j: float
    total_energy_j: float
    co2_tonnes: float
    traffic_gb: float
    annual_cost_usd: float
    throughput_gbps: float

    def __post_init__(self):
        for name, v in vars(self).items():
            if v < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.useful_energy_j > self.total_energy_j:
            raise ValueError("useful_energy_j exceeds total_energy_j")


@dataclass(frozen=True)
class KpiReport:
    users_per_watt: float
    energy_to_user: float
    co2_intensity: float
    cost_to_capacity: float


def kpis(k: KpiInputs) -> KpiReport:
    return KpiReport(
        users_per_watt(k.users_served, k.site_power_w),
        energy_to_user(k.useful_energy_j, k.total_energy_j),
        co2_intensity(k.co2_tonnes, k.traffic_gb),
        cost_to_capacity(k.annual_cost_usd, k.throughput_gbps),
    )


def diesel_to_co2(liters, kg_per_liter=CO2_KG_PER_LITER) -> Fraction:
    """Tonnes of CO2 from burning ``liters`` of diesel (exact)."""
    liters = Fraction(liters)
    if liters < 0:
        raise ValueError("liters must be >= 0")
    return liters * Fraction(kg_per_liter) / 1000


@dataclass(frozen=True)
class EventScenario:
    name: str
    n_towers: int
    liters_per_tower_per_day: Fraction
    days: int
    co2_kg_per_liter: Fraction = CO2_KG_PER_LITER
    macro_w_per_tower: Fraction = Fraction(0)
    mesh_n_towers: int = 0
    mesh_n_nodes: int = 0
    mesh_liters_total: Fraction = Fraction(0)
    mesh_total_w: Fraction = Fraction(0)
    quoted: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("n_towers", "mesh_n_towers", "mesh_n_nodes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        for name in ("liters_per_tower_per_day", "co2_kg_per_liter", "macro_w_per_tower",
                     "mesh_liters_total", "mesh_total_w"):
            v = Fraction(getattr(self, name))
            if v < 0:
                raise ValueError(f"{name} must be >= 0")
            object.__setattr__(self, name, v)


def round_to(value, step) -> int:
    """Round half up to a multiple of ``step``."""
    q = Fraction(value) / step
    return int(math.floor(q + Fraction(1, 2))) * step


def _pct(part, whole) -> Fraction:
    return (1 - Fraction(part) / Fraction(whole)) * 100 if whole else Fraction(0)


@dataclass(frozen=True)
class EventReport:
    scenario: str
    liters_traditional: Fraction
    liters_mesh: Fraction
    liters_saved: Fraction
    co2_traditional_t: Fraction
    co2_mesh_t: Fraction
    co2_saved_t: Fraction
    co2_reduction_pct: Fraction
    power_traditional_w: Fraction
    power_mesh_w: Fraction
    power_reduction_pct: Fraction
    notes: tuple[str, ...] = ()

    def display(self) -> dict[str, int]:
        """Display precision: litres to 100k, tCO2 to 100, % to 1."""
        return {
            "liters_traditional": round_to(self.liters_traditional, 100_000),
            "liters_mesh": round_to(self.liters_mesh, 100_000),
            "liters_saved": round_to(self.liters_saved, 100_000),
            "co2_traditional_t": round_to(self.co2_traditional_t, 100),
            "co2_mesh_t": round_to(self.co2_mesh_t, 100),
            "co2_saved_t": round_to(self.co2_saved_t, 100),
            "co2_reduction_pct": round_to(self.co2_reduction_pct, 1),
            "power_traditional_w": round_to(self.power_traditional_w, 1),
            "power_mesh_w": round_to(self.power_mesh_w, 1),
            "power_reduction_pct": round_to(self.power_reduction_pct, 1),
        }

    def rows(self):
        d = self.display()
        return [
            ("diesel_liters", self.liters_traditional, self.liters_mesh, self.liters_saved,
             d["liters_traditional"], d["liters_mesh"]),
            ("co2_tonnes", self.co2_traditional_t, self.co2_mesh_t, self.co2_saved_t,
             d["co2_traditional_t"], d["co2_mesh_t"]),
            ("co2_reduction_pct", None, None, self.co2_reduction_pct, None,
             d["co2_reduction_pct"]),
            ("power_w", self.power_traditional_w, self.power_mesh_w,
             self.power_traditional_w - self.power_mesh_w,
             d["power_traditional_w"], d["power_mesh_w"]),
            ("power_reduction_pct", None, None, self.power_reduction_pct, None,
             d["power_reduction_pct"]),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("metric,traditional,mesh,difference,traditional_display,mesh_display\n")
        for row in self.rows():
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def to_text(self) -> str:
        d = self.display()
        lines = [
            f"Event scenario: {self.scenario}",
            f"{'Metric':<26}{'Traditional':>16}{'AI mesh':>16}{'Change':>12}",
            f"{'Diesel (L)':<26}{d['liters_traditional']:>16,}{d['liters_mesh']:>16,}"
            f"{-d['liters_saved']:>12,}",
            f"{'CO2 (t)':<26}{d['co2_traditional_t']:>16,}{d['co2_mesh_t']:>16,}"
            f"{-d['co2_reduction_pct']:>11}%",
            f"{'Peak power (W)':<26}{d['power_traditional_w']:>16,}{d['power_mesh_w']:>16,}"
            f"{-d['power_reduction_pct']:>11}%",
            "",
            f"exact: CO2 {float(self.co2_traditional_t)!r} t -> {float(self.co2_mesh_t)!r} t, "
            f"saved {float(self.co2_saved_t)!r} t; power cut {float(self.power_reduction_pct)!r}%",
        ]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, Fraction):
        return repr(float(v))
    return str(v)


def event_report(e: EventScenario) -> EventReport:
    liters_trad = e.n_towers * e.liters_per_tower_per_day * e.days
    liters_mesh = e.mesh_liters_total
    co2_trad = diesel_to_co2(liters_trad, e.co2_kg_per_liter)
    co2_mesh = diesel_to_co2(liters_mesh, e.co2_kg_per_liter)
    p_trad = e.n_towers * e.macro_w_per_tower
    notes = list(_inconsistencies(e, co2_trad))
    return EventReport(
        scenario=e.name,
        liters_traditional=liters_trad,
        liters_mesh=liters_mesh,
        liters_saved=liters_trad - liters_mesh,
        co2_traditional_t=co2_trad,
        co2_mesh_t=co2_mesh,
        co2_saved_t=co2_trad - co2_mesh,
        co2_reduction_pct=_pct(co2_mesh, co2_trad),
        power_traditional_w=p_trad,
        power_mesh_w=e.mesh_total_w,
        power_reduction_pct=_pct(e.mesh_total_w, p_trad),
        notes=tuple(notes),
    )


def _inconsistencies(e: EventScenario, co2_trad: Fraction):
    q = e.quoted
    if "co2_traditional_t" in q:
        quoted = Fraction(q["co2_traditional_t"])
        if abs(quoted - co2_trad) > 100:
            implied = quoted * 1000 / (e.n_towers * e.liters_per_tower_per_day * e.days)
            yield (f"quoted {float(quoted):,.0f} tCO2 differs from {float(co2_trad):,.0f} t computed at "
                   f"{float(e.co2_kg_per_liter)} kg/L (quote implies {float(implied):.3f} kg/L)")
    if e.macro_w_per_tower and e.macro_w_per_tower < 1000:
        yield (f"per-tower draw {float(e.macro_w_per_tower):g} W is the event peak draw; "
               "a typical macro site draws 5 kW continuously")
    if e.macro_w_per_tower >= 1000:
        yield (f"per-tower draw {float(e.macro_w_per_tower):g} W is the typical macro site draw; "
               "the 5-day event preset uses 120 W per tower")
    per_day = e.liters_per_tower_per_day
    if per_day < 100:
        yield (f"{float(per_day):.1f} L/tower/day here vs 500 L/tower/day in the 5-day event preset: "
               "the annual and event presets are mutually inconsistent and are not reconciled")
    else:
        yield ("event-period savings: figures cover the event days only, not a full year; "
               "the annual fleet preset uses 56 M L/year and is inconsistent with this one")


@dataclass(frozen=True)
class CostItem:
    category: str
    traditional_musd: Fraction
    proposed_musd: Fraction


@dataclass(frozen=True)
class CostLedger:
    items: tuple[CostItem, ...]

    def totals(self) -> tuple[Fraction, Fraction]:
        return (sum((i.traditional_musd for i in self.items), Fraction(0)),
                sum((i.proposed_musd for i in self.items), Fraction(0)))


@dataclass(frozen=True)
class OpexReport:
    total_trad: Fraction
    total_prop: Fraction
    savings_musd: Fraction
    savings_pct: Fraction
    items: tuple[CostItem, ...] = ()

    @property
    def savings_pct_display(self) -> float:
        return float(round_to(self.savings_pct * 10, 1)) / 10

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("category,traditional_musd,proposed_musd,savings_musd\n")
        for it in self.items:
            buf.write(f"{it.category},{_fmt(it.traditional_musd)},{_fmt(it.proposed_musd)},"
                      f"{_fmt(it.traditional_musd - it.proposed_musd)}\n")
        buf.write(f"total,{_fmt(self.total_trad)},{_fmt(self.total_prop)},{_fmt(self.savings_musd)}\n")
        buf.write(f"savings_pct,NA,NA,{self.savings_pct_display!r}\n")
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'Category':<28}{'Traditional (M$)':>18}{'Proposed (M$)':>16}"]
        for it in self.items:
            lines.append(f"{it.category:<28}{float(it.traditional_musd):>18.1f}{float(it.proposed_musd):>16.1f}")
        lines.append(f"{'total':<28}{float(self.total_trad):>18.1f}{float(self.total_prop):>16.1f}")
        lines.append(f"savings {float(self.savings_musd):.1f} M$/year ({self.savings_pct_display:.1f}%)")
        return "\n".join(lines) + "\n"


def opex_report(ledger: CostLedger) -> OpexReport:
    present = {i.category for i in ledger.items}
    missing = [c for c in OPEX_CATEGORIES if c not in present]
    if missing:
        raise IncompleteLedger(missing)
    trad, prop = ledger.totals()
    if trad <= 0:
        raise ZeroDenominator("opex savings_pct")
    return OpexReport(trad, prop, trad - prop, (trad - prop) / trad * 100, ledger.items)


def capex_compare(traditional_musd, proposed_musd) -> Fraction:
    """Percentage CapEx reduction, ``(1 - proposed / traditional) * 100``."""
    t = Fraction(traditional_musd)
    if t <= 0:
        raise ZeroDenominator("capex_compare")
    return (1 - Fraction(proposed_musd) / t) * 100


def _read_cfg(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(text)
    return cp


def _preset_text(name: str) -> str:
    return resources.files("meshsim.presets").joinpath(f"{name}.cfg").read_text()


def event_scenario_from_text(text: str) -> EventScenario:
    cp = _read_cfg(text)
    ev, me = cp["event"], cp["mesh"]
    quoted = dict(cp["quoted"]) if cp.has_section("quoted") else {}
    return EventScenario(
        name=ev.get("name", "custom"),
        n_towers=int(ev["n_towers"]),
        liters_per_tower_per_day=Fraction(ev["liters_per_tower_per_day"]),
        days=int(ev["days"]),
        co2_kg_per_liter=Fraction(ev.get("co2_kg_per_liter", "2.68")),
        macro_w_per_tower=Fraction(ev.get("macro_w_per_tower", "0")),
        mesh_n_towers=int(me.get("n_towers", "0")),
        mesh_n_nodes=int(me.get("n_nodes", "0")),
        mesh_liters_total=Fraction(me.get("liters_total", "0")),
        mesh_total_w=Fraction(me.get("total_w", "0")),
        quoted=quoted,
    )


def load_event_preset(name: str) -> EventScenario:
    """Shipped presets: ``hajj_5day`` and ``annual_fleet``."""
    return event_scenario_from_text(_preset_text(name))


def ledger_from_text(text: str) -> tuple[CostLedger, tuple[Fraction, Fraction]]:
    cp = _read_cfg(text)
    items = []
    for cat, val in cp["opex"].items():
        trad, prop = (Fraction(v.strip()) for v in val.split(","))
        items.append(CostItem(cat, trad, prop))
    cx = cp["capex"]
    return CostLedger(tuple(items)), (Fraction(cx["traditional_musd"]), Fraction(cx["proposed_musd"]))


def load_cost_preset() -> tuple[CostLedger, tuple[Fraction, Fraction]]:
    return ledger_from_text(_preset_text("opex"))
