from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from meshsim import sustain as su
from meshsim.errors import IncompleteLedger, ZeroDenominator

pos = st.floats(1e-3, 1e6)


@pytest.fixture(scope="module")
def hajj():
    return su.event_report(su.load_event_preset("hajj_5day"))


class TestKpiRatios:
    def test_users_per_watt(self):
        assert su.users_per_watt(160, 80) == 2
        assert su.users_per_watt(2100, 10) == 210

    def test_energy_to_user_bounds(self):
        assert su.energy_to_user(5.0, 5.0) == 1.0
        assert su.energy_to_user(0.0, 5.0) == 0.0
        with pytest.raises(ValueError):
            su.energy_to_user(6.0, 5.0)

    @pytest.mark.parametrize("fn,name", [(su.users_per_watt, "users_per_watt"), (su.energy_to_user, "energy_to_user"),
                                         (su.co2_intensity, "co2_intensity"), (su.cost_to_capacity, "cost_to_capacity")])
    def test_zero_denominator_names_kpi(self, fn, name):
        with pytest.raises(ZeroDenominator, match=name):
            fn(0.0, 0.0)

    @given(pos, pos, st.floats(1e-3, 1e3))
    def test_homogeneous(self, num, den, k):
        for fn in (su.users_per_watt, su.co2_intensity, su.cost_to_capacity):
            assert fn(num * k, den * k) == pytest.approx(fn(num, den), rel=1e-12)
        lo, hi = sorted((num, den))
        assert su.energy_to_user(lo * k, hi * k) == pytest.approx(su.energy_to_user(lo, hi), rel=1e-12)

    def test_kpi_bundle(self):
        k = su.KpiInputs(160, 80, 1, 4, 10, 5, 100, 20)
        r = su.kpis(k)
        assert (r.users_per_watt, r.energy_to_user, r.co2_intensity, r.cost_to_capacity) == (2, 0.25, 2, 5)
        with pytest.raises(ValueError):
            su.KpiInputs(-1, 80, 1, 4, 10, 5, 100, 20)


class TestDiesel:
    def test_event_fleet(self):
        assert su.diesel_to_co2(17_500_000) == 46_900

    def test_saved(self):
        t = su.diesel_to_co2(14_000_000)
        assert t == 37_520
        # the quoted 37,000 is the exact value truncated to thousands; half-up would give 38,000
        assert t // 1000 * 1000 == 37_000
        assert su.round_to(t, 1000) == 38_000

    def test_zero_and_negative(self):
        assert su.diesel_to_co2(0) == 0
        with pytest.raises(ValueError):
            su.diesel_to_co2(-1)

    def test_exact_rational(self):
        assert su.diesel_to_co2(1, Fraction(1, 3)) == Fraction(1, 3000)


class TestEventReport:
    def test_liters(self, hajj):
        assert hajj.liters_traditional == 17_500_000
        assert hajj.liters_mesh == 3_500_000
        assert hajj.liters_saved == 14_000_000

    def test_co2(self, hajj):
        assert hajj.co2_traditional_t == 46_900
        assert hajj.co2_mesh_t == 9_380
        assert hajj.co2_saved_t == 37_520
        assert hajj.co2_reduction_pct == 80
        d = hajj.display()
        assert d["co2_mesh_t"] == 9_400
        assert d["co2_reduction_pct"] == 80

    def test_power(self, hajj):
        assert hajj.power_traditional_w == 840_000
        assert hajj.power_mesh_w == 180_000
        assert hajj.power_reduction_pct == Fraction(550, 7)
        assert hajj.display()["power_reduction_pct"] == 79

    def test_quoted_values_reproduced(self, hajj):
        q = su.load_event_preset("hajj_5day").quoted
        d = hajj.display()
        assert d["liters_traditional"] == int(q["liters_traditional"])
        assert d["liters_mesh"] == int(q["liters_mesh"])
        assert d["co2_traditional_t"] == int(q["co2_traditional_t"])
        assert d["co2_mesh_t"] == int(q["co2_mesh_t"])
        assert hajj.co2_saved_t // 1000 * 1000 == int(q["co2_saved_t"])

    def test_notes_flag_tower_power(self, hajj):
        assert any("120 W" in n for n in hajj.notes)

    def test_annual_preset_flagged(self):
        r = su.event_report(su.load_event_preset("annual_fleet"))
        assert r.liters_traditional == 56_000_000
        assert r.co2_traditional_t == 150_080
        assert any("148,000" in n for n in r.notes)
        assert any("inconsistent" in n for n in r.notes)

    def test_outputs(self, hajj):
        csv = hajj.to_csv().splitlines()
        assert csv[0].startswith("metric,traditional,mesh")
        assert csv[1] == "diesel_liters,17500000.0,3500000.0,14000000.0,17500000,3500000"
        text = hajj.to_text()
        assert "46,900" in text and "9,400" in text and "-79%" in text

    def test_days_validated(self):
        with pytest.raises(ValueError):
            su.EventScenario("x", 1, Fraction(1), 0)


class TestCosts:
    def test_opex_totals(self):
        ledger, _ = su.load_cost_preset()
        r = su.opex_report(ledger)
        assert r.total_trad == Fraction("114.7")
        assert r.total_prop == Fraction("73.6")
        assert r.savings_musd == Fraction("41.1")
        assert r.savings_pct_display == 35.8
        assert su.round_to(r.savings_pct, 1) == 36

    def test_totals_are_item_sums(self):
        ledger, _ = su.load_cost_preset()
        trad, prop = ledger.totals()
        assert trad == sum(i.traditional_musd for i in ledger.items)
        assert prop == sum(i.proposed_musd for i in ledger.items)

    def test_missing_category(self):
        ledger, _ = su.load_cost_preset()
        partial = su.CostLedger(ledger.items[1:])
        with pytest.raises(IncompleteLedger, match="fuel_costs"):
            su.opex_report(partial)

    def test_all_zero_proposed(self):
        ledger, _ = su.load_cost_preset()
        zero = su.CostLedger(tuple(su.CostItem(i.category, i.traditional_musd, Fraction(0)) for i in ledger.items))
        assert su.opex_report(zero).savings_pct == 100

    def test_capex(self):
        _, (t, p) = su.load_cost_preset()
        pct = su.capex_compare(t, p)
        assert pct == Fraction(520, 7)
        assert su.round_to(pct, 1) == 74
        assert su.capex_compare(5, 5) == 0
        assert su.capex_compare(5, 0) == 100
        with pytest.raises(ZeroDenominator):
            su.capex_compare(0, 1)

    def test_opex_csv(self):
        ledger, _ = su.load_cost_preset()
        lines = su.opex_report(ledger).to_csv().splitlines()
        assert lines[1] == "fuel_costs,67.2,40.6,26.6"
        assert lines[-2] == "total,114.7,73.6,41.1"
        assert lines[-1] == "savings_pct,NA,NA,35.8"


class TestRounding:
    @pytest.mark.parametrize("v,step,out", [(Fraction(5, 2), 1, 3), (Fraction(-5, 2), 1, -2), (37_520, 100, 37_500),
                                            (9_380, 100, 9_400), (Fraction(550, 7), 1, 79)])
    def test_round_to(self, v, step, out):
        assert su.round_to(v, step) == out
