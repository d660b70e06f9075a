from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from errmap.district import generate_weather, synthesize_one, NoiseSpec, Substation
from errmap.errors import InputError
from errmap.features import (
    GROUP_BOUNDARY,
    GROUP_CV,
    GROUP_ENERGY,
    cvrmse,
    feature_groups,
    feature_names,
    feature_schema,
    median_low,
    pair_features,
    stat_summary,
    thermoception,
    weekly_variation,
    window_hdd,
    window_summary,
)
from errmap.series import Unit

from .conftest import hourly
from .test_district import flat_params


class TestSchema:
    def test_forty_seven_features(self):
        names = feature_names()
        assert len(names) == 47
        assert len(set(names)) == 47
        assert "power_variation" in names
        assert "power_variation_gap" in names
        assert names[-1] == "time_gap_days"

    def test_groups_cover_all_names(self):
        groups = feature_groups()
        assert set(groups) == set(feature_names())
        by_group = {g: [n for n, gg in groups.items() if gg == g] for g in set(groups.values())}
        assert set(by_group) == {GROUP_ENERGY, GROUP_BOUNDARY, GROUP_CV}
        # every gap twin sits in the context group
        assert all(groups[n] == GROUP_CV for n in feature_names() if n.endswith("_gap"))
        assert groups["time_gap_days"] == GROUP_CV
        assert groups["hdd"] == GROUP_BOUNDARY
        assert groups["power_variation"] == GROUP_ENERGY

    def test_schema_units_present(self):
        for spec in feature_schema():
            assert spec.unit


class TestScalars:
    def test_median_low_is_an_observed_value(self):
        assert median_low(np.array([5.0, 1.0, 9.0, 3.0])) == 3.0
        assert median_low(np.array([2.0, 4.0, 6.0])) == 4.0
        with pytest.raises(InputError):
            median_low(np.array([]))

    def test_stat_summary_ignores_missing(self):
        out = stat_summary(np.array([1.0, np.nan, 3.0, 2.0]))
        assert out == {"min": 1.0, "mean": 2.0, "median": 2.0, "max": 3.0}
        empty = stat_summary(np.array([np.nan, np.nan]))
        assert all(np.isnan(v) for v in empty.values())


class TestWeeklyVariation:
    def test_constant_profile_is_zero(self):
        assert weekly_variation(hourly(np.full(168, 5.0))) == 0.0

    def test_half_on_half_off_is_fifty_percent(self):
        # 12 hours at 2P, 12 hours at 0, every day: the canonical 50% case
        day = np.concatenate([np.full(12, 2.0), np.zeros(12)])
        s = hourly(np.tile(day, 7))
        assert weekly_variation(s, day_matched=True) == pytest.approx(50.0, abs=1e-9)
        assert weekly_variation(s, day_matched=False) == pytest.approx(50.0, abs=1e-9)

    def test_missing_only_window_is_nan(self):
        assert np.isnan(weekly_variation(hourly(np.full(48, np.nan))))

    def test_zero_mean_power_is_nan(self):
        assert np.isnan(weekly_variation(hourly(np.zeros(48))))

    def test_partial_missing_uses_present_slots(self):
        day = np.concatenate([np.full(12, 2.0), np.zeros(12)])
        vals = np.tile(day, 7)
        vals[5:10] = np.nan
        out = weekly_variation(hourly(vals))
        assert np.isfinite(out)
        assert 0.0 < out < 100.0

    @given(st.floats(min_value=0.1, max_value=1000.0), st.integers(min_value=1, max_value=6))
    def test_scale_invariance(self, scale, days):
        rng = np.random.default_rng(7)
        vals = np.abs(rng.normal(10.0, 3.0, 24 * days)) + 0.5
        a = weekly_variation(hourly(vals))
        b = weekly_variation(hourly(vals * scale))
        assert a == pytest.approx(b, rel=1e-9)


class TestThermoception:
    def test_flat_power_gives_zero(self):
        p = hourly(np.full(48, 10.0))
        t = hourly(np.linspace(0, 10, 48), unit=Unit.DEGC)
        assert thermoception(p, t) == 0.0

    def test_flat_temperature_is_nan(self):
        p = hourly(np.linspace(5, 15, 48))
        t = hourly(np.full(48, 10.0), unit=Unit.DEGC)
        assert np.isnan(thermoception(p, t))

    def test_known_value(self):
        # power alternates 8/12 around 10 -> rel dev 0.2; temp alternates
        # -1/+1 around 0 -> abs dev 1.0; ratio 0.2
        p = hourly(np.tile([8.0, 12.0], 24))
        t = hourly(np.tile([-1.0, 1.0], 24), unit=Unit.DEGC)
        assert thermoception(p, t) == pytest.approx(0.2, abs=1e-12)

    def test_alignment_required(self):
        p = hourly(np.ones(24))
        t = hourly(np.ones(48), unit=Unit.DEGC)
        with pytest.raises(InputError):
            thermoception(p, t)


class TestCvrmse:
    def test_perfect_match_is_zero(self):
        a = hourly(np.linspace(5, 10, 48))
        assert cvrmse(a, a) == 0.0

    def test_known_value(self):
        m = hourly(np.full(48, 10.0))
        s = hourly(np.full(48, 12.0))
        assert cvrmse(s, m) == pytest.approx(0.2, abs=1e-12)

    def test_overlap_only(self):
        m_vals = np.full(48, 10.0)
        m_vals[:24] = np.nan
        s_vals = np.full(48, 11.0)
        s_vals[30] = np.nan
        out = cvrmse(hourly(s_vals), hourly(m_vals))
        assert out == pytest.approx(0.1, abs=1e-12)

    def test_no_overlap_raises(self):
        m = hourly(np.concatenate([np.full(24, np.nan), np.full(24, 10.0)]))
        s = hourly(np.concatenate([np.full(24, 10.0), np.full(24, np.nan)]))
        with pytest.raises(InputError):
            cvrmse(s, m)

    def test_nonpositive_mean_raises(self):
        m = hourly(np.zeros(24))
        s = hourly(np.ones(24))
        with pytest.raises(InputError):
            cvrmse(s, m)


class TestWindowSummary:
    def make_window(self):
        temp, ghi = generate_weather(41, date(2021, 11, 1), 7, mean_temp=4.0)
        sub = Substation(
            id="S01",
            params=flat_params(ua=2500.0, dhw_daily_kwh=35.0),
            noise=NoiseSpec(mult_sigma=0.0, occupancy_kw=0.0, distortion=0.0),
        )
        meas = synthesize_one(sub, temp, ghi, seed=41)
        return meas, temp, ghi

    def test_covers_all_base_names(self):
        meas, temp, ghi = self.make_window()
        out = window_summary(meas, temp, ghi, floor_area=2000.0)
        base_names = [n for n in feature_names() if not n.endswith("_gap") and n != "time_gap_days"]
        assert set(out) == set(base_names)
        assert all(np.isfinite(v) for v in out.values())

    def test_hdd_and_extremes_come_from_weather(self):
        meas, temp, ghi = self.make_window()
        out = window_summary(meas, temp, ghi, floor_area=2000.0)
        assert out["max_temperature"] == pytest.approx(float(temp.values.max()))
        assert out["mean_ghi"] == pytest.approx(float(ghi.values.mean()))
        assert out["hdd"] == pytest.approx(window_hdd(temp))

    def test_median_power_scales_with_area(self):
        meas, temp, ghi = self.make_window()
        a = window_summary(meas, temp, ghi, floor_area=1000.0)
        b = window_summary(meas, temp, ghi, floor_area=2000.0)
        assert a["median_power_per_m2"] == pytest.approx(2.0 * b["median_power_per_m2"])

    def test_rejects_bad_area(self):
        meas, temp, ghi = self.make_window()
        with pytest.raises(InputError):
            window_summary(meas, temp, ghi, floor_area=0.0)


class TestPairFeatures:
    def test_gap_arithmetic_and_sign(self):
        meas, temp, ghi = TestWindowSummary().make_window()
        cal = window_summary(meas, temp, ghi, floor_area=2000.0)
        val = {k: v * 1.1 for k, v in cal.items()}
        out = pair_features(cal, val, time_gap_days=-14.0)
        assert len(out) == 47
        assert out["time_gap_days"] == -14.0
        for name, v in cal.items():
            assert out[name] == val[name]
            assert out[f"{name}_gap"] == pytest.approx(val[name] - v)

    def test_self_pair_has_zero_gaps(self):
        meas, temp, ghi = TestWindowSummary().make_window()
        cal = window_summary(meas, temp, ghi, floor_area=2000.0)
        out = pair_features(cal, cal, time_gap_days=0.0)
        gaps = [v for k, v in out.items() if k.endswith("_gap")]
        assert all(g == 0.0 for g in gaps)

    def test_schema_mismatch_rejected(self):
        meas, temp, ghi = TestWindowSummary().make_window()
        cal = window_summary(meas, temp, ghi, floor_area=2000.0)
        bad = dict(cal)
        bad.pop("hdd")
        with pytest.raises(InputError):
            pair_features(bad, cal, 0.0)
        with pytest.raises(InputError):
            pair_features(cal, {**cal, "extra": 1.0}, 0.0)
