"""Rate ingestion tests: parsing and validation errors, the documented index
transforms against hand computation, canonical round trips, and seeded
window sampling."""

import numpy as np
import pytest

from payplan.errors import ConfigError, DataError, ParseError
from payplan.goals import ConstantRate, monthly_rate
from payplan.presets import base_plan
from payplan.rates import (
    RateSeries,
    all_windows,
    common_coverage,
    constant_trajectory,
    load_rates_dir,
    load_series,
    month_index,
    month_label,
    sample_windows,
    serialize_series,
    trajectory_for_config,
    window_at,
)

FIXTURES = "src/payplan/data"


def write_series(tmp_path, name, rows, descriptor):
    import json

    csv_path = tmp_path / f"{name}.csv"
    csv_path.write_text("date,value\n" + "".join(f"{d},{v}\n" for d, v in rows))
    (tmp_path / f"{name}.json").write_text(json.dumps(descriptor))
    return csv_path


ANNUAL = {"series_id": "s", "value_type": "annual_rate", "source": "test"}


class TestMonthIndex:
    def test_round_trip(self):
        for label in ("1985-01", "2022-12", "2000-06"):
            assert month_label(month_index(label)) == label

    def test_adjacency_across_year(self):
        assert month_index("1999-12") + 1 == month_index("2000-01")

    def test_bad_labels(self):
        for bad in ("1999-13", "85-01", "1999/01"):
            with pytest.raises(ValueError):
                month_index(bad)


class TestLoadSeries:
    def test_two_row_file(self, tmp_path):
        path = write_series(tmp_path, "s", [("2001-01", 0.05), ("2001-02", 0.06)], ANNUAL)
        series = load_series(path)
        assert len(series) == 2
        assert series.annual_at(month_index("2001-02")) == 0.06

    def test_month_gap_names_missing_month(self, tmp_path):
        path = write_series(tmp_path, "s", [("2001-01", 0.05), ("2001-03", 0.06)], ANNUAL)
        with pytest.raises(DataError, match="2001-02"):
            load_series(path)

    def test_duplicate_month_rejected(self, tmp_path):
        path = write_series(tmp_path, "s", [("2001-01", 0.05), ("2001-01", 0.06)], ANNUAL)
        with pytest.raises(DataError, match="duplicate"):
            load_series(path)

    def test_malformed_row_reports_line_number(self, tmp_path):
        path = write_series(
            tmp_path, "s", [("2001-01", 0.05), ("not-a-date", 0.06)], ANNUAL
        )
        with pytest.raises(ParseError, match="line 3"):
            load_series(path)

    def test_bad_value_reports_line_number(self, tmp_path):
        csv_path = tmp_path / "s.csv"
        csv_path.write_text("date,value\n2001-01,abc\n")
        import json

        (tmp_path / "s.json").write_text(json.dumps(ANNUAL))
        with pytest.raises(ParseError, match="line 2"):
            load_series(csv_path)

    def test_unsorted_input_is_sorted(self, tmp_path):
        path = write_series(
            tmp_path, "s", [("2001-02", 0.06), ("2001-01", 0.05)], ANNUAL
        )
        series = load_series(path)
        assert series.start == month_index("2001-01")

    def test_missing_descriptor(self, tmp_path):
        csv_path = tmp_path / "s.csv"
        csv_path.write_text("date,value\n2001-01,0.05\n")
        with pytest.raises(DataError, match="descriptor"):
            load_series(csv_path)

    def test_yoy_transform_hand_computed(self, tmp_path):
        """13 consecutive index levels -> one year-over-year rate."""
        levels = [100.0, 101, 102, 103, 104, 105, 106, 107, 108, 109, 110, 111, 112.5]
        rows = [(month_label(month_index("2000-01") + i), v) for i, v in enumerate(levels)]
        path = write_series(
            tmp_path,
            "cpi",
            rows,
            {"series_id": "cpi", "value_type": "index", "index_transform": "yoy"},
        )
        series = load_series(path)
        assert len(series) == 1
        assert series.start == month_index("2001-01")
        assert series.annual_rates[0] == pytest.approx(112.5 / 100.0 - 1.0)

    def test_monthly_return_round_trip(self, tmp_path):
        """Annualized monthly returns convert back to the exact monthly return."""
        rows = [("2001-01", 100.0), ("2001-02", 103.0)]
        path = write_series(
            tmp_path,
            "eq",
            rows,
            {"series_id": "eq", "value_type": "index", "index_transform": "monthly_return"},
        )
        series = load_series(path)
        assert monthly_rate(series.annual_rates[0]) == pytest.approx(0.03, rel=1e-12)


class TestSerializeRoundTrip:
    def test_canonical_form_is_fixed_point(self, tmp_path):
        series = RateSeries("s", month_index("1999-05"), np.array([0.05, 0.061, -0.002]))
        text = serialize_series(series)
        import json

        path = tmp_path / "s.csv"
        path.write_text(text)
        (tmp_path / "s.json").write_text(json.dumps(ANNUAL))
        again = load_series(path)
        assert serialize_series(again) == text
        np.testing.assert_array_equal(again.annual_rates, series.annual_rates)


class TestWindows:
    def test_exact_coverage_gives_single_window(self, tmp_path):
        rows = [(month_label(month_index("2001-01") + i), 0.01 * i) for i in range(13)]
        path = write_series(tmp_path, "s", rows, ANNUAL)
        series = load_series(path)
        for seed in (0, 1, 99):
            (w,) = sample_windows([series], 12, 1, seed=seed)
            assert w.start_month == "2001-01"

    def test_zero_count_gives_empty_list(self, tmp_path):
        rows = [(month_label(month_index("2001-01") + i), 0.01) for i in range(13)]
        series = load_series(write_series(tmp_path, "s", rows, ANNUAL))
        assert sample_windows([series], 12, 0, seed=0) == []

    def test_insufficient_coverage_raises(self, tmp_path):
        rows = [(month_label(month_index("2001-01") + i), 0.01) for i in range(5)]
        series = load_series(write_series(tmp_path, "s", rows, ANNUAL))
        with pytest.raises(DataError):
            sample_windows([series], 12, 3, seed=0)

    def test_golden_start_months_on_fixtures(self):
        series = list(load_rates_dir(FIXTURES).values())
        ws = sample_windows(series, 120, 6, seed=2024)
        assert [w.start_month for w in ws] == [
            "1991-10", "2003-12", "1987-08", "1991-01", "1993-11", "1993-08",
        ]

    def test_windows_are_aligned_and_converted(self):
        series = list(load_rates_dir(FIXTURES).values())
        w = window_at(series, "2012-01", 120)
        lengths = {len(v) for v in w.rates.values()}
        assert lengths == {121}
        raw = next(s for s in series if s.series_id == "tbill3m")
        want = monthly_rate(raw.annual_at(month_index("2012-01")))
        assert w.rates["tbill3m"][0] == pytest.approx(want, rel=1e-15)

    def test_seeded_determinism(self):
        series = list(load_rates_dir(FIXTURES).values())
        a = sample_windows(series, 60, 8, seed=5)
        b = sample_windows(series, 60, 8, seed=5)
        assert [w.start_month for w in a] == [w.start_month for w in b]

    def test_all_windows_spans_coverage(self):
        series = list(load_rates_dir(FIXTURES).values())
        ws = all_windows(series, 120)
        start, end = common_coverage(series)
        assert len(ws) == (end - start) - 121 + 1
        assert ws[0].start_month == month_label(start)


class TestConstantTrajectory:
    def test_base_plan_values(self):
        config = base_plan()
        trajectory = constant_trajectory(config, config.horizon_months)
        cc = trajectory.rates["const:credit_card"]
        assert len(cc) == 121
        assert np.all(cc == cc[0])
        assert cc[0] == pytest.approx(0.015309470499731217, rel=1e-12)
        assert trajectory.rates["inflation"][0] == pytest.approx(
            monthly_rate(0.02), rel=1e-15
        )

    def test_zero_rate_plan(self, single_debt_plan):
        trajectory = constant_trajectory(single_debt_plan, 3)
        np.testing.assert_array_equal(trajectory.rates["const:debt"], np.zeros(4))

    def test_horizon_zero(self, single_debt_plan):
        trajectory = constant_trajectory(single_debt_plan, 0)
        assert all(len(v) == 1 for v in trajectory.rates.values())

    def test_series_source_rejected(self):
        config = base_plan(stochastic=True)
        with pytest.raises(ConfigError):
            constant_trajectory(config, 12)

    def test_nominal_debt_flag(self, single_debt_plan):
        from dataclasses import replace

        plan = replace(
            single_debt_plan,
            debt_rates_nominal=True,
            goals=(replace(single_debt_plan.goals[0], rate_source=ConstantRate(0.12)),),
        )
        trajectory = constant_trajectory(plan, 1)
        assert trajectory.rates["const:debt"][0] == pytest.approx(0.01)


class TestTrajectoryForConfig:
    def test_merges_series_and_constants(self):
        config = base_plan(stochastic=True)
        series = list(load_rates_dir(FIXTURES).values())
        window = window_at(series, "2012-01", config.horizon_months)
        trajectory = trajectory_for_config(config, config.horizon_months, window)
        assert "tbill3m" in trajectory.rates
        assert "sp500" in trajectory.rates
        assert "const:credit_card" in trajectory.rates
        assert "inflation" in trajectory.rates
        assert trajectory.start_month == "2012-01"

    def test_missing_series_raises(self):
        config = base_plan(stochastic=True)
        with pytest.raises(DataError, match="tbill3m"):
            trajectory_for_config(config, config.horizon_months, None)
