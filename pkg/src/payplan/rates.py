"""Historical rate series: CSV loading, annual->monthly conversion, and
horizon-length window sampling for data-driven training.

A series file is `date,value` CSV (dates as YYYY-MM) with a JSON sidecar
declaring how `value` becomes an annual rate:

    {"series_id": "cpi", "value_type": "index", "index_transform": "yoy",
     "source": "..."}

`value_type` is "annual_rate" (used directly) or "index" (levels, reduced by
`index_transform`: "yoy" for year-over-year change, "monthly_return" for
month-over-month return stored annualized so the geometric monthly
conversion recovers it exactly).
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, ParseError
from .goals import (
    INFLATION_KEY,
    ConstantRate,
    GoalKind,
    PlanConfig,
    SeriesRate,
    monthly_rate,
    monthly_rate_nominal,
    rate_key,
)

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


def month_index(label: str) -> int:
    """YYYY-MM -> absolute month count (concatenable across years)."""
    m = _MONTH_RE.match(label.strip())
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise ValueError(f"expected YYYY-MM, got {label!r}")
    return int(m.group(1)) * 12 + int(m.group(2)) - 1


def month_label(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


@dataclass(frozen=True)
class RateSeries:
    """Monthly observations of one annual rate, gap-free and sorted."""

    series_id: str
    start: int  # month index of the first observation
    annual_rates: np.ndarray
    source: str = ""

    def __len__(self) -> int:
        return len(self.annual_rates)

    @property
    def end(self) -> int:
        """Month index one past the last observation."""
        return self.start + len(self.annual_rates)

    def annual_at(self, month: int) -> float:
        if not self.start <= month < self.end:
            raise DataError(
                f"series {self.series_id!r} has no observation for {month_label(month)}"
            )
        return float(self.annual_rates[month - self.start])


@dataclass(frozen=True)
class RateTrajectory:
    """Aligned monthly-rate vectors over one horizon, keyed by rate id."""

    start_month: str | None  # YYYY-MM for historical windows, None for synthetic
    rates: Mapping[str, np.ndarray]  # each of length T+1

    @property
    def horizon(self) -> int:
        return len(next(iter(self.rates.values()))) - 1

    def at(self, t: int) -> dict[str, float]:
        return {key: float(vec[t]) for key, vec in self.rates.items()}

    def merged_with(self, other: "RateTrajectory") -> "RateTrajectory":
        rates = {**dict(other.rates), **dict(self.rates)}
        return RateTrajectory(start_month=self.start_month or other.start_month, rates=rates)


def load_series(csv_path: str | Path, descriptor_path: str | Path | None = None) -> RateSeries:
    """Load and validate one series; rows are sorted, duplicates and month
    gaps rejected, index levels reduced to annual rates per the sidecar."""
    csv_path = Path(csv_path)
    descriptor_path = Path(descriptor_path) if descriptor_path else csv_path.with_suffix(".json")
    try:
        descriptor = json.loads(descriptor_path.read_text())
    except FileNotFoundError:
        raise DataError(f"missing sidecar descriptor {descriptor_path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid descriptor {descriptor_path}: {exc}") from exc

    series_id = descriptor.get("series_id") or csv_path.stem
    value_type = descriptor.get("value_type", "annual_rate")
    if value_type not in ("annual_rate", "index"):
        raise DataError(f"{descriptor_path}: unknown value_type {value_type!r}")

    rows: list[tuple[int, float]] = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["date", "value"]:
            raise ParseError("expected header 'date,value'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ParseError("expected two columns 'date,value'", line=lineno)
            try:
                month = month_index(row[0])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            try:
                value = float(row[1])
            except ValueError:
                raise ParseError(f"bad value {row[1]!r}", line=lineno) from None
            rows.append((month, value))
    if not rows:
        raise DataError(f"{csv_path} has no data rows")

    rows.sort(key=lambda r: r[0])
    months = [m for m, _ in rows]
    for prev, cur in zip(months, months[1:]):
        if cur == prev:
            raise DataError(f"{csv_path}: duplicate month {month_label(cur)}")
        if cur != prev + 1:
            raise DataError(f"{csv_path}: missing month {month_label(prev + 1)}")

    values = np.array([v for _, v in rows])
    start = months[0]
    if value_type == "index":
        if np.any(values <= 0):
            raise DataError(f"{csv_path}: index levels must be positive")
        transform = descriptor.get("index_transform")
        if transform == "yoy":
            if len(values) < 13:
                raise DataError(f"{csv_path}: need 13+ months for a year-over-year rate")
            annual = values[12:] / values[:-12] - 1.0
            start += 12
        elif transform == "monthly_return":
            if len(values) < 2:
                raise DataError(f"{csv_path}: need 2+ months for monthly returns")
            annual = (values[1:] / values[:-1]) ** 12 - 1.0
            start += 1
        else:
            raise DataError(f"{descriptor_path}: unknown index_transform {transform!r}")
    else:
        annual = values

    return RateSeries(
        series_id=series_id,
        start=start,
        annual_rates=annual,
        source=str(descriptor.get("source", "")),
    )


def serialize_series(series: RateSeries) -> str:
    """Canonical CSV form (annual rates, shortest round-trip floats)."""
    out = io.StringIO()
    out.write("date,value\n")
    for i, rate in enumerate(series.annual_rates):
        out.write(f"{month_label(series.start + i)},{float(rate)!r}\n")
    return out.getvalue()


def load_rates_dir(path: str | Path) -> dict[str, RateSeries]:
    """Load every *.csv series in a directory, keyed by series id."""
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"rates directory {path} does not exist")
    out: dict[str, RateSeries] = {}
    for csv_path in sorted(path.glob("*.csv")):
        series = load_series(csv_path)
        if series.series_id in out:
            raise DataError(f"duplicate series id {series.series_id!r} in {path}")
        out[series.series_id] = series
    if not out:
        raise DataError(f"no series files found in {path}")
    return out


def common_coverage(series: Iterable[RateSeries]) -> tuple[int, int]:
    """(start, end) month indices jointly covered by all series; end exclusive."""
    series = list(series)
    if not series:
        raise DataError("no series given")
    start = max(s.start for s in series)
    end = min(s.end for s in series)
    if end <= start:
        raise DataError("series have no common coverage")
    return start, end


def window_at(series: Sequence[RateSeries], start_label: str, horizon: int) -> RateTrajectory:
    """The aligned window of monthly rates starting at a given month."""
    start = month_index(start_label)
    rates = {}
    for s in series:
        if start < s.start or start + horizon + 1 > s.end:
            raise DataError(
                f"series {s.series_id!r} does not cover {start_label} + {horizon + 1} months"
            )
        annual = s.annual_rates[start - s.start : start - s.start + horizon + 1]
        rates[s.series_id] = np.array([monthly_rate(a) for a in annual])
    return RateTrajectory(start_month=start_label, rates=rates)


def sample_windows(
    series: Sequence[RateSeries], horizon: int, count: int, seed: int
) -> list[RateTrajectory]:
    """`count` aligned windows with uniformly random start months over the
    common coverage; one start month is shared by all series in a window, so
    cross-rate dependence in the data is preserved."""
    start, end = common_coverage(series)
    last_start = end - (horizon + 1)
    if last_start < start:
        raise DataError(
            f"common coverage {month_label(start)}..{month_label(end - 1)} is under "
            f"{horizon + 1} months"
        )
    rng = np.random.default_rng(seed)
    starts = rng.integers(start, last_start + 1, size=count)
    return [window_at(series, month_label(int(s)), horizon) for s in starts]


def all_windows(series: Sequence[RateSeries], horizon: int) -> list[RateTrajectory]:
    """Every feasible aligned window over the common coverage, in start order.
    This is the full observed-trajectory dataset for data-driven training."""
    start, end = common_coverage(series)
    last_start = end - (horizon + 1)
    if last_start < start:
        raise DataError(
            f"common coverage {month_label(start)}..{month_label(end - 1)} is under "
            f"{horizon + 1} months"
        )
    return [
        window_at(series, month_label(s), horizon) for s in range(start, last_start + 1)
    ]


def constant_trajectory(config: PlanConfig, horizon: int) -> RateTrajectory:
    """Constant monthly-rate vectors for an all-constant plan."""
    rates: dict[str, np.ndarray] = {}
    for _, goal in config.stock_goals():
        src = goal.rate_source
        if not isinstance(src, ConstantRate):
            raise ConfigError(
                f"goal {goal.id!r} uses a series rate; constant trajectory unavailable"
            )
        convert = (
            monthly_rate_nominal
            if (config.debt_rates_nominal and goal.kind is GoalKind.DEBT)
            else monthly_rate
        )
        rates[rate_key(goal)] = np.full(horizon + 1, convert(src.annual_rate))
    if not isinstance(config.inflation_source, ConstantRate):
        raise ConfigError("inflation uses a series rate; constant trajectory unavailable")
    rates[INFLATION_KEY] = np.full(
        horizon + 1, monthly_rate(config.inflation_source.annual_rate)
    )
    return RateTrajectory(start_month=None, rates=rates)


def trajectory_for_config(
    config: PlanConfig, horizon: int, window: RateTrajectory | None = None
) -> RateTrajectory:
    """Complete per-rate-id trajectory for a plan: series rates from `window`,
    constants filled in, inflation mapped from its source."""
    rates: dict[str, np.ndarray] = {}

    def from_window(series_id: str, what: str) -> np.ndarray:
        if window is None or series_id not in window.rates:
            raise DataError(f"{what} needs series {series_id!r} but no window provides it")
        vec = window.rates[series_id]
        if len(vec) < horizon + 1:
            raise DataError(
                f"series {series_id!r} window covers {len(vec)} months, need {horizon + 1}"
            )
        return np.asarray(vec[: horizon + 1])

    for _, goal in config.stock_goals():
        src = goal.rate_source
        if isinstance(src, SeriesRate):
            rates[src.series_id] = from_window(src.series_id, f"goal {goal.id!r}")
        else:
            convert = (
                monthly_rate_nominal
                if (config.debt_rates_nominal and goal.kind is GoalKind.DEBT)
                else monthly_rate
            )
            rates[rate_key(goal)] = np.full(horizon + 1, convert(src.annual_rate))
    if isinstance(config.inflation_source, SeriesRate):
        rates[INFLATION_KEY] = from_window(config.inflation_source.series_id, "inflation")
    else:
        rates[INFLATION_KEY] = np.full(
            horizon + 1, monthly_rate(config.inflation_source.annual_rate)
        )
    start = window.start_month if window is not None else None
    return RateTrajectory(start_month=start, rates=rates)
