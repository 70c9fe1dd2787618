"""Regenerate the bundled rate fixtures under src/payplan/data/.

The fixtures are deterministic synthetic approximations of three public
monthly series over 1984-01..2022-12: a consumer-price index (levels), the
3-month Treasury-bill yield (annual rate), and a broad equity index
(levels).  Yearly anchor values follow the published history; months are
interpolated with a seeded wiggle so derived month-over-month statistics
look realistic.  Offline test data only, not a market data source.

Run from the repository root:  python tools/make_rate_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "payplan" / "data"
START_YEAR, END_YEAR = 1984, 2022
SEED = 20240901

# year -> approximate year-over-year consumer-price inflation
CPI_YOY = {
    1984: 0.043, 1985: 0.036, 1986: 0.019, 1987: 0.036, 1988: 0.041,
    1989: 0.048, 1990: 0.054, 1991: 0.042, 1992: 0.030, 1993: 0.030,
    1994: 0.026, 1995: 0.028, 1996: 0.030, 1997: 0.023, 1998: 0.016,
    1999: 0.022, 2000: 0.034, 2001: 0.028, 2002: 0.016, 2003: 0.023,
    2004: 0.027, 2005: 0.034, 2006: 0.032, 2007: 0.028, 2008: 0.038,
    2009: -0.004, 2010: 0.016, 2011: 0.032, 2012: 0.021, 2013: 0.015,
    2014: 0.016, 2015: 0.001, 2016: 0.013, 2017: 0.021, 2018: 0.024,
    2019: 0.018, 2020: 0.012, 2021: 0.047, 2022: 0.080,
}

# year -> approximate average 3-month T-bill yield (annual, decimal)
TBILL = {
    1984: 0.095, 1985: 0.075, 1986: 0.060, 1987: 0.058, 1988: 0.067,
    1989: 0.081, 1990: 0.075, 1991: 0.054, 1992: 0.034, 1993: 0.030,
    1994: 0.043, 1995: 0.055, 1996: 0.050, 1997: 0.051, 1998: 0.048,
    1999: 0.046, 2000: 0.058, 2001: 0.034, 2002: 0.016, 2003: 0.010,
    2004: 0.014, 2005: 0.032, 2006: 0.047, 2007: 0.044, 2008: 0.014,
    2009: 0.0015, 2010: 0.0014, 2011: 0.0005, 2012: 0.0009, 2013: 0.0006,
    2014: 0.0003, 2015: 0.0005, 2016: 0.0032, 2017: 0.0093, 2018: 0.0194,
    2019: 0.0206, 2020: 0.0036, 2021: 0.0004, 2022: 0.020,
}

# year -> approximate year-end equity index level
EQUITY = {
    1983: 165, 1984: 167, 1985: 211, 1986: 242, 1987: 247, 1988: 278,
    1989: 353, 1990: 330, 1991: 417, 1992: 436, 1993: 466, 1994: 459,
    1995: 616, 1996: 741, 1997: 970, 1998: 1229, 1999: 1469, 2000: 1320,
    2001: 1148, 2002: 880, 2003: 1112, 2004: 1212, 2005: 1248, 2006: 1418,
    2007: 1468, 2008: 903, 2009: 1115, 2010: 1258, 2011: 1258, 2012: 1426,
    2013: 1848, 2014: 2059, 2015: 2044, 2016: 2239, 2017: 2674, 2018: 2507,
    2019: 3231, 2020: 3756, 2021: 4766, 2022: 3840,
}


def month_labels() -> list[str]:
    return [
        f"{year:04d}-{month:02d}"
        for year in range(START_YEAR, END_YEAR + 1)
        for month in range(1, 13)
    ]


def build_cpi(rng: np.random.Generator) -> list[float]:
    values = []
    level = 100.0
    for year in range(START_YEAR, END_YEAR + 1):
        monthly = np.log1p(CPI_YOY[year]) / 12.0
        for _ in range(12):
            level *= np.exp(monthly + rng.normal(0.0, 0.0009))
            values.append(round(level, 3))
    return values


def build_tbill(rng: np.random.Generator) -> list[float]:
    years = sorted(TBILL)
    anchors_x = [(y - START_YEAR) * 12 + 6 for y in years]
    anchors_y = [TBILL[y] for y in years]
    n = (END_YEAR - START_YEAR + 1) * 12
    base = np.interp(np.arange(n), anchors_x, anchors_y)
    noisy = base + rng.normal(0.0, 0.0008, size=n)
    return [round(max(v, 0.0001), 5) for v in noisy]


def build_equity(rng: np.random.Generator) -> list[float]:
    values = []
    level = float(EQUITY[START_YEAR - 1])
    for year in range(START_YEAR, END_YEAR + 1):
        target = float(EQUITY[year])
        drift = np.log(target / level) / 12.0
        for _ in range(12):
            level *= np.exp(drift + rng.normal(0.0, 0.03))
            values.append(round(level, 2))
        # re-anchor the drift each year so levels track the anchor path
    return values


def write_series(name: str, values: list[float], descriptor: dict) -> None:
    labels = month_labels()
    assert len(labels) == len(values)
    csv_path = OUT_DIR / f"{name}.csv"
    with open(csv_path, "w") as fh:
        fh.write("date,value\n")
        for label, value in zip(labels, values):
            fh.write(f"{label},{value}\n")
    (OUT_DIR / f"{name}.json").write_text(json.dumps(descriptor, indent=2) + "\n")
    print(f"wrote {csv_path} ({len(values)} rows)")


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    write_series(
        "cpi",
        build_cpi(rng),
        {
            "series_id": "cpi",
            "value_type": "index",
            "index_transform": "yoy",
            "source": "synthetic sample approximating the U.S. consumer price index (offline test fixture)",
        },
    )
    write_series(
        "tbill3m",
        build_tbill(rng),
        {
            "series_id": "tbill3m",
            "value_type": "annual_rate",
            "source": "synthetic sample approximating the 3-month U.S. T-bill yield (offline test fixture)",
        },
    )
    write_series(
        "sp500",
        build_equity(rng),
        {
            "series_id": "sp500",
            "value_type": "index",
            "index_transform": "monthly_return",
            "source": "synthetic sample approximating the S&P 500 index (offline test fixture)",
        },
    )


if __name__ == "__main__":
    main()
