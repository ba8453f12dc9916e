"""POI visit records: ingestion, synthesis, windowing and splitting.

On-disk schema (JSONL, one POI-day per line):

    {"poi_id": str, "brand": str, "region": str, "open_hour": int,
     "close_hour": int, "date": "YYYY-MM-DD", "hourly_visits": [24 ints]}

CSV mirror: the same fields with the hourly list flattened into columns
h00..h23.
"""

import csv
import datetime as dt
import json
import random
from dataclasses import dataclass

import numpy as np

from promptmine.errors import ConfigError, IoError, SchemaError

WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
HOURS_PER_DAY = 24
DEFAULT_START_DATE = dt.date(2022, 12, 26)  # a Monday
CSV_HOUR_COLUMNS = tuple(f"h{h:02d}" for h in range(HOURS_PER_DAY))
CSV_COLUMNS = ("poi_id", "brand", "region", "open_hour", "close_hour", "date") + CSV_HOUR_COLUMNS


@dataclass(frozen=True)
class DayRecord:
    """One calendar day of hourly visit counts for a single POI."""

    date: dt.date
    weekday: str
    hourly_visits: tuple
    daily_total: int

    def __post_init__(self):
        if len(self.hourly_visits) != HOURS_PER_DAY:
            raise SchemaError(
                f"{self.date}: expected {HOURS_PER_DAY} hourly values, got {len(self.hourly_visits)}"
            )
        if any(v < 0 for v in self.hourly_visits):
            raise SchemaError(f"{self.date}: negative visit count")
        if self.daily_total != sum(self.hourly_visits):
            raise SchemaError(f"{self.date}: daily_total does not match hourly sum")
        if self.weekday != WEEKDAYS[self.date.weekday()]:
            raise SchemaError(f"{self.date}: weekday label {self.weekday!r} does not match date")


def day_record(date, hourly_visits):
    hourly = tuple(int(v) for v in hourly_visits)
    return DayRecord(
        date=date,
        weekday=WEEKDAYS[date.weekday()],
        hourly_visits=hourly,
        daily_total=sum(hourly),
    )


@dataclass(frozen=True)
class PoiRecord:
    """A POI with its metadata and ordered daily series."""

    poi_id: str
    brand: str
    region: str
    open_hour: int
    close_hour: int
    days: tuple

    def __post_init__(self):
        if not 0 <= self.open_hour <= 23:
            raise SchemaError(f"{self.poi_id}: open_hour {self.open_hour} out of range")
        if not 1 <= self.close_hour <= 24:
            raise SchemaError(f"{self.poi_id}: close_hour {self.close_hour} out of range")
        if self.open_hour >= self.close_hour:
            raise SchemaError(f"{self.poi_id}: open_hour must precede close_hour")
        dates = [d.date for d in self.days]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise SchemaError(f"{self.poi_id}: day dates must be strictly increasing")


@dataclass(frozen=True)
class ForecastWindow:
    """n history days plus the immediately following target day."""

    poi: PoiRecord
    history: tuple
    target: DayRecord

    def __post_init__(self):
        if len(self.history) < 1:
            raise SchemaError("window needs at least one history day")
        run = list(self.history) + [self.target]
        for a, b in zip(run, run[1:]):
            if b.date - a.date != dt.timedelta(days=1):
                raise SchemaError("window days must be consecutive calendar dates")

    @property
    def n(self):
        return len(self.history)

    @property
    def key(self):
        return (self.poi.poi_id, self.target.date.isoformat())


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    test: tuple
    evaluator_pool: tuple
    seed: int

    @property
    def all_windows(self):
        return self.train + self.val + self.test


def _poi_from_rows(poi_id, rows):
    first = rows[0]
    days = []
    for r in rows:
        days.append(day_record(r["date"], r["hourly_visits"]))
    return PoiRecord(
        poi_id=poi_id,
        brand=first["brand"],
        region=first["region"],
        open_hour=first["open_hour"],
        close_hour=first["close_hour"],
        days=tuple(days),
    )


def _parse_jsonl_row(line, lineno):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {lineno}: invalid JSON ({exc})") from exc
    try:
        hourly = obj["hourly_visits"]
        return {
            "poi_id": str(obj["poi_id"]),
            "brand": str(obj["brand"]),
            "region": str(obj["region"]),
            "open_hour": int(obj["open_hour"]),
            "close_hour": int(obj["close_hour"]),
            "date": dt.date.fromisoformat(obj["date"]),
            "hourly_visits": [int(v) for v in hourly],
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"line {lineno}: {exc}") from exc


def _parse_csv_row(row, lineno):
    if len(row) != len(CSV_COLUMNS):
        raise SchemaError(
            f"line {lineno}: expected {len(CSV_COLUMNS)} columns, got {len(row)}"
        )
    try:
        return {
            "poi_id": row["poi_id"],
            "brand": row["brand"],
            "region": row["region"],
            "open_hour": int(row["open_hour"]),
            "close_hour": int(row["close_hour"]),
            "date": dt.date.fromisoformat(row["date"]),
            "hourly_visits": [int(row[c]) for c in CSV_HOUR_COLUMNS],
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"line {lineno}: {exc}") from exc


def load_records(path, format="jsonl"):
    """Load POI records, grouping rows by poi_id in order of first appearance."""
    if format not in ("jsonl", "csv"):
        raise ConfigError(f"unknown record format {format!r}")
    rows = []
    try:
        if format == "jsonl":
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if line.strip():
                        rows.append(_parse_jsonl_row(line, lineno))
        else:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames is not None and tuple(reader.fieldnames) != CSV_COLUMNS:
                    raise SchemaError(
                        f"header mismatch: expected {','.join(CSV_COLUMNS)}"
                    )
                for lineno, row in enumerate(reader, start=2):
                    if None in row.values() or None in row:
                        raise SchemaError(f"line {lineno}: wrong column count")
                    rows.append(_parse_csv_row(row, lineno))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    grouped = {}
    for r in rows:
        grouped.setdefault(r["poi_id"], []).append(r)
    return [_poi_from_rows(pid, poi_rows) for pid, poi_rows in grouped.items()]


def write_records_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            for day in rec.days:
                fh.write(
                    json.dumps(
                        {
                            "poi_id": rec.poi_id,
                            "brand": rec.brand,
                            "region": rec.region,
                            "open_hour": rec.open_hour,
                            "close_hour": rec.close_hour,
                            "date": day.date.isoformat(),
                            "hourly_visits": list(day.hourly_visits),
                        },
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                    + "\n"
                )


def write_records_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            for day in rec.days:
                writer.writerow(
                    [rec.poi_id, rec.brand, rec.region, rec.open_hour, rec.close_hour,
                     day.date.isoformat()] + list(day.hourly_visits)
                )


@dataclass(frozen=True)
class SynthConfig:
    num_pois: int = 10
    days: int = 7
    peak_profile: str = "retail"  # or "flat"
    seed: int = 42
    start_date: dt.date = DEFAULT_START_DATE
    base_rate_range: tuple = (0.3, 3.0)


_BRANDS = (
    "Mobil", "Shell", "Starbucks", "Walgreens", "Subway",
    "Target", "Costco", "Chipotle", "Safeway", "Panera",
)
_REGIONS = (
    "WI, Osseo", "CA, Fresno", "TX, Plano", "NY, Albany", "WA, Tacoma",
    "OH, Dayton", "FL, Ocala", "CO, Pueblo", "GA, Macon", "OR, Salem",
)


def rate_profile(kind, open_hour, close_hour, base):
    """Piecewise-constant hourly visit rates for one day.

    The retail profile has distinct morning / lunch / afternoon / evening
    regimes inside working hours (zero outside) so that segmentation has
    recoverable change points; the flat profile is one constant rate for
    all 24 hours.
    """
    if kind == "flat":
        return [base] * HOURS_PER_DAY
    if kind != "retail":
        raise ConfigError(f"unknown peak profile {kind!r}")
    rates = [0.0] * HOURS_PER_DAY
    for h in range(open_hour, close_hour):
        if h < 11:
            factor = 1.0
        elif h < 14:
            factor = 2.5
        elif h < 17:
            factor = 0.8
        else:
            factor = 1.8
        rates[h] = base * factor
    return rates


def synthesize_corpus(config):
    """Deterministic synthetic corpus of POI records."""
    if config.num_pois < 1 or config.days < 1:
        raise ConfigError("num_pois and days must be positive")
    lo, hi = config.base_rate_range
    if lo <= 0 or hi < lo:
        raise ConfigError("base_rate_range must be positive and ordered")
    rng = np.random.default_rng(config.seed)
    records = []
    for idx in range(config.num_pois):
        brand = _BRANDS[int(rng.integers(len(_BRANDS)))]
        region = _REGIONS[int(rng.integers(len(_REGIONS)))]
        if rng.random() < 0.3:
            open_hour, close_hour = 0, 24
        else:
            open_hour = int(rng.integers(6, 11))
            close_hour = int(rng.integers(17, 23))
        base = float(rng.uniform(lo, hi))
        rates = rate_profile(config.peak_profile, open_hour, close_hour, base)
        days = []
        for d in range(config.days):
            date = config.start_date + dt.timedelta(days=d)
            hourly = [int(v) for v in rng.poisson(rates)]
            days.append(day_record(date, hourly))
        records.append(
            PoiRecord(
                poi_id=f"poi-{idx:05d}",
                brand=brand,
                region=region,
                open_hour=open_hour,
                close_hour=close_hour,
                days=tuple(days),
            )
        )
    return records


def make_windows(records, n=3):
    """All (n history days, 1 target day) windows over consecutive-date runs."""
    if n < 1:
        raise ConfigError("window length n must be >= 1")
    windows = []
    for rec in records:
        days = rec.days
        for i in range(len(days) - n):
            run = days[i : i + n + 1]
            if all(
                b.date - a.date == dt.timedelta(days=1)
                for a, b in zip(run, run[1:])
            ):
                windows.append(
                    ForecastWindow(poi=rec, history=tuple(run[:n]), target=run[n])
                )
    windows.sort(key=lambda w: (w.poi.poi_id, w.target.date))
    return windows


def split_dataset(windows, fractions=(0.70, 0.10, 0.20), pool_fraction=0.20, seed=42):
    """Deterministic train/val/test split plus the evaluator pool.

    The pool (a fraction of all windows) is drawn from the shuffled train
    portion.
    """
    if len(fractions) != 3:
        raise ConfigError("fractions must have three entries")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)}")
    if not 0 <= pool_fraction <= 1:
        raise ConfigError("pool_fraction must lie in [0, 1]")
    shuffled = list(windows)
    random.Random(seed).shuffle(shuffled)
    total = len(shuffled)
    n_train = int(fractions[0] * total + 0.5)
    n_val = int(fractions[1] * total + 0.5)
    n_pool = int(pool_fraction * total + 0.5)
    if n_pool > n_train:
        raise ConfigError("pool_fraction exceeds the train fraction")
    train = tuple(shuffled[:n_train])
    val = tuple(shuffled[n_train : n_train + n_val])
    test = tuple(shuffled[n_train + n_val :])
    return DatasetSplit(
        train=train,
        val=val,
        test=test,
        evaluator_pool=train[:n_pool],
        seed=seed,
    )


def window_to_json_dict(window):
    return {
        "poi_id": window.poi.poi_id,
        "brand": window.poi.brand,
        "region": window.poi.region,
        "open_hour": window.poi.open_hour,
        "close_hour": window.poi.close_hour,
        "history": [
            {"date": d.date.isoformat(), "hourly_visits": list(d.hourly_visits)}
            for d in window.history
        ],
        "target": {
            "date": window.target.date.isoformat(),
            "hourly_visits": list(window.target.hourly_visits),
        },
    }


def window_from_json_dict(obj):
    history = tuple(
        day_record(dt.date.fromisoformat(d["date"]), d["hourly_visits"])
        for d in obj["history"]
    )
    target = day_record(
        dt.date.fromisoformat(obj["target"]["date"]), obj["target"]["hourly_visits"]
    )
    poi = PoiRecord(
        poi_id=obj["poi_id"],
        brand=obj["brand"],
        region=obj["region"],
        open_hour=obj["open_hour"],
        close_hour=obj["close_hour"],
        days=history + (target,),
    )
    return ForecastWindow(poi=poi, history=history, target=target)
