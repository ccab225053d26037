"""Hourly demand / wind time series: ingestion, synthesis, normalisation, day-blocking."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import GapError, RangeError, SchemaError, ShapeError

HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365
HOURS_PER_YEAR = HOURS_PER_DAY * DAYS_PER_YEAR

DEMAND_BUSES = (2, 4, 5)
WIND_BUSES = (2, 5, 6)
CSV_HEADER = (
    "timestamp",
    "demand_bus2",
    "demand_bus4",
    "demand_bus5",
    "wind_bus2",
    "wind_bus5",
    "wind_bus6",
)
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:00Z"
_TIMESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:00Z$")

SYNTH_START = datetime(2001, 1, 1, tzinfo=timezone.utc)


def _frozen(a, ndim=2) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 1 and ndim == 2:
        arr = arr[:, None]
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeriesTable:
    """Contiguous hourly demand (MW) and wind capacity factors.

    ``demand`` has shape ``(length, len(demand_buses))`` and ``wind_cf``
    shape ``(length, len(wind_buses))``.  Arrays are read-only.
    """

    start: datetime
    demand_buses: tuple
    demand: np.ndarray
    wind_buses: tuple
    wind_cf: np.ndarray

    def __post_init__(self):
        start = self.start
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        if start.minute or start.second or start.microsecond:
            raise GapError("start timestamp must fall on a whole hour")
        object.__setattr__(self, "start", start.astimezone(timezone.utc))
        object.__setattr__(self, "demand_buses", tuple(int(b) for b in self.demand_buses))
        object.__setattr__(self, "wind_buses", tuple(int(b) for b in self.wind_buses))
        demand = _frozen(self.demand)
        wind = _frozen(self.wind_cf)
        if wind.shape[1] == 0 and not self.wind_buses:
            wind = _frozen(np.zeros((demand.shape[0], 0)))
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "wind_cf", wind)
        if demand.shape[0] == 0:
            raise ShapeError("table must contain at least one hour")
        if demand.shape != (demand.shape[0], len(self.demand_buses)):
            raise ShapeError(f"demand shape {demand.shape} does not match buses {self.demand_buses}")
        if wind.shape != (demand.shape[0], len(self.wind_buses)):
            raise ShapeError(f"wind shape {wind.shape} does not match buses {self.wind_buses}")
        if not np.all(np.isfinite(demand)) or np.any(demand < 0):
            raise RangeError("demand must be finite and non-negative")
        if not np.all(np.isfinite(wind)) or np.any(wind < 0) or np.any(wind > 1):
            raise RangeError("wind capacity factors must lie in [0, 1]")

    @property
    def length(self) -> int:
        return self.demand.shape[0]

    @property
    def n_days(self) -> int:
        if self.length % HOURS_PER_DAY:
            raise ShapeError(f"length {self.length} is not a multiple of {HOURS_PER_DAY}")
        return self.length // HOURS_PER_DAY

    @property
    def series_names(self) -> list:
        return [f"demand_bus{b}" for b in self.demand_buses] + [f"wind_bus{b}" for b in self.wind_buses]

    def values(self) -> np.ndarray:
        """All series side by side, demand columns first."""
        return np.hstack([self.demand, self.wind_cf])

    def timestamps(self) -> list:
        return [self.start + timedelta(hours=i) for i in range(self.length)]

    def with_values(self, values: np.ndarray) -> "TimeSeriesTable":
        nd = len(self.demand_buses)
        return TimeSeriesTable(self.start, self.demand_buses, values[:, :nd], self.wind_buses, values[:, nd:])

    def hours(self, start: int, stop: int) -> "TimeSeriesTable":
        """Sub-table covering hours ``[start, stop)``."""
        return TimeSeriesTable(
            self.start + timedelta(hours=start),
            self.demand_buses,
            self.demand[start:stop],
            self.wind_buses,
            self.wind_cf[start:stop],
        )

    def days(self, start: int, stop: int) -> "TimeSeriesTable":
        return self.hours(start * HOURS_PER_DAY, stop * HOURS_PER_DAY)

    def day_array(self) -> tuple:
        """``(demand, wind)`` reshaped to ``(n_days, 24, n_buses)``."""
        n = self.n_days
        return (
            self.demand.reshape(n, HOURS_PER_DAY, -1),
            self.wind_cf.reshape(n, HOURS_PER_DAY, -1),
        )

    def equals(self, other: "TimeSeriesTable") -> bool:
        return (
            self.start == other.start
            and self.demand_buses == other.demand_buses
            and self.wind_buses == other.wind_buses
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.wind_cf, other.wind_cf)
        )

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesTable):
            return NotImplemented
        return self.equals(other)

    __hash__ = None


@dataclass(frozen=True)
class DayBlock:
    day_index: int

    @property
    def steps(self) -> range:
        return range(HOURS_PER_DAY * self.day_index, HOURS_PER_DAY * (self.day_index + 1))


@dataclass(frozen=True, eq=False)
class NormalizationSpec:
    """Per-series minimum and maximum over the full table."""

    names: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _frozen(self.mins, ndim=1))
        object.__setattr__(self, "maxs", _frozen(self.maxs, ndim=1))
        if np.any(self.maxs < self.mins):
            raise RangeError("normalisation max below min")

    @property
    def spans(self) -> np.ndarray:
        return self.maxs - self.mins

    def apply(self, values: np.ndarray) -> np.ndarray:
        span = self.spans
        safe = np.where(span > 0, span, 1.0)
        out = (values - self.mins) / safe
        return np.where(span > 0, out, 0.0)

    def invert(self, values: np.ndarray) -> np.ndarray:
        return self.mins + values * self.spans


# -- CSV ---------------------------------------------------------------------


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    if not _TIMESTAMP_RE.match(text):
        raise SchemaError(f"bad timestamp {text!r}, expected YYYY-MM-DDTHH:00Z")
    return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


def _check_csv_layout(table: TimeSeriesTable):
    if table.demand_buses != DEMAND_BUSES or table.wind_buses != WIND_BUSES:
        raise SchemaError("CSV output requires the 6-bus column layout")


def write_csv(table: TimeSeriesTable, path) -> None:
    """Write ``table`` with shortest round-trip float formatting and LF endings."""
    _check_csv_layout(table)
    values = table.values()
    lines = [",".join(CSV_HEADER)]
    ts = table.start
    step = timedelta(hours=1)
    for row in values:
        lines.append(format_timestamp(ts) + "," + ",".join(repr(float(v)) for v in row))
        ts += step
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_csv(path) -> TimeSeriesTable:
    """Read and validate a demand/wind CSV file.

    Raises
    ------
    SchemaError
        Header differs from the expected columns or a row is malformed.
    GapError
        Timestamps skip or repeat an hour.
    RangeError
        Negative or non-finite demand, capacity factor outside [0, 1].
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise SchemaError(f"unexpected header {header}; expected {','.join(CSV_HEADER)}")
        stamps, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            stamps.append(parse_timestamp(row[0]))
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
    if not rows:
        raise SchemaError("file has no data rows")
    start = stamps[0]
    for i, ts in enumerate(stamps):
        if ts != start + timedelta(hours=i):
            raise GapError(f"row {i + 2}: timestamp {format_timestamp(ts)} breaks hourly contiguity")
    values = np.array(rows)
    demand, wind = values[:, :3], values[:, 3:]
    if not np.all(np.isfinite(demand)) or np.any(demand < 0):
        bad = int(np.argmax(~np.isfinite(demand).all(axis=1) | (demand < 0).any(axis=1)))
        raise RangeError(f"row {bad + 2}: demand must be finite and non-negative")
    if not np.all(np.isfinite(wind)) or np.any((wind < 0) | (wind > 1)):
        bad = int(np.argmax(~np.isfinite(wind).all(axis=1) | ((wind < 0) | (wind > 1)).any(axis=1)))
        raise RangeError(f"row {bad + 2}: capacity factor outside [0, 1]")
    return TimeSeriesTable(start, DEMAND_BUSES, demand, WIND_BUSES, wind)


# -- synthetic data -----------------------------------------------------------

# (mean MW, seasonal swing, diurnal phase shift in hours, cold-spell loading)
_DEMAND_PROFILE = {
    2: (56000.0, 0.16, 0.0, 1.0),
    4: (52000.0, 0.24, 0.0, 1.2),
    5: (35000.0, 0.20, -1.0, 0.9),
}
# (logit mean, seasonal amplitude, seasonal phase in days, weight on shared weather)
_WIND_PROFILE = {
    2: (-1.0, 0.45, 0.0, 0.75),
    5: (-0.55, 0.55, 10.0, 0.65),
    6: (-1.15, 0.30, -20.0, 0.45),
}


def _ar1(rng: np.random.Generator, phi: float, n: int, scale: float = 1.0, df=None) -> np.ndarray:
    """Stationary AR(1) path with unit marginal variance times ``scale``."""
    eps = rng.standard_t(df, size=n) if df else rng.standard_normal(n)
    eps = eps * math.sqrt(1.0 - phi * phi)
    path = lfilter([1.0], [1.0, -phi], eps)
    return scale * path


def synth_generate(seed: int, n_years: int) -> TimeSeriesTable:
    """Seeded synthetic demand and wind series for the 6-bus system.

    Demand is a positive baseline modulated by seasonal and diurnal
    sinusoids, a shared day-level cold-spell process and hourly AR(1)
    noise.  Wind capacity factors are a logistic transform of a latent
    AR(1) process, so they always stay in [0, 1].  Cold spells depress
    the wind latent, producing the occasional high-demand / low-wind day.
    Every year has exactly 365 days.
    """
    if n_years < 1:
        raise ValueError("n_years must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    n_days = n_years * DAYS_PER_YEAR
    n = n_days * HOURS_PER_DAY
    t = np.arange(n)
    hour = t % HOURS_PER_DAY
    doy = (t // HOURS_PER_DAY) % DAYS_PER_YEAR + hour / HOURS_PER_DAY

    # day-level cold spells, heavy tailed so some days are genuinely extreme
    cold_daily = _ar1(rng, 0.8, n_days, df=4)
    cold_hourly = np.repeat(cold_daily, HOURS_PER_DAY)
    cold_hourly = lfilter([0.15], [1.0, -0.85], cold_hourly)  # smooth day edges
    synoptic = _ar1(rng, 0.985, n)

    winter = np.cos(2 * np.pi * (doy - 15) / DAYS_PER_YEAR)
    demand = np.empty((n, len(DEMAND_BUSES)))
    for j, bus in enumerate(DEMAND_BUSES):
        base, swing, shift, loading = _DEMAND_PROFILE[bus]
        h = hour - shift
        diurnal = 0.09 * np.sin(2 * np.pi * (h - 9) / 24) - 0.04 * np.cos(4 * np.pi * (h - 19) / 24)
        noise = _ar1(rng, 0.9, n, scale=0.015)
        level = 1.0 + swing * winter + diurnal + 0.05 * loading * cold_hourly + noise
        demand[:, j] = np.clip(base * level, 0.0, None)

    wind = np.empty((n, len(WIND_BUSES)))
    for j, bus in enumerate(WIND_BUSES):
        mu, amp, phase, share = _WIND_PROFILE[bus]
        seasonal = amp * np.cos(2 * np.pi * (doy - 15 - phase) / DAYS_PER_YEAR)
        own = _ar1(rng, 0.97, n)
        latent = mu + seasonal + 1.1 * (share * synoptic + math.sqrt(1 - share**2) * own) - 0.35 * cold_hourly
        wind[:, j] = 1.0 / (1.0 + np.exp(-latent))

    return TimeSeriesTable(SYNTH_START, DEMAND_BUSES, demand, WIND_BUSES, wind)


# -- normalisation and blocking ---------------------------------------------


def normalize(table: TimeSeriesTable) -> tuple:
    """Min-max scale every series to [0, 1]; constant series map to 0."""
    values = table.values()
    spec = NormalizationSpec(tuple(table.series_names), values.min(axis=0), values.max(axis=0))
    scaled = np.clip(spec.apply(values), 0.0, 1.0)
    return table.with_values(scaled), spec


def denormalize(table: TimeSeriesTable, spec: NormalizationSpec) -> TimeSeriesTable:
    return table.with_values(spec.invert(table.values()))


def day_blocks(table: TimeSeriesTable) -> list:
    if table.length % HOURS_PER_DAY:
        raise ShapeError(f"length {table.length} is not a multiple of {HOURS_PER_DAY}")
    return [DayBlock(d) for d in range(table.length // HOURS_PER_DAY)]
