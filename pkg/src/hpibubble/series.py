"""Monthly index panels: ingestion, growth rates, windowing, calendar-month statistics.

Time is counted in months.  A :class:`MonthStamp` maps to the ordinal
``12 * year + (month - 1)`` so that fractional month positions (e.g. a
critical time between two observations) can be expressed as plain floats;
``ordinal / 12`` is the decimal year.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence, TextIO, Union

import numpy as np

from .errors import DomainError, GapError, InsufficientData, MalformedInput, RangeError

MONTH_NAMES = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
               "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

_STAMP_RE = re.compile(r"^\s*(\d{4})-(\d{2})\s*$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise DomainError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        m = _STAMP_RE.match(text)
        if m is None:
            raise MalformedInput(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_ordinal(cls, ordinal: int) -> "MonthStamp":
        year, m0 = divmod(int(ordinal), 12)
        return cls(year, m0 + 1)

    @property
    def ordinal(self) -> int:
        return 12 * self.year + self.month - 1

    def shift(self, months: int) -> "MonthStamp":
        return MonthStamp.from_ordinal(self.ordinal + months)

    def __sub__(self, other: "MonthStamp") -> int:
        return self.ordinal - other.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


StampLike = Union[MonthStamp, str]


def as_stamp(value: StampLike) -> MonthStamp:
    return value if isinstance(value, MonthStamp) else MonthStamp.parse(value)


def decimal_year(ordinal: float) -> float:
    """Fractional month ordinal -> YYYY.fraction."""
    return ordinal / 12.0


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise MalformedInput("series values must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class _MonthlySeries:
    region_code: str
    start: MonthStamp
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        return (type(self) is type(other)
                and self.region_code == other.region_code
                and self.start == other.start
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((type(self).__name__, self.region_code, self.start, len(self)))

    @property
    def end(self) -> MonthStamp:
        return self.start.shift(len(self) - 1)

    @property
    def ordinals(self) -> np.ndarray:
        return self.start.ordinal + np.arange(len(self))

    @property
    def months(self) -> np.ndarray:
        """Calendar month (1..12) of every sample."""
        return (self.ordinals % 12) + 1

    def stamps(self) -> list[MonthStamp]:
        return [self.start.shift(k) for k in range(len(self))]

    def at(self, stamp: StampLike) -> float:
        k = as_stamp(stamp) - self.start
        if not 0 <= k < len(self):
            raise RangeError(f"{stamp} outside {self.start}..{self.end}")
        return float(self.values[k])


class IndexSeries(_MonthlySeries):
    """Monthly index levels for one region (strictly positive, gap-free)."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.values) == 0:
            raise InsufficientData(f"region {self.region_code!r} has no values")
        bad = np.flatnonzero(~(self.values > 0))
        if bad.size:
            k = int(bad[0])
            raise DomainError(
                f"region {self.region_code!r}: non-positive index {self.values[k]!r} "
                f"at {self.start.shift(k)}")


class GrowthSeries(_MonthlySeries):
    """Monthly log growth rates; ``values[k]`` is stamped at ``start + k``."""


@dataclass(frozen=True)
class PricePanel:
    series: Mapping[str, IndexSeries]

    def __post_init__(self):
        if not self.series:
            raise InsufficientData("panel is empty")
        for code, s in self.series.items():
            if code != s.region_code:
                raise MalformedInput(f"key {code!r} does not match series {s.region_code!r}")
        object.__setattr__(self, "series", MappingProxyType(dict(self.series)))

    @classmethod
    def from_series(cls, items: Iterable[IndexSeries]) -> "PricePanel":
        out: dict[str, IndexSeries] = {}
        for s in items:
            if s.region_code in out:
                raise MalformedInput(f"duplicate region code {s.region_code!r}")
            out[s.region_code] = s
        return cls(out)

    @property
    def regions(self) -> list[str]:
        return list(self.series)

    @property
    def start(self) -> MonthStamp:
        return min(s.start for s in self.series.values())

    @property
    def end(self) -> MonthStamp:
        return max(s.end for s in self.series.values())

    def __getitem__(self, code: str) -> IndexSeries:
        return self.series[code]

    def __iter__(self) -> Iterator[IndexSeries]:
        return iter(self.series.values())

    def __len__(self) -> int:
        return len(self.series)

    def __contains__(self, code) -> bool:
        return code in self.series

    def scaled(self, factor: float) -> "PricePanel":
        return PricePanel.from_series(
            IndexSeries(s.region_code, s.start, s.values * factor) for s in self)


@dataclass(frozen=True)
class MonthProfile:
    mean: np.ndarray
    std: np.ndarray
    counts: np.ndarray
    ddof: int = 0
    window: tuple[MonthStamp, MonthStamp] | None = None

    def to_dict(self) -> dict:
        return {
            "std_convention": "population" if self.ddof == 0 else f"ddof={self.ddof}",
            "window": [str(w) for w in self.window] if self.window else None,
            "months": [
                {"month": MONTH_NAMES[k], "mean": float(self.mean[k]),
                 "std": float(self.std[k]), "count": int(self.counts[k])}
                for k in range(12)
            ],
        }


# --------------------------------------------------------------------------- ingestion

def _open_text(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline=""), True
    return source, False


def _sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header and "," not in header else ","


def load_panel(source, delimiter: str | None = None) -> PricePanel:
    """Read a ``date,<region>,...`` table into a :class:`PricePanel`.

    ``source`` is a path or an open text stream.  Lines starting with ``#``
    are comments.  Empty cells are allowed only before a region's first or
    after its last observation; an empty cell or a missing date row inside a
    region's span raises :class:`GapError`.
    """
    fh, owned = _open_text(source)
    try:
        lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    finally:
        if owned:
            fh.close()
    if not lines:
        raise MalformedInput("no header row")
    if delimiter is None:
        delimiter = _sniff_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delimiter))
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != "date":
        raise MalformedInput("header must be 'date,<region>,...'", row=1)
    regions = header[1:]
    if len(set(regions)) != len(regions):
        raise MalformedInput("duplicate region column", row=1)

    by_date: dict[int, list[str]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedInput(f"expected {len(header)} cells, got {len(row)}", row=lineno)
        try:
            stamp = MonthStamp.parse(row[0])
        except (MalformedInput, DomainError):
            raise MalformedInput(f"bad date {row[0]!r}", row=lineno, column="date") from None
        if stamp.ordinal in by_date:
            raise MalformedInput(f"duplicate date {stamp}", row=lineno, column="date")
        by_date[stamp.ordinal] = [c.strip() for c in row[1:]]
    if not by_date:
        raise InsufficientData("table has no data rows")
    line_of = {o: i for i, o in enumerate(by_date, start=2)}
    ordinals = sorted(by_date)

    series = []
    for col, region in enumerate(regions):
        cells: dict[int, float] = {}
        for o in ordinals:
            text = by_date[o][col]
            if text == "":
                continue
            try:
                v = float(text)
            except ValueError:
                raise MalformedInput(f"unparseable value {text!r}", row=line_of[o], column=region) from None
            if not math.isfinite(v):
                raise MalformedInput(f"non-finite value {text!r}", row=line_of[o], column=region)
            if v <= 0:
                raise DomainError(
                    f"region {region!r}: non-positive index {v!r} at {MonthStamp.from_ordinal(o)}")
            cells[o] = v
        if not cells:
            raise InsufficientData(f"region {region!r} has no values")
        lo, hi = min(cells), max(cells)
        for o in range(lo, hi + 1):
            if o not in cells:
                raise GapError(region, MonthStamp.from_ordinal(o))
        series.append(IndexSeries(region, MonthStamp.from_ordinal(lo),
                                  [cells[o] for o in range(lo, hi + 1)]))
    return PricePanel.from_series(series)


def format_value(v: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(v))


def dump_panel(panel, dest=None, delimiter: str = ",", comments: Sequence[str] = ()) -> str:
    """Write series (index levels or growth rates) in the canonical table format.

    ``panel`` is a :class:`PricePanel` or any iterable of monthly series.
    Returns the text; also writes it to ``dest`` (path or stream) when given.
    """
    items = list(panel)
    lo = min(s.start.ordinal for s in items)
    hi = max(s.end.ordinal for s in items)
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["date"] + [s.region_code for s in items])
    for o in range(lo, hi + 1):
        row = [str(MonthStamp.from_ordinal(o))]
        for s in items:
            k = o - s.start.ordinal
            row.append(format_value(s.values[k]) if 0 <= k < len(s) else "")
        w.writerow(row)
    text = buf.getvalue()
    if dest is not None:
        if isinstance(dest, (str, os.PathLike)):
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        else:
            dest.write(text)
    return text


# --------------------------------------------------------------------------- transforms

def compute_growth(series: IndexSeries) -> GrowthSeries:
    """g(t) = ln[p(t)/p(t-1)], stamped at the later month t."""
    if len(series) < 2:
        raise InsufficientData(f"region {series.region_code!r}: need at least 2 values for growth")
    p = series.values
    return GrowthSeries(series.region_code, series.start.shift(1), np.log(p[1:] / p[:-1]))


def panel_growth(panel: PricePanel) -> list[GrowthSeries]:
    return [compute_growth(s) for s in panel]


def window(series, start: StampLike, stop: StampLike):
    """Inclusive sub-series ``[start, stop]`` of an index or growth series."""
    a, b = as_stamp(start), as_stamp(stop)
    if a > b:
        raise RangeError(f"window start {a} is after end {b}")
    if a < series.start or b > series.end:
        raise RangeError(f"window {a}..{b} outside span {series.start}..{series.end}")
    i, j = a - series.start, b - series.start
    return type(series)(series.region_code, a, series.values[i:j + 1])


def clip(series, start: StampLike | None = None, stop: StampLike | None = None):
    """Like :func:`window` but intersects with the span instead of raising.

    Returns ``None`` when the intersection is empty.
    """
    a = series.start if start is None else max(as_stamp(start), series.start)
    b = series.end if stop is None else min(as_stamp(stop), series.end)
    if a > b:
        return None
    return window(series, a, b)


def parse_window(text: str) -> tuple[MonthStamp, MonthStamp]:
    """``"YYYY-MM:YYYY-MM"`` -> inclusive pair."""
    parts = text.split(":")
    if len(parts) != 2:
        raise MalformedInput(f"window must look like YYYY-MM:YYYY-MM, got {text!r}")
    a, b = MonthStamp.parse(parts[0]), MonthStamp.parse(parts[1])
    if a > b:
        raise RangeError(f"window start {a} is after end {b}")
    return a, b


def month_profile(growth: Iterable[GrowthSeries], start: StampLike | None = None,
                  stop: StampLike | None = None, ddof: int = 0) -> MonthProfile:
    """Mean and standard deviation of growth rates per calendar month.

    Values are pooled over years and over every series in ``growth``;
    only stamps inside ``[start, stop]`` count (``None`` means unbounded).
    """
    buckets: list[list[np.ndarray]] = [[] for _ in range(12)]
    lo = -math.inf if start is None else as_stamp(start).ordinal
    hi = math.inf if stop is None else as_stamp(stop).ordinal
    for g in growth:
        o = g.ordinals
        keep = (o >= lo) & (o <= hi)
        months = o[keep] % 12
        vals = g.values[keep]
        for m in range(12):
            buckets[m].append(vals[months == m])
    mean = np.empty(12)
    std = np.empty(12)
    counts = np.empty(12, dtype=int)
    for m in range(12):
        v = np.concatenate(buckets[m]) if buckets[m] else np.empty(0)
        if v.size == 0:
            raise InsufficientData(f"no growth values for {MONTH_NAMES[m]} in the requested window")
        mean[m] = v.mean()
        std[m] = v.std(ddof=ddof) if v.size > ddof else 0.0
        counts[m] = v.size
    win = None
    if start is not None and stop is not None:
        win = (as_stamp(start), as_stamp(stop))
    return MonthProfile(mean, std, counts, ddof, win)


def profile_json(profile: MonthProfile, **meta) -> str:
    d = profile.to_dict()
    d.update(meta)
    return json.dumps(d, indent=2)
