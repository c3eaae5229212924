"""Half-open UTC time windows and calendar bucketing helpers.

All analysis windows in this package are half-open intervals
``[start, end)`` over timezone-aware UTC datetimes. The query layer works
at month granularity, so most constructors speak in (year, month) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import DataError

UTC = timezone.utc


def month_start(year: int, month: int) -> datetime:
    return datetime(year, month, 1, tzinfo=UTC)


def next_month(year: int, month: int) -> tuple[int, int]:
    return (year + 1, 1) if month == 12 else (year, month + 1)


def parse_utc(value: str) -> datetime:
    """Parse an ISO-8601 timestamp (GHArchive style, trailing Z) to UTC."""
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=UTC)
    return dt.astimezone(UTC)


@dataclass(frozen=True)
class TimeWindow:
    """A half-open interval [start, end) in UTC."""

    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise DataError("window bounds must be timezone-aware")
        if self.end < self.start:
            raise DataError(f"window end {self.end} precedes start {self.start}")

    def contains(self, ts: datetime) -> bool:
        return self.start <= ts < self.end

    @classmethod
    def year(cls, year: int) -> "TimeWindow":
        return cls(month_start(year, 1), month_start(year + 1, 1))

    @classmethod
    def months(cls, start_year: int, start_month: int,
               end_year: int, end_month: int) -> "TimeWindow":
        """Window covering the inclusive month range start..end."""
        if (start_year, start_month) > (end_year, end_month):
            raise DataError(
                f"month range start {start_year}-{start_month:02d} after "
                f"end {end_year}-{end_month:02d}")
        ny, nm = next_month(end_year, end_month)
        return cls(month_start(start_year, start_month), month_start(ny, nm))

    @classmethod
    def parse(cls, text: str) -> "TimeWindow":
        """Parse "YYYY" or "YYYY-MM:YYYY-MM" (inclusive months)."""
        text = text.strip()
        try:
            if ":" in text:
                lo, hi = text.split(":", 1)
                sy, sm = lo.split("-")
                ey, em = hi.split("-")
                return cls.months(int(sy), int(sm), int(ey), int(em))
            if "-" in text:
                y, m = text.split("-")
                return cls.months(int(y), int(m), int(y), int(m))
            return cls.year(int(text))
        except (ValueError, DataError) as exc:
            raise DataError(f"bad window spec {text!r}: expected 'YYYY', "
                            f"'YYYY-MM' or 'YYYY-MM:YYYY-MM'") from exc

    def month_pairs(self) -> list[tuple[int, int]]:
        """All (year, month) pairs the window overlaps."""
        pairs = []
        y, m = self.start.year, self.start.month
        while month_start(y, m) < self.end:
            pairs.append((y, m))
            y, m = next_month(y, m)
        return pairs

    def split(self, granularity: str) -> list["TimeWindow"]:
        """Split into calendar buckets: "month", "quarter" or "year".

        First/last buckets are clipped to the window bounds. The window
        itself must be month-aligned (which all constructors guarantee).
        """
        months = self.month_pairs()
        if not months:
            return []
        if granularity == "month":
            keys = [(y, m) for y, m in months]
        elif granularity == "quarter":
            keys = [(y, (m - 1) // 3) for y, m in months]
        elif granularity == "year":
            keys = [(y,) for y, m in months]
        else:
            raise DataError(f"unknown bucket granularity {granularity!r}")
        buckets: list[TimeWindow] = []
        current = None
        for key, (y, m) in zip(keys, months):
            if key != current:
                buckets.append(TimeWindow(month_start(y, m), month_start(*next_month(y, m))))
                current = key
            else:
                ny, nm = next_month(y, m)
                buckets[-1] = TimeWindow(buckets[-1].start, month_start(ny, nm))
        return buckets

    def label(self, granularity: str | None = None) -> str:
        """Human label: "2019-03", "2019Q1", "2019", or "2019-01:2019-12"."""
        s = self.start
        if granularity == "month":
            return f"{s.year}-{s.month:02d}"
        if granularity == "quarter":
            return f"{s.year}Q{(s.month - 1) // 3 + 1}"
        if granularity == "year":
            return str(s.year)
        months = self.month_pairs()
        ly, lm = months[-1] if months else (s.year, s.month)
        return f"{s.year}-{s.month:02d}:{ly}-{lm:02d}"

    def __str__(self):
        return f"[{self.start.isoformat()}, {self.end.isoformat()})"
