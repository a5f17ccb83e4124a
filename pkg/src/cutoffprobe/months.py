"""Calendar-month stamps with total order and month arithmetic."""

from __future__ import annotations

import re
from dataclasses import dataclass

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A specific calendar month, rendered as zero-padded "YYYY-MM"."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range 1..12: {self.month}")

    @classmethod
    def parse(cls, text: str) -> MonthStamp:
        m = _MONTH_RE.match(text)
        if m is None:
            raise ValueError(f"not a YYYY-MM month stamp: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def index(self) -> int:
        """Absolute month number; differences count calendar months."""
        return self.year * 12 + (self.month - 1)

    def plus(self, months: int) -> MonthStamp:
        i = self.index + months
        return MonthStamp(i // 12, i % 12 + 1)

    def __sub__(self, other: MonthStamp) -> int:
        return self.index - other.index

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: MonthStamp, end: MonthStamp) -> list[MonthStamp]:
    """All months from start to end inclusive."""
    if end < start:
        raise ValueError(f"month range ends before it starts: {start}..{end}")
    return [start.plus(i) for i in range(end - start + 1)]
