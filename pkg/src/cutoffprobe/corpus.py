"""Time-spanning corpora: monthly document versions and month-bucketed streams.

Two dataset shapes are supported. A :class:`TimeSpanCorpus` holds one version
of every topic for every month on a complete month grid (an updating
resource). A :class:`BucketedStream` holds independent documents grouped by
publication month (a building resource).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .months import MonthStamp, month_range


@dataclass(frozen=True)
class VersionedDoc:
    """One topic's text as it stood in one month."""

    topic_id: str
    month: MonthStamp
    text: str

    def __post_init__(self):
        if not self.text:
            raise DataError(f"empty text for topic {self.topic_id!r} at {self.month}")


@dataclass(frozen=True)
class StreamDoc:
    """An independent document with a publication date."""

    doc_id: str
    published: date
    text: str
    source_url: str | None = None

    @property
    def published_month(self) -> MonthStamp:
        return MonthStamp(self.published.year, self.published.month)


class TimeSpanCorpus:
    """Monthly versions of a set of topics over a complete month grid.

    Every topic has exactly one version for every month between the span
    endpoints; construction fails loudly on holes or duplicates. Instances
    are immutable after construction and safe to share across threads.
    """

    def __init__(
        self,
        versions: Mapping[tuple[str, MonthStamp], VersionedDoc],
        span: tuple[MonthStamp, MonthStamp] | None = None,
    ):
        if span is None:
            if not versions:
                raise DataError("cannot infer a span from an empty corpus")
            months_seen = [m for _, m in versions]
            span = (min(months_seen), max(months_seen))
        self.span = span
        self.months: tuple[MonthStamp, ...] = tuple(month_range(*span))
        self.topics: frozenset[str] = frozenset(t for t, _ in versions)
        self._versions = dict(versions)
        self._check_grid()

    def _check_grid(self):
        for topic in sorted(self.topics):
            for month in self.months:
                if (topic, month) not in self._versions:
                    raise DataError(
                        f"incomplete month grid: topic {topic!r} has no version for {month}"
                    )
        expected = len(self.topics) * len(self.months)
        if len(self._versions) != expected:
            extra = [
                (t, m) for (t, m) in self._versions if t not in self.topics or m not in self.months
            ]
            raise DataError(f"versions outside the declared grid: {extra[:3]}")

    @classmethod
    def from_docs(
        cls,
        docs: Iterable[VersionedDoc],
        span: tuple[MonthStamp, MonthStamp] | None = None,
    ) -> TimeSpanCorpus:
        versions: dict[tuple[str, MonthStamp], VersionedDoc] = {}
        for doc in docs:
            key = (doc.topic_id, doc.month)
            if key in versions:
                raise DataError(f"duplicate version for topic {doc.topic_id!r} at {doc.month}")
            versions[key] = doc
        return cls(versions, span)

    def version(self, topic_id: str, month: MonthStamp) -> VersionedDoc:
        try:
            return self._versions[(topic_id, month)]
        except KeyError:
            raise DataError(f"no version for topic {topic_id!r} at {month}") from None

    def versions_of(self, topic_id: str) -> list[VersionedDoc]:
        return [self.version(topic_id, m) for m in self.months]

    def __iter__(self):
        for topic in sorted(self.topics):
            for month in self.months:
                yield self._versions[(topic, month)]

    def __len__(self) -> int:
        return len(self._versions)


@dataclass(frozen=True)
class BucketedStream:
    """Stream documents grouped by publication month, capped per bucket."""

    buckets: Mapping[MonthStamp, tuple[StreamDoc, ...]]
    per_bucket_target: int

    @property
    def months(self) -> tuple[MonthStamp, ...]:
        return tuple(sorted(self.buckets))


def load_timespan(path: str | Path) -> TimeSpanCorpus:
    """Load a versioned corpus from a line-delimited record file.

    One JSON object per line: {"topic_id": str, "month": "YYYY-MM", "text": str}.
    The span is inferred from the observed months and the complete-grid
    invariant is enforced.
    """
    path = Path(path)
    docs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if _is_metadata_record(rec, lineno):
                continue
            doc = VersionedDoc(
                topic_id=rec["topic_id"],
                month=MonthStamp.parse(rec["month"]),
                text=rec["text"],
            )
        except DataError:
            raise
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
        docs.append(doc)
    if not docs:
        raise DataError(f"{path}: no records")
    return TimeSpanCorpus.from_docs(docs)


def save_timespan(
    corpus: TimeSpanCorpus, path: str | Path, header_line: str | None = None
) -> None:
    """Serialize a corpus in the line-delimited record format, sorted for determinism.

    `header_line` lets callers prepend a metadata record; loaders skip it.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if header_line is not None:
            fh.write(header_line + "\n")
        for doc in corpus:
            rec = {"topic_id": doc.topic_id, "month": str(doc.month), "text": doc.text}
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def load_stream(path: str | Path) -> list[StreamDoc]:
    """Load stream documents; one JSON object per line with a YYYY-MM-DD date."""
    path = Path(path)
    docs = []
    seen: set[str] = set()
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if _is_metadata_record(rec, lineno):
                continue
            doc = StreamDoc(
                doc_id=rec["doc_id"],
                published=date.fromisoformat(rec["published"]),
                text=rec["text"],
                source_url=rec.get("url"),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
        if doc.doc_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs


def save_stream(
    docs: Iterable[StreamDoc], path: str | Path, header_line: str | None = None
) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if header_line is not None:
            fh.write(header_line + "\n")
        for doc in docs:
            rec = {
                "doc_id": doc.doc_id,
                "published": doc.published.isoformat(),
                "text": doc.text,
            }
            if doc.source_url is not None:
                rec["url"] = doc.source_url
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _read_lines(path: Path) -> list[str]:
    # Strictly newline-delimited; text may contain exotic Unicode line
    # separators that str.splitlines would wrongly split on.
    try:
        with path.open(encoding="utf-8") as fh:
            return fh.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _is_metadata_record(rec: object, lineno: int) -> bool:
    """True for the optional leading {"metadata": ...} record CLI outputs carry."""
    return lineno == 1 and isinstance(rec, dict) and set(rec) == {"metadata"}


def bucket_stream(docs: Sequence[StreamDoc], target: int, seed: int) -> BucketedStream:
    """Group documents by publication month and downsample full buckets.

    Buckets larger than `target` are sampled uniformly without replacement;
    smaller buckets are kept whole. Sampling is keyed on (seed, month), so
    the result is deterministic and independent of input order.
    """
    if target < 1:
        raise ValueError(f"per-bucket target must be >= 1, got {target}")
    grouped: dict[MonthStamp, list[StreamDoc]] = {}
    for doc in docs:
        grouped.setdefault(doc.published_month, []).append(doc)
    buckets: dict[MonthStamp, tuple[StreamDoc, ...]] = {}
    for month, bucket in grouped.items():
        bucket = sorted(bucket, key=lambda d: d.doc_id)
        if len(bucket) > target:
            rng = np.random.default_rng([seed, month.index])
            keep = rng.choice(len(bucket), size=target, replace=False)
            bucket = [bucket[i] for i in sorted(keep)]
        buckets[month] = tuple(bucket)
    return BucketedStream(buckets=buckets, per_bucket_target=target)


def word_prefix(text: str, n: int) -> str:
    """First n whitespace-delimited words, rejoined with single spaces."""
    if n < 1:
        raise ValueError(f"word count must be >= 1, got {n}")
    return " ".join(text.split()[:n])
