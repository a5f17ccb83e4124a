"""Synthetic versioned corpora and training dumps with known version labels.

A generated corpus drifts a fixed fraction of token positions per month, so
the distance between versions grows predictably with their month gap. Dumps
sample versions from a declared month mixture and keep the true month as a
sidecar label, giving attribution and cutoff estimation a ground truth to
be checked against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .corpus import StreamDoc, TimeSpanCorpus, VersionedDoc
from .errors import ConfigError, DataError
from .mining import MatchRecord, VersionHistogram
from .months import MonthStamp

SPAN_START = MonthStamp(2016, 1)

MIXTURE_SUM_TOL = 1e-9


def month_at(position: int) -> MonthStamp:
    """Month stamp for a 1-based position on the synthetic grid."""
    if position < 1:
        raise ValueError(f"month position must be >= 1, got {position}")
    return SPAN_START.plus(position - 1)


@dataclass(frozen=True)
class DriftSpec:
    topics: int
    months: int
    tokens_per_doc: int
    drift_rate: float
    vocab_size: int
    seed: int

    def __post_init__(self):
        for name in ("topics", "months", "tokens_per_doc", "vocab_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.drift_rate <= 1:
            raise ConfigError(f"drift_rate must be in (0, 1], got {self.drift_rate}")


@dataclass(frozen=True)
class DumpSpec:
    mixture: Mapping[MonthStamp, float]
    docs: int
    seed: int
    duplication: Mapping[MonthStamp, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.docs < 1:
            raise ConfigError(f"docs must be >= 1, got {self.docs}")
        if not self.mixture:
            raise ConfigError("mixture must name at least one month")
        if any(p < 0 for p in self.mixture.values()):
            raise ConfigError("mixture probabilities must be >= 0")
        total = math.fsum(self.mixture.values())
        if abs(total - 1.0) > MIXTURE_SUM_TOL:
            raise ConfigError(f"mixture probabilities sum to {total!r}, expected 1")
        if any(reps < 1 for reps in self.duplication.values()):
            raise ConfigError("duplication factors must be >= 1")


def _render(token_ids: np.ndarray) -> str:
    return " ".join(f"w{t:05d}" for t in token_ids)


def generate_corpus(spec: DriftSpec) -> TimeSpanCorpus:
    """Drifting monthly versions; deterministic per (seed, topic, month).

    The first month is a fresh uniform token sequence per topic; every later
    month resamples ceil(drift_rate * tokens_per_doc) distinct positions.
    The replacement draw may repeat the old token, so realized drift is
    marginally below the nominal rate.
    """
    resample = math.ceil(spec.drift_rate * spec.tokens_per_doc)
    docs: list[VersionedDoc] = []
    for t in range(spec.topics):
        topic_id = f"t{t:04d}"
        rng = np.random.default_rng([spec.seed, t, 1])
        tokens = rng.integers(0, spec.vocab_size, size=spec.tokens_per_doc)
        docs.append(VersionedDoc(topic_id, month_at(1), _render(tokens)))
        for j in range(2, spec.months + 1):
            rng = np.random.default_rng([spec.seed, t, j])
            positions = rng.choice(spec.tokens_per_doc, size=resample, replace=False)
            tokens = tokens.copy()
            tokens[positions] = rng.integers(0, spec.vocab_size, size=resample)
            docs.append(VersionedDoc(topic_id, month_at(j), _render(tokens)))
    return TimeSpanCorpus.from_docs(docs)


class DumpDoc(NamedTuple):
    doc_id: str
    text: str
    true_month: MonthStamp


def generate_dump(corpus: TimeSpanCorpus, spec: DumpSpec) -> list[DumpDoc]:
    """Sample versions into a simulated training dump, labels retained.

    Each draw picks a topic uniformly and a month from the mixture, then
    emits duplication[month] copies of that version.
    """
    months = sorted(spec.mixture)
    for month in months:
        if month not in corpus.months:
            raise DataError(f"mixture month {month} is outside the corpus span")
    for month in spec.duplication:
        if month not in corpus.months:
            raise DataError(f"duplication month {month} is outside the corpus span")
    topics = sorted(corpus.topics)
    probs = np.array([spec.mixture[m] for m in months], dtype=np.float64)
    probs = probs / probs.sum()
    rng = np.random.default_rng([spec.seed])
    topic_idx = rng.integers(0, len(topics), size=spec.docs)
    month_idx = rng.choice(len(months), size=spec.docs, p=probs)
    dump: list[DumpDoc] = []
    for i in range(spec.docs):
        month = months[month_idx[i]]
        text = corpus.version(topics[topic_idx[i]], month).text
        for rep in range(spec.duplication.get(month, 1)):
            dump.append(DumpDoc(doc_id=f"d{i:06d}_r{rep}", text=text, true_month=month))
    return dump


def dump_to_stream(dump: Sequence[DumpDoc], crawl_month: MonthStamp) -> list[StreamDoc]:
    """Wire-format view of a dump; the crawl month hides the true labels."""
    published = date(crawl_month.year, crawl_month.month, 1)
    return [StreamDoc(doc_id=d.doc_id, published=published, text=d.text) for d in dump]


def save_labels(dump: Sequence[DumpDoc], path: str | Path, header_line: str | None = None) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if header_line is not None:
            fh.write(header_line + "\n")
        for doc in dump:
            fh.write(
                json.dumps(
                    {"doc_id": doc.doc_id, "true_month": str(doc.true_month)}, sort_keys=True
                )
                + "\n"
            )


def load_labels(path: str | Path) -> dict[str, MonthStamp]:
    path = Path(path)
    labels: dict[str, MonthStamp] = {}
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise DataError(f"cannot read labels {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if lineno == 1 and isinstance(rec, dict) and set(rec) == {"metadata"}:
                continue
            labels[rec["doc_id"]] = MonthStamp.parse(rec["true_month"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: malformed label record: {exc}") from exc
    return labels


@dataclass(frozen=True)
class AttributionMetrics:
    mode_match: bool
    tv_distance: float
    match_accuracy: float
    accepted_matches: int


def evaluate_attribution(
    histogram: VersionHistogram,
    labels: Mapping[str, MonthStamp],
    records: Sequence[MatchRecord],
) -> AttributionMetrics:
    """Score an attribution histogram against the dump's true labels.

    Reports whether the histogram mode hits the label mode, the total
    variation distance between the normalized histogram and the label
    distribution, and the fraction of accepted matches whose tied-minimum
    months contain the true label.
    """
    if not labels:
        raise DataError("no labels to evaluate against")
    label_counts: dict[MonthStamp, int] = {}
    for month in labels.values():
        label_counts[month] = label_counts.get(month, 0) + 1
    n_labels = len(labels)
    label_dist = {m: c / n_labels for m, c in label_counts.items()}

    hist_dist = histogram.normalized()
    support = set(label_dist) | set(hist_dist)
    if histogram.total_matches == 0:
        tv = 1.0
    else:
        tv = 0.5 * math.fsum(
            abs(hist_dist.get(m, 0.0) - label_dist.get(m, 0.0)) for m in support
        )

    best = max(label_counts.values())
    label_mode = min(m for m, c in label_counts.items() if c == best)
    mode_match = histogram.mode_month() == label_mode

    correct = 0
    accepted = 0
    for rec in records:
        if not rec.accepted:
            continue
        true_month = labels.get(rec.doc_id)
        if true_month is None:
            continue
        accepted += 1
        if true_month in rec.min_months:
            correct += 1
    accuracy = correct / accepted if accepted else 0.0
    return AttributionMetrics(
        mode_match=mode_match,
        tv_distance=tv,
        match_accuracy=accuracy,
        accepted_matches=accepted,
    )
