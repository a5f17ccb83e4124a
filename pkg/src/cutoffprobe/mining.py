"""Attribute retrieved corpus documents to their closest resource versions.

Two crediting schemes are implemented. Closest-version matching retrieves
candidates by BM25, computes the normalized character edit distance against
every monthly version of the topic, accepts matches below a threshold, and
splits one unit of credit across the tied closest months. N-gram crediting
counts month-table n-gram hits in the matched prefix, discounting each
n-gram by the count it attains in every month, so only version-distinctive
n-grams earn credit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence

from .bm25 import Bm25Index, search
from .corpus import TimeSpanCorpus, word_prefix
from .editdist import levenshtein
from .errors import DataError
from .months import MonthStamp

THRESHOLD_DEFAULT = 0.2
QUERY_WORDS_DEFAULT = 512
EDIT_CHAR_CAP_DEFAULT = 20_000
NGRAM_ORDER_DEFAULT = 5


@dataclass(frozen=True)
class MatchRecord:
    """One retrieved document scored against every version of its topic.

    For months ruled out early (distance provably above the acceptance
    threshold or above the running minimum), `dists` holds a proven lower
    bound rather than the exact value; the minimum and its ties are always
    exact.
    """

    topic_id: str
    doc_id: str
    bm25_score: float
    dists: Mapping[MonthStamp, float]
    min_dist: float
    min_months: tuple[MonthStamp, ...]
    accepted: bool


@dataclass(frozen=True)
class VersionHistogram:
    """Fractional credit per month; each accepted match contributes 1 total."""

    counts: Mapping[MonthStamp, Fraction]
    total_matches: int

    def as_floats(self) -> dict[MonthStamp, float]:
        return {m: float(c) for m, c in self.counts.items()}

    def normalized(self) -> dict[MonthStamp, float]:
        if self.total_matches == 0:
            return {}
        return {m: float(c) / self.total_matches for m, c in self.counts.items()}

    def mode_month(self) -> MonthStamp | None:
        """Month with the largest credit, earliest on ties."""
        if not self.counts:
            return None
        best = max(self.counts.values())
        return min(m for m, c in self.counts.items() if c == best)


def histogram_from_records(records: Iterable[MatchRecord]) -> VersionHistogram:
    """Accumulate tie-split credit from accepted records, exactly."""
    counts: dict[MonthStamp, Fraction] = {}
    accepted = 0
    for rec in records:
        if not rec.accepted:
            continue
        accepted += 1
        share = Fraction(1, len(rec.min_months))
        for month in rec.min_months:
            counts[month] = counts.get(month, Fraction(0)) + share
    return VersionHistogram(counts=counts, total_matches=accepted)


def _accept_cap(threshold: float, length: int) -> int:
    """Largest integer distance d with d / length < threshold."""
    return math.ceil(threshold * length) - 1


def attribute_versions(
    index: Bm25Index,
    texts: Mapping[str, str],
    corpus: TimeSpanCorpus,
    query_month: MonthStamp,
    k: int = 10,
    threshold: float = THRESHOLD_DEFAULT,
    query_words: int = QUERY_WORDS_DEFAULT,
    char_cap: int = EDIT_CHAR_CAP_DEFAULT,
) -> tuple[VersionHistogram, list[MatchRecord]]:
    """Retrieve per-topic matches and credit each to its closest version month(s).

    Queries are the first `query_words` words of each topic at `query_month`.
    A match is accepted when the minimum normalized edit distance over the
    topic's versions is below `threshold`; the credit is split equally over
    the tied minimum months. Rejected matches are returned flagged for
    diagnostics. Texts longer than `char_cap` characters are truncated
    before the distance computation.
    """
    if query_month not in corpus.months:
        raise DataError(f"query month {query_month} is outside the corpus span")
    records: list[MatchRecord] = []
    for topic in sorted(corpus.topics):
        query = word_prefix(corpus.version(topic, query_month).text, query_words)
        versions = [(m, corpus.version(topic, m).text[:char_cap]) for m in corpus.months]
        for doc_id, score in search(index, query, k):
            try:
                matched = texts[doc_id]
            except KeyError:
                raise DataError(f"no text available for retrieved doc {doc_id!r}") from None
            if not matched:
                raise DataError(f"retrieved doc {doc_id!r} has empty text")
            matched = matched[:char_cap]
            length = len(matched)
            best = max(_accept_cap(threshold, length), 0)
            dists: dict[MonthStamp, float] = {}
            for month, version_text in versions:
                d = levenshtein(matched, version_text, cap=best)
                dists[month] = d / length
                if d < best:
                    best = d
            min_dist = min(dists.values())
            min_months = tuple(m for m, d in dists.items() if d == min_dist)
            # A zero threshold is the limiting case that keeps byte-identical
            # matches only; exact matches always count.
            records.append(
                MatchRecord(
                    topic_id=topic,
                    doc_id=doc_id,
                    bm25_score=score,
                    dists=dists,
                    min_dist=min_dist,
                    min_months=min_months,
                    accepted=min_dist < threshold or min_dist == 0.0,
                )
            )
    return histogram_from_records(records), records


@dataclass(frozen=True)
class NgramTables:
    """Per-month n-gram counts plus their all-month common core."""

    per_month: Mapping[MonthStamp, Counter]
    common: Counter
    n: int


def _ngrams(tokens: Sequence[str], n: int) -> Iterable[tuple[str, ...]]:
    return (tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def build_ngram_tables(corpus: TimeSpanCorpus, n: int = NGRAM_ORDER_DEFAULT) -> NgramTables:
    """Count word n-grams of every full version, month by month.

    The common table holds, for each n-gram, the minimum count it reaches
    across all months (a multiset intersection); subtracting it later makes
    n-grams shared by every month earn nothing.
    """
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    per_month: dict[MonthStamp, Counter] = {}
    for month in corpus.months:
        table: Counter = Counter()
        for topic in sorted(corpus.topics):
            tokens = corpus.version(topic, month).text.lower().split()
            table.update(_ngrams(tokens, n))
        per_month[month] = table
    common = reduce(lambda a, b: a & b, per_month.values()) if per_month else Counter()
    return NgramTables(per_month=per_month, common=common, n=n)


def attribute_ngrams(
    tables: NgramTables, matched: str, prefix_words: int = QUERY_WORDS_DEFAULT
) -> dict[MonthStamp, int]:
    """Discounted n-gram credit of a matched document against each month.

    Every n-gram occurrence in the matched prefix adds, for each month whose
    table contains the n-gram, that month's count minus the common count.
    """
    tokens = matched.lower().split()[:prefix_words]
    occurrences = Counter(_ngrams(tokens, tables.n))
    credit: dict[MonthStamp, int] = {}
    common = tables.common
    for month, table in tables.per_month.items():
        total = 0
        for gram, reps in occurrences.items():
            count = table.get(gram)
            if count:
                total += reps * (count - common.get(gram, 0))
        if total:
            credit[month] = credit.get(month, 0) + total
    return credit


@dataclass(frozen=True)
class DuplicateCluster:
    topic_id: str
    doc_ids: tuple[str, ...]
    excerpt: str


@dataclass(frozen=True)
class NearDuplicatePair:
    topic_id: str
    doc_a: str
    doc_b: str
    distance: float
    excerpt_a: str
    excerpt_b: str


@dataclass(frozen=True)
class DuplicateReport:
    exact_clusters: tuple[DuplicateCluster, ...]
    near_pairs: tuple[NearDuplicatePair, ...]
    accepted_matches: int

    @property
    def exact_duplicate_docs(self) -> int:
        return sum(len(c.doc_ids) for c in self.exact_clusters)


EXCERPT_CHARS = 500


def duplicate_report(
    records: Sequence[MatchRecord],
    texts: Mapping[str, str],
    threshold: float = THRESHOLD_DEFAULT,
    char_cap: int = EDIT_CHAR_CAP_DEFAULT,
) -> DuplicateReport:
    """Find exact and near duplicates among each topic's accepted matches.

    Pairs with mutual normalized edit distance zero (identical text) form
    exact-duplicate clusters; non-identical pairs below `threshold`
    (normalizing by the longer side) are reported as near duplicates.
    """
    by_topic: dict[str, list[str]] = {}
    for rec in records:
        if rec.accepted:
            by_topic.setdefault(rec.topic_id, []).append(rec.doc_id)

    exact: list[DuplicateCluster] = []
    near: list[NearDuplicatePair] = []
    accepted = 0
    for topic in sorted(by_topic):
        doc_ids = sorted(set(by_topic[topic]))
        accepted += len(by_topic[topic])
        groups: dict[str, list[str]] = {}
        for doc_id in doc_ids:
            groups.setdefault(texts[doc_id][:char_cap], []).append(doc_id)
        for text, members in sorted(groups.items(), key=lambda g: g[1][0]):
            if len(members) > 1:
                exact.append(
                    DuplicateCluster(
                        topic_id=topic,
                        doc_ids=tuple(members),
                        excerpt=text[:EXCERPT_CHARS],
                    )
                )
        uniques = sorted(groups.items(), key=lambda g: g[1][0])
        for i in range(len(uniques)):
            for j in range(i + 1, len(uniques)):
                text_a, members_a = uniques[i]
                text_b, members_b = uniques[j]
                longer = max(len(text_a), len(text_b))
                cap = max(_accept_cap(threshold, longer), 0)
                d = levenshtein(text_a, text_b, cap=cap)
                dist = d / longer
                if dist < threshold:
                    near.append(
                        NearDuplicatePair(
                            topic_id=topic,
                            doc_a=members_a[0],
                            doc_b=members_b[0],
                            distance=dist,
                            excerpt_a=text_a[:EXCERPT_CHARS],
                            excerpt_b=text_b[:EXCERPT_CHARS],
                        )
                    )
    return DuplicateReport(
        exact_clusters=tuple(exact), near_pairs=tuple(near), accepted_matches=accepted
    )


def render_duplicate_report(report: DuplicateReport) -> str:
    """Human-readable report with truncated exemplar excerpts."""
    lines = [
        f"accepted matches: {report.accepted_matches}",
        f"exact-duplicate clusters: {len(report.exact_clusters)} "
        f"(covering {report.exact_duplicate_docs} documents)",
        f"near-duplicate pairs: {len(report.near_pairs)}",
    ]
    for cluster in report.exact_clusters:
        lines.append("")
        lines.append(
            f"[exact] topic {cluster.topic_id}: {len(cluster.doc_ids)} copies: "
            + ", ".join(cluster.doc_ids)
        )
        lines.append(f"  excerpt: {cluster.excerpt}")
    for pair in report.near_pairs:
        lines.append("")
        lines.append(
            f"[near] topic {pair.topic_id}: {pair.doc_a} ~ {pair.doc_b} "
            f"(normalized distance {pair.distance:.4f})"
        )
        lines.append(f"  a: {pair.excerpt_a}")
        lines.append(f"  b: {pair.excerpt_b}")
    return "\n".join(lines) + "\n"
