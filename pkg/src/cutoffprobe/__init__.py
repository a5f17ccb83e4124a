"""cutoffprobe: effective knowledge-cutoff estimation and version attribution.

Probes a language model's alignment to a versioned resource by measuring
perplexity across monthly versions, and attributes documents in training
corpora to their closest resource version by BM25 retrieval plus
edit-distance or discounted n-gram matching.
"""

__version__ = "0.1.0"

from .corpus import (
    BucketedStream,
    StreamDoc,
    TimeSpanCorpus,
    VersionedDoc,
    bucket_stream,
    load_stream,
    load_timespan,
    save_stream,
    save_timespan,
    word_prefix,
)
from .cutoff import (
    CutoffEstimate,
    PerplexitySeries,
    RelativeCurve,
    estimate_cutoff,
    relative_curve,
    subsample_curves,
    trimmed_mean,
)
from .editdist import levenshtein, normalized_edit
from .bm25 import Bm25Index, build_index, search
from .mining import (
    MatchRecord,
    NgramTables,
    VersionHistogram,
    attribute_ngrams,
    attribute_versions,
    build_ngram_tables,
    duplicate_report,
    histogram_from_records,
)
from .months import MonthStamp, month_range
from .scoring import (
    CountLmProvider,
    HttpProvider,
    Provider,
    ReplayProvider,
    ScoreCache,
    ScoredDoc,
    TokenScore,
    count_lm_train,
    perplexity,
    score_corpus,
)
from .synth import (
    AttributionMetrics,
    DriftSpec,
    DumpDoc,
    DumpSpec,
    evaluate_attribution,
    generate_corpus,
    generate_dump,
    month_at,
)
from .wiki import fetch_wiki_revisions

__all__ = [
    "AttributionMetrics",
    "Bm25Index",
    "BucketedStream",
    "CountLmProvider",
    "CutoffEstimate",
    "DriftSpec",
    "DumpDoc",
    "DumpSpec",
    "HttpProvider",
    "MatchRecord",
    "MonthStamp",
    "NgramTables",
    "PerplexitySeries",
    "Provider",
    "RelativeCurve",
    "ReplayProvider",
    "ScoreCache",
    "ScoredDoc",
    "StreamDoc",
    "TimeSpanCorpus",
    "TokenScore",
    "VersionHistogram",
    "VersionedDoc",
    "attribute_ngrams",
    "attribute_versions",
    "bucket_stream",
    "build_index",
    "build_ngram_tables",
    "count_lm_train",
    "duplicate_report",
    "estimate_cutoff",
    "evaluate_attribution",
    "fetch_wiki_revisions",
    "generate_corpus",
    "generate_dump",
    "histogram_from_records",
    "levenshtein",
    "load_stream",
    "load_timespan",
    "month_at",
    "month_range",
    "normalized_edit",
    "perplexity",
    "relative_curve",
    "save_stream",
    "save_timespan",
    "score_corpus",
    "search",
    "subsample_curves",
    "trimmed_mean",
    "word_prefix",
]
