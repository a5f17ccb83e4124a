"""Token-logprob providers and perplexity over document prefixes.

A provider scores a text prefix and returns per-token natural-log
conditional probabilities. Three implementations ship here: a replay reader
for canned scores, an HTTP client for a scoring service, and an add-alpha
count model that stands in for a neural model at desk scale. Measurement
runs are resumable through an append-only on-disk cache.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import NamedTuple, Protocol, Sequence

import requests

from .corpus import BucketedStream, TimeSpanCorpus
from .cutoff import PerplexitySeries
from .errors import DataError, ProviderError
from .months import MonthStamp

UNK = "<unk>"

_log = logging.getLogger(__name__)


class TokenScore(NamedTuple):
    token_text: str
    logprob: float


class ScoredDoc(NamedTuple):
    doc_key: str
    scores: tuple[TokenScore, ...]


class Provider(Protocol):
    """Scores a text prefix; deterministic for fixed (text, max_tokens)."""

    name: str

    def score(self, text: str, max_tokens: int) -> ScoredDoc: ...


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def perplexity(scored: ScoredDoc) -> float:
    """exp of the negative mean logprob over all returned scores."""
    if not scored.scores:
        raise ValueError(f"no token scores for {scored.doc_key!r}")
    total = math.fsum(s.logprob for s in scored.scores)
    if not math.isfinite(total):
        raise ValueError(f"non-finite logprobs for {scored.doc_key!r}")
    return math.exp(-total / len(scored.scores))


class CountLmProvider:
    """Order-n count model with add-alpha smoothing over lowercase whitespace tokens.

    Only positions with a full (n-1)-token context are scored, so a text of
    N tokens yields N - (n-1) scores. Tokens outside the training vocabulary
    are mapped to an unknown symbol; smoothing keeps every conditional
    probability finite.
    """

    def __init__(self, docs: Sequence[str], n: int, alpha: float):
        if n < 1:
            raise ValueError(f"model order must be >= 1, got {n}")
        if alpha <= 0:
            raise ValueError(f"smoothing alpha must be > 0, got {alpha}")
        self.n = n
        self.alpha = alpha
        self._ngram_counts: dict[tuple[str, ...], int] = {}
        self._context_counts: dict[tuple[str, ...], int] = {}
        vocab: set[str] = set()
        trained = False
        hasher = hashlib.sha256()
        for doc in docs:
            tokens = doc.lower().split()
            hasher.update("\x1f".join(tokens).encode("utf-8") + b"\x1e")
            vocab.update(tokens)
            if tokens:
                trained = True
            for i in range(n - 1, len(tokens)):
                gram = tuple(tokens[i - n + 1 : i + 1])
                self._ngram_counts[gram] = self._ngram_counts.get(gram, 0) + 1
                ctx = gram[:-1]
                self._context_counts[ctx] = self._context_counts.get(ctx, 0) + 1
        if not trained:
            raise DataError("count model needs a non-empty training set")
        self._vocab = vocab
        self.vocab_size = len(vocab) + 1  # training vocabulary plus <unk>
        self.name = f"countlm:n={n}:alpha={alpha:g}:{hasher.hexdigest()[:12]}"

    def score(self, text: str, max_tokens: int) -> ScoredDoc:
        if max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
        raw = text.lower().split()[:max_tokens]
        vocab = self._vocab
        ids = [t if t in vocab else UNK for t in raw]
        n = self.n
        alpha = self.alpha
        denom_base = alpha * self.vocab_size
        ngram_get = self._ngram_counts.get
        ctx_get = self._context_counts.get
        log = math.log
        scores = []
        for i in range(n - 1, len(ids)):
            gram = tuple(ids[i - n + 1 : i + 1])
            num = ngram_get(gram, 0) + alpha
            den = ctx_get(gram[:-1], 0) + denom_base
            scores.append(TokenScore(raw[i], log(num / den)))
        return ScoredDoc(doc_key=text_digest(text), scores=tuple(scores))


def count_lm_train(docs: Sequence[str], n: int, alpha: float) -> CountLmProvider:
    """Train the desk-scale count-model provider on raw document strings."""
    return CountLmProvider(docs, n, alpha)


def _key_digest(doc_key: str) -> str:
    """Content-digest component of a replay/cache record key."""
    return doc_key.rsplit("|", 1)[-1]


def _parse_replay_line(line: str, where: str) -> tuple[str, ScoredDoc]:
    try:
        rec = json.loads(line)
        doc_key = rec["doc_key"]
        tokens = rec["tokens"]
        logprobs = rec["logprobs"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{where}: malformed replay record: {exc}") from exc
    if len(tokens) != len(logprobs):
        raise DataError(f"{where}: tokens and logprobs length mismatch")
    scores = tuple(TokenScore(t, float(lp)) for t, lp in zip(tokens, logprobs))
    for s in scores:
        if not math.isfinite(s.logprob):
            raise DataError(f"{where}: non-finite logprob for {doc_key!r}")
    return doc_key, ScoredDoc(doc_key=doc_key, scores=scores)


class ReplayProvider:
    """Serves previously recorded scores; bit-identical across runs.

    Records are matched to requests by the sha256 digest of the text. Keys
    written by the score cache carry a provider/max_tokens prefix; only
    their trailing digest component is used for lookup, last record wins.
    """

    name = "replay"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._by_digest: dict[str, ScoredDoc] = {}
        try:
            lines = self.path.read_text(encoding="utf-8").split("\n")
        except OSError as exc:
            raise DataError(f"cannot read replay file {self.path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            doc_key, scored = _parse_replay_line(line, f"{self.path}:{lineno}")
            self._by_digest[_key_digest(doc_key)] = scored

    def score(self, text: str, max_tokens: int) -> ScoredDoc:
        digest = text_digest(text)
        scored = self._by_digest.get(digest)
        if scored is None:
            raise ProviderError(f"replay file {self.path} has no record for text {digest[:12]}…")
        return ScoredDoc(doc_key=digest, scores=scored.scores[:max_tokens])


class HttpProvider:
    """Client for the POST {base}/v1/logprobs scoring protocol.

    The response carries the tokenized prefix and one natural-log conditional
    probability per scoreable position; when the service cannot score leading
    tokens, the logprobs align with the tail of the token list.
    """

    def __init__(self, base_url: str, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.name = f"http:{self.base_url}"
        self._fixed_session = session
        self._local = threading.local()

    def _session(self):
        # Sessions are not guaranteed thread-safe; score() must tolerate
        # concurrent calls, so each worker thread gets its own.
        if self._fixed_session is not None:
            return self._fixed_session
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def score(self, text: str, max_tokens: int) -> ScoredDoc:
        try:
            resp = self._session().post(
                f"{self.base_url}/v1/logprobs",
                json={"text": text, "max_tokens": max_tokens},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(f"scoring request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(
                f"scoring service returned {resp.status_code}: {resp.text[:200]}"
            )
        try:
            body = resp.json()
            tokens = body["tokens"]
            logprobs = [float(x) for x in body["logprobs"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"malformed scoring response: {exc}") from exc
        if len(logprobs) > len(tokens):
            raise ProviderError("scoring response has more logprobs than tokens")
        for lp in logprobs:
            if not math.isfinite(lp):
                raise ProviderError("scoring response contains non-finite logprobs")
        scored_tokens = tokens[len(tokens) - len(logprobs) :]
        scores = tuple(TokenScore(t, lp) for t, lp in zip(scored_tokens, logprobs))
        return ScoredDoc(doc_key=text_digest(text), scores=scores[:max_tokens])


class ScoreCache:
    """Append-only score store so interrupted runs resume without rescoring.

    Entries are keyed by (provider name, max_tokens, text digest) and stored
    one JSON record per line in the replay wire format.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, ScoredDoc] = {}
        if self.path.exists():
            for lineno, line in enumerate(
                self.path.read_text(encoding="utf-8").split("\n"), start=1
            ):
                if not line.strip():
                    continue
                doc_key, scored = _parse_replay_line(line, f"{self.path}:{lineno}")
                self._entries[doc_key] = scored

    @staticmethod
    def _key(provider_name: str, max_tokens: int, text: str) -> str:
        return f"{provider_name}|{max_tokens}|{text_digest(text)}"

    def get(self, provider_name: str, max_tokens: int, text: str) -> ScoredDoc | None:
        return self._entries.get(self._key(provider_name, max_tokens, text))

    def put(self, provider_name: str, max_tokens: int, text: str, scored: ScoredDoc) -> None:
        key = self._key(provider_name, max_tokens, text)
        record = {
            "doc_key": key,
            "tokens": [s.token_text for s in scored.scores],
            "logprobs": [s.logprob for s in scored.scores],
        }
        line = json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            if key in self._entries:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
            self._entries[key] = ScoredDoc(doc_key=key, scores=scored.scores)


class _WorkItem(NamedTuple):
    doc_key: str
    month: MonthStamp
    text: str


def _corpus_items(corpus: TimeSpanCorpus | BucketedStream) -> list[_WorkItem]:
    items: list[_WorkItem] = []
    if isinstance(corpus, TimeSpanCorpus):
        for doc in corpus:
            items.append(_WorkItem(f"{doc.topic_id}@{doc.month}", doc.month, doc.text))
    elif isinstance(corpus, BucketedStream):
        for month in corpus.months:
            for doc in corpus.buckets[month]:
                items.append(_WorkItem(doc.doc_id, month, doc.text))
    else:
        raise TypeError(f"unsupported corpus type: {type(corpus).__name__}")
    return items


def score_corpus(
    provider: Provider,
    corpus: TimeSpanCorpus | BucketedStream,
    max_tokens: int,
    cache: ScoreCache | None = None,
    jobs: int = 8,
    retries: int = 3,
    backoff: float = 0.5,
    missing_threshold: float = 0.5,
) -> PerplexitySeries:
    """One perplexity per (document, month) under the given provider.

    Documents that still fail after `retries` attempts are recorded as
    missing rather than zero; a month losing more than `missing_threshold`
    of its documents aborts the run with a diagnostic.
    """
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
    items = _corpus_items(corpus)

    def score_one(item: _WorkItem) -> tuple[_WorkItem, float | None]:
        if cache is not None:
            hit = cache.get(provider.name, max_tokens, item.text)
            if hit is not None:
                return item, _safe_perplexity(hit)
        last_error: Exception | None = None
        for attempt in range(retries):
            try:
                scored = provider.score(item.text, max_tokens)
            except Exception as exc:  # noqa: BLE001 - provider faults become missing docs
                last_error = exc
                if attempt + 1 < retries and backoff > 0:
                    time.sleep(min(backoff * 2**attempt, 8.0))
                continue
            if cache is not None:
                cache.put(provider.name, max_tokens, item.text, scored)
            return item, _safe_perplexity(scored)
        _log.warning("document %s failed after %d attempts: %s", item.doc_key, retries, last_error)
        return item, None

    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(score_one, items))
    else:
        results = [score_one(item) for item in items]

    by_month: dict[MonthStamp, list[tuple[str, float]]] = {}
    missing: dict[MonthStamp, int] = {}
    totals: dict[MonthStamp, int] = {}
    for item, ppl in results:
        totals[item.month] = totals.get(item.month, 0) + 1
        if ppl is None:
            missing[item.month] = missing.get(item.month, 0) + 1
        else:
            by_month.setdefault(item.month, []).append((item.doc_key, ppl))

    for month in sorted(totals):
        lost = missing.get(month, 0)
        if lost > missing_threshold * totals[month]:
            raise ProviderError(
                f"month {month}: {lost}/{totals[month]} documents failed to score; "
                f"aborting (threshold {missing_threshold:.0%})"
            )

    months = tuple(sorted(by_month))
    measurements = {m: tuple(sorted(by_month[m])) for m in months}
    return PerplexitySeries(months=months, measurements=measurements)


def _safe_perplexity(scored: ScoredDoc) -> float | None:
    try:
        return perplexity(scored)
    except ValueError:
        return None
