"""Fetch monthly article revisions through the MediaWiki Action API.

For each title and month, the revision in force at 00:00 UTC on the first
of the month becomes that month's version. Titles that lack a revision for
any month in the span (pages created mid-span) are dropped with a warning
so the complete-grid invariant holds.
"""

from __future__ import annotations

import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import requests

from .corpus import TimeSpanCorpus, VersionedDoc
from .errors import ProviderError
from .months import MonthStamp, month_range

DEFAULT_ENDPOINT = "https://en.wikipedia.org/w/api.php"
USER_AGENT = "cutoffprobe/0.1 (versioned-corpus fetcher)"

_log = logging.getLogger(__name__)


class WikiApiError(ProviderError):
    """The API answered with an error payload; surfaced verbatim."""


def default_cleaner(wikitext: str) -> str:
    """Strip common wikitext markup down to plain-ish text.

    Removes templates, reference tags, comments, and file links; unwraps
    wiki links and external links; drops bold/italic quoting. Not a full
    parser, just enough for perplexity probing.
    """
    text = re.sub(r"<!--.*?-->", "", wikitext, flags=re.DOTALL)
    text = re.sub(r"<ref[^>/]*/>", "", text)
    text = re.sub(r"<ref[^>]*>.*?</ref>", "", text, flags=re.DOTALL)
    # Innermost-first so nested templates unwind.
    while True:
        text, n = re.subn(r"\{\{[^{}]*\}\}", "", text)
        if n == 0:
            break
    text = re.sub(r"\[\[(?:[Ff]ile|[Ii]mage|[Cc]ategory):[^\[\]]*\]\]", "", text)
    text = re.sub(r"\[\[[^\[\]|]*\|([^\[\]]*)\]\]", r"\1", text)
    text = re.sub(r"\[\[([^\[\]]*)\]\]", r"\1", text)
    text = re.sub(r"\[\S+ ([^\]]*)\]", r"\1", text)
    text = re.sub(r"'{2,}", "", text)
    text = re.sub(r"<[^>]+>", "", text)
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip()


def _month_boundary(month: MonthStamp) -> str:
    return f"{month.year:04d}-{month.month:02d}-01T00:00:00Z"


def fetch_wiki_revisions(
    titles: Sequence[str],
    span: tuple[MonthStamp, MonthStamp],
    endpoint: str = DEFAULT_ENDPOINT,
    cleaner: Callable[[str], str] = default_cleaner,
    session: requests.Session | None = None,
    retries: int = 3,
    backoff: float = 0.5,
    jobs: int = 4,
    timeout: float = 30.0,
) -> TimeSpanCorpus:
    """Build a versioned corpus from live revision history.

    Network and HTTP failures are retried with capped exponential backoff
    and then fail the title; failed or incomplete titles are dropped with a
    warning. An explicit API error payload raises :class:`WikiApiError`.
    """
    months = month_range(*span)
    session = session or requests.Session()
    session.headers.setdefault("User-Agent", USER_AGENT)

    def fetch_title(title: str) -> list[VersionedDoc] | None:
        docs = []
        for month in months:
            try:
                wikitext = _revision_before(
                    session, endpoint, title, month, retries, backoff, timeout
                )
            except WikiApiError:
                raise
            except ProviderError as exc:
                _log.warning("dropping title %r: %s", title, exc)
                return None
            if wikitext is None:
                _log.warning(
                    "dropping title %r: no revision at or before %s", title, month
                )
                return None
            text = cleaner(wikitext)
            if not text:
                _log.warning("dropping title %r: empty text after cleaning at %s", title, month)
                return None
            docs.append(VersionedDoc(topic_id=title, month=month, text=text))
        return docs

    if jobs > 1 and len(titles) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_title = list(pool.map(fetch_title, titles))
    else:
        per_title = [fetch_title(t) for t in titles]

    versions = {}
    for docs in per_title:
        if docs is None:
            continue
        for doc in docs:
            versions[(doc.topic_id, doc.month)] = doc
    return TimeSpanCorpus(versions, span=span)


def _revision_before(
    session: requests.Session,
    endpoint: str,
    title: str,
    month: MonthStamp,
    retries: int,
    backoff: float,
    timeout: float,
) -> str | None:
    """Wikitext of the latest revision at or before the month boundary."""
    params = {
        "action": "query",
        "format": "json",
        "prop": "revisions",
        "titles": title,
        "rvlimit": 1,
        "rvdir": "older",
        "rvstart": _month_boundary(month),
        "rvprop": "timestamp|content",
        "rvslots": "main",
    }
    last_error: Exception | None = None
    for attempt in range(retries):
        try:
            resp = session.get(endpoint, params=params, timeout=timeout)
            resp.raise_for_status()
            data = resp.json()
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
            if attempt + 1 < retries and backoff > 0:
                time.sleep(min(backoff * 2**attempt, 8.0))
            continue
        if "error" in data:
            raise WikiApiError(f"API error for {title!r}: {data['error']}")
        pages = data.get("query", {}).get("pages", {})
        for page in pages.values():
            revisions = page.get("revisions")
            if not revisions:
                return None
            rev = revisions[0]
            slot = rev.get("slots", {}).get("main", {})
            content = slot.get("*", rev.get("*"))
            if content is None:
                return None
            return content
        return None
    raise ProviderError(f"revision fetch failed after {retries} attempts: {last_error}")
