"""Okapi BM25 inverted index, persistable and memory-mappable.

The analyzer lowercases and splits on runs of non-alphanumeric characters.
Postings are stored as flat numpy arrays indexed by a per-term offset table,
so a persisted index can be reopened with memory mapping and queried without
rebuilding.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, IndexFormatError

FORMAT_TAG = "cutoffprobe.bm25/1"
ANALYZER_TAG = "lowercase+alnum-runs"
K1_DEFAULT = 1.2
B_DEFAULT = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def analyze(text: str) -> list[str]:
    """Lowercase tokens split on any non-alphanumeric run."""
    return _TOKEN_RE.findall(text.lower())


class Bm25Index:
    """Inverted index over a fixed document set with Okapi BM25 scoring."""

    def __init__(
        self,
        doc_ids: Sequence[str],
        lengths: np.ndarray,
        terms: Sequence[str],
        offsets: Sequence[int],
        dfs: Sequence[int],
        postings_docs: np.ndarray,
        postings_tf: np.ndarray,
        k1: float = K1_DEFAULT,
        b: float = B_DEFAULT,
        metadata: Mapping[str, object] | None = None,
    ):
        self.doc_ids = list(doc_ids)
        self.lengths = lengths
        self.doc_count = len(self.doc_ids)
        self.avg_len = float(lengths.mean()) if self.doc_count else 0.0
        self.k1 = k1
        self.b = b
        self.metadata = dict(metadata or {})
        self._vocab = {t: (offsets[i], dfs[i]) for i, t in enumerate(terms)}
        self._postings_docs = postings_docs
        self._postings_tf = postings_tf
        # Per-document length normalization, precomputed once.
        self._norm = k1 * (1.0 - b + b * lengths.astype(np.float64) / self.avg_len)

    def idf(self, term: str) -> float:
        entry = self._vocab.get(term)
        if entry is None:
            return 0.0
        _, df = entry
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def postings_for(self, term: str) -> list[tuple[str, int]]:
        entry = self._vocab.get(term)
        if entry is None:
            return []
        off, df = entry
        docs = self._postings_docs[off : off + df]
        tfs = self._postings_tf[off : off + df]
        return [(self.doc_ids[d], int(tf)) for d, tf in zip(docs, tfs)]

    def scores(self, query: str) -> dict[str, float]:
        """BM25 score for every document containing at least one query term."""
        acc = np.zeros(self.doc_count, dtype=np.float64)
        touched = np.zeros(self.doc_count, dtype=bool)
        k1 = self.k1
        for term, qtf in Counter(analyze(query)).items():
            entry = self._vocab.get(term)
            if entry is None:
                continue
            off, df = entry
            idf = math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))
            docs = self._postings_docs[off : off + df]
            tfs = self._postings_tf[off : off + df].astype(np.float64)
            contrib = idf * (tfs * (k1 + 1.0)) / (tfs + self._norm[docs])
            acc[docs] += qtf * contrib
            touched[docs] = True
        return {self.doc_ids[i]: float(acc[i]) for i in np.nonzero(touched)[0]}

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        terms = sorted(self._vocab)
        manifest = {
            "format": FORMAT_TAG,
            "analyzer": ANALYZER_TAG,
            "k1": self.k1,
            "b": self.b,
            "doc_count": self.doc_count,
            "avg_len": self.avg_len,
            "metadata": self.metadata,
        }
        (directory / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        (directory / "docs.json").write_text(
            json.dumps(self.doc_ids, sort_keys=True) + "\n", encoding="utf-8"
        )
        vocab = {
            "terms": terms,
            "offsets": [int(self._vocab[t][0]) for t in terms],
            "dfs": [int(self._vocab[t][1]) for t in terms],
        }
        (directory / "vocab.json").write_text(json.dumps(vocab) + "\n", encoding="utf-8")
        np.save(directory / "lengths.npy", self.lengths)
        np.save(directory / "postings_docs.npy", self._postings_docs)
        np.save(directory / "postings_tf.npy", self._postings_tf)

    @classmethod
    def load(cls, directory: str | Path, mmap: bool = True) -> "Bm25Index":
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        if not manifest_path.exists():
            raise DataError(f"no index manifest at {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("format") != FORMAT_TAG:
            raise IndexFormatError(
                f"index at {directory} has format {manifest.get('format')!r}, "
                f"expected {FORMAT_TAG!r}"
            )
        doc_ids = json.loads((directory / "docs.json").read_text(encoding="utf-8"))
        vocab = json.loads((directory / "vocab.json").read_text(encoding="utf-8"))
        mode = "r" if mmap else None
        return cls(
            doc_ids=doc_ids,
            lengths=np.load(directory / "lengths.npy", mmap_mode=mode),
            terms=vocab["terms"],
            offsets=vocab["offsets"],
            dfs=vocab["dfs"],
            postings_docs=np.load(directory / "postings_docs.npy", mmap_mode=mode),
            postings_tf=np.load(directory / "postings_tf.npy", mmap_mode=mode),
            k1=manifest["k1"],
            b=manifest["b"],
            metadata=manifest.get("metadata", {}),
        )


def build_index(
    docs: Iterable[tuple[str, str]],
    k1: float = K1_DEFAULT,
    b: float = B_DEFAULT,
    jobs: int = 1,
    metadata: Mapping[str, object] | None = None,
) -> Bm25Index:
    """Index (doc_id, text) pairs. Doc ids must be unique; corpus non-empty."""
    pairs = list(docs)
    if not pairs:
        raise DataError("cannot index an empty corpus")
    seen: set[str] = set()
    for doc_id, _ in pairs:
        if doc_id in seen:
            raise DataError(f"duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
    # Doc indices follow sorted doc_id order, which keeps every postings
    # list sorted by doc_id for free.
    pairs.sort(key=lambda p: p[0])
    texts = [text for _, text in pairs]
    if jobs > 1 and len(texts) > 1:
        shard = max(1, len(texts) // jobs)
        chunks = [texts[i : i + shard] for i in range(0, len(texts), shard)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            token_lists = [
                toks for chunk in pool.map(lambda c: [analyze(t) for t in c], chunks)
                for toks in chunk
            ]
    else:
        token_lists = [analyze(t) for t in texts]

    lengths = np.array([len(toks) for toks in token_lists], dtype=np.int64)
    by_term: dict[str, list[tuple[int, int]]] = {}
    for doc_idx, toks in enumerate(token_lists):
        for term, tf in Counter(toks).items():
            by_term.setdefault(term, []).append((doc_idx, tf))

    terms = sorted(by_term)
    offsets: list[int] = []
    dfs: list[int] = []
    docs_flat: list[int] = []
    tf_flat: list[int] = []
    cursor = 0
    for term in terms:
        plist = by_term[term]
        offsets.append(cursor)
        dfs.append(len(plist))
        cursor += len(plist)
        for doc_idx, tf in plist:
            docs_flat.append(doc_idx)
            tf_flat.append(tf)

    return Bm25Index(
        doc_ids=[doc_id for doc_id, _ in pairs],
        lengths=lengths,
        terms=terms,
        offsets=offsets,
        dfs=dfs,
        postings_docs=np.array(docs_flat, dtype=np.int64),
        postings_tf=np.array(tf_flat, dtype=np.int32),
        k1=k1,
        b=b,
        metadata=metadata,
    )


def search(index: Bm25Index, query: str, k: int = 10) -> list[tuple[str, float]]:
    """Top-k documents by BM25 score, ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scored = index.scores(query)
    ranked = sorted(scored.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]
