import json
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutoffprobe import (
    MonthStamp,
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
from cutoffprobe.errors import DataError


def write_records(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def records_for_grid(topics, months):
    return [
        {"topic_id": t, "month": m, "text": f"{t} in {m}"} for t in topics for m in months
    ]


class TestLoadTimespan:
    def test_minimal_complete_grid(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_records(path, records_for_grid(["a", "b"], ["2019-01", "2019-02", "2019-03"]))
        corpus = load_timespan(path)
        assert corpus.topics == {"a", "b"}
        assert len(corpus.months) == 3
        assert corpus.span == (MonthStamp(2019, 1), MonthStamp(2019, 3))
        assert corpus.version("a", MonthStamp(2019, 2)).text == "a in 2019-02"

    def test_grid_hole_names_topic_and_month(self, tmp_path):
        records = records_for_grid(["a", "b"], ["2019-01", "2019-02", "2019-03"])
        records = [r for r in records if not (r["topic_id"] == "b" and r["month"] == "2019-02")]
        path = tmp_path / "c.jsonl"
        write_records(path, records)
        with pytest.raises(DataError, match="'b'.*2019-02"):
            load_timespan(path)

    def test_month_out_of_range_is_parse_error(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_records(path, [{"topic_id": "a", "month": "2016-13", "text": "x"}])
        with pytest.raises(DataError, match=":1:"):
            load_timespan(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        good = json.dumps({"topic_id": "a", "month": "2019-01", "text": "x"})
        path.write_text(good + "\nnot json\n", encoding="utf-8")
        with pytest.raises(DataError, match=":2:"):
            load_timespan(path)

    def test_duplicate_topic_month(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = {"topic_id": "a", "month": "2019-01", "text": "x"}
        write_records(path, [rec, rec])
        with pytest.raises(DataError, match="duplicate"):
            load_timespan(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError, match="no records"):
            load_timespan(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_timespan(tmp_path / "absent.jsonl")

    def test_leading_metadata_record_is_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        lines = [json.dumps({"metadata": {"tool": "x"}})] + [
            json.dumps(r) for r in records_for_grid(["a"], ["2019-01"])
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        assert load_timespan(path).topics == {"a"}


topic_ids = st.text(alphabet="abcdefgh", min_size=1, max_size=4)
texts = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
).filter(lambda s: s.strip())


@given(
    topics=st.sets(topic_ids, min_size=1, max_size=4),
    start=st.builds(
        MonthStamp, st.integers(min_value=2000, max_value=2030), st.integers(min_value=1, max_value=12)
    ),
    n_months=st.integers(min_value=1, max_value=5),
    data=st.data(),
)
def test_save_load_round_trip(tmp_path_factory, topics, start, n_months, data):
    docs = []
    for t in sorted(topics):
        for i in range(n_months):
            docs.append(VersionedDoc(t, start.plus(i), data.draw(texts)))
    corpus = TimeSpanCorpus.from_docs(docs)
    path = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_timespan(corpus, path)
    loaded = load_timespan(path)
    assert loaded.span == corpus.span
    assert loaded.topics == corpus.topics
    assert {(d.topic_id, d.month, d.text) for d in loaded} == {
        (d.topic_id, d.month, d.text) for d in corpus
    }


class TestBucketStream:
    def docs_in(self, month, count, prefix="d"):
        return [
            StreamDoc(f"{prefix}{i}", date(month.year, month.month, 1 + i % 28), f"text {i}")
            for i in range(count)
        ]

    def test_oversized_bucket_downsampled_exactly(self):
        docs = self.docs_in(MonthStamp(2019, 4), 10)
        out = bucket_stream(docs, target=5, seed=11)
        (month,) = out.buckets
        assert month == MonthStamp(2019, 4)
        assert len(out.buckets[month]) == 5
        assert len({d.doc_id for d in out.buckets[month]}) == 5

    def test_under_target_passthrough(self):
        docs = [
            StreamDoc("a", date(2019, 1, 5), "x"),
            StreamDoc("b", date(2019, 2, 5), "y"),
            StreamDoc("c", date(2019, 3, 5), "z"),
        ]
        out = bucket_stream(docs, target=500, seed=0)
        assert [len(out.buckets[m]) for m in out.months] == [1, 1, 1]

    def test_deterministic_for_fixed_seed(self):
        docs = self.docs_in(MonthStamp(2019, 4), 30)
        a = bucket_stream(docs, target=7, seed=3)
        b = bucket_stream(docs, target=7, seed=3)
        assert a == b

    def test_docs_land_in_their_published_month(self):
        docs = self.docs_in(MonthStamp(2019, 4), 3) + [
            StreamDoc("x9", date(2020, 7, 2), "later")
        ]
        out = bucket_stream(docs, target=100, seed=0)
        assert {d.doc_id for d in out.buckets[MonthStamp(2020, 7)]} == {"x9"}

    @given(seed=st.integers(min_value=0, max_value=2**31), perm=st.randoms())
    def test_permutation_invariant(self, seed, perm):
        docs = self.docs_in(MonthStamp(2019, 4), 12) + self.docs_in(
            MonthStamp(2019, 6), 4, prefix="e"
        )
        shuffled = list(docs)
        perm.shuffle(shuffled)
        assert bucket_stream(docs, 6, seed) == bucket_stream(shuffled, 6, seed)

    def test_empty_input(self):
        assert bucket_stream([], target=5, seed=0).buckets == {}


class TestStreamIO:
    def test_round_trip(self, tmp_path):
        docs = [
            StreamDoc("a", date(2019, 1, 5), "x", source_url="http://e.com/a"),
            StreamDoc("b", date(2019, 2, 5), "y"),
        ]
        path = tmp_path / "s.jsonl"
        save_stream(docs, path)
        assert load_stream(path) == docs

    def test_duplicate_doc_id(self, tmp_path):
        path = tmp_path / "s.jsonl"
        rec = {"doc_id": "a", "published": "2019-01-05", "text": "x"}
        write_records(path, [rec, rec])
        with pytest.raises(DataError, match="duplicate"):
            load_stream(path)

    def test_bad_date(self, tmp_path):
        path = tmp_path / "s.jsonl"
        write_records(path, [{"doc_id": "a", "published": "2019-13-05", "text": "x"}])
        with pytest.raises(DataError, match=":1:"):
            load_stream(path)


class TestWordPrefix:
    def test_basic(self):
        assert word_prefix("a b c", 2) == "a b"

    def test_under_length(self):
        assert word_prefix("a b c", 10) == "a b c"

    def test_any_whitespace_run_delimits(self):
        assert word_prefix("a\t\tb\nc   d", 3) == "a b c"

    def test_requires_positive_n(self):
        with pytest.raises(ValueError):
            word_prefix("a", 0)

    @given(st.text(max_size=200), st.integers(min_value=1, max_value=30))
    def test_never_longer_than_n_words(self, text, n):
        assert len(word_prefix(text, n).split()) <= n
