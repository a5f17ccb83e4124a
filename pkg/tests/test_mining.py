from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutoffprobe import (
    DriftSpec,
    DumpSpec,
    MatchRecord,
    MonthStamp,
    attribute_ngrams,
    attribute_versions,
    build_index,
    build_ngram_tables,
    duplicate_report,
    generate_corpus,
    generate_dump,
    histogram_from_records,
    month_at,
)
from cutoffprobe.errors import DataError
from cutoffprobe.mining import render_duplicate_report
from conftest import make_corpus
from oracles import ngram_credit_bruteforce

M = MonthStamp.parse


def dump_index(dump):
    texts = {d.doc_id: d.text for d in dump}
    return build_index(texts.items()), texts


class TestAttributeVersions:
    def test_exact_copies_concentrate_on_their_month(self):
        corpus = generate_corpus(
            DriftSpec(topics=8, months=8, tokens_per_doc=80, drift_rate=0.1, vocab_size=300, seed=1)
        )
        dump = generate_dump(corpus, DumpSpec(mixture={month_at(6): 1.0}, docs=50, seed=2))
        index, texts = dump_index(dump)
        hist, records = attribute_versions(index, texts, corpus, month_at(8))
        assert hist.total_matches > 0
        assert set(hist.counts) == {month_at(6)}
        assert sum(hist.counts.values()) == hist.total_matches

    def test_equidistant_minimum_splits_credit(self):
        shared = " ".join(f"common{i:02d}" for i in range(40))
        corpus = make_corpus(
            {
                ("t", "2019-01"): " ".join(f"other{i}" for i in range(40)),
                ("t", "2019-02"): " ".join(f"more{i}" for i in range(40)),
                ("t", "2019-03"): shared + " bbbb",
                ("t", "2019-04"): shared + " cccc",
            }
        )
        matched = shared + " dddd"
        index = build_index([("m0", matched)])
        hist, records = attribute_versions(index, {"m0": matched}, corpus, M("2019-04"))
        (rec,) = records
        assert rec.accepted
        assert rec.min_months == (M("2019-03"), M("2019-04"))
        assert hist.counts[M("2019-03")] == Fraction(1, 2)
        assert hist.counts[M("2019-04")] == Fraction(1, 2)
        assert sum(hist.counts.values()) == 1

    def test_unrelated_dump_rejected_entirely(self, tiny_corpus):
        strangers = [(f"s{i}", f"completely unrelated words {i} " * 30) for i in range(4)]
        index = build_index(strangers)
        hist, records = attribute_versions(index, dict(strangers), tiny_corpus, M("2019-03"))
        assert hist.total_matches == 0
        assert hist.counts == {}
        assert all(not r.accepted for r in records)

    def test_rejected_records_are_kept_and_flagged(self):
        corpus = generate_corpus(
            DriftSpec(topics=3, months=4, tokens_per_doc=60, drift_rate=0.2, vocab_size=200, seed=3)
        )
        dump = generate_dump(corpus, DumpSpec(mixture={month_at(2): 1.0}, docs=10, seed=4))
        noise = [(f"n{i}", f"noise w{i} " + " ".join(f"x{j}" for j in range(50))) for i in range(3)]
        index, texts = dump_index(dump)
        index = build_index(list(texts.items()) + noise)
        texts.update(dict(noise))
        hist, records = attribute_versions(index, texts, corpus, month_at(4))
        assert any(r.accepted for r in records)
        assert hist.total_matches == sum(r.accepted for r in records)

    def test_zero_threshold_keeps_only_byte_identical(self):
        corpus = make_corpus(
            {
                ("t", "2019-01"): "one two three four five six",
                ("t", "2019-02"): "one two three four five seven",
            }
        )
        exact = "one two three four five six"
        close = "one two three four five sixx"
        index = build_index([("e", exact), ("c", close)])
        hist, records = attribute_versions(
            index, {"e": exact, "c": close}, corpus, M("2019-02"), threshold=0.0
        )
        by_id = {r.doc_id: r for r in records}
        assert by_id["e"].accepted
        assert not by_id["c"].accepted
        assert hist.counts == {M("2019-01"): Fraction(1)}

    def test_query_month_outside_span_rejected(self, tiny_corpus):
        index = build_index([("d", "whatever")])
        with pytest.raises(DataError, match="outside"):
            attribute_versions(index, {"d": "whatever"}, tiny_corpus, M("2022-01"))

    def test_min_dist_is_minimum_of_dists(self):
        corpus = generate_corpus(
            DriftSpec(topics=2, months=5, tokens_per_doc=50, drift_rate=0.1, vocab_size=100, seed=7)
        )
        dump = generate_dump(corpus, DumpSpec(mixture={month_at(3): 1.0}, docs=8, seed=8))
        index, texts = dump_index(dump)
        _, records = attribute_versions(index, texts, corpus, month_at(5))
        for rec in records:
            assert rec.min_dist == min(rec.dists.values())
            assert all(rec.dists[m] == rec.min_dist for m in rec.min_months)


months_strat = st.builds(
    MonthStamp, st.integers(min_value=2016, max_value=2020), st.integers(min_value=1, max_value=12)
)


@st.composite
def fuzzed_records(draw):
    n = draw(st.integers(min_value=0, max_value=25))
    records = []
    for i in range(n):
        accepted = draw(st.booleans())
        ties = draw(st.sets(months_strat, min_size=1, max_size=6))
        records.append(
            MatchRecord(
                topic_id=f"t{i}",
                doc_id=f"d{i}",
                bm25_score=1.0,
                dists={m: 0.1 for m in ties},
                min_dist=0.1,
                min_months=tuple(sorted(ties)),
                accepted=accepted,
            )
        )
    return records


@given(fuzzed_records())
def test_histogram_credit_conserved_exactly(records):
    hist = histogram_from_records(records)
    accepted = sum(1 for r in records if r.accepted)
    assert hist.total_matches == accepted
    assert sum(hist.counts.values(), Fraction(0)) == accepted


class TestNgramTables:
    def test_identical_versions_make_everything_common(self):
        text = "alpha beta gamma delta epsilon zeta eta theta"
        corpus = make_corpus(
            {(t, m): text for t in ("a", "b") for m in ("2019-01", "2019-02", "2019-03")}
        )
        tables = build_ngram_tables(corpus, n=3)
        for month in corpus.months:
            assert tables.per_month[month] == tables.common
        assert attribute_ngrams(tables, text) == {}

    def test_gram_absent_from_one_month_is_not_common(self):
        corpus = make_corpus(
            {
                ("t", "2019-01"): "x y z",
                ("t", "2019-02"): "x y z",
                ("t", "2019-03"): "x y w",
            }
        )
        tables = build_ngram_tables(corpus, n=3)
        assert ("x", "y", "z") not in tables.common
        assert tables.per_month[M("2019-01")][("x", "y", "z")] == 1

    def test_common_bounded_by_every_month(self):
        corpus = generate_corpus(
            DriftSpec(topics=4, months=5, tokens_per_doc=40, drift_rate=0.15, vocab_size=50, seed=5)
        )
        tables = build_ngram_tables(corpus, n=2)
        for gram, c in tables.common.items():
            assert all(tables.per_month[m][gram] >= c for m in corpus.months)

    def test_tables_match_bruteforce_counts(self):
        corpus = make_corpus(
            {
                ("a", "2019-01"): "p q r p q",
                ("a", "2019-02"): "p q r r q",
                ("b", "2019-01"): "p q p q",
                ("b", "2019-02"): "z z p q",
            }
        )
        tables = build_ngram_tables(corpus, n=2)
        # 2019-01: "p q r p q" has (p,q) twice, "p q p q" twice more.
        assert tables.per_month[M("2019-01")][("p", "q")] == 4
        assert tables.per_month[M("2019-02")][("p", "q")] == 2
        assert tables.common[("p", "q")] == 2


class TestAttributeNgrams:
    def test_disjoint_support_concentrates_credit(self):
        corpus = make_corpus(
            {
                ("t", "2019-01"): "a b c d e",
                ("t", "2019-02"): "f g h i j",
                ("t", "2019-03"): "k l m n o",
            }
        )
        tables = build_ngram_tables(corpus, n=2)
        credit = attribute_ngrams(tables, "f g h")
        assert set(credit) == {M("2019-02")}
        assert credit[M("2019-02")] == 2  # (f,g) and (g,h), count 1 each, common 0

    def test_fully_common_text_earns_nothing(self):
        shared = "s1 s2 s3 s4 s5"
        corpus = make_corpus(
            {
                ("t", "2019-01"): shared + " u1",
                ("t", "2019-02"): shared + " u2",
            }
        )
        tables = build_ngram_tables(corpus, n=2)
        assert attribute_ngrams(tables, shared) == {}

    def test_duplicate_prefix_grams_count_per_occurrence(self):
        corpus = make_corpus(
            {
                ("t", "2019-01"): "a b a b",
                ("t", "2019-02"): "c d c d",
            }
        )
        tables = build_ngram_tables(corpus, n=2)
        once = attribute_ngrams(tables, "a b")
        twice = attribute_ngrams(tables, "a b x a b")
        assert twice[M("2019-01")] == 2 * once[M("2019-01")]

    def test_additive_over_disjoint_support_concatenation(self):
        corpus = make_corpus(
            {
                ("t", "2019-01"): "a b c d",
                ("t", "2019-02"): "e f g h",
            }
        )
        tables = build_ngram_tables(corpus, n=2)
        part1, part2 = "a b c", "e f g"
        combined = attribute_ngrams(tables, part1 + " " + part2)
        merged = attribute_ngrams(tables, part1)
        for m, c in attribute_ngrams(tables, part2).items():
            merged[m] = merged.get(m, 0) + c
        assert combined == merged

    def test_matches_direct_bruteforce(self):
        versions = {
            ("a", "2019-01"): "w1 w2 w3 w4 w1 w2",
            ("a", "2019-02"): "w1 w2 w9 w4 w5 w2",
            ("b", "2019-01"): "w5 w6 w1 w2 w3",
            ("b", "2019-02"): "w5 w6 w6 w5 w1",
        }
        corpus = make_corpus(versions)
        tables = build_ngram_tables(corpus, n=2)
        matched = "w1 w2 w3 w4 w5 w6 w6 w1 w2"
        got = attribute_ngrams(tables, matched, prefix_words=6)
        want = ngram_credit_bruteforce(versions, matched, n=2, prefix_words=6)
        assert {str(m): c for m, c in got.items()} == want

    def test_nonnegative_credit(self):
        corpus = generate_corpus(
            DriftSpec(topics=3, months=4, tokens_per_doc=30, drift_rate=0.3, vocab_size=20, seed=9)
        )
        tables = build_ngram_tables(corpus, n=2)
        credit = attribute_ngrams(tables, corpus.version("t0000", month_at(2)).text)
        assert all(c >= 0 for c in credit.values())


class TestDuplicateReport:
    def run_report(self, corpus, dump_texts, query_month, threshold=0.2):
        index = build_index(dump_texts.items())
        _, records = attribute_versions(index, dump_texts, corpus, query_month,
                                        threshold=threshold)
        return duplicate_report(records, dump_texts, threshold=threshold)

    def test_ten_copies_form_one_exact_cluster(self):
        text = " ".join(f"word{i:02d}" for i in range(60))
        corpus = make_corpus({("t", "2019-01"): text, ("t", "2019-02"): text + " tail"})
        dump_texts = {f"c{i}": text for i in range(10)}
        report = self.run_report(corpus, dump_texts, M("2019-02"))
        assert len(report.exact_clusters) == 1
        assert len(report.exact_clusters[0].doc_ids) == 10

    def test_reference_number_variants_are_near_duplicates(self):
        body = " ".join(f"sentence{i:02d} about the dynasty" for i in range(20))
        v1 = body + " order.[147] more text follows here"
        v2 = body + " order.[148] more text follows here"
        corpus = make_corpus({("t", "2019-01"): v1, ("t", "2019-02"): v2})
        report = self.run_report(corpus, {"a": v1, "b": v2}, M("2019-02"))
        assert report.exact_clusters == ()
        assert len(report.near_pairs) == 1
        pair = report.near_pairs[0]
        assert {pair.doc_a, pair.doc_b} == {"a", "b"}
        assert 0 < pair.distance < 0.2

    def test_all_unique_matches_empty_report(self):
        corpus = generate_corpus(
            DriftSpec(topics=4, months=3, tokens_per_doc=60, drift_rate=0.5, vocab_size=500, seed=11)
        )
        dump = generate_dump(corpus, DumpSpec(mixture={month_at(2): 1.0}, docs=6, seed=12))
        texts = {d.doc_id: d.text for d in dump}
        # One draw per doc id; identical texts can still repeat if a (topic,
        # month) pair is drawn twice, so keep only one doc per text.
        unique = {}
        for doc_id, text in texts.items():
            if text not in unique.values():
                unique[doc_id] = text
        report = self.run_report(corpus, unique, month_at(3), threshold=0.05)
        assert report.exact_clusters == ()
        assert report.near_pairs == ()

    def test_render_truncates_excerpts(self):
        text = "y " * 600
        corpus = make_corpus({("t", "2019-01"): text, ("t", "2019-02"): text + "tail"})
        dump_texts = {"a": text, "b": text}
        report = self.run_report(corpus, dump_texts, M("2019-02"))
        rendered = render_duplicate_report(report)
        assert len(report.exact_clusters[0].excerpt) <= 500
        assert "accepted matches" in rendered
