import math

import pytest

from flowrank.errors import EmptyQuery, MalformedWeightedQuery, MissingColumn, UnknownDocno
from flowrank.frames import Relation
from flowrank.transformers import (
    Bm25Params,
    SdmParams,
    bm25_retriever,
    extractive_answerer,
    first_sentence,
    lexical_rescorer,
    parse_weighted_query,
    sdm_rewriter,
    text_loader,
    weighted_bm25_retriever,
)

from conftest import TOY5


def rel(rows, columns):
    return Relation.from_dicts(rows, columns)


def qframe(*pairs):
    return rel([{"qid": q, "query": t} for q, t in pairs], ["qid", "query"])


# ---------------------------------------------------------------------------
# Independent oracle: BM25 computed directly from the raw texts, sharing no
# code with the index or the retrievers.
# ---------------------------------------------------------------------------


def oracle_bm25_scores(corpus, query, k1=1.2, b=0.75):
    docs = {d: t.lower().split() for d, t in corpus}
    n = len(docs)
    avgdl = sum(len(t) for t in docs.values()) / n

    def df(term):
        return sum(1 for toks in docs.values() if term in toks)

    scores = {}
    for docno, toks in docs.items():
        s = 0.0
        for term in query.lower().split():
            tf = toks.count(term)
            if tf == 0:
                continue
            idf = math.log(1.0 + (n - df(term) + 0.5) / (df(term) + 0.5))
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(toks) / avgdl))
        if s > 0:
            scores[docno] = s
    return scores


class TestBm25Retriever:
    def test_declared_io(self, toy_index):
        t = bm25_retriever(toy_index)
        assert list(t.spec.accepted_inputs) == [frozenset({"qid", "query"})]
        assert t.spec.output_for(frozenset({"qid", "query"})) == frozenset(
            {"qid", "query", "docno", "rank", "score"}
        )

    def test_scores_match_oracle(self, toy_index):
        t = bm25_retriever(toy_index)
        out = t.transform(qframe(("q1", "quick fox")))
        expected = oracle_bm25_scores(TOY5, "quick fox")
        got = {r["docno"]: r["score"] for r in out.to_dicts()}
        assert set(got) == set(expected)
        for docno, score in expected.items():
            assert got[docno] == pytest.approx(score, abs=1e-9)
        # frozen oracle values, computed once by hand from the formula
        assert got["d3"] == pytest.approx(1.8693232139943672, abs=1e-12)
        assert got["d1"] == pytest.approx(1.384652153443076, abs=1e-12)
        assert got["d5"] == pytest.approx(0.43578440484770453, abs=1e-12)

    def test_unmatched_query_yields_no_rows(self, toy_index):
        out = bm25_retriever(toy_index).transform(qframe(("q1", "zzz")))
        assert len(out) == 0
        assert out.columns == ("qid", "query", "docno", "score", "rank")

    def test_scores_strictly_positive_and_only_matching_docs(self, toy_index):
        out = bm25_retriever(toy_index).transform(qframe(("q1", "barks")))
        assert [r["docno"] for r in out.to_dicts()] == ["d4"]
        assert all(r["score"] > 0 for r in out.to_dicts())

    def test_b_zero_removes_length_normalization(self, tmp_path):
        from flowrank.index import build_index, load_index

        corpus = [("a", "fox den"), ("b", "fox " + " ".join(f"pad{i}" for i in range(30)))]
        build_index(corpus, tmp_path / "ix")
        ix = load_index(tmp_path / "ix")
        out = bm25_retriever(ix, Bm25Params(b=0.0)).transform(qframe(("q1", "fox")))
        scores = {r["docno"]: r["score"] for r in out.to_dicts()}
        assert scores["a"] == pytest.approx(scores["b"], abs=1e-12)

    def test_num_results_truncates_per_query(self, toy_index):
        out = bm25_retriever(toy_index, Bm25Params(num_results=1)).transform(
            qframe(("q1", "quick fox"), ("q2", "dog"))
        )
        by_qid = {}
        for r in out.to_dicts():
            by_qid.setdefault(r["qid"], []).append(r)
        assert {q: len(rows) for q, rows in by_qid.items()} == {"q1": 1, "q2": 1}

    def test_missing_column_diagnostic(self, toy_index):
        answers = rel([{"qid": "q1", "qanswer": "x"}], ["qid", "qanswer"])
        with pytest.raises(MissingColumn) as err:
            bm25_retriever(toy_index).transform(answers)
        assert err.value.missing == frozenset({"query"})

    def test_repeated_query_terms_contribute_per_occurrence(self, toy_index):
        once = bm25_retriever(toy_index).transform(qframe(("q1", "fox")))
        twice = bm25_retriever(toy_index).transform(qframe(("q1", "fox fox")))
        single = {r["docno"]: r["score"] for r in once.to_dicts()}
        doubled = {r["docno"]: r["score"] for r in twice.to_dicts()}
        assert set(single) == set(doubled)
        for docno, score in single.items():
            assert doubled[docno] == pytest.approx(2.0 * score, abs=1e-12)

    def test_repeated_qid_rows_retrieved_once(self, toy_index):
        r_in = rel(
            [
                {"qid": "q1", "query": "fox", "docno": "d1", "score": 2.0, "rank": 0},
                {"qid": "q1", "query": "fox", "docno": "d2", "score": 1.0, "rank": 1},
            ],
            ["qid", "query", "docno", "score", "rank"],
        )
        out = bm25_retriever(toy_index).transform(r_in)
        pairs = [(r["qid"], r["docno"]) for r in out.to_dicts()]
        assert len(pairs) == len(set(pairs))


class TestTextLoader:
    def test_result_rows_gain_text(self, toy_index):
        r_in = rel(
            [{"qid": "q1", "docno": "d1", "score": 1.0, "rank": 0}],
            ["qid", "docno", "score", "rank"],
        )
        out = text_loader(toy_index).transform(r_in)
        assert out.column("text") == ("the quick brown fox",)
        assert out.kind.abbr == "R+"

    def test_empty_input(self, toy_index):
        out = text_loader(toy_index).transform(rel([], ["docno"]))
        assert out.columns == ("docno", "text")

    def test_unknown_docno(self, toy_index):
        with pytest.raises(UnknownDocno):
            text_loader(toy_index).transform(rel([{"docno": "d99"}], ["docno"]))


class TestSdmRewriter:
    def test_two_token_rewrite(self):
        out = sdm_rewriter().transform(qframe(("q1", "quick fox")))
        (query,) = out.column("query")
        assert query == "#w(0.900000) quick fox #ow(0.100000) quick fox"

    def test_single_token_passthrough(self):
        out = sdm_rewriter().transform(qframe(("q1", "fox")))
        assert out.column("query") == ("fox",)

    def test_empty_query_is_error(self):
        with pytest.raises(EmptyQuery):
            sdm_rewriter().transform(qframe(("q1", "")))

    def test_three_tokens_have_two_pairs(self):
        out = sdm_rewriter(SdmParams(0.8, 0.2)).transform(qframe(("q1", "quick brown fox")))
        (query,) = out.column("query")
        assert query == (
            "#w(0.800000) quick brown fox #ow(0.200000) quick brown #ow(0.200000) brown fox"
        )


class TestWeightedQueryGrammar:
    def test_round_trip_through_parser(self):
        groups = parse_weighted_query("#w(0.900000) quick fox #ow(0.100000) quick fox")
        assert groups == [("w", 0.9, ["quick", "fox"]), ("ow", 0.1, ["quick", "fox"])]

    def test_unclosed_group(self):
        with pytest.raises(MalformedWeightedQuery) as err:
            parse_weighted_query("#ow(0.1")
        assert err.value.position == 4

    def test_ow_needs_two_tokens(self):
        with pytest.raises(MalformedWeightedQuery):
            parse_weighted_query("#ow(0.1) quick")

    def test_bad_token_rejected(self):
        with pytest.raises(MalformedWeightedQuery):
            parse_weighted_query("#w(0.5) Fox!")


class TestWeightedBm25:
    def test_plain_query_identical_to_bm25(self, toy_index):
        q = qframe(("q1", "quick fox"), ("q2", "lazy dog"))
        assert weighted_bm25_retriever(toy_index).transform(q) == bm25_retriever(
            toy_index
        ).transform(q)

    def test_sdm_rewritten_query_matches_oracle(self, toy_index):
        pipeline_in = sdm_rewriter().transform(qframe(("q1", "quick fox")))
        out = weighted_bm25_retriever(toy_index).transform(pipeline_in)
        got = {r["docno"]: r["score"] for r in out.to_dicts()}
        # oracle: 0.9 * unigram BM25 + 0.1 * BM25 with tf = adjacency count,
        # df = docs with a (quick, fox) adjacency (only d3 in TOY5)
        uni = oracle_bm25_scores(TOY5, "quick fox")
        n, avgdl = 5, 19 / 5
        idf_ow = math.log(1.0 + (n - 1 + 0.5) / (1 + 0.5))
        ow_d3 = idf_ow * 1 * 2.2 / (1 + 1.2 * (1 - 0.75 + 0.75 * 3 / avgdl))
        expected = {d: 0.9 * s for d, s in uni.items()}
        expected["d3"] += 0.1 * ow_d3
        assert set(got) == set(expected)
        for docno, score in expected.items():
            assert got[docno] == pytest.approx(score, abs=1e-9)
        order = [r["docno"] for r in out.to_dicts()]
        assert order == ["d3", "d1", "d5"]
        # frozen oracle values
        assert got["d3"] == pytest.approx(1.8340848828954839, abs=1e-12)
        assert got["d1"] == pytest.approx(1.2461869380987685, abs=1e-12)
        assert got["d5"] == pytest.approx(0.3922059643629341, abs=1e-12)

    def test_sdm_single_token_degenerates_to_plain_bm25(self, toy_index):
        rewritten = sdm_rewriter().transform(qframe(("q1", "fox")))
        assert weighted_bm25_retriever(toy_index).transform(rewritten) == bm25_retriever(
            toy_index
        ).transform(qframe(("q1", "fox")))

    def test_malformed_weighted_query(self, toy_index):
        with pytest.raises(MalformedWeightedQuery):
            weighted_bm25_retriever(toy_index).transform(qframe(("q1", "#ow(0.1")))


class TestLexicalRescorer:
    def candidates(self, rows):
        return rel(rows, ["qid", "query", "docno", "text"])

    def test_single_candidate_gets_rank_zero(self):
        out = lexical_rescorer().transform(
            self.candidates([{"qid": "q1", "query": "zzz", "docno": "d1", "text": "no match"}])
        )
        assert out.to_dicts()[0]["rank"] == 0
        assert out.to_dicts()[0]["score"] == 0.0

    def test_missing_text_column(self, toy_index):
        r_in = bm25_retriever(toy_index).transform(qframe(("q1", "quick fox")))
        with pytest.raises(MissingColumn) as err:
            lexical_rescorer().transform(r_in)
        assert "text" in err.value.missing

    def test_order_matches_candidate_set_oracle(self):
        texts = {"d1": "the quick brown fox", "d2": "quick quick fox", "d3": "brown dog barks"}
        out = lexical_rescorer().transform(
            self.candidates(
                [{"qid": "q1", "query": "quick fox", "docno": d, "text": t} for d, t in texts.items()]
            )
        )
        expected = oracle_bm25_scores(list(texts.items()), "quick fox")
        got = {r["docno"]: r["score"] for r in out.to_dicts()}
        for docno in texts:
            assert got[docno] == pytest.approx(expected.get(docno, 0.0), abs=1e-9)

    def test_multiset_preserved_and_extras_kept(self):
        rows = [
            {"qid": "q1", "query": "fox", "docno": "d1", "text": "fox", "tag": "a"},
            {"qid": "q1", "query": "fox", "docno": "d2", "text": "dog", "tag": "b"},
        ]
        out = lexical_rescorer().transform(rel(rows, ["qid", "query", "docno", "text", "tag"]))
        assert sorted((r["qid"], r["docno"]) for r in out.to_dicts()) == [("q1", "d1"), ("q1", "d2")]
        assert set(out.columns) == {"qid", "query", "docno", "text", "tag", "score", "rank"}


class TestExtractiveAnswerer:
    def ranked(self, rows):
        return rel(rows, ["qid", "query", "docno", "score", "rank", "text"])

    def test_no_terminator_keeps_whole_text(self):
        out = extractive_answerer().transform(
            self.ranked(
                [{"qid": "q1", "query": "x", "docno": "d5", "score": 1.0, "rank": 0,
                  "text": "fox jumps over the lazy dog"}]
            )
        )
        assert out.to_dicts() == [{"qid": "q1", "qanswer": "fox jumps over the lazy dog"}]

    def test_first_sentence_rule(self):
        assert first_sentence("A. B.") == "A."
        assert first_sentence("what? yes.") == "what?"
        assert first_sentence("plain") == "plain"
        out = extractive_answerer().transform(
            self.ranked(
                [{"qid": "q1", "query": "x", "docno": "d1", "score": 1.0, "rank": 0, "text": "A. B."}]
            )
        )
        assert out.to_dicts()[0]["qanswer"] == "A."

    def test_one_row_per_qid(self):
        rows = [
            {"qid": "q1", "query": "x", "docno": "d1", "score": 2.0, "rank": 0, "text": "one"},
            {"qid": "q1", "query": "x", "docno": "d2", "score": 1.0, "rank": 1, "text": "two"},
            {"qid": "q2", "query": "y", "docno": "d1", "score": 1.0, "rank": 0, "text": "three"},
        ]
        out = extractive_answerer().transform(self.ranked(rows))
        assert out.kind.abbr == "A"
        assert out.to_dicts() == [{"qid": "q1", "qanswer": "one"}, {"qid": "q2", "qanswer": "three"}]


class TestSpecBehaviorAgreement:
    """Actual output columns equal the inspected output columns."""

    def test_all_builtins_agree(self, toy_index):
        from conftest import synthesize_relation
        import random

        from flowrank.transformers import registry

        rng = random.Random(11)
        for name, factory in registry(toy_index).items():
            t = factory()
            for accepted in t.spec.accepted_inputs:
                for extra in ([], ["color"]):
                    cols = set(accepted) | set(extra)
                    rel_in = synthesize_relation(cols, rng)
                    out = t.transform(rel_in)
                    expected = t.spec.output_for(accepted)
                    if t.spec.passthrough:
                        expected = expected | (cols - accepted)
                    assert set(out.columns) == set(expected), name
