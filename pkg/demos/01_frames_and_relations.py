"""Frames and relations: the typed tables that flow through pipelines.

Every stage of a search pipeline consumes and produces a relation: an
immutable table whose column names classify it as a query (Q), document
(D), result (R), or answer (A) frame.  This script builds a few frames by
hand and pokes at classification, ranking, and text joining.
"""

from flowrank import Relation, classify_frame, join_on_docno, sort_and_rank

# A query frame: one row per search request, qid is the primary key.
topics = Relation.from_dicts(
    [
        {"qid": "q1", "query": "quick fox"},
        {"qid": "q2", "query": "lazy dog"},
    ],
    ["qid", "query"],
)
print("topics kind:", topics.kind)  # Q

# Classification is a pure function of the column-name set.
print("{qid, query}            ->", classify_frame({"qid", "query"}))
print("{docno, text}           ->", classify_frame({"docno", "text"}))
print("{qid, docno, score, rank} ->", classify_frame({"qid", "docno", "score", "rank"}))
print("result + query + text  ->", classify_frame({"qid", "docno", "score", "rank", "query", "text"}))

# Scored candidates become a proper result frame through sort_and_rank:
# rows are ordered by (qid, score desc, docno) and ranks are written 0-based.
# Ties in score break by ascending docno, so the outcome is deterministic.
scored = Relation.from_dicts(
    [
        {"qid": "q1", "docno": "d1", "score": 1.0},
        {"qid": "q1", "docno": "d2", "score": 3.0},
        {"qid": "q1", "docno": "d3", "score": 3.0},
    ],
    ["qid", "docno", "score"],
)
ranked = sort_and_rank(scored)
for row in ranked.to_dicts():
    print(row)

# Applying it again changes nothing (idempotence).
assert sort_and_rank(ranked) == ranked

# join_on_docno attaches document text from any docno -> text mapping,
# preserving row order; an unknown docno raises immediately.
store = {"d1": "the quick brown fox", "d2": "the lazy dog", "d3": "quick quick fox"}
with_text = join_on_docno(ranked, store)
print("after join:", with_text.columns, "->", with_text.kind)

# Relations enforce their frame invariants at construction; a query frame
# with a duplicate qid is rejected outright.
try:
    Relation.from_dicts(
        [{"qid": "q1", "query": "a"}, {"qid": "q1", "query": "b"}], ["qid", "query"]
    )
except Exception as exc:
    print("duplicate qid rejected:", exc)
