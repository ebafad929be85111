"""Combining transformers into pipelines: >>, weighted sums, rank fusion.

A pipeline is a tree.  Sequential composition feeds one stage into the
next; linear combination and reciprocal-rank fusion run their children on
the same input and merge the rankings.  The same trees can be written as
text and parsed back.
"""

import tempfile

from flowrank import (
    Leaf,
    Relation,
    bm25_retriever,
    build_index,
    execute,
    linear,
    load_index,
    registry,
    rr_fusion,
    text_loader,
    then,
)
from flowrank.dsl import elaborate, parse, render

CORPUS = [
    ("d1", "the quick brown fox"),
    ("d2", "the lazy dog"),
    ("d3", "quick quick fox"),
    ("d4", "brown dog barks"),
    ("d5", "fox jumps over the lazy dog"),
]
index_dir = tempfile.mkdtemp()
build_index(CORPUS, index_dir)
index = load_index(index_dir)

topics = Relation.from_dicts([{"qid": "q1", "query": "quick fox"}], ["qid", "query"])

# Sequential composition: execute(a >> b, x) == execute(b, execute(a, x)).
chain = then(Leaf(bm25_retriever(index)), Leaf(text_loader(index)))
print(execute(chain, topics).columns)

# Linear combination sums weighted scores over the union of documents;
# a document missing from one child simply contributes zero there.
blend = linear([Leaf(bm25_retriever(index)), Leaf(bm25_retriever(index))], [0.7, 0.3])
for row in execute(blend, topics).to_dicts():
    print("linear:", row["docno"], round(row["score"], 6))

# Reciprocal-rank fusion ignores score magnitudes entirely: each child
# contributes 1 / (k + rank) with 1-based ranks and k = 60 by default.
fused = rr_fusion([Leaf(bm25_retriever(index)), Leaf(bm25_retriever(index))])
for row in execute(fused, topics).to_dicts():
    print("rrf:", row["docno"], round(row["score"], 6))

# The expression language spells the same trees as text.  `+` binds
# tighter than `>>`, mirroring how the operators compose.
reg = registry(index)
node = elaborate(parse("rrf(bm25, sdm >> wbm25) >> text_loader >> rescore >> answer"), reg)
print("parsed and elaborated:", render(node))

answers = execute(node, topics)
print("answers:", answers.to_dicts())
