"""Transformers: named relation-to-relation units with declared I/O specs.

Each transformer declares the column sets it accepts and the columns it
produces for each accepted set, so pipelines can be checked and described
without running anything.  The shipped transformers cover lexical retrieval
(plain and weighted BM25), adjacent-pair query rewriting, document text
loading, candidate-set re-scoring, and extractive answer generation; the
latter two are deterministic stand-ins with the frame signatures of neural
re-rankers and reader models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import EmptyQuery, MalformedWeightedQuery, MissingColumn
from .frames import Relation, join_on_docno, rank_rows
from .index import Index, count_adjacent, tokenize


@dataclass(frozen=True)
class TransformerSpec:
    """Declared I/O contract: accepted input column sets and their outputs.

    ``accepted_inputs`` lists alternative minimal configurations in priority
    order (the first satisfied set wins).  ``outputs`` maps each accepted set
    to the columns produced for it.  When ``passthrough`` is set, input
    columns beyond the matched set are preserved in the output.
    """

    accepted_inputs: tuple[frozenset[str], ...]
    outputs: tuple[tuple[frozenset[str], frozenset[str]], ...]
    passthrough: bool = False

    def __post_init__(self):
        if not self.accepted_inputs:
            raise ValueError("a transformer must accept at least one input configuration")
        declared = {a for a, _ in self.outputs}
        if declared != set(self.accepted_inputs):
            raise ValueError("outputs must be declared for exactly the accepted input sets")

    def match(self, columns) -> frozenset[str] | None:
        """First accepted set contained in *columns*, or None."""
        columns = set(columns)
        for accepted in self.accepted_inputs:
            if accepted <= columns:
                return accepted
        return None

    def output_for(self, matched: frozenset[str]) -> frozenset[str]:
        for accepted, produced in self.outputs:
            if accepted == matched:
                return produced
        raise KeyError(matched)


def spec(accepts, produces, passthrough: bool = False) -> TransformerSpec:
    """Spec with a single accepted input set."""
    a = frozenset(accepts)
    return TransformerSpec((a,), ((a, frozenset(produces)),), passthrough=passthrough)


@dataclass(eq=False)
class Transformer:
    """A named unit mapping one relation to another.

    ``fn`` is the raw transform procedure; call :meth:`transform` instead,
    which checks the input against the spec first.
    """

    name: str
    description: str
    attributes: tuple[tuple[str, object], ...]
    spec: TransformerSpec | None
    fn: Callable[[Relation], Relation] = field(repr=False)

    def transform(self, rel: Relation) -> Relation:
        if self.spec is not None:
            matched = self.spec.match(rel.columns)
            if matched is None:
                required = min(
                    self.spec.accepted_inputs, key=lambda a: (len(a - set(rel.columns)), sorted(a))
                )
                raise MissingColumn(
                    required - set(rel.columns), required, set(rel.columns), who=self.name
                )
        return self.fn(rel)

    def __call__(self, rel: Relation) -> Relation:
        return self.transform(rel)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Transformer):
            return NotImplemented
        return self.name == other.name and self.attributes == other.attributes

    def __hash__(self) -> int:
        return hash((self.name, self.attributes))

    def __repr__(self) -> str:
        return f"Transformer({self.name!r})"


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    num_results: int = 1000

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")
        if self.num_results < 1:
            raise ValueError(f"num_results must be >= 1, got {self.num_results}")


@dataclass(frozen=True)
class SdmParams:
    lambda_t: float = 0.9
    lambda_o: float = 0.1

    def __post_init__(self):
        if self.lambda_t < 0 or self.lambda_o < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.lambda_t + self.lambda_o - 1.0) > 1e-9:
            raise ValueError("lambda_t + lambda_o must equal 1")


# --------------------------------------------------------------------------
# Weighted query grammar:
#   wquery := group+
#   group  := "#w(" FLOAT ")" token+ | "#ow(" FLOAT ")" token token
# Groups separated by single spaces; tokens are tokenizer outputs.
# --------------------------------------------------------------------------


def is_weighted_query(query: str) -> bool:
    return query.lstrip().startswith("#")


def format_weighted_query(tokens: list[str], params: SdmParams) -> str:
    parts = ["#w(%.6f) %s" % (params.lambda_t, " ".join(tokens))]
    for a, b in zip(tokens, tokens[1:]):
        parts.append("#ow(%.6f) %s %s" % (params.lambda_o, a, b))
    return " ".join(parts)


def parse_weighted_query(query: str) -> list[tuple[str, float, list[str]]]:
    """Parse the weighted grammar into (kind, weight, tokens) groups."""
    groups: list[tuple[str, float, list[str]]] = []
    i, n = 0, len(query)
    while i < n:
        if query.startswith("#w(", i):
            kind, j = "w", i + 3
        elif query.startswith("#ow(", i):
            kind, j = "ow", i + 4
        else:
            raise MalformedWeightedQuery(i, "expected '#w(' or '#ow('")
        close = query.find(")", j)
        if close < 0:
            raise MalformedWeightedQuery(j, "unclosed weight group")
        try:
            weight = float(query[j:close])
        except ValueError:
            raise MalformedWeightedQuery(j, f"bad weight {query[j:close]!r}") from None
        i = close + 1
        tokens: list[str] = []
        while i < n:
            if query[i] != " ":
                raise MalformedWeightedQuery(i, "expected a single space between items")
            if query.startswith("#", i + 1):
                i += 1
                break
            j = i + 1
            while j < n and query[j] != " ":
                j += 1
            token = query[i + 1 : j]
            if tokenize(token) != [token]:
                raise MalformedWeightedQuery(i + 1, f"{token!r} is not a valid token")
            tokens.append(token)
            i = j
        if kind == "w" and not tokens:
            raise MalformedWeightedQuery(i, "unigram group has no tokens")
        if kind == "ow" and len(tokens) != 2:
            raise MalformedWeightedQuery(i, "ordered-window group needs exactly two tokens")
        groups.append((kind, weight, tokens))
    if not groups:
        raise MalformedWeightedQuery(0, "empty weighted query")
    return groups


# --------------------------------------------------------------------------
# BM25 scoring engine, shared by the plain and weighted retrievers.
# --------------------------------------------------------------------------


def _bm25_term(tf: int, df: int, dl: int, n_docs: int, avgdl: float, k1: float, b: float) -> float:
    idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
    return idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl))


def _score_groups(index: Index, params: Bm25Params, groups) -> list[tuple[str, float]]:
    """Score every matching document; returns the top (docno, score) pairs."""
    stats = index.stats()
    contribs: dict[int, list[float]] = {}
    for kind, weight, tokens in groups:
        if kind == "w":
            for term in tokens:
                plist = index.postings(term)
                df = len(plist)
                for p in plist:
                    dl = index.doc_by_id(p.doc_id).doc_len
                    contribs.setdefault(p.doc_id, []).append(
                        weight * _bm25_term(p.tf, df, dl, stats.n_docs, stats.avg_doc_len, params.k1, params.b)
                    )
        else:
            t1, t2 = tokens
            second = {p.doc_id: p.positions for p in index.postings(t2)}
            counts = {}
            for p in index.postings(t1):
                if p.doc_id in second:
                    c = count_adjacent(p.positions, second[p.doc_id])
                    if c:
                        counts[p.doc_id] = c
            df = len(counts)
            for doc_id, c in counts.items():
                dl = index.doc_by_id(doc_id).doc_len
                contribs.setdefault(doc_id, []).append(
                    weight * _bm25_term(c, df, dl, stats.n_docs, stats.avg_doc_len, params.k1, params.b)
                )
    scored = [(index.doc_by_id(doc_id).docno, math.fsum(parts)) for doc_id, parts in contribs.items()]
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored[: params.num_results]


def _retrieval_fn(index: Index, params: Bm25Params, weighted: bool):
    def fn(rel: Relation) -> Relation:
        # retrievers re-derive state: one retrieval per distinct qid, taking
        # the first query seen for it, regardless of how many rows carry it
        queries: dict[str, str] = {}
        for row in rel.to_dicts():
            queries.setdefault(row["qid"], row["query"])
        rows = []
        for qid, query in queries.items():
            if weighted and is_weighted_query(query):
                groups = parse_weighted_query(query)
            else:
                groups = [("w", 1.0, tokenize(query))]
            for docno, score in _score_groups(index, params, groups):
                rows.append({"qid": qid, "query": query, "docno": docno, "score": score})
        return Relation.from_dicts(rank_rows(rows), ["qid", "query", "docno", "score", "rank"])

    return fn


_RETRIEVER_OUT = ("qid", "query", "docno", "score", "rank")


def bm25_retriever(index: Index, params: Bm25Params = Bm25Params()) -> Transformer:
    """Lexical BM25 retrieval over a loaded index; consumes Q frames."""
    return Transformer(
        name="bm25",
        description="BM25 lexical retrieval over the inverted index",
        attributes=(("k1", params.k1), ("b", params.b), ("num_results", params.num_results)),
        spec=spec({"qid", "query"}, _RETRIEVER_OUT),
        fn=_retrieval_fn(index, params, weighted=False),
    )


def weighted_bm25_retriever(index: Index, params: Bm25Params = Bm25Params()) -> Transformer:
    """BM25 retrieval that also understands weighted #w/#ow query strings."""
    return Transformer(
        name="wbm25",
        description="BM25 retrieval accepting weighted unigram and ordered-window query groups",
        attributes=(("k1", params.k1), ("b", params.b), ("num_results", params.num_results)),
        spec=spec({"qid", "query"}, _RETRIEVER_OUT),
        fn=_retrieval_fn(index, params, weighted=True),
    )


def sdm_rewriter(params: SdmParams = SdmParams()) -> Transformer:
    """Rewrite queries into weighted unigram plus adjacent-pair groups.

    Single-token queries pass through unchanged; empty queries are an error.
    """

    def fn(rel: Relation) -> Relation:
        rows = []
        for row in rel.to_dicts():
            tokens = tokenize(row["query"])
            if not tokens:
                raise EmptyQuery(row["qid"])
            out = dict(row)
            if len(tokens) > 1:
                out["query"] = format_weighted_query(tokens, params)
            rows.append(out)
        return Relation.from_dicts(rows, list(rel.columns))

    return Transformer(
        name="sdm",
        description="sequential-dependence query rewriting (unigrams plus adjacent ordered pairs)",
        attributes=(("lambda_t", params.lambda_t), ("lambda_o", params.lambda_o)),
        spec=spec({"qid", "query"}, {"qid", "query"}, passthrough=True),
        fn=fn,
    )


def text_loader(index: Index) -> Transformer:
    """Attach stored document text to rows by docno lookup."""
    return Transformer(
        name="text_loader",
        description="load stored document text from the index by docno",
        attributes=(("index", str(index.path)),),
        spec=spec({"docno"}, {"docno", "text"}, passthrough=True),
        fn=lambda rel: join_on_docno(rel, index),
    )


def lexical_rescorer(params: Bm25Params = Bm25Params()) -> Transformer:
    """Re-score (query, text) candidates per qid; a pure text scorer.

    Statistics (document frequencies, average length, collection size) come
    from the candidate set of each qid alone, so no index handle is needed:
    the transformer sees exactly what a neural re-ranker would see.
    """

    def fn(rel: Relation) -> Relation:
        columns = list(rel.columns)
        for extra in ("score", "rank"):
            if extra not in columns:
                columns.append(extra)
        groups: dict[str, list[dict]] = {}
        for row in rel.to_dicts():
            groups.setdefault(row["qid"], []).append(row)
        rows = []
        for qid in groups:
            cands = groups[qid]
            doc_tokens = [tokenize(c["text"]) for c in cands]
            n = len(cands)
            avgdl = sum(len(t) for t in doc_tokens) / n if n else 0.0
            df: dict[str, int] = {}
            for toks in doc_tokens:
                for term in set(toks):
                    df[term] = df.get(term, 0) + 1
            for cand, toks in zip(cands, doc_tokens):
                contribs = []
                for term in tokenize(cand["query"]):
                    tf = toks.count(term)
                    if tf:
                        contribs.append(
                            _bm25_term(tf, df[term], len(toks), n, avgdl, params.k1, params.b)
                        )
                out = dict(cand)
                out["score"] = math.fsum(contribs)
                rows.append(out)
        return Relation.from_dicts(rank_rows(rows), columns)

    return Transformer(
        name="rescore",
        description="re-rank candidates by BM25 over per-query candidate-set statistics",
        attributes=(("k1", params.k1), ("b", params.b), ("num_results", params.num_results)),
        spec=spec({"qid", "query", "docno", "text"}, {"qid", "query", "docno", "text", "score", "rank"}, passthrough=True),
        fn=fn,
    )


def first_sentence(text: str) -> str:
    """Text up to and including the first '.', '?' or '!'; whole text if none."""
    cut = len(text)
    for mark in ".?!":
        pos = text.find(mark)
        if pos != -1:
            cut = min(cut, pos)
    return text[: cut + 1] if cut < len(text) else text


def extractive_answerer(max_passages: int = 3) -> Transformer:
    """Answer each query with the first sentence of its top-ranked document."""

    def fn(rel: Relation) -> Relation:
        best: dict[str, str] = {}
        for row in rel.to_dicts():
            if row["rank"] == 0:
                best[row["qid"]] = first_sentence(row["text"])
        rows = [{"qid": qid, "qanswer": best[qid]} for qid in sorted(best)]
        return Relation.from_dicts(rows, ["qid", "qanswer"])

    return Transformer(
        name="answer",
        description="extract an answer as the first sentence of the top-ranked document",
        attributes=(("max_passages", max_passages),),
        spec=spec({"qid", "query", "docno", "score", "rank", "text"}, {"qid", "qanswer"}),
        fn=fn,
    )


def registry(index: Index) -> dict:
    """Name-to-factory map binding the built-in transformers to an index."""
    return {
        "bm25": lambda **kw: bm25_retriever(index, Bm25Params(**kw)),
        "wbm25": lambda **kw: weighted_bm25_retriever(index, Bm25Params(**kw)),
        "sdm": lambda **kw: sdm_rewriter(SdmParams(**kw)),
        "text_loader": lambda **kw: text_loader(index, **kw),
        "rescore": lambda **kw: lexical_rescorer(Bm25Params(**kw)),
        "answer": lambda **kw: extractive_answerer(**kw),
    }
