"""Positional inverted index with stored document text.

The on-disk layout is three UTF-8 files in an index directory:

* ``meta.json``      -- ``{"format_version":1,"n_docs":N,"total_tokens":T,"avg_doc_len":A}``
* ``docs.jsonl``     -- one object per line, ascending doc_id:
  ``{"doc_id":i,"docno":"...","doc_len":L,"text":"..."}``
* ``postings.jsonl`` -- one object per line, terms in lexicographic order:
  ``{"term":"...","df":d,"cf":c,"postings":[[doc_id,tf,[pos,...]],...]}``

Building is deterministic: the same corpus yields byte-identical files.
Loading is lazy beyond ``meta.json`` so that purely static uses of an index
handle (inspection, validation) never touch document data.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    CorruptIndex,
    DataError,
    DuplicateDocno,
    EmptyCorpus,
    FormatError,
    IndexIOError,
    UnknownDocno,
    VersionMismatch,
)

FORMAT_VERSION = 1

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character, dropping empties."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Posting:
    doc_id: int
    tf: int
    positions: tuple[int, ...]


@dataclass(frozen=True)
class IndexStats:
    n_docs: int
    avg_doc_len: float
    total_tokens: int


@dataclass(frozen=True)
class DocRecord:
    doc_id: int
    docno: str
    doc_len: int
    text: str


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def read_corpus(path) -> Iterator[tuple[str, str]]:
    """Iterate (docno, text) pairs from a JSONL corpus file."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "docno" not in obj or "text" not in obj:
                raise FormatError(f"{path}:{lineno}: expected an object with docno and text")
            yield str(obj["docno"]), str(obj["text"])


def build_index(corpus: Iterable[tuple[str, str]], out_dir) -> IndexStats:
    """Tokenize a corpus and write the index directory; returns its stats."""
    out_dir = Path(out_dir)
    docs: list[DocRecord] = []
    seen: set[str] = set()
    postings: dict[str, list[tuple[int, tuple[int, ...]]]] = {}
    total_tokens = 0
    for docno, text in corpus:
        if docno in seen:
            raise DuplicateDocno(docno)
        seen.add(docno)
        doc_id = len(docs)
        tokens = tokenize(text)
        total_tokens += len(tokens)
        docs.append(DocRecord(doc_id, docno, len(tokens), text))
        by_term: dict[str, list[int]] = {}
        for pos, term in enumerate(tokens):
            by_term.setdefault(term, []).append(pos)
        for term, positions in by_term.items():
            postings.setdefault(term, []).append((doc_id, tuple(positions)))
    if not docs:
        raise EmptyCorpus()
    stats = IndexStats(len(docs), total_tokens / len(docs), total_tokens)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "meta.json").write_text(
            _dumps(
                {
                    "format_version": FORMAT_VERSION,
                    "n_docs": stats.n_docs,
                    "total_tokens": stats.total_tokens,
                    "avg_doc_len": stats.avg_doc_len,
                }
            )
            + "\n",
            encoding="utf-8",
        )
        with open(out_dir / "docs.jsonl", "w", encoding="utf-8") as fh:
            for d in docs:
                fh.write(
                    _dumps({"doc_id": d.doc_id, "docno": d.docno, "doc_len": d.doc_len, "text": d.text})
                    + "\n"
                )
        with open(out_dir / "postings.jsonl", "w", encoding="utf-8") as fh:
            for term in sorted(postings):
                plist = postings[term]
                fh.write(
                    _dumps(
                        {
                            "term": term,
                            "df": len(plist),
                            "cf": sum(len(p) for _, p in plist),
                            "postings": [[doc_id, len(p), list(p)] for doc_id, p in plist],
                        }
                    )
                    + "\n"
                )
    except OSError as exc:
        raise IndexIOError(f"cannot write index under {out_dir}: {exc}") from exc
    return stats


class Index:
    """Read-only handle over an index directory; safe for concurrent readers.

    ``meta.json`` is read and checked on open; ``docs.jsonl`` and
    ``postings.jsonl`` load lazily on first data access (see
    :attr:`data_loaded`).
    """

    def __init__(self, path):
        self.path = Path(path)
        meta_file = self.path / "meta.json"
        try:
            meta = json.loads(meta_file.read_text(encoding="utf-8"))
        except OSError as exc:
            raise CorruptIndex(str(meta_file), str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise CorruptIndex(str(meta_file), f"invalid JSON: {exc}") from exc
        if not isinstance(meta, dict) or "format_version" not in meta:
            raise CorruptIndex(str(meta_file), "missing format_version")
        if meta["format_version"] != FORMAT_VERSION:
            raise VersionMismatch(meta["format_version"], FORMAT_VERSION)
        try:
            self._stats = IndexStats(
                int(meta["n_docs"]), float(meta["avg_doc_len"]), int(meta["total_tokens"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptIndex(str(meta_file), f"bad stats fields: {exc}") from exc
        self._docs: list[DocRecord] | None = None
        self._by_docno: dict[str, DocRecord] | None = None
        self._postings: dict[str, tuple[Posting, ...]] | None = None
        self._load_lock = threading.Lock()

    @property
    def data_loaded(self) -> bool:
        """Whether any document or postings data has been read yet."""
        return self._docs is not None or self._postings is not None

    def stats(self) -> IndexStats:
        return self._stats

    @property
    def n_docs(self) -> int:
        return self._stats.n_docs

    @property
    def avg_doc_len(self) -> float:
        return self._stats.avg_doc_len

    def _ensure_docs(self):
        if self._docs is not None:
            return
        with self._load_lock:
            if self._docs is not None:
                return
            self._load_docs()

    def _load_docs(self):
        file = self.path / "docs.jsonl"
        docs: list[DocRecord] = []
        by_docno: dict[str, DocRecord] = {}
        try:
            lines = file.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise CorruptIndex(str(file), str(exc)) from exc
        for lineno, line in enumerate(lines, start=1):
            try:
                obj = json.loads(line)
                rec = DocRecord(int(obj["doc_id"]), str(obj["docno"]), int(obj["doc_len"]), str(obj["text"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptIndex(str(file), f"line {lineno}: {exc}") from exc
            if rec.doc_id != len(docs):
                raise CorruptIndex(str(file), f"line {lineno}: doc_id {rec.doc_id} is not dense")
            if rec.docno in by_docno:
                raise CorruptIndex(str(file), f"line {lineno}: duplicate docno {rec.docno!r}")
            docs.append(rec)
            by_docno[rec.docno] = rec
        if len(docs) != self._stats.n_docs:
            raise CorruptIndex(str(file), f"{len(docs)} documents but meta says {self._stats.n_docs}")
        self._docs = docs
        self._by_docno = by_docno

    def _ensure_postings(self):
        if self._postings is not None:
            return
        self._ensure_docs()
        with self._load_lock:
            if self._postings is not None:
                return
            self._load_postings()

    def _load_postings(self):
        file = self.path / "postings.jsonl"
        table: dict[str, tuple[Posting, ...]] = {}
        try:
            lines = file.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise CorruptIndex(str(file), str(exc)) from exc
        for lineno, line in enumerate(lines, start=1):
            try:
                obj = json.loads(line)
                term = obj["term"]
                plist = tuple(
                    Posting(int(doc_id), int(tf), tuple(int(p) for p in positions))
                    for doc_id, tf, positions in obj["postings"]
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptIndex(str(file), f"line {lineno}: {exc}") from exc
            for p in plist:
                if p.tf != len(p.positions) or any(
                    a >= b for a, b in zip(p.positions, p.positions[1:])
                ):
                    raise CorruptIndex(str(file), f"line {lineno}: bad posting for term {term!r}")
                if not 0 <= p.doc_id < self._stats.n_docs:
                    raise CorruptIndex(str(file), f"line {lineno}: doc_id {p.doc_id} out of range")
            if obj["df"] != len(plist) or obj["cf"] != sum(p.tf for p in plist):
                raise CorruptIndex(str(file), f"line {lineno}: df/cf inconsistent for term {term!r}")
            if any(a.doc_id >= b.doc_id for a, b in zip(plist, plist[1:])):
                raise CorruptIndex(str(file), f"line {lineno}: postings not ascending for {term!r}")
            table[term] = plist
        self._postings = table

    def postings(self, term: str) -> tuple[Posting, ...]:
        self._ensure_postings()
        return self._postings.get(term, ())

    def df(self, term: str) -> int:
        return len(self.postings(term))

    def cf(self, term: str) -> int:
        return sum(p.tf for p in self.postings(term))

    def terms(self) -> list[str]:
        self._ensure_postings()
        return sorted(self._postings)

    def doc(self, docno: str) -> DocRecord:
        self._ensure_docs()
        rec = self._by_docno.get(docno)
        if rec is None:
            raise UnknownDocno(docno)
        return rec

    def doc_by_id(self, doc_id: int) -> DocRecord:
        self._ensure_docs()
        if not 0 <= doc_id < len(self._docs):
            raise DataError(f"doc_id {doc_id} out of range")
        return self._docs[doc_id]

    def text(self, docno: str) -> str:
        return self.doc(docno).text

    def __contains__(self, docno: str) -> bool:
        self._ensure_docs()
        return docno in self._by_docno

    def __getitem__(self, docno: str) -> str:
        return self.text(docno)

    def docnos(self) -> list[str]:
        self._ensure_docs()
        return [d.docno for d in self._docs]


def load_index(path) -> Index:
    """Open a read-only handle on an index directory."""
    return Index(path)


def count_adjacent(positions_a: tuple[int, ...], positions_b: tuple[int, ...]) -> int:
    """Number of positions p with the first term at p and the second at p+1."""
    follow = set(positions_b)
    return sum(1 for p in positions_a if p + 1 in follow)


def ordered_window_count(index: Index, t1: str, t2: str, doc_id: int) -> int:
    """Occurrences of *t1* immediately followed by *t2* within one document."""
    pa = next((p.positions for p in index.postings(t1) if p.doc_id == doc_id), ())
    if not pa:
        return 0
    pb = next((p.positions for p in index.postings(t2) if p.doc_id == doc_id), ())
    if not pb:
        return 0
    return count_adjacent(pa, pb)
