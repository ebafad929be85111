"""Schematics: deterministic diagrams of pipelines and their data flow.

A schematic shows each transformer as a box and annotates every edge with
the frame kind flowing over it (Q, D, R, A, with + marking extra columns).
Fusion operators render as stacked lanes meeting at a fusion node.  The
HTML form is a single self-contained snippet: inline styles, hover
tooltips via title attributes, no scripts, byte-identical for equal input.
"""

import tempfile
from pathlib import Path

from flowrank import build_index, build_schematic, load_index, registry, render_html, render_text
from flowrank.dsl import elaborate, parse

CORPUS = [
    ("d1", "the quick brown fox"),
    ("d2", "the lazy dog"),
    ("d3", "quick quick fox"),
    ("d4", "brown dog barks"),
    ("d5", "fox jumps over the lazy dog"),
]
index_dir = tempfile.mkdtemp()
build_index(CORPUS, index_dir)
reg = registry(load_index(index_dir))

# A fusion of two retrieval branches feeding text loading, re-ranking, and
# answer extraction: two lanes, a join, then a straight chain down to an
# answer frame.
node = elaborate(parse("rrf(bm25, sdm >> wbm25) >> text_loader >> rescore >> answer"), reg)
graph = build_schematic(node, {"qid", "query"})

# The ASCII form is handy in terminals and stable enough to diff.
print(render_text(graph))

# The HTML form carries the same structure plus hover detail: box tooltips
# list transformer settings, badge tooltips list the full column set.
html = render_html(graph)
out = Path(tempfile.mkdtemp()) / "pipeline.html"
out.write_text(html, encoding="utf-8")
print("wrote", out)
print("boxes:", html.count("data-path="), " fusion nodes:", html.count("data-fusion="))

# Rendering the same graph twice yields byte-identical output.
assert render_html(graph) == html
