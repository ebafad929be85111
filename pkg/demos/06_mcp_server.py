"""Serving pipelines as tools over JSON-RPC (the MCP surface).

A registered pipeline becomes a callable tool: its input schema is derived
from inspection (a batch of {qid, query} objects) and its advertised output
columns come from the same static analysis.  Any HTTP client can then list
and call the tools; this script plays the client with urllib.
"""

import json
import tempfile
import urllib.request

from flowrank import ServerConfig, build_index, load_index, registry, serve
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

config = ServerConfig(
    port=0,  # pick a free port
    pipelines={
        "bm25": (elaborate(parse("bm25"), reg), "BM25 search over the demo corpus"),
        "qa": (
            elaborate(parse("rrf(bm25, sdm >> wbm25) >> text_loader >> rescore >> answer"), reg),
            "fusion retrieval with re-ranking and extractive answers",
        ),
    },
)

with serve(config) as server:
    print("serving on", server.url)

    def rpc(payload):
        req = urllib.request.Request(
            server.url, data=json.dumps(payload).encode(), headers={"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(req) as resp:
            return json.loads(resp.read())

    # 1. Handshake: the server names its protocol version and identity.
    init = rpc({"jsonrpc": "2.0", "id": 1, "method": "initialize"})
    print("protocol:", init["result"]["protocolVersion"])

    # 2. Discovery: every tool carries a description, an input schema, and the
    # column set it will return.
    tools = rpc({"jsonrpc": "2.0", "id": 2, "method": "tools/list"})["result"]["tools"]
    for tool in tools:
        print(f"  {tool['name']}: {tool['description']} -> {tool['outputColumns']}")

    # 3. Calling: a query batch comes back as flat JSON rows plus a
    # human-readable text rendering.
    call = rpc(
        {
            "jsonrpc": "2.0",
            "id": 3,
            "method": "tools/call",
            "params": {
                "name": "qa",
                "arguments": {"queries": [{"qid": "q1", "query": "quick fox"}]},
            },
        }
    )
    print("rows:", call["result"]["rows"])

    # Protocol errors are JSON-RPC errors, never dropped connections.
    unknown = rpc({"jsonrpc": "2.0", "id": 4, "method": "resources/list"})
    print("unknown method ->", unknown["error"]["code"])

print("server stopped")
