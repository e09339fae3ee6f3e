"""Regenerate the golden provider request/response fixtures from the mock.

Run from the repo root:  python3 tools/gen_provider_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from exptrec.providers import MockProvider

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "providers"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    mock = MockProvider(embed_dim=64)

    embed_req = {"texts": ["graph pruning for LLM inference", "a a b"]}
    embed_vecs = mock.embed(embed_req["texts"])
    fixtures = {
        "embed": {
            "endpoint": "/embed",
            "request": embed_req,
            "response": {"dim": 64, "vectors": [[float(x) for x in row] for row in embed_vecs]},
        },
        "summarize": {
            "endpoint": "/summarize",
            "request": {
                "contexts": [
                    "We evaluate method-001 under the shared protocol.",
                    "We evaluate method-001 under the shared protocol.",
                    "Results on corpus-002 show consistent gains for method-001.",
                ]
            },
            "response": {
                "summary": mock.summarize(
                    [
                        "We evaluate method-001 under the shared protocol.",
                        "We evaluate method-001 under the shared protocol.",
                        "Results on corpus-002 show consistent gains for method-001.",
                    ]
                )
            },
        },
        "rerank": {
            "endpoint": "/rerank",
            "request": {
                "prompt": (
                    "You are ranking candidate baselines for a research idea.\n"
                    "Candidates (in retrieval order):\n"
                    "[1] id=b001 score=12.000000\n"
                    "    description: first candidate\n"
                    "    chains: none\n"
                    "[2] id=b002 score=11.000000\n"
                    "    description: second candidate\n"
                    "    chains: none\n"
                    "Finish with exactly one line of the form:\n"
                    "RANKING: id1 > id2 > ..."
                )
            },
        },
        "verify": {
            "endpoint": "/verify",
            "request": {
                "entity_id": "b001",
                "canonical_name": "method 001",
                "surface_form": "method-001",
                "context": "We evaluate method-001 under the shared protocol.",
            },
        },
    }
    rr = mock.rerank(fixtures["rerank"]["request"]["prompt"])
    fixtures["rerank"]["response"] = {"ranking": rr.ranking_line, "justification": rr.justification}
    fixtures["verify"]["response"] = {
        "approve": mock.verify(**fixtures["verify"]["request"])
    }

    for name, fixture in fixtures.items():
        path = OUT / f"{name}.json"
        path.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
