#!/usr/bin/env python3
"""Run the same benchmark with and without coreference rewriting.

The headline experiment: identical records, identical model, the only
difference being whether the context was rewritten first.

    python scripts/compare_modes.py --dataset data.jsonl \
        --endpoint http://localhost:8000/v1 --model my-model

Pass --mock to smoke-test the harness offline: a deterministic fake
model answers with the first sentence of the context.
"""

import argparse
import json
import sys
from pathlib import Path

from longcoref.config import LlmConfig, PipelineConfig
from longcoref.evaluation import load_dataset, run_benchmark
from longcoref.qa import MockChatClient


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dataset", required=True)
    ap.add_argument("--adapter", default="generic",
                    choices=["generic", "longbench", "leval", "loogle"])
    ap.add_argument("--endpoint")
    ap.add_argument("--model", default="gpt-4o-mini")
    ap.add_argument("--max-chunk-tokens", type=int, default=512)
    ap.add_argument("--threshold", type=float, default=0.9)
    ap.add_argument("--out-dir", default="runs")
    ap.add_argument("--mock", action="store_true", help="offline fake model")
    args = ap.parse_args()

    records = load_dataset(args.dataset, args.adapter)
    pipe = PipelineConfig(max_chunk_tokens=args.max_chunk_tokens, threshold=args.threshold)
    llm = LlmConfig(endpoint=args.endpoint or "http://mock.invalid", model=args.model,
                    api_key_env="" if args.mock else "LLM_API_KEY")

    client = None
    if args.mock:
        client = MockChatClient(
            lambda msgs: msgs[0]["content"].split("Context:\n", 1)[1].split(".", 1)[0]
        )
    elif not args.endpoint:
        sys.exit("--endpoint is required unless --mock is given")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for mode in ("vanilla", "rewrite"):
        report = run_benchmark(
            records, pipe, llm, mode,
            client=client,
            results_path=out_dir / f"{mode}.results.jsonl",
        )
        (out_dir / f"{mode}.report.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(report.table())
        print()


if __name__ == "__main__":
    main()
