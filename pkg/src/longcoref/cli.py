"""Command-line entry point.

Subcommands: ``rewrite`` (coreference-rewrite a document), ``inspect``
(dump every intermediate as stable JSON), ``qa`` (rewrite then ask one
question), ``eval`` (run a benchmark file).  Exit codes: 0 ok, 2 config,
3 transport, 4 integrity.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import LlmConfig, PipelineConfig, load_config_file, merge_config
from .errors import ConfigError, LongcorefError
from .evaluation import load_dataset, run_benchmark
from .pipeline import analyze_document, rewrite_document
from .qa import ChatClient, PromptSpec, build_prompt, truncate_middle


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file ([pipeline]/[llm] sections)")
    p.add_argument("--max-chunk-tokens", type=int, dest="max_chunk_tokens")
    p.add_argument("--threshold", type=float)
    p.add_argument("--chunk-mode", choices=["sliding", "non_overlap"], dest="chunk_mode")
    p.add_argument("--resolver", choices=["builtin", "wire", "llm"])
    p.add_argument("--resolver-endpoint", dest="resolver_endpoint")
    p.add_argument("--tagger", choices=["builtin", "wire"])
    p.add_argument("--tagger-endpoint", dest="tagger_endpoint")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--retries", type=int)


def _add_llm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--endpoint", help="OpenAI-compatible base URL")
    p.add_argument("--model")
    p.add_argument("--max-context-tokens", type=int, dest="max_context_tokens")
    p.add_argument("--api-key-env", dest="api_key_env")
    p.add_argument("--prompt-mode", choices=["vanilla", "cot"], default="vanilla")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="longcoref")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rewrite = sub.add_parser("rewrite", help="rewrite mentions in a document")
    p_rewrite.add_argument("input", nargs="?", help="input file (default: stdin)")
    p_rewrite.add_argument("--out", help="output file (default: stdout)")
    p_rewrite.add_argument("--sidecar", help="write edits + offset map JSON here")
    _add_pipeline_flags(p_rewrite)

    p_inspect = sub.add_parser("inspect", help="dump pipeline intermediates as JSON")
    p_inspect.add_argument("input", nargs="?")
    p_inspect.add_argument("--out")
    _add_pipeline_flags(p_inspect)

    p_qa = sub.add_parser("qa", help="answer a question over a document")
    p_qa.add_argument("input", nargs="?")
    p_qa.add_argument("--question", required=True)
    p_qa.add_argument(
        "--mode", choices=["rewrite", "vanilla", "cot"], default="rewrite",
        help="rewrite = coreference rewriting first; vanilla/cot skip it",
    )
    p_qa.add_argument("--out")
    _add_pipeline_flags(p_qa)
    _add_llm_flags(p_qa)

    p_eval = sub.add_parser("eval", help="run a benchmark dataset")
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument(
        "--adapter", choices=["generic", "longbench", "leval", "loogle"], default="generic"
    )
    p_eval.add_argument("--mode", choices=["rewrite", "vanilla", "cot"], default="rewrite")
    p_eval.add_argument("--out", help="report JSON path")
    p_eval.add_argument("--results", help="per-record results JSONL (enables resume)")
    _add_pipeline_flags(p_eval)
    _add_llm_flags(p_eval)

    return parser


def _configs(args: argparse.Namespace) -> tuple[PipelineConfig, LlmConfig]:
    file_pipe: dict = {}
    file_llm: dict = {}
    if getattr(args, "config", None):
        file_pipe, file_llm = load_config_file(args.config)
    pipe_flags = {
        k: getattr(args, k, None)
        for k in (
            "max_chunk_tokens",
            "threshold",
            "chunk_mode",
            "resolver",
            "resolver_endpoint",
            "tagger",
            "tagger_endpoint",
            "parallelism",
            "timeout",
            "retries",
        )
    }
    llm_flags = {
        k: getattr(args, k, None)
        for k in ("endpoint", "model", "max_context_tokens", "api_key_env")
    }
    pipeline = merge_config(PipelineConfig, file_pipe, pipe_flags).validate()
    llm = merge_config(LlmConfig, file_llm, llm_flags)
    return pipeline, llm


def _read_input(path: str | None) -> str:
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read input: {exc}") from exc
    return sys.stdin.read()


def _write_output(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _span(pair) -> list[int]:
    return [pair[0], pair[1]]


def _inspect_payload(result) -> dict:
    return {
        "sentences": [
            {"index": s.index, "start": s.start, "end": s.end, "token_count": s.token_count}
            for s in result.sentences
        ],
        "chunks": [
            {
                "index": c.index,
                "sentences": list(c.sentences),
                "start": c.start,
                "end": c.end,
                "token_count": c.token_count,
                "hard_split": c.hard_split,
            }
            for c in result.chunks
        ],
        "mentions": [
            {"span": _span(m.id), "surface": m.surface, "occurrences": m.occurrences}
            for m in result.mentions
        ],
        "pair_stats": [
            {"a": _span(p[0]), "b": _span(p[1]), "s": st.s, "t": st.t}
            for p, st in sorted(result.pair_stats.items())
        ],
        "distances": [
            {"a": _span(p[0]), "b": _span(p[1]), "d": e.d, "provenance": e.provenance}
            for p, e in sorted(result.distances.items())
        ],
        "graph": {
            "nodes": [_span(n) for n in result.graph.nodes],
            "edges": [[_span(a), _span(b)] for a, b in result.graph.edges],
        }
        if result.graph
        else {"nodes": [], "edges": []},
        "clusters": [
            {
                "members": [_span(m) for m in c.members],
                "representative": _span(c.representative) if c.representative else None,
            }
            for c in result.clusters
        ],
    }


def cmd_rewrite(args: argparse.Namespace) -> int:
    pipeline_config, _ = _configs(args)
    text = _read_input(args.input)
    result = rewrite_document(text, pipeline_config)
    _write_output(result.rewritten_text, args.out)
    if args.sidecar:
        payload = {
            "applied": result.rewrite.applied,
            "dropped": result.rewrite.dropped,
            "edits": [
                {
                    "start": e.start,
                    "end": e.end,
                    "replacement": e.replacement,
                    "cluster_index": e.cluster_index,
                }
                for e in result.edits
            ],
            "offset_map": result.rewrite.offset_map.to_jsonable(),
        }
        with open(args.sidecar, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    pipeline_config, _ = _configs(args)
    text = _read_input(args.input)
    result = analyze_document(text, pipeline_config)
    _write_output(json.dumps(_inspect_payload(result), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_qa(args: argparse.Namespace) -> int:
    pipeline_config, llm_config = _configs(args)
    llm_config.validate()
    llm_config.api_key()  # fail before any network or pipeline work
    text = _read_input(args.input)
    context = text
    if args.mode == "rewrite":
        context = rewrite_document(text, pipeline_config).rewritten_text
    prompt_mode = "cot" if args.mode == "cot" else args.prompt_mode
    spec = PromptSpec(
        mode=prompt_mode,
        context=truncate_middle(context, llm_config.max_context_tokens),
        question=args.question,
    )
    answer = ChatClient(llm_config).complete(build_prompt(spec))
    _write_output(answer + "\n", args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    pipeline_config, llm_config = _configs(args)
    llm_config.validate()
    llm_config.api_key()
    try:
        records = load_dataset(args.dataset, args.adapter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = run_benchmark(
        records,
        pipeline_config,
        llm_config,
        args.mode,
        results_path=args.results,
        parallelism=pipeline_config.parallelism,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.stdout.write(report.table() + "\n")
    return 0


_COMMANDS = {
    "rewrite": cmd_rewrite,
    "inspect": cmd_inspect,
    "qa": cmd_qa,
    "eval": cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except LongcorefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
