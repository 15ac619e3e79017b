"""Benchmark loading, QA metrics, and the evaluation runner.

Datasets are JSON lines; adapters map upstream field names onto
:class:`EvalRecord`.  Per-record results are persisted as JSON lines so
interrupted runs resume instead of re-querying the model.
"""

from __future__ import annotations

import json
import logging
import re
import string
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import LlmConfig, PipelineConfig
from .pipeline import rewrite_document
from .qa import ChatClient, PromptSpec, build_prompt, truncate_middle

log = logging.getLogger(__name__)

POSITION_BUCKETS = ((0.0, 0.2), (0.2, 0.4), (0.4, 0.6), (0.6, 0.8), (0.8, 1.0))


@dataclass
class EvalRecord:
    id: str
    context: str
    question: str
    gold_answers: list[str] = field(default_factory=list)
    choices: list[str] | None = None
    gold_letter: str | None = None
    answer_position_fraction: float | None = None

    def validate(self) -> "EvalRecord":
        if not self.question:
            raise ValueError("record has no question")
        if not self.gold_answers and not (self.choices and self.gold_letter):
            raise ValueError("record needs gold answers or choices with a gold letter")
        if self.answer_position_fraction is not None and not (
            0.0 <= self.answer_position_fraction <= 1.0
        ):
            raise ValueError("answer_position_fraction must be within [0, 1]")
        return self


# ---------------------------------------------------------------------------
# dataset adapters
# ---------------------------------------------------------------------------


def _adapt_generic(row: dict, line: int) -> list[EvalRecord]:
    return [
        EvalRecord(
            id=str(row.get("id", line)),
            context=row["context"],
            question=row["question"],
            gold_answers=[str(a) for a in row.get("gold_answers", [])],
            choices=list(row["choices"]) if row.get("choices") else None,
            gold_letter=row.get("gold_letter"),
            answer_position_fraction=row.get("answer_position_fraction"),
        ).validate()
    ]


def _adapt_longbench(row: dict, line: int) -> list[EvalRecord]:
    return [
        EvalRecord(
            id=str(row.get("_id", line)),
            context=row["context"],
            question=row["input"],
            gold_answers=[str(a) for a in row["answers"]],
            choices=list(row["all_classes"]) if row.get("all_classes") else None,
        ).validate()
    ]


def _adapt_leval(row: dict, line: int) -> list[EvalRecord]:
    records = []
    questions = row["instructions"]
    outputs = row["outputs"]
    options = row.get("options")
    for j, (question, answer) in enumerate(zip(questions, outputs)):
        answer = str(answer).strip()
        letter = answer.upper() if re.fullmatch(r"[A-Ea-e]", answer) else None
        records.append(
            EvalRecord(
                id=f"{row.get('id', line)}-{j}",
                context=row["input"],
                question=question,
                gold_answers=[answer],
                choices=list(options[j]) if options and options[j] else None,
                gold_letter=letter,
            ).validate()
        )
    return records


def _adapt_loogle(row: dict, line: int) -> list[EvalRecord]:
    context = row.get("input") or row.get("context")
    if context is None:
        raise ValueError("no context field")
    pairs = row.get("qa_pairs")
    if isinstance(pairs, str) and pairs not in ("", "none"):
        pairs = json.loads(pairs)
    if isinstance(pairs, list) and pairs:
        return [
            EvalRecord(
                id=f"{row.get('id', line)}-{j}",
                context=context,
                question=pair["Q"],
                gold_answers=[str(pair["A"])],
            ).validate()
            for j, pair in enumerate(pairs)
        ]
    return [
        EvalRecord(
            id=str(row.get("id", line)),
            context=context,
            question=row.get("question", "Summarize the document in a few sentences."),
            gold_answers=[str(row["output"])],
        ).validate()
    ]


ADAPTERS = {
    "generic": _adapt_generic,
    "longbench": _adapt_longbench,
    "leval": _adapt_leval,
    "loogle": _adapt_loogle,
}


def load_dataset(path: str | Path, adapter: str = "generic") -> list[EvalRecord]:
    """Load a JSON-lines file; malformed lines are logged and skipped."""
    if adapter not in ADAPTERS:
        raise ValueError(f"unknown adapter: {adapter!r} (have {sorted(ADAPTERS)})")
    adapt = ADAPTERS[adapter]
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"dataset not readable: {path}: {exc}") from exc
    records: list[EvalRecord] = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.extend(adapt(json.loads(line), line_no))
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("%s line %d skipped: %s", path, line_no, exc)
    if not records:
        raise ValueError(f"no valid records in {path}")
    return records


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def rouge_l(prediction: str, reference: str) -> float:
    """LCS-based F-measure over lowercased whitespace tokens."""
    pred = prediction.lower().split()
    ref = reference.lower().split()
    if not pred or not ref:
        return 0.0
    prev = [0] * (len(ref) + 1)
    for p_tok in pred:
        cur = [0] * (len(ref) + 1)
        for j, r_tok in enumerate(ref, start=1):
            cur[j] = prev[j - 1] + 1 if p_tok == r_tok else max(prev[j], cur[j - 1])
        prev = cur
    lcs = prev[len(ref)]
    if lcs == 0:
        return 0.0
    precision = lcs / len(pred)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


_ARTICLES = {"a", "an", "the"}
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def _normalize_answer(text: str) -> list[str]:
    tokens = text.casefold().translate(_PUNCT_TABLE).split()
    return [t for t in tokens if t not in _ARTICLES]


def qa_f1(prediction: str, golds: list[str]) -> float:
    """Max bag-of-token overlap F1 over the gold answers, after the usual
    reading-comprehension normalization (case, punctuation, articles)."""
    if not golds:
        raise ValueError("qa_f1 requires at least one gold answer")
    pred = _normalize_answer(prediction)
    best = 0.0
    for gold in golds:
        ref = _normalize_answer(gold)
        if not pred or not ref:
            best = max(best, 1.0 if pred == ref else 0.0)
            continue
        common = sum((Counter(pred) & Counter(ref)).values())
        if common == 0:
            continue
        precision = common / len(pred)
        recall = common / len(ref)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


_LETTER_RE = re.compile(r"\b([A-Ea-e])\b")


def choice_accuracy(
    prediction: str, gold_letter: str, choices: list[str]
) -> tuple[int, bool]:
    """Match the first standalone choice letter against the gold letter.

    Returns (score, parsed); no extractable letter scores 0 with
    parsed=False so unparsed responses can be audited.
    """
    if not choices:
        raise ValueError("choice_accuracy requires the choice list")
    valid = {chr(ord("A") + i) for i in range(len(choices))}
    for m in _LETTER_RE.finditer(prediction):
        letter = m.group(1).upper()
        if letter in valid:
            return int(letter == gold_letter.upper()), True
    return 0, False


# ---------------------------------------------------------------------------
# benchmark runner
# ---------------------------------------------------------------------------


@dataclass
class RecordResult:
    record_id: str
    prediction: str | None
    scores: dict[str, float]
    parsed: bool = True
    error: str | None = None
    answer_position_fraction: float | None = None

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "prediction": self.prediction,
            "scores": self.scores,
            "parsed": self.parsed,
            "error": self.error,
            "answer_position_fraction": self.answer_position_fraction,
        }


@dataclass
class MetricsReport:
    mode: str
    results: list[RecordResult]
    aggregates: dict[str, float]
    bucket_means: list[float | None] | None
    failed: int

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "aggregates": self.aggregates,
            "bucket_means": self.bucket_means,
            "failed": self.failed,
            "records": [r.to_json() for r in self.results],
        }

    def table(self) -> str:
        lines = [f"mode: {self.mode}   records: {len(self.results)}   failed: {self.failed}"]
        for name in sorted(self.aggregates):
            lines.append(f"  {name:<12} {self.aggregates[name]:.4f}")
        if self.bucket_means:
            cells = [
                f"[{lo:.1f},{hi:.1f}{']' if hi == 1.0 else ')'}="
                + ("-" if mean is None else f"{mean:.3f}")
                for (lo, hi), mean in zip(POSITION_BUCKETS, self.bucket_means)
            ]
            lines.append("  position buckets: " + "  ".join(cells))
        return "\n".join(lines)


def position_bucket(fraction: float) -> int:
    """Index of the five-way position bucket; 1.0 belongs to the last."""
    if not (0.0 <= fraction <= 1.0):
        raise ValueError("fraction must be within [0, 1]")
    return min(int(fraction / 0.2), 4)


def score_record(record: EvalRecord, prediction: str) -> tuple[dict[str, float], bool]:
    if record.choices and record.gold_letter:
        score, parsed = choice_accuracy(prediction, record.gold_letter, record.choices)
        return {"accuracy": float(score)}, parsed
    scores = {
        "rouge_l": max(rouge_l(prediction, g) for g in record.gold_answers),
        "f1": qa_f1(prediction, record.gold_answers),
    }
    return scores, True


def run_benchmark(
    records: list[EvalRecord],
    pipeline_config: PipelineConfig,
    llm_config: LlmConfig,
    mode: str = "rewrite",
    *,
    client=None,
    results_path: str | Path | None = None,
    parallelism: int = 1,
) -> MetricsReport:
    """Run QA over every record and aggregate metrics.

    ``mode``: ``rewrite`` runs the coreference pipeline on the context
    first; ``vanilla`` and ``cot`` pass the context through and differ in
    prompting.  When ``results_path`` is given, per-record results are
    appended there and records already present are skipped on resume.
    """
    if mode not in ("rewrite", "vanilla", "cot"):
        raise ValueError(f"unknown eval mode: {mode!r}")
    chat = client or ChatClient(llm_config)
    prompt_mode = "cot" if mode == "cot" else "vanilla"

    done: dict[str, RecordResult] = {}
    handle = None
    if results_path is not None:
        results_path = Path(results_path)
        if results_path.exists():
            for line in results_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                row = json.loads(line)
                done[row["record_id"]] = RecordResult(
                    record_id=row["record_id"],
                    prediction=row.get("prediction"),
                    scores=row.get("scores", {}),
                    parsed=row.get("parsed", True),
                    error=row.get("error"),
                    answer_position_fraction=row.get("answer_position_fraction"),
                )
        results_path.parent.mkdir(parents=True, exist_ok=True)
        handle = results_path.open("a", encoding="utf-8")

    def run_one(record: EvalRecord) -> RecordResult:
        try:
            context = record.context
            if mode == "rewrite":
                context = rewrite_document(context, pipeline_config).rewritten_text
            context = truncate_middle(context, llm_config.max_context_tokens)
            spec = PromptSpec(
                mode=prompt_mode,
                context=context,
                question=record.question,
                choices=tuple(record.choices) if record.choices else None,
            )
            prediction = chat.complete(build_prompt(spec))
            scores, parsed = score_record(record, prediction)
            return RecordResult(
                record_id=record.id,
                prediction=prediction,
                scores=scores,
                parsed=parsed,
                answer_position_fraction=record.answer_position_fraction,
            )
        except Exception as exc:  # noqa: BLE001 - keep the run going
            log.warning("record %s failed: %s", record.id, exc)
            return RecordResult(
                record_id=record.id,
                prediction=None,
                scores={},
                parsed=False,
                error=str(exc),
                answer_position_fraction=record.answer_position_fraction,
            )

    pending = [r for r in records if r.id not in done]
    if parallelism > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            fresh = list(pool.map(run_one, pending))
    else:
        fresh = [run_one(r) for r in pending]
    if handle is not None:
        for res in fresh:
            handle.write(json.dumps(res.to_json(), sort_keys=True) + "\n")
        handle.close()

    fresh_by_id = {res.record_id: res for res in fresh}
    results = [done.get(r.id) or fresh_by_id[r.id] for r in records]

    aggregates: dict[str, float] = {}
    counts: dict[str, int] = {}
    for res in results:
        for name, value in res.scores.items():
            aggregates[name] = aggregates.get(name, 0.0) + value
            counts[name] = counts.get(name, 0) + 1
    aggregates = {name: total / counts[name] for name, total in aggregates.items()}

    bucket_means: list[float | None] | None = None
    scored = [r for r in results if r.scores and r.answer_position_fraction is not None]
    if scored:
        primary = "accuracy" if all("accuracy" in r.scores for r in scored) else "f1"
        sums = [0.0] * 5
        nums = [0] * 5
        for res in scored:
            b = position_bucket(res.answer_position_fraction)
            sums[b] += res.scores.get(primary, 0.0)
            nums[b] += 1
        bucket_means = [sums[i] / nums[i] if nums[i] else None for i in range(5)]

    failed = sum(1 for r in results if r.error is not None)
    return MetricsReport(
        mode=mode,
        results=results,
        aggregates=aggregates,
        bucket_means=bucket_means,
        failed=failed,
    )
