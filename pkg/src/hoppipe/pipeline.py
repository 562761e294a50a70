"""End-to-end orchestration of the three pipeline steps.

Per question: (1) score every sentence with the no-answer scorer variant;
(2) assemble the budget-packed QA context and decode an answer from span
logits; (3) rescore every sentence with the answer-conditioned variant
(the decoded answer travels verbatim, yes/no included) and select the
support set. Stage errors are recorded per question and the run continues.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .answer import SpanBackend, decode_answer
from .backends import ScorerBackend
from .context import assemble_qa_context
from .corpus import QuestionRecord
from .metrics import EvalReport, evaluate_predictions
from .scoring import ScoreCache, ScorerVariant, score_sentences
from .support import select_support
from .tokenization import Vocabulary

DEFAULT_TAU = -8.0


class FilterError(ValueError):
    pass


class PredictionError(ValueError):
    pass


@dataclass
class RunResult:
    answers: dict[str, str]
    supports: dict[str, list[tuple[str, int]]]
    report: EvalReport | None
    failures: dict[str, str]


def run_fullwiki_filter(record: QuestionRecord, tau: float = DEFAULT_TAU) -> QuestionRecord:
    """Drop paragraphs whose retrieval score falls below the threshold.

    Keeps paragraphs with score >= tau. Every paragraph must carry a score;
    an unscored paragraph is an error, distinct from one scored 0.0.
    """
    for para in record.paragraphs:
        if para.retrieval_score is None:
            raise FilterError(
                f"record {record.qid}: paragraph {para.title!r} has no "
                "retrieval score"
            )
    kept = tuple(p for p in record.paragraphs if p.retrieval_score >= tau)
    return replace(record, paragraphs=kept)


def run_pipeline(
    records: Sequence[QuestionRecord],
    scorer_backend: ScorerBackend,
    span_backend: SpanBackend,
    vocab: Vocabulary,
    cache: ScoreCache | None = None,
    max_span_len: int = 30,
) -> RunResult:
    """Run all three steps over validated records of either setting."""
    answers: dict[str, str] = {}
    supports: dict[str, list[tuple[str, int]]] = {}
    failures: dict[str, str] = {}

    for record in records:
        try:
            table_na = score_sentences(
                record, ScorerVariant.NO_ANSWER, scorer_backend, vocab, cache=cache
            )
            ctx = assemble_qa_context(record, table_na, vocab)
            logits = span_backend.span_logits(ctx)
            prediction = decode_answer(ctx, logits, max_span_len=max_span_len)
            answer_text = prediction.output_text()
            table_a = score_sentences(
                record,
                ScorerVariant.WITH_ANSWER,
                scorer_backend,
                vocab,
                answer=answer_text,
                cache=cache,
            )
            support = select_support(table_a)
        except Exception as e:  # per-question isolation is the contract here
            failures[record.qid] = f"{type(e).__name__}: {e}"
            continue
        answers[record.qid] = answer_text
        supports[record.qid] = [
            (record.paragraphs[r.paragraph_index].title, r.sentence_index)
            for r in sorted(support.members)
        ]

    report: EvalReport | None = None
    if records and all(r.has_gold for r in records):
        report = evaluate_predictions(records, answers, supports)
    return RunResult(
        answers=answers, supports=supports, report=report, failures=failures
    )


def predictions_json(
    answers: Mapping[str, str],
    supports: Mapping[str, Sequence[tuple[str, int]]],
) -> str:
    """The official prediction shape with stable key order, as a string."""
    if set(answers) != set(supports):
        only_a = sorted(set(answers) - set(supports))[:3]
        only_s = sorted(set(supports) - set(answers))[:3]
        raise PredictionError(
            f"answers and supports must cover the same qids "
            f"(answer-only {only_a}, support-only {only_s})"
        )
    payload = {
        "answer": {qid: answers[qid] for qid in sorted(answers)},
        "sp": {
            qid: [[t, i] for t, i in sorted(supports[qid])] for qid in sorted(supports)
        },
    }
    return json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n"


def write_predictions(
    answers: Mapping[str, str],
    supports: Mapping[str, Sequence[tuple[str, int]]],
    path: str | Path,
) -> None:
    Path(path).write_text(predictions_json(answers, supports), encoding="utf-8")


def collect_unique(pairs: Iterable[tuple[str, object]]) -> dict[str, object]:
    """Fold (qid, value) pairs into a dict, rejecting duplicate qids."""
    out: dict[str, object] = {}
    for qid, value in pairs:
        if qid in out:
            raise PredictionError(f"duplicate qid {qid!r}")
        out[qid] = value
    return out


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce a run byte-identically."""

    dataset_path: str
    dataset_sha256: str
    setting: str
    scorer_backend: str
    span_backend: str
    seed: int | None
    tau: float | None
    vocab_sha256: str
    max_span_len: int
    config: dict = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    created_at: str = ""

    def __post_init__(self) -> None:
        if not self.created_at:
            self.created_at = datetime.now(timezone.utc).isoformat()

    @property
    def config_sha256(self) -> str:
        blob = json.dumps(self.config, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_json(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "dataset_sha256": self.dataset_sha256,
            "setting": self.setting,
            "scorer_backend": self.scorer_backend,
            "span_backend": self.span_backend,
            "seed": self.seed,
            "tau": self.tau,
            "vocab_sha256": self.vocab_sha256,
            "max_span_len": self.max_span_len,
            "config": self.config,
            "config_sha256": self.config_sha256,
            "failures": dict(sorted(self.failures.items())),
            "created_at": self.created_at,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, ensure_ascii=False, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )


def vocab_fingerprint(vocab: Vocabulary) -> str:
    blob = "\n".join(vocab.tokens)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
