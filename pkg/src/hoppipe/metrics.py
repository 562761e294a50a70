"""Answer, support, and joint EM/F1, plus sentence-coverage statistics.

Answer normalization follows the standard QA evaluation convention:
lowercase, strip punctuation, drop the articles a/an/the, collapse
whitespace. Answer F1 is token-multiset overlap of the normalized strings;
support F1 is set precision/recall over (title, sentence index) pairs; the
joint metric multiplies the component precisions and recalls. Yes/no
answers are scored as ordinary strings.
"""

from __future__ import annotations

import json
import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import QuestionRecord, SentenceRef
from .scoring import ScoreTable

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


@dataclass(frozen=True)
class AnswerScores:
    em: float
    f1: float
    precision: float
    recall: float


@dataclass(frozen=True)
class SupportScores:
    em: float
    f1: float
    precision: float
    recall: float


@dataclass(frozen=True)
class JointScores:
    em: float
    f1: float
    precision: float
    recall: float


def answer_scores(pred: str, gold: str) -> AnswerScores:
    pred_norm = normalize_answer(pred)
    gold_norm = normalize_answer(gold)
    em = 1.0 if pred_norm == gold_norm else 0.0

    pred_tokens = pred_norm.split()
    gold_tokens = gold_norm.split()
    if not pred_tokens and not gold_tokens:
        return AnswerScores(em=1.0, f1=1.0, precision=1.0, recall=1.0)
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return AnswerScores(em=em, f1=0.0, precision=0.0, recall=0.0)
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    f1 = 2 * precision * recall / (precision + recall)
    return AnswerScores(em=em, f1=f1, precision=precision, recall=recall)


def support_scores(
    pred: Iterable[tuple[str, int]], gold: Iterable[tuple[str, int]]
) -> SupportScores:
    pred_set = {(t, i) for t, i in pred}
    gold_set = {(t, i) for t, i in gold}
    em = 1.0 if pred_set == gold_set else 0.0
    inter = len(pred_set & gold_set)
    precision = inter / len(pred_set) if pred_set else 0.0
    recall = inter / len(gold_set) if gold_set else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return SupportScores(em=em, f1=f1, precision=precision, recall=recall)


def joint_scores(ans: AnswerScores, sup: SupportScores) -> JointScores:
    precision = ans.precision * sup.precision
    recall = ans.recall * sup.recall
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return JointScores(em=ans.em * sup.em, f1=f1, precision=precision, recall=recall)


def coverage_rank(table: ScoreTable, gold: Iterable[SentenceRef]) -> int:
    """How many sentences score at least as high as the weakest gold sentence.

    Ties count in: this is the number of top-scoring sentences one must keep
    to guarantee all gold support is included.
    """
    gold = list(gold)
    if not gold:
        raise ValueError("gold support must be nonempty")
    missing = [r for r in gold if r not in table.scores]
    if missing:
        raise ValueError(f"gold sentence {missing[0]} missing from score table")
    floor = min(table.scores[r] for r in gold)
    return sum(1 for v in table.scores.values() if v >= floor)


def top_n_at(ranks: Sequence[int], fraction: float) -> int:
    """Smallest n whose top-n sentences cover the given fraction of questions."""
    if not ranks:
        raise ValueError("ranks must be nonempty")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    ordered = sorted(ranks)
    # Slack of 1e-9 keeps decimal fractions like 0.9 exact under binary floats.
    needed = max(1, math.ceil(fraction * len(ordered) - 1e-9))
    return ordered[needed - 1]


@dataclass(frozen=True)
class QuestionEval:
    qid: str
    answer: AnswerScores
    support: SupportScores
    joint: JointScores
    missing_answer: bool
    missing_support: bool


@dataclass(frozen=True)
class EvalReport:
    ans_em: float
    ans_f1: float
    sup_em: float
    sup_f1: float
    joint_em: float
    joint_f1: float
    per_question: tuple[QuestionEval, ...]

    def to_json(self) -> dict:
        return {
            "ans_em": self.ans_em,
            "ans_f1": self.ans_f1,
            "sup_em": self.sup_em,
            "sup_f1": self.sup_f1,
            "joint_em": self.joint_em,
            "joint_f1": self.joint_f1,
            "per_question": [
                {
                    "qid": q.qid,
                    "ans_em": q.answer.em,
                    "ans_f1": q.answer.f1,
                    "sup_em": q.support.em,
                    "sup_f1": q.support.f1,
                    "joint_em": q.joint.em,
                    "joint_f1": q.joint.f1,
                    "missing_answer": q.missing_answer,
                    "missing_support": q.missing_support,
                }
                for q in self.per_question
            ],
        }


def evaluate_predictions(
    records: Sequence[QuestionRecord],
    answers: Mapping[str, str],
    supports: Mapping[str, Sequence[tuple[str, int]]],
) -> EvalReport:
    """Score predictions against gold; a missing prediction scores zero."""
    rows: list[QuestionEval] = []
    for record in records:
        if not record.has_gold:
            raise ValueError(f"record {record.qid} lacks gold labels")
        assert record.gold_answer is not None and record.gold_support is not None
        missing_answer = record.qid not in answers
        missing_support = record.qid not in supports
        ans = answer_scores(answers.get(record.qid, ""), record.gold_answer)
        if missing_answer:
            ans = AnswerScores(em=0.0, f1=0.0, precision=0.0, recall=0.0)
        sup = support_scores(
            [(t, i) for t, i in supports.get(record.qid, [])], record.gold_support
        )
        rows.append(
            QuestionEval(
                qid=record.qid,
                answer=ans,
                support=sup,
                joint=joint_scores(ans, sup),
                missing_answer=missing_answer,
                missing_support=missing_support,
            )
        )
    n = len(rows)
    if n == 0:
        raise ValueError("no records to evaluate")
    return EvalReport(
        ans_em=sum(r.answer.em for r in rows) / n,
        ans_f1=sum(r.answer.f1 for r in rows) / n,
        sup_em=sum(r.support.em for r in rows) / n,
        sup_f1=sum(r.support.f1 for r in rows) / n,
        joint_em=sum(r.joint.em for r in rows) / n,
        joint_f1=sum(r.joint.f1 for r in rows) / n,
        per_question=tuple(rows),
    )


@dataclass(frozen=True)
class CoverageReport:
    """Per-question coverage ranks from one scorer variant's tables."""

    ranks: dict[str, int]

    def top_n_at(self, fraction: float) -> int:
        return top_n_at(list(self.ranks.values()), fraction)

    def to_json(self, fraction: float) -> dict:
        return {
            "fraction": fraction,
            "top_n": self.top_n_at(fraction),
            "ranks": dict(sorted(self.ranks.items())),
        }


def coverage_report(
    records: Sequence[QuestionRecord], tables: Mapping[str, ScoreTable]
) -> CoverageReport:
    ranks: dict[str, int] = {}
    for record in records:
        if record.gold_support is None:
            raise ValueError(f"record {record.qid} lacks gold support")
        table = tables.get(record.qid)
        if table is None:
            raise ValueError(f"no score table for qid {record.qid}")
        ranks[record.qid] = coverage_rank(table, record.gold_support_refs())
    return CoverageReport(ranks=ranks)


def load_predictions(
    path: str | Path,
) -> tuple[dict[str, str], dict[str, list[tuple[str, int]]]]:
    """Read the official prediction shape {"answer": {...}, "sp": {...}}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict) or "answer" not in data or "sp" not in data:
        raise ValueError(f"{path}: prediction file must carry 'answer' and 'sp' keys")
    answers = {str(k): str(v) for k, v in data["answer"].items()}
    supports = {
        str(k): [(str(t), int(i)) for t, i in v] for k, v in data["sp"].items()
    }
    return answers, supports
