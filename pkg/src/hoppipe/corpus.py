"""Loading, validation, and serialization of HotpotQA-format datasets.

The on-disk format is the official distribution format: a top-level JSON
array of objects with ``_id``, ``question``, ``context`` (list of
``[title, [sentence, ...]]`` pairs), and optionally ``answer`` and
``supporting_facts``. Fullwiki inputs may carry a per-paragraph retrieval
score, either inline as a third element of each context entry or through a
sidecar file mapping qid -> {title: score}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping


class Setting(str, Enum):
    DISTRACTOR = "distractor"
    FULLWIKI = "fullwiki"


class DatasetParseError(ValueError):
    """Input is not valid JSON; message carries the byte offset."""


class DatasetValidationError(ValueError):
    """Input parsed but violates the dataset schema or record invariants."""


@dataclass(frozen=True, order=True)
class SentenceRef:
    """Position of one sentence inside a record's paragraph list."""

    paragraph_index: int
    sentence_index: int


@dataclass(frozen=True)
class Paragraph:
    title: str
    sentences: tuple[str, ...]
    retrieval_score: float | None = None


@dataclass(frozen=True)
class QuestionRecord:
    qid: str
    question: str
    paragraphs: tuple[Paragraph, ...]
    setting: Setting
    gold_answer: str | None = None
    gold_support: frozenset[tuple[str, int]] | None = None

    @property
    def has_gold(self) -> bool:
        return self.gold_answer is not None and self.gold_support is not None

    def title_index(self) -> dict[str, int]:
        return {p.title: i for i, p in enumerate(self.paragraphs)}

    def sentence(self, ref: SentenceRef) -> str:
        return self.paragraphs[ref.paragraph_index].sentences[ref.sentence_index]

    def sentence_refs(self) -> list[SentenceRef]:
        """All (paragraph, sentence) positions in document order."""
        return [
            SentenceRef(p, s)
            for p, para in enumerate(self.paragraphs)
            for s in range(len(para.sentences))
        ]

    def gold_support_refs(self) -> frozenset[SentenceRef]:
        """Gold support as positional refs; requires gold_support present."""
        if self.gold_support is None:
            raise ValueError(f"record {self.qid} has no gold support")
        titles = self.title_index()
        return frozenset(
            SentenceRef(titles[title], idx) for title, idx in self.gold_support
        )


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


def validate_record(record: QuestionRecord) -> list[Violation]:
    """Check all QuestionRecord invariants; an empty list means valid."""
    violations: list[Violation] = []
    if not record.qid:
        violations.append(Violation("qid", "must be nonempty"))

    seen_titles: set[str] = set()
    for i, para in enumerate(record.paragraphs):
        if not para.title:
            violations.append(Violation(f"paragraphs[{i}].title", "must be nonempty"))
        if not para.sentences:
            violations.append(
                Violation(f"paragraphs[{i}].sentences", "must be nonempty")
            )
        if para.title in seen_titles:
            # The official format does not forbid this, but downstream title
            # lookup would be ambiguous; we refuse.
            violations.append(
                Violation(f"paragraphs[{i}].title", f"duplicate title {para.title!r}")
            )
        seen_titles.add(para.title)

    if record.gold_support is not None:
        titles = record.title_index()
        for title, idx in sorted(record.gold_support):
            if title not in titles:
                violations.append(
                    Violation(
                        "gold_support",
                        f"references missing title {title!r}",
                    )
                )
            elif not 0 <= idx < len(record.paragraphs[titles[title]].sentences):
                violations.append(
                    Violation(
                        "gold_support",
                        f"sentence index {idx} out of range for title {title!r}",
                    )
                )
        if record.setting is Setting.DISTRACTOR:
            support_titles = {title for title, _ in record.gold_support}
            if len(support_titles) != 2:
                violations.append(
                    Violation(
                        "gold_support",
                        "supporting facts must come from exactly two paragraphs, "
                        f"got {len(support_titles)}",
                    )
                )
            if record.has_gold and len(record.paragraphs) != 10:
                violations.append(
                    Violation(
                        "paragraphs",
                        f"distractor training records carry 10 paragraphs, "
                        f"got {len(record.paragraphs)}",
                    )
                )
    return violations


def _parse_paragraph(entry: Any, qid: str, pos: int) -> Paragraph:
    if (
        not isinstance(entry, list)
        or len(entry) not in (2, 3)
        or not isinstance(entry[0], str)
        or not isinstance(entry[1], list)
        or not all(isinstance(s, str) for s in entry[1])
    ):
        raise DatasetValidationError(
            f"record {qid!r}: context[{pos}] is not a [title, [sentence, ...]] pair"
        )
    score: float | None = None
    if len(entry) == 3:
        if not isinstance(entry[2], (int, float)) or isinstance(entry[2], bool):
            raise DatasetValidationError(
                f"record {qid!r}: context[{pos}] score must be a number"
            )
        score = float(entry[2])
    return Paragraph(title=entry[0], sentences=tuple(entry[1]), retrieval_score=score)


def _parse_record(
    entry: Any,
    setting: Setting,
    para_scores: Mapping[str, Mapping[str, float]] | None,
) -> QuestionRecord:
    if not isinstance(entry, dict):
        raise DatasetValidationError("dataset entries must be JSON objects")
    qid = entry.get("_id")
    if not isinstance(qid, str):
        raise DatasetValidationError(f"record with _id={qid!r}: _id must be a string")
    question = entry.get("question")
    if not isinstance(question, str):
        raise DatasetValidationError(f"record {qid!r}: question must be a string")
    context = entry.get("context")
    if not isinstance(context, list):
        raise DatasetValidationError(f"record {qid!r}: context must be a list")
    paragraphs = [_parse_paragraph(e, qid, i) for i, e in enumerate(context)]

    if para_scores is not None and qid in para_scores:
        by_title = para_scores[qid]
        paragraphs = [
            replace(p, retrieval_score=float(by_title[p.title]))
            if p.title in by_title
            else p
            for p in paragraphs
        ]

    answer = entry.get("answer")
    if answer is not None and not isinstance(answer, str):
        raise DatasetValidationError(f"record {qid!r}: answer must be a string")

    support: frozenset[tuple[str, int]] | None = None
    facts = entry.get("supporting_facts")
    if facts is not None:
        if not isinstance(facts, list):
            raise DatasetValidationError(
                f"record {qid!r}: supporting_facts must be a list"
            )
        pairs = []
        for fact in facts:
            if (
                not isinstance(fact, list)
                or len(fact) != 2
                or not isinstance(fact[0], str)
                or not isinstance(fact[1], int)
                or isinstance(fact[1], bool)
            ):
                raise DatasetValidationError(
                    f"record {qid!r}: supporting_facts entries must be "
                    "[title, sentence_index] pairs"
                )
            pairs.append((fact[0], fact[1]))
        support = frozenset(pairs)

    return QuestionRecord(
        qid=qid,
        question=question,
        paragraphs=tuple(paragraphs),
        setting=setting,
        gold_answer=answer,
        gold_support=support,
    )


def load_para_scores(path: str | Path) -> dict[str, dict[str, float]]:
    """Load a sidecar file mapping qid -> {title: retrieval score}."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise DatasetParseError(f"{path}: invalid JSON at byte {e.pos}: {e.msg}") from e
    if not isinstance(data, dict):
        raise DatasetValidationError(f"{path}: sidecar must map qid to title scores")
    out: dict[str, dict[str, float]] = {}
    for qid, by_title in data.items():
        if not isinstance(by_title, dict):
            raise DatasetValidationError(f"{path}: scores for {qid!r} must be a map")
        out[qid] = {t: float(v) for t, v in by_title.items()}
    return out


def load_dataset(
    path: str | Path,
    setting: Setting | str,
    para_scores: Mapping[str, Mapping[str, float]] | None = None,
) -> list[QuestionRecord]:
    """Load and validate a HotpotQA-format file; record order is preserved."""
    setting = Setting(setting)
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise DatasetParseError(f"{path}: invalid JSON at byte {e.pos}: {e.msg}") from e
    if not isinstance(data, list):
        raise DatasetValidationError(f"{path}: top level must be a JSON array")

    records: list[QuestionRecord] = []
    seen_qids: set[str] = set()
    for entry in data:
        record = _parse_record(entry, setting, para_scores)
        if record.qid in seen_qids:
            raise DatasetValidationError(f"duplicate qid {record.qid!r}")
        seen_qids.add(record.qid)
        violations = validate_record(record)
        if violations:
            raise DatasetValidationError(
                f"record {record.qid!r}: " + "; ".join(str(v) for v in violations)
            )
        records.append(record)
    return records


def record_to_json(record: QuestionRecord) -> dict[str, Any]:
    """Serialize one record back to the external format."""
    context = [
        [p.title, list(p.sentences)]
        if p.retrieval_score is None
        else [p.title, list(p.sentences), p.retrieval_score]
        for p in record.paragraphs
    ]
    out: dict[str, Any] = {
        "_id": record.qid,
        "question": record.question,
        "context": context,
    }
    if record.gold_answer is not None:
        out["answer"] = record.gold_answer
    if record.gold_support is not None:
        out["supporting_facts"] = [list(f) for f in sorted(record.gold_support)]
    return out


def dump_dataset(records: Iterable[QuestionRecord], path: str | Path) -> None:
    payload = [record_to_json(r) for r in records]
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8"
    )
