"""Independent per-sentence relevance scoring and training-set construction.

Every sentence of every paragraph is scored on its own: the encoded input
never contains material from any other paragraph, so permuting or editing
other paragraphs cannot change a sentence's logit. Scores are cached on
disk keyed by a content hash of everything the logit may depend on.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence

from .backends import ScoreRequest, ScorerBackend, BackendProtocolError
from .backends import lexical_overlap_score  # re-exported; part of this module's API
from .corpus import QuestionRecord, SentenceRef
from .tokenization import TAG_PARAGRAPH, TokenSequence, Vocabulary, encode_scoring_input

__all__ = [
    "ScorerVariant",
    "SentenceScore",
    "ScoreTable",
    "ScoreCache",
    "score_sentences",
    "lexical_overlap_score",
    "TrainingInstance",
    "TrainingBatch",
    "build_training_instances",
    "pack_training_batches",
    "write_score_tables",
    "read_score_tables",
    "write_training_instances",
]

BATCH_TOKEN_CAP = 5625
QUESTIONS_PER_BATCH = 3


class ScorerVariant(str, Enum):
    NO_ANSWER = "na"  # answer slot holds a single mask token
    WITH_ANSWER = "a"  # answer slot carries an answer string


@dataclass(frozen=True)
class SentenceScore:
    ref: SentenceRef
    logit: float


@dataclass
class ScoreTable:
    """One finite logit per (paragraph, sentence) of a question's paragraphs."""

    qid: str
    variant: ScorerVariant
    scores: dict[SentenceRef, float]

    def __post_init__(self) -> None:
        for ref, logit in self.scores.items():
            if not math.isfinite(logit):
                raise ValueError(f"non-finite logit for {ref}: {logit!r}")

    def __len__(self) -> int:
        return len(self.scores)

    def logit(self, ref: SentenceRef) -> float:
        return self.scores[ref]

    def paragraph_indices(self) -> list[int]:
        return sorted({ref.paragraph_index for ref in self.scores})

    def paragraph_logits(self, paragraph_index: int) -> list[float]:
        """Logits of one paragraph in sentence order."""
        refs = sorted(
            (r for r in self.scores if r.paragraph_index == paragraph_index),
            key=lambda r: r.sentence_index,
        )
        return [self.scores[r] for r in refs]

    def rows(self) -> list[SentenceScore]:
        return [SentenceScore(ref, self.scores[ref]) for ref in sorted(self.scores)]


def _content_key(
    backend_name: str,
    variant: ScorerVariant,
    record: QuestionRecord,
    answer: str | None,
) -> str:
    payload = json.dumps(
        {
            "backend": backend_name,
            "variant": variant.value,
            "question": record.question,
            "answer": answer,
            "paragraphs": [[p.title, list(p.sentences)] for p in record.paragraphs],
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ScoreCache:
    """Content-addressed score store; one JSON-lines file per table.

    Row format: {"qid":…, "variant":…, "paragraph":…, "sentence":…, "logit":…}.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.jsonl"

    def load(self, key: str) -> dict[SentenceRef, float] | None:
        path = self._path(key)
        if not path.exists():
            return None
        scores: dict[SentenceRef, float] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            scores[SentenceRef(row["paragraph"], row["sentence"])] = float(row["logit"])
        return scores

    def store(self, key: str, table: ScoreTable) -> None:
        lines = [
            json.dumps(
                {
                    "qid": table.qid,
                    "variant": table.variant.value,
                    "paragraph": s.ref.paragraph_index,
                    "sentence": s.ref.sentence_index,
                    "logit": s.logit,
                },
                ensure_ascii=False,
            )
            for s in table.rows()
        ]
        self._path(key).write_text("\n".join(lines) + "\n", encoding="utf-8")


def score_sentences(
    record: QuestionRecord,
    variant: ScorerVariant,
    backend: ScorerBackend,
    vocab: Vocabulary,
    answer: str | None = None,
    cache: ScoreCache | None = None,
) -> ScoreTable:
    """Score every sentence of every paragraph independently.

    ``variant`` selects the answer slot: NO_ANSWER masks it, WITH_ANSWER
    requires ``answer``. On a cache hit no backend call is made.
    """
    if variant is ScorerVariant.WITH_ANSWER and answer is None:
        raise ValueError("WITH_ANSWER scoring requires an answer")
    slot = None if variant is ScorerVariant.NO_ANSWER else answer

    refs = record.sentence_refs()
    key = _content_key(backend.name, variant, record, slot) if cache else None
    if cache is not None and key is not None:
        cached = cache.load(key)
        if cached is not None and set(cached) == set(refs):
            return ScoreTable(qid=record.qid, variant=variant, scores=cached)

    requests: list[ScoreRequest] = []
    for ref in refs:
        para = record.paragraphs[ref.paragraph_index]
        encoded = encode_scoring_input(record.question, para, ref, slot, vocab)
        para_positions = [
            i for i, tag in enumerate(encoded.source) if tag.kind == TAG_PARAGRAPH
        ]
        requests.append(
            ScoreRequest(
                request_id=f"{record.qid}:{variant.value}:"
                f"{ref.paragraph_index}:{ref.sentence_index}",
                question=record.question,
                answer=slot,
                sentence_text=record.sentence(ref),
                paragraph_tokens=tuple(encoded.token_ids[i] for i in para_positions),
                segment_ids=tuple(encoded.segment_ids[i] for i in para_positions),
            )
        )

    logits = backend.score_batch(requests)
    if len(logits) != len(requests):
        raise BackendProtocolError(
            f"backend returned {len(logits)} logits for {len(requests)} requests"
        )
    for logit in logits:
        if not math.isfinite(logit):
            raise BackendProtocolError(f"backend returned non-finite logit {logit!r}")

    table = ScoreTable(
        qid=record.qid, variant=variant, scores=dict(zip(refs, map(float, logits)))
    )
    if cache is not None and key is not None:
        cache.store(key, table)
    return table


@dataclass(frozen=True)
class TrainingInstance:
    encoded: TokenSequence
    positive: bool
    qid: str
    ref: SentenceRef


def build_training_instances(
    record: QuestionRecord,
    variant: ScorerVariant,
    vocab: Vocabulary,
    rng_seed: int,
) -> list[TrainingInstance]:
    """One instance per sentence of the 2 gold paragraphs plus 2 sampled ones.

    Positives are exactly the gold support sentences. The two extra
    paragraphs are drawn without replacement from the non-gold paragraphs by
    a generator seeded with ``rng_seed``; instances whose target sentence
    does not survive truncation are dropped.
    """
    if not record.has_gold:
        raise ValueError(f"record {record.qid} lacks gold answer/support")
    gold_refs = record.gold_support_refs()
    gold_paragraphs = sorted({r.paragraph_index for r in gold_refs})
    non_gold = [
        i for i in range(len(record.paragraphs)) if i not in set(gold_paragraphs)
    ]
    if len(non_gold) < 2:
        raise ValueError(
            f"record {record.qid}: need at least 2 non-gold paragraphs to sample"
        )
    rng = random.Random(rng_seed)
    sampled = rng.sample(non_gold, 2)
    pool = sorted(set(gold_paragraphs) | set(sampled))

    slot = record.gold_answer if variant is ScorerVariant.WITH_ANSWER else None
    instances: list[TrainingInstance] = []
    for p_idx in pool:
        para = record.paragraphs[p_idx]
        for s_idx in range(len(para.sentences)):
            ref = SentenceRef(p_idx, s_idx)
            encoded = encode_scoring_input(record.question, para, ref, slot, vocab)
            if encoded.target_truncated:
                continue
            instances.append(
                TrainingInstance(
                    encoded=encoded,
                    positive=ref in gold_refs,
                    qid=record.qid,
                    ref=ref,
                )
            )
    return instances


@dataclass(frozen=True)
class TrainingBatch:
    qids: tuple[str, ...]
    instances: tuple[TrainingInstance, ...]
    dropped: tuple[TrainingInstance, ...]

    @property
    def token_count(self) -> int:
        return sum(len(inst.encoded) for inst in self.instances)


def pack_training_batches(
    instances: Iterable[TrainingInstance],
    rng_seed: int,
    token_cap: int = BATCH_TOKEN_CAP,
    questions_per_batch: int = QUESTIONS_PER_BATCH,
) -> list[TrainingBatch]:
    """Batch at the question level: all instances of 3 questions per batch.

    The final batch may hold fewer questions. A batch exceeding the token
    cap sheds instances uniformly at random (seeded) until it fits; dropped
    instances are reported on the batch.
    """
    groups: list[tuple[str, list[TrainingInstance]]] = [
        (qid, list(batch)) for qid, batch in groupby(instances, key=lambda i: i.qid)
    ]
    rng = random.Random(rng_seed)
    batches: list[TrainingBatch] = []
    for i in range(0, len(groups), questions_per_batch):
        chunk = groups[i : i + questions_per_batch]
        kept = [inst for _, insts in chunk for inst in insts]
        for inst in kept:
            assert len(inst.encoded) <= token_cap, "instance exceeds the batch cap"
        dropped: list[TrainingInstance] = []
        while sum(len(inst.encoded) for inst in kept) > token_cap:
            dropped.append(kept.pop(rng.randrange(len(kept))))
        batches.append(
            TrainingBatch(
                qids=tuple(qid for qid, _ in chunk),
                instances=tuple(kept),
                dropped=tuple(dropped),
            )
        )
    return batches


def write_score_tables(tables: Iterable[ScoreTable], path: str | Path) -> None:
    """Persist tables as JSON-lines in the score-cache row format."""
    lines = []
    for table in tables:
        for s in table.rows():
            lines.append(
                json.dumps(
                    {
                        "qid": table.qid,
                        "variant": table.variant.value,
                        "paragraph": s.ref.paragraph_index,
                        "sentence": s.ref.sentence_index,
                        "logit": s.logit,
                    },
                    ensure_ascii=False,
                )
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_score_tables(path: str | Path) -> dict[str, ScoreTable]:
    """Load tables keyed by qid from a JSON-lines score file."""
    rows_by_qid: dict[str, tuple[ScorerVariant, dict[SentenceRef, float]]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        variant = ScorerVariant(row["variant"])
        entry = rows_by_qid.setdefault(row["qid"], (variant, {}))
        if entry[0] is not variant:
            raise ValueError(f"qid {row['qid']!r} mixes scorer variants")
        entry[1][SentenceRef(row["paragraph"], row["sentence"])] = float(row["logit"])
    return {
        qid: ScoreTable(qid=qid, variant=variant, scores=scores)
        for qid, (variant, scores) in rows_by_qid.items()
    }


def write_training_instances(
    batches: Sequence[TrainingBatch],
    variant: ScorerVariant,
    path: str | Path,
) -> None:
    """Instance file for the trainer: one JSON line per kept instance."""
    lines = []
    for b_idx, batch in enumerate(batches):
        for inst in batch.instances:
            lines.append(
                json.dumps(
                    {
                        "batch": b_idx,
                        "qid": inst.qid,
                        "paragraph": inst.ref.paragraph_index,
                        "sentence": inst.ref.sentence_index,
                        "label": 1 if inst.positive else 0,
                        "variant": variant.value,
                        "token_ids": list(inst.encoded.token_ids),
                        "segment_ids": list(inst.encoded.segment_ids),
                    },
                    ensure_ascii=False,
                )
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
