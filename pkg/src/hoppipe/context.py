"""Assembly of the QA context fed to span prediction.

Sentences are admitted greedily by descending relevance logit under a 508
word-piece budget that includes the question. The first sentence admitted
from a paragraph also pulls in that paragraph's title (wrapped in <t></t>
markers) and first sentence, so the span model keeps co-referential
anchors. Paragraphs are laid out in descending order of their best scored
sentence; within a paragraph, sentences keep document order. The sequence
ends with a separator and the three answer tokens yes / no / noans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import QuestionRecord, SentenceRef
from .scoring import ScoreTable
from .tokenization import (
    MAX_SEQUENCE_LENGTH,
    NOANS_TOKEN,
    NO_TOKEN,
    TITLE_CLOSE,
    TITLE_OPEN,
    YES_TOKEN,
    TokenSequence,
    TokenTag,
    Vocabulary,
    tokenize_with_offsets,
)

CONTEXT_BUDGET = 508  # question + body word-pieces; the 4-token tail sits on top


class ContextAssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class CharSpan:
    """Back-reference from one token to a span of its source string."""

    source_key: tuple
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class QAContext:
    qid: str
    question: str
    tokens: TokenSequence
    selected: frozenset[SentenceRef]
    paragraph_order: tuple[int, ...]
    char_map: tuple[CharSpan | None, ...]

    def __post_init__(self) -> None:
        if len(self.char_map) != len(self.tokens):
            raise ValueError("char_map must align with tokens")

    @property
    def yes_index(self) -> int:
        return len(self.tokens) - 3

    @property
    def no_index(self) -> int:
        return len(self.tokens) - 2

    @property
    def noans_index(self) -> int:
        return len(self.tokens) - 1


def _tail_ids(vocab: Vocabulary) -> tuple[int, int, int]:
    missing = [t for t in (YES_TOKEN, NO_TOKEN, NOANS_TOKEN) if t not in vocab]
    if missing:
        raise ContextAssemblyError(
            f"vocab lacks answer tail tokens {missing}; add them to the vocab file"
        )
    return (vocab.id_of(YES_TOKEN), vocab.id_of(NO_TOKEN), vocab.id_of(NOANS_TOKEN))


def _marker_ids(vocab: Vocabulary, marker: str) -> list[int]:
    # Title markers are single vocab tokens when available, else literal text.
    if marker in vocab:
        return [vocab.id_of(marker)]
    ids, _ = tokenize_with_offsets(marker, vocab)
    return ids


def assemble_qa_context(
    record: QuestionRecord,
    table: ScoreTable,
    vocab: Vocabulary,
) -> QAContext:
    """Greedy budget-packed context construction from a no-answer score table."""
    if not table.scores:
        raise ContextAssemblyError(f"record {record.qid}: empty score table")
    refs = record.sentence_refs()
    missing = [r for r in refs if r not in table.scores]
    if missing:
        raise ContextAssemblyError(
            f"record {record.qid}: score table missing {missing[0]} "
            f"(+{len(missing) - 1} more)"
        )

    q_ids, q_spans = tokenize_with_offsets(record.question, vocab)
    fixed_cost = 1 + len(q_ids) + 1  # [CLS] question [SEP]
    if fixed_cost > CONTEXT_BUDGET:
        raise ContextAssemblyError(
            f"record {record.qid}: question alone is {len(q_ids)} word-pieces; "
            f"it cannot fit the {CONTEXT_BUDGET}-piece budget"
        )

    open_ids = _marker_ids(vocab, TITLE_OPEN)
    close_ids = _marker_ids(vocab, TITLE_CLOSE)
    sent_tokens: dict[SentenceRef, tuple[list[int], list[tuple[int, int]]]] = {}
    title_tokens: dict[int, tuple[list[int], list[tuple[int, int]]]] = {}
    for p_idx, para in enumerate(record.paragraphs):
        title_tokens[p_idx] = tokenize_with_offsets(para.title, vocab)
        for s_idx, sentence in enumerate(para.sentences):
            sent_tokens[SentenceRef(p_idx, s_idx)] = tokenize_with_offsets(
                sentence, vocab
            )

    def title_cost(p_idx: int) -> int:
        return len(open_ids) + len(title_tokens[p_idx][0]) + len(close_ids)

    candidates = sorted(
        refs,
        key=lambda r: (-table.scores[r], r.paragraph_index, r.sentence_index),
    )

    used = fixed_cost
    selected: set[SentenceRef] = set()
    scored: set[SentenceRef] = set()
    represented: set[int] = set()
    for ref in candidates:
        if ref in selected:
            # Already present as an induced first sentence: admitting it by
            # score is free but still counts toward paragraph ordering.
            scored.add(ref)
            continue
        cost = len(sent_tokens[ref][0])
        first_ref = SentenceRef(ref.paragraph_index, 0)
        if ref.paragraph_index not in represented:
            cost += title_cost(ref.paragraph_index)
            if ref != first_ref:
                cost += len(sent_tokens[first_ref][0])
        if used + cost > CONTEXT_BUDGET:
            break  # stop at the first overflowing candidate
        used += cost
        selected.add(ref)
        scored.add(ref)
        if ref.paragraph_index not in represented:
            represented.add(ref.paragraph_index)
            selected.add(first_ref)

    def best_logit(p_idx: int) -> float:
        return max(
            table.scores[r] for r in scored if r.paragraph_index == p_idx
        )

    paragraph_order = tuple(
        sorted(represented, key=lambda p: (-best_logit(p), p))
    )

    ids: list[int] = [vocab.cls_id]
    tags: list[TokenTag] = [TokenTag.special()]
    char_map: list[CharSpan | None] = [None]
    for tid, span in zip(q_ids, q_spans):
        ids.append(tid)
        tags.append(TokenTag.question())
        char_map.append(CharSpan(("question",), record.question, span[0], span[1]))
    ids.append(vocab.sep_id)
    tags.append(TokenTag.special())
    char_map.append(None)

    for p_idx in paragraph_order:
        para = record.paragraphs[p_idx]
        for tid in open_ids:
            ids.append(tid)
            tags.append(TokenTag.special())
            char_map.append(None)
        t_ids, t_spans = title_tokens[p_idx]
        for tid, span in zip(t_ids, t_spans):
            ids.append(tid)
            tags.append(TokenTag.title(p_idx))
            char_map.append(CharSpan(("title", p_idx), para.title, span[0], span[1]))
        for tid in close_ids:
            ids.append(tid)
            tags.append(TokenTag.special())
            char_map.append(None)
        for ref in sorted(r for r in selected if r.paragraph_index == p_idx):
            s_ids, s_spans = sent_tokens[ref]
            sentence = para.sentences[ref.sentence_index]
            for tid, span in zip(s_ids, s_spans):
                ids.append(tid)
                tags.append(TokenTag.sentence(p_idx, ref.sentence_index))
                char_map.append(
                    CharSpan(
                        ("sentence", p_idx, ref.sentence_index),
                        sentence,
                        span[0],
                        span[1],
                    )
                )

    yes_id, no_id, noans_id = _tail_ids(vocab)
    for tid in (vocab.sep_id, yes_id, no_id, noans_id):
        ids.append(tid)
        tags.append(TokenTag.special())
        char_map.append(None)

    assert len(ids) == used + 4 <= MAX_SEQUENCE_LENGTH
    tokens = TokenSequence(
        token_ids=tuple(ids),
        segment_ids=tuple([0] * len(ids)),
        source=tuple(tags),
    )
    return QAContext(
        qid=record.qid,
        question=record.question,
        tokens=tokens,
        selected=frozenset(selected),
        paragraph_order=paragraph_order,
        char_map=tuple(char_map),
    )


def context_dump_row(
    ctx: QAContext, record: QuestionRecord, include_tokens: bool = False
) -> dict:
    row = {
        "qid": ctx.qid,
        "titles": [record.paragraphs[p].title for p in ctx.paragraph_order],
        "selected": [
            [r.paragraph_index, r.sentence_index] for r in sorted(ctx.selected)
        ],
        "token_count": len(ctx.tokens),
    }
    if include_tokens:
        row["token_ids"] = list(ctx.tokens.token_ids)
    return row


def write_context_dump(
    pairs: Iterable[tuple[QAContext, QuestionRecord]],
    path: str | Path,
    include_tokens: bool = False,
) -> None:
    lines = [
        json.dumps(context_dump_row(ctx, record, include_tokens), ensure_ascii=False)
        for ctx, record in pairs
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
