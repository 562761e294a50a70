"""Shared fixtures and synthetic-data builders for the test suite."""

from __future__ import annotations

import random
from typing import Sequence

import pytest

from hoppipe.corpus import Paragraph, QuestionRecord, SentenceRef, Setting
from hoppipe.scoring import ScorerVariant, ScoreTable
from hoppipe.tokenization import Vocabulary, default_vocabulary

_WORDS = (
    "alder birch cedar delta ember fjord garnet harbor inlet juniper kestrel "
    "lagoon marble nectar obsidian pellet quarry rocket summit tundra umber "
    "velvet walnut xenon yarrow zephyr basalt copper dynamo ferret gable "
    "hollow icicle jasper kernel lumen meadow nickel oriole prism quartz"
).split()


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return default_vocabulary()


def make_table(
    qid: str,
    paragraph_logits: Sequence[Sequence[float]],
    variant: ScorerVariant = ScorerVariant.WITH_ANSWER,
) -> ScoreTable:
    """Build a ScoreTable from per-paragraph logit lists."""
    scores = {
        SentenceRef(p, s): float(logit)
        for p, logits in enumerate(paragraph_logits)
        for s, logit in enumerate(logits)
    }
    return ScoreTable(qid=qid, variant=variant, scores=scores)


def make_sentence(rng: random.Random, n_words: int | None = None) -> str:
    n = n_words if n_words is not None else rng.randint(3, 8)
    return " ".join(rng.choice(_WORDS) for _ in range(n)) + "."


def make_record(
    rng: random.Random,
    qid: str,
    n_paragraphs: int = 10,
    setting: Setting = Setting.DISTRACTOR,
    yes_no_share: float = 0.2,
) -> QuestionRecord:
    """A valid synthetic distractor-style record with a findable gold answer.

    The question borrows words from the gold sentences so the lexical
    backend prefers them, and the answer is a word from a gold sentence
    (or yes/no) so the oracle span backend can locate it.
    """
    paragraphs = []
    for p in range(n_paragraphs):
        title = f"{rng.choice(_WORDS).capitalize()} {qid}p{p}"
        sentences = tuple(make_sentence(rng) for _ in range(rng.randint(2, 4)))
        paragraphs.append(Paragraph(title=title, sentences=sentences))

    gold_p = rng.sample(range(n_paragraphs), 2)
    support: set[tuple[str, int]] = set()
    gold_words: list[str] = []
    for p in gold_p:
        para = paragraphs[p]
        for s in rng.sample(
            range(len(para.sentences)), rng.randint(1, min(2, len(para.sentences)))
        ):
            support.add((para.title, s))
            gold_words.extend(para.sentences[s].rstrip(".").split()[:3])

    if rng.random() < yes_no_share:
        answer = rng.choice(["yes", "no"])
    else:
        title, s_idx = sorted(support)[0]
        source = next(p for p in paragraphs if p.title == title).sentences[s_idx]
        words = source.rstrip(".").split()
        start = rng.randrange(len(words))
        answer = " ".join(words[start : start + rng.randint(1, 2)])

    question = "which " + " ".join(gold_words[:6]) + " ?"
    return QuestionRecord(
        qid=qid,
        question=question,
        paragraphs=tuple(paragraphs),
        setting=setting,
        gold_answer=answer,
        gold_support=frozenset(support),
    )


def make_dataset(seed: int, n_records: int, **kwargs) -> list[QuestionRecord]:
    rng = random.Random(seed)
    return [make_record(rng, f"q{seed}-{i:04d}", **kwargs) for i in range(n_records)]
