"""Independent sentence scoring with the lexical backend and the cache.

Each sentence's logit depends only on the question, its own paragraph,
and the answer slot; other paragraphs cannot move it. Scores are cached
by content hash, so a second identical call makes no backend requests.
"""

import tempfile

from hoppipe import (
    LexicalOverlapBackend,
    Paragraph,
    QuestionRecord,
    ScoreCache,
    ScorerVariant,
    Setting,
    default_vocabulary,
    score_sentences,
)

record = QuestionRecord(
    qid="demo-3",
    question="where was the composer of Gassenhauer born ?",
    paragraphs=(
        Paragraph(
            title="Carl Orff",
            sentences=(
                "Carl Orff was a German composer.",
                "He was born in Munich.",
            ),
        ),
        Paragraph(
            title="Gassenhauer",
            sentences=("Gassenhauer was composed by Carl Orff.",),
        ),
        Paragraph(title="Noise", sentences=("Totally unrelated content here.",)),
    ),
    setting=Setting.DISTRACTOR,
)

vocab = default_vocabulary()
backend = LexicalOverlapBackend()

table_na = score_sentences(record, ScorerVariant.NO_ANSWER, backend, vocab)
print("no-answer logits (higher = more question overlap):")
for row in table_na.rows():
    sentence = record.sentence(row.ref)
    print(f"  P{row.ref.paragraph_index}s{row.ref.sentence_index} "
          f"{row.logit:+.3f}  {sentence}")

table_a = score_sentences(
    record, ScorerVariant.WITH_ANSWER, backend, vocab, answer="Munich"
)
moved = [
    (ref, table_na.scores[ref], table_a.scores[ref])
    for ref in sorted(table_na.scores)
    if table_na.scores[ref] != table_a.scores[ref]
]
print("\nanswer conditioning moved these logits:")
for ref, before, after in moved:
    print(f"  P{ref.paragraph_index}s{ref.sentence_index} {before:+.3f} -> {after:+.3f}")

with tempfile.TemporaryDirectory() as tmp:
    cache = ScoreCache(tmp)

    class Counting:
        name = "counting"

        def __init__(self, inner):
            self.inner, self.calls = inner, 0

        def score_batch(self, batch):
            self.calls += 1
            return self.inner.score_batch(batch)

    counting = Counting(backend)
    score_sentences(record, ScorerVariant.NO_ANSWER, counting, vocab, cache=cache)
    score_sentences(record, ScorerVariant.NO_ANSWER, counting, vocab, cache=cache)
    print(f"\nbackend calls across two identical scoring passes: {counting.calls}")
