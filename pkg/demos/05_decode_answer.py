"""Decoding an answer from start/end logits over the context.

Candidates are body spans up to 30 tokens plus the yes/no/noans tail
tokens; score = start_logit[i] + end_logit[j]. The oracle stub peaks the
logits on the gold answer; the random stub gives deterministic noise.
"""

from hoppipe import (
    LexicalOverlapBackend,
    OracleSpanBackend,
    RandomSpanBackend,
    ScorerVariant,
    assemble_qa_context,
    decode_answer,
    default_vocabulary,
    score_sentences,
)
from hoppipe.corpus import Paragraph, QuestionRecord, Setting

record = QuestionRecord(
    qid="demo-5",
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
    ),
    setting=Setting.DISTRACTOR,
    gold_answer="Munich",
    gold_support=frozenset({("Carl Orff", 1), ("Gassenhauer", 0)}),
)

vocab = default_vocabulary()
table = score_sentences(record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab)
ctx = assemble_qa_context(record, table, vocab)

oracle = OracleSpanBackend({record.qid: record.gold_answer})
pred = decode_answer(ctx, oracle.span_logits(ctx))
print(f"oracle logits -> kind={pred.kind.value} text={pred.output_text()!r} "
      f"score={pred.score:.1f} span={pred.span}")

noise = RandomSpanBackend(seed=7)
pred = decode_answer(ctx, noise.span_logits(ctx))
print(f"random logits -> kind={pred.kind.value} text={pred.output_text()!r} "
      f"score={pred.score:.2f}")

# Argmax is shift-invariant: adding a constant to all start logits cannot
# change the winner.
logits = noise.span_logits(ctx)
from hoppipe import SpanLogits

shifted = SpanLogits.from_arrays(
    [v + 100.0 for v in logits.start_logits], logits.end_logits
)
assert decode_answer(ctx, shifted).span == decode_answer(ctx, logits).span
print("shift-invariance holds")
