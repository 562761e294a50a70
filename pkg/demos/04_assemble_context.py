"""Budget-packed QA context assembly.

Sentences enter greedily by descending logit under the 508 word-piece
budget (question included). The first sentence admitted from a paragraph
drags in that paragraph's title (in <t></t>) and first sentence;
paragraphs are ordered by their best scored sentence; the sequence ends
with [SEP] yes no noans.
"""

from hoppipe import (
    Paragraph,
    QuestionRecord,
    ScoreTable,
    ScorerVariant,
    SentenceRef,
    Setting,
    assemble_qa_context,
    default_vocabulary,
)

record = QuestionRecord(
    qid="demo-4",
    question="where was the composer of Gassenhauer born ?",
    paragraphs=(
        Paragraph(
            title="Carl Orff",
            sentences=(
                "Carl Orff was a German composer.",
                "He was born in Munich.",
                "A long unrelated biography sentence.",
            ),
        ),
        Paragraph(
            title="Gassenhauer",
            sentences=("Gassenhauer was composed by Carl Orff.",),
        ),
        Paragraph(title="Noise", sentences=("Totally unrelated content.",)),
    ),
    setting=Setting.DISTRACTOR,
)

table = ScoreTable(
    qid="demo-4",
    variant=ScorerVariant.NO_ANSWER,
    scores={
        SentenceRef(0, 0): 0.8,
        SentenceRef(0, 1): 2.4,   # best overall -> Carl Orff leads the context
        SentenceRef(0, 2): -3.0,
        SentenceRef(1, 0): 1.9,
        SentenceRef(2, 0): -2.5,
    },
)

vocab = default_vocabulary()
ctx = assemble_qa_context(record, table, vocab)

print(f"context length: {len(ctx.tokens)} tokens (cap 512, budget 508 + tail 4)")
print("paragraph order:", [record.paragraphs[p].title for p in ctx.paragraph_order])
print("selected sentences:")
for ref in sorted(ctx.selected):
    print(f"  P{ref.paragraph_index}s{ref.sentence_index}: {record.sentence(ref)}")

# The low-scoring biography sentence was skipped; the first sentence of
# Carl Orff rode in with the admission of its paragraph even though its
# own logit (0.8) was not the trigger.
body = "".join(
    f"<{tag.kind[0]}>" for tag in ctx.tokens.source
)
print("\ntoken tag stream (s=special/q=question/t=title/p=paragraph):")
print(body)
