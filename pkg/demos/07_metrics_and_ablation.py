"""Answer/support/joint EM-F1 and the coverage (top-n) statistics."""

from hoppipe import (
    ScoreTable,
    ScorerVariant,
    SentenceRef,
    answer_scores,
    coverage_rank,
    joint_scores,
    normalize_answer,
    support_scores,
    top_n_at,
)

print("normalization:")
for text in ("The Beatles!", "A  an the", "  Spaced OUT, text. "):
    print(f"  {text!r} -> {normalize_answer(text)!r}")

ans = answer_scores("Obama", "Barack Obama")
print(f"\nanswer  ('Obama' vs 'Barack Obama'): em={ans.em:.0f} f1={ans.f1:.3f} "
      f"p={ans.precision:.2f} r={ans.recall:.2f}")
sup = support_scores({("A", 0), ("B", 2)}, {("A", 0), ("B", 1)})
print(f"support (one of two pairs right):    em={sup.em:.0f} f1={sup.f1:.3f}")
joint = joint_scores(ans, sup)
print(f"joint   (precisions/recalls multiply): f1={joint.f1:.3f}")

# Coverage rank: how many sentences score at least as high as the weakest
# gold sentence; top-n at 90% is the rank of the 90th-percentile question.
table = ScoreTable(
    qid="demo-7",
    variant=ScorerVariant.NO_ANSWER,
    scores={
        SentenceRef(0, 0): 5.0,
        SentenceRef(0, 1): 4.0,
        SentenceRef(1, 0): 3.0,
        SentenceRef(1, 1): 2.0,
    },
)
rank = coverage_rank(table, [SentenceRef(0, 1), SentenceRef(1, 0)])
print(f"\ncoverage rank for gold at logits 4 and 3: {rank}")

ranks = [2] * 89 + [5] + [50] * 10
print(f"top-n at 90% over {len(ranks)} questions: {top_n_at(ranks, 0.9)}")
print(f"top-n at 100%:                            {top_n_at(ranks, 1.0)}")
