"""Support selection: argmax of the additive set score.

The winning set maximizes the sum of member logits over all sets that
touch exactly two paragraphs. Per paragraph the best contribution is the
sum of strictly positive logits, or the single best sentence when all
are negative; brute-force enumeration confirms it.
"""

import numpy as np

from hoppipe import ScoreTable, ScorerVariant, SentenceRef, brute_force_support, select_support


def table_from(logit_rows):
    scores = {
        SentenceRef(p, s): float(v)
        for p, row in enumerate(logit_rows)
        for s, v in enumerate(row)
    }
    return ScoreTable(qid="demo-6", variant=ScorerVariant.WITH_ANSWER, scores=scores)


examples = {
    "mixed signs": [[2.0, -1.0], [0.5], [-0.3, -0.2]],
    "all negative": [[-1.0], [-2.0], [-5.0]],
    "all positive, two paragraphs": [[1.0, 2.0], [0.5, 3.0]],
}
for name, rows in examples.items():
    table = table_from(rows)
    fast = select_support(table)
    slow = brute_force_support(table)
    members = sorted((r.paragraph_index, r.sentence_index) for r in fast.members)
    print(f"{name}: members={members} total={fast.total:+.2f} "
          f"(brute force agrees: {fast.members == slow.members})")

rng = np.random.default_rng(0)
agreements = 0
for _ in range(2000):
    sizes = rng.integers(1, 5, size=int(rng.integers(2, 5)))
    rows = [list(rng.normal(0, 2, s)) for s in sizes]
    table = table_from(rows)
    agreements += select_support(table).members == brute_force_support(table).members
print(f"\nrandomized agreement with brute force: {agreements}/2000")
