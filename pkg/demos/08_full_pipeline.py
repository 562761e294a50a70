"""The full three-step pipeline on a synthetic dataset.

Step 1: no-answer scoring; step 2: context assembly + span decoding;
step 3: answer-conditioned rescoring + support selection. Runs twice to
show byte-identical predictions, then scores them.

Equivalent CLI:
  hoppipe run --dataset data.json --setting distractor \
      --scorer-endpoint lexical --span-endpoint oracle \
      --seed 1 --out pred.json
"""

import random
import tempfile
from pathlib import Path

from hoppipe import (
    LexicalOverlapBackend,
    OracleSpanBackend,
    default_vocabulary,
    evaluate_predictions,
    run_pipeline,
)
from hoppipe.pipeline import predictions_json

import sys

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import make_dataset  # reuse the synthetic-data builder

records = make_dataset(seed=808, n_records=10)
vocab = default_vocabulary()
scorer = LexicalOverlapBackend()
span = OracleSpanBackend({r.qid: r.gold_answer for r in records})

result = run_pipeline(records, scorer, span, vocab)
print(f"answered {len(result.answers)}/{len(records)} questions, "
      f"{len(result.failures)} failures")

again = run_pipeline(records, scorer, span, vocab)
identical = predictions_json(result.answers, result.supports) == predictions_json(
    again.answers, again.supports
)
print(f"two runs byte-identical: {identical}")

report = evaluate_predictions(records, result.answers, result.supports)
print(f"ans_em={report.ans_em:.2f} ans_f1={report.ans_f1:.2f} "
      f"sup_f1={report.sup_f1:.2f} joint_f1={report.joint_f1:.2f}")

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "pred.json"
    from hoppipe import write_predictions

    write_predictions(result.answers, result.supports, out)
    print(f"\nprediction file shape: {out.read_text()[:100]}...")
