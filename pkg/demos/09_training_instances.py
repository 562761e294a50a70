"""Training-instance construction and question-level batch packing.

Instances come from the 2 gold paragraphs plus 2 seeded random
paragraphs per question; batches hold 3 questions each and shed random
instances when they exceed the 5625-token cap. The instance file feeds
the external trainer.
"""

import sys
import tempfile
from pathlib import Path

from hoppipe import (
    ScorerVariant,
    build_training_instances,
    default_vocabulary,
    pack_training_batches,
)
from hoppipe.scoring import write_training_instances

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import make_dataset

records = make_dataset(seed=909, n_records=7)
vocab = default_vocabulary()

instances = []
for i, record in enumerate(records):
    per_question = build_training_instances(
        record, ScorerVariant.NO_ANSWER, vocab, rng_seed=1000 + i
    )
    instances.extend(per_question)
positives = sum(1 for inst in instances if inst.positive)
print(f"{len(instances)} instances from {len(records)} questions "
      f"({positives} positive)")

batches = pack_training_batches(instances, rng_seed=5)
print(f"{len(batches)} batches (3 questions each, final may be smaller):")
for i, batch in enumerate(batches):
    print(f"  batch {i}: questions={batch.qids} "
          f"instances={len(batch.instances)} tokens={batch.token_count} "
          f"dropped={len(batch.dropped)}")

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "instances.jsonl"
    write_training_instances(batches, ScorerVariant.NO_ANSWER, out)
    first = out.read_text().splitlines()[0]
    print(f"\ninstance file line 0 (truncated): {first[:120]}...")
