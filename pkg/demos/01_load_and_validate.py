"""Loading a HotpotQA-format file and validating records.

Builds a tiny two-question dataset in a temp directory, loads it back,
and shows what validation violations look like.
"""

import json
import tempfile
from pathlib import Path

from hoppipe import (
    Paragraph,
    QuestionRecord,
    Setting,
    load_dataset,
    validate_record,
)

entry = {
    "_id": "demo-1",
    "question": "where was the composer of Gassenhauer born ?",
    "answer": "Munich",
    "context": [
        ["Carl Orff", ["Carl Orff was a German composer.", "He was born in Munich."]],
        ["Gassenhauer", ["Gassenhauer was composed by Carl Orff."]],
    ]
    + [[f"Distractor {i}", [f"Unrelated sentence {i}."]] for i in range(8)],
    "supporting_facts": [["Carl Orff", 1], ["Gassenhauer", 0]],
}

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tiny.json"
    path.write_text(json.dumps([entry]), encoding="utf-8")
    records = load_dataset(path, Setting.DISTRACTOR)

record = records[0]
print(f"loaded {len(records)} record(s); qid={record.qid}")
print(f"paragraphs: {len(record.paragraphs)}, gold answer: {record.gold_answer!r}")
print(f"gold support: {sorted(record.gold_support)}")

# A record violating the two-paragraph support rule.
broken = QuestionRecord(
    qid="demo-broken",
    question="q ?",
    paragraphs=tuple(
        Paragraph(title=f"T{i}", sentences=("s0.", "s1.")) for i in range(10)
    ),
    setting=Setting.DISTRACTOR,
    gold_answer="x",
    gold_support=frozenset({("T0", 0), ("T1", 0), ("T2", 1)}),
)
print("\nviolations for a 3-paragraph support set:")
for violation in validate_record(broken):
    print(f"  - {violation}")
