#!/usr/bin/env python3
"""Generate the fixtures shared between the library and the scorer service.

Everything here is deterministic; outputs are committed under
service/fixtures/ so the service test suite validates against the exact
bytes the library produces. Re-run after changing tokenization, encoding,
or the wire format.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "service" / "fixtures"
sys.path.insert(0, str(ROOT / "tests"))

from conftest import make_dataset  # noqa: E402

from hoppipe.backends import LexicalOverlapBackend, ScoreRequest  # noqa: E402
from hoppipe.context import assemble_qa_context, context_dump_row  # noqa: E402
from hoppipe.corpus import dump_dataset  # noqa: E402
from hoppipe.scoring import (  # noqa: E402
    ScorerVariant,
    build_training_instances,
    pack_training_batches,
    score_sentences,
    write_training_instances,
)
from hoppipe.tokenization import (  # noqa: E402
    TAG_PARAGRAPH,
    default_vocabulary,
    encode_scoring_input,
    tokenize,
)
from hoppipe.cli import _instance_seed  # noqa: E402

PARITY_TEXTS = [
    "",
    "plain words",
    "Hi, there!",
    "Cased CASED cased",
    "punct... splits; everywhere! (yes)",
    "hyphen-ated and under_scored",
    "numbers 123 and 3.14 and 1,000",
    "quotes 'single' and \"double\"",
    "a$b%c^d&e*f",
    "x " * 50,
    "<t> markers </t> stay single tokens",
    "yes no noans",
    "tabs\tand\nnewlines  collapse",
]


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    vocab = default_vocabulary()
    vocab.to_file(OUT / "vocab.txt")

    records = make_dataset(seed=606, n_records=8)
    dump_dataset(records, OUT / "dataset.json")
    (OUT / "answers.json").write_text(
        json.dumps({r.qid: r.gold_answer for r in records}, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    for variant in (ScorerVariant.NO_ANSWER, ScorerVariant.WITH_ANSWER):
        instances = []
        for record in records:
            instances.extend(
                build_training_instances(
                    record, variant, vocab, _instance_seed(7, record.qid)
                )
            )
        batches = pack_training_batches(instances, rng_seed=7)
        write_training_instances(
            batches, variant, OUT / f"instances_{variant.value}.jsonl"
        )

    # A larger toy split for the learning-signal test (more update steps).
    toy_records = make_dataset(seed=707, n_records=60)
    toy_instances = []
    for record in toy_records:
        toy_instances.extend(
            build_training_instances(
                record, ScorerVariant.NO_ANSWER, vocab, _instance_seed(7, record.qid)
            )
        )
    toy_batches = pack_training_batches(toy_instances, rng_seed=7)
    write_training_instances(
        toy_batches, ScorerVariant.NO_ANSWER, OUT / "instances_toy_na.jsonl"
    )

    backend = LexicalOverlapBackend()
    ctx_rows = []
    span_requests = []
    for record in records:
        table = score_sentences(record, ScorerVariant.NO_ANSWER, backend, vocab)
        ctx = assemble_qa_context(record, table, vocab)
        ctx_rows.append(context_dump_row(ctx, record, include_tokens=True))
        span_requests.append(
            {"id": record.qid, "token_ids": list(ctx.tokens.token_ids)}
        )
    (OUT / "contexts.jsonl").write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in ctx_rows) + "\n",
        encoding="utf-8",
    )
    (OUT / "span_requests.ndjson").write_text(
        "\n".join(json.dumps(r) for r in span_requests) + "\n", encoding="utf-8"
    )

    # Wire transcript: the exact scorer requests the pipeline would send for
    # the first two records, both variants.
    wire_lines = []
    for record in records[:2]:
        for variant, answer in ((ScorerVariant.NO_ANSWER, None),
                                (ScorerVariant.WITH_ANSWER, record.gold_answer)):
            for ref in record.sentence_refs():
                para = record.paragraphs[ref.paragraph_index]
                encoded = encode_scoring_input(
                    record.question, para, ref, answer, vocab
                )
                positions = [
                    i for i, tag in enumerate(encoded.source)
                    if tag.kind == TAG_PARAGRAPH
                ]
                request = ScoreRequest(
                    request_id=f"{record.qid}:{variant.value}:"
                    f"{ref.paragraph_index}:{ref.sentence_index}",
                    question=record.question,
                    answer=answer,
                    sentence_text=record.sentence(ref),
                    paragraph_tokens=tuple(encoded.token_ids[i] for i in positions),
                    segment_ids=tuple(encoded.segment_ids[i] for i in positions),
                )
                wire_lines.append(json.dumps(request.to_wire(), ensure_ascii=False))
    (OUT / "wire_requests.ndjson").write_text(
        "\n".join(wire_lines) + "\n", encoding="utf-8"
    )

    parity = [{"text": t, "ids": tokenize(t, vocab)} for t in PARITY_TEXTS]
    (OUT / "tokenizer_parity.json").write_text(
        json.dumps(parity, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )

    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
