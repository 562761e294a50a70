"""Dataset loading, validation, and round-trip serialization."""

from __future__ import annotations

import json
import os
import random

import pytest

from hoppipe.corpus import (
    DatasetParseError,
    DatasetValidationError,
    Paragraph,
    QuestionRecord,
    Setting,
    dump_dataset,
    load_dataset,
    load_para_scores,
    validate_record,
)
from conftest import make_dataset, make_record


def _well_formed_entry(qid: str = "q1") -> dict:
    context = [[f"Title {i}", [f"Sentence {i} zero.", f"Sentence {i} one."]] for i in range(10)]
    return {
        "_id": qid,
        "question": "who wrote sentence zero ?",
        "answer": "Sentence 0 zero",
        "context": context,
        "supporting_facts": [["Title 0", 0], ["Title 3", 1]],
    }


def test_load_single_wellformed_distractor_record(tmp_path):
    path = tmp_path / "data.json"
    path.write_text(json.dumps([_well_formed_entry()]), encoding="utf-8")
    records = load_dataset(path, Setting.DISTRACTOR)
    assert len(records) == 1
    assert len(records[0].paragraphs) == 10
    assert records[0].qid == "q1"
    assert records[0].gold_support == frozenset({("Title 0", 0), ("Title 3", 1)})


def test_supporting_fact_with_missing_title_is_named(tmp_path):
    entry = _well_formed_entry()
    entry["supporting_facts"] = [["Title 0", 0], ["Nowhere", 1]]
    path = tmp_path / "data.json"
    path.write_text(json.dumps([entry]), encoding="utf-8")
    with pytest.raises(DatasetValidationError, match="Nowhere"):
        load_dataset(path, Setting.DISTRACTOR)


def test_malformed_json_reports_byte_offset(tmp_path):
    path = tmp_path / "data.json"
    path.write_text('[{"_id": "q1", }]', encoding="utf-8")
    with pytest.raises(DatasetParseError, match=r"byte \d+"):
        load_dataset(path, Setting.DISTRACTOR)


def test_duplicate_qid_rejected(tmp_path):
    path = tmp_path / "data.json"
    path.write_text(json.dumps([_well_formed_entry(), _well_formed_entry()]))
    with pytest.raises(DatasetValidationError, match="duplicate qid"):
        load_dataset(path, Setting.DISTRACTOR)


def test_validate_valid_record_returns_empty_list():
    record = make_record(random.Random(0), "q0")
    assert validate_record(record) == []


def test_validate_three_title_support_cites_two_paragraph_rule():
    record = make_record(random.Random(1), "q1")
    extra_title = record.paragraphs[5].title
    support = set(record.gold_support) | {(extra_title, 0)}
    bad = QuestionRecord(
        qid=record.qid,
        question=record.question,
        paragraphs=record.paragraphs,
        setting=record.setting,
        gold_answer=record.gold_answer,
        gold_support=frozenset(support),
    )
    if len({t for t, _ in support}) == 2:
        pytest.skip("sampled extra title collided with gold")
    violations = validate_record(bad)
    assert any("exactly two paragraphs" in str(v) for v in violations)


def test_validate_out_of_range_sentence_index():
    para_a = Paragraph(title="A", sentences=("s0.", "s1.", "s2."))
    para_b = Paragraph(title="B", sentences=("s0.",))
    record = QuestionRecord(
        qid="q",
        question="q ?",
        paragraphs=(para_a, para_b),
        setting=Setting.FULLWIKI,
        gold_support=frozenset({("A", 7), ("B", 0)}),
    )
    violations = validate_record(record)
    assert any("out of range" in str(v) for v in violations)


def test_validate_duplicate_titles_rejected():
    para = Paragraph(title="Same", sentences=("s.",))
    record = QuestionRecord(
        qid="q", question="q ?", paragraphs=(para, para), setting=Setting.FULLWIKI
    )
    assert any("duplicate" in str(v) for v in validate_record(record))


def test_blind_records_load_without_gold(tmp_path):
    entry = _well_formed_entry()
    del entry["answer"]
    del entry["supporting_facts"]
    path = tmp_path / "data.json"
    path.write_text(json.dumps([entry]), encoding="utf-8")
    (record,) = load_dataset(path, Setting.DISTRACTOR)
    assert record.gold_answer is None
    assert record.gold_support is None
    assert not record.has_gold


def test_round_trip_serialization(tmp_path):
    records = make_dataset(seed=7, n_records=5)
    path = tmp_path / "out.json"
    dump_dataset(records, path)
    reloaded = load_dataset(path, Setting.DISTRACTOR)
    assert reloaded == records


def test_load_is_deterministic(tmp_path):
    records = make_dataset(seed=3, n_records=3)
    path = tmp_path / "out.json"
    dump_dataset(records, path)
    assert load_dataset(path, Setting.DISTRACTOR) == load_dataset(
        path, Setting.DISTRACTOR
    )


def test_inline_retrieval_scores_distinguish_absent_from_zero(tmp_path):
    entry = {
        "_id": "q1",
        "question": "q ?",
        "context": [
            ["A", ["a."], 0.0],
            ["B", ["b."]],
        ],
    }
    path = tmp_path / "fw.json"
    path.write_text(json.dumps([entry]), encoding="utf-8")
    (record,) = load_dataset(path, Setting.FULLWIKI)
    assert record.paragraphs[0].retrieval_score == 0.0
    assert record.paragraphs[1].retrieval_score is None


def test_sidecar_scores_attach_by_qid_and_title(tmp_path):
    entry = {"_id": "q1", "question": "q ?", "context": [["A", ["a."]], ["B", ["b."]]]}
    data = tmp_path / "fw.json"
    data.write_text(json.dumps([entry]), encoding="utf-8")
    sidecar = tmp_path / "scores.json"
    sidecar.write_text(json.dumps({"q1": {"A": -7.5}}), encoding="utf-8")
    (record,) = load_dataset(
        data, Setting.FULLWIKI, para_scores=load_para_scores(sidecar)
    )
    assert record.paragraphs[0].retrieval_score == -7.5
    assert record.paragraphs[1].retrieval_score is None


def test_round_trip_preserves_inline_scores(tmp_path):
    para = Paragraph(title="A", sentences=("a.",), retrieval_score=-2.25)
    other = Paragraph(title="B", sentences=("b.",))
    record = QuestionRecord(
        qid="q1", question="q ?", paragraphs=(para, other), setting=Setting.FULLWIKI
    )
    path = tmp_path / "fw.json"
    dump_dataset([record], path)
    (reloaded,) = load_dataset(path, Setting.FULLWIKI)
    assert reloaded == record


def test_sentence_refs_and_resolution():
    record = make_record(random.Random(5), "q5")
    refs = record.sentence_refs()
    assert len(refs) == sum(len(p.sentences) for p in record.paragraphs)
    ref = refs[3]
    assert record.sentence(ref) == record.paragraphs[ref.paragraph_index].sentences[
        ref.sentence_index
    ]
    assert record.gold_support_refs()  # resolves without error


@pytest.mark.skipif(
    "HOTPOT_DEV_PATH" not in os.environ,
    reason="official dev-distractor file not available in this environment",
)
def test_official_dev_distractor_has_7405_records():
    records = load_dataset(os.environ["HOTPOT_DEV_PATH"], Setting.DISTRACTOR)
    assert len(records) == 7405
