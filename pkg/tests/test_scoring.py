"""Sentence scoring, caching, and training-set construction."""

from __future__ import annotations

import math
import random

import pytest

from hoppipe.backends import (
    BackendProtocolError,
    LexicalOverlapBackend,
    lexical_overlap_score,
)
from hoppipe.corpus import Paragraph, QuestionRecord, SentenceRef, Setting
from hoppipe.scoring import (
    ScoreCache,
    ScorerVariant,
    TrainingInstance,
    build_training_instances,
    pack_training_batches,
    read_score_tables,
    score_sentences,
    write_score_tables,
)
from hoppipe.tokenization import TokenSequence, TokenTag
from conftest import make_record


class CountingBackend:
    name = "counting-lexical"

    def __init__(self):
        self.calls = 0
        self.inner = LexicalOverlapBackend()

    def score_batch(self, batch):
        self.calls += 1
        return self.inner.score_batch(batch)


class BrokenBackend:
    name = "broken"

    def score_batch(self, batch):
        return [float("nan")] * len(batch)


def _record(question: str, paragraphs: list[tuple[str, list[str]]]) -> QuestionRecord:
    return QuestionRecord(
        qid="q",
        question=question,
        paragraphs=tuple(
            Paragraph(title=t, sentences=tuple(s)) for t, s in paragraphs
        ),
        setting=Setting.DISTRACTOR,
    )


def test_lexical_zero_overlap_three_content_words():
    score = lexical_overlap_score("which tree ?", "alder birch cedar")
    assert score == pytest.approx(math.log(0.5 / 4), abs=1e-12)
    assert score < 0


def test_lexical_identical_sentence_is_maximal_for_its_length():
    sentence = "alder birch cedar"
    top = lexical_overlap_score(sentence, sentence)
    assert top == pytest.approx(math.log(3.5 / 4), abs=1e-12)
    assert top > lexical_overlap_score("alder birch", sentence)
    assert top > lexical_overlap_score("unrelated words", sentence)


def test_lexical_overlap_monotone_under_added_overlap():
    rng = random.Random(0)
    words = [f"w{i}" for i in range(30)]
    for _ in range(300):
        q = rng.sample(words, rng.randint(1, 10))
        s = rng.sample(words, rng.randint(1, 10))
        base = lexical_overlap_score(" ".join(q), " ".join(s))
        extra = rng.choice(q)
        grown = lexical_overlap_score(" ".join(q), " ".join(s + [extra]))
        assert grown >= base - 1e-12


def test_lexical_answer_words_join_the_query():
    sentence = "garnet summit tundra"
    without = lexical_overlap_score("which place ?", sentence)
    with_answer = lexical_overlap_score("which place ?", sentence, answer="garnet")
    assert with_answer > without


def test_score_sentences_covers_every_sentence(vocab):
    record = _record(
        "where was alder born ?",
        [("A", ["alder was born here.", "second.", "third."]), ("B", ["b0.", "b1."])],
    )
    table = score_sentences(
        record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab
    )
    assert len(table) == 5
    assert set(table.scores) == set(record.sentence_refs())


def test_lexical_backend_prefers_overlapping_sentence(vocab):
    record = _record(
        "where was Xenon born ?",
        [("A", ["Xenon was born in lagoon.", "unrelated filler words here."])],
    )
    table = score_sentences(
        record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab
    )
    assert table.logit(SentenceRef(0, 0)) > table.logit(SentenceRef(0, 1))


def test_paragraph_permutation_leaves_logits_unchanged(vocab):
    record = make_record(random.Random(11), "qperm")
    table = score_sentences(
        record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab
    )
    perm = list(range(len(record.paragraphs)))
    random.Random(5).shuffle(perm)
    permuted = QuestionRecord(
        qid=record.qid,
        question=record.question,
        paragraphs=tuple(record.paragraphs[i] for i in perm),
        setting=record.setting,
        gold_answer=record.gold_answer,
        gold_support=record.gold_support,
    )
    table2 = score_sentences(
        permuted, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab
    )
    for new_p, old_p in enumerate(perm):
        for s in range(len(record.paragraphs[old_p].sentences)):
            assert table2.logit(SentenceRef(new_p, s)) == table.logit(
                SentenceRef(old_p, s)
            )


def test_mutating_one_paragraph_cannot_move_other_logits(vocab):
    record = make_record(random.Random(12), "qind")
    table = score_sentences(
        record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab
    )
    mutated_paragraphs = list(record.paragraphs)
    mutated_paragraphs[3] = Paragraph(
        title=record.paragraphs[3].title,
        sentences=tuple("totally different words now." for _ in record.paragraphs[3].sentences),
    )
    mutated = QuestionRecord(
        qid=record.qid,
        question=record.question,
        paragraphs=tuple(mutated_paragraphs),
        setting=record.setting,
        gold_answer=record.gold_answer,
        gold_support=record.gold_support,
    )
    table2 = score_sentences(
        mutated, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab
    )
    for ref in record.sentence_refs():
        if ref.paragraph_index != 3:
            assert table2.logit(ref) == table.logit(ref)


def test_with_answer_requires_answer(vocab):
    record = _record("q ?", [("A", ["a."])])
    with pytest.raises(ValueError, match="requires an answer"):
        score_sentences(record, ScorerVariant.WITH_ANSWER, LexicalOverlapBackend(), vocab)


def test_no_answer_variant_ignores_answer_conditioning(vocab):
    record = _record("q ?", [("A", ["alder."]), ("B", ["birch."])])
    t1 = score_sentences(record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab)
    t2 = score_sentences(
        record, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab, answer="alder"
    )
    assert t1.scores == t2.scores
    t3 = score_sentences(
        record, ScorerVariant.WITH_ANSWER, LexicalOverlapBackend(), vocab, answer="alder"
    )
    assert t3.scores != t1.scores


def test_non_finite_backend_logit_is_protocol_error(vocab):
    record = _record("q ?", [("A", ["a."])])
    with pytest.raises(BackendProtocolError, match="non-finite"):
        score_sentences(record, ScorerVariant.NO_ANSWER, BrokenBackend(), vocab)


def test_cache_hit_makes_zero_backend_calls(tmp_path, vocab):
    record = make_record(random.Random(13), "qcache")
    backend = CountingBackend()
    cache = ScoreCache(tmp_path / "cache")
    t1 = score_sentences(record, ScorerVariant.NO_ANSWER, backend, vocab, cache=cache)
    assert backend.calls == 1
    t2 = score_sentences(record, ScorerVariant.NO_ANSWER, backend, vocab, cache=cache)
    assert backend.calls == 1
    assert t1.scores == t2.scores


def test_cache_keys_on_content_not_qid(tmp_path, vocab):
    record = make_record(random.Random(14), "qc1")
    other = make_record(random.Random(15), "qc2")
    backend = CountingBackend()
    cache = ScoreCache(tmp_path / "cache")
    score_sentences(record, ScorerVariant.NO_ANSWER, backend, vocab, cache=cache)
    score_sentences(other, ScorerVariant.NO_ANSWER, backend, vocab, cache=cache)
    assert backend.calls == 2
    # Different answer conditioning must miss the no-answer entry.
    score_sentences(
        record, ScorerVariant.WITH_ANSWER, backend, vocab, answer="x", cache=cache
    )
    assert backend.calls == 3


def test_score_table_round_trip(tmp_path, vocab):
    records = [make_record(random.Random(i), f"qrt{i}") for i in (1, 2)]
    tables = [
        score_sentences(r, ScorerVariant.NO_ANSWER, LexicalOverlapBackend(), vocab)
        for r in records
    ]
    path = tmp_path / "tables.jsonl"
    write_score_tables(tables, path)
    loaded = read_score_tables(path)
    assert set(loaded) == {r.qid for r in records}
    for table in tables:
        assert loaded[table.qid].scores == table.scores
        assert loaded[table.qid].variant is table.variant


def _training_record() -> QuestionRecord:
    paragraphs = [
        Paragraph(title="G1", sentences=("g1 a.", "g1 b.", "g1 c.", "g1 d.")),
        Paragraph(title="G2", sentences=("g2 a.", "g2 b.", "g2 c.")),
        Paragraph(title="N1", sentences=("n1 a.", "n1 b.")),
        Paragraph(title="N2", sentences=("n2 a.", "n2 b.")),
        Paragraph(title="N3", sentences=("n3 a.", "n3 b.")),
        Paragraph(title="N4", sentences=("n4 a.", "n4 b.")),
    ]
    return QuestionRecord(
        qid="qt",
        question="which ?",
        paragraphs=tuple(paragraphs),
        setting=Setting.DISTRACTOR,
        gold_answer="g1 a",
        gold_support=frozenset({("G1", 0), ("G2", 1), ("G2", 2)}),
    )


def test_training_instances_cover_pool_and_count_positives(vocab):
    record = _training_record()
    instances = build_training_instances(
        record, ScorerVariant.NO_ANSWER, vocab, rng_seed=0
    )
    # 2 gold paragraphs (4 + 3 sentences) plus 2 sampled (2 + 2 sentences).
    assert len(instances) == 11
    assert sum(1 for i in instances if i.positive) == len(record.gold_support)
    pool = {i.ref.paragraph_index for i in instances}
    assert {0, 1} <= pool and len(pool) == 4


def test_training_instances_label_matches_gold_exhaustively(vocab):
    record = _training_record()
    gold = record.gold_support_refs()
    for seed in range(10):
        for inst in build_training_instances(
            record, ScorerVariant.NO_ANSWER, vocab, rng_seed=seed
        ):
            assert inst.positive == (inst.ref in gold)


def test_training_instances_seed_determinism(vocab):
    record = _training_record()
    a = build_training_instances(record, ScorerVariant.NO_ANSWER, vocab, rng_seed=7)
    b = build_training_instances(record, ScorerVariant.NO_ANSWER, vocab, rng_seed=7)
    assert a == b
    pools = {
        tuple(
            sorted(
                {
                    i.ref.paragraph_index
                    for i in build_training_instances(
                        record, ScorerVariant.NO_ANSWER, vocab, rng_seed=s
                    )
                }
            )
        )
        for s in range(30)
    }
    assert all({0, 1} <= set(pool) for pool in pools)
    assert len(pools) > 1  # different seeds can sample different negatives


def test_training_instances_sample_only_non_gold_without_repeats(vocab):
    record = _training_record()
    for seed in range(30):
        instances = build_training_instances(
            record, ScorerVariant.NO_ANSWER, vocab, rng_seed=seed
        )
        sampled = {i.ref.paragraph_index for i in instances} - {0, 1}
        assert len(sampled) == 2
        assert sampled <= {2, 3, 4, 5}


def test_training_instances_with_answer_fills_answer_slot(vocab):
    record = _training_record()
    masked = build_training_instances(record, ScorerVariant.NO_ANSWER, vocab, 1)
    filled = build_training_instances(record, ScorerVariant.WITH_ANSWER, vocab, 1)
    assert any(
        m.encoded.token_ids != f.encoded.token_ids for m, f in zip(masked, filled)
    )
    mask_positions = [
        masked[0].encoded.token_ids[i]
        for i, tag in enumerate(masked[0].encoded.source)
        if tag.kind == "answer"
    ]
    assert mask_positions == [vocab.mask_id]


def test_training_instances_require_gold(vocab):
    record = _record("q ?", [("A", ["a."]), ("B", ["b."]), ("C", ["c."]), ("D", ["d."])])
    with pytest.raises(ValueError, match="gold"):
        build_training_instances(record, ScorerVariant.NO_ANSWER, vocab, 0)


def _dummy_instance(qid: str, n_tokens: int, ref_s: int = 0) -> TrainingInstance:
    seq = TokenSequence(
        token_ids=tuple([0] * n_tokens),
        segment_ids=tuple([0] * n_tokens),
        source=tuple([TokenTag.special()] * n_tokens),
    )
    return TrainingInstance(encoded=seq, positive=False, qid=qid, ref=SentenceRef(0, ref_s))


def test_pack_batches_three_questions_each():
    instances = [
        _dummy_instance(f"q{i}", 10, ref_s=j) for i in range(7) for j in range(2)
    ]
    batches = pack_training_batches(instances, rng_seed=0)
    assert [len(b.qids) for b in batches] == [3, 3, 1]
    assert [b.qids for b in batches] == [
        ("q0", "q1", "q2"),
        ("q3", "q4", "q5"),
        ("q6",),
    ]
    assert all(not b.dropped for b in batches)


def test_pack_batches_drops_until_cap():
    instances = [_dummy_instance("q0", 512, ref_s=j) for j in range(4)]
    instances += [_dummy_instance("q1", 512, ref_s=j) for j in range(4)]
    instances += [_dummy_instance("q2", 512, ref_s=j) for j in range(4)]
    batches = pack_training_batches(instances, rng_seed=3)
    (batch,) = batches
    # 12 x 512 = 6144 > 5625: at least two instances must go.
    assert len(batch.dropped) >= 2
    assert batch.token_count <= 5625
    assert len(batch.instances) + len(batch.dropped) == 12


def test_pack_batches_under_cap_unchanged():
    instances = [_dummy_instance("q0", 100, ref_s=j) for j in range(3)]
    (batch,) = pack_training_batches(instances, rng_seed=0)
    assert batch.instances == tuple(instances)
    assert not batch.dropped


def test_pack_batches_drop_is_seeded():
    instances = [_dummy_instance("q0", 512, ref_s=j) for j in range(12)]
    a = pack_training_batches(instances, rng_seed=5)
    b = pack_training_batches(instances, rng_seed=5)
    assert a == b
