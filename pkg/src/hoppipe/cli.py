"""Command-line interface.

Subcommands: score, assemble, answer, support, evaluate, run, ablate,
instances. Options resolve as flag > config file > default; the cache
directory additionally honors the HOPPIPE_CACHE environment variable
(flag > env > config).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .answer import (
    FileSpanBackend,
    HttpSpanBackend,
    OracleSpanBackend,
    RandomSpanBackend,
    SpanBackend,
    decode_answer,
)
from .backends import HttpScorerBackend, LexicalOverlapBackend, ScorerBackend
from .context import assemble_qa_context, context_dump_row
from .corpus import QuestionRecord, Setting, load_dataset, load_para_scores
from .metrics import coverage_report, evaluate_predictions, load_predictions
from .pipeline import (
    DEFAULT_TAU,
    RunManifest,
    run_fullwiki_filter,
    run_pipeline,
    sha256_file,
    vocab_fingerprint,
    write_predictions,
)
from .scoring import (
    ScoreCache,
    ScorerVariant,
    build_training_instances,
    pack_training_batches,
    read_score_tables,
    score_sentences,
    write_score_tables,
    write_training_instances,
)
from .tokenization import Vocabulary, default_vocabulary

CACHE_ENV_VAR = "HOPPIPE_CACHE"


class CliError(ValueError):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override it")
    p.add_argument("--dataset", type=Path)
    p.add_argument("--setting", choices=[s.value for s in Setting])
    p.add_argument("--tau", type=float, help="fullwiki paragraph score threshold")
    p.add_argument("--para-scores", type=Path, help="sidecar qid->title->score file")
    p.add_argument("--scorer-endpoint", help='"lexical" or an http(s) URL')
    p.add_argument(
        "--span-endpoint",
        help='"random", "oracle", "file:<path>", or an http(s) URL',
    )
    p.add_argument("--cache-dir", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--vocab", type=Path, help="vocab file; defaults to the built-in")
    p.add_argument("--max-span-len", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hoppipe")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="write per-sentence score tables")
    _add_common(p)
    p.add_argument("--variant", choices=["na", "a"], default="na")
    p.add_argument("--answers", type=Path, help="answers for the a-variant")

    p = sub.add_parser("assemble", help="write the QA context dump")
    _add_common(p)
    p.add_argument("--tables", type=Path, required=True)
    p.add_argument("--emit-tokens", action="store_true")

    p = sub.add_parser("answer", help="decode answers from span logits")
    _add_common(p)
    p.add_argument("--tables", type=Path, required=True)

    p = sub.add_parser("support", help="select support sets from a-variant tables")
    _add_common(p)
    p.add_argument("--tables", type=Path, required=True)

    p = sub.add_parser("evaluate", help="score a prediction file against gold")
    _add_common(p)
    p.add_argument("--pred", type=Path, required=True)

    p = sub.add_parser("run", help="full three-step pipeline")
    _add_common(p)

    p = sub.add_parser("ablate", help="coverage-rank report (top-n construction)")
    _add_common(p)
    p.add_argument("--tables", type=Path, required=True)
    p.add_argument("--fraction", type=float, default=0.9)

    p = sub.add_parser("instances", help="emit scorer training instances")
    _add_common(p)
    p.add_argument("--variant", choices=["na", "a"], default="na")

    return parser


def _load_config(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise CliError(f"{path}: config must be a JSON object")
    return data


def _resolve(args: argparse.Namespace, config: dict, key: str, default=None):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return config.get(key, default)


def _resolve_cache_dir(args: argparse.Namespace, config: dict) -> Path | None:
    if args.cache_dir is not None:
        return args.cache_dir
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    value = config.get("cache_dir")
    return Path(value) if value else None


def _vocab(args: argparse.Namespace, config: dict) -> Vocabulary:
    path = _resolve(args, config, "vocab")
    if path is None:
        return default_vocabulary()
    return Vocabulary.from_file(path)


def _records(
    args: argparse.Namespace, config: dict
) -> tuple[list[QuestionRecord], Path, Setting, float | None]:
    dataset = _resolve(args, config, "dataset")
    if dataset is None:
        raise CliError("--dataset is required")
    dataset = Path(dataset)
    setting = Setting(_resolve(args, config, "setting", Setting.DISTRACTOR.value))
    scores = None
    sidecar = _resolve(args, config, "para-scores") or config.get("para_scores")
    if sidecar is not None:
        scores = load_para_scores(sidecar)
    records = load_dataset(dataset, setting, para_scores=scores)

    tau = _resolve(args, config, "tau")
    if setting is Setting.FULLWIKI:
        tau = DEFAULT_TAU if tau is None else float(tau)
        records = [run_fullwiki_filter(r, tau) for r in records]
    else:
        tau = None
    return records, dataset, setting, tau


def _scorer_backend(args: argparse.Namespace, config: dict) -> ScorerBackend:
    endpoint = _resolve(args, config, "scorer-endpoint") or config.get(
        "scorer_endpoint", "lexical"
    )
    if endpoint == "lexical":
        return LexicalOverlapBackend()
    if endpoint.startswith(("http://", "https://")):
        return HttpScorerBackend(endpoint)
    raise CliError(f"unknown scorer endpoint {endpoint!r}")


def _span_backend(
    args: argparse.Namespace,
    config: dict,
    records: Sequence[QuestionRecord],
    seed: int | None,
) -> SpanBackend:
    endpoint = _resolve(args, config, "span-endpoint") or config.get(
        "span_endpoint", "random"
    )
    if endpoint == "random":
        if seed is None:
            raise CliError("the random span backend requires --seed")
        return RandomSpanBackend(seed)
    if endpoint == "oracle":
        missing = [r.qid for r in records if r.gold_answer is None]
        if missing:
            raise CliError(f"oracle span backend needs gold answers; missing {missing[:3]}")
        return OracleSpanBackend({r.qid: r.gold_answer for r in records})
    if endpoint.startswith("file:"):
        return FileSpanBackend(endpoint[len("file:") :])
    if endpoint.startswith(("http://", "https://")):
        return HttpSpanBackend(endpoint)
    raise CliError(f"unknown span endpoint {endpoint!r}")


def _require_out(args: argparse.Namespace, config: dict) -> Path:
    out = _resolve(args, config, "out")
    if out is None:
        raise CliError("--out is required")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _write_lines(path: Path, rows: list[dict]) -> None:
    text = "\n".join(json.dumps(r, ensure_ascii=False) for r in rows)
    path.write_text(text + "\n" if text else "", encoding="utf-8")


def _answers_mapping(path: Path) -> dict[str, str]:
    data = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(data, dict) and "answer" in data and isinstance(data["answer"], dict):
        return {str(k): str(v) for k, v in data["answer"].items()}
    if isinstance(data, dict):
        return {str(k): str(v) for k, v in data.items()}
    raise CliError(f"{path}: expected a qid->answer mapping or a prediction file")


def _instance_seed(seed: int, qid: str) -> int:
    digest = hashlib.sha256(f"{seed}:{qid}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def cmd_score(args: argparse.Namespace, config: dict) -> int:
    records, _, _, _ = _records(args, config)
    vocab = _vocab(args, config)
    backend = _scorer_backend(args, config)
    cache_dir = _resolve_cache_dir(args, config)
    cache = ScoreCache(cache_dir) if cache_dir else None
    out = _require_out(args, config)

    variant = ScorerVariant(args.variant)
    answers: dict[str, str] = {}
    if variant is ScorerVariant.WITH_ANSWER:
        if args.answers is None:
            raise CliError("--answers is required for the a-variant")
        answers = _answers_mapping(args.answers)

    tables = []
    for record in records:
        answer = answers.get(record.qid) if variant is ScorerVariant.WITH_ANSWER else None
        if variant is ScorerVariant.WITH_ANSWER and answer is None:
            raise CliError(f"no answer provided for qid {record.qid!r}")
        tables.append(
            score_sentences(record, variant, backend, vocab, answer=answer, cache=cache)
        )
    write_score_tables(tables, out)
    print(f"scored {len(tables)} questions -> {out}")
    return 0


def cmd_assemble(args: argparse.Namespace, config: dict) -> int:
    records, _, _, _ = _records(args, config)
    vocab = _vocab(args, config)
    tables = read_score_tables(args.tables)
    out = _require_out(args, config)

    rows = []
    for record in records:
        if record.qid not in tables:
            raise CliError(f"no score table for qid {record.qid!r}")
        ctx = assemble_qa_context(record, tables[record.qid], vocab)
        rows.append(context_dump_row(ctx, record, include_tokens=args.emit_tokens))
    _write_lines(out, rows)
    print(f"assembled {len(rows)} contexts -> {out}")
    return 0


def cmd_answer(args: argparse.Namespace, config: dict) -> int:
    records, _, _, _ = _records(args, config)
    vocab = _vocab(args, config)
    tables = read_score_tables(args.tables)
    seed = _resolve(args, config, "seed")
    span = _span_backend(args, config, records, seed)
    max_span = _resolve(args, config, "max-span-len") or config.get("max_span_len", 30)
    out = _require_out(args, config)

    rows = []
    for record in records:
        if record.qid not in tables:
            raise CliError(f"no score table for qid {record.qid!r}")
        ctx = assemble_qa_context(record, tables[record.qid], vocab)
        pred = decode_answer(ctx, span.span_logits(ctx), max_span_len=int(max_span))
        rows.append(
            {
                "qid": record.qid,
                "answer": pred.output_text(),
                "kind": pred.kind.value,
                "score": pred.score,
            }
        )
    _write_lines(out, rows)
    print(f"decoded {len(rows)} answers -> {out}")
    return 0


def cmd_support(args: argparse.Namespace, config: dict) -> int:
    from .support import select_support

    records, _, _, _ = _records(args, config)
    tables = read_score_tables(args.tables)
    out = _require_out(args, config)

    rows = []
    for record in records:
        if record.qid not in tables:
            raise CliError(f"no score table for qid {record.qid!r}")
        chosen = select_support(tables[record.qid])
        rows.append(
            {
                "qid": record.qid,
                "sp": sorted(
                    [record.paragraphs[r.paragraph_index].title, r.sentence_index]
                    for r in chosen.members
                ),
                "total": chosen.total,
            }
        )
    _write_lines(out, rows)
    print(f"selected support for {len(rows)} questions -> {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace, config: dict) -> int:
    records, _, _, _ = _records(args, config)
    answers, supports = load_predictions(args.pred)
    report = evaluate_predictions(records, answers, supports)
    payload = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    out = _resolve(args, config, "out")
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    print(
        f"ans_f1={report.ans_f1:.4f} sup_f1={report.sup_f1:.4f} "
        f"joint_f1={report.joint_f1:.4f}",
        file=sys.stderr,
    )
    return 0


def cmd_run(args: argparse.Namespace, config: dict) -> int:
    records, dataset, setting, tau = _records(args, config)
    vocab = _vocab(args, config)
    seed = _resolve(args, config, "seed")
    if seed is None:
        raise CliError("--seed is mandatory for run")
    scorer = _scorer_backend(args, config)
    span = _span_backend(args, config, records, int(seed))
    cache_dir = _resolve_cache_dir(args, config)
    cache = ScoreCache(cache_dir) if cache_dir else None
    max_span = _resolve(args, config, "max-span-len") or config.get("max_span_len", 30)
    out = _require_out(args, config)

    result = run_pipeline(
        records, scorer, span, vocab, cache=cache, max_span_len=int(max_span)
    )
    write_predictions(result.answers, result.supports, out)

    manifest = RunManifest(
        dataset_path=str(dataset),
        dataset_sha256=sha256_file(dataset),
        setting=setting.value,
        scorer_backend=scorer.name,
        span_backend=span.name,
        seed=int(seed),
        tau=tau,
        vocab_sha256=vocab_fingerprint(vocab),
        max_span_len=int(max_span),
        config=config,
        failures=result.failures,
    )
    manifest.write(Path(str(out) + ".manifest.json"))
    if result.report is not None:
        Path(str(out) + ".report.json").write_text(
            json.dumps(result.report.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    ok = len(result.answers)
    print(f"predicted {ok}/{len(records)} questions -> {out}")
    if result.failures:
        print(f"{len(result.failures)} failures recorded in the manifest", file=sys.stderr)
    if result.report is not None:
        print(
            f"ans_f1={result.report.ans_f1:.4f} sup_f1={result.report.sup_f1:.4f} "
            f"joint_f1={result.report.joint_f1:.4f}",
            file=sys.stderr,
        )
    return 0


def cmd_ablate(args: argparse.Namespace, config: dict) -> int:
    records, _, _, _ = _records(args, config)
    tables = read_score_tables(args.tables)
    report = coverage_report(records, tables)
    payload = report.to_json(args.fraction)
    out = _resolve(args, config, "out")
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"top-n at {args.fraction:.0%}: {payload['top_n']}", file=sys.stderr)
    return 0


def cmd_instances(args: argparse.Namespace, config: dict) -> int:
    records, _, _, _ = _records(args, config)
    vocab = _vocab(args, config)
    seed = _resolve(args, config, "seed")
    if seed is None:
        raise CliError("--seed is mandatory for instances")
    out = _require_out(args, config)

    variant = ScorerVariant(args.variant)
    all_instances = []
    for record in records:
        all_instances.extend(
            build_training_instances(
                record, variant, vocab, _instance_seed(int(seed), record.qid)
            )
        )
    batches = pack_training_batches(all_instances, rng_seed=int(seed))
    write_training_instances(batches, variant, out)
    dropped = sum(len(b.dropped) for b in batches)
    print(
        f"wrote {sum(len(b.instances) for b in batches)} instances in "
        f"{len(batches)} batches ({dropped} dropped) -> {out}"
    )
    return 0


_COMMANDS = {
    "score": cmd_score,
    "assemble": cmd_assemble,
    "answer": cmd_answer,
    "support": cmd_support,
    "evaluate": cmd_evaluate,
    "run": cmd_run,
    "ablate": cmd_ablate,
    "instances": cmd_instances,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _load_config(args.config)
    try:
        return _COMMANDS[args.command](args, config)
    except (CliError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
