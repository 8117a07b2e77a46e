"""Command-line entry points wiring the pipeline stages together.

Every command writes its output atomically (temp file renamed on success)
with a first-line header recording the seed, so reruns on identical inputs
are byte-identical. Exit codes: 0 ok, 1 usage, 2 data error, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .corpus import generate_corpus, sample_to_record
from .decoder import (
    ExternalScorer,
    UniformScorer,
    decode_many,
    load_ngram,
    oracle_scorer,
    prediction_to_record,
    save_ngram,
    train_ngram,
)
from .errors import GenlinkError
from .evaluate import aggregate_reports, evaluate, load_predictions
from .jsonl import atomic_open, dumps, read_records, write_records
from .kb import (
    KbConfig,
    build_name_index,
    concepts_by_cui,
    deduplicate,
    load_kb,
    merge_synonyms,
    save_kb,
)
from .textsim import SelectionPolicy
from .tokens import Tokenizer
from .trainprep import build_prompt, build_source, load_pairs, load_samples, pair_to_record, prepare_pairs
from .trie import build_trie, load_trie, save_trie

logger = logging.getLogger("genlink")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _meta(args) -> dict:
    return {"tool": f"genlink {args.command}", "version": __version__,
            "seed": getattr(args, "seed", 0)}


def _workers() -> int:
    env = os.environ.get("GENLINK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _check_paths(*paths) -> None:
    for p in paths:
        if p and str(p) != "-" and not Path(p).exists():
            raise GenlinkError(f"input path does not exist: {p}")


def cmd_kb_build(args) -> int:
    _check_paths(args.input, *args.extra)
    config = KbConfig(dedup_enabled=not args.no_dedup,
                      lowercase=not args.keep_case,
                      strip_symbols=not args.keep_symbols)
    concepts = load_kb(args.input, config)
    names_in = sum(len(c.names) for c in concepts)
    for extra_path in args.extra:
        concepts = merge_synonyms(concepts, load_kb(extra_path, config))
    names_merged = sum(len(c.names) for c in concepts)
    if config.dedup_enabled:
        concepts = deduplicate(concepts)
    names_out = sum(len(c.names) for c in concepts)
    build_name_index(concepts, multi_label=not config.dedup_enabled)  # integrity check
    save_kb(args.out, concepts, meta=_meta(args))
    print(f"concepts: {len(concepts)}  names in: {names_in}  after merge: {names_merged}  "
          f"after dedup: {names_out}", file=sys.stderr)
    return EXIT_OK


def cmd_corpus(args) -> int:
    _check_paths(args.kb)
    concepts = load_kb(args.kb, KbConfig())
    samples = generate_corpus(concepts, epochs_over_synonyms=args.epochs, seed=args.seed,
                              start_marker=args.start_marker, end_marker=args.end_marker)
    histogram: Counter[int] = Counter()

    def records():
        for sample in samples:
            histogram[sample.template_id] += 1
            yield sample_to_record(sample)

    if args.out == "-":
        sys.stdout.write(dumps({"_meta": _meta(args)}) + "\n")
        count = 0
        for rec in records():
            sys.stdout.write(dumps(rec) + "\n")
            count += 1
    else:
        count = write_records(args.out, records(), meta=_meta(args))
    print(f"samples: {count}", file=sys.stderr)
    if args.histogram:
        for template_id in sorted(histogram):
            print(f"template {template_id}: {histogram[template_id]}", file=sys.stderr)
    return EXIT_OK


def cmd_prep(args) -> int:
    _check_paths(args.kb, args.dataset)
    concepts = concepts_by_cui(load_kb(args.kb, KbConfig()))
    samples = load_samples(args.dataset)
    policy = SelectionPolicy(args.policy, seed=args.seed if args.policy == "random" else None)
    pairs, summary = prepare_pairs(samples, concepts, policy,
                                   prompt_enabled=not args.no_prompt)
    write_records(args.out, (pair_to_record(p) for p in pairs), meta=_meta(args))
    print(f"pairs: {len(pairs)}  samples kept: {summary.kept}  rejected: {summary.rejected}",
          file=sys.stderr)
    return EXIT_OK


def cmd_ngram_train(args) -> int:
    _check_paths(args.pairs)
    tokenizer = Tokenizer(args.tokenizer)
    pairs = load_pairs(args.pairs)
    scorer = train_ngram(pairs, tokenizer, order=args.order, k=args.smoothing)
    save_ngram(scorer, args.out)
    print(f"trained {args.order}-gram on {len(pairs)} pairs, vocab {len(scorer.vocab)}",
          file=sys.stderr)
    return EXIT_OK


def _make_scorer(spec: str, tokenizer: Tokenizer):
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        return UniformScorer()
    if kind == "ngram":
        _check_paths(arg)
        scorer = load_ngram(arg)
        if scorer.tokenizer.kind != tokenizer.kind:
            raise GenlinkError(f"n-gram model uses {scorer.tokenizer.kind} tokens, "
                               f"decode requested {tokenizer.kind}")
        return scorer
    if kind == "oracle":
        _check_paths(arg)
        lookup = {}
        for _, rec in read_records(arg):
            lookup[tuple(tokenizer.tokenize(rec["source"]))] = tokenizer.tokenize(rec["target"])
        return oracle_scorer(lookup, tokenizer)
    if kind == "extern":
        if not arg:
            raise UsageError("extern scorer needs a command: extern:\"<command>\"")
        return ExternalScorer(arg, tokenizer)
    raise UsageError(f"unknown scorer spec: {spec!r}")


def cmd_decode(args) -> int:
    _check_paths(args.kb, args.dataset)
    tokenizer = Tokenizer(args.tokenizer)
    concepts = load_kb(args.kb, KbConfig())
    index = build_name_index(concepts, multi_label=args.multi_label)
    if args.trie_cache and Path(args.trie_cache).exists():
        trie = load_trie(args.trie_cache, tokenizer)
    else:
        trie = build_trie(index, tokenizer)
        if args.trie_cache:
            save_trie(trie, args.trie_cache)
    samples = load_samples(args.dataset)
    rows = [
        (s.id,
         build_source(s.left_context, s.mention, s.right_context),
         "" if args.no_prompt else build_prompt(s.mention))
        for s in samples
    ]
    scorer = _make_scorer(args.scorer, tokenizer)
    workers = 1 if args.scorer.startswith("extern") else _workers()
    try:
        results = decode_many(rows, trie, scorer, index, tokenizer,
                              beam_size=args.beam, max_len=args.max_len,
                              length_penalty=args.length_penalty, workers=workers)
    finally:
        if isinstance(scorer, ExternalScorer):
            scorer.close()
    write_records(args.out, (prediction_to_record(rid, pred) for rid, pred in results),
                  meta=_meta(args))
    print(f"decoded {len(results)} samples with beam {args.beam}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.subpop and not (args.train and args.kb):
        raise UsageError("--subpop requires --train and --kb")
    _check_paths(args.gold, *args.preds)
    _check_paths(args.train, args.kb)
    gold = load_samples(args.gold)
    train = load_samples(args.train) if args.train else None
    index = None
    if args.kb:
        concepts = load_kb(args.kb, KbConfig())
        index = build_name_index(concepts, multi_label=args.multi_label)
    reports = []
    for pred_path in args.preds:
        preds = load_predictions(pred_path)
        reports.append(evaluate(preds, gold, ks=args.k, multi_label=args.multi_label,
                                train=train if args.subpop else None,
                                index=index if args.subpop else None,
                                top_n=args.top_n))
    payload = reports[0].to_dict()
    if len(reports) > 1:
        payload = {"runs": [r.to_dict() for r in reports], **aggregate_reports(reports)}
    if args.out:
        with atomic_open(args.out) as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    _print_eval_table(reports, args.k)
    return EXIT_OK


def _print_eval_table(reports, ks) -> None:
    first = reports[0]
    if len(reports) == 1:
        for k in sorted(first.recall_at):
            print(f"recall@{k}: {first.recall_at[k]:.4f}")
    else:
        agg = aggregate_reports(reports)
        for k in sorted(first.recall_at):
            print(f"recall@{k}: {agg['mean'][str(k)]:.4f} ± {agg['std'][str(k)]:.4f}  "
                  f"({len(reports)} runs)")
    if first.subpopulations:
        width = max(len(name) for name in first.subpopulations)
        print(f"{'subset'.ljust(width)}  recall@1  size")
        for name, stats in first.subpopulations.items():
            print(f"{name.ljust(width)}  {stats['recall_at_1']:.4f}    {int(stats['sample_size'])}")
    if first.rejected:
        print(f"samples with empty predictions: {first.rejected}", file=sys.stderr)


def build_parser() -> _Parser:
    parser = _Parser(prog="genlink", description="Generative entity-linking toolkit")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    kb = sub.add_parser("kb", help="knowledge-base operations").add_subparsers(
        dest="kb_command", required=True)
    p = kb.add_parser("build", help="normalize, merge, and deduplicate a KB")
    p.add_argument("--input", required=True)
    p.add_argument("--extra", action="append", default=[],
                   help="extra synonym KB(s) merged by cui; repeatable")
    p.add_argument("--out", required=True)
    p.add_argument("--no-dedup", action="store_true",
                   help="keep names shared across concepts (multi-label KBs)")
    p.add_argument("--keep-case", action="store_true")
    p.add_argument("--keep-symbols", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kb_build, command="kb build")

    p = sub.add_parser("corpus", help="generate pretraining samples from a KB")
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True, help="output path, or - for stdout")
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--histogram", action="store_true", help="print per-template counts")
    p.add_argument("--start-marker", default="START")
    p.add_argument("--end-marker", default="END")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("prep", help="build fine-tuning pairs from a dataset")
    p.add_argument("--kb", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--policy", choices=["tfidf", "shortest", "random"], default="tfidf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-prompt", action="store_true", help="emit empty decoder prompts")
    p.set_defaults(func=cmd_prep)

    ngram = sub.add_parser("ngram", help="reference n-gram scorer").add_subparsers(
        dest="ngram_command", required=True)
    p = ngram.add_parser("train", help="fit an n-gram scorer on prepared pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--smoothing", type=float, default=0.1)
    p.add_argument("--tokenizer", choices=["character", "whitespace"], default="whitespace")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ngram_train, command="ngram train")

    p = sub.add_parser("decode", help="constrained beam search over a dataset")
    p.add_argument("--kb", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scorer", required=True,
                   help="uniform | ngram:MODEL | oracle:PAIRS | extern:\"CMD\"")
    p.add_argument("--beam", type=int, default=5)
    p.add_argument("--tokenizer", choices=["character", "whitespace"], default="whitespace")
    p.add_argument("--no-prompt", action="store_true")
    p.add_argument("--multi-label", action="store_true",
                   help="allow names shared across concepts (NCBI mode)")
    p.add_argument("--trie-cache", default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--length-penalty", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="recall metrics over prediction files")
    p.add_argument("preds", nargs="+")
    p.add_argument("--gold", required=True)
    p.add_argument("--k", type=int, nargs="+", default=[1, 5])
    p.add_argument("--multi-label", action="store_true")
    p.add_argument("--subpop", action="store_true", help="report sub-population recalls")
    p.add_argument("--train", default=None)
    p.add_argument("--kb", default=None)
    p.add_argument("--top-n", type=int, default=100)
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GenlinkError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        logging.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
