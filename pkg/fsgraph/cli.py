"""
Command-line entry point: ``fsgraph <command> ...``.

Commands: generate, train, parse, evaluate, benchmark, compare, convert-framenet.
Every command exits 0 on success and nonzero with a one-line diagnostic on
error (2 for usage errors).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import RunConfig, TrainConfig, load_run_config
from .corpus import corpus_stats, load_corpus, load_ontology, save_corpus, save_ontology
from .errors import ConfigError, FsGraphError
from .fixtures import generate_fixture, split_fixture
from .log import setup_logging
from .metrics import evaluate
from .pipeline import SYSTEMS, benchmark, load_system, run_comparison, write_system_file
from .rendering import render_package_template
from .training import PIPELINE_VARIANTS, known_variants, parse_corpus, train_stages

logger = logging.getLogger("fsgraph.cli")

PROG = "fsgraph"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"{PROG}: error: {message}\n")
        sys.exit(2)


def cmd_generate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ontology, sentences = generate_fixture(
        args.seed, args.n_sentences, n_frames=args.n_frames, max_roles=args.max_roles
    )
    train, dev, test = split_fixture(sentences)
    save_ontology(out / "ontology.json", ontology)
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        save_corpus(out / f"{name}.jsonl", part)
    config = RunConfig(
        train_path="train.jsonl",
        dev_path="dev.jsonl",
        test_path="test.jsonl",
        ontology_path="ontology.json",
        output_dir="model",
        train=TrainConfig(seed=args.seed),
    )
    config.echo(out)
    print(f"wrote {len(train)}/{len(dev)}/{len(test)} train/dev/test sentences to {out}")
    return 0


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    updates = {}
    for key in ("model_variant", "max_epochs", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    if updates:
        config = config.model_copy(train=config.train.model_copy(**updates).model_dump())
    if getattr(args, "output_dir", None):
        config.output_dir = args.output_dir
    return config


def cmd_train(args) -> int:
    config = _apply_overrides(load_run_config(args.config), args)
    config.require_paths("ontology_path", "train_path")
    if config.dev_path:
        config.require_paths("dev_path")
    if not config.output_dir:
        raise ConfigError("output_dir is not set")

    ontology = load_ontology(config.ontology_path)
    train = load_corpus(config.train_path, ontology)
    dev = load_corpus(config.dev_path, ontology) if config.dev_path else []
    logger.info("training %s on %s", config.train.model_variant, corpus_stats(train))

    out = Path(config.output_dir)
    checkpoints = train_stages(train, dev, ontology, config, output_dir=out, progress=not args.quiet)
    if config.train.model_variant in PIPELINE_VARIANTS:
        write_system_file(out, "Node+Edge")
        config.echo(out)
    for stage, checkpoint in checkpoints.items():
        meta = checkpoint.meta
        print(f"{stage}: best dev {meta.dev_metric} F1 {meta.best_metric:.4f} at epoch {meta.best_epoch}")
    return 0


def cmd_parse(args) -> int:
    ontology = load_ontology(args.ontology) if args.ontology else None
    system = load_system(args.checkpoint, args.system, ontology).eval()
    sentences = load_corpus(args.input)
    parsed = parse_corpus(system, sentences, progress=not args.quiet)
    save_corpus(args.output, parsed)
    print(f"parsed {len(parsed)} sentences with {system.name}")
    return 0


def cmd_evaluate(args) -> int:
    gold = load_corpus(args.gold)
    graphs = None
    if args.checkpoint:
        system = load_system(args.checkpoint, args.system).eval()
        pred, graphs = parse_corpus(system, gold, progress=not args.quiet, return_graphs=True)
    else:
        pred = load_corpus(args.pred)
    report = evaluate(
        pred,
        gold,
        graphs=graphs,
        per_sentence=args.per_sentence,
        exclude_discontinuous_predicates=args.exclude_discontinuous,
    )
    if args.format == "text":
        text = render_package_template("eval_report.txt.j2", {"report": report})
    else:
        text = report.model_dump_json(exclude_none=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_benchmark(args) -> int:
    sentences = load_corpus(args.corpus)
    result = {}
    targets = [(args.checkpoint, args.system)]
    if args.against:
        targets.append((args.against, args.against_system))
    for path, name in targets:
        system = load_system(path, name).eval()
        throughput = benchmark(system, sentences, runs=args.runs, progress=not args.quiet)
        result[system.name] = {"sentences_per_second": throughput.median, "runs": throughput.runs}
    print(json.dumps(result, ensure_ascii=False, indent=2))
    return 0


def cmd_compare(args) -> int:
    config = load_run_config(args.config)
    config.require_paths("ontology_path", "train_path", "dev_path", "test_path")
    if args.output_dir:
        config.output_dir = args.output_dir
    ontology = load_ontology(config.ontology_path)
    train = load_corpus(config.train_path, ontology)
    dev = load_corpus(config.dev_path, ontology)
    test = load_corpus(config.test_path, ontology)
    rows = run_comparison(
        train, dev, test, ontology, config,
        systems=args.systems or list(SYSTEMS),
        output_dir=config.output_dir,
        progress=not args.quiet,
    )
    if config.output_dir:
        config.echo(config.output_dir)
    table = render_package_template("comparison.md.j2", {"rows": rows})
    if args.output:
        Path(args.output).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    return 0


def cmd_convert_framenet(args) -> int:
    from .framenet import convert_fulltext

    stats = convert_fulltext(args.root, args.out_dir)
    print(f"converted {stats.sentences} sentences with {stats.tuples} frame tuples")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Frame-semantic parsing as graph construction")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (repeatable)")
    parser.add_argument("-q", "--quiet", action="store_true", help="No progress bars")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("generate", help="Write a synthetic fixture corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--n-sentences", type=int, default=100)
    p.add_argument("--n-frames", type=int, default=6)
    p.add_argument("--max-roles", type=int, default=4)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="Train a model variant from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--variant", dest="model_variant", choices=known_variants())
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="Parse a JSONL corpus with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--system", choices=list(SYSTEMS), help="System name for a directory of stage checkpoints")
    p.add_argument("--ontology", help="Refuse to parse unless the checkpoint was trained on this ontology")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("evaluate", help="Score predicted against gold JSONL")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--pred", help="Predicted JSONL aligned with --gold")
    source.add_argument("--checkpoint", help="Parse --gold with this checkpoint; adds node, frame and edge module scores")
    p.add_argument("--system", choices=list(SYSTEMS), help="System name for a directory of stage checkpoints")
    p.add_argument("--gold", required=True)
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("--exclude-discontinuous", action="store_true")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="Decoding throughput in sentences per second")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--system", choices=list(SYSTEMS))
    p.add_argument("--against", help="Second checkpoint (or system directory) to compare with")
    p.add_argument("--against-system", choices=list(SYSTEMS))
    p.add_argument("--corpus", required=True)
    p.add_argument("--runs", type=int, default=3)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("compare", help="Train and compare the pipeline systems with the joint model")
    p.add_argument("--config", required=True)
    p.add_argument("--systems", nargs="+", choices=list(SYSTEMS))
    p.add_argument("--output-dir")
    p.add_argument("--output", help="Write the comparison table here instead of stdout")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convert-framenet", help="Convert a FrameNet release to fsgraph files")
    p.add_argument("--root", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_convert_framenet)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.func(args)
    except (FsGraphError, OSError, ValueError) as e:
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
        sys.stderr.write(f"{PROG}: error: {message}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
