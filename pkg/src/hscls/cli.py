"""``hscls`` command line: prep, train, predict, evaluate, bench, synth."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bench import fmt_round, run_bench, write_bench_outputs
from .corpus import (
    ParseError,
    PrepError,
    format_libsvm_line,
    prepare,
    read_classifier_file,
    read_libsvm,
    read_manifest,
    write_classifier_file,
    write_manifest,
)
from .evaluate import evaluate
from .model import Model, ModelFormatError
from .synthetic import generate_synthetic_corpus
from .trainer import TrainConfig, TrainingError, train

log = logging.getLogger("hscls")

PREP_MANIFEST = "prep.manifest"


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_run_manifest(path: Path, subcommand: str, args: argparse.Namespace, started: str, **extra) -> None:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    payload = {
        "subcommand": subcommand,
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "started": started,
        "finished": _now(),
        **extra,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def default_workers() -> int:
    env = os.environ.get("HSCLS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer HSCLS_THREADS=%r", env)
    return 1


def cmd_prep(args) -> int:
    started = _now()
    corpus = read_libsvm(args.input)
    data = prepare(corpus, args.n, seed=args.seed, train_fraction=args.train_fraction)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_classifier_file(data.train, out / "train.txt")
    write_classifier_file(data.test, out / "test.txt")
    (out / "labels.txt").write_text("".join(f"{lab}\n" for lab in data.labels), encoding="utf-8")
    manifest = {
        "n": args.n,
        "n_labels": len(data.labels),
        "seed": args.seed,
        "train_fraction": args.train_fraction,
        "docs": len(data.train) + len(data.test),
        "avg_labels_per_doc": repr(data.stats.avg_labels_per_doc),
        "predict_k": data.stats.predict_k,
        "train_size": len(data.train),
        "test_size": len(data.test),
    }
    write_manifest(out / PREP_MANIFEST, manifest)
    write_run_manifest(out / "prep.run.json", "prep", args, started,
                       outputs=["train.txt", "test.txt", "labels.txt", PREP_MANIFEST])
    for key, value in manifest.items():
        print(f"{key}\t{value}")
    return 0


def cmd_train(args) -> int:
    started = _now()
    workers = args.workers if args.workers is not None else default_workers()
    config = TrainConfig(dim=args.dim, epochs=args.epoch, lr=args.lr, loss=args.loss, seed=args.seed, workers=workers)
    corpus = read_classifier_file(args.input)
    model, report = train(corpus, config)
    output = Path(args.output) if args.output else Path(args.input).with_suffix(".model")
    model.save(output)
    Path(f"{output}.report.txt").write_text(report.as_text(), encoding="utf-8")
    Path(f"{output}.report.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    write_run_manifest(Path(f"{output}.run.json"), "train", args, started, outputs=[str(output)])
    sys.stdout.write(report.as_text())
    return 0


def _find_manifest(args) -> Path | None:
    if args.manifest:
        return Path(args.manifest)
    candidate = Path(args.test_file).parent / PREP_MANIFEST
    return candidate if candidate.exists() else None


def cmd_predict(args) -> int:
    started = _now()
    k = args.k
    if k is None:
        manifest = _find_manifest(args)
        if manifest is None:
            raise UsageError("-k not given and no prep manifest found next to the test file")
        k = int(read_manifest(manifest)["predict_k"])
    if k < 1:
        raise UsageError("k must be >= 1")
    model = Model.load(args.model)
    test = read_classifier_file(args.test_file, require_labels=False)
    lines = []
    empty = 0
    for doc in test:
        labels = [lab for lab, _ in model.predict(doc, k)]
        empty += not labels
        lines.append(" ".join(map(str, labels)))
    if empty:
        log.warning("%d docs had no in-vocabulary token; empty prediction lines written", empty)
    text = "".join(line + "\n" for line in lines)
    if args.output:
        out = Path(args.output)
        out.write_text(text, encoding="utf-8")
        write_run_manifest(Path(f"{out}.run.json"), "predict", args, started, k=k, empty_docs=empty)
    else:
        sys.stdout.write(text)
    return 0


def read_predictions(path) -> list[list[int]]:
    with open(path, encoding="utf-8") as fh:
        return [[int(t) for t in line.split()] for line in fh]


def cmd_evaluate(args) -> int:
    started = _now()
    preds = read_predictions(args.predictions)
    gold = read_classifier_file(args.gold)
    if len(preds) != len(gold):
        raise UsageError(f"{args.predictions} has {len(preds)} lines but {args.gold} has {len(gold)}")
    golds = [d.labels for d in gold]
    if args.classes:
        classes = [int(x) for x in Path(args.classes).read_text(encoding="utf-8").split()]
    else:
        classes = sorted({lab for g in golds for lab in g})
    k = max((len(p) for p in preds), default=None)
    report = evaluate(preds, golds, classes, k)
    if report.unknown_predicted:
        log.warning("%d predicted labels are outside the class set", len(report.unknown_predicted))
    n = args.n if args.n is not None else len(classes)
    secs = "NA" if args.train_seconds is None else f"{args.train_seconds:.3f}"
    tsv = (
        "n\tmode\tmacro_precision\tmacro_recall\tmacro_f1\ttrain_seconds\n"
        f"{n}\t{args.mode}\t{fmt_round(report.precision)}\t{fmt_round(report.recall)}\t{fmt_round(report.f1)}\t{secs}\n"
    )
    sys.stdout.write(tsv)
    if args.output:
        out = Path(args.output)
        out.with_suffix(".tsv").write_text(tsv, encoding="utf-8")
        out.with_suffix(".json").write_text(report.to_json(), encoding="utf-8")
        write_run_manifest(Path(f"{out}.run.json"), "evaluate", args, started)
    return 0


def _synthetic_from_args(args):
    return generate_synthetic_corpus(
        args.labels, args.docs_per_label, args.tokens_per_doc, args.skew, args.overlap, args.seed
    )


def cmd_bench(args) -> int:
    started = _now()
    if args.input:
        corpus = read_libsvm(args.input)
    else:
        corpus = _synthetic_from_args(args)
    n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    workers = args.workers if args.workers is not None else default_workers()
    config = TrainConfig(dim=args.dim, epochs=args.epoch, lr=args.lr, seed=args.seed, workers=workers)
    t0 = time.perf_counter()
    result = run_bench(corpus, n_list, seed=args.seed, config=config, train_fraction=args.train_fraction)
    paths = write_bench_outputs(result, args.outdir)
    write_run_manifest(Path(args.outdir) / "bench.run.json", "bench", args, started,
                       outputs=[p.name for p in paths.values()], seconds=time.perf_counter() - t0)
    sys.stdout.write(paths["tables"].read_text(encoding="utf-8"))
    return 0 if all(r.ok for r in result.rows) else 3


def cmd_synth(args) -> int:
    corpus = _synthetic_from_args(args)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            fh.write(format_libsvm_line(doc) + "\n")
    print(f"wrote {len(corpus)} docs to {args.output}")
    return 0


def _add_train_flags(p, epoch_default=100, dim_default=200):
    p.add_argument("-dim", "--dim", type=int, default=dim_default, help="embedding dimension")
    p.add_argument("-epoch", "--epoch", type=int, default=epoch_default, help="number of epochs")
    p.add_argument("-lr", "--lr", type=float, default=0.25, help="initial learning rate")
    p.add_argument("-workers", "--workers", type=int, default=None,
                   help="parallel racy workers (default: $HSCLS_THREADS or 1)")


def _add_synth_flags(p):
    p.add_argument("-labels", "--labels", type=int, default=512)
    p.add_argument("-docs-per-label", "--docs-per-label", type=int, default=20)
    p.add_argument("-tokens-per-doc", "--tokens-per-doc", type=int, default=20)
    p.add_argument("-skew", "--skew", type=float, default=1.0)
    p.add_argument("-overlap", "--overlap", type=float, default=0.3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hscls", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="build top-n train/test files from an LSHTC libSVM file")
    p.add_argument("-input", "--input", required=True)
    p.add_argument("-n", "--n", type=int, required=True, help="number of most frequent labels to keep")
    p.add_argument("-seed", "--seed", type=int, default=0)
    p.add_argument("-outdir", "--outdir", required=True)
    p.add_argument("-train-fraction", "--train-fraction", type=float, default=0.7)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("train", help="train a classifier on a classifier-format file")
    p.add_argument("-input", "--input", required=True)
    p.add_argument("-output", "--output", help="model path (default: <input>.model)")
    _add_train_flags(p)
    p.add_argument("-loss", "--loss", choices=("hs", "softmax"), default="hs")
    p.add_argument("-seed", "--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write top-k label ids per test doc")
    p.add_argument("model")
    p.add_argument("test_file")
    p.add_argument("-k", "--k", type=int, default=None, help="labels per doc (default: predict_k from the prep manifest)")
    p.add_argument("-manifest", "--manifest")
    p.add_argument("-output", "--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="macro precision / recall / F1 of a predictions file")
    p.add_argument("predictions")
    p.add_argument("gold")
    p.add_argument("-classes", "--classes", help="file of class ids (default: labels seen in gold)")
    p.add_argument("-n", "--n", type=int, default=None)
    p.add_argument("-mode", "--mode", default="NA")
    p.add_argument("-train-seconds", "--train-seconds", type=float, default=None)
    p.add_argument("-output", "--output", help="report path stem; writes .tsv and .json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="hs vs softmax over several top-n label counts")
    p.add_argument("-input", "--input", help="LSHTC libSVM file (default: synthetic corpus)")
    _add_synth_flags(p)
    p.add_argument("-n-list", "--n-list", default="8,64,512")
    p.add_argument("-seed", "--seed", type=int, default=0)
    p.add_argument("-outdir", "--outdir", required=True)
    p.add_argument("-train-fraction", "--train-fraction", type=float, default=0.7)
    _add_train_flags(p, epoch_default=100, dim_default=32)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic corpus in libSVM format")
    _add_synth_flags(p)
    p.add_argument("-seed", "--seed", type=int, default=0)
    p.add_argument("-output", "--output", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, PrepError, ModelFormatError, TrainingError, UsageError, ValueError, OSError) as exc:
        print(f"hscls {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
