"""Command line interface: ``python -m typeslot <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import evaluation
from .checker import DEFAULT_DIAGNOSTIC_REGEX, make_checker
from .extract import extract_corpus, extract_functions, read_dataset, write_dataset
from .model import SUBMODELS
from .pipeline import Settings, TrainedModel, embed, train_from_corpus, unimported
from .rewrite import write_annotated
from .search import GREEDY, NON_GREEDY, two_phase_annotate
from .vocab import EmbeddingTable, slot_types

log = logging.getLogger("typeslot")


def _python_files(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        out += sorted(p.rglob("*.py")) if p.is_dir() else [p]
    return out


def _read_sources(root: Path) -> dict[str, str]:
    return {str(p.relative_to(root)): p.read_text(encoding="utf-8", errors="replace") for p in sorted(root.rglob("*.py"))}


def _settings(args) -> Settings:
    settings = Settings.from_file(args.config)
    overrides = {name: getattr(args, name, None) for name in ("top_k", "budget_factor", "hidden", "epochs")}
    return settings.updated(overrides)


def _checker(args):
    return make_checker(args.checker, args.checker_cmd, args.diagnostic_regex, args.checker_timeout_s)


def _emit(data, output: str | None, text: str | None = None) -> None:
    if output:
        evaluation.write_report(data, output, text)
    if text is not None:
        print(text)
    elif not output:
        json.dump(data, sys.stdout, indent=2, default=str)
        print()


# ---------------------------------------------------------------------------
# commands


def cmd_extract(args) -> int:
    s = _settings(args)
    records, failures = extract_corpus(args.source, s.radius, s.max_windows, args.workers)
    write_dataset(records, args.output)
    print(f"{len(records)} functions from {args.source} -> {args.output} ({len(failures)} files skipped)")
    return 0


def cmd_train_embeddings(args) -> int:
    s = _settings(args)
    records = read_dataset(args.dataset)
    code, words = embed(list(_read_sources(Path(args.source)).values()), records, s, args.seed)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    code.save(out / "code.emb")
    words.save(out / "words.emb")
    print(f"code: {len(code)} tokens, words: {len(words)} tokens -> {out}")
    return 0


def cmd_train(args) -> int:
    s = _settings(args)
    if args.disable:
        s = s.updated({"disabled": args.disable})
    records = read_dataset(args.dataset)
    code = words = None
    if args.embeddings:
        code = EmbeddingTable.load(Path(args.embeddings) / "code.emb")
        words = EmbeddingTable.load(Path(args.embeddings) / "words.emb")
    sources = _read_sources(Path(args.source)) if args.source else {}
    if code is None and not sources:
        print("error: need --embeddings or --source to train embeddings", file=sys.stderr)
        return 2
    model = train_from_corpus(records, sources, s, args.seed, code, words)
    model.save(args.output)
    print(f"trained on {len(model.train_files)} files ({len(model.valid_files)} held out) -> {args.output}")
    return 0


def cmd_predict(args) -> int:
    model = TrainedModel.load(args.model)
    k = args.top_k or model.settings.top_k
    out = {}
    for path in _python_files(args.paths):
        records = extract_functions(path.read_text(encoding="utf-8"), str(path))
        preds = model.predictor.predict(records, k, args.threshold, only_missing=not args.all_slots)
        out[str(path)] = {f"{sid.function}:{sid.name}": ps.ranked for sid, ps in preds.items()}
    _emit(out, args.output)
    return 0


def cmd_annotate(args) -> int:
    if args.write and args.diff:
        print("error: --write and --diff are exclusive", file=sys.stderr)
        return 2
    model = TrainedModel.load(args.model)
    k = args.top_k or model.settings.top_k
    budget_factor = args.budget_factor or model.settings.budget_factor
    checker = _checker(args)
    for path in _python_files(args.paths):
        source = path.read_text(encoding="utf-8")
        records = extract_functions(source, str(path))
        preds = model.predictor.predict(records, k, only_missing=True)
        ranked = {sid: ps.types for sid, ps in preds.items()}
        result = two_phase_annotate(source, ranked, checker, args.strategy, budget_factor, args.seed, str(path))
        for sid, t in unimported(result.added, records):
            log.warning("%s: %s.%s annotated with %s, which is not imported", path, sid.function, sid.name, t)
        diff = write_annotated(path, result.annotated, "write" if args.write else "diff")
        if not args.write:
            sys.stdout.write(diff)
        log.info("%s: %d annotations added with %d checker calls", path, len(result.added), result.checker_calls)
    return 0


def _valid_records(args, model: TrainedModel):
    records = read_dataset(args.dataset)
    keep = set(model.valid_files)
    return [r for r in records if r.file_path in keep] if keep and not args.all_files else records


def cmd_eval_model(args) -> int:
    model = TrainedModel.load(args.model)
    records = _valid_records(args, model)
    vocab = model.predictor.vocab
    preds = model.predictor.predict(records, max(args.k))
    rows, data = {}, {}
    for kind in ("argument", "return"):
        truth = evaluation.truth_of(records, kind)
        for k in args.k:
            m = evaluation.topk_metrics(preds, truth, k, vocab)
            rows[f"{kind} top-{k}"] = m
            data[f"{kind}/top-{k}"] = m.__dict__
    if args.plot:
        thresholds = [i / 10 for i in range(10)]
        for kind in ("argument", "return"):
            curve = evaluation.threshold_curve(preds, evaluation.truth_of(records, kind), thresholds, vocab)
            evaluation.plot_threshold_curve(curve, f"{args.plot}-{kind}.png", f"{kind} types")
            data[f"{kind}/threshold-curve"] = curve
    _emit(data, args.output, evaluation.metrics_table(rows))
    return 0


def cmd_baseline(args) -> int:
    model = TrainedModel.load(args.model)
    records = read_dataset(args.dataset)
    train_files = set(model.train_files)
    train = [r for r in records if r.file_path in train_files]
    valid = _valid_records(args, model)
    rows, data = {}, {}
    for kind in ("argument", "return"):
        truth = evaluation.truth_of(valid, kind)
        for k in args.k:
            guesses = evaluation.naive_baseline(slot_types(train), truth, k, args.seed)
            m = evaluation.topk_metrics(guesses, truth, k, model.predictor.vocab)
            rows[f"naive {kind} top-{k}"] = m
            data[f"{kind}/top-{k}"] = m.__dict__
    _emit(data, args.output, evaluation.metrics_table(rows))
    return 0


def cmd_eval_search(args) -> int:
    model = TrainedModel.load(args.model)
    k = args.top_k or model.settings.top_k
    budget_factor = args.budget_factor or model.settings.budget_factor
    files = []
    for path in _python_files(args.paths):
        files.append((str(path), path.read_text(encoding="utf-8")))
    report = evaluation.search_eval(
        files, model.predictor, args.strategy, k, _checker(args), budget_factor, args.seed
    )
    _emit(report.to_dict(), args.output, report.table())
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="JSON file overriding default settings")
    common.add_argument("-v", "--verbose", action="store_true")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--checker", choices=("builtin", "external"), default="builtin")
    search.add_argument("--checker-cmd", help='command template with {file}, e.g. "mypy {file}"')
    search.add_argument("--diagnostic-regex", default=DEFAULT_DIAGNOSTIC_REGEX)
    search.add_argument("--checker-timeout-s", type=float, default=60.0)
    search.add_argument("--strategy", choices=(GREEDY, NON_GREEDY), default=GREEDY)
    search.add_argument("--top-k", type=int)
    search.add_argument("--budget-factor", type=int)

    parser = argparse.ArgumentParser(prog="typeslot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="extract function records from a source tree")
    p.add_argument("source")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-embeddings", parents=[common], help="train code and word embeddings")
    p.add_argument("source")
    p.add_argument("--dataset", required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("train", parents=[common], help="train the argument and return classifiers")
    p.add_argument("--dataset", required=True)
    p.add_argument("--embeddings", help="directory written by train-embeddings")
    p.add_argument("--source", help="source tree; embeddings are trained on its training files")
    p.add_argument("--disable", nargs="+", choices=SUBMODELS, help="ablate submodels")
    p.add_argument("--hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("-o", "--output", required=True, help="model directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="print top-k types for unannotated slots")
    p.add_argument("paths", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("--top-k", type=int)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--all-slots", action="store_true", help="also predict already annotated slots")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("annotate", parents=[common, search], help="insert type-correct annotations")
    p.add_argument("paths", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("--write", action="store_true", help="rewrite files in place")
    p.add_argument("--diff", action="store_true", help="print unified diffs (default)")
    p.set_defaults(func=cmd_annotate)

    for name, func, help_text in (
        ("eval-model", cmd_eval_model, "top-k precision/recall on the held-out files"),
        ("baseline", cmd_baseline, "naive frequency baseline on the held-out files"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--dataset", required=True)
        p.add_argument("--model", required=True)
        p.add_argument("-k", type=int, nargs="+", default=[1, 3, 5])
        p.add_argument("--all-files", action="store_true", help="ignore the stored split")
        p.add_argument("-o", "--output", help="JSON report (a .txt table is written next to it)")
        if name == "eval-model":
            p.add_argument("--plot", help="prefix for precision/recall threshold curve images")
        p.set_defaults(func=func)

    p = sub.add_parser("eval-search", parents=[common, search], help="strip, re-annotate and compare files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval_search)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
