"""Command-line entry point: harmonize -> clean -> format -> classify /
evaluate -> report.

One global --seed reproduces the whole pipeline; every stage derives its
own RNG seed by hashing its stage name into the base seed. A --config
JSON file supplies defaults that explicit flags override. Exit codes:
0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import cleaning, harmonize, nli_format, verbalize
from .core import (
    DataError,
    EntailError,
    LabeledDataset,
    LabeledExample,
    UsageError,
    read_jsonl,
    write_jsonl,
)
from .engine import ClassificationRequest, classify, file_backend, http_backend, mock_backend
from .evaluate import (
    aggregate_reports,
    evaluate_dataset,
    load_report,
    load_summary,
    plan_heldout_runs,
    save_runspecs,
)
from .reporting import write_report_artifacts
from .seeds import derive_seed

logger = logging.getLogger("entail")

DEFAULT_SEED = 42


def _add_common(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps a subcommand's absent flag from clobbering the same
    # flag given before the subcommand (entail --seed 7 harmonize ...).
    parser.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, help="base seed (default 42)"
    )
    parser.add_argument(
        "--config", default=argparse.SUPPRESS, help="JSON file with flag defaults"
    )
    parser.add_argument(
        "--log-level", default=argparse.SUPPRESS, help="logging level (default INFO)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entail",
        description="Universal text classification through binary entailment.",
    )
    _add_common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("harmonize", help="ingest a raw CSV/JSONL dataset")
    _add_common(p)
    p.add_argument("--spec", required=True, help="ingest spec JSON file")
    p.add_argument("--out", required=True, help="output dataset JSONL")
    p.add_argument("--report", default=None, help="write ingest counters JSON here")
    p.add_argument(
        "--test-fraction",
        type=float,
        default=None,
        help="stratified split fraction; 0 disables (default 0)",
    )

    p = sub.add_parser("clean", help="flag and remove probable label noise")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="write cleaning report JSON here")
    p.add_argument("--skip", action="store_true", default=None, help="bypass cleaning")
    p.add_argument("--k", type=int, default=None, help="cross-validation folds (default 5)")
    p.add_argument(
        "--max-removal-fraction",
        type=float,
        default=None,
        help="per-class flag cap as a fraction of class size (default 0.5)",
    )
    p.add_argument("--dims", type=int, default=None, help="embedding buckets (default 256)")
    p.add_argument("--endpoint", default=None, help="remote embedding service base URL")

    p = sub.add_parser("downsample", help="cap class and dataset sizes")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=None, help="per-class cap (default 500)")
    p.add_argument("--per-dataset", type=int, default=None, help="dataset cap (default 5000)")

    p = sub.add_parser("format-train", help="reformat a dataset into training pairs")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None, help="train|test|all (default all)")

    p = sub.add_parser("format-test", help="reformat a dataset into multiplied test pairs")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None, help="train|test|all (default all)")

    p = sub.add_parser("concat", help="concatenate and shuffle training pair files")
    _add_common(p)
    p.add_argument("--in", dest="infiles", nargs="+", required=True)
    p.add_argument("--native", default=None, help="native NLI pair file (optional)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", help="zero-shot classify texts")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True, help="JSONL with a 'text' field per line")
    p.add_argument("--labels", required=True, help="comma-separated candidate labels")
    p.add_argument("--template", default=None, help='default "This text is about {}"')
    p.add_argument("--backend", required=True, help="http://... | mock | file:scores.json")
    p.add_argument("--multi-label", action="store_true", default=None)
    p.add_argument("--json", dest="json_out", action="store_true", default=None)
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--batch-size", type=int, default=None, help="pairs per request (default 32)")
    p.add_argument("--timeout", type=float, default=None, help="HTTP timeout seconds")

    p = sub.add_parser("evaluate", help="evaluate a labeled dataset against a backend")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--backend", required=True, help="http://... | mock | file:scores.json")
    p.add_argument("--out", required=True, help="write the evaluation report JSON here")
    p.add_argument("--split", default=None, help="train|test|all (default all)")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None)

    p = sub.add_parser("heldout-plan", help="emit the held-out training matrix")
    _add_common(p)
    p.add_argument("--datasets", required=True, help="comma-separated non-NLI dataset ids")
    p.add_argument("--nli", default=None, help="comma-separated NLI dataset ids")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("aggregate", help="aggregate per-condition evaluation reports")
    _add_common(p)
    p.add_argument(
        "--in-dir",
        required=True,
        help="directory with one subdirectory per condition holding report JSON files",
    )
    p.add_argument("--out", required=True, help="summary JSON")

    p = sub.add_parser("report", help="emit CSV/Markdown tables and an SVG chart")
    _add_common(p)
    p.add_argument("--summary", required=True)
    p.add_argument("--out-dir", required=True)

    return parser


class _Options:
    """Flag resolution: explicit flag > config file value > default."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.config: dict = {}
        config_path = getattr(args, "config", None)
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise UsageError(f"config file not found: {path}")
            try:
                self.config = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON: {exc.msg}") from exc
            if not isinstance(self.config, dict):
                raise DataError(f"{path}: config must be a JSON object")

    def get(self, name: str, default=None):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.config:
            return self.config[name]
        return default


def _make_backend(opts: _Options) -> object:
    spec = opts.get("backend")
    batch_size = int(opts.get("batch_size", 32))
    timeout = float(opts.get("timeout", 30.0))
    if spec == "mock":
        return mock_backend("hash")
    if spec.startswith("file:"):
        return file_backend(spec[len("file:") :])
    if spec.startswith(("http://", "https://")):
        return http_backend(spec, batch_size=batch_size, timeout=timeout)
    raise UsageError(f"unknown backend {spec!r}; expected http://..., mock, or file:PATH")


def _load_split(opts: _Options) -> LabeledDataset:
    ds = read_jsonl(opts.get("infile"))
    return ds.subset(opts.get("split", "all"))


def _cmd_harmonize(opts: _Options, seed: int) -> None:
    spec = harmonize.load_ingest_spec(opts.get("spec"))
    ds, report = harmonize.ingest(spec)
    fraction = float(opts.get("test_fraction", 0.0))
    if fraction > 0:
        train, test = harmonize.train_test_split(ds, fraction, seed=derive_seed(seed, "split"))
        test_texts = {ex.text for ex in test.examples}
        merged = tuple(
            LabeledExample(
                ex.text,
                ex.label_text,
                ex.label_standard,
                ex.dataset_id,
                "test" if ex.text in test_texts else "train",
            )
            for ex in ds.examples
        )
        ds = LabeledDataset(ds.dataset_id, ds.classes, merged)
    write_jsonl(ds, opts.get("out"))
    report_path = opts.get("report")
    if report_path:
        with Path(report_path).open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    logger.info(
        "harmonized %s: %d examples, %d classes (na=%d dup=%d dropped-label=%d)",
        ds.dataset_id,
        len(ds.examples),
        ds.num_classes,
        report.rows_dropped_na,
        report.rows_dropped_dup,
        report.rows_dropped_label,
    )


def _cmd_clean(opts: _Options, seed: int) -> None:
    ds = read_jsonl(opts.get("infile"))
    config = cleaning.CleaningConfig(
        k=int(opts.get("k", 5)),
        seed=derive_seed(seed, "clean"),
        max_removal_fraction_per_class=float(opts.get("max_removal_fraction", 0.5)),
        dims=int(opts.get("dims", cleaning.DEFAULT_DIMS)),
        endpoint=opts.get("endpoint"),
        skip=bool(opts.get("skip", False)),
    )
    cleaned, report = cleaning.clean(ds, config)
    write_jsonl(cleaned, opts.get("out"))
    report_path = opts.get("report")
    if report_path:
        report.save(report_path)
    logger.info(
        "cleaned %s: flagged %d of %d examples", ds.dataset_id, len(report.flagged), len(ds.examples)
    )


def _cmd_downsample(opts: _Options, seed: int) -> None:
    ds = read_jsonl(opts.get("infile"))
    out = cleaning.downsample(
        ds,
        per_class_cap=int(opts.get("per_class", 500)),
        per_dataset_cap=int(opts.get("per_dataset", 5000)),
        seed=derive_seed(seed, "downsample"),
    )
    write_jsonl(out, opts.get("out"))
    logger.info("downsampled %s: %d -> %d examples", ds.dataset_id, len(ds.examples), len(out.examples))


def _cmd_format_train(opts: _Options, seed: int) -> None:
    ds = _load_split(opts)
    catalog = verbalize.load_catalog(opts.get("catalog"))
    out = nli_format.format_nli_trainset(ds, catalog, seed=derive_seed(seed, "format-train"))
    nli_format.write_nli_jsonl(out, opts.get("out"))
    logger.info("formatted %d training pairs", len(out.records))


def _cmd_format_test(opts: _Options, seed: int) -> None:
    ds = _load_split(opts)
    catalog = verbalize.load_catalog(opts.get("catalog"))
    out = nli_format.format_nli_testset(ds, catalog)
    nli_format.write_nli_jsonl(out, opts.get("out"))
    logger.info("formatted %d test pairs", len(out.records))


def _cmd_concat(opts: _Options, seed: int) -> None:
    from .core import NLIDataset

    native_path = opts.get("native")
    native = (
        nli_format.read_nli_jsonl(native_path)
        if native_path
        else NLIDataset(dataset_id="", records=())
    )
    parts = [nli_format.read_nli_jsonl(p) for p in opts.get("infiles")]
    out = nli_format.concat_train(native, parts, shuffle_seed=derive_seed(seed, "concat"))
    nli_format.write_nli_jsonl(out, opts.get("out"))
    logger.info("concatenated %d pairs", len(out.records))


def _read_texts(path: str) -> list[str]:
    texts = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict) or "text" not in row:
                raise DataError(f"{path}: line {lineno}: expected an object with a 'text' field")
            texts.append(str(row["text"]))
    if not texts:
        raise DataError(f"{path}: no texts found")
    return texts


def _cmd_classify(opts: _Options, seed: int) -> None:
    texts = _read_texts(opts.get("infile"))
    labels = [part.strip() for part in str(opts.get("labels")).split(",") if part.strip()]
    req = ClassificationRequest(
        texts=tuple(texts),
        candidate_labels=tuple(labels),
        hypothesis_template=opts.get("template", "This text is about {}"),
        multi_label=bool(opts.get("multi_label", False)),
    )
    backend = _make_backend(opts)
    predictions = classify(req, backend)

    results = []
    for text, pred in zip(texts, predictions):
        order = sorted(range(len(labels)), key=lambda j: (-pred.class_probs[j], j))
        results.append(
            {
                "text": text,
                "labels": [labels[j] for j in order],
                "scores": [round(pred.class_probs[j], 6) for j in order],
            }
        )

    if opts.get("json_out", False):
        payload = json.dumps(results, ensure_ascii=False, indent=2) + "\n"
    else:
        lines = [
            f"{r['labels'][0]}\t{r['scores'][0]:.4f}\t{r['text'][:70]}" for r in results
        ]
        payload = "\n".join(lines) + "\n"
    out = opts.get("out")
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


def _cmd_evaluate(opts: _Options, seed: int) -> None:
    ds = _load_split(opts)
    catalog = verbalize.load_catalog(opts.get("catalog"))
    backend = _make_backend(opts)
    report = evaluate_dataset(ds, catalog, backend)
    report.save(opts.get("out"))
    logger.info(
        "evaluated %s: balanced_accuracy=%.4f over %d texts",
        report.dataset_id,
        report.balanced_accuracy,
        report.n_texts,
    )


def _cmd_heldout_plan(opts: _Options, seed: int) -> None:
    datasets = [p.strip() for p in str(opts.get("datasets")).split(",") if p.strip()]
    nli_raw = opts.get("nli", "") or ""
    nli = [p.strip() for p in str(nli_raw).split(",") if p.strip()]
    runs = plan_heldout_runs(datasets, nli)
    paths = save_runspecs(runs, opts.get("out_dir"))
    logger.info("wrote %d run specs to %s", len(paths), opts.get("out_dir"))


def _cmd_aggregate(opts: _Options, seed: int) -> None:
    in_dir = Path(opts.get("in_dir"))
    if not in_dir.is_dir():
        raise DataError(f"report directory not found: {in_dir}")
    reports: dict[str, dict[str, object]] = {}
    for cond_dir in sorted(p for p in in_dir.iterdir() if p.is_dir()):
        per_ds = {}
        for path in sorted(cond_dir.glob("*.json")):
            rep = load_report(path)
            per_ds[rep.dataset_id] = rep
        if per_ds:
            reports[cond_dir.name] = per_ds
    if not reports:
        raise DataError(f"no condition subdirectories with reports under {in_dir}")
    summary = aggregate_reports(reports)
    summary.save(opts.get("out"))
    logger.info("aggregated %d conditions over %d datasets", len(summary.conditions), len(summary.datasets))


def _cmd_report(opts: _Options, seed: int) -> None:
    summary = load_summary(opts.get("summary"))
    paths = write_report_artifacts(summary, opts.get("out_dir"))
    logger.info("wrote %s", ", ".join(str(p) for p in paths.values()))


_HANDLERS = {
    "harmonize": _cmd_harmonize,
    "clean": _cmd_clean,
    "downsample": _cmd_downsample,
    "format-train": _cmd_format_train,
    "format-test": _cmd_format_test,
    "concat": _cmd_concat,
    "classify": _cmd_classify,
    "evaluate": _cmd_evaluate,
    "heldout-plan": _cmd_heldout_plan,
    "aggregate": _cmd_aggregate,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        opts = _Options(args)
        level = str(opts.get("log_level", "INFO")).upper()
        logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(message)s")
        seed = int(opts.get("seed", DEFAULT_SEED))
        _HANDLERS[args.command](opts, seed)
    except UsageError as exc:
        print(f"entail: usage error: {exc}", file=sys.stderr)
        return 2
    except EntailError as exc:
        print(f"entail: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"entail: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
