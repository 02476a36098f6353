#!/usr/bin/env python3
"""End-to-end offline experiment on the bundled synthetic corpus.

Walks the whole workflow without any model or network: generate a raw
CSV corpus, harmonize it, plant label noise on the train split, clean
it back out, emit binary-NLI training pairs, evaluate the test split
under two scoring backends (planted truth vs. an untrained stand-in),
and aggregate both conditions into the CSV/Markdown/SVG report bundle.

Usage:
    python3 scripts/run_pipeline.py --out runs/demo --seed 42
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import random
from pathlib import Path

from entail import (
    ClassificationRequest,
    CleaningConfig,
    aggregate_reports,
    classify,
    clean,
    derive_seed,
    evaluate_dataset,
    file_backend,
    format_nli_trainset,
    ingest,
    load_catalog,
    load_ingest_spec,
    make_synthetic_corpus,
    mock_backend,
    plan_heldout_runs,
    save_runspecs,
    train_test_split,
    write_jsonl,
    write_nli_jsonl,
    write_report_artifacts,
)


def flip_labels(ds, fraction: float, seed: int):
    """Return a copy of ds with a fraction of labels flipped, plus the
    flipped indices."""
    rng = random.Random(seed)
    k = ds.num_classes
    names = ds.id_to_name()
    n_flips = int(fraction * len(ds.examples))
    flipped = sorted(rng.sample(range(len(ds.examples)), n_flips))
    examples = list(ds.examples)
    for i in flipped:
        ex = examples[i]
        wrong = (ex.label_standard + 1 + rng.randrange(k - 1)) % k
        examples[i] = dataclasses.replace(
            ex, label_standard=wrong, label_text=names[wrong]
        )
    return dataclasses.replace(ds, examples=tuple(examples)), set(flipped)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/demo", help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--n-per-class", type=int, default=40)
    parser.add_argument("--flip-fraction", type=float, default=0.1)
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    corpus = make_synthetic_corpus(
        out / "data", n_per_class=args.n_per_class, seed=derive_seed(args.seed, "corpus")
    )
    print(f"corpus: {corpus.corpus_csv} ({len(corpus.classes)} classes)")

    ds, report = ingest(load_ingest_spec(corpus.ingest_spec))
    print(
        f"harmonize: {report.rows_in} rows in, {report.rows_dropped_na} NA, "
        f"{report.rows_dropped_dup} duplicate, {len(ds.examples)} kept"
    )
    write_jsonl(ds, out / "harmonized.jsonl")

    train, test = train_test_split(ds, test_fraction=0.2, seed=derive_seed(args.seed, "split"))
    print(f"split: {len(train.examples)} train / {len(test.examples)} test")

    noisy, planted = flip_labels(train, args.flip_fraction, derive_seed(args.seed, "noise"))
    cleaned, cleaning = clean(noisy, CleaningConfig(seed=derive_seed(args.seed, "clean")))
    flagged = set(cleaning.flagged_indices())
    caught = len(flagged & planted)
    false_hits = len(flagged - planted)
    print(
        f"clean: planted {len(planted)} flips, flagged {len(flagged)} "
        f"({caught} correct, {false_hits} false)"
    )
    cleaning.save(out / "cleaning_report.json")
    write_jsonl(cleaned, out / "train_clean.jsonl")

    catalog = load_catalog(corpus.catalog)
    pairs = format_nli_trainset(cleaned, catalog, seed=derive_seed(args.seed, "format"))
    write_nli_jsonl(pairs, out / "nli_train.jsonl")
    print(f"format: {len(pairs)} binary NLI training pairs")

    # Two conditions: the planted score file stands in for a fine-tuned
    # model, the hash mock for an untrained one.
    backends = {
        "all": file_backend(corpus.score_file),
        "nli-only": mock_backend("hash"),
    }
    reports = {}
    for condition, backend in backends.items():
        ev = evaluate_dataset(test, catalog, backend)
        reports[condition] = {ev.dataset_id: ev}
        report_dir = out / "reports" / condition
        report_dir.mkdir(parents=True, exist_ok=True)
        ev.save(report_dir / f"{ev.dataset_id}.json")
        print(f"evaluate[{condition}]: balanced accuracy {ev.balanced_accuracy:.3f}")

    summary = aggregate_reports(reports)
    summary.save(out / "summary.json")
    artifacts = write_report_artifacts(summary, out / "report")
    for kind, path in artifacts.items():
        print(f"report: {kind} -> {path}")

    runs = plan_heldout_runs([corpus.dataset_id], nli_ids=["mnli"])
    save_runspecs(runs, out / "runspecs")
    print(f"heldout plan: {len(runs)} runspecs -> {out / 'runspecs'}")

    sample = test.examples[0]
    request = ClassificationRequest(texts=[sample.text], candidate_labels=corpus.classes)
    pred = classify(request, backends["all"])[0]
    label = corpus.classes[pred.predicted_class]
    prob = pred.class_probs[pred.predicted_class]
    print(f"classify: {sample.text[:40]!r} -> {label} (p={prob:.3f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
