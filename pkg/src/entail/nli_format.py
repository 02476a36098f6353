"""Convert labeled datasets to binary premise/hypothesis records.

Training data is multiplied by two: every text is paired once with its
correct class hypothesis (label 0) and once with a randomly sampled
incorrect one (label 1), which keeps the binary labels exactly balanced.
Test data is multiplied by K: every text is paired with all K class
hypotheses so the evaluator can pick the most entailed one. Native
three-way NLI data is binarized by merging neutral and contradiction.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .core import (
    DataError,
    ENTAILMENT,
    HypothesisCatalog,
    LabeledDataset,
    NLIDataset,
    NLIRecord,
    NOT_ENTAILMENT,
)
from .verbalize import sample_incorrect_hypothesis

_THREE_WAY = {"entailment": ENTAILMENT, "neutral": NOT_ENTAILMENT, "contradiction": NOT_ENTAILMENT}


def merge_nli_labels(premise: str, hypothesis: str, label: str) -> NLIRecord:
    """Binarize one native NLI record: neutral and contradiction both
    become not-entailment. Origin fields are -1 (no source text)."""
    if label not in _THREE_WAY:
        raise DataError(f"unknown NLI label {label!r}; expected entailment/neutral/contradiction")
    return NLIRecord(premise=premise, hypothesis=hypothesis, label=_THREE_WAY[label])


def _check_coverage(ds: LabeledDataset, catalog: HypothesisCatalog) -> None:
    covered = set(catalog.class_ids())
    for cid, name in ds.classes:
        if cid not in covered:
            raise DataError(f"catalog {catalog.dataset_id!r} missing class {cid} ({name!r})")


def format_nli_trainset(
    ds: LabeledDataset, catalog: HypothesisCatalog, seed: int = 0
) -> NLIDataset:
    """Emit exactly two records per example: the correct-class pairing
    (label 0) first, then an incorrect pairing (label 1).

    When a class has several hypotheses the correct one is sampled
    uniformly. Deterministic for a given seed.
    """
    if ds.num_classes < 2:
        raise DataError("training reformatting needs at least 2 classes")
    _check_coverage(ds, catalog)
    rng = random.Random(seed)
    records: list[NLIRecord] = []
    for i, ex in enumerate(ds.examples):
        correct = catalog.entries[ex.label_standard]
        hyp = correct[rng.randrange(len(correct))]
        records.append(
            NLIRecord(ex.text, hyp, ENTAILMENT, origin_text_id=i, origin_class=ex.label_standard)
        )
        wrong_hyp, wrong_class = sample_incorrect_hypothesis(catalog, ex.label_standard, rng)
        records.append(
            NLIRecord(ex.text, wrong_hyp, NOT_ENTAILMENT, origin_text_id=i, origin_class=wrong_class)
        )
    return NLIDataset(dataset_id=ds.dataset_id, records=tuple(records))


def format_nli_testset(ds: LabeledDataset, catalog: HypothesisCatalog) -> NLIDataset:
    """Emit K records per example, one per class in ascending class
    order, using each class's first hypothesis; label 0 only on the row
    whose class matches the example's true class."""
    _check_coverage(ds, catalog)
    class_ids = [cid for cid, _ in sorted(ds.classes)]
    records: list[NLIRecord] = []
    for i, ex in enumerate(ds.examples):
        for cid in class_ids:
            label = ENTAILMENT if cid == ex.label_standard else NOT_ENTAILMENT
            records.append(
                NLIRecord(
                    ex.text,
                    catalog.first_hypothesis(cid),
                    label,
                    origin_text_id=i,
                    origin_class=cid,
                )
            )
    return NLIDataset(dataset_id=ds.dataset_id, records=tuple(records))


def concat_train(
    nli_native: NLIDataset, reformatted: list[NLIDataset], shuffle_seed: int = 0
) -> NLIDataset:
    """Concatenate native NLI records with reformatted sets, then shuffle
    with the given seed. Record counts are preserved. Test sets must not
    go through here; they are evaluated one dataset at a time."""
    records = list(nli_native.records)
    for part in reformatted:
        records.extend(part.records)
    rng = random.Random(shuffle_seed)
    rng.shuffle(records)
    ids = [d.dataset_id for d in (nli_native, *reformatted) if d.records and d.dataset_id]
    dataset_id = "+".join(ids) if ids else "train-mix"
    return NLIDataset(dataset_id=dataset_id, records=tuple(records))


_NLI_FIELDS = {"premise", "hypothesis", "label", "origin_text_id", "origin_class"}


def write_nli_jsonl(nds: NLIDataset, path: str | Path) -> None:
    """One record per line: premise, hypothesis, binary label, origin ids."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in nds.records:
            fh.write(
                json.dumps(
                    {
                        "premise": rec.premise,
                        "hypothesis": rec.hypothesis,
                        "label": rec.label,
                        "origin_text_id": rec.origin_text_id,
                        "origin_class": rec.origin_class,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_nli_jsonl(path: str | Path, dataset_id: str | None = None) -> NLIDataset:
    path = Path(path)
    records: list[NLIRecord] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict):
                raise DataError(f"{path}: line {lineno}: expected a JSON object")
            unknown = set(row) - _NLI_FIELDS
            if unknown:
                raise DataError(f"{path}: line {lineno}: unknown field {sorted(unknown)[0]!r}")
            for key in ("premise", "hypothesis", "label"):
                if key not in row:
                    raise DataError(f"{path}: line {lineno}: missing {key!r} key")
            label = row["label"]
            if label not in (0, 1):
                raise DataError(f"{path}: line {lineno}: label must be 0 or 1, got {label!r}")
            records.append(
                NLIRecord(
                    premise=str(row["premise"]),
                    hypothesis=str(row["hypothesis"]),
                    label=int(label),
                    origin_text_id=int(row.get("origin_text_id", -1)),
                    origin_class=int(row.get("origin_class", -1)),
                )
            )
    return NLIDataset(dataset_id=dataset_id or path.stem, records=tuple(records))
