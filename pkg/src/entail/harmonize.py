"""Ingest raw CSV/JSONL classification data into the harmonized form.

Covers the usual preprocessing chores: merging text columns, dropping
NAs and exact duplicates, mapping or dropping raw labels, and a
stratified train/test split for datasets that ship without one.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .core import DataError, LabeledDataset, LabeledExample, SPLITS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IngestSpec:
    """How to read one raw dataset.

    ``text_columns`` are merged with a single space, in order.
    ``label_mapping`` maps raw label values (compared as strings) to
    human-readable class names; rows whose raw label is in
    ``drop_labels`` are discarded. Raw labels that are neither mapped
    nor dropped are an error when a mapping is given.
    """

    source_path: str
    format: str  # "csv" | "jsonl"
    text_columns: tuple[str, ...]
    label_column: str
    dataset_id: str = ""
    label_mapping: dict[str, str] | None = None
    drop_labels: frozenset[str] | None = None
    split_column: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "text_columns", tuple(self.text_columns))
        if self.drop_labels is not None:
            object.__setattr__(self, "drop_labels", frozenset(str(v) for v in self.drop_labels))
        if not self.text_columns:
            raise DataError("ingest spec needs at least one text column")
        if not self.label_column:
            raise DataError("ingest spec needs a label column")
        if self.format not in ("csv", "jsonl"):
            raise DataError(f"unknown ingest format {self.format!r}; expected csv or jsonl")
        if not self.dataset_id:
            object.__setattr__(self, "dataset_id", Path(self.source_path).stem)


@dataclass
class IngestReport:
    rows_in: int = 0
    rows_dropped_na: int = 0
    rows_dropped_dup: int = 0
    rows_dropped_label: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_dropped_na": self.rows_dropped_na,
            "rows_dropped_dup": self.rows_dropped_dup,
            "rows_dropped_label": self.rows_dropped_label,
            "warnings": list(self.warnings),
        }


def load_ingest_spec(path: str | Path) -> IngestSpec:
    """Read an IngestSpec from a JSON file, rejecting unknown keys."""
    with Path(path).open("r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {
        "source_path",
        "format",
        "text_columns",
        "label_column",
        "dataset_id",
        "label_mapping",
        "drop_labels",
        "split_column",
    }
    unknown = set(raw) - known
    if unknown:
        raise DataError(f"{path}: unknown ingest-spec key {sorted(unknown)[0]!r}")
    for key in ("source_path", "format", "text_columns", "label_column"):
        if key not in raw:
            raise DataError(f"{path}: ingest spec missing {key!r}")
    return IngestSpec(
        source_path=raw["source_path"],
        format=raw["format"],
        text_columns=tuple(raw["text_columns"]),
        label_column=raw["label_column"],
        dataset_id=raw.get("dataset_id", ""),
        label_mapping=raw.get("label_mapping"),
        drop_labels=frozenset(raw["drop_labels"]) if raw.get("drop_labels") else None,
        split_column=raw.get("split_column"),
    )


def _iter_rows(spec: IngestSpec) -> Iterator[dict]:
    path = Path(spec.source_path)
    if not path.exists():
        raise DataError(f"source file not found: {path}")
    if spec.format == "csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataError(f"{path}: missing CSV header row")
            fields = set(reader.fieldnames)
            for col in (*spec.text_columns, spec.label_column):
                if col not in fields:
                    raise DataError(f"{path}: missing column {col!r}")
            if spec.split_column and spec.split_column not in fields:
                raise DataError(f"{path}: missing column {spec.split_column!r}")
            yield from reader
    else:
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
                yield row


def ingest(spec: IngestSpec) -> tuple[LabeledDataset, IngestReport]:
    """Read, filter, and harmonize one raw dataset.

    Pipeline per row: merge text columns, trim; drop rows with empty
    text or missing label (NA); apply drop_labels, then label_mapping
    (unmapped label with a mapping present is an error naming the label
    and row); drop exact duplicate texts keeping the first occurrence.
    Class ids are assigned densely in first-seen order of the kept rows.
    """
    report = IngestReport()
    class_ids: dict[str, int] = {}
    seen_texts: set[str] = set()
    examples: list[LabeledExample] = []

    for rownum, row in enumerate(_iter_rows(spec), start=1):
        report.rows_in += 1

        parts = []
        for col in spec.text_columns:
            if col not in row:
                raise DataError(f"row {rownum}: missing column {col!r}")
            value = row[col]
            part = "" if value is None else str(value).strip()
            if part:
                parts.append(part)
        text = " ".join(parts).strip()
        if not text:
            report.rows_dropped_na += 1
            continue

        if spec.label_column not in row:
            raise DataError(f"row {rownum}: missing column {spec.label_column!r}")
        raw_label = row[spec.label_column]
        raw_str = "" if raw_label is None else str(raw_label).strip()
        if not raw_str:
            report.rows_dropped_na += 1
            continue

        if spec.drop_labels and raw_str in spec.drop_labels:
            report.rows_dropped_label += 1
            continue
        if spec.label_mapping is not None:
            if raw_str not in spec.label_mapping:
                raise DataError(f"row {rownum}: unmapped label {raw_str!r}")
            label_text = str(spec.label_mapping[raw_str])
        else:
            label_text = raw_str

        if text in seen_texts:
            report.rows_dropped_dup += 1
            continue
        seen_texts.add(text)

        split = "train"
        if spec.split_column:
            if spec.split_column not in row:
                raise DataError(f"row {rownum}: missing column {spec.split_column!r}")
            split = str(row[spec.split_column]).strip().lower()
            if split not in SPLITS:
                raise DataError(f"row {rownum}: split value {split!r} not in {SPLITS}")

        if label_text not in class_ids:
            class_ids[label_text] = len(class_ids)
        examples.append(
            LabeledExample(
                text=text,
                label_text=label_text,
                label_standard=class_ids[label_text],
                dataset_id=spec.dataset_id,
                split=split,
            )
        )

    classes = tuple((i, name) for name, i in class_ids.items())
    ds = LabeledDataset(dataset_id=spec.dataset_id, classes=classes, examples=tuple(examples))
    return ds, report


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def train_test_split(
    ds: LabeledDataset, test_fraction: float = 0.2, seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified split, deterministic for a given seed.

    Per class: test count = round(test_fraction * class size), at least
    1 when the class has >= 2 examples. Classes of size 1 go entirely to
    train with a logged warning. Selection is a seeded Fisher-Yates
    shuffle of each class's index list; relative example order is kept.
    """
    if not (0.0 < test_fraction < 1.0):
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    sizes = ds.class_sizes()
    if any(n == 0 for n in sizes.values()):
        empty = min(c for c, n in sizes.items() if n == 0)
        raise DataError(f"class {empty} has no examples; cannot split")

    rng = random.Random(seed)
    by_class: dict[int, list[int]] = {cid: [] for cid, _ in ds.classes}
    for i, ex in enumerate(ds.examples):
        by_class[ex.label_standard].append(i)

    test_indices: set[int] = set()
    names = ds.id_to_name()
    for cid in sorted(by_class):
        indices = list(by_class[cid])
        if len(indices) == 1:
            logger.warning(
                "class %r has a single example; forced to train", names.get(cid, cid)
            )
            continue
        n_test = max(1, _round_half_up(test_fraction * len(indices)))
        rng.shuffle(indices)
        test_indices.update(indices[:n_test])

    train_examples = []
    test_examples = []
    for i, ex in enumerate(ds.examples):
        if i in test_indices:
            test_examples.append(LabeledExample(ex.text, ex.label_text, ex.label_standard, ex.dataset_id, "test"))
        else:
            train_examples.append(LabeledExample(ex.text, ex.label_text, ex.label_standard, ex.dataset_id, "train"))

    train = LabeledDataset(ds.dataset_id, ds.classes, tuple(train_examples))
    test = LabeledDataset(ds.dataset_id, ds.classes, tuple(test_examples))
    return train, test
