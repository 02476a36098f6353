"""Shared domain types, dataset validation, and JSONL serialization.

All types are immutable after construction and safe to share across
threads. Datasets are held fully in memory (desk scale).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable


class EntailError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EntailError):
    """Malformed or inconsistent data: bad files, bad labels, bad scores."""


class TransportError(EntailError):
    """Network-level failure talking to a remote backend. Safe to retry."""


class UsageError(EntailError):
    """Bad invocation (unknown flag values, missing required inputs)."""


SPLITS = ("train", "test")

ENTAILMENT = 0
NOT_ENTAILMENT = 1
LABEL2ID = {"entailment": ENTAILMENT, "not_entailment": NOT_ENTAILMENT}


@dataclass(frozen=True)
class LabeledExample:
    """One harmonized classification example."""

    text: str
    label_text: str
    label_standard: int
    dataset_id: str
    split: str = "train"


@dataclass(frozen=True)
class LabeledDataset:
    """A harmonized dataset: ordered class list plus examples.

    ``classes`` is an ordered list of ``(label_standard, label_text)``
    pairs; ids are expected to be dense in ``[0, K)``.
    """

    dataset_id: str
    classes: tuple[tuple[int, str], ...]
    examples: tuple[LabeledExample, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple((int(i), str(n)) for i, n in self.classes))
        object.__setattr__(self, "examples", tuple(self.examples))

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def id_to_name(self) -> dict[int, str]:
        return {i: n for i, n in self.classes}

    def texts(self) -> list[str]:
        return [ex.text for ex in self.examples]

    def labels(self) -> list[int]:
        return [ex.label_standard for ex in self.examples]

    def class_sizes(self) -> dict[int, int]:
        sizes = {i: 0 for i, _ in self.classes}
        for ex in self.examples:
            sizes[ex.label_standard] = sizes.get(ex.label_standard, 0) + 1
        return sizes

    def subset(self, split: str) -> "LabeledDataset":
        """Examples restricted to one split; class list unchanged."""
        if split == "all":
            return self
        if split not in SPLITS:
            raise UsageError(f"unknown split {split!r}; expected one of {SPLITS + ('all',)}")
        kept = tuple(ex for ex in self.examples if ex.split == split)
        return replace(self, examples=kept)

    def keep_indices(self, indices: Iterable[int]) -> "LabeledDataset":
        """Examples at the given positions, original order preserved."""
        index_set = set(indices)
        kept = tuple(ex for i, ex in enumerate(self.examples) if i in index_set)
        return replace(self, examples=kept)


@dataclass(frozen=True)
class HypothesisCatalog:
    """Per-dataset mapping from class id to one or more hypothesis sentences."""

    dataset_id: str
    entries: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        normalized = {int(c): tuple(str(h) for h in hyps) for c, hyps in self.entries.items()}
        object.__setattr__(self, "entries", normalized)

    def class_ids(self) -> list[int]:
        return sorted(self.entries)

    def hypotheses_for(self, class_id: int) -> tuple[str, ...]:
        try:
            return self.entries[class_id]
        except KeyError:
            raise DataError(f"catalog {self.dataset_id!r} has no hypotheses for class {class_id}")

    def first_hypothesis(self, class_id: int) -> str:
        return self.hypotheses_for(class_id)[0]


@dataclass(frozen=True)
class NLIRecord:
    """One premise/hypothesis pair with a binary entailment label.

    ``origin_text_id`` and ``origin_class`` are -1 for native NLI data;
    reformatted classification data keeps them so the evaluator can
    regroup the multiplied rows per source text.
    """

    premise: str
    hypothesis: str
    label: int
    origin_text_id: int = -1
    origin_class: int = -1


@dataclass(frozen=True)
class NLIDataset:
    dataset_id: str
    records: tuple[NLIRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class PairScore:
    """Raw entailment / not-entailment logits for one pair (pre-softmax)."""

    entailment_logit: float
    not_entailment_logit: float


@dataclass(frozen=True)
class Prediction:
    """Aggregated per-class probabilities for one input text.

    ``class_probs`` is ordered by class index. In single-label mode it
    sums to 1; in multi-label mode each entry is an independent
    probability. ``predicted_class`` is the argmax, lowest index on ties.
    """

    text_id: int
    class_probs: tuple[float, ...]
    predicted_class: int


def validate_dataset(ds: LabeledDataset) -> list[str]:
    """Check every dataset invariant; return one message per violation.

    Violations are data, not errors: the list is empty iff the dataset is
    well formed. Messages name the offending class or example index.
    """
    violations: list[str] = []
    k = ds.num_classes

    seen_ids: set[int] = set()
    seen_names: set[str] = set()
    for pos, (cid, cname) in enumerate(ds.classes):
        if cid in seen_ids:
            violations.append(f"classes[{pos}]: duplicate class id {cid}")
        if cname in seen_names:
            violations.append(f"classes[{pos}]: duplicate class name {cname!r}")
        if not (0 <= cid < k):
            violations.append(f"classes[{pos}]: id {cid} outside [0, {k})")
        seen_ids.add(cid)
        seen_names.add(cname)

    names = ds.id_to_name()
    seen_text_per_split: dict[str, dict[str, int]] = {}
    for i, ex in enumerate(ds.examples):
        if not ex.text.strip():
            violations.append(f"example {i}: empty text")
        if ex.label_standard not in names:
            violations.append(f"example {i}: label_standard {ex.label_standard} not in classes")
        elif names[ex.label_standard] != ex.label_text:
            violations.append(
                f"example {i}: label_text {ex.label_text!r} does not match class "
                f"{ex.label_standard} ({names[ex.label_standard]!r})"
            )
        if ex.split not in SPLITS:
            violations.append(f"example {i}: split {ex.split!r} not in {SPLITS}")
        seen = seen_text_per_split.setdefault(ex.split, {})
        if ex.text in seen:
            violations.append(
                f"example {i}: duplicate text of example {seen[ex.text]} in split {ex.split!r}"
            )
        else:
            seen[ex.text] = i
    return violations


_EXAMPLE_FIELDS = {"text", "label_text", "label_standard", "split"}
_HEADER_FIELDS = {"dataset_id", "classes"}


def write_jsonl(ds: LabeledDataset, path: str | Path) -> None:
    """Write a dataset as self-describing JSONL (header line, then examples).

    UTF-8, "\\n" line endings. Examples adopt the header's dataset_id on
    read, so per-example dataset_id is not serialized.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        header = {
            "dataset_id": ds.dataset_id,
            "classes": [{"id": i, "name": n} for i, n in ds.classes],
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for ex in ds.examples:
            row = {
                "text": ex.text,
                "label_text": ex.label_text,
                "label_standard": ex.label_standard,
                "split": ex.split,
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> LabeledDataset:
    """Read a dataset written by :func:`write_jsonl`.

    Raises DataError with a 1-based line number on malformed lines, and
    names any field outside the schema.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError(f"{path}: empty file, missing header line")

    header = _parse_line(path, 1, lines[0])
    unknown = set(header) - _HEADER_FIELDS
    if unknown:
        raise DataError(f"{path}: line 1: unknown field {sorted(unknown)[0]!r} in header")
    for key in ("dataset_id", "classes"):
        if key not in header:
            raise DataError(f"{path}: line 1: header missing {key!r}")
    try:
        classes = tuple((int(c["id"]), str(c["name"])) for c in header["classes"])
    except (TypeError, KeyError) as exc:
        raise DataError(f"{path}: line 1: malformed classes entry: {exc}") from exc

    dataset_id = str(header["dataset_id"])
    examples = []
    for lineno, raw in enumerate(lines[1:], start=2):
        row = _parse_line(path, lineno, raw)
        unknown = set(row) - _EXAMPLE_FIELDS
        if unknown:
            raise DataError(f"{path}: line {lineno}: unknown field {sorted(unknown)[0]!r}")
        for key in ("text", "label_text", "label_standard"):
            if key not in row:
                raise DataError(f"{path}: line {lineno}: missing {key!r} key")
        examples.append(
            LabeledExample(
                text=str(row["text"]),
                label_text=str(row["label_text"]),
                label_standard=int(row["label_standard"]),
                dataset_id=dataset_id,
                split=str(row.get("split", "train")),
            )
        )
    return LabeledDataset(dataset_id=dataset_id, classes=classes, examples=tuple(examples))


def _parse_line(path: Path, lineno: int, raw: str) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise DataError(f"{path}: line {lineno}: expected a JSON object")
    return obj
