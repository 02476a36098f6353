"""Metrics over multiplied test sets, held-out run planning, aggregation.

The evaluator consumes raw logits and applies its own argmax so it works
identically on live backends and replayed score files. Balanced
accuracy (unweighted mean of per-class recall) is the headline metric;
classes with zero support are excluded from the mean and recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .core import (
    DataError,
    ENTAILMENT,
    HypothesisCatalog,
    LabeledDataset,
    NLIDataset,
    PairScore,
)
from .engine import ScoringBackend, _score_chunked
from .nli_format import format_nli_testset


@dataclass(frozen=True)
class EvalReport:
    """Per-dataset evaluation result.

    ``per_class_recall`` has one entry per class; zero-support classes
    hold None and are listed in ``zero_support_classes``.
    """

    dataset_id: str
    n_texts: int
    n_classes: int
    balanced_accuracy: float
    accuracy: float
    f1_macro: float
    per_class_recall: tuple[float | None, ...]
    confusion: tuple[tuple[int, ...], ...]
    zero_support_classes: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "n_texts": self.n_texts,
            "n_classes": self.n_classes,
            "balanced_accuracy": self.balanced_accuracy,
            "accuracy": self.accuracy,
            "f1_macro": self.f1_macro,
            "per_class_recall": list(self.per_class_recall),
            "confusion": [list(row) for row in self.confusion],
            "zero_support_classes": list(self.zero_support_classes),
        }

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_report(path: str | Path) -> EvalReport:
    with Path(path).open("r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return EvalReport(
        dataset_id=raw["dataset_id"],
        n_texts=raw["n_texts"],
        n_classes=raw["n_classes"],
        balanced_accuracy=raw["balanced_accuracy"],
        accuracy=raw["accuracy"],
        f1_macro=raw["f1_macro"],
        per_class_recall=tuple(raw["per_class_recall"]),
        confusion=tuple(tuple(row) for row in raw["confusion"]),
        zero_support_classes=tuple(raw.get("zero_support_classes", ())),
    )


def compute_metrics_nli_binary(
    test: NLIDataset, scores: list[PairScore], dataset_id: str | None = None
) -> EvalReport:
    """Score a multiplied test set: regroup rows per source text, predict
    the class whose row has the highest entailment logit (lowest class
    index on ties), and report balanced accuracy, accuracy, and macro F1
    from the confusion matrix."""
    if len(scores) != len(test.records):
        raise DataError(
            f"{len(scores)} scores for {len(test.records)} test records"
        )

    by_text: dict[int, list[tuple[int, int, float]]] = {}
    for rec, s in zip(test.records, scores):
        by_text.setdefault(rec.origin_text_id, []).append(
            (rec.origin_class, rec.label, s.entailment_logit)
        )

    n_classes = 1 + max(rec.origin_class for rec in test.records)
    confusion = [[0] * n_classes for _ in range(n_classes)]
    for tid in sorted(by_text):
        rows = sorted(by_text[tid], key=lambda r: r[0])
        true_rows = [cls for cls, label, _ in rows if label == ENTAILMENT]
        if len(true_rows) != 1:
            raise DataError(
                f"text {tid} has {len(true_rows)} entailment-labeled rows; expected exactly 1"
            )
        best_cls, best_logit = rows[0][0], rows[0][2]
        for cls, _, logit in rows[1:]:
            if logit > best_logit:
                best_cls, best_logit = cls, logit
        confusion[true_rows[0]][best_cls] += 1

    n_texts = len(by_text)
    support = [sum(row) for row in confusion]
    predicted = [sum(confusion[i][j] for i in range(n_classes)) for j in range(n_classes)]
    recalls: list[float | None] = []
    f1s: list[float] = []
    zero_support: list[int] = []
    for j in range(n_classes):
        if support[j] == 0:
            recalls.append(None)
            zero_support.append(j)
            continue
        tp = confusion[j][j]
        recall = tp / support[j]
        recalls.append(recall)
        precision = tp / predicted[j] if predicted[j] else 0.0
        f1s.append(
            2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        )
    counted = [r for r in recalls if r is not None]
    if not counted:
        raise DataError("no class has support; cannot compute metrics")
    balanced = sum(counted) / len(counted)
    accuracy = sum(confusion[j][j] for j in range(n_classes)) / n_texts
    f1_macro = sum(f1s) / len(f1s)

    return EvalReport(
        dataset_id=dataset_id or test.dataset_id,
        n_texts=n_texts,
        n_classes=n_classes,
        balanced_accuracy=balanced,
        accuracy=accuracy,
        f1_macro=f1_macro,
        per_class_recall=tuple(recalls),
        confusion=tuple(tuple(row) for row in confusion),
        zero_support_classes=tuple(zero_support),
    )


def evaluate_dataset(
    ds_test: LabeledDataset, catalog: HypothesisCatalog, backend: ScoringBackend
) -> EvalReport:
    """Format one dataset as a multiplied test set, score every pair, and
    compute metrics. One dataset per call; multiplied test sets are
    never concatenated."""
    test = format_nli_testset(ds_test, catalog)
    pairs = [(rec.premise, rec.hypothesis) for rec in test.records]
    scores = _score_chunked(backend, pairs)
    return compute_metrics_nli_binary(test, scores, dataset_id=ds_test.dataset_id)


@dataclass(frozen=True)
class RunSpec:
    """One training/evaluation job: which datasets to train on, which to
    measure."""

    run_id: str
    train_datasets: tuple[str, ...]
    eval_datasets: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "train_datasets": list(self.train_datasets),
            "eval_datasets": list(self.eval_datasets),
        }


def plan_heldout_runs(dataset_ids: list[str], nli_ids: list[str] = ()) -> list[RunSpec]:
    """Emit the full experiment matrix: one "all" run (every dataset),
    one "nli-only" baseline, and one held-out run per non-NLI dataset
    whose training set excludes exactly that dataset."""
    dataset_ids = list(dataset_ids)
    nli_ids = list(nli_ids)
    if not dataset_ids:
        raise DataError("need at least one non-NLI dataset id")
    seen: set[str] = set()
    for did in (*nli_ids, *dataset_ids):
        if did in seen:
            raise DataError(f"duplicate dataset id {did!r}")
        seen.add(did)

    runs = [
        RunSpec("all", tuple(nli_ids + dataset_ids), tuple(dataset_ids)),
        RunSpec("nli-only", tuple(nli_ids), tuple(dataset_ids)),
    ]
    for held in dataset_ids:
        train = tuple(d for d in nli_ids + dataset_ids if d != held)
        runs.append(RunSpec(f"heldout-{held}", train, (held,)))
    return runs


def save_runspecs(runs: list[RunSpec], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for run in runs:
        path = out_dir / f"{run.run_id}.json"
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(run.to_dict(), fh, indent=2)
            fh.write("\n")
        paths.append(path)
    return paths


_CANONICAL_CONDITIONS = ("all", "nli-only", "heldout")


@dataclass(frozen=True)
class Summary:
    """Aggregated balanced accuracy per condition and dataset."""

    conditions: tuple[str, ...]
    datasets: tuple[str, ...]
    balanced_accuracy: dict[str, dict[str, float]]
    mean_balanced_accuracy: dict[str, float]
    deltas: dict[str, float]
    negative_transfer: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "conditions": list(self.conditions),
            "datasets": list(self.datasets),
            "balanced_accuracy": {
                c: dict(per_ds) for c, per_ds in self.balanced_accuracy.items()
            },
            "mean_balanced_accuracy": dict(self.mean_balanced_accuracy),
            "deltas": dict(self.deltas),
            "negative_transfer": list(self.negative_transfer),
        }

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_summary(path: str | Path) -> Summary:
    with Path(path).open("r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return Summary(
        conditions=tuple(raw["conditions"]),
        datasets=tuple(raw["datasets"]),
        balanced_accuracy=raw["balanced_accuracy"],
        mean_balanced_accuracy=raw["mean_balanced_accuracy"],
        deltas=raw["deltas"],
        negative_transfer=tuple(raw["negative_transfer"]),
    )


def _condition_order(conditions: set[str]) -> tuple[str, ...]:
    ordered = [c for c in _CANONICAL_CONDITIONS if c in conditions]
    ordered.extend(sorted(conditions - set(_CANONICAL_CONDITIONS)))
    return tuple(ordered)


def aggregate_reports(reports: dict[str, dict[str, EvalReport]]) -> Summary:
    """Summarize per-condition reports sharing one dataset universe.

    Means weight datasets equally. Deltas are pairwise differences of
    condition means in canonical order (all, nli-only, heldout, then
    others). Datasets where the held-out condition scores below the
    NLI-only baseline are flagged as negative transfer.
    """
    if not reports:
        raise DataError("no reports to aggregate")
    conditions = _condition_order(set(reports))
    universe = sorted(reports[conditions[0]])
    for cond in conditions:
        if sorted(reports[cond]) != universe:
            raise DataError(
                f"condition {cond!r} covers different datasets than {conditions[0]!r}"
            )
    if not universe:
        raise DataError("conditions contain no datasets")

    ba = {
        cond: {ds: reports[cond][ds].balanced_accuracy for ds in universe}
        for cond in conditions
    }
    means = {cond: sum(ba[cond].values()) / len(universe) for cond in conditions}
    deltas = {}
    for i, ci in enumerate(conditions):
        for cj in conditions[i + 1 :]:
            deltas[f"{ci}_vs_{cj}"] = means[ci] - means[cj]

    negative = tuple(
        ds
        for ds in universe
        if "heldout" in ba and "nli-only" in ba and ba["heldout"][ds] < ba["nli-only"][ds]
    )
    return Summary(
        conditions=conditions,
        datasets=tuple(universe),
        balanced_accuracy=ba,
        mean_balanced_accuracy=means,
        deltas=deltas,
        negative_transfer=negative,
    )
