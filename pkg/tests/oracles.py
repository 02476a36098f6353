"""Independent reimplementations used to cross-check the library.

Everything here is deliberately naive: plain Python loops, no numpy
vectorization, no shared helpers with the package. Agreement between
these and the real implementations is what the oracle tests assert.
"""

from __future__ import annotations

import math
import random

import numpy as np

from entail.cleaning import logistic_loss
from entail.core import LabeledDataset, LabeledExample, NLIRecord, PairScore


def naive_find_label_issues(
    probs: list[list[float]], labels: list[int], max_removal_fraction: float = 0.5
):
    """Per-example double loop over classes; returns (thresholds, joint,
    flagged_indices). Zero-support classes get a None threshold and can
    never be assigned."""
    n = len(labels)
    k = len(probs[0])

    thresholds: list[float | None] = []
    for j in range(k):
        members = [i for i in range(n) if labels[i] == j]
        if members:
            thresholds.append(sum(probs[i][j] for i in members) / len(members))
        else:
            thresholds.append(None)

    assigned: list[int | None] = []
    for i in range(n):
        best_j, best_p = None, None
        for j in range(k):
            t = thresholds[j]
            if t is None or probs[i][j] < t:
                continue
            if best_p is None or probs[i][j] > best_p:
                best_j, best_p = j, probs[i][j]
        assigned.append(best_j)

    joint = [[0] * k for _ in range(k)]
    for i in range(n):
        if assigned[i] is not None:
            joint[labels[i]][assigned[i]] += 1

    sizes = [sum(1 for lab in labels if lab == j) for j in range(k)]
    kept: list[int] = []
    for j in range(k):
        candidates = [
            i for i in range(n) if labels[i] == j and assigned[i] not in (None, j)
        ]
        candidates.sort(key=lambda i: (probs[i][labels[i]], i))
        kept.extend(candidates[: int(max_removal_fraction * sizes[j])])
    kept.sort(key=lambda i: (probs[i][labels[i]], i))
    return thresholds, joint, kept


def naive_metrics(records: list[NLIRecord], scores: list[PairScore]):
    """Per-text loop; returns (balanced_accuracy, accuracy, f1_macro,
    confusion). Prediction is the highest entailment logit, lowest class
    index on ties."""
    rows_by_text: dict[int, list[tuple[int, int, float]]] = {}
    for rec, s in zip(records, scores):
        rows_by_text.setdefault(rec.origin_text_id, []).append(
            (rec.origin_class, rec.label, s.entailment_logit)
        )
    k = 1 + max(rec.origin_class for rec in records)

    confusion = [[0] * k for _ in range(k)]
    for rows in rows_by_text.values():
        true_class = [c for c, lab, _ in rows if lab == 0][0]
        pred, best = None, None
        for c, _, logit in sorted(rows):
            if best is None or logit > best:
                pred, best = c, logit
        confusion[true_class][pred] += 1

    recalls = []
    f1s = []
    for j in range(k):
        support = sum(confusion[j])
        if support == 0:
            continue
        recall = confusion[j][j] / support
        recalls.append(recall)
        predicted = sum(confusion[i][j] for i in range(k))
        precision = confusion[j][j] / predicted if predicted else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)

    balanced = sum(recalls) / len(recalls)
    accuracy = sum(confusion[j][j] for j in range(k)) / len(rows_by_text)
    f1_macro = sum(f1s) / len(f1s)
    return balanced, accuracy, f1_macro, confusion


def finite_diff_gradient(
    features: np.ndarray, labels, w: np.ndarray, l2: float = 1.0, h: float = 1e-5
) -> np.ndarray:
    """Central differences of the logistic objective, one coordinate at a
    time."""
    grad = np.zeros_like(w)
    for r in range(w.shape[0]):
        for c in range(w.shape[1]):
            plus = w.copy()
            plus[r, c] += h
            minus = w.copy()
            minus[r, c] -= h
            grad[r, c] = (
                logistic_loss(features, labels, plus, l2)
                - logistic_loss(features, labels, minus, l2)
            ) / (2 * h)
    return grad


def softmax_probs(logits: list[float]) -> list[float]:
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    total = sum(exps)
    return [e / total for e in exps]


def make_planted_noise_dataset(
    n_per_class: int = 80,
    n_classes: int = 3,
    flip_fraction: float = 0.1,
    words_per_text: int = 8,
    seed: int = 20,
) -> tuple[LabeledDataset, set[int]]:
    """A separable dataset (disjoint per-class vocabularies) with a known
    fraction of labels flipped; returns it and the flipped indices."""
    rng = random.Random(seed)
    names = [f"topic{j}" for j in range(n_classes)]
    banks = {j: [f"w{j}x{t}" for t in range(20)] for j in range(n_classes)}

    examples = []
    for j in range(n_classes):
        for i in range(n_per_class):
            body = " ".join(rng.choice(banks[j]) for _ in range(words_per_text))
            examples.append((f"note {len(examples):03d} {body}", j))

    n_flips = int(flip_fraction * len(examples))
    flipped = set(rng.sample(range(len(examples)), n_flips))
    labeled = []
    for i, (text, true_class) in enumerate(examples):
        label = true_class
        if i in flipped:
            label = (true_class + 1 + rng.randrange(n_classes - 1)) % n_classes
        labeled.append(
            LabeledExample(text=text, label_text=names[label], label_standard=label, dataset_id="planted")
        )
    ds = LabeledDataset(
        dataset_id="planted", classes=tuple(enumerate(names)), examples=tuple(labeled)
    )
    return ds, flipped
