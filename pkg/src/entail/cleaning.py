"""Label-noise detection and downsampling.

The cleaner embeds texts (hashed TF-IDF by default, or a remote /embed
endpoint), builds out-of-fold class probabilities with a from-scratch
multinomial logistic regression, and flags probable label errors via
per-class confidence thresholds and the confident joint. Flag removal is
capped per class so minority classes are not wiped out wholesale.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DataError, LabeledDataset, TransportError

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+")

DEFAULT_DIMS = 256


def _token_bucket(token: str, dims: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dims


def embed(
    texts: list[str],
    dims: int = DEFAULT_DIMS,
    endpoint: str | None = None,
    timeout: float = 30.0,
) -> np.ndarray:
    """Embed texts into an (n, dims) float matrix.

    Built-in embedder: hashed TF-IDF. Tokens are lowercased word matches
    of ``\\w+``; each token lands in bucket ``hash64(token) % dims``
    (stable blake2b hash); term weight is ``(1 + ln tf) * idf`` with the
    smoothed ``idf = ln((1 + n) / (1 + df)) + 1``; rows are
    L2-normalized. Texts with no tokens stay all-zero.

    When ``endpoint`` is given, delegates to ``POST {endpoint}/embed``
    instead and returns whatever dimensionality the service produces.
    """
    if not texts:
        raise DataError("embed requires at least one text")
    if endpoint is not None:
        return _remote_embed(texts, endpoint, timeout)

    n = len(texts)
    token_lists = [_WORD_RE.findall(t.lower()) for t in texts]
    df: dict[str, int] = {}
    for tokens in token_lists:
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items()}

    rows = np.zeros((n, dims), dtype=np.float64)
    for i, tokens in enumerate(token_lists):
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for token, c in counts.items():
            rows[i, _token_bucket(token, dims)] += (1.0 + math.log(c)) * idf[token]
    norms = np.linalg.norm(rows, axis=1)
    nonzero = norms > 0
    rows[nonzero] /= norms[nonzero, None]
    return rows


def _remote_embed(texts: list[str], endpoint: str, timeout: float) -> np.ndarray:
    import requests

    url = endpoint.rstrip("/") + "/embed"
    try:
        resp = requests.post(url, json={"texts": list(texts)}, timeout=timeout)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise TransportError(f"embedding endpoint unreachable: {url}: {exc}") from exc
    if resp.status_code != 200:
        raise DataError(f"embedding endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        payload = resp.json()
        vectors = payload["embeddings"]
    except (ValueError, KeyError) as exc:
        raise DataError(f"embedding endpoint returned malformed payload: {exc}") from exc
    if len(vectors) != len(texts):
        raise DataError(
            f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} texts"
        )
    matrix = np.asarray(vectors, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise DataError("embedding endpoint returned non-finite values")
    return matrix


@dataclass(frozen=True)
class LogisticFit:
    """Fitted multinomial logistic regression.

    ``weights`` has shape (d + 1, K); the last row is the unpenalized
    bias. ``loss_history`` holds the objective after every accepted
    step, starting with the initial loss.
    """

    weights: np.ndarray
    loss_history: tuple[float, ...]
    n_iter: int
    converged: bool


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=1, keepdims=True)


def _loss_and_grad(
    xb: np.ndarray, y_onehot: np.ndarray, labels: np.ndarray, w: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    n = xb.shape[0]
    z = xb @ w
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    ce = float(np.mean(lse - z[np.arange(n), labels]))
    reg = l2 / (2.0 * n) * float(np.sum(w[:-1] ** 2))
    loss = ce + reg

    p = _softmax_rows(z)
    grad = xb.T @ (p - y_onehot) / n
    grad[:-1] += (l2 / n) * w[:-1]
    return loss, grad


def logistic_loss(
    features: np.ndarray, labels: np.ndarray, w: np.ndarray, l2: float = 1.0
) -> float:
    """Objective value at w: mean cross-entropy plus (l2/2n)*||W||^2, bias free."""
    xb = np.hstack([features, np.ones((features.shape[0], 1))])
    labels = np.asarray(labels, dtype=int)
    k = w.shape[1]
    onehot = np.zeros((len(labels), k))
    onehot[np.arange(len(labels)), labels] = 1.0
    loss, _ = _loss_and_grad(xb, onehot, labels, w, l2)
    return loss


def logistic_gradient(
    features: np.ndarray, labels: np.ndarray, w: np.ndarray, l2: float = 1.0
) -> np.ndarray:
    """Analytic gradient of :func:`logistic_loss` at w, shape (d + 1, K)."""
    xb = np.hstack([features, np.ones((features.shape[0], 1))])
    labels = np.asarray(labels, dtype=int)
    k = w.shape[1]
    onehot = np.zeros((len(labels), k))
    onehot[np.arange(len(labels)), labels] = 1.0
    _, grad = _loss_and_grad(xb, onehot, labels, w, l2)
    return grad


def fit_logistic(
    features: np.ndarray,
    labels: np.ndarray | list[int],
    l2: float = 1.0,
    max_iter: int = 500,
    tol: float = 1e-6,
    n_classes: int | None = None,
) -> LogisticFit:
    """Fit softmax regression by gradient descent with backtracking.

    Minimizes mean cross-entropy plus ``(l2 / 2n) * ||W||^2`` (bias row
    unpenalized). Each step halves the step size until the Armijo
    condition holds, so the recorded loss never increases. Stops when
    the gradient infinity-norm drops below ``tol`` or after
    ``max_iter`` accepted steps.
    """
    x = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    n, d = x.shape
    k = n_classes if n_classes is not None else int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= k:
        raise DataError(f"labels must lie in [0, {k})")
    if n < k:
        raise DataError(f"need at least as many examples ({n}) as classes ({k})")
    if not np.all(np.isfinite(x)):
        raise DataError("feature matrix contains non-finite values")

    xb = np.hstack([x, np.ones((n, 1))])
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0

    w = np.zeros((d + 1, k))
    loss, grad = _loss_and_grad(xb, onehot, labels, w, l2)
    if not math.isfinite(loss):
        raise DataError("non-finite loss; check the feature matrix")
    history = [loss]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gradnorm_inf = float(np.abs(grad).max())
        if gradnorm_inf < tol:
            converged = True
            it -= 1
            break
        gnorm2 = float(np.sum(grad * grad))
        step = min(step * 2.0, 1e4)
        while True:
            candidate = w - step * grad
            new_loss, new_grad = _loss_and_grad(xb, onehot, labels, candidate, l2)
            if math.isfinite(new_loss) and new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if step < 1e-20:
            break
        w, loss, grad = candidate, new_loss, new_grad
        history.append(loss)
        if not math.isfinite(loss):
            raise DataError("non-finite loss during optimization")
    return LogisticFit(weights=w, loss_history=tuple(history), n_iter=it, converged=converged)


def predict_proba(weights: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Class probabilities under a fitted weight matrix, rows sum to 1."""
    x = np.asarray(features, dtype=np.float64)
    xb = np.hstack([x, np.ones((x.shape[0], 1))])
    return _softmax_rows(xb @ weights)


def out_of_fold_probs(
    ds: LabeledDataset,
    k: int = 5,
    seed: int = 0,
    features: np.ndarray | None = None,
    l2: float = 1.0,
) -> np.ndarray:
    """Stratified k-fold out-of-fold class probabilities, shape (n, K).

    Every example's row comes from the model trained without its fold.
    k is lowered to the smallest class size (floor 2) when classes are
    too small; classes with a single example are excluded from scoring
    and get a one-hot row on their given label, which keeps them out of
    the flag list downstream.
    """
    n = len(ds.examples)
    n_classes = ds.num_classes
    labels = np.asarray(ds.labels(), dtype=int)
    if features is None:
        features = embed(ds.texts())
    if features.shape[0] != n:
        raise DataError(f"feature rows ({features.shape[0]}) != dataset size ({n})")

    probs = np.zeros((n, n_classes), dtype=np.float64)
    sizes = ds.class_sizes()
    singleton_classes = {c for c, size in sizes.items() if size == 1}
    for i in range(n):
        if labels[i] in singleton_classes:
            probs[i, labels[i]] = 1.0
    if singleton_classes:
        logger.warning(
            "classes %s have a single example; excluded from cleaning",
            sorted(singleton_classes),
        )

    included = [i for i in range(n) if labels[i] not in singleton_classes]
    if not included:
        return probs
    min_size = min(size for c, size in sizes.items() if size >= 2)
    k_eff = max(2, min(k, min_size))
    if k_eff != k:
        logger.warning("lowering fold count from %d to %d (smallest class size)", k, k_eff)

    rng = random.Random(seed)
    fold = np.full(n, -1, dtype=int)
    for cid in sorted(sizes):
        if cid in singleton_classes:
            continue
        idxs = [i for i in included if labels[i] == cid]
        rng.shuffle(idxs)
        for pos, i in enumerate(idxs):
            fold[i] = pos % k_eff

    for f in range(k_eff):
        train_idx = [i for i in included if fold[i] != f]
        test_idx = [i for i in included if fold[i] == f]
        if not test_idx:
            continue
        fit = fit_logistic(features[train_idx], labels[train_idx], l2=l2, n_classes=n_classes)
        probs[test_idx] = predict_proba(fit.weights, features[test_idx])

    row_sums = probs.sum(axis=1)
    if not np.allclose(row_sums, 1.0, atol=1e-9):
        raise DataError("out-of-fold probability rows do not sum to 1")
    return probs


@dataclass(frozen=True)
class Flag:
    """One suspected label error."""

    index: int
    given_label: int
    suggested_label: int
    self_confidence: float


@dataclass
class CleaningReport:
    thresholds: tuple[float, ...] = ()
    confident_joint: tuple[tuple[int, ...], ...] = ()
    flagged: list[Flag] = field(default_factory=list)
    removed_fraction_per_class: tuple[float, ...] = ()
    excluded_indices: tuple[int, ...] = ()
    skipped: bool = False

    def flagged_indices(self) -> list[int]:
        return [f.index for f in self.flagged]

    def to_dict(self) -> dict:
        return {
            "skipped": self.skipped,
            "thresholds": list(self.thresholds),
            "confident_joint": [list(row) for row in self.confident_joint],
            "flagged": [
                {
                    "index": f.index,
                    "given_label": f.given_label,
                    "suggested_label": f.suggested_label,
                    "self_confidence": f.self_confidence,
                }
                for f in self.flagged
            ],
            "removed_fraction_per_class": list(self.removed_fraction_per_class),
            "excluded_indices": list(self.excluded_indices),
        }

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def find_label_issues(
    probs: np.ndarray,
    labels: np.ndarray | list[int],
    max_removal_fraction_per_class: float = 0.5,
) -> CleaningReport:
    """Flag probable label errors from out-of-fold probabilities.

    Per-class threshold t[j] is the mean probability of class j over the
    examples given label j. Each example is confidently assigned to the
    highest-probability class among those meeting their threshold
    (inclusive >=, lowest index on ties); assignments build the K x K
    confident joint, and off-diagonal assignments become flag
    candidates. Candidates are ranked by ascending self-confidence, and
    within each given class at most
    ``floor(max_removal_fraction_per_class * class size)`` are flagged,
    keeping the lowest-confidence ones.
    """
    p = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    n, n_classes = p.shape
    if n_classes < 2:
        raise DataError("cleaning is undefined for fewer than 2 classes")
    if labels.shape[0] != n:
        raise DataError(f"labels ({labels.shape[0]}) do not match probability rows ({n})")
    if not np.allclose(p.sum(axis=1), 1.0, atol=1e-8):
        raise DataError("probability rows must sum to 1")

    # Zero-support classes get an infinite threshold: nothing can be
    # confidently assigned to a class no example claims.
    thresholds = np.full(n_classes, np.inf)
    for j in range(n_classes):
        members = labels == j
        count = int(members.sum())
        if count:
            thresholds[j] = float(np.sum(p[members, j])) / count

    eligible = p >= thresholds[None, :]
    has_assignment = eligible.any(axis=1)
    masked = np.where(eligible, p, -np.inf)
    assigned = np.argmax(masked, axis=1)

    joint = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(joint, (labels[has_assignment], assigned[has_assignment]), 1)

    class_sizes = np.bincount(labels, minlength=n_classes)
    candidates_by_class: dict[int, list[Flag]] = {}
    for i in range(n):
        if has_assignment[i] and assigned[i] != labels[i]:
            flag = Flag(
                index=i,
                given_label=int(labels[i]),
                suggested_label=int(assigned[i]),
                self_confidence=float(p[i, labels[i]]),
            )
            candidates_by_class.setdefault(int(labels[i]), []).append(flag)

    kept: list[Flag] = []
    for cid, flags in candidates_by_class.items():
        cap = int(max_removal_fraction_per_class * class_sizes[cid])
        flags.sort(key=lambda f: (f.self_confidence, f.index))
        kept.extend(flags[:cap])
    kept.sort(key=lambda f: (f.self_confidence, f.index))

    removed_fraction = tuple(
        (sum(1 for f in kept if f.given_label == j) / class_sizes[j]) if class_sizes[j] else 0.0
        for j in range(n_classes)
    )
    return CleaningReport(
        thresholds=tuple(float(t) for t in thresholds),
        confident_joint=tuple(tuple(int(v) for v in row) for row in joint),
        flagged=kept,
        removed_fraction_per_class=removed_fraction,
    )


@dataclass(frozen=True)
class CleaningConfig:
    k: int = 5
    seed: int = 0
    max_removal_fraction_per_class: float = 0.5
    dims: int = DEFAULT_DIMS
    endpoint: str | None = None
    l2: float = 1.0
    skip: bool = False


def clean(
    ds: LabeledDataset, config: CleaningConfig | None = None
) -> tuple[LabeledDataset, CleaningReport]:
    """Remove probable label noise; returns the cleaned dataset and report.

    ``config.skip`` bypasses cleaning entirely (for complex tasks where
    prediction-overlap analysis is unreliable) and returns the dataset
    unchanged.
    """
    config = config or CleaningConfig()
    if config.skip:
        return ds, CleaningReport(skipped=True)
    if ds.num_classes < 2:
        raise DataError("cleaning is undefined for fewer than 2 classes")

    features = embed(ds.texts(), dims=config.dims, endpoint=config.endpoint)
    probs = out_of_fold_probs(ds, k=config.k, seed=config.seed, features=features, l2=config.l2)
    report = find_label_issues(
        probs, ds.labels(), max_removal_fraction_per_class=config.max_removal_fraction_per_class
    )
    sizes = ds.class_sizes()
    singleton = {c for c, size in sizes.items() if size == 1}
    report.excluded_indices = tuple(
        i for i, ex in enumerate(ds.examples) if ex.label_standard in singleton
    )
    flagged = set(report.flagged_indices())
    cleaned = ds.keep_indices(i for i in range(len(ds.examples)) if i not in flagged)
    return cleaned, report


def downsample(
    ds: LabeledDataset,
    per_class_cap: int = 500,
    per_dataset_cap: int = 5000,
    seed: int = 0,
) -> LabeledDataset:
    """Cap class sizes, then the dataset total, by seeded uniform sampling.

    First each class is sampled down (without replacement) to
    ``per_class_cap``. If the total still exceeds ``per_dataset_cap``,
    per-class targets are set proportionally with largest-remainder
    rounding so the cap is hit exactly. Original example order is kept.
    """
    if per_class_cap < 1 or per_dataset_cap < 1:
        raise DataError("downsample caps must be >= 1")

    rng = random.Random(seed)
    by_class: dict[int, list[int]] = {cid: [] for cid, _ in ds.classes}
    for i, ex in enumerate(ds.examples):
        by_class.setdefault(ex.label_standard, []).append(i)

    kept: dict[int, list[int]] = {}
    for cid in sorted(by_class):
        indices = by_class[cid]
        if len(indices) > per_class_cap:
            kept[cid] = sorted(rng.sample(indices, per_class_cap))
        else:
            kept[cid] = list(indices)

    total = sum(len(v) for v in kept.values())
    if total > per_dataset_cap:
        quotas = {cid: per_dataset_cap * len(kept[cid]) / total for cid in kept}
        targets = {cid: int(math.floor(q)) for cid, q in quotas.items()}
        leftover = per_dataset_cap - sum(targets.values())
        by_remainder = sorted(kept, key=lambda c: (-(quotas[c] - targets[c]), c))
        for cid in by_remainder[:leftover]:
            targets[cid] += 1
        for cid in sorted(kept):
            if targets[cid] < len(kept[cid]):
                kept[cid] = sorted(rng.sample(kept[cid], targets[cid]))

    surviving = sorted(i for indices in kept.values() for i in indices)
    return ds.keep_indices(surviving)
