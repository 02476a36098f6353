"""Zero-shot classification through pluggable pair-scoring backends.

A backend maps (premise, hypothesis) pairs to entailment and
not-entailment logits; the engine builds one pair per candidate class,
normalizes the entailment logits (softmax across classes in
single-label mode, per-pair sigmoid in multi-label mode), and picks the
argmax. Backends return logits, never probabilities, so normalization
is owned here and cannot be applied twice.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataError, PairScore, Prediction, TransportError
from .verbalize import render_template

Pair = tuple[str, str]


class ScoringBackend:
    """Interface: score (premise, hypothesis) pairs.

    ``score`` must be a pure function of the pair for a fixed backend
    instance. ``max_batch_size`` caps how many pairs the engine sends at
    once (None = unlimited).
    """

    name: str = "backend"
    max_batch_size: int | None = None

    def score(self, pairs: list[Pair]) -> list[PairScore]:
        raise NotImplementedError


@dataclass(frozen=True)
class ClassificationRequest:
    texts: tuple[str, ...]
    candidate_labels: tuple[str, ...]
    hypothesis_template: str = "This text is about {}"
    multi_label: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "texts", tuple(self.texts))
        object.__setattr__(self, "candidate_labels", tuple(self.candidate_labels))


def _score_chunked(backend: ScoringBackend, pairs: list[Pair]) -> list[PairScore]:
    size = backend.max_batch_size
    if not size or size >= len(pairs):
        chunks = [pairs]
    else:
        chunks = [pairs[i : i + size] for i in range(0, len(pairs), size)]
    scores: list[PairScore] = []
    for chunk in chunks:
        got = backend.score(chunk)
        if len(got) != len(chunk):
            raise DataError(
                f"backend {backend.name!r} returned {len(got)} scores for {len(chunk)} pairs"
            )
        scores.extend(got)
    return scores


def classify(req: ClassificationRequest, backend: ScoringBackend) -> list[Prediction]:
    """Classify each text against the candidate labels.

    Single-label mode: class probabilities are a softmax over the
    entailment logits and sum to 1. Multi-label mode: each class gets an
    independent probability ``exp(e) / (exp(e) + exp(ne))``. Both share
    the same argmax rule (highest entailment, lowest index on ties).
    """
    if not req.texts:
        raise DataError("classification request has no texts")
    if not req.candidate_labels:
        raise DataError("classification request has no candidate labels")
    hypotheses = [render_template(req.hypothesis_template, lbl) for lbl in req.candidate_labels]

    pairs = [(text, hyp) for text in req.texts for hyp in hypotheses]
    scores = _score_chunked(backend, pairs)
    for pair, s in zip(pairs, scores):
        if not (math.isfinite(s.entailment_logit) and math.isfinite(s.not_entailment_logit)):
            raise DataError(
                f"non-finite logits for pair (premise={pair[0][:60]!r}, hypothesis={pair[1]!r})"
            )

    k = len(hypotheses)
    predictions = []
    for i in range(len(req.texts)):
        chunk = scores[i * k : (i + 1) * k]
        ent = np.array([s.entailment_logit for s in chunk], dtype=np.float64)
        if req.multi_label:
            not_ent = np.array([s.not_entailment_logit for s in chunk], dtype=np.float64)
            probs = 1.0 / (1.0 + np.exp(not_ent - ent))
        else:
            shifted = np.exp(ent - ent.max())
            probs = shifted / shifted.sum()
        predictions.append(
            Prediction(
                text_id=i,
                class_probs=tuple(float(p) for p in probs),
                predicted_class=int(np.argmax(probs)),
            )
        )
    return predictions


class MockBackend(ScoringBackend):
    """Deterministic backend for tests and offline runs.

    Modes: "hash" derives logits from a stable digest of the pair;
    "table" replays an explicit (premise, hypothesis) -> logits lookup;
    "planted" scores entailment high exactly when the hypothesis
    contains the premise's true label word.
    """

    def __init__(
        self,
        mode: str = "hash",
        table: dict[Pair, tuple[float, float]] | None = None,
        truth: dict[str, str] | None = None,
        margin: float = 4.0,
    ) -> None:
        if mode not in ("hash", "table", "planted"):
            raise DataError(f"unknown mock backend mode {mode!r}")
        if mode == "table" and table is None:
            raise DataError("table mode needs a score table")
        if mode == "planted" and truth is None:
            raise DataError("planted mode needs a premise -> label-word truth map")
        self.name = f"mock:{mode}"
        self.mode = mode
        self.table = table or {}
        self.truth = truth or {}
        self.margin = margin

    def score(self, pairs: list[Pair]) -> list[PairScore]:
        out = []
        for premise, hypothesis in pairs:
            if self.mode == "hash":
                digest = hashlib.blake2b(
                    f"{premise}\x1f{hypothesis}".encode("utf-8"), digest_size=16
                ).digest()
                e = int.from_bytes(digest[:8], "big") / 2**64 * 6.0 - 3.0
                ne = int.from_bytes(digest[8:], "big") / 2**64 * 6.0 - 3.0
                out.append(PairScore(e, ne))
            elif self.mode == "table":
                key = (premise, hypothesis)
                if key not in self.table:
                    raise DataError(
                        f"no table entry for pair (premise={premise[:60]!r}, "
                        f"hypothesis={hypothesis!r})"
                    )
                e, ne = self.table[key]
                out.append(PairScore(float(e), float(ne)))
            else:
                if premise not in self.truth:
                    raise DataError(f"no planted truth for premise {premise[:60]!r}")
                hit = self.truth[premise] in hypothesis
                m = self.margin
                out.append(PairScore(m, -m) if hit else PairScore(-m, m))
        return out


def mock_backend(
    mode: str = "hash",
    table: dict[Pair, tuple[float, float]] | None = None,
    truth: dict[str, str] | None = None,
    margin: float = 4.0,
) -> MockBackend:
    return MockBackend(mode=mode, table=table, truth=truth, margin=margin)


class HttpBackend(ScoringBackend):
    """Scores pairs over the wire protocol: POST {base}/score with
    {"pairs": [{"premise": ..., "hypothesis": ...}, ...]} and an
    index-aligned {"scores": [{"entailment": ..., "not_entailment":
    ...}, ...]} response. Transport failures are retried twice."""

    RETRIES = 2

    def __init__(self, endpoint_url: str, batch_size: int = 32, timeout: float = 30.0) -> None:
        self.base = endpoint_url.rstrip("/")
        self.name = f"http:{self.base}"
        self.max_batch_size = batch_size
        self.timeout = timeout

    def _post(self, payload: dict) -> dict:
        import requests

        url = self.base + "/score"
        last_exc: Exception | None = None
        for _ in range(1 + self.RETRIES):
            try:
                resp = requests.post(url, json=payload, timeout=self.timeout)
                break
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
        else:
            raise TransportError(
                f"scoring endpoint unreachable after {self.RETRIES} retries: {url}: {last_exc}"
            )
        if resp.status_code != 200:
            raise DataError(
                f"scoring endpoint returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise DataError(f"scoring endpoint returned malformed JSON: {exc}") from exc

    def score(self, pairs: list[Pair]) -> list[PairScore]:
        scores: list[PairScore] = []
        for i in range(0, len(pairs), self.max_batch_size):
            chunk = pairs[i : i + self.max_batch_size]
            payload = {"pairs": [{"premise": p, "hypothesis": h} for p, h in chunk]}
            data = self._post(payload)
            if "scores" not in data or not isinstance(data["scores"], list):
                raise DataError("scoring endpoint response missing 'scores' array")
            got = data["scores"]
            if len(got) != len(chunk):
                raise DataError(
                    f"scoring endpoint returned {len(got)} scores for {len(chunk)} pairs"
                )
            for entry in got:
                try:
                    scores.append(
                        PairScore(float(entry["entailment"]), float(entry["not_entailment"]))
                    )
                except (TypeError, KeyError, ValueError) as exc:
                    raise DataError(f"malformed score entry {entry!r}: {exc}") from exc
        return scores

    def health(self) -> dict:
        import requests

        try:
            resp = requests.get(self.base + "/health", timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise TransportError(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise DataError(f"health endpoint returned HTTP {resp.status_code}")
        return resp.json()


def http_backend(endpoint_url: str, batch_size: int = 32, timeout: float = 30.0) -> HttpBackend:
    return HttpBackend(endpoint_url, batch_size=batch_size, timeout=timeout)


def pair_digest(premise: str, hypothesis: str) -> str:
    """256-bit content digest identifying a pair in a score file."""
    payload = premise.encode("utf-8") + b"\x1f" + hypothesis.encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


class FileBackend(ScoringBackend):
    """Replays pair scores recorded in a JSON file keyed by pair digest.

    Enables bit-reproducible evaluation runs without a model. Digest
    collisions (256-bit) are out of scope.
    """

    def __init__(self, score_file: str | Path) -> None:
        path = Path(score_file)
        self.name = f"file:{path}"
        with path.open("r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON: {exc.msg}") from exc
        self.scores: dict[str, PairScore] = {}
        for digest, entry in raw.items():
            try:
                self.scores[digest] = PairScore(
                    float(entry["entailment"]), float(entry["not_entailment"])
                )
            except (TypeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}: malformed entry for digest {digest}: {exc}") from exc

    def score(self, pairs: list[Pair]) -> list[PairScore]:
        out = []
        for premise, hypothesis in pairs:
            digest = pair_digest(premise, hypothesis)
            if digest not in self.scores:
                raise DataError(
                    f"no recorded score for pair (premise={premise[:60]!r}, "
                    f"hypothesis={hypothesis!r})"
                )
            out.append(self.scores[digest])
        return out


def file_backend(score_file: str | Path) -> FileBackend:
    return FileBackend(score_file)


def save_score_file(scores: dict[Pair, PairScore], path: str | Path) -> None:
    """Write a replayable score file (sorted digests, stable bytes)."""
    payload = {
        pair_digest(p, h): {
            "entailment": s.entailment_logit,
            "not_entailment": s.not_entailment_logit,
        }
        for (p, h), s in scores.items()
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
