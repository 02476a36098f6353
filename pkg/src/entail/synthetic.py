"""Bundled synthetic corpus for end-to-end runs without a model.

Generates a small topic-classification CSV whose classes use disjoint
vocabularies (so the cleaner's features separate them), plus the
matching ingest spec, hypothesis catalog, and a planted-truth score file
that makes replayed evaluation recover every true label.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .core import PairScore
from .engine import save_score_file
from .verbalize import render_template

TEMPLATE = "This text is about {}"

_WORD_BANKS = {
    "alpine": [
        "glacier", "ridge", "summit", "avalanche", "chalet", "peak",
        "snowfield", "crampon", "moraine", "icefall", "cornice", "scree",
    ],
    "coastal": [
        "harbor", "tide", "seagull", "lighthouse", "driftwood", "surf",
        "estuary", "breakwater", "kelp", "marina", "dune", "ferry",
    ],
    "desert": [
        "dune", "oasis", "cactus", "mirage", "scorpion", "mesa",
        "arroyo", "saguaro", "sandstorm", "canyon", "adobe", "wadi",
    ],
}
# "dune" appears in two banks; drop it from desert so vocabularies stay disjoint.
_WORD_BANKS["desert"] = [w for w in _WORD_BANKS["desert"] if w != "dune"]


@dataclass(frozen=True)
class SyntheticCorpus:
    corpus_csv: Path
    ingest_spec: Path
    catalog: Path
    score_file: Path
    dataset_id: str
    classes: tuple[str, ...]
    texts_by_label: dict[str, list[str]]


def make_synthetic_corpus(
    out_dir: str | Path,
    n_per_class: int = 30,
    seed: int = 7,
    noise_rows: bool = True,
) -> SyntheticCorpus:
    """Write corpus.csv, ingest_spec.json, catalog.json, and scores.json.

    ``noise_rows`` adds one empty-text row and one exact duplicate so the
    harmonizer's NA/dedup counters have work to do. The score file
    covers every (merged text, hypothesis) pair with a +/-4 logit margin
    keyed by the true label, so evaluation through the file backend is
    exact and reproducible.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_id = "synthetic-topics"
    classes = tuple(_WORD_BANKS)
    rng = random.Random(seed)

    # Rows stay grouped by class so harmonization assigns class ids in
    # the same order the catalog below enumerates them.
    rows: list[tuple[str, str, str]] = []
    texts_by_label: dict[str, list[str]] = {c: [] for c in classes}
    counter = 0
    for label in classes:
        bank = _WORD_BANKS[label]
        for _ in range(n_per_class):
            counter += 1
            title = f"note {counter:03d}"
            body = " ".join(rng.choice(bank) for _ in range(6))
            rows.append((title, body, label))
            texts_by_label[label].append(f"{title} {body}")
    if noise_rows:
        rows.append(("", "", classes[0]))
        rows.append(rows[0])

    corpus_csv = out_dir / "corpus.csv"
    with corpus_csv.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["title", "body", "topic"])
        writer.writerows(rows)

    ingest_spec = out_dir / "ingest_spec.json"
    with ingest_spec.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {
                "source_path": str(corpus_csv),
                "format": "csv",
                "text_columns": ["title", "body"],
                "label_column": "topic",
                "dataset_id": dataset_id,
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    catalog_path = out_dir / "catalog.json"
    with catalog_path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(
            {
                "dataset_id": dataset_id,
                "entries": {
                    str(i): [render_template(TEMPLATE, name)] for i, name in enumerate(classes)
                },
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    hypotheses = {name: render_template(TEMPLATE, name) for name in classes}
    scores: dict[tuple[str, str], PairScore] = {}
    for true_label, texts in texts_by_label.items():
        for text in texts:
            for name, hyp in hypotheses.items():
                margin = 4.0 if name == true_label else -4.0
                scores[(text, hyp)] = PairScore(margin, -margin)
    score_file = out_dir / "scores.json"
    save_score_file(scores, score_file)

    return SyntheticCorpus(
        corpus_csv=corpus_csv,
        ingest_spec=ingest_spec,
        catalog=catalog_path,
        score_file=score_file,
        dataset_id=dataset_id,
        classes=classes,
        texts_by_label=texts_by_label,
    )
