#!/usr/bin/env python3
"""Sweep planted label-noise rates and measure the cleaner's recovery.

For each flip fraction, corrupt a synthetic corpus, run the confident
learning cleaner, and report flag precision/recall averaged over
replicates. Writes one CSV row per rate.

Usage:
    python3 scripts/noise_sweep.py --out runs/noise_sweep.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from entail import (
    CleaningConfig,
    clean,
    derive_seed,
    ingest,
    load_ingest_spec,
    make_synthetic_corpus,
)

sys.path.insert(0, str(Path(__file__).resolve().parent))
from run_pipeline import flip_labels  # noqa: E402


def one_run(ds, fraction: float, seed: int) -> tuple[float, float]:
    noisy, planted = flip_labels(ds, fraction, derive_seed(seed, "noise"))
    _, report = clean(noisy, CleaningConfig(seed=derive_seed(seed, "clean")))
    flagged = set(report.flagged_indices())
    if not flagged:
        return (1.0 if not planted else 0.0), 0.0
    precision = len(flagged & planted) / len(flagged)
    recall = len(flagged & planted) / len(planted) if planted else 1.0
    return precision, recall


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/noise_sweep.csv")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--n-per-class", type=int, default=60)
    parser.add_argument("--replicates", type=int, default=5)
    parser.add_argument(
        "--rates", default="0.05,0.1,0.2,0.3", help="comma-separated flip fractions"
    )
    args = parser.parse_args()
    rates = [float(r) for r in args.rates.split(",")]

    corpus = make_synthetic_corpus(
        Path(args.out).parent / "noise_sweep_data",
        n_per_class=args.n_per_class,
        seed=derive_seed(args.seed, "corpus"),
        noise_rows=False,
    )
    ds, _ = ingest(load_ingest_spec(corpus.ingest_spec))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["flip_fraction", "precision", "recall", "replicates"])
        for rate in rates:
            scores = [
                one_run(ds, rate, derive_seed(args.seed, f"rep-{rep}"))
                for rep in range(args.replicates)
            ]
            precision = sum(s[0] for s in scores) / len(scores)
            recall = sum(s[1] for s in scores) / len(scores)
            writer.writerow([rate, f"{precision:.3f}", f"{recall:.3f}", args.replicates])
            print(f"rate {rate:.2f}: precision {precision:.3f} recall {recall:.3f}")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
