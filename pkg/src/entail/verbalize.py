"""Turn class names into hypothesis sentences.

Hypotheses are data, not code: catalogs live in JSON files keyed by
dataset id, either rendered from a template ("This text is about {}")
or written per class by hand with domain words baked in.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .core import DataError, HypothesisCatalog, LabeledDataset


def render_template(template: str, class_name: str) -> str:
    """Fill the single "{}" placeholder with the class name, verbatim."""
    count = template.count("{}")
    if count != 1:
        raise DataError(
            f"hypothesis template must contain exactly one '{{}}' placeholder, found {count}"
        )
    return template.replace("{}", class_name)


def build_catalog(
    ds: LabeledDataset,
    template: str | None = None,
    explicit: dict[str, str | list[str]] | None = None,
) -> HypothesisCatalog:
    """Build a catalog for a dataset from a template or an explicit map.

    The explicit map is keyed by class name (label_text) and must cover
    every class; values are one hypothesis or a list of alternatives.
    Hypotheses must be non-empty and distinct across classes.
    """
    if (template is None) == (explicit is None):
        raise DataError("provide exactly one of template or explicit hypothesis map")

    entries: dict[int, tuple[str, ...]] = {}
    if template is not None:
        for cid, name in ds.classes:
            entries[cid] = (render_template(template, name),)
    else:
        assert explicit is not None
        names = {name for _, name in ds.classes}
        unknown = set(explicit) - names
        if unknown:
            raise DataError(f"hypothesis map names unknown class {sorted(unknown)[0]!r}")
        for cid, name in ds.classes:
            if name not in explicit:
                raise DataError(f"hypothesis map missing class {name!r}")
            value = explicit[name]
            hyps = (value,) if isinstance(value, str) else tuple(value)
            entries[cid] = hyps

    catalog = HypothesisCatalog(dataset_id=ds.dataset_id, entries=entries)
    _check_catalog(catalog)
    return catalog


def _check_catalog(catalog: HypothesisCatalog) -> None:
    seen: dict[str, int] = {}
    for cid in catalog.class_ids():
        hyps = catalog.entries[cid]
        if not hyps:
            raise DataError(f"class {cid} has no hypotheses")
        for h in hyps:
            if not h.strip():
                raise DataError(f"class {cid} has an empty hypothesis")
            if h in seen and seen[h] != cid:
                raise DataError(f"hypothesis {h!r} appears in classes {seen[h]} and {cid}")
            seen[h] = cid


def sample_incorrect_hypothesis(
    catalog: HypothesisCatalog, correct_class: int, rng: random.Random
) -> tuple[str, int]:
    """Uniformly pick a class other than the correct one, then one of its
    hypotheses. The caller owns the RNG state, which advances
    deterministically."""
    others = [c for c in catalog.class_ids() if c != correct_class]
    if not others:
        raise DataError(
            "catalog has a single class; cannot sample an incorrect hypothesis"
        )
    wrong_class = others[rng.randrange(len(others))]
    hyps = catalog.entries[wrong_class]
    return hyps[rng.randrange(len(hyps))], wrong_class


def save_catalog(catalog: HypothesisCatalog, path: str | Path) -> None:
    payload = {
        "dataset_id": catalog.dataset_id,
        "entries": {str(c): list(catalog.entries[c]) for c in catalog.class_ids()},
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_catalog(path: str | Path) -> HypothesisCatalog:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc.msg}") from exc
    for key in ("dataset_id", "entries"):
        if key not in payload:
            raise DataError(f"{path}: catalog missing {key!r}")
    try:
        entries = {int(c): tuple(hyps) for c, hyps in payload["entries"].items()}
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed catalog entries: {exc}") from exc
    catalog = HypothesisCatalog(dataset_id=str(payload["dataset_id"]), entries=entries)
    _check_catalog(catalog)
    return catalog
