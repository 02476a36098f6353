import random

import pytest

from entail.core import HypothesisCatalog, LabeledDataset, LabeledExample
from entail.verbalize import build_catalog

TEMPLATE = "This text is about {}"


def make_dataset(
    labeled_texts: list[tuple[str, int]],
    class_names: list[str],
    dataset_id: str = "toy",
    splits: list[str] | None = None,
) -> LabeledDataset:
    """Build a dataset from (text, class_id) pairs and an ordered name list."""
    classes = tuple(enumerate(class_names))
    names = dict(classes)
    examples = tuple(
        LabeledExample(
            text=text,
            label_text=names[cid],
            label_standard=cid,
            dataset_id=dataset_id,
            split=splits[i] if splits else "train",
        )
        for i, (text, cid) in enumerate(labeled_texts)
    )
    return LabeledDataset(dataset_id=dataset_id, classes=classes, examples=examples)


def random_dataset(
    rng: random.Random,
    n_texts: int | None = None,
    n_classes: int | None = None,
    dataset_id: str = "rand",
) -> LabeledDataset:
    """A structurally valid dataset with unique texts; every class id in
    [0, K) appears in the class list but not necessarily in the examples."""
    k = n_classes if n_classes is not None else rng.randint(2, 10)
    n = n_texts if n_texts is not None else rng.randint(1, 50)
    names = [f"topic{j}" for j in range(k)]
    pairs = [(f"text {i} {rng.randrange(1 << 30):x}", rng.randrange(k)) for i in range(n)]
    return make_dataset(pairs, names, dataset_id=dataset_id)


def catalog_for(ds: LabeledDataset) -> HypothesisCatalog:
    return build_catalog(ds, template=TEMPLATE)


@pytest.fixture
def tiny_ds() -> LabeledDataset:
    return make_dataset(
        [
            ("the glacier calved into the fjord", 0),
            ("lift tickets cover both summit gondolas", 0),
            ("the harbor master logged two ferries", 1),
            ("kelp washed over the breakwater at dawn", 1),
            ("a scorpion crossed the dry arroyo", 2),
        ],
        ["alpine", "coastal", "desert"],
    )
