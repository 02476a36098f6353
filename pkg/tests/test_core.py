import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entail.core import (
    DataError,
    ENTAILMENT,
    LABEL2ID,
    LabeledDataset,
    LabeledExample,
    NOT_ENTAILMENT,
    UsageError,
    read_jsonl,
    validate_dataset,
    write_jsonl,
)

from .conftest import make_dataset, random_dataset


def test_label2id_is_the_binary_nli_convention():
    assert LABEL2ID == {"entailment": 0, "not_entailment": 1}
    assert ENTAILMENT == 0
    assert NOT_ENTAILMENT == 1


def test_validate_accepts_well_formed_dataset(tiny_ds):
    assert validate_dataset(tiny_ds) == []


def test_validate_names_each_violation():
    ds = LabeledDataset(
        dataset_id="bad",
        classes=((0, "a"), (0, "a"), (5, "b")),
        examples=(
            LabeledExample("", "a", 0, "bad"),
            LabeledExample("x", "a", 9, "bad"),
            LabeledExample("y", "WRONG", 0, "bad"),
            LabeledExample("z", "a", 0, "bad", split="dev"),
            LabeledExample("z", "a", 0, "bad", split="dev"),
        ),
    )
    messages = validate_dataset(ds)
    assert any("duplicate class id 0" in m for m in messages)
    assert any("duplicate class name 'a'" in m for m in messages)
    assert any("id 5 outside" in m for m in messages)
    assert any("example 0: empty text" in m for m in messages)
    assert any("label_standard 9 not in classes" in m for m in messages)
    assert any("does not match class" in m for m in messages)
    assert any("split 'dev'" in m for m in messages)
    assert any("duplicate text of example 3" in m for m in messages)


def test_duplicate_text_allowed_across_splits():
    ds = make_dataset([("same", 0), ("same", 0)], ["only", "other"], splits=["train", "test"])
    assert validate_dataset(ds) == []


def test_subset_filters_by_split(tiny_ds):
    splits = ["train", "test", "train", "test", "train"]
    ds = make_dataset(
        [(ex.text, ex.label_standard) for ex in tiny_ds.examples],
        [n for _, n in tiny_ds.classes],
        splits=splits,
    )
    assert len(ds.subset("train").examples) == 3
    assert len(ds.subset("test").examples) == 2
    assert ds.subset("all") is ds
    assert ds.subset("test").classes == ds.classes
    with pytest.raises(UsageError):
        ds.subset("dev")


def test_keep_indices_preserves_order(tiny_ds):
    kept = tiny_ds.keep_indices([4, 0, 2])
    assert [ex.text for ex in kept.examples] == [
        tiny_ds.examples[0].text,
        tiny_ds.examples[2].text,
        tiny_ds.examples[4].text,
    ]


def test_class_sizes_counts_empty_classes(tiny_ds):
    ds = tiny_ds.keep_indices([0, 1])
    assert ds.class_sizes() == {0: 2, 1: 0, 2: 0}


def test_jsonl_round_trip(tmp_path, tiny_ds):
    path = tmp_path / "ds.jsonl"
    write_jsonl(tiny_ds, path)
    back = read_jsonl(path)
    assert back == tiny_ds


def test_jsonl_examples_adopt_header_dataset_id(tmp_path, tiny_ds):
    path = tmp_path / "ds.jsonl"
    write_jsonl(tiny_ds, path)
    back = read_jsonl(path)
    assert all(ex.dataset_id == tiny_ds.dataset_id for ex in back.examples)


def test_read_jsonl_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DataError, match="missing header"):
        read_jsonl(path)


def test_read_jsonl_rejects_unknown_field_with_line_number(tmp_path, tiny_ds):
    path = tmp_path / "ds.jsonl"
    write_jsonl(tiny_ds, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    row = json.loads(lines[1])
    row["mystery"] = 1
    lines[1] = json.dumps(row)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DataError, match=r"line 2: unknown field 'mystery'"):
        read_jsonl(path)


def test_read_jsonl_rejects_missing_key_and_bad_json(tmp_path, tiny_ds):
    path = tmp_path / "ds.jsonl"
    write_jsonl(tiny_ds, path)
    lines = path.read_text(encoding="utf-8").splitlines()

    broken = tmp_path / "missing.jsonl"
    broken.write_text(lines[0] + "\n" + '{"text": "a"}' + "\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 2: missing 'label_text'"):
        read_jsonl(broken)

    garbled = tmp_path / "garbled.jsonl"
    garbled.write_text(lines[0] + "\n" + "{not json\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 2: invalid JSON"):
        read_jsonl(garbled)


def test_read_jsonl_split_defaults_to_train(tmp_path, tiny_ds):
    path = tmp_path / "ds.jsonl"
    write_jsonl(tiny_ds, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    row = json.loads(lines[1])
    del row["split"]
    lines[1] = json.dumps(row)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert read_jsonl(path).examples[0].split == "train"


@settings(max_examples=60, deadline=None)
@given(
    texts=st.lists(
        st.text(min_size=1, max_size=40).filter(lambda t: t.strip()),
        min_size=1,
        max_size=12,
        unique=True,
    ),
    data=st.data(),
)
def test_jsonl_round_trip_arbitrary_text(tmp_path_factory, texts, data):
    k = data.draw(st.integers(min_value=2, max_value=4))
    pairs = [(t, data.draw(st.integers(min_value=0, max_value=k - 1))) for t in texts]
    ds = make_dataset(pairs, [f"c{j}" for j in range(k)])
    path = tmp_path_factory.mktemp("rt") / "ds.jsonl"
    write_jsonl(ds, path)
    assert read_jsonl(path) == ds


def test_random_dataset_builder_is_valid():
    rng = random.Random(0)
    for _ in range(20):
        assert validate_dataset(random_dataset(rng)) == []
