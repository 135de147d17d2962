import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from page.dataset import (CANONICAL_ORDER, DatasetError, EarsCategory,
                          RequirementRecord, load_dataset, make_folds,
                          parse_label, save_dataset, stratified_split)


def test_canonical_order_and_ids():
    assert [int(c) for c in CANONICAL_ORDER] == [0, 1, 2, 3, 4]
    assert [c.display_name for c in CANONICAL_ORDER] == [
        "Event-driven", "Optional", "State-driven", "Ubiquitous",
        "Unwanted behavior",
    ]


@pytest.mark.parametrize("text,expected", [
    ("Event-driven", EarsCategory.EVENT_DRIVEN),
    ("EventDriven", EarsCategory.EVENT_DRIVEN),
    ("event driven", EarsCategory.EVENT_DRIVEN),
    ("OPTIONAL", EarsCategory.OPTIONAL),
    ("State-driven", EarsCategory.STATE_DRIVEN),
    ("state_driven".replace("_", " "), EarsCategory.STATE_DRIVEN),
    ("ubiquitous", EarsCategory.UBIQUITOUS),
    ("Unwanted behavior", EarsCategory.UNWANTED_BEHAVIOR),
    ("UNWANTED-BEHAVIOR", EarsCategory.UNWANTED_BEHAVIOR),
    ("  unwantedbehavior  ", EarsCategory.UNWANTED_BEHAVIOR),
])
def test_parse_label_variants(text, expected):
    assert parse_label(text) is expected


@pytest.mark.parametrize("bad", ["", "eventual", "driven", "none", "ubiq"])
def test_parse_label_rejects_unknown(bad):
    with pytest.raises(DatasetError):
        parse_label(bad)


def test_record_validation():
    with pytest.raises(DatasetError):
        RequirementRecord(0, "  ", EarsCategory.OPTIONAL, "x")
    with pytest.raises(DatasetError):
        RequirementRecord(0, "x", EarsCategory.OPTIONAL, "")
    with pytest.raises(DatasetError):
        RequirementRecord(-1, "x", EarsCategory.OPTIONAL, "y")


def test_load_dataset_basic(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text(
        'natural,label,ears\n'
        '"The system shall notify the admin when the server restarts.",'
        'Event-driven,'
        '"When the server restarts, the system shall notify the admin."\n',
        encoding="utf-8")
    records = load_dataset(path)
    assert len(records) == 1
    assert records[0].id == 0
    assert records[0].label is EarsCategory.EVENT_DRIVEN
    assert records[0].gold_ears.startswith("When the server restarts,")


def test_load_dataset_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("natural,label,ears\n", encoding="utf-8")
    assert load_dataset(path) == []


def test_load_dataset_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_dataset(tmp_path / "nope.csv")


def test_load_dataset_missing_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("text,label,ears\na,Optional,b\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="natural"):
        load_dataset(path)


def test_load_dataset_bad_label_names_line_and_value(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("natural,label,ears\na,Optional,b\nc,Banana,d\n",
                    encoding="utf-8")
    with pytest.raises(DatasetError) as err:
        load_dataset(path)
    assert "line 3" in str(err.value)
    assert "Banana" in str(err.value)


def test_load_dataset_empty_field_rejected(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("natural,label,ears\n,Optional,b\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="line 2"):
        load_dataset(path)


def test_save_load_roundtrip(tmp_path, tiny_records):
    path = tmp_path / "round.csv"
    save_dataset(tiny_records, path)
    again = load_dataset(path)
    assert again == tiny_records


def test_quoted_fields_with_commas_roundtrip(tmp_path):
    rec = RequirementRecord(
        0, 'She said, "go" and left, quietly.', EarsCategory.UBIQUITOUS,
        'Always, she said, "go".')
    path = tmp_path / "q.csv"
    save_dataset([rec], path)
    assert load_dataset(path) == [rec]


def _balanced_records(per_class):
    records = []
    for j in range(per_class):
        for cat in CANONICAL_ORDER:
            records.append(RequirementRecord(
                len(records), f"text {j} {cat.name}", cat, f"gold {j}"))
    return records


def test_split_partitions_ids():
    records = _balanced_records(10)
    split = stratified_split(records, 0.2, seed=3)
    all_ids = {r.id for r in records}
    assert split.train_ids | split.test_ids == all_ids
    assert split.train_ids & split.test_ids == frozenset()


def test_split_sizes_balanced_case():
    # 50 records at 20% -> 10 test rows, 2 per class
    records = _balanced_records(10)
    split = stratified_split(records, 0.2, seed=0)
    assert len(split.test_ids) == 10
    labels = {r.id: r.label for r in records}
    for cat in CANONICAL_ORDER:
        assert sum(1 for i in split.test_ids if labels[i] is cat) == 2


def test_split_two_classes_one_each():
    # 10 records, 5 per class over 2 classes, fraction 0.2 -> 1 per class
    records = []
    for j in range(5):
        for cat in (EarsCategory.EVENT_DRIVEN, EarsCategory.OPTIONAL):
            records.append(RequirementRecord(
                len(records), f"t{j}{cat}", cat, "g"))
    split = stratified_split(records, 0.2, seed=11)
    labels = {r.id: r.label for r in records}
    assert len(split.test_ids) == 2
    per = {cat: sum(1 for i in split.test_ids if labels[i] is cat)
           for cat in (EarsCategory.EVENT_DRIVEN, EarsCategory.OPTIONAL)}
    assert per == {EarsCategory.EVENT_DRIVEN: 1, EarsCategory.OPTIONAL: 1}


def test_split_zero_fraction():
    records = _balanced_records(2)
    split = stratified_split(records, 0.0, seed=0)
    assert split.test_ids == frozenset()
    assert split.train_ids == frozenset(r.id for r in records)


def test_split_rejects_bad_fraction():
    records = _balanced_records(1)
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(DatasetError):
            stratified_split(records, bad, seed=0)
    with pytest.raises(DatasetError):
        stratified_split([], 0.2, seed=0)


def test_split_deterministic_and_seed_sensitive():
    records = _balanced_records(20)
    a = stratified_split(records, 0.2, seed=7)
    b = stratified_split(records, 0.2, seed=7)
    c = stratified_split(records, 0.2, seed=8)
    assert a == b
    assert a != c


@settings(max_examples=60, deadline=None)
@given(
    counts=st.lists(st.integers(min_value=1, max_value=12), min_size=1,
                    max_size=5),
    fraction=st.floats(min_value=0.0, max_value=0.9, allow_nan=False),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_split_properties(counts, fraction, seed):
    records = []
    for cat, count in zip(CANONICAL_ORDER, counts):
        for _ in range(count):
            records.append(RequirementRecord(
                len(records), f"r{len(records)}", cat, "g"))
    split = stratified_split(records, fraction, seed)
    n = len(records)
    assert len(split.test_ids) == int(n * fraction + 0.5)
    labels = {r.id: r.label for r in records}
    for cat, count in zip(CANONICAL_ORDER, counts):
        got = sum(1 for i in split.test_ids if labels[i] is cat)
        assert abs(got - fraction * count) <= 1.0


def test_folds_balanced_five_by_five():
    records = _balanced_records(10)
    labels = {r.id: r.label for r in records}
    plan = make_folds({r.id for r in records}, labels, k=5, seed=0)
    assert plan.k == 5
    assert [len(f) for f in plan.folds] == [10] * 5
    for fold in plan.folds:
        for cat in CANONICAL_ORDER:
            assert sum(1 for i in fold if labels[i] is cat) == 2


def test_folds_partition_and_determinism():
    records = _balanced_records(7)
    ids = {r.id for r in records}
    labels = {r.id: r.label for r in records}
    a = make_folds(ids, labels, k=3, seed=5)
    b = make_folds(ids, labels, k=3, seed=5)
    assert a == b
    union = set()
    for i, fold in enumerate(a.folds):
        for other in a.folds[i + 1:]:
            assert not fold & other
        union |= fold
    assert union == ids


def test_folds_two_by_two():
    records = []
    for j in range(2):
        for cat in (EarsCategory.OPTIONAL, EarsCategory.UBIQUITOUS):
            records.append(RequirementRecord(
                len(records), f"r{len(records)}", cat, "g"))
    labels = {r.id: r.label for r in records}
    plan = make_folds({r.id for r in records}, labels, k=2, seed=1)
    for fold in plan.folds:
        assert len(fold) == 2
        assert {labels[i] for i in fold} == {EarsCategory.OPTIONAL,
                                             EarsCategory.UBIQUITOUS}


def test_folds_reject_k_too_large():
    records = _balanced_records(3)
    labels = {r.id: r.label for r in records}
    with pytest.raises(DatasetError):
        make_folds({r.id for r in records}, labels, k=4, seed=0)
    with pytest.raises(DatasetError):
        make_folds({r.id for r in records}, labels, k=1, seed=0)
