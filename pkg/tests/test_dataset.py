import pytest

from analogest.dataset import (
    Dataset,
    DatasetError,
    FeatureDef,
    ProjectCase,
    dataset_to_csv,
    feature_range,
    load_dataset,
    load_schema,
    write_dataset,
    write_schema,
)

SCHEMA_DOC = """{
  "features": [
    {"name": "id", "kind": "categorical", "role": "case-id"},
    {"name": "size", "kind": "numeric", "role": "predictor", "size_driver": true},
    {"name": "loc", "kind": "numeric", "role": "excluded-peeking", "units": "lines"},
    {"name": "effort", "kind": "numeric", "role": "target", "units": "person hours"}
  ],
  "provenance": "unit test"
}
"""

CSV_DOC = "id,size,loc,effort\r\nA,100,12000,900\r\nB,250,?,2000\r\nC,300,31000,3100\r\n"


@pytest.fixture()
def paths(tmp_path):
    csv_path = tmp_path / "mini.csv"
    schema_path = tmp_path / "mini.schema.json"
    csv_path.write_text(CSV_DOC, newline="")
    schema_path.write_text(SCHEMA_DOC)
    return csv_path, schema_path


def test_load_basic(paths):
    ds = load_dataset(*paths)
    assert ds.n == 3
    assert ds.case("B").values["loc"] is None
    assert ds.case("A").effort == 900.0
    assert ds.provenance == "unit test"


def test_header_order_free(paths, tmp_path):
    csv_path = tmp_path / "shuffled.csv"
    csv_path.write_text("effort,id,loc,size\n900,A,12000,100\n")
    ds = load_dataset(csv_path, paths[1])
    assert ds.case("A").values["size"] == 100.0


def test_unknown_column_rejected(paths, tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("id,size,loc,effort,extra\nA,100,1,900,x\n")
    with pytest.raises(DatasetError, match="unknown columns"):
        load_dataset(csv_path, paths[1])


def test_duplicate_id_rejected(paths, tmp_path):
    csv_path = tmp_path / "dup.csv"
    csv_path.write_text("id,size,loc,effort\nA,100,1,900\nA,200,2,1800\n")
    with pytest.raises(DatasetError, match="duplicate case id 'A'"):
        load_dataset(csv_path, paths[1])


def test_non_numeric_in_numeric_column(paths, tmp_path):
    csv_path = tmp_path / "text.csv"
    csv_path.write_text("id,size,loc,effort\nA,big,1,900\n")
    with pytest.raises(DatasetError, match="non-numeric value 'big'"):
        load_dataset(csv_path, paths[1])


@pytest.mark.parametrize("bad_effort", ["", "?", "0", "-5"])
def test_target_must_be_positive_and_present(paths, tmp_path, bad_effort):
    csv_path = tmp_path / "target.csv"
    csv_path.write_text(f"id,size,loc,effort\nA,100,1,{bad_effort}\n")
    with pytest.raises(DatasetError, match="row 1"):
        load_dataset(csv_path, paths[1])


def test_excluded_peeking_invisible_to_predictor_api(paths):
    ds = load_dataset(*paths)
    assert [f.name for f in ds.active_predictors()] == ["size"]
    assert set(ds.predictor_values("A")) == {"size"}
    # but the value is still loaded and round-trips
    assert ds.case("A").values["loc"] == 12000.0


def test_zero_predictors_is_empty_not_error(tmp_path):
    schema_path = tmp_path / "s.json"
    schema_path.write_text(
        '{"features": [{"name": "loc", "kind": "numeric", "role": "excluded-peeking"},'
        '{"name": "effort", "kind": "numeric", "role": "target"}]}'
    )
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("loc,effort\n1,900\n")
    ds = load_dataset(csv_path, schema_path)
    assert ds.active_predictors() == ()


def test_active_predictors_stable_order():
    feats = [FeatureDef(name=f"f{i}", kind="numeric", role="predictor") for i in range(10)]
    feats[3] = FeatureDef(name="f3", kind="numeric", role="inactive")
    feats[7] = FeatureDef(name="f7", kind="numeric", role="inactive")
    feats.append(FeatureDef(name="effort", kind="numeric", role="target"))
    cases = (ProjectCase(id="A", values={f"f{i}": 1.0 for i in range(10)}, effort=10.0),)
    ds = Dataset(tuple(feats), cases)
    assert [f.name for f in ds.active_predictors()] == [
        "f0", "f1", "f2", "f4", "f5", "f6", "f8", "f9",
    ]


def test_row_index_id_when_no_case_id_feature(tmp_path):
    schema_path = tmp_path / "s.json"
    schema_path.write_text(
        '{"features": [{"name": "size", "kind": "numeric", "role": "predictor"},'
        '{"name": "effort", "kind": "numeric", "role": "target"}]}'
    )
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("size,effort\n10,100\n20,200\n")
    ds = load_dataset(csv_path, schema_path)
    assert ds.case_ids() == ("1", "2")


def test_feature_range_rules(paths):
    ds = load_dataset(*paths)
    assert ds.feature_range("size") == (100.0, 300.0)
    assert ds.feature_range("size", ["A", "B"]) == (100.0, 250.0)
    assert ds.feature_range("size", ["C"]) == (300.0, 300.0)
    # missing values skipped
    assert ds.feature_range("loc") == (12000.0, 31000.0)
    with pytest.raises(DatasetError, match="no non-missing value"):
        ds.feature_range("loc", ["B"])


def test_subset_range_nested_in_full_range(paths):
    ds = load_dataset(*paths)
    lo_all, hi_all = ds.feature_range("size")
    lo_sub, hi_sub = ds.feature_range("size", ["A", "C"])
    assert lo_sub >= lo_all and hi_sub <= hi_all


def test_schema_invariants():
    with pytest.raises(DatasetError, match="exactly one target"):
        load_schema_from_doc({"features": [{"name": "size", "kind": "numeric", "role": "predictor"}]})
    with pytest.raises(DatasetError, match="size_driver"):
        FeatureDef(name="domain", kind="categorical", role="predictor", size_driver=True)
    with pytest.raises(DatasetError, match="unknown keys"):
        load_schema_from_doc(
            {
                "features": [
                    {"name": "effort", "kind": "numeric", "role": "target", "colour": "red"}
                ]
            }
        )


def load_schema_from_doc(doc, tmp_path_factory=None):
    import json
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "schema.json"
        p.write_text(json.dumps(doc))
        return load_schema(p)


def test_boolean_values_validated(tmp_path):
    schema_path = tmp_path / "s.json"
    schema_path.write_text(
        '{"features": [{"name": "rad", "kind": "boolean", "role": "predictor"},'
        '{"name": "effort", "kind": "numeric", "role": "target"}]}'
    )
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("rad,effort\n2,100\n")
    with pytest.raises(DatasetError, match="must be 0 or 1"):
        load_dataset(csv_path, schema_path)


def test_round_trip_is_byte_identical(paths, tmp_path):
    ds = load_dataset(*paths)
    out_csv = tmp_path / "canonical.csv"
    out_schema = tmp_path / "canonical.schema.json"
    write_dataset(ds, out_csv)
    write_schema(ds.schema, out_schema, ds.provenance)
    first = out_csv.read_bytes()
    reloaded = load_dataset(out_csv, out_schema)
    write_dataset(reloaded, out_csv)
    assert out_csv.read_bytes() == first
    assert dataset_to_csv(reloaded) == first.decode("utf-8")


def test_bundled_datasets_load(toy4, duplicates20, synthetic40, demo_mixed):
    assert toy4.n == 4
    assert duplicates20.n == 20
    assert synthetic40.n == 40
    assert demo_mixed.n == 25
    assert demo_mixed.case("D04").values["team_experience"] is None
    assert demo_mixed.case("D09").values["domain"] is None
    assert "loc" not in demo_mixed.predictor_values("D01")
