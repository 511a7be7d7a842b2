import numpy as np
import pytest

from selftimed_tm.config import (RunConfig, RunManifest, parse_delay_table, parse_int_list,
                                 read_config_file, resolve)
from selftimed_tm.dataset import (DatasetError, load_dataset, majority_baseline, parse_rows,
                                  split_indices)
from selftimed_tm.tm import ConfigError, Sample


def test_parse_row_with_target_class():
    (s,) = parse_rows(["1 0 1 0 2"], target_class=2)
    assert s == Sample((1, 0, 1, 0), True)
    (s,) = parse_rows(["1,0,1,0,2"], target_class=0)
    assert s.label is False


def test_label_column_and_comments():
    rows = parse_rows(["# header", "3 1 0", "", "0 1 1  # trailing"], label_column=0, target_class=3)
    assert rows == [Sample((1, 0), True), Sample((1, 1), False)]


def test_bad_value_reports_line():
    with pytest.raises(DatasetError, match=r"f\.txt:2: feature 1 is '3'"):
        parse_rows(["1 0 0", "1 3 0"], source="f.txt")


def test_ragged_and_empty():
    with pytest.raises(DatasetError, match=":2:"):
        parse_rows(["1 0 0", "1 0"])
    with pytest.raises(DatasetError):
        parse_rows(["# nothing"])


def test_bundled_iris():
    ds = load_dataset()
    assert len(ds) == 150 and ds.feature_count == 16
    assert ds.features().shape == (150, 16)
    assert ds.labels().sum() == 50
    assert majority_baseline(ds.samples) == pytest.approx(2 / 3)


def test_split_is_disjoint_and_covering():
    train, test = split_indices(150, seed=3)
    assert len(train) == 120 and len(test) == 30
    assert set(train).isdisjoint(test) and set(train) | set(test) == set(range(150))
    assert split_indices(150, seed=3) == (train, test)


def test_load_custom_file(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,0,a\n0,1,b\n1,1,a\n0,0,b\n1,0,a\n", encoding="utf-8")
    ds = load_dataset(p, target_class="a", train_fraction=0.6)
    assert ds.labels().tolist() == [True, False, True, False, True]
    assert len(ds.train) == 3 and len(ds.test) == 2


def test_empty_file_raises(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(p)


def test_parsers():
    assert parse_int_list("0, 4 50") == [0, 4, 50]
    assert parse_delay_table("and2=1, FA=2.5") == {"AND2": 1.0, "FA": 2.5}
    with pytest.raises(ConfigError):
        parse_delay_table("FA")
    with pytest.raises(ConfigError):
        parse_int_list("1,x")


def write_cfg(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text, encoding="utf-8")
    return p


def test_precedence(tmp_path):
    p = write_cfg(tmp_path, "[tm]\nthreshold_T = 9\nd_period = 10\n[run]\nseed = 4\n"
                            "snapshot_epochs = 0 2\n[latency]\ndelay_table = FA=2\n")
    cfg = resolve(p, {"seed": 8, "d_period": None})
    assert cfg.threshold_T == 9 and cfg.d_period == 10  # file beats default, None does not override
    assert cfg.seed == 8  # command line beats file
    assert cfg.snapshot_epochs == [0, 2] and cfg.delay_table == {"FA": 2.0}
    assert cfg.num_clauses == RunConfig().num_clauses


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown key"):
        read_config_file(write_cfg(tmp_path, "[tm]\nclauses = 3\n"))
    with pytest.raises(ConfigError, match="unknown section"):
        read_config_file(write_cfg(tmp_path, "[model]\nseed = 1\n"))
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.ini")


def test_invalid_values_rejected():
    for bad in ({"threshold_T": 0}, {"epochs": -1}, {"combiner": "mesh"},
                {"delay_table": "XOR=1"}, {"trials": 0}, {"train_fraction": 1.0},
                {"specificity_s": "abc"}):
        with pytest.raises(ConfigError):
            resolve(None, bad)


def test_manifest_round_trip(tmp_path):
    m = RunManifest("train", RunConfig().to_dict(), 0, {"x": 1}, {"a": "00"}, {"b": "11"})
    p = tmp_path / "manifest.json"
    p.write_text(m.to_json(), encoding="utf-8")
    assert RunManifest.load(p) == m
    p.write_text(m.to_json().replace('"version": 1', '"version": 7'), encoding="utf-8")
    with pytest.raises(ConfigError):
        RunManifest.load(p)


def test_dataset_arrays_typed():
    ds = load_dataset()
    assert ds.features(ds.test_idx).dtype == np.uint8
    assert ds.labels(ds.train_idx).dtype == bool
