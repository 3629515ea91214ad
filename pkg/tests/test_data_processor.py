"""Tests for dataset loading, validation and export."""

import numpy as np
import pytest
from conftest import write_csv

from wahkon.benchmarks import Dataset
from wahkon.data_processor import dataset_frame, load_dataset, load_features, read_frame, write_dataset
from wahkon.errors import DataValidationError, DimensionMismatch, EmptyInput


@pytest.fixture
def dataset():
    rng = np.random.default_rng(0)
    return Dataset(rng.uniform(-1, 1, (12, 3)), rng.normal(size=12))


class TestLoadDataset:

    def test_write_then_load_is_lossless(self, dataset, tmp_path):
        path = tmp_path / "data.csv"
        write_dataset(dataset, path)
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.X, dataset.X)
        np.testing.assert_array_equal(loaded.y, dataset.y)
        assert loaded.provenance["source"] == str(path)

    def test_every_cell_of_a_larger_table_survives(self, tmp_path):
        rng = np.random.default_rng(17)
        dataset = Dataset(rng.uniform(-1, 1, (200, 2)), rng.normal(scale=3.0, size=200))
        path = tmp_path / "data.csv"
        write_dataset(dataset, path)
        loaded = load_dataset(path)
        assert np.count_nonzero(loaded.X != dataset.X) == 0
        assert np.count_nonzero(loaded.y != dataset.y) == 0

    def test_header(self, dataset, tmp_path):
        path = tmp_path / "data.csv"
        write_dataset(dataset, path)
        assert path.read_text().splitlines()[0] == "x1,x2,x3,y"
        assert list(dataset_frame(dataset).columns) == ["x1", "x2", "x3", "y"]

    def test_non_numeric_cell_is_located(self, dataset, tmp_path):
        path = write_csv(tmp_path / "bad.csv", dataset.X, dataset.y, bad_cell=(4, 1, "abc"))
        with pytest.raises(DataValidationError, match=r"row 5, column 'x2'"):
            load_dataset(path)

    def test_missing_cell(self, dataset, tmp_path):
        path = write_csv(tmp_path / "bad.csv", dataset.X, dataset.y, bad_cell=(0, 3, ""))
        with pytest.raises(DataValidationError, match=r"row 1, column 'y'"):
            load_dataset(path)

    def test_infinite_value(self, dataset, tmp_path):
        path = write_csv(tmp_path / "bad.csv", dataset.X, dataset.y, bad_cell=(2, 0, "inf"))
        with pytest.raises(DataValidationError):
            load_dataset(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,y\n1,2,3\n")
        with pytest.raises(DataValidationError):
            load_dataset(path)
        path.write_text("x1,x2\n1,2\n")
        with pytest.raises(DataValidationError):
            load_dataset(path)

    def test_empty_inputs(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(EmptyInput):
            load_dataset(empty)
        header_only = tmp_path / "header.csv"
        header_only.write_text("x1,y\n")
        with pytest.raises(EmptyInput):
            load_dataset(header_only)


class TestLoadFeatures:

    def test_trailing_response_ignored(self, dataset, tmp_path):
        path = tmp_path / "data.csv"
        write_dataset(dataset, path)
        np.testing.assert_array_equal(load_features(path, 3), dataset.X)

    def test_features_only(self, dataset, tmp_path):
        path = write_csv(tmp_path / "features.csv", dataset.X)
        np.testing.assert_array_equal(load_features(path), dataset.X)

    def test_width_mismatch(self, dataset, tmp_path):
        path = write_csv(tmp_path / "features.csv", dataset.X)
        with pytest.raises(DimensionMismatch):
            load_features(path, 2)


class TestFrames:

    def test_frame_round_trip(self, dataset, tmp_path):
        path = tmp_path / "frame.csv"
        write_dataset(dataset, path)
        frame = read_frame(path)
        np.testing.assert_array_equal(frame["y"].to_numpy(), dataset.y)

    def test_read_frame_is_exact_on_every_column(self, tmp_path):
        rng = np.random.default_rng(5)
        dataset = Dataset(rng.uniform(-1, 1, (200, 2)), rng.normal(size=200))
        path = tmp_path / "frame.csv"
        write_dataset(dataset, path)
        frame = read_frame(path)
        np.testing.assert_array_equal(frame[["x1", "x2"]].to_numpy(), dataset.X)
        np.testing.assert_array_equal(frame["y"].to_numpy(), dataset.y)
