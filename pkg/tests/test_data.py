import logging
import math

import numpy as np
import pytest

from core.data import (BinaryDataset, RawImage, downsample, downsample_many, find_mnist_files,
                       load_binary_mnist, parse_idx, read_idx, to_sample)
from core.errors import DataError, IdxParseError, UsageError

from .idx_files import digit_images, idx_bytes, write_mnist


def test_parse_labels_and_images():
    labels = parse_idx(idx_bytes([3, 0, 1]))
    assert labels.tolist() == [3, 0, 1]
    images = parse_idx(idx_bytes(np.arange(2 * 28 * 28).reshape(2, 28, 28) % 256))
    assert images.shape == (2, 28, 28)
    assert images[1, 0, 0] == (28 * 28) % 256


def test_bad_magic():
    with pytest.raises(IdxParseError) as err:
        parse_idx(b"\x00\x00\x09\x01" + b"\x00" * 8)
    assert err.value.offset == 0


def test_truncated_payload_reports_offset():
    data = idx_bytes(np.zeros(10))[:-3]
    with pytest.raises(IdxParseError) as err:
        parse_idx(data)
    assert err.value.offset == 8 + 7
    assert "offset 15" in str(err.value)


def test_short_header():
    with pytest.raises(IdxParseError):
        parse_idx(b"\x00\x00")


def test_read_idx_plain_and_gzip(tmp_path):
    write_mnist(tmp_path, np.zeros((1, 28, 28)), [1], np.zeros((1, 28, 28)), [0], compress=True)
    assert read_idx(tmp_path / "train-labels-idx1-ubyte.gz").tolist() == [1]
    (tmp_path / "broken").write_bytes(b"\x00\x00\x08\x01\x00\x00\x00\x05\x01")
    with pytest.raises(DataError) as err:
        read_idx(tmp_path / "broken")
    assert "broken" in str(err.value)


def test_downsample_constant_image():
    grid = downsample(RawImage(np.full((28, 28), 255), 0))
    assert grid.shape == (8, 8)
    assert np.allclose(grid, 1.0)


def test_downsample_preserves_mean_intensity(rng):
    pixels = rng.integers(0, 256, size=(3, 28, 28))
    grids = downsample_many(pixels)
    assert np.allclose(grids.mean(axis=(1, 2)), pixels.mean(axis=(1, 2)) / 255.0)


def test_row_major_features():
    grid = np.zeros((8, 8))
    grid[1, 0] = 1.0
    sample = to_sample(grid, 1)
    assert np.flatnonzero(sample.features).tolist() == [8]
    assert sample.features[8] == pytest.approx(math.pi)


def test_raw_image_validation():
    with pytest.raises(UsageError):
        RawImage(np.zeros((27, 28)), 0)
    with pytest.raises(UsageError):
        RawImage(np.zeros((28, 28)), 10)


def test_load_filters_to_zeros_and_ones(tmp_path, rng):
    train_labels = np.array([0, 1, 7, 1, 3, 0])
    test_labels = np.array([1, 0, 9])
    write_mnist(tmp_path, digit_images(train_labels, rng), train_labels,
                digit_images(test_labels, rng), test_labels)
    paths = find_mnist_files(tmp_path)
    train, test = load_binary_mnist(paths["train_images"], paths["train_labels"],
                                    paths["test_images"], paths["test_labels"])
    assert train.labels.tolist() == [0, 1, 1, 0]
    assert test.labels.tolist() == [1, 0]
    assert train.features.shape == (4, 64)
    assert train.features.min() >= 0 and train.features.max() <= math.pi
    # ones are bright on the right half of the grid
    assert train.features[1].reshape(8, 8)[:, 4:].sum() > train.features[1].reshape(8, 8)[:, :4].sum()


def test_split_without_zeros_or_ones_warns(tmp_path, rng, caplog):
    sevens = np.full(3, 7)
    write_mnist(tmp_path, digit_images(sevens, rng), sevens, digit_images(sevens, rng), sevens)
    paths = find_mnist_files(tmp_path)
    with caplog.at_level(logging.WARNING):
        train, _ = load_binary_mnist(paths["train_images"], paths["train_labels"],
                                     paths["test_images"], paths["test_labels"])
    assert len(train) == 0
    assert "no images labelled 0 or 1" in caplog.text


def test_count_mismatch(tmp_path, rng):
    write_mnist(tmp_path, digit_images([0, 1], rng), [0, 1, 1], digit_images([0], rng), [0])
    paths = find_mnist_files(tmp_path)
    with pytest.raises(DataError):
        load_binary_mnist(paths["train_images"], paths["train_labels"],
                          paths["test_images"], paths["test_labels"])


def test_missing_files(tmp_path):
    with pytest.raises(DataError):
        find_mnist_files(tmp_path)


def test_dataset_helpers():
    ds = BinaryDataset(np.arange(12.0).reshape(4, 3), [0, 1, 1, 1])
    assert ds.class_counts() == {0: 1, 1: 3}
    assert len(ds.head(2)) == 2
    assert ds.subset([3, 0]).labels.tolist() == [1, 0]
    assert ds[1].label == 1
    with pytest.raises(UsageError):
        BinaryDataset(np.zeros((2, 3)), [0, 2])
