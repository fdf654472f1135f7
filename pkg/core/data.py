# core/data.py
"""MNIST ingestion: IDX decoding, 0/1 filtering, 28x28 -> 8x8 area averaging, angle scaling."""
import gzip
import logging
import math
import os
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DataError, IdxParseError, UsageError

logger = logging.getLogger(__name__)

# =================== CONSTANTS ===================
IDX_LABEL_MAGIC = 0x00000801
IDX_IMAGE_MAGIC = 0x00000803
SOURCE_SIDE = 28
TARGET_SIDE = 8
NUM_FEATURES = TARGET_SIDE * TARGET_SIDE
DEFAULT_ANGLE_SCALE = math.pi

MNIST_FILES = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


# =================== DOMAIN TYPES ===================
@dataclass(frozen=True, eq=False)
class RawImage:
    pixels: np.ndarray  # 28 x 28, values 0..255
    label: int

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.shape != (SOURCE_SIDE, SOURCE_SIDE):
            raise UsageError(f"expected a {SOURCE_SIDE}x{SOURCE_SIDE} image, got shape {pixels.shape}")
        if not 0 <= self.label < 10:
            raise UsageError(f"digit label must be in 0..9, got {self.label}")
        object.__setattr__(self, "pixels", pixels)


@dataclass(frozen=True, eq=False)
class Sample:
    features: np.ndarray  # 64 angles in [0, angle_scale]
    label: int


class BinaryDataset:
    """Feature matrix (N x 64) with 0/1 labels."""

    def __init__(self, features, labels):
        features = np.asarray(features, dtype=np.float64)
        self.features = features if features.ndim == 2 else features.reshape(len(labels), -1)
        self.labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if len(self.features) != len(self.labels):
            raise UsageError(f"{len(self.features)} feature rows for {len(self.labels)} labels")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise UsageError("binary dataset labels must be 0 or 1")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i) -> Sample:
        return Sample(self.features[i], int(self.labels[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, indices) -> "BinaryDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return BinaryDataset(self.features[indices], self.labels[indices])

    def head(self, n: int) -> "BinaryDataset":
        return self.subset(np.arange(min(n, len(self))))

    def class_counts(self) -> dict[int, int]:
        return {label: int(np.sum(self.labels == label)) for label in (0, 1)}


# =================== IDX ===================
def parse_idx(data: bytes) -> np.ndarray:
    """Decode an IDX label (magic 0x801) or image (magic 0x803) payload into a uint8 array."""
    if len(data) < 4:
        raise IdxParseError(f"expected a 4-byte magic number, file has {len(data)} bytes", 0)
    (magic,) = struct.unpack(">I", data[:4])
    if magic not in (IDX_LABEL_MAGIC, IDX_IMAGE_MAGIC):
        raise IdxParseError(f"bad magic number 0x{magic:08x}", 0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise IdxParseError(f"header needs {header} bytes, file has {len(data)}", len(data))
    dims = struct.unpack(f">{ndim}I", data[4:header])
    expected = math.prod(dims)
    actual = len(data) - header
    if actual != expected:
        raise IdxParseError(
            f"dimensions {dims} need {expected} payload bytes, found {actual}",
            header + min(actual, expected),
        )
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims)


def read_idx(path) -> np.ndarray:
    """Read a plain or gzip-compressed IDX file."""
    path = os.fspath(path)
    opener = gzip.open if path.endswith(".gz") else open
    try:
        with opener(path, "rb") as f:
            return parse_idx(f.read())
    except (OSError, IdxParseError) as e:
        raise DataError(f"{path}: {e}") from e


def find_mnist_files(data_dir) -> dict[str, str]:
    """Resolve the four standard MNIST file names (plain or .gz) inside `data_dir`."""
    found = {}
    for key, names in MNIST_FILES.items():
        candidates = [os.path.join(data_dir, n + ext) for n in names for ext in ("", ".gz")]
        path = next((c for c in candidates if os.path.exists(c)), None)
        if path is None:
            raise DataError(f"{data_dir}: missing {names[0]} (or .gz)")
        found[key] = path
    return found


# =================== RESAMPLING ===================
@lru_cache(maxsize=8)
def _area_weights(source: int = SOURCE_SIDE, target: int = TARGET_SIDE) -> np.ndarray:
    """target x source matrix: overlap of each source pixel with each output cell, per cell width."""
    width = source / target
    weights = np.zeros((target, source))
    for i in range(target):
        lo, hi = i * width, (i + 1) * width
        for j in range(int(lo), min(source, math.ceil(hi))):
            weights[i, j] = max(0.0, min(j + 1, hi) - max(j, lo)) / width
    weights.setflags(write=False)
    return weights


def downsample_many(pixels) -> np.ndarray:
    """Area-weighted average of a stack of N x 28 x 28 images into N x 8 x 8 values in [0, 1]."""
    a = _area_weights()
    grids = np.einsum("ij,njk,lk->nil", a, np.asarray(pixels, dtype=np.float64), a) / 255.0
    return np.clip(grids, 0.0, 1.0)


def downsample(img: RawImage) -> np.ndarray:
    return downsample_many(img.pixels[None])[0]


def to_sample(grid, label: int, angle_scale: float = DEFAULT_ANGLE_SCALE) -> Sample:
    """Row-major flattening scaled to angles: cell (r, c) lands at index 8 r + c."""
    return Sample(angle_scale * np.asarray(grid, dtype=np.float64).reshape(-1), int(label))


# =================== LOADING ===================
def _load_split(images_path, labels_path, angle_scale: float) -> BinaryDataset:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3 or images.shape[1:] != (SOURCE_SIDE, SOURCE_SIDE):
        raise DataError(f"{images_path}: expected N x 28 x 28 images, got shape {images.shape}")
    if labels.ndim != 1:
        raise DataError(f"{labels_path}: expected a 1-d label file, got shape {labels.shape}")
    if len(images) != len(labels):
        raise DataError(f"{images_path} has {len(images)} images but {labels_path} has {len(labels)} labels")

    keep = np.flatnonzero(labels <= 1)
    if len(keep) == 0:
        logger.warning("%s: no images labelled 0 or 1", labels_path)
        return BinaryDataset(np.zeros((0, NUM_FEATURES)), np.zeros(0, dtype=np.int64))
    grids = downsample_many(images[keep])
    dataset = BinaryDataset(angle_scale * grids.reshape(len(keep), NUM_FEATURES), labels[keep])
    logger.info("%s: kept %d of %d images %s", images_path, len(dataset), len(labels), dataset.class_counts())
    return dataset


def load_binary_mnist(train_images_path, train_labels_path, test_images_path, test_labels_path,
                      angle_scale: float = DEFAULT_ANGLE_SCALE) -> tuple[BinaryDataset, BinaryDataset]:
    train = _load_split(train_images_path, train_labels_path, angle_scale)
    test = _load_split(test_images_path, test_labels_path, angle_scale)
    return train, test
