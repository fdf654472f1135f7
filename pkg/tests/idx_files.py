"""Synthetic IDX payloads."""
import gzip
import struct

import numpy as np


def idx_bytes(array) -> bytes:
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x800 | array.ndim
    return struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape) + array.tobytes()


def write_mnist(directory, train_images, train_labels, test_images, test_labels, compress=False):
    names = {
        "train-images-idx3-ubyte": train_images,
        "train-labels-idx1-ubyte": train_labels,
        "t10k-images-idx3-ubyte": test_images,
        "t10k-labels-idx1-ubyte": test_labels,
    }
    for name, array in names.items():
        payload = idx_bytes(array)
        if compress:
            (directory / (name + ".gz")).write_bytes(gzip.compress(payload))
        else:
            (directory / name).write_bytes(payload)
    return directory


def digit_images(labels, rng):
    """28x28 images: zeros get a bright left half, ones a bright right half."""
    images = np.zeros((len(labels), 28, 28), dtype=np.uint8)
    for i, label in enumerate(labels):
        cols = slice(14, 28) if label == 1 else slice(0, 14)
        images[i, :, cols] = rng.integers(150, 256, size=(28, 14))
    return images
