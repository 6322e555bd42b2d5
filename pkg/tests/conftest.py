import struct

import numpy as np
import pytest

from mpca import SyntheticSpec, synthesize


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def idx_pair(tmp_path):
    """Hand-built IDX image/label pair: 4 images of 28x28, per the published layout."""
    count, rows, cols = 4, 28, 28
    pixels = bytearray(count * rows * cols)
    pixels[0] = 255  # image 0, pixel (0, 0)
    pixels[rows * cols + 2 * cols + 5] = 128  # image 1, pixel (2, 5)
    # image 3 left all zero
    pixels[2 * rows * cols : 3 * rows * cols] = bytes([10] * (rows * cols))
    images = struct.pack(">IIII", 2051, count, rows, cols) + bytes(pixels)
    labels = struct.pack(">II", 2049, count) + bytes([7, 2, 1, 0])
    ipath = tmp_path / "images-idx3-ubyte"
    lpath = tmp_path / "labels-idx1-ubyte"
    ipath.write_bytes(images)
    lpath.write_bytes(labels)
    return ipath, lpath


@pytest.fixture
def cluster_dataset():
    """Two well-separated Gaussian clusters, 30 samples each, m=5."""
    from mpca import LabeledDataset

    gen = np.random.default_rng(77)
    a = gen.normal(0.0, 0.3, size=(5, 30)) + np.array([5.0, 0, 0, 0, 0])[:, None]
    b = gen.normal(0.0, 0.3, size=(5, 30)) - np.array([5.0, 0, 0, 0, 0])[:, None]
    data = np.hstack([a, b])
    labels = np.array([0] * 30 + [1] * 30)
    return LabeledDataset(data=data, labels=labels, name="clusters")


@pytest.fixture
def corrupted_spec():
    return SyntheticSpec(
        feature_dim=10,
        inlier_count=100,
        outlier_count=10,
        subspace_dim=1,
        noise_sigma=0.05,
        outlier_magnitude=10.0,
        seed=0,
    )


@pytest.fixture
def dense_file(tmp_path):
    """Small labeled dense CSV written through the synth generator."""
    ds, _ = synthesize(
        SyntheticSpec(
            feature_dim=6,
            inlier_count=40,
            outlier_count=4,
            subspace_dim=2,
            noise_sigma=0.05,
            outlier_magnitude=8.0,
            seed=3,
        )
    )
    path = tmp_path / "dense.csv"
    lines = []
    for j in range(ds.sample_count):
        fields = [repr(float(v)) for v in ds.data[:, j]] + [str(int(ds.labels[j]))]
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n")
    return path
