"""Dataset construction: IDX image files, the spoken-letter CSV corpus,
generic dense delimited files, and a synthetic corrupted-data generator
with ground truth."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError
from .linalg import as_matrix

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049

ISOLET_FEATURES = 617
ISOLET_CLASSES = 26


@dataclass
class LabeledDataset:
    """Columns-are-samples matrix plus one small integer label per column."""

    data: np.ndarray
    labels: np.ndarray
    name: str
    label_mapping: list | None = None  # new id -> original label value
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = as_matrix(self.data, "data")
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.labels.shape[0] != self.data.shape[1]:
            raise ValueError(
                f"{self.labels.shape[0]} labels for {self.data.shape[1]} columns"
            )
        if (self.labels < 0).any():
            raise ValueError("labels must be non-negative integers")

    @property
    def feature_dim(self) -> int:
        return self.data.shape[0]

    @property
    def sample_count(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings for the corrupted-subspace dataset."""

    feature_dim: int
    inlier_count: int
    outlier_count: int
    subspace_dim: int = 1
    noise_sigma: float = 0.05
    outlier_magnitude: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.feature_dim < 1:
            raise ValueError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.subspace_dim < 1 or self.subspace_dim > self.feature_dim:
            raise ValueError(
                f"subspace_dim {self.subspace_dim} outside [1, {self.feature_dim}]"
            )
        if self.inlier_count < 0 or self.outlier_count < 0:
            raise ValueError("counts must be >= 0")
        if self.inlier_count + self.outlier_count < 1:
            raise ValueError("need at least one sample")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.outlier_magnitude < 0:
            raise ValueError(f"outlier_magnitude must be >= 0, got {self.outlier_magnitude}")


@dataclass
class GroundTruth:
    """What the generator knows: the true basis and which columns are outliers."""

    basis: np.ndarray  # (m, subspace_dim), orthonormal columns
    outlier_mask: np.ndarray  # (n,) booleans


def _read_be_u32(data: bytes, offset: int, path, what: str) -> int:
    if offset + 4 > len(data):
        raise FormatError(f"{path}: truncated {what} at offset {offset}")
    return struct.unpack_from(">I", data, offset)[0]


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load a big-endian IDX image/label file pair.

    Image header: magic 2051, count, rows, cols, then count*rows*cols u8
    pixels row-major. Label header: magic 2049, count, then count u8 labels.
    Pixels are scaled to [0, 1] by /255 and each image becomes one column.
    """
    with open(images_path, "rb") as fh:
        img = fh.read()
    with open(labels_path, "rb") as fh:
        lab = fh.read()

    magic = _read_be_u32(img, 0, images_path, "header")
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(
            f"{images_path}: bad image magic {magic} at offset 0, expected {IDX_IMAGE_MAGIC}"
        )
    count = _read_be_u32(img, 4, images_path, "header")
    rows = _read_be_u32(img, 8, images_path, "header")
    cols = _read_be_u32(img, 12, images_path, "header")
    pixels_needed = count * rows * cols
    if len(img) < 16 + pixels_needed:
        raise FormatError(
            f"{images_path}: truncated pixel data, need {16 + pixels_needed} bytes, have {len(img)}"
        )

    lab_magic = _read_be_u32(lab, 0, labels_path, "header")
    if lab_magic != IDX_LABEL_MAGIC:
        raise FormatError(
            f"{labels_path}: bad label magic {lab_magic} at offset 0, expected {IDX_LABEL_MAGIC}"
        )
    lab_count = _read_be_u32(lab, 4, labels_path, "header")
    if lab_count != count:
        raise FormatError(
            f"label count {lab_count} does not match image count {count}"
        )
    if len(lab) < 8 + count:
        raise FormatError(
            f"{labels_path}: truncated label data, need {8 + count} bytes, have {len(lab)}"
        )

    pixels = np.frombuffer(img, dtype=np.uint8, count=pixels_needed, offset=16)
    data = pixels.reshape(count, rows * cols).T.astype(np.float64) / 255.0
    labels = np.frombuffer(lab, dtype=np.uint8, count=count, offset=8).astype(np.int64)
    name = os.path.splitext(os.path.basename(str(images_path)))[0]
    return LabeledDataset(data=data, labels=labels, name=name)


def load_isolet(path) -> LabeledDataset:
    """Load the spoken-letter CSV: 617 features then a class value 1-26 per row.

    Class values become labels 0-25. Feature values outside [-1, 1] are
    accepted with a range diagnostic (the published corpus is normalized;
    user data may not be).
    """
    columns = []
    labels = []
    out_of_range = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != ISOLET_FEATURES + 1:
                raise FormatError(
                    f"{path}: line {lineno} has {len(fields)} fields, "
                    f"expected {ISOLET_FEATURES + 1}"
                )
            try:
                values = [float(f) for f in fields]
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: non-numeric field: {exc}") from exc
            cls = values[-1]
            if cls != int(cls) or not 1 <= cls <= ISOLET_CLASSES:
                raise FormatError(
                    f"{path}: line {lineno}: class value {cls} outside 1..{ISOLET_CLASSES}"
                )
            feats = values[:-1]
            if any(v < -1.0 or v > 1.0 for v in feats):
                out_of_range += 1
            columns.append(feats)
            labels.append(int(cls) - 1)
    if not columns:
        raise FormatError(f"{path}: no data rows")
    ds = LabeledDataset(
        data=np.asarray(columns, dtype=np.float64).T,
        labels=np.asarray(labels, dtype=np.int64),
        name="isolet",
    )
    if out_of_range:
        ds.diagnostics.append(
            f"{out_of_range} row(s) have feature values outside [-1, 1]"
        )
    ds.diagnostics.append(f"parsed {len(labels)} rows")
    return ds


def _split_fields(line: str) -> list[str]:
    if "," in line:
        return [f.strip() for f in line.split(",")]
    return line.split()


def load_dense(path, label_col="last") -> LabeledDataset:
    """Load a delimited numeric file, one sample per row, label in one column.

    label_col is "first", "last", or a 0-based column index (negative allowed).
    Lines starting with '#' are comments. Labels are remapped to contiguous
    ids 0..C-1 in ascending order of the original values; the mapping is kept
    on the returned dataset.
    """
    rows = []
    raw_labels = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = _split_fields(line)
            if width is None:
                width = len(fields)
                if width < 2:
                    raise FormatError(f"{path}: line {lineno}: need features and a label")
            elif len(fields) != width:
                raise FormatError(
                    f"{path}: line {lineno} has {len(fields)} fields, expected {width}"
                )
            if label_col == "first":
                idx = 0
            elif label_col == "last":
                idx = width - 1
            else:
                try:
                    idx = int(label_col)
                except (TypeError, ValueError):
                    raise ValueError(
                        f"label column must be 'first', 'last', or an index, got {label_col!r}"
                    ) from None
                if not -width <= idx < width:
                    raise ValueError(f"label column {label_col} outside row of width {width}")
                idx %= width
            try:
                label = float(fields[idx])
            except ValueError as exc:
                raise FormatError(
                    f"{path}: line {lineno}: non-numeric label {fields[idx]!r}"
                ) from exc
            try:
                feats = [float(f) for i, f in enumerate(fields) if i != idx]
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: non-numeric field: {exc}") from exc
            rows.append(feats)
            raw_labels.append(label)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    originals = sorted(set(raw_labels))
    remap = {v: i for i, v in enumerate(originals)}
    return LabeledDataset(
        data=np.asarray(rows, dtype=np.float64).T,
        labels=np.asarray([remap[v] for v in raw_labels], dtype=np.int64),
        name=os.path.splitext(os.path.basename(str(path)))[0],
        label_mapping=originals,
    )


def synthesize(spec: SyntheticSpec) -> tuple[LabeledDataset, GroundTruth]:
    """Generate subspace inliers plus gross outliers, deterministically per seed.

    Inliers are basis @ coeffs + Gaussian noise with standard-normal
    coefficients; outliers are uniform random directions scaled to
    outlier_magnitude. Labels are the sign of each column's first
    ground-truth coordinate (inliers use their true coefficient), giving a
    two-class task.
    """
    rng = np.random.default_rng(spec.seed)
    m, k = spec.feature_dim, spec.subspace_dim
    basis, r_factor = np.linalg.qr(rng.standard_normal((m, k)))
    signs = np.sign(np.diag(r_factor))
    signs[signs == 0] = 1.0
    basis = basis * signs

    coeffs = rng.standard_normal((k, spec.inlier_count))
    inliers = basis @ coeffs
    if spec.noise_sigma > 0:
        inliers = inliers + spec.noise_sigma * rng.standard_normal((m, spec.inlier_count))

    directions = rng.standard_normal((m, spec.outlier_count))
    norms = np.linalg.norm(directions, axis=0)
    norms[norms == 0] = 1.0
    outliers = spec.outlier_magnitude * directions / norms

    data = np.hstack([inliers, outliers])
    mask = np.concatenate(
        [np.zeros(spec.inlier_count, dtype=bool), np.ones(spec.outlier_count, dtype=bool)]
    )
    first_coord = np.concatenate([coeffs[0], basis[:, 0] @ outliers])
    labels = (first_coord >= 0).astype(np.int64)
    ds = LabeledDataset(data=data, labels=labels, name=f"synthetic-seed{spec.seed}")
    return ds, GroundTruth(basis=basis, outlier_mask=mask)


def stratified_subset(ds: LabeledDataset, count: int, seed: int) -> LabeledDataset:
    """Class-proportional random subset of about `count` samples (>= 1 per class)."""
    if count < 1 or count > ds.sample_count:
        raise ValueError(f"count {count} outside [1, {ds.sample_count}]")
    rng = np.random.default_rng(seed)
    keep = []
    fraction = count / ds.sample_count
    for cls in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == cls)
        take = max(1, int(np.floor(fraction * idx.size + 0.5)))
        keep.extend(rng.permutation(idx)[:take].tolist())
    keep = np.sort(np.asarray(keep, dtype=np.int64))
    return LabeledDataset(
        data=ds.data[:, keep],
        labels=ds.labels[keep],
        name=f"{ds.name}-subset{len(keep)}",
        label_mapping=ds.label_mapping,
    )
