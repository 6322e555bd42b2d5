"""Experimental protocol: stratified repeated splits, KNN classification in
the reduced space, accuracy sweeps over projection dimension, and synthetic
robustness trials with ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import LabeledDataset, SyntheticSpec, synthesize
from .errors import ProtocolError
from .linalg import largest_principal_angle
from .model import FitConfig, MpcaModel, mpca_fit, pca_fit, sliced, transform

METHOD_NAMES = ("pca", "mpca-1", "mpca-2")
_METHOD_METRIC = {"pca": None, "mpca-1": "cosine", "mpca-2": "total-distance"}

DEFAULT_K = 5


@dataclass(frozen=True)
class SplitSpec:
    """Stratified train/test partition settings."""

    train_fraction: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.stratified:
            raise ValueError("only stratified splits are supported by the protocol")


@dataclass(frozen=True)
class MethodSpec:
    """A named fitting method plus its reweighting settings."""

    name: str
    epsilon: float = 1e-4
    orientation: str = "suppress-outliers"
    tolerance: float = 1e-6
    max_iterations: int = 50

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ValueError(f"method must be one of {METHOD_NAMES}, got {self.name!r}")

    @property
    def metric(self) -> str | None:
        return _METHOD_METRIC[self.name]

    def fit_config(self, dim: int) -> FitConfig:
        return FitConfig(
            target_dim=dim,
            metric=self.metric,
            epsilon=self.epsilon,
            orientation=self.orientation,
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
        )

    def fit(self, x, dim: int) -> MpcaModel:
        if self.name == "pca":
            return pca_fit(x, dim)
        return mpca_fit(x, self.fit_config(dim))


@dataclass
class DimStats:
    """Accuracy statistics for one projection dimension across runs."""

    dim: int
    mean: float
    std: float
    accuracies: list[float]


@dataclass
class SweepReport:
    """Per-method accuracy-versus-dimension results over repeated splits."""

    method: str
    dims: list[int]
    stats: list[DimStats]
    seeds: list[int]
    optimal_dim: int
    optimal_mean: float
    skipped: list[str] = field(default_factory=list)

    def stat_for(self, dim: int) -> DimStats:
        for st in self.stats:
            if st.dim == dim:
                return st
        raise KeyError(dim)


@dataclass
class RobustnessRow:
    method: str
    seed: int
    angle: float  # largest principal angle to the ground-truth basis, radians
    mean_inlier_weight: float
    mean_outlier_weight: float


@dataclass
class RobustnessReport:
    spec: SyntheticSpec
    rows: list[RobustnessRow]

    def rows_for(self, method: str) -> list[RobustnessRow]:
        return [r for r in self.rows if r.method == method]


def _train_count(fraction: float, class_size: int) -> int:
    return min(max(int(math.floor(fraction * class_size + 0.5)), 1), class_size - 1)


def stratified_split(
    ds: LabeledDataset, spec: SplitSpec
) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic per-class random partition.

    Each class with n_c samples sends round(train_fraction * n_c) of them to
    the train part, clamped so both parts keep at least one sample per class.
    """
    rng = np.random.default_rng(spec.seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in np.unique(ds.labels):
        idx = np.flatnonzero(ds.labels == cls)
        if idx.size < 2:
            raise ProtocolError(
                f"class {int(cls)} has {idx.size} sample(s); splitting needs at least 2"
            )
        take = _train_count(spec.train_fraction, idx.size)
        perm = rng.permutation(idx)
        train_idx.extend(perm[:take].tolist())
        test_idx.extend(perm[take:].tolist())
    train_idx = np.sort(np.asarray(train_idx, dtype=np.int64))
    test_idx = np.sort(np.asarray(test_idx, dtype=np.int64))

    def _part(indices, tag):
        return LabeledDataset(
            data=ds.data[:, indices],
            labels=ds.labels[indices],
            name=f"{ds.name}-{tag}",
            label_mapping=ds.label_mapping,
        )

    return _part(train_idx, "train"), _part(test_idx, "test")


def _squared_distances(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, queries (r,p) x points (r,t) -> (p,t)."""
    pn = np.sum(points**2, axis=0)
    qn = np.sum(queries**2, axis=0)
    d2 = qn[:, None] + pn[None, :] - 2.0 * (queries.T @ points)
    return np.maximum(d2, 0.0)


def _vote(d2_row: np.ndarray, labels: np.ndarray, k: int) -> int:
    """Majority label among the k nearest; ties by class mean distance, then label id.

    Distance ties during neighbor selection fall to the smaller training
    index (stable argsort).
    """
    order = np.argsort(d2_row, kind="stable")[:k]
    neigh = labels[order]
    counts = np.bincount(neigh)
    top = counts.max()
    tied = np.flatnonzero(counts == top)
    if tied.size == 1:
        return int(tied[0])
    dists = np.sqrt(d2_row[order])
    best = min((dists[neigh == cls].mean(), int(cls)) for cls in tied)
    return best[1]


def knn_classify(train_points, train_labels, query, k: int) -> int:
    """Classify one query point against train_points (dims x count)."""
    points = np.asarray(train_points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("train_points must be 2-D (dims x count)")
    labels = np.asarray(train_labels, dtype=np.int64).ravel()
    if labels.shape[0] != points.shape[1]:
        raise ValueError(
            f"{labels.shape[0]} labels for {points.shape[1]} training points"
        )
    if not 1 <= k <= points.shape[1]:
        raise ValueError(f"k={k} outside [1, {points.shape[1]}]")
    q = np.asarray(query, dtype=np.float64).reshape(-1, 1)
    if q.shape[0] != points.shape[0]:
        raise ValueError(f"query has {q.shape[0]} dims, train has {points.shape[0]}")
    d2 = _squared_distances(points, q)[0]
    return _vote(d2, labels, k)


def _classify_batch(
    train_points: np.ndarray, train_labels: np.ndarray, queries: np.ndarray, k: int
) -> np.ndarray:
    if not 1 <= k <= train_points.shape[1]:
        raise ValueError(f"k={k} outside [1, {train_points.shape[1]}]")
    out = np.empty(queries.shape[1], dtype=np.int64)
    chunk = 512
    for start in range(0, queries.shape[1], chunk):
        block = queries[:, start : start + chunk]
        d2 = _squared_distances(train_points, block)
        for i in range(block.shape[1]):
            out[start + i] = _vote(d2[i], train_labels, k)
    return out


def _accuracy(model: MpcaModel, train: LabeledDataset, test: LabeledDataset, k: int) -> float:
    ztr = transform(model, train.data)
    zte = transform(model, test.data)
    pred = _classify_batch(ztr, train.labels, zte, k)
    return 100.0 * float(np.mean(pred == test.labels))


def evaluate_once(
    ds: LabeledDataset,
    method: MethodSpec,
    dim: int,
    split: SplitSpec,
    k: int = DEFAULT_K,
) -> float:
    """Split, fit on the train part only, classify the test part; returns percent."""
    train, test = stratified_split(ds, split)
    limit = min(ds.feature_dim, train.sample_count)
    if dim > limit:
        raise ValueError(f"dim {dim} exceeds min(feature_dim, train size) = {limit}")
    model = method.fit(train.data, dim)
    return _accuracy(model, train, test, k)


def _feasible_train_size(ds: LabeledDataset, fraction: float) -> int:
    return sum(
        _train_count(fraction, int(np.sum(ds.labels == cls))) for cls in np.unique(ds.labels)
    )


def dimension_sweep(
    ds: LabeledDataset,
    methods: list[MethodSpec],
    dims,
    runs: int,
    split: SplitSpec,
    k: int = DEFAULT_K,
) -> list[SweepReport]:
    """Accuracy statistics per method and dimension over `runs` repeated splits.

    Run i splits with seed split.seed + i; the same split is reused across
    methods and dims, so method comparisons are paired. Infeasible dims are
    skipped with a diagnostic. Sample standard deviation uses divisor
    runs - 1 (reported as 0 for a single run).
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if not methods:
        raise ValueError("method list is empty")
    dims = sorted(set(int(d) for d in dims))
    if not dims:
        raise ValueError("dims list is empty")
    limit = min(ds.feature_dim, _feasible_train_size(ds, split.train_fraction))
    feasible = [d for d in dims if 1 <= d <= limit]
    skipped = [
        f"dim {d} skipped: exceeds min(feature_dim, train size) = {limit}"
        for d in dims
        if d not in feasible
    ]
    if not feasible:
        raise ValueError(f"no feasible dims in {dims}; limit is {limit}")

    seeds = [split.seed + i for i in range(runs)]
    acc: dict[str, dict[int, list[float]]] = {
        ms.name: {d: [] for d in feasible} for ms in methods
    }
    for seed in seeds:
        train, test = stratified_split(ds, replace(split, seed=seed))
        for ms in methods:
            if ms.name == "pca":
                # one baseline fit at the largest dim; smaller dims are exact
                # truncations of the same decomposition
                full = pca_fit(train.data, max(feasible))
                for d in feasible:
                    usable = min(d, full.basis.shape[1])
                    acc[ms.name][d].append(_accuracy(sliced(full, usable), train, test, k))
            else:
                for d in feasible:
                    model = mpca_fit(train.data, ms.fit_config(d))
                    acc[ms.name][d].append(_accuracy(model, train, test, k))

    reports = []
    for ms in methods:
        stats = []
        for d in feasible:
            values = acc[ms.name][d]
            mean = float(np.mean(values))
            std = float(np.std(values, ddof=1)) if runs > 1 else 0.0
            stats.append(DimStats(dim=d, mean=mean, std=std, accuracies=list(values)))
        # first maximum in ascending dim order, so ties resolve to the smallest dim
        best = max(range(len(stats)), key=lambda i: stats[i].mean)
        reports.append(
            SweepReport(
                method=ms.name,
                dims=feasible,
                stats=stats,
                seeds=seeds,
                optimal_dim=stats[best].dim,
                optimal_mean=stats[best].mean,
                skipped=list(skipped),
            )
        )
    return reports


def robustness_trial(
    spec: SyntheticSpec,
    methods: list[MethodSpec],
    seeds,
    dim: int | None = None,
) -> RobustnessReport:
    """Fit each method on synthetic corrupted data and score basis recovery.

    Reports the largest principal angle between the fitted basis and the
    generator's ground truth, plus the mean final weight of outlier versus
    inlier columns. Deterministic per seed.
    """
    if not methods:
        raise ValueError("method list is empty")
    target = spec.subspace_dim if dim is None else dim
    rows = []
    for seed in seeds:
        ds, truth = synthesize(replace(spec, seed=int(seed)))
        mask = truth.outlier_mask
        for ms in methods:
            model = ms.fit(ds.data, target)
            angle = largest_principal_angle(model.basis, truth.basis)
            inlier_w = float(model.weights[~mask].mean()) if (~mask).any() else math.nan
            outlier_w = float(model.weights[mask].mean()) if mask.any() else math.nan
            rows.append(
                RobustnessRow(
                    method=ms.name,
                    seed=int(seed),
                    angle=angle,
                    mean_inlier_weight=inlier_w,
                    mean_outlier_weight=outlier_w,
                )
            )
    return RobustnessReport(spec=spec, rows=rows)
