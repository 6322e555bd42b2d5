"""Multiplicative-factoring PCA.

A diagonal multiplier D rescales sample columns before subspace extraction.
Each iteration scores every column of the current weighted matrix against
the principal projection and turns the scores into per-column multipliers
(max-normalized to 1). How the multiplier enters D follows from the
metric's scale behaviour:

  total-distance  ("mpca-2") scores are scale-sensitive, so the multiplier
                  compounds into D: a suppressed column keeps shrinking
                  until its weighted projection re-scores as typical, which
                  is what lets gross outliers fade out of the fitted basis
                  while the feedback stays self-limiting.
  cosine          ("mpca-1") scores depend only on angles and cannot see
                  the accumulated diagonal, so compounding would shrink
                  every off-axis column without bound; instead D is
                  replaced by the current multiplier profile each round,
                  giving a mild angle-driven reweighting.

``pca_fit`` is the unweighted baseline; both fits return the same model type.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import SvdResult, as_matrix, center_columns, rank_mask, svd

METRICS = ("cosine", "total-distance")
ORIENTATIONS = ("suppress-outliers", "as-written")

# Guards the reciprocal in weight construction; raw factors can be exactly 0.
WEIGHT_EPS = 1e-12

# Floor for accumulated weights: keeps min(w) > 0 and column norms of the
# weighted matrix representable (squares stay clear of the denormal range).
WEIGHT_FLOOR = 1e-150

MODEL_FORMAT = "mpca-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class FitConfig:
    """Settings for one fit.

    metric None selects the unweighted baseline (plain PCA behaviour: the
    multiplier stays at 1 every iteration). orientation "suppress-outliers"
    maps high raw factors to low multipliers; "as-written" applies the raw
    factors directly. recenter subtracts the column mean once, before the
    loop.
    """

    target_dim: int
    metric: str | None = "cosine"
    epsilon: float = 1e-4
    orientation: str = "suppress-outliers"
    tolerance: float = 1e-6
    max_iterations: int = 50
    recenter: bool = True

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError(f"target_dim must be >= 1, got {self.target_dim}")
        if self.metric is not None and self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS} or None, got {self.metric!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {self.orientation!r}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class MpcaModel:
    """Fitted projection model.

    basis has orthonormal columns (possibly fewer than requested when the
    weighted data is rank deficient; see diagnostics). weights is the final
    multiplier diagonal, max-normalized to 1.
    """

    mean: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray
    weights: np.ndarray
    loss_history: list[float]
    iterations: int
    config: FitConfig
    diagnostics: list[str] = field(default_factory=list)


def _check_unit_vector(u1) -> np.ndarray:
    u1 = np.asarray(u1, dtype=np.float64).ravel()
    norm = np.linalg.norm(u1)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"u1 must be a unit vector, got norm {norm!r}")
    return u1


def projection_scores(u1, x) -> np.ndarray:
    """Squared coordinate of every column of x along the unit vector u1."""
    u1 = _check_unit_vector(u1)
    x = as_matrix(x)
    if x.shape[0] != u1.shape[0]:
        raise ValueError(f"u1 has length {u1.shape[0]} but x has {x.shape[0]} rows")
    return (u1 @ x) ** 2


def total_distance_factor(scores) -> np.ndarray:
    """Raw factor d_i = sum_j (s_i - s_j)^2 over the score vector.

    Large values mark samples whose projection energy is atypical for the
    set. Computed through the shift-invariant expansion around the score
    mean, which keeps the all-equal case exactly zero.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0 or not np.isfinite(s).all():
        raise ValueError("scores must be a non-empty finite vector")
    t = s - s.mean()
    d = s.size * t**2 - 2.0 * t * t.sum() + np.sum(t**2)
    return np.maximum(d, 0.0)


def cosine_scores(u1, x, diagnostics: list[str] | None = None) -> np.ndarray:
    """|cos angle| between every column of x and the unit vector u1, in [0, 1].

    Zero-norm columns get score 0 (maximal suppression downstream); their
    indices are appended to diagnostics when a list is supplied.
    """
    u1 = _check_unit_vector(u1)
    x = as_matrix(x)
    if x.shape[0] != u1.shape[0]:
        raise ValueError(f"u1 has length {u1.shape[0]} but x has {x.shape[0]} rows")
    norms = np.linalg.norm(x, axis=0)
    zero = norms == 0.0
    if zero.any() and diagnostics is not None:
        cols = np.flatnonzero(zero).tolist()
        diagnostics.append(f"zero-norm columns scored 0 in cosine metric: {cols}")
    safe = np.where(zero, 1.0, norms)
    cos = np.abs(u1 @ x) / safe
    cos[zero] = 0.0
    return np.clip(cos, 0.0, 1.0)


def cosine_factor(cos_scores, epsilon: float) -> np.ndarray:
    """Raw factor d_i = 1 / (|cos theta_i| + epsilon)."""
    cos = np.asarray(cos_scores, dtype=np.float64).ravel()
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if cos.size == 0 or not np.isfinite(cos).all() or (cos < 0).any() or (cos > 1).any():
        raise ValueError("cosine scores must lie in [0, 1]")
    return 1.0 / (cos + epsilon)


def multipliers_from_raw(raw, orientation: str = "suppress-outliers") -> np.ndarray:
    """Turn raw factors into the multiplier diagonal, max-normalized to 1.

    suppress-outliers maps w_i ~ 1/(raw_i + eps) so high-factor samples get
    small multipliers; as-written keeps w_i ~ raw_i + eps. All-equal raw
    factors give all-ones weights under either orientation.
    """
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if raw.size == 0 or not np.isfinite(raw).all() or (raw < 0).any():
        raise ValueError("raw factors must be non-negative and finite")
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    if orientation == "suppress-outliers":
        w = 1.0 / (raw + WEIGHT_EPS)
    else:
        w = raw + WEIGHT_EPS
    return w / w.max()


def weighted_loss(xc, weights, v_r) -> float:
    """Squared Frobenius residual of the column-weighted data off span(v_r).

    Evaluates |B - B V V^T|_F^2 with B = xc * diag(weights); v_r must have
    orthonormal columns in sample space.
    """
    xc = as_matrix(xc, "xc")
    w = np.asarray(weights, dtype=np.float64).ravel()
    v_r = as_matrix(v_r, "v_r")
    if w.shape[0] != xc.shape[1]:
        raise ValueError(f"weights length {w.shape[0]} != column count {xc.shape[1]}")
    if v_r.shape[0] != xc.shape[1]:
        raise ValueError(f"v_r has {v_r.shape[0]} rows but data has {xc.shape[1]} columns")
    gram = v_r.T @ v_r
    if np.abs(gram - np.eye(v_r.shape[1])).max() > 1e-8:
        raise ValueError("v_r columns are not orthonormal")
    b = xc * w
    resid = b - (b @ v_r) @ v_r.T
    return float(np.sum(resid**2))


def feature_basis(
    xc, weights, svd_of_xd: SvdResult, diagnostics: list[str] | None = None
) -> np.ndarray:
    """Recover the feature-space basis from the weighted data and its SVD.

    Computes (xc * diag(weights)) @ v / s columnwise, which reproduces the
    left singular vectors. Columns whose singular value falls below the rank
    cutoff are dropped (the returned basis may be narrower than requested);
    a message is appended to diagnostics when that happens.
    """
    xc = as_matrix(xc, "xc")
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.shape[0] != xc.shape[1]:
        raise ValueError(f"weights length {w.shape[0]} != column count {xc.shape[1]}")
    keep = rank_mask(svd_of_xd.s)
    if not keep.all() and diagnostics is not None:
        dropped = int((~keep).sum())
        diagnostics.append(
            f"dropped {dropped} basis column(s) with singular value below rank cutoff; "
            f"effective dimension {int(keep.sum())}"
        )
    return ((xc * w) @ svd_of_xd.v[:, keep]) / svd_of_xd.s[keep]


def _iteration_multipliers(
    u1, working, config: FitConfig, diagnostics: list[str]
) -> np.ndarray:
    if config.metric == "cosine":
        raw = cosine_factor(cosine_scores(u1, working, diagnostics), config.epsilon)
    else:
        raw = total_distance_factor(projection_scores(u1, working))
    return multipliers_from_raw(raw, config.orientation)


def _fit(x, config: FitConfig) -> MpcaModel:
    x = as_matrix(x)
    m, n = x.shape
    if config.target_dim > min(m, n):
        raise ValueError(f"target_dim {config.target_dim} exceeds min(m, n) = {min(m, n)}")
    if config.metric == "total-distance" and n < 2:
        raise ValueError("total-distance metric needs at least 2 samples")
    if config.recenter:
        xc, mean = center_columns(x)
    else:
        xc, mean = x, np.zeros(m)

    diagnostics: list[str] = []
    weights = np.ones(n)
    losses: list[float] = []
    last_svd: SvdResult | None = None
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        working = xc * weights
        last_svd = svd(working, config.target_dim)
        if config.metric == "total-distance":
            mult = _iteration_multipliers(last_svd.u[:, 0], working, config, diagnostics)
            weights = np.maximum(weights * mult, WEIGHT_FLOOR)
            weights = weights / weights.max()
        elif config.metric == "cosine":
            weights = _iteration_multipliers(last_svd.u[:, 0], working, config, diagnostics)
        losses.append(weighted_loss(xc, weights, last_svd.v))
        if len(losses) >= 2 and abs(losses[-1] - losses[-2]) <= config.tolerance * max(
            1.0, losses[-2]
        ):
            break

    # Weights never moved after the last decomposition iff metric is None,
    # so only then can the loop's SVD double as the final one.
    final_svd = last_svd if config.metric is None else svd(xc * weights, config.target_dim)
    basis = feature_basis(xc, weights, final_svd, diagnostics)
    return MpcaModel(
        mean=mean,
        basis=basis,
        singular_values=final_svd.s[: basis.shape[1]].copy(),
        weights=weights,
        loss_history=losses,
        iterations=iterations,
        config=config,
        diagnostics=list(dict.fromkeys(diagnostics)),
    )


def mpca_fit(x, config: FitConfig) -> MpcaModel:
    """Fit the reweighted model.

    Loop: decompose the current weighted matrix, score its columns against
    the principal projection, refresh the weight diagonal from the resulting
    multipliers (compounding for total-distance, replacing for cosine; see
    the module docstring), record the loss; stop when the relative loss
    change drops below tolerance or max_iterations is reached. The full
    basis is extracted once, after the loop.
    """
    x = as_matrix(x)
    if x.shape[1] < 2:
        raise ValueError("mpca_fit needs at least 2 samples")
    return _fit(x, config)


def pca_fit(x, r: int) -> MpcaModel:
    """Unweighted baseline: top-r left singular vectors of the centered data."""
    return _fit(x, FitConfig(target_dim=r, metric=None, max_iterations=1))


def transform(model: MpcaModel, y) -> np.ndarray:
    """Project columns of y onto the model basis after centering by the fitted mean.

    No weighting is applied to unseen data.
    """
    y = as_matrix(y, "y")
    if y.shape[0] != model.mean.shape[0]:
        raise ValueError(
            f"data has {y.shape[0]} rows but the model expects {model.mean.shape[0]}"
        )
    return model.basis.T @ (y - model.mean[:, None])


def save_model(model: MpcaModel, path) -> None:
    """Write the model as a versioned JSON document (atomic write)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "m": int(model.basis.shape[0]),
        "r": int(model.basis.shape[1]),
        "metric": model.config.metric,
        "orientation": model.config.orientation,
        "epsilon": model.config.epsilon,
        "tolerance": model.config.tolerance,
        "max_iterations": model.config.max_iterations,
        "recenter": model.config.recenter,
        "target_dim": model.config.target_dim,
        "iterations": model.iterations,
        "mean": model.mean.tolist(),
        "basis": model.basis.tolist(),
        "singular_values": model.singular_values.tolist(),
        "weights": model.weights.tolist(),
        "loss_history": list(model.loss_history),
        "diagnostics": list(model.diagnostics),
    }
    text = json.dumps(doc, indent=1)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def load_model(path) -> MpcaModel:
    """Read a model written by save_model; transform outputs round-trip exactly."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file: format={doc.get('format')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    config = FitConfig(
        target_dim=doc["target_dim"],
        metric=doc["metric"],
        epsilon=doc["epsilon"],
        orientation=doc["orientation"],
        tolerance=doc["tolerance"],
        max_iterations=doc["max_iterations"],
        recenter=doc["recenter"],
    )
    return MpcaModel(
        mean=np.asarray(doc["mean"], dtype=np.float64),
        basis=np.asarray(doc["basis"], dtype=np.float64),
        singular_values=np.asarray(doc["singular_values"], dtype=np.float64),
        weights=np.asarray(doc["weights"], dtype=np.float64),
        loss_history=[float(v) for v in doc["loss_history"]],
        iterations=int(doc["iterations"]),
        config=config,
        diagnostics=[str(d) for d in doc.get("diagnostics", [])],
    )


def sliced(model: MpcaModel, dim: int) -> MpcaModel:
    """View of a fitted model truncated to its first `dim` basis columns.

    For the unweighted baseline this equals refitting at the smaller
    dimension, because the basis is an SVD truncation.
    """
    if not 1 <= dim <= model.basis.shape[1]:
        raise ValueError(f"dim {dim} outside [1, {model.basis.shape[1]}]")
    return MpcaModel(
        mean=model.mean,
        basis=model.basis[:, :dim],
        singular_values=model.singular_values[:dim],
        weights=model.weights,
        loss_history=model.loss_history,
        iterations=model.iterations,
        config=replace(model.config, target_dim=dim),
        diagnostics=model.diagnostics,
    )
