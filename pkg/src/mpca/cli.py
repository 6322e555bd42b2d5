"""Command-line entry point.

Commands: fit, transform, sweep, bench, synth. Every option can also come
from a flat key-value config file (--config); explicit flags override file
values, which override the built-in defaults. All randomness flows from one
base seed (per-run seeds are base + run index), so reports are reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import fields as dataclass_fields
from dataclasses import replace

import numpy as np

from .data import SyntheticSpec, load_dense, load_idx, load_isolet, synthesize
from .errors import FormatError, NumericalError, ProtocolError
from .evaluation import (
    METHOD_NAMES,
    MethodSpec,
    SplitSpec,
    _classify_batch,
    dimension_sweep,
    stratified_split,
)
from .model import load_model, save_model, transform
from .report import (
    format_optimal_row,
    render_bench_figure,
    render_sweep_figure,
    write_bench_table,
    write_matrix,
    write_sweep_reports,
    write_text,
)

_METRIC_TO_METHOD = {"cosine": "mpca-1", "total-distance": "mpca-2"}

# option name -> (converter, default)
OPTIONS = {
    "seed": (int, 0),
    "out": (str, "."),
    "format": (str, "csv"),
    "mnist_images": (str, None),
    "mnist_labels": (str, None),
    "isolet": (str, None),
    "dense": (str, None),
    "label_col": (str, "last"),
    "synth_spec": (str, None),
    "model": (str, None),
    "method": (str, None),
    "metric": (str, None),
    "orientation": (str, "suppress-outliers"),
    "dim": (int, None),
    "dims": (str, "2:60:2"),
    "epsilon": (float, 1e-4),
    "tol": (float, 1e-6),
    "max_iter": (int, 50),
    "train_fraction": (float, 0.6),
    "runs": (int, 10),
    "k": (int, 5),
    "plot": (bool, True),
}

BENCH_REPS = 3


def _to_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_config_file(path) -> dict:
    """Flat 'key = value' lines; '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _add_common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key-value config file; flags override its values")
    p.add_argument("--seed", type=int, help="base seed (default 0); run i uses seed+i")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument(
        "--format", choices=["csv", "structured-text"], help="report format (default csv)"
    )
    ds = p.add_argument_group("dataset")
    ds.add_argument("--mnist-images", help="IDX image file")
    ds.add_argument("--mnist-labels", help="IDX label file")
    ds.add_argument("--isolet", help="spoken-letter CSV (617 features + class)")
    ds.add_argument("--dense", help="delimited file, one sample per row")
    ds.add_argument("--label-col", help="label column for --dense: first|last|index (default last)")
    ds.add_argument("--synth-spec", help="synthetic generator spec file")
    m = p.add_argument_group("method")
    m.add_argument("--method", help="method list: pca,mpca-1,mpca-2 (fit takes one; default mpca-1 for fit, all for sweep/bench)")
    m.add_argument("--metric", choices=["cosine", "total-distance"], help="pick the mpca metric directly")
    m.add_argument(
        "--orientation",
        choices=["suppress-outliers", "as-written"],
        help="multiplier orientation (default suppress-outliers)",
    )
    m.add_argument("--dim", type=int, help="projection dimension for fit/bench")
    m.add_argument("--dims", help="dimension grid for sweep: comma list and/or a:b:step (default 2:60:2)")
    m.add_argument("--epsilon", type=float, help="cosine-metric epsilon (default 0.0001)")
    m.add_argument("--tol", type=float, help="relative loss-change stop tolerance (default 1e-6)")
    m.add_argument("--max-iter", type=int, help="maximum reweighting iterations (default 50)")
    m.add_argument(
        "--train-fraction", type=float, help="train fraction (default 0.6; protocol also uses 0.8)"
    )
    m.add_argument("--runs", type=int, help="repeated splits per sweep (default 10)")
    m.add_argument("--k", type=int, help="KNN neighbor count (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpca",
        description="Multiplicative-factoring PCA: fit, project, and benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model on a dataset and save it")
    p_tr = sub.add_parser("transform", help="project a dataset through a saved model")
    p_tr.add_argument("--model", help="model file written by fit")
    p_sw = sub.add_parser("sweep", help="accuracy vs dimension over repeated splits")
    p_sw.add_argument("--no-plot", dest="plot", action="store_false", default=None,
                      help="skip figure rendering")
    p_be = sub.add_parser("bench", help="wall-clock timing per method")
    p_be.add_argument("--no-plot", dest="plot", action="store_false", default=None,
                      help="skip figure rendering")
    p_sy = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    for p in (p_fit, p_tr, p_sw, p_be, p_sy):
        _add_common_options(p)
    return parser


def resolve_settings(args) -> dict:
    """Merge CLI flags over config-file values over defaults; track origins."""
    file_values = parse_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_values) - set(OPTIONS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    settings = {}
    origin = {}
    for name, (conv, default) in OPTIONS.items():
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            settings[name] = cli_val
            origin[name] = "cli"
        elif name in file_values:
            raw = file_values[name]
            settings[name] = _to_bool(raw) if conv is bool else conv(raw)
            origin[name] = "config"
        else:
            settings[name] = default
            origin[name] = "default"
    settings["_origin"] = origin
    _validate_settings(settings)
    return settings


def _validate_settings(s: dict) -> None:
    if s["runs"] < 1:
        raise ValueError(f"runs must be >= 1, got {s['runs']}")
    if s["k"] < 1:
        raise ValueError(f"k must be >= 1, got {s['k']}")
    if not 0.0 < s["train_fraction"] < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {s['train_fraction']}")
    if not s["epsilon"] > 0:
        raise ValueError(f"epsilon must be > 0, got {s['epsilon']}")
    if not s["tol"] > 0:
        raise ValueError(f"tol must be > 0, got {s['tol']}")
    if s["max_iter"] < 1:
        raise ValueError(f"max_iter must be >= 1, got {s['max_iter']}")
    if s["dim"] is not None and s["dim"] < 1:
        raise ValueError(f"dim must be >= 1, got {s['dim']}")
    if s["format"] not in ("csv", "structured-text"):
        raise ValueError(f"format must be csv or structured-text, got {s['format']!r}")


def parse_dims(text) -> list[int]:
    """Comma-separated ints and/or a:b:step ranges (inclusive ends)."""
    dims = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            parts = token.split(":")
            if len(parts) not in (2, 3):
                raise ValueError(f"bad dims range {token!r}, expected a:b or a:b:step")
            start, stop = int(parts[0]), int(parts[1])
            step = int(parts[2]) if len(parts) == 3 else 1
            if step < 1 or stop < start:
                raise ValueError(f"bad dims range {token!r}")
            dims.extend(range(start, stop + 1, step))
        else:
            dims.append(int(token))
    if not dims:
        raise ValueError(f"empty dims list {text!r}")
    return sorted(set(dims))


def read_synth_spec(path) -> SyntheticSpec:
    values = parse_config_file(path)
    known = {f.name for f in dataclass_fields(SyntheticSpec)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"{path}: unknown synthetic-spec keys: {sorted(unknown)}")
    converters = {
        "feature_dim": int,
        "inlier_count": int,
        "outlier_count": int,
        "subspace_dim": int,
        "noise_sigma": float,
        "outlier_magnitude": float,
        "seed": int,
    }
    kwargs = {k: converters[k](v) for k, v in values.items()}
    return SyntheticSpec(**kwargs)


def load_dataset(s: dict):
    sources = [name for name in ("dense", "isolet", "mnist_images", "synth_spec") if s[name]]
    if len(sources) != 1:
        raise ValueError(
            "exactly one dataset source is required: "
            "--dense, --isolet, --mnist-images/--mnist-labels, or --synth-spec"
        )
    src = sources[0]
    if src == "dense":
        return load_dense(s["dense"], s["label_col"])
    if src == "isolet":
        return load_isolet(s["isolet"])
    if src == "mnist_images":
        if not s["mnist_labels"]:
            raise ValueError("--mnist-images requires --mnist-labels")
        return load_idx(s["mnist_images"], s["mnist_labels"])
    spec = read_synth_spec(s["synth_spec"])
    if s["_origin"]["seed"] != "default":
        spec = replace(spec, seed=s["seed"])
    ds, _ = synthesize(spec)
    return ds


def parse_methods(s: dict, default: str) -> list[MethodSpec]:
    text = s["method"] if s["method"] else default
    names = [t.strip() for t in str(text).split(",") if t.strip()]
    if not names:
        raise ValueError("method list is empty")
    bad = [n for n in names if n not in METHOD_NAMES]
    if bad:
        raise ValueError(f"unknown methods {bad}; choose from {list(METHOD_NAMES)}")
    return [
        MethodSpec(
            name=n,
            epsilon=s["epsilon"],
            orientation=s["orientation"],
            tolerance=s["tol"],
            max_iterations=s["max_iter"],
        )
        for n in names
    ]


def _fit_method(s: dict) -> MethodSpec:
    if s["metric"] is not None:
        name = _METRIC_TO_METHOD.get(s["metric"])
        if name is None:
            raise ValueError(f"unknown metric {s['metric']!r}")
    else:
        name = s["method"] or "mpca-1"
        if "," in name:
            raise ValueError("fit takes a single method")
    methods = parse_methods({**s, "method": name}, name)
    return methods[0]


def _ensure_out(s: dict) -> str:
    out = s["out"]
    os.makedirs(out, exist_ok=True)
    return out


def cmd_fit(s: dict) -> int:
    if s["dim"] is None:
        raise ValueError("--dim is required for fit")
    ds = load_dataset(s)
    method = _fit_method(s)
    limit = min(ds.feature_dim, ds.sample_count)
    if s["dim"] > limit:
        raise ValueError(f"dim {s['dim']} exceeds min(feature_dim, samples) = {limit}")
    model = method.fit(ds.data, s["dim"])
    out = _ensure_out(s)
    path = os.path.join(out, "model.json")
    save_model(model, path)
    print(f"model: {path}")
    print(f"iterations: {model.iterations}")
    print(f"final_loss: {model.loss_history[-1]!r}")
    print(f"weight_range: [{float(model.weights.min())!r}, {float(model.weights.max())!r}]")
    for note in model.diagnostics:
        print(f"note: {note}", file=sys.stderr)
    return 0


def cmd_transform(s: dict) -> int:
    if not s["model"]:
        raise ValueError("--model is required for transform")
    model = load_model(s["model"])
    ds = load_dataset(s)
    coords = transform(model, ds.data)
    out = _ensure_out(s)
    path = os.path.join(out, "transformed.csv")
    write_matrix(path, coords, header_lines=[f"rows={coords.shape[0]} cols={coords.shape[1]}"])
    print(f"transformed: {path}")
    return 0


def cmd_sweep(s: dict) -> int:
    ds = load_dataset(s)
    methods = parse_methods(s, "pca,mpca-1,mpca-2")
    dims = parse_dims(s["dims"])
    split = SplitSpec(train_fraction=s["train_fraction"], seed=s["seed"])
    reports = dimension_sweep(ds, methods, dims, s["runs"], split, k=s["k"])
    out = _ensure_out(s)
    paths = write_sweep_reports(reports, out, s["format"])
    if s["plot"]:
        fig_path = os.path.join(out, "sweep_accuracy.png")
        render_sweep_figure(reports, fig_path)
        paths.append(fig_path)
    for rep in reports:
        for note in rep.skipped:
            print(f"note: {note}", file=sys.stderr)
        print(format_optimal_row(rep))
    for path in paths:
        print(f"wrote: {path}", file=sys.stderr)
    return 0


def cmd_bench(s: dict) -> int:
    ds = load_dataset(s)
    methods = parse_methods(s, "pca,mpca-1,mpca-2")
    split = SplitSpec(train_fraction=s["train_fraction"], seed=s["seed"])
    train, test = stratified_split(ds, split)
    limit = min(ds.feature_dim, train.sample_count)
    dim = s["dim"] if s["dim"] is not None else min(10, limit)
    if dim > limit:
        raise ValueError(f"dim {dim} exceeds min(feature_dim, train size) = {limit}")
    m = ds.feature_dim
    rows = []
    for ms in methods:
        fit_seconds = []
        model = None
        for _ in range(BENCH_REPS):
            t0 = time.perf_counter()
            model = ms.fit(train.data, dim)
            fit_seconds.append(time.perf_counter() - t0)
        train_coords = transform(model, train.data)  # training artifact, not timed
        test_seconds = []
        for _ in range(BENCH_REPS):
            t0 = time.perf_counter()
            coords = transform(model, test.data)
            _classify_batch(train_coords, train.labels, coords, s["k"])
            test_seconds.append(time.perf_counter() - t0)
        proxy = model.iterations * (m**3 + m * train.sample_count)
        common = {
            "repetitions": BENCH_REPS,
            "iterations": model.iterations,
            "work_proxy": proxy,
        }
        rows.append(
            {
                "method": ms.name,
                "phase": "train",
                "median_seconds": float(np.median(fit_seconds)),
                **common,
            }
        )
        rows.append(
            {
                "method": ms.name,
                "phase": "test",
                "median_seconds": float(np.median(test_seconds)),
                **common,
            }
        )
    out = _ensure_out(s)
    paths = write_bench_table(rows, out, s["format"])
    if s["plot"]:
        fig_path = os.path.join(out, "bench_seconds.png")
        render_bench_figure(rows, fig_path)
        paths.append(fig_path)
    for row in rows:
        print(
            f"{row['method']:8s} {row['phase']:5s} {row['median_seconds']:.4f}s "
            f"(t={row['iterations']}, proxy={row['work_proxy']})"
        )
    for path in paths:
        print(f"wrote: {path}", file=sys.stderr)
    return 0


def cmd_synth(s: dict) -> int:
    if not s["synth_spec"]:
        raise ValueError("--synth-spec is required for synth")
    spec = read_synth_spec(s["synth_spec"])
    if s["_origin"]["seed"] != "default":
        spec = replace(spec, seed=s["seed"])
    ds, truth = synthesize(spec)
    out = _ensure_out(s)
    provenance = [
        f"{f.name} = {getattr(spec, f.name)}" for f in dataclass_fields(SyntheticSpec)
    ]
    data_path = os.path.join(out, "synthetic_data.csv")
    rows = np.vstack([ds.data, ds.labels.astype(np.float64)]).T
    write_matrix(data_path, rows, header_lines=provenance + ["columns: features..., label"])
    mask_path = os.path.join(out, "synthetic_mask.csv")
    mask_lines = ["# 1 = outlier column"] + [str(int(v)) for v in truth.outlier_mask]
    write_text(mask_path, "\n".join(mask_lines) + "\n")
    basis_path = os.path.join(out, "synthetic_basis.csv")
    write_matrix(basis_path, truth.basis, header_lines=provenance)
    for path in (data_path, mask_path, basis_path):
        print(f"wrote: {path}")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "transform": cmd_transform,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "synth": cmd_synth,
}

_ERROR_KINDS = (
    (FormatError, "format"),
    (ProtocolError, "protocol"),
    (NumericalError, "numerical"),
    (ValueError, "argument"),
    (OSError, "io"),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except tuple(k for k, _ in _ERROR_KINDS) as exc:
        kind = next(name for cls, name in _ERROR_KINDS if isinstance(exc, cls))
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
