"""Report emission: delimited tables, a structured-text (JSON) variant, and
rendered accuracy/timing figures. All writers are atomic (write-then-rename)
so failed commands leave no truncated files."""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import RobustnessReport, SweepReport

# Optimal rows select the dimension on test accuracy; the caveat travels with
# every summary so downstream readers see it.
OPTIMAL_CAVEAT = "optimal dim selected on test accuracy; treat as optimistic"


def write_text(path, text: str) -> None:
    """Atomic text write."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_matrix(path, matrix: np.ndarray, header_lines=()) -> None:
    """Write a dense matrix as comma-separated rows, '#' comments first."""
    lines = [f"# {h}" for h in header_lines]
    for row in np.asarray(matrix, dtype=np.float64):
        lines.append(",".join(repr(float(v)) for v in row))
    write_text(path, "\n".join(lines) + "\n")


def format_optimal_row(report: SweepReport) -> str:
    """Tables-style 'mean ± std (dim)' with two decimals."""
    st = report.stat_for(report.optimal_dim)
    return f"{report.method}: {st.mean:.2f} ± {st.std:.2f} ({report.optimal_dim})"


def _sweep_tables(reports: list[SweepReport]):
    runs_rows = []
    summary_rows = []
    optimal_rows = []
    for rep in reports:
        for st in rep.stats:
            for run, (seed, acc) in enumerate(zip(rep.seeds, st.accuracies)):
                runs_rows.append(
                    {
                        "method": rep.method,
                        "dim": st.dim,
                        "run": run,
                        "seed": seed,
                        "accuracy_percent": acc,
                    }
                )
            summary_rows.append(
                {
                    "method": rep.method,
                    "dim": st.dim,
                    "mean": st.mean,
                    "std": st.std,
                    "n_runs": len(st.accuracies),
                }
            )
        best = rep.stat_for(rep.optimal_dim)
        optimal_rows.append(
            {
                "method": rep.method,
                "dim": rep.optimal_dim,
                "mean": best.mean,
                "std": best.std,
            }
        )
    return runs_rows, summary_rows, optimal_rows


def _csv(rows: list[dict], comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    if rows:
        cols = list(rows[0])
        lines.append(",".join(cols))
        for row in rows:
            lines.append(",".join(_cell(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    # plain-float repr keeps full precision and avoids numpy scalar wrappers
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_sweep_reports(reports: list[SweepReport], out_dir, fmt: str = "csv") -> list[str]:
    """Emit per-run, summary, and optimal tables; returns written paths."""
    runs_rows, summary_rows, optimal_rows = _sweep_tables(reports)
    skipped = [s for rep in reports for s in rep.skipped]
    notes = [OPTIMAL_CAVEAT] + sorted(set(skipped))
    paths = []
    if fmt == "csv":
        for name, rows, comments in (
            ("sweep_runs.csv", runs_rows, ()),
            ("sweep_summary.csv", summary_rows, notes),
            ("sweep_optimal.csv", optimal_rows, notes),
        ):
            path = os.path.join(out_dir, name)
            write_text(path, _csv(rows, comments))
            paths.append(path)
    elif fmt == "structured-text":
        doc = {
            "notes": notes,
            "runs": runs_rows,
            "summary": summary_rows,
            "optimal": optimal_rows,
        }
        path = os.path.join(out_dir, "sweep_report.json")
        write_text(path, json.dumps(doc, indent=1) + "\n")
        paths.append(path)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return paths


def render_sweep_figure(reports: list[SweepReport], path) -> None:
    """Accuracy versus projection dimension, one errorbar curve per method."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for rep in reports:
        dims = [st.dim for st in rep.stats]
        means = [st.mean for st in rep.stats]
        stds = [st.std for st in rep.stats]
        ax.errorbar(dims, means, yerr=stds, marker="o", capsize=3, label=rep.method)
    ax.set_xlabel("projection dimension")
    ax.set_ylabel("mean accuracy (%)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save_figure(fig, path)


def write_robustness_report(report: RobustnessReport, out_dir, fmt: str = "csv") -> list[str]:
    rows = [
        {
            "method": r.method,
            "seed": r.seed,
            "largest_principal_angle_rad": r.angle,
            "mean_inlier_weight": r.mean_inlier_weight,
            "mean_outlier_weight": r.mean_outlier_weight,
        }
        for r in report.rows
    ]
    if fmt == "csv":
        path = os.path.join(out_dir, "robustness.csv")
        write_text(path, _csv(rows))
    elif fmt == "structured-text":
        path = os.path.join(out_dir, "robustness.json")
        write_text(path, json.dumps({"rows": rows}, indent=1) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return [path]


def write_bench_table(rows: list[dict], out_dir, fmt: str = "csv") -> list[str]:
    """Timing table: one row per (method, phase)."""
    if fmt == "csv":
        path = os.path.join(out_dir, "bench.csv")
        write_text(path, _csv(rows))
    elif fmt == "structured-text":
        path = os.path.join(out_dir, "bench.json")
        write_text(path, json.dumps({"rows": rows}, indent=1) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return [path]


def render_bench_figure(rows: list[dict], path) -> None:
    """Grouped bars of median seconds per method and phase."""
    methods = sorted({r["method"] for r in rows})
    phases = sorted({r["phase"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    width = 0.8 / max(len(phases), 1)
    xs = np.arange(len(methods))
    for i, phase in enumerate(phases):
        vals = []
        for method in methods:
            match = [r for r in rows if r["method"] == method and r["phase"] == phase]
            vals.append(match[0]["median_seconds"] if match else 0.0)
        ax.bar(xs + i * width, vals, width=width, label=phase)
    ax.set_xticks(xs + width * (len(phases) - 1) / 2)
    ax.set_xticklabels(methods)
    ax.set_ylabel("median seconds")
    ax.legend()
    fig.tight_layout()
    _save_figure(fig, path)


def _save_figure(fig, path) -> None:
    tmp = f"{path}.tmp.png"
    fig.savefig(tmp, dpi=150)
    plt.close(fig)
    os.replace(tmp, path)
