"""Report writers: delimited tables, the JSON variant, and rendered figures."""

import json
import os

import numpy as np

from mpca import MethodSpec, SplitSpec, dimension_sweep
from mpca.report import (
    format_optimal_row,
    render_sweep_figure,
    write_matrix,
    write_sweep_reports,
)


def _reports(cluster_dataset):
    return dimension_sweep(
        cluster_dataset,
        [MethodSpec("pca"), MethodSpec("mpca-1")],
        [1, 2],
        runs=2,
        split=SplitSpec(0.6, seed=0),
    )


def test_csv_reports_carry_all_fields(cluster_dataset, tmp_path):
    reports = _reports(cluster_dataset)
    paths = write_sweep_reports(reports, tmp_path, "csv")
    assert [os.path.basename(p) for p in paths] == [
        "sweep_runs.csv",
        "sweep_summary.csv",
        "sweep_optimal.csv",
    ]
    runs = (tmp_path / "sweep_runs.csv").read_text().splitlines()
    assert runs[0] == "method,dim,run,seed,accuracy_percent"
    assert len([l for l in runs if l.startswith("pca,")]) == 4  # 2 dims x 2 runs
    summary = (tmp_path / "sweep_summary.csv").read_text().splitlines()
    header_rows = [l for l in summary if l.startswith("#")]
    assert any("optimal" in h for h in header_rows)  # selection caveat travels along
    data_rows = [l for l in summary if not l.startswith("#")]
    assert data_rows[0] == "method,dim,mean,std,n_runs"


def test_structured_text_variant_same_fields(cluster_dataset, tmp_path):
    reports = _reports(cluster_dataset)
    (path,) = write_sweep_reports(reports, tmp_path, "structured-text")
    doc = json.loads(open(path).read())
    assert set(doc) == {"notes", "runs", "summary", "optimal"}
    assert set(doc["runs"][0]) == {"method", "dim", "run", "seed", "accuracy_percent"}
    assert set(doc["summary"][0]) == {"method", "dim", "mean", "std", "n_runs"}
    # numbers identical to the csv variant's source
    assert doc["summary"][0]["mean"] == reports[0].stats[0].mean


def test_optimal_row_format(cluster_dataset):
    rep = _reports(cluster_dataset)[0]
    line = format_optimal_row(rep)
    assert line == f"pca: 100.00 ± 0.00 ({rep.optimal_dim})"


def test_figure_rendering_and_determinism(cluster_dataset, tmp_path):
    reports = _reports(cluster_dataset)
    p1 = tmp_path / "a.png"
    p2 = tmp_path / "b.png"
    render_sweep_figure(reports, p1)
    render_sweep_figure(reports, p2)
    assert p1.stat().st_size > 1000
    assert p1.read_bytes() == p2.read_bytes()


def test_write_matrix_round_trip(tmp_path, rng):
    from mpca import load_dense

    mat = rng.standard_normal((4, 3))
    labeled = np.hstack([mat, np.array([[0.0], [1.0], [0.0], [1.0]])])
    path = tmp_path / "m.csv"
    write_matrix(path, labeled, header_lines=["provenance"])
    ds = load_dense(path, "last")
    np.testing.assert_allclose(ds.data.T, mat, atol=0)


def test_writers_are_atomic(tmp_path, cluster_dataset):
    # no stray temp files are left after a successful write
    reports = _reports(cluster_dataset)
    write_sweep_reports(reports, tmp_path, "csv")
    leftovers = [n for n in os.listdir(tmp_path) if n.endswith(".tmp")]
    assert leftovers == []


def test_robustness_table(tmp_path, corrupted_spec):
    from mpca import MethodSpec, robustness_trial
    from mpca.report import write_robustness_report

    report = robustness_trial(corrupted_spec, [MethodSpec("pca"), MethodSpec("mpca-2")], [0, 1])
    (path,) = write_robustness_report(report, tmp_path, "csv")
    rows = open(path).read().splitlines()
    assert rows[0] == (
        "method,seed,largest_principal_angle_rad,mean_inlier_weight,mean_outlier_weight"
    )
    assert len(rows) == 1 + 4  # 2 methods x 2 seeds
    (jpath,) = write_robustness_report(report, tmp_path, "structured-text")
    doc = json.loads(open(jpath).read())
    assert len(doc["rows"]) == 4
