import json
import subprocess
import sys

import numpy as np
import pytest

from energyquant.cli import main
from energyquant.io import read_ledger_csv, read_points_csv, write_points_csv

GRID_SPEC = "grid:rows=4,cols=4,spacing=1,sigma=0.2"


def run(*argv):
    return main([str(a) for a in argv])


# ------------------------------------------------------------------- compress


def test_compress_writes_points_manifest_and_trace(tmp_path):
    out = tmp_path / "pts.csv"
    code = run(
        "compress", "--target", GRID_SPEC, "--k", 48, "--seed", 7,
        "--iters", 200, "--out", out,
    )
    assert code == 0
    points = read_points_csv(out)
    assert points.shape == (48, 2)
    trace = (tmp_path / "pts.loss.csv").read_text().strip().splitlines()
    assert trace[0] == "iteration,loss"
    assert len(trace) == 201
    manifest = json.loads((tmp_path / "pts.manifest.json").read_text())
    assert manifest["command"] == "compress"
    assert manifest["k"] == 48
    assert manifest["seed"] == 7
    assert manifest["target"] == GRID_SPEC


def test_compress_manifest_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "pts.csv"
    assert run(
        "compress", "--target", "gaussian:dim=2", "--k", 3, "--seed", 11,
        "--iters", 120, "--out", out,
    ) == 0
    first = out.read_bytes()
    out.unlink()
    assert run("compress", "--manifest", tmp_path / "pts.manifest.json") == 0
    assert out.read_bytes() == first


def test_compress_single_point_symmetry(tmp_path):
    out = tmp_path / "p.csv"
    assert run("compress", "--target", "gaussian:dim=1", "--k", 1, "--seed", 1, "--out", out) == 0
    value = read_points_csv(out)
    assert abs(float(value[0, 0])) <= 0.05


def test_compress_bad_target_spec(tmp_path, capsys):
    code = run("compress", "--target", "banana:dim=1", "--k", 1, "--out", tmp_path / "x.csv")
    assert code == 2
    assert "banana" in capsys.readouterr().err


def test_compress_missing_csv_target(tmp_path, capsys):
    code = run("compress", "--target", "csv:missing_file.csv", "--k", 1, "--out", tmp_path / "x.csv")
    assert code == 3
    assert "missing_file.csv" in capsys.readouterr().err


def test_compress_missing_history_file(tmp_path):
    code = run(
        "compress", "--target", "gaussian:dim=1", "--k", 1,
        "--history", tmp_path / "absent.csv", "--out", tmp_path / "x.csv",
    )
    assert code == 3


def test_compress_rejects_bad_k(tmp_path):
    code = run("compress", "--target", "gaussian:dim=1", "--k", 0, "--out", tmp_path / "x.csv")
    assert code == 2


def test_compress_requires_k(tmp_path):
    assert run("compress", "--target", "gaussian:dim=1", "--out", tmp_path / "x.csv") == 2


def test_compress_unwritable_output():
    code = run(
        "compress", "--target", "gaussian:dim=1", "--k", 1, "--iters", 2,
        "--out", "/nonexistent-dir/x.csv",
    )
    assert code == 3


def test_compress_numeric_failure(tmp_path):
    code = run(
        "compress", "--target", "gaussian:dim=1", "--k", 1, "--iters", 50,
        "--step", 1e300, "--optimizer", "sgd", "--out", tmp_path / "x.csv",
    )
    assert code == 4


# ---------------------------------------------------------------- sample-next


def test_sample_next_builds_ledger(tmp_path):
    ledger = tmp_path / "ledger.csv"
    code = run(
        "sample-next", "--target", "gaussian:dim=2", "--count", 10,
        "--seed", 3, "--iters", 150, "--history", ledger,
    )
    assert code == 0
    points = read_ledger_csv(ledger)
    assert points.shape == (10, 2)
    header = ledger.read_text().splitlines()[0]
    assert header == "index,dim0,dim1"
    manifest = json.loads((tmp_path / "ledger.csv.manifest.json").read_text())
    assert manifest["command"] == "sample-next"
    assert manifest["ledger_rows_before"] == 0


def test_sample_next_appends_across_runs(tmp_path):
    ledger = tmp_path / "ledger.csv"
    assert run(
        "sample-next", "--target", "gaussian:dim=2", "--count", 5,
        "--seed", 1, "--iters", 100, "--history", ledger,
    ) == 0
    first_five = ledger.read_text().splitlines()[1:6]
    assert run(
        "sample-next", "--target", "gaussian:dim=2", "--count", 5,
        "--seed", 2, "--iters", 100, "--history", ledger,
    ) == 0
    lines = ledger.read_text().splitlines()
    assert len(lines) == 11
    assert lines[1:6] == first_five  # earlier emissions untouched
    points = read_ledger_csv(ledger)
    assert points.shape == (10, 2)


def test_sample_next_avoids_history(tmp_path):
    ledger = tmp_path / "ledger.csv"
    assert run(
        "sample-next", "--target", "gaussian:dim=2", "--count", 6,
        "--seed", 9, "--history", ledger,
    ) == 0
    points = read_ledger_csv(ledger)
    from energyquant import min_pairwise_distance

    assert min_pairwise_distance(points) > 0.2


def test_sample_next_corrupt_ledger_left_unmodified(tmp_path, capsys):
    ledger = tmp_path / "ledger.csv"
    corrupt = "index,dim0\n1,0.5\n7,0.25\n"  # emission indices out of order
    ledger.write_text(corrupt)
    code = run("sample-next", "--target", "gaussian:dim=1", "--count", 1, "--history", ledger)
    assert code == 3
    assert ledger.read_text() == corrupt
    assert "emission index" in capsys.readouterr().err


def test_sample_next_bad_header_rejected(tmp_path):
    ledger = tmp_path / "ledger.csv"
    ledger.write_text("dim0,dim1\n0.0,0.0\n")
    assert run("sample-next", "--target", "gaussian:dim=2", "--count", 1, "--history", ledger) == 3


def test_sample_next_manifest_rerun_checks_ledger_state(tmp_path):
    ledger = tmp_path / "ledger.csv"
    assert run(
        "sample-next", "--target", "gaussian:dim=1", "--count", 2,
        "--seed", 5, "--iters", 80, "--history", ledger,
    ) == 0
    after = ledger.read_bytes()
    manifest = tmp_path / "ledger.csv.manifest.json"
    # ledger moved on: re-run must refuse rather than silently diverge
    assert run("sample-next", "--manifest", manifest) == 2
    # restored ledger: re-run reproduces the rows byte for byte
    ledger.unlink()
    assert run("sample-next", "--manifest", manifest) == 0
    assert ledger.read_bytes() == after


def test_sample_next_rejects_bad_count(tmp_path):
    code = run(
        "sample-next", "--target", "gaussian:dim=1", "--count", 0,
        "--history", tmp_path / "ledger.csv",
    )
    assert code == 2


# ------------------------------------------------------------------- evaluate


def test_evaluate_grid_output(tmp_path, capsys):
    out = tmp_path / "pts.csv"
    assert run("compress", "--target", GRID_SPEC, "--k", 48, "--seed", 7, "--out", out) == 0
    code = run(
        "evaluate", "--points", out, "--target", GRID_SPEC,
        "--samples", 20000, "--kernel-a", 0,
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"energy_distance_sq", "min_pairwise_distance", "allocation_counts"}
    assert report["allocation_counts"] == [3] * 16
    assert report["energy_distance_sq"] >= 0.0
    assert report["min_pairwise_distance"] > 0.0


def test_evaluate_self_distance_near_zero(tmp_path, capsys):
    pts = tmp_path / "cloud.csv"
    data = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
    write_points_csv(pts, data)
    code = run(
        "evaluate", "--points", pts, "--target", f"csv:{pts}",
        "--samples", 20000, "--kernel-a", 0,
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["energy_distance_sq"] < 0.05
    assert report["allocation_counts"] is None


def test_evaluate_single_point_reports_null_spacing(tmp_path, capsys):
    pts = tmp_path / "single.csv"
    write_points_csv(pts, np.array([[0.0]]))
    code = run("evaluate", "--points", pts, "--target", "gaussian:dim=1", "--samples", 5000)
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["min_pairwise_distance"] is None
    assert report["energy_distance_sq"] > 0.0


def test_evaluate_missing_points_file(tmp_path):
    assert run("evaluate", "--points", tmp_path / "none.csv", "--target", "gaussian:dim=1") == 3


# ----------------------------------------------------------------------- plot


def test_plot_grid_scene_marker_counts(tmp_path):
    pts = tmp_path / "pts.csv"
    centers = tmp_path / "centers.csv"
    assert run("compress", "--target", GRID_SPEC, "--k", 48, "--seed", 7, "--iters", 100, "--out", pts) == 0
    from energyquant import GridMixture

    write_points_csv(centers, GridMixture(4, 4).centers())
    svg_path = tmp_path / "scene.svg"
    assert run("plot", "--points", pts, "--centers", centers, "--out", svg_path) == 0
    svg = svg_path.read_text()
    assert svg.count('fill="red"') == 16
    assert svg.count('fill="blue"') == 48
    assert "<text" not in svg


def test_plot_labels_from_ledger(tmp_path):
    ledger = tmp_path / "ledger.csv"
    assert run(
        "sample-next", "--target", "gaussian:dim=2", "--count", 10,
        "--seed", 3, "--iters", 100, "--history", ledger,
    ) == 0
    svg_path = tmp_path / "trail.svg"
    assert run("plot", "--points", ledger, "--labels", "--out", svg_path) == 0
    svg = svg_path.read_text()
    assert svg.count('fill="blue"') == 10
    for label in range(1, 11):
        assert f">{label}</text>" in svg


def test_plot_empty_points_file(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("dim0,dim1\n")
    assert run("plot", "--points", empty, "--out", tmp_path / "x.svg") == 3
    really_empty = tmp_path / "none.csv"
    really_empty.write_text("")
    assert run("plot", "--points", really_empty, "--out", tmp_path / "y.svg") == 3


def test_plot_1d_points(tmp_path):
    pts = tmp_path / "pts.csv"
    write_points_csv(pts, np.array([[0.0], [1.0], [2.0]]))
    svg_path = tmp_path / "line.svg"
    assert run("plot", "--points", pts, "--out", svg_path) == 0
    assert svg_path.read_text().count('fill="blue"') == 3


def test_plot_rejects_high_dimension(tmp_path):
    pts = tmp_path / "pts.csv"
    write_points_csv(pts, np.zeros((2, 3)))
    assert run("plot", "--points", pts, "--out", tmp_path / "x.svg") == 2


# -------------------------------------------------------------- entry point


def test_installed_entry_point_smoke(tmp_path):
    out = tmp_path / "pts.csv"
    proc = subprocess.run(
        [
            sys.executable, "-m", "energyquant.cli",
            "compress", "--target", "gaussian:dim=1", "--k", "2",
            "--iters", "20", "--seed", "1", "--out", str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    proc = subprocess.run(
        [sys.executable, "-m", "energyquant.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "energyquant" in proc.stdout
