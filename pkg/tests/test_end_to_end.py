import json
from pathlib import Path

import pytest

from app.main import run_command
from app.services.storage import read_json
from app.views.records import CriticalReport, SummaryReport

RESOURCES = Path(__file__).resolve().parents[1] / "app" / "resources"
DEMO_CONFIG = RESOURCES / "configs" / "demo.json"

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    args = ["--config", str(DEMO_CONFIG), "--out", str(out), "--jobs", "4", "eval"]
    assert run_command(args) == 0
    return out


def test_demo_summary_has_every_method(demo_run):
    summary = read_json(demo_run / "eval" / "summary.json", SummaryReport)
    assert set(summary.methods) == {"dgcnn", "rf", "ae"}
    assert all(len(entry.folds) == 5 for entry in summary.methods.values())
    assert summary.cohort_size == 200
    assert summary.dice is not None


def test_demo_is_learnable(demo_run):
    summary = read_json(demo_run / "eval" / "summary.json", SummaryReport)
    assert summary.methods["dgcnn"].mean >= 0.90
    assert summary.methods["rf"].mean >= 0.80


def test_critical_points_gather_around_the_canal(demo_run):
    summary = read_json(demo_run / "eval" / "summary.json", SummaryReport)
    assert summary.critical_annulus_fraction >= 0.5


def test_report_and_critical_points_of_the_best_model(demo_run):
    out = demo_run
    assert run_command(["--out", str(out), "report", "--run", str(out / "eval")]) == 0
    assert (out / "report" / "report.txt").exists()
    assert (out / "report" / "roc_mean.csv").exists()

    clouds = out / "clouds"
    demo = ["--config", str(DEMO_CONFIG), "--out", str(clouds)]
    assert run_command([*demo, "phantom", "generate", "--n", "6"]) == 0
    assert run_command([*demo, "extract", "pointcloud"]) == 0
    model = out / "eval" / "models" / "dgcnn_best"
    args = ["--out", str(out), "critical-points", "--model", str(model)]
    assert run_command([*args, "--clouds", str(clouds / "pointclouds")]) == 0
    report = read_json(out / "critical" / "critical.json", CriticalReport)
    assert report.clouds == 6
    assert report.critical_points <= 6 * 128


def test_rerun_is_byte_identical(demo_run, tmp_path):
    again = tmp_path / "again"
    args = ["--config", str(DEMO_CONFIG), "--out", str(again), "--jobs", "2", "eval"]
    assert run_command(args) == 0
    for name in ("metrics.jsonl", "summary.json", "manifest.json"):
        assert (again / "eval" / name).read_bytes() == (demo_run / "eval" / name).read_bytes()
    summary = json.loads((again / "eval" / "summary.json").read_text())
    assert set(summary["methods"]) == {"dgcnn", "rf", "ae"}
