import numpy as np
import pytest

from app.pipelines.evaluation import metrics_record, roc_auc
from app.services.reporting import write_report
from app.services.storage import ArtifactStore, StorageError


@pytest.fixture()
def run_dir(tmp_path):
    store = ArtifactStore(tmp_path / "run")
    perfect = roc_auc(np.array([0.9, 0.8, 0.3, 0.2]), np.array([1, 1, 0, 0]))
    chance = roc_auc(np.full(4, 0.5), np.array([1, 1, 0, 0]))
    store.write_jsonl(
        "metrics.jsonl",
        [
            metrics_record("dgcnn", 0, perfect),
            metrics_record("dgcnn", 1, chance),
            metrics_record("rf", None, perfect),
        ],
    )
    return store.root


def test_table_lists_each_method_with_its_reference(run_dir, tmp_path):
    store = ArtifactStore(tmp_path / "out")
    text = write_report(run_dir, store, "report", grid_points=5)
    lines = text.splitlines()
    assert lines[0].split() == ["method", "folds", "test", "AUC", "clinical", "AUC"]
    dgcnn = next(line for line in lines if line.startswith("dgcnn"))
    assert "0.750 ± 0.354" in dgcnn
    assert "0.76 ± 0.08" in dgcnn
    rf = next(line for line in lines if line.startswith("rf"))
    assert "1.000" in rf
    assert "1.000 ±" not in rf
    assert "0.69 ± 0.05" in rf
    assert (tmp_path / "out" / "report" / "report.txt").read_text(encoding="utf-8") == text


def test_roc_csv_holds_the_mean_curve(run_dir, tmp_path):
    store = ArtifactStore(tmp_path / "out")
    write_report(run_dir, store, "report", grid_points=5)
    rows = (tmp_path / "out" / "report" / "roc_mean.csv").read_text().splitlines()
    assert rows[0] == "method,fpr,tpr_mean,tpr_std"
    assert len(rows) == 1 + 2 * 5
    dgcnn = [row.split(",") for row in rows[1:] if row.startswith("dgcnn")]
    assert [float(row[2]) for row in dgcnn] == pytest.approx([0.5, 0.625, 0.75, 0.875, 1.0])
    rf = [row.split(",") for row in rows[1:] if row.startswith("rf")]
    assert all(float(row[3]) == 0.0 for row in rf)


def test_missing_metrics_is_reported(tmp_path):
    with pytest.raises(StorageError, match="no metrics.jsonl"):
        write_report(tmp_path, ArtifactStore(tmp_path / "out"))
