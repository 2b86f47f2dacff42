import filecmp
import json
from argparse import Namespace

import pytest
from prometheus_client import REGISTRY

from app.main import create_parser, run_command
from app.middleware import CommandRequest, StructuredLoggingMiddleware, TelemetryMiddleware


def _error(capsys):
    lines = capsys.readouterr().err.splitlines()
    payload = next(line for line in reversed(lines) if line.startswith('{"detail"'))
    return json.loads(payload)


def _same_tree(left, right):
    comparison = filecmp.dircmp(left, right)
    if comparison.left_only or comparison.right_only or comparison.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(
        left, right, comparison.common_files, shallow=False
    )
    if mismatch or errors:
        return False
    return all(_same_tree(left / name, right / name) for name in comparison.common_dirs)


def test_schema_prints_the_experiment_schema(capsys):
    assert run_command(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert {"phantom", "strain", "dgcnn", "evaluation"} <= set(schema["properties"])


def test_unknown_flag_exits_with_one(capsys):
    assert run_command(["phantom", "generate", "--bogus", "3"]) == 1
    error = _error(capsys)
    assert "--bogus" in error["detail"]
    assert error["code"] == "invalid_arguments"


def test_missing_subcommand_exits_with_one(capsys):
    assert run_command([]) == 1
    assert _error(capsys)["code"] == "invalid_arguments"


def test_eval_without_config_writes_nothing(tmp_path, capsys):
    out = tmp_path / "out"
    assert run_command(["--out", str(out), "eval"]) == 1
    assert "--config" in _error(capsys)["detail"]
    assert not out.exists()


def test_misspelt_config_field_is_named(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"phantom": {"cohort_sise": 3}}), encoding="utf-8")
    assert run_command(["--config", str(config), "eval"]) == 1
    assert "phantom.cohort_sise" in _error(capsys)["detail"]


def test_out_of_range_override_is_invalid(tmp_path, capsys):
    assert run_command(["--out", str(tmp_path), "phantom", "generate", "--n", "1"]) == 1
    assert "phantom.cohort_size" in _error(capsys)["detail"]


def test_missing_input_directory_is_invalid(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    args = ["--out", str(tmp_path), "label", "strain", "--cohort", str(missing)]
    assert run_command(args) == 1
    assert "--cohort" in _error(capsys)["detail"]


def test_runtime_failure_exits_with_two(tmp_path, capsys):
    run = tmp_path / "empty-run"
    run.mkdir()
    args = ["--out", str(tmp_path / "out"), "report", "--run", str(run)]
    assert run_command(args) == 2
    error = _error(capsys)
    assert error["code"] == "StorageError"
    assert "metrics.jsonl" in error["detail"]


def test_metrics_file_is_written(tmp_path):
    metrics = tmp_path / "metrics.prom"
    assert run_command(["--metrics-file", str(metrics), "schema"]) == 0
    text = metrics.read_text(encoding="utf-8")
    assert 'onh_commands_total{command="schema",status="ok"}' in text


def test_phantom_generation_is_byte_identical(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        args = ["--out", str(out), "phantom", "generate", "--n", "3", "--seed", "7"]
        assert run_command(args) == 0
    assert sorted(path.name for path in (first / "phantoms").iterdir()) == [
        "cohort.json",
        "manifest.json",
        "onh-0000",
        "onh-0001",
        "onh-0002",
    ]
    assert _same_tree(first, second)


def test_help_lists_the_experiment_stages(capsys):
    with pytest.raises(SystemExit) as exit_info:
        create_parser().parse_args(["--help"])
    assert exit_info.value.code == 0
    out = capsys.readouterr().out
    assert "experiment stages:" in out
    assert "critical-points" in out


def test_telemetry_counts_every_exit_status():
    def labels(status):
        return {"command": "noop", "status": status}

    before = {
        status: REGISTRY.get_sample_value("onh_commands_total", labels(status)) or 0.0
        for status in ("ok", "invalid", "failed")
    }
    request = CommandRequest("noop", Namespace(out=None))
    for code in (0, 1, 2, 2):
        app = StructuredLoggingMiddleware(TelemetryMiddleware(lambda _, code=code: code))
        assert app(request) == code
    after = {
        status: REGISTRY.get_sample_value("onh_commands_total", labels(status))
        for status in before
    }
    assert after["ok"] - before["ok"] == 1
    assert after["invalid"] - before["invalid"] == 1
    assert after["failed"] - before["failed"] == 2
