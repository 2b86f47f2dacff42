"""Plain-text result tables and mean-ROC CSVs for finished runs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from app.pipelines.evaluation import (
    ROC_CSV_HEADER,
    MeanRocCurve,
    interpolate_tpr,
    mean_roc_curve,
    roc_from_record,
    roc_rows,
)
from app.views.records import MetricsRecord, ReferenceMetric, SummaryReport

from .experiment import reference_metrics
from .storage import ArtifactStore, StorageError, read_json, read_jsonl

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
SUMMARY_FILE = "summary.json"
REPORT_FILE = "report.txt"
ROC_FILE = "roc_mean.csv"


@dataclass(frozen=True)
class ReportRow:
    method: str
    aucs: tuple[float, ...]
    reference: Optional[ReferenceMetric] = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def std(self) -> Optional[float]:
        if len(self.aucs) < 2:
            return None
        return float(np.std(self.aucs, ddof=1))


def _metrics_files(run_dir: Path) -> list[Path]:
    direct = run_dir / METRICS_FILE
    if direct.exists():
        return [direct]
    # a directory of single-split training runs, e.g. ``models/``
    return sorted(run_dir.glob(f"*/{METRICS_FILE}"))


def load_metrics(run_dir: Path) -> list[MetricsRecord]:
    files = _metrics_files(run_dir)
    if not files:
        raise StorageError(f"{run_dir}: no {METRICS_FILE} to report on")
    records = [record for path in files for record in read_jsonl(path, MetricsRecord)]
    if not records:
        raise StorageError(f"{run_dir}: {METRICS_FILE} holds no records")
    return records


def load_summary(run_dir: Path) -> Optional[SummaryReport]:
    path = run_dir / SUMMARY_FILE
    if not path.exists():
        return None
    return read_json(path, SummaryReport)


def group_by_method(records: Sequence[MetricsRecord]) -> dict[str, list[MetricsRecord]]:
    """Records per method, methods in first-seen order, folds ascending."""

    groups: dict[str, list[MetricsRecord]] = {}
    for record in records:
        groups.setdefault(record.method, []).append(record)
    for method, items in groups.items():
        items.sort(key=lambda record: -1 if record.fold is None else record.fold)
    return groups


def report_rows(
    groups: Mapping[str, Sequence[MetricsRecord]],
    reference: Mapping[str, ReferenceMetric],
) -> list[ReportRow]:
    return [
        ReportRow(
            method,
            tuple(record.auc for record in items),
            reference.get(method),
        )
        for method, items in groups.items()
    ]


def method_curve(records: Sequence[MetricsRecord], grid_points: int) -> MeanRocCurve:
    results = [roc_from_record(record) for record in records]
    if len(results) >= 2:
        return mean_roc_curve(results, grid_points)
    grid = np.linspace(0.0, 1.0, grid_points)
    return MeanRocCurve(grid, interpolate_tpr(results[0], grid), np.zeros(grid_points))


def _auc_cell(row: ReportRow) -> str:
    if row.std is None:
        return f"{row.mean:.3f}"
    return f"{row.mean:.3f} ± {row.std:.3f}"


def _reference_cell(row: ReportRow) -> str:
    if row.reference is None:
        return "-"
    return f"{row.reference.mean:.2f} ± {row.reference.std:.2f}"


def render_table(rows: Sequence[ReportRow], summary: SummaryReport | None = None) -> str:
    """Fixed-width table of test AUCs next to the clinical reference figures."""

    header = ("method", "folds", "test AUC", "clinical AUC")
    cells = [
        (row.method, str(len(row.aucs)), _auc_cell(row), _reference_cell(row))
        for row in rows
    ]
    widths = [max(len(line[i]) for line in [header, *cells]) for i in range(len(header))]

    def line(values: Sequence[str]) -> str:
        return "  ".join(value.ljust(width) for value, width in zip(values, widths)).rstrip()

    lines = [line(header), line(["-" * width for width in widths])]
    lines.extend(line(values) for values in cells)

    if summary is not None:
        lines.append("")
        lines.append(
            f"cohort: {summary.cohort_size} phantoms, "
            f"{100.0 * summary.fragile_fraction:.1f}% fragile"
        )
        if summary.dice is not None:
            reference = summary.reference.get("dice")
            suffix = ""
            if reference is not None:
                suffix = f" (clinical {reference.mean:.2f} ± {reference.std:.2f})"
            lines.append(
                f"autoencoder Dice: {summary.dice.mean:.3f} ± {summary.dice.std:.3f}"
                + suffix
            )
        if summary.best_fold is not None:
            lines.append(f"best DGCNN fold: {summary.best_fold}")
        if summary.critical_points is not None:
            lines.append(f"critical points pooled: {summary.critical_points}")
        if summary.critical_annulus_fraction is not None:
            lines.append(
                "density mass in the canal annulus: "
                f"{100.0 * summary.critical_annulus_fraction:.1f}%"
            )
    return "\n".join(lines) + "\n"


def write_report(
    run_dir: Path,
    store: ArtifactStore,
    relative: str = "report",
    *,
    grid_points: int = 101,
) -> str:
    """Write ``report.txt`` and ``roc_mean.csv``; returns the table text."""

    groups = group_by_method(load_metrics(run_dir))
    summary = load_summary(run_dir)
    reference = summary.reference if summary and summary.reference else reference_metrics()
    text = render_table(report_rows(groups, reference), summary)
    curves = {method: method_curve(items, grid_points) for method, items in groups.items()}
    store.write_text(Path(relative) / REPORT_FILE, text)
    store.write_csv(Path(relative) / ROC_FILE, ROC_CSV_HEADER, roc_rows(curves))
    logger.info("Report for %s written (%d methods)", run_dir, len(groups))
    return text


__all__ = [
    "REPORT_FILE",
    "ROC_FILE",
    "ReportRow",
    "group_by_method",
    "load_metrics",
    "load_summary",
    "method_curve",
    "render_table",
    "report_rows",
    "write_report",
]
