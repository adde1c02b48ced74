"""JSON and aligned-text renderings of experiment reports."""

from __future__ import annotations

import json
from typing import Any

from pydantic import BaseModel

from tedkit.models import METRICS, AggregateReport, ExperimentReport, Table1Report

TIMING_KEYS = frozenset({"runtime_seconds"})
NOT_AVAILABLE = "N/A"


def _strip(value: Any, keys: frozenset[str]) -> Any:
    if isinstance(value, dict):
        return {k: _strip(v, keys) for k, v in value.items() if k not in keys}
    if isinstance(value, list):
        return [_strip(v, keys) for v in value]
    return value


def to_document(report: BaseModel, include_timings: bool = False) -> dict[str, Any]:
    """Plain-JSON form of any report; timings are dropped unless requested."""
    doc = report.model_dump(mode="json")
    if isinstance(report, Table1Report):
        doc["passed"] = report.passed
    return doc if include_timings else _strip(doc, TIMING_KEYS)


def to_json(report: BaseModel, include_timings: bool = False) -> str:
    return json.dumps(to_document(report, include_timings), indent=2) + "\n"


def percent(value: float | None) -> str:
    return NOT_AVAILABLE if value is None else f"{100.0 * value:.1f}"


def _cell(report: ExperimentReport | AggregateReport, metric: str) -> str:
    if isinstance(report, ExperimentReport):
        return percent(getattr(report, metric))
    summary = report.summary.get(metric)
    if summary is None:
        return NOT_AVAILABLE
    return f"{percent(summary.mean)} ({100.0 * summary.std:.1f})"


def _align(rows: list[list[str]]) -> list[str]:
    if not rows:
        return []
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return [
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths, strict=True)).rstrip()
        for row in rows
    ]


def experiment_to_text(report: ExperimentReport, include_timings: bool = False) -> str:
    """Key/value listing of one run."""
    derived = " (derived from E)" if report.derived_y else ""
    rows = [
        ["mode", report.mode],
        ["dataset", report.dataset],
        ["learner", report.learner],
        ["seed", str(report.seed)],
        ["train / test", f"{report.n_train} / {report.n_test}"],
        ["Y accuracy", percent(report.y_accuracy) + derived],
    ]
    if report.mode == "ted":
        rows += [
            ["E accuracy", percent(report.e_accuracy)],
            ["YE accuracy", percent(report.ye_accuracy)],
            ["composites", str(report.n_composites)],
            ["unseen test pairs", str(report.unseen_test_pairs)],
        ]
        for name, value in (report.e_accuracy_by_explanation or {}).items():
            rows.append([f"  E accuracy [{name}]", percent(value)])
    if include_timings:
        rows.append(["runtime (s)", f"{report.runtime_seconds:.2f}"])
    return "\n".join(_align(rows)) + "\n"


def aggregate_to_text(report: AggregateReport, include_timings: bool = False) -> str:
    """One line per seed followed by ``mean (std)`` per metric."""
    metrics = [m for m in METRICS if m in report.summary]
    header = ["seed", *(m.split("_")[0].upper() for m in metrics)]
    if include_timings:
        header.append("runtime (s)")
    rows = [header]
    for run in report.runs:
        row = [str(run.seed), *(percent(getattr(run, m)) for m in metrics)]
        if include_timings:
            row.append(f"{run.runtime_seconds:.2f}")
        rows.append(row)
    rows.append(["mean (std)", *(_cell(report, m) for m in metrics)])
    title = f"{report.mode} / {report.dataset} / {report.learner}"
    return title + "\n" + "\n".join(_align(rows)) + "\n"


def table1_to_text(report: Table1Report, include_timings: bool = False) -> str:
    """Accuracy table (rows ``X,Y`` and ``X,Y,E``; Y and E per use case) and checks."""
    rows = [
        ["", "Tic-Tac-Toe", "", "Loan Repayment", ""],
        ["Training input", "Y", "E", "Y", "E"],
        [
            "X,Y",
            _cell(report.tictactoe_baseline, "y_accuracy"),
            NOT_AVAILABLE,
            _cell(report.loan_baseline, "y_accuracy"),
            NOT_AVAILABLE,
        ],
        [
            "X,Y,E",
            _cell(report.tictactoe_ted, "y_accuracy"),
            _cell(report.tictactoe_ted, "e_accuracy"),
            _cell(report.loan_ted, "y_accuracy"),
            _cell(report.loan_ted, "e_accuracy"),
        ],
    ]
    lines = _align(rows)
    lines.append("")
    lines += _align(
        [
            ["PASS" if c.passed else "FAIL", c.name, f"{c.observed:.2f}", c.expected]
            for c in report.checks
        ]
    )
    lines.append("")
    lines.append("all checks passed" if report.passed else "some checks failed")
    if include_timings:
        total = (
            report.tictactoe_baseline.runtime_seconds
            + report.tictactoe_ted.runtime_seconds
            + sum(r.runtime_seconds for r in report.loan_baseline.runs)
            + sum(r.runtime_seconds for r in report.loan_ted.runs)
        )
        lines.append(f"total run time: {total:.1f} s")
    return "\n".join(lines) + "\n"
