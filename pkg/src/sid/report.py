"""Serialization of test results and Monte Carlo reports to JSON and CSV.

Payloads are pure functions of the inputs: key order is fixed, floats use
the shortest round-trip representation, and timing information is never
included, so rerunning with the same seed reproduces files byte for byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .data import TestConfig, TestResult
from .simulation import MonteCarloReport, SweepResult

__all__ = [
    "REPORT_CSV_COLUMNS",
    "SWEEP_CSV_COLUMNS",
    "test_result_payload",
    "report_to_dict",
    "sweep_to_dict",
    "dumps_json",
    "write_json",
    "write_report_csv",
    "write_sweep_csv",
]

REPORT_CSV_COLUMNS = ("scenario", "method", "alpha", "n", "censoring", "reps", "B", "rate", "seed")
SWEEP_CSV_COLUMNS = (
    "scenario",
    "param",
    "value",
    "method",
    "alpha",
    "n",
    "censoring",
    "reps",
    "B",
    "rate",
    "seed",
)


def test_result_payload(result: TestResult, cfg: TestConfig) -> dict:
    """The flat dict the CLI prints for a single test."""
    return {
        "statistic": result.statistic,
        "scaled_statistic": result.scaled_statistic,
        "critical_value": result.critical_value,
        "p_value": result.p_value,
        "reject": result.reject,
        "h": result.h_used,
        "gamma": result.gamma_used,
        "B": cfg.bootstrap_reps,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
    }


def report_to_dict(report: MonteCarloReport) -> dict:
    spec = report.spec
    return {
        "scenario": spec.scenario,
        "n": spec.n,
        "censoring": spec.censoring,
        "p": spec.p,
        "theta": spec.theta,
        "lam": spec.lam,
        "methods": list(report.methods),
        "reps": report.reps,
        "B": report.bootstrap_reps,
        "alphas": list(report.alphas),
        "variant": report.variant,
        "seed": report.seed,
        "rates": {m: dict(report.rates[m]) for m in report.methods},
    }


def sweep_to_dict(sweep: SweepResult) -> dict:
    return {
        "scenario": sweep.base.scenario,
        "param": sweep.param,
        "values": list(sweep.values),
        "reports": [report_to_dict(r) for r in sweep.reports],
    }


def dumps_json(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def write_json(payload: dict, path) -> None:
    Path(path).write_text(dumps_json(payload), encoding="utf-8")


def _cell(value) -> str:
    return "" if value is None else str(value)


def _report_rows(report: MonteCarloReport, prefix: tuple = ()) -> list[list[str]]:
    spec = report.spec
    rows = []
    for method in report.methods:
        for alpha in report.alphas:
            rows.append(
                [
                    spec.scenario,
                    *prefix,
                    method,
                    _cell(alpha),
                    _cell(spec.n),
                    _cell(spec.censoring),
                    _cell(report.reps),
                    _cell(report.bootstrap_reps),
                    _cell(report.rate(method, alpha)),
                    _cell(report.seed),
                ]
            )
    return rows


def write_report_csv(report: MonteCarloReport, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_CSV_COLUMNS)
        writer.writerows(_report_rows(report))


def write_sweep_csv(sweep: SweepResult, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for value, report in zip(sweep.values, sweep.reports):
            writer.writerows(_report_rows(report, prefix=(sweep.param, _cell(value))))
