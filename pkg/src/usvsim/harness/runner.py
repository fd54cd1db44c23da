"""Headless scenario execution: run to completion, write trace + metrics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .config import Scenario
from .metrics import MetricsReport, compute_metrics
from .simcore import SimCore
from .trace import TraceRecord, csv_header, record_to_csv_row, record_to_line


@dataclass
class RunResult:
    scenario: Scenario
    records: list[TraceRecord]
    metrics: MetricsReport

    def trace_lines(self) -> list[bytes]:
        return [record_to_line(r) for r in self.records]

    def trace_bytes(self) -> bytes:
        return b"".join(self.trace_lines())


def run_scenario(scenario: Scenario, seed: Optional[int] = None,
                 trace_path: Union[str, Path, None] = None,
                 csv_path: Union[str, Path, None] = None) -> RunResult:
    """Run a scenario to its configured duration, fully deterministically.

    ``seed`` overrides the scenario master seed (component seeds are
    re-derived from it).
    """
    if seed is not None:
        scenario = scenario.with_seed(seed)
    core = SimCore(scenario)
    core.run()
    metrics = compute_metrics(core.records, scenario.thresholds)
    result = RunResult(scenario=scenario, records=core.records, metrics=metrics)
    if trace_path is not None:
        Path(trace_path).write_bytes(result.trace_bytes())
    if csv_path is not None:
        rows = [csv_header()] + [record_to_csv_row(r) for r in core.records]
        Path(csv_path).write_text("\n".join(rows) + "\n")
    return result
