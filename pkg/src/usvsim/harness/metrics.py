"""Run metrics: pure functions of the trace records.

Everything here recomputes exactly from a saved trace file because the
records are quantized before metrics ever see them. "Acquisition" is
the first tick with the target in frame; in-frame percentage and
standoff statistics are measured from that tick on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .trace import TraceRecord

DEFAULT_STANDOFF_TOL_M = 2.0


@dataclass(frozen=True)
class ThresholdCheck:
    name: str
    value: float
    limit: float
    ok: bool


@dataclass
class MetricsReport:
    ticks: int = 0
    duration_s: float = 0.0
    xte_rms_m: float = math.nan
    waypoints_reached: int = 0
    mission_time_s: float = math.nan
    acquired_t_s: float = math.nan
    pct_time_in_frame: float = math.nan
    standoff_err_mean_m: float = math.nan
    standoff_err_max_m: float = math.nan
    final_standoff_err_m: float = math.nan
    settle_time_s: float = math.nan
    hold_duration_s: float = math.nan
    failsafe_ticks: int = 0
    checks: list[ThresholdCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def summary_lines(self) -> list[str]:
        def num(v):
            return "n/a" if isinstance(v, float) and math.isnan(v) else f"{v:.3f}"

        lines = [
            f"ticks: {self.ticks}  duration: {num(self.duration_s)} s",
            f"xte_rms_m: {num(self.xte_rms_m)}",
            f"waypoints_reached: {self.waypoints_reached}"
            f"  mission_time_s: {num(self.mission_time_s)}",
            f"pct_time_in_frame: {num(self.pct_time_in_frame)}"
            f"  acquired_t_s: {num(self.acquired_t_s)}",
            f"standoff_err mean/max/final: {num(self.standoff_err_mean_m)}"
            f" / {num(self.standoff_err_max_m)} / {num(self.final_standoff_err_m)}",
            f"settle_time_s: {num(self.settle_time_s)}"
            f"  hold_duration_s: {num(self.hold_duration_s)}",
            f"failsafe_ticks: {self.failsafe_ticks}",
        ]
        for c in self.checks:
            lines.append(f"check {c.name}: value {num(c.value)}"
                         f" vs {num(c.limit)} -> {'PASS' if c.ok else 'FAIL'}")
        return lines


def _rms(values: Sequence[float]) -> float:
    if not values:
        return math.nan
    return math.sqrt(sum(v * v for v in values) / len(values))


def compute_metrics(records: Sequence[TraceRecord],
                    thresholds: Optional[dict[str, float]] = None,
                    ) -> MetricsReport:
    thresholds = dict(thresholds or {})
    rep = MetricsReport(ticks=len(records))
    if records:
        rep.duration_s = records[-1].t_s

    xte = [r.xte_m for r in records if r.xte_m is not None]
    rep.xte_rms_m = _rms(xte)

    wp_rows = [(r.t_s, r.wp_index) for r in records if r.wp_index is not None]
    if wp_rows:
        rep.waypoints_reached = max(i for _, i in wp_rows)
        # time of the last index increment = moment the final waypoint fell
        prev = None
        for t, idx in wp_rows:
            if prev is not None and idx > prev:
                rep.mission_time_s = t
            prev = idx

    rep.failsafe_ticks = sum(1 for r in records if r.failsafe)

    framed = [(r.t_s, r.in_frame, r.standoff_err_m)
              for r in records if r.in_frame is not None]
    acquired_at = next((i for i, (_, flag, _) in enumerate(framed) if flag), None)
    if acquired_at is not None:
        rep.acquired_t_s = framed[acquired_at][0]
        post = framed[acquired_at:]
        rep.pct_time_in_frame = 100.0 * sum(1 for _, f, _ in post if f) / len(post)
        errs = [(t, abs(e)) for t, _, e in post if e is not None]
        if errs:
            rep.standoff_err_mean_m = sum(e for _, e in errs) / len(errs)
            rep.standoff_err_max_m = max(e for _, e in errs)
            rep.final_standoff_err_m = errs[-1][1]
            tol = thresholds.get("standoff_tol_m", DEFAULT_STANDOFF_TOL_M)
            settle_idx = None
            for i in range(len(errs) - 1, -1, -1):
                if errs[i][1] > tol:
                    break
                settle_idx = i
            if settle_idx is not None:
                rep.settle_time_s = errs[settle_idx][0]
                rep.hold_duration_s = errs[-1][0] - rep.settle_time_s

    _apply_thresholds(rep, thresholds)
    return rep


def _apply_thresholds(rep: MetricsReport, thresholds: dict[str, float]) -> None:
    def check_max(name: str, value: float, limit: float) -> ThresholdCheck:
        ok = not math.isnan(value) and value <= limit
        return ThresholdCheck(name, value, limit, ok)

    def check_min(name: str, value: float, limit: float) -> ThresholdCheck:
        ok = not math.isnan(value) and value >= limit
        return ThresholdCheck(name, value, limit, ok)

    for name, limit in thresholds.items():
        if name == "xte_rms_max_m":
            rep.checks.append(check_max(name, rep.xte_rms_m, limit))
        elif name == "waypoints_reached_min":
            rep.checks.append(check_min(name, float(rep.waypoints_reached), limit))
        elif name == "mission_time_max_s":
            rep.checks.append(check_max(name, rep.mission_time_s, limit))
        elif name == "pct_in_frame_min":
            rep.checks.append(check_min(name, rep.pct_time_in_frame, limit))
        elif name == "standoff_hold_min_s":
            rep.checks.append(check_min(name, rep.hold_duration_s, limit))
        elif name == "final_standoff_err_max_m":
            rep.checks.append(check_max(name, rep.final_standoff_err_m, limit))
        elif name == "standoff_tol_m":
            pass  # parameter of the settle computation, not a check
        else:
            raise ValueError(f"unknown threshold {name!r}")


def metrics_from_trace_lines(lines: Iterable[bytes],
                             thresholds: Optional[dict[str, float]] = None,
                             ) -> MetricsReport:
    from .trace import record_from_line
    records = [record_from_line(line) for line in lines if line.strip()]
    return compute_metrics(records, thresholds)
