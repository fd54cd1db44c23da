"""Per-tick trace records and their canonical serialization.

Same framing discipline as the telemetry codec (one JSON object per
line, fixed key order) but at 12 fractional digits: the limit-check
acceptance tests compare per-step differences against controller
bounds with a 1e-9 slack, which 6-digit wire quantization would eat.

Record values are quantized at construction, so metrics computed from
in-memory records match metrics recomputed from a parsed trace file
exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from typing import Optional, Union

TRACE_DECIMALS = 12


def qt(value: float) -> float:
    """Quantize to the trace resolution (idempotent)."""
    return float(f"{value:.{TRACE_DECIMALS}f}")


def _fmt(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"non-finite trace value: {value!r}")
    return f"{value:.{TRACE_DECIMALS}f}"


@dataclass(frozen=True)
class TraceRecord:
    """One simulation tick; optional fields are None when not applicable."""

    t_s: float
    x_m: float
    y_m: float
    heading_rad: float
    surge_mps: float
    yaw_rate_radps: float
    left: float
    right: float
    mode: str
    target_heading_rad: float
    target_rate_radps: float
    target_speed_mps: float
    heading_err_rad: float
    xte_m: Optional[float] = None
    wp_index: Optional[int] = None
    target_x_m: Optional[float] = None
    target_y_m: Optional[float] = None
    target_dist_m: Optional[float] = None
    standoff_err_m: Optional[float] = None
    in_frame: Optional[bool] = None
    hb_age_s: Optional[float] = None
    failsafe: bool = False
    link_sent: int = 0
    link_delivered: int = 0
    link_dropped: int = 0

    @classmethod
    def quantized(cls, **kw) -> "TraceRecord":
        for f in fields(cls):
            v = kw.get(f.name)
            if isinstance(v, float):
                kw[f.name] = qt(v)
        return cls(**kw)


_FLOAT_FIELDS = {
    "t_s", "x_m", "y_m", "heading_rad", "surge_mps", "yaw_rate_radps",
    "left", "right", "target_heading_rad", "target_rate_radps",
    "target_speed_mps", "heading_err_rad", "xte_m", "target_x_m",
    "target_y_m", "target_dist_m", "standoff_err_m", "hb_age_s",
}
_FIELD_ORDER = [f.name for f in fields(TraceRecord)]


def record_to_line(rec: TraceRecord) -> bytes:
    parts = []
    for name in _FIELD_ORDER:
        v = getattr(rec, name)
        if v is None:
            s = "null"
        elif name in _FLOAT_FIELDS:
            s = _fmt(v)
        elif isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, int):
            s = str(v)
        else:
            s = f'"{v}"'
        parts.append(f'"{name}":{s}')
    return ("{" + ",".join(parts) + "}\n").encode("utf-8")


def record_from_line(line: Union[bytes, str]) -> TraceRecord:
    obj = json.loads(line)
    kw = {}
    for f in fields(TraceRecord):
        if f.name not in obj:
            raise ValueError(f"trace line missing field {f.name!r}")
        kw[f.name] = obj[f.name]
    return TraceRecord(**kw)


def csv_header() -> str:
    return ",".join(_FIELD_ORDER)


def record_to_csv_row(rec: TraceRecord) -> str:
    cells = []
    for name in _FIELD_ORDER:
        v = getattr(rec, name)
        if v is None:
            cells.append("")
        elif name in _FLOAT_FIELDS:
            cells.append(_fmt(v))
        elif isinstance(v, bool):
            cells.append("true" if v else "false")
        else:
            cells.append(str(v))
    return ",".join(cells)
