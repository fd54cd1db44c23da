"""Vessel <-> ground-station wire protocol and simulated radio link.

Framing is one JSON object per UTF-8 line with a fixed key order and
floats rendered with exactly six fractional digits, so encodings are
byte-stable and golden-testable. Senders quantize float payloads at
message construction (see ``q6``); decode(encode(m)) == m then holds
exactly. The same framing travels over TCP and over the browser socket
gateway.

The link model applies a hard range cutoff (default 900 m), optional
Bernoulli in-range loss from a seeded PRNG, and a fixed one-way
latency; delivery order per sender is FIFO.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

PROTO_VERSION = 1
MODE_NAMES = ("manual", "hold", "auto", "follow")


def q6(value: float) -> float:
    """Quantize to the wire resolution (6 fractional digits)."""
    return float(f"{value:.6f}")


def _fmt(value: float) -> str:
    if not math.isfinite(value):
        raise EncodeError(f"non-finite numeric field: {value!r}")
    return f"{value:.6f}"


# ----------------------------------------------------------------- errors

class ProtocolError(ValueError):
    pass


class EncodeError(ProtocolError):
    """Message violates its invariants or carries non-finite numbers."""


class DecodeError(ProtocolError):
    """Base of the classified decode failures."""


class MalformedLineError(DecodeError):
    """Not a JSON object line."""


class UnknownTypeError(DecodeError):
    """Well-formed line whose type tag is not in the protocol."""


class MissingFieldError(DecodeError):
    """Known type with a required field absent."""


class FieldValueError(DecodeError):
    """Field present but of the wrong type or out of range."""


# --------------------------------------------------------------- messages

@dataclass(frozen=True)
class Heartbeat:
    seq: int
    t_s: float
    proto_version: int = PROTO_VERSION


@dataclass(frozen=True)
class StateReport:
    seq: int
    t_s: float
    x_m: float
    y_m: float
    heading_rad: float
    surge_mps: float
    yaw_rate_radps: float
    mode: str
    battery_pct: float = 100.0
    xte_m: Optional[float] = None
    in_frame: Optional[bool] = None


@dataclass(frozen=True)
class CommandManual:
    seq: int
    throttle: float
    steering: float


@dataclass(frozen=True)
class SetMode:
    seq: int
    mode: str


@dataclass(frozen=True)
class WaypointSpec:
    x_m: float
    y_m: float
    speed_mps: float
    accept_radius_m: float


@dataclass(frozen=True)
class MissionUpload:
    seq: int
    waypoints: tuple[WaypointSpec, ...]


@dataclass(frozen=True)
class MissionAck:
    seq: int
    count: int
    ok: bool


@dataclass(frozen=True)
class TargetReport:
    seq: int
    x_m: float
    y_m: float
    vx_mps: float
    vy_mps: float
    t_s: float


TelemetryMessage = Union[Heartbeat, StateReport, CommandManual, SetMode,
                         MissionUpload, MissionAck, TargetReport]

_TYPE_TAGS = {
    Heartbeat: "heartbeat",
    StateReport: "state",
    CommandManual: "cmd_manual",
    SetMode: "set_mode",
    MissionUpload: "mission_upload",
    MissionAck: "mission_ack",
    TargetReport: "target",
}
_TAG_TYPES = {v: k for k, v in _TYPE_TAGS.items()}


class SeqCounter:
    """Monotone per-sender sequence numbers."""

    def __init__(self, start: int = 0):
        self._next = start

    def take(self) -> int:
        n = self._next
        self._next += 1
        return n


# ----------------------------------------------------------------- encode

def _check_seq(msg) -> None:
    if not isinstance(msg.seq, int) or isinstance(msg.seq, bool) or msg.seq < 0:
        raise EncodeError(f"seq must be a non-negative int, got {msg.seq!r}")


def _check_unit_range(name: str, v: float) -> None:
    if not math.isfinite(v) or not -1.0 <= v <= 1.0:
        raise EncodeError(f"{name} must be within [-1, 1], got {v!r}")


def encode(msg: TelemetryMessage) -> bytes:
    """Serialize one message to its canonical newline-terminated line."""
    tag = _TYPE_TAGS.get(type(msg))
    if tag is None:
        raise EncodeError(f"not a telemetry message: {type(msg).__name__}")
    _check_seq(msg)
    parts = [f'"type":"{tag}"', f'"seq":{msg.seq}']

    if isinstance(msg, Heartbeat):
        parts.append(f'"t_s":{_fmt(msg.t_s)}')
        if not isinstance(msg.proto_version, int) or msg.proto_version < 1:
            raise EncodeError("proto_version must be a positive int")
        parts.append(f'"proto_version":{msg.proto_version}')
    elif isinstance(msg, StateReport):
        if msg.mode not in MODE_NAMES:
            raise EncodeError(f"unknown mode {msg.mode!r}")
        if not 0.0 <= msg.battery_pct <= 100.0:
            raise EncodeError("battery_pct must be within [0, 100]")
        for name in ("t_s", "x_m", "y_m", "heading_rad", "surge_mps",
                     "yaw_rate_radps"):
            parts.append(f'"{name}":{_fmt(getattr(msg, name))}')
        parts.append(f'"mode":"{msg.mode}"')
        parts.append(f'"battery_pct":{_fmt(msg.battery_pct)}')
        xte = "null" if msg.xte_m is None else _fmt(msg.xte_m)
        frame = "null" if msg.in_frame is None else ("true" if msg.in_frame else "false")
        parts.append(f'"diagnostics":{{"xte_m":{xte},"in_frame":{frame}}}')
    elif isinstance(msg, CommandManual):
        _check_unit_range("throttle", msg.throttle)
        _check_unit_range("steering", msg.steering)
        parts.append(f'"throttle":{_fmt(msg.throttle)}')
        parts.append(f'"steering":{_fmt(msg.steering)}')
    elif isinstance(msg, SetMode):
        if msg.mode not in MODE_NAMES:
            raise EncodeError(f"unknown mode {msg.mode!r}")
        parts.append(f'"mode":"{msg.mode}"')
    elif isinstance(msg, MissionUpload):
        wps = []
        for wp in msg.waypoints:
            if not all(math.isfinite(v) for v in
                       (wp.x_m, wp.y_m, wp.speed_mps, wp.accept_radius_m)):
                raise EncodeError("waypoint fields must be finite")
            if wp.accept_radius_m <= 0.0 or wp.speed_mps < 0.0:
                raise EncodeError("waypoint radius must be > 0 and speed >= 0")
            wps.append('{"x_m":%s,"y_m":%s,"speed_mps":%s,"accept_radius_m":%s}'
                       % (_fmt(wp.x_m), _fmt(wp.y_m), _fmt(wp.speed_mps),
                          _fmt(wp.accept_radius_m)))
        parts.append(f'"waypoints":[{",".join(wps)}]')
    elif isinstance(msg, MissionAck):
        if not isinstance(msg.count, int) or isinstance(msg.count, bool) or msg.count < 0:
            raise EncodeError("count must be a non-negative int")
        parts.append(f'"count":{msg.count}')
        parts.append(f'"ok":{"true" if msg.ok else "false"}')
    elif isinstance(msg, TargetReport):
        for name in ("x_m", "y_m", "vx_mps", "vy_mps", "t_s"):
            parts.append(f'"{name}":{_fmt(getattr(msg, name))}')

    return ("{" + ",".join(parts) + "}\n").encode("utf-8")


# ----------------------------------------------------------------- decode

def _reject_constant(_name):
    raise FieldValueError("non-finite numeric constant in line")


def _obj_from_line(line: Union[bytes, str]) -> dict:
    if isinstance(line, bytes):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLineError(f"not UTF-8: {exc}") from None
    else:
        text = line
    text = text.strip()
    if not text:
        raise MalformedLineError("empty line")
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except FieldValueError:
        raise
    except (json.JSONDecodeError, RecursionError, ValueError) as exc:
        raise MalformedLineError(f"bad JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedLineError("line is not a JSON object")
    return obj


def _get(obj: dict, name: str):
    if name not in obj:
        raise MissingFieldError(f"missing field {name!r}")
    return obj[name]


def _num(obj: dict, name: str) -> float:
    v = _get(obj, name)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FieldValueError(f"field {name!r} must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise FieldValueError(f"field {name!r} must be finite")
    return v


def _int(obj: dict, name: str, minimum: int = 0) -> int:
    v = _get(obj, name)
    if isinstance(v, bool) or not isinstance(v, int):
        raise FieldValueError(f"field {name!r} must be an integer")
    if v < minimum:
        raise FieldValueError(f"field {name!r} must be >= {minimum}")
    return v


def _unit(obj: dict, name: str) -> float:
    v = _num(obj, name)
    if not -1.0 <= v <= 1.0:
        raise FieldValueError(f"field {name!r} out of range [-1, 1]")
    return v


def _mode(obj: dict, name: str = "mode") -> str:
    v = _get(obj, name)
    if not isinstance(v, str) or v not in MODE_NAMES:
        raise FieldValueError(f"field {name!r} must be one of {MODE_NAMES}")
    return v


def _bool(v, name: str) -> bool:
    if not isinstance(v, bool):
        raise FieldValueError(f"field {name!r} must be a boolean")
    return v


def decode(line: Union[bytes, str]) -> TelemetryMessage:
    """Parse one line; raises a classified DecodeError on any failure.

    Unknown fields are ignored for forward compatibility.
    """
    obj = _obj_from_line(line)
    tag = _get(obj, "type")
    if not isinstance(tag, str) or tag not in _TAG_TYPES:
        raise UnknownTypeError(f"unknown message type {tag!r}")
    seq = _int(obj, "seq")

    if tag == "heartbeat":
        return Heartbeat(seq=seq, t_s=_num(obj, "t_s"),
                         proto_version=_int(obj, "proto_version", minimum=1))
    if tag == "state":
        diag = _get(obj, "diagnostics")
        if not isinstance(diag, dict):
            raise FieldValueError("field 'diagnostics' must be an object")
        xte = _get(diag, "xte_m")
        if xte is not None:
            xte = _num(diag, "xte_m")
        frame = _get(diag, "in_frame")
        if frame is not None:
            frame = _bool(frame, "in_frame")
        battery = _num(obj, "battery_pct")
        if not 0.0 <= battery <= 100.0:
            raise FieldValueError("field 'battery_pct' out of range [0, 100]")
        return StateReport(
            seq=seq, t_s=_num(obj, "t_s"), x_m=_num(obj, "x_m"),
            y_m=_num(obj, "y_m"), heading_rad=_num(obj, "heading_rad"),
            surge_mps=_num(obj, "surge_mps"),
            yaw_rate_radps=_num(obj, "yaw_rate_radps"),
            mode=_mode(obj), battery_pct=battery, xte_m=xte, in_frame=frame)
    if tag == "cmd_manual":
        return CommandManual(seq=seq, throttle=_unit(obj, "throttle"),
                             steering=_unit(obj, "steering"))
    if tag == "set_mode":
        return SetMode(seq=seq, mode=_mode(obj))
    if tag == "mission_upload":
        raw = _get(obj, "waypoints")
        if not isinstance(raw, list):
            raise FieldValueError("field 'waypoints' must be an array")
        wps = []
        for item in raw:
            if not isinstance(item, dict):
                raise FieldValueError("waypoint entries must be objects")
            radius = _num(item, "accept_radius_m")
            speed = _num(item, "speed_mps")
            if radius <= 0.0:
                raise FieldValueError("waypoint accept_radius_m must be > 0")
            if speed < 0.0:
                raise FieldValueError("waypoint speed_mps must be >= 0")
            wps.append(WaypointSpec(x_m=_num(item, "x_m"),
                                    y_m=_num(item, "y_m"),
                                    speed_mps=speed, accept_radius_m=radius))
        return MissionUpload(seq=seq, waypoints=tuple(wps))
    if tag == "mission_ack":
        return MissionAck(seq=seq, count=_int(obj, "count"),
                          ok=_bool(_get(obj, "ok"), "ok"))
    if tag == "target":
        return TargetReport(seq=seq, x_m=_num(obj, "x_m"), y_m=_num(obj, "y_m"),
                            vx_mps=_num(obj, "vx_mps"),
                            vy_mps=_num(obj, "vy_mps"), t_s=_num(obj, "t_s"))
    raise UnknownTypeError(f"unknown message type {tag!r}")  # unreachable


def decode_stream(data: bytes) -> Iterator[TelemetryMessage]:
    """Decode every newline-terminated line in a buffer."""
    for line in data.splitlines():
        if line.strip():
            yield decode(line)


# -------------------------------------------------------------- link model

@dataclass(frozen=True)
class LinkModel:
    """Radio behavior: hard range cutoff, seeded in-range loss, latency."""

    max_range_m: float = 900.0
    base_loss_prob: float = 0.0
    latency_s: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if not self.max_range_m > 0.0:
            raise ValueError("max_range_m must be > 0")
        if not 0.0 <= self.base_loss_prob <= 1.0:
            raise ValueError("base_loss_prob must be within [0, 1]")
        if self.latency_s < 0.0:
            raise ValueError("latency_s must be >= 0")


@dataclass
class LinkStats:
    sent: int = 0
    delivered: int = 0
    dropped_range: int = 0
    dropped_loss: int = 0


class LinkSimulator:
    """Deterministic delivery queue keyed by simulated delivery time.

    transfer() decides drop-or-schedule immediately; due() pops
    messages whose delivery time has arrived, preserving per-sender
    send order (constant latency plus a monotone tiebreak).
    """

    def __init__(self, model: LinkModel):
        model.validate()
        self.model = model
        self.stats = LinkStats()
        self._rng = np.random.default_rng(model.seed)
        self._heap: list[tuple[float, int, object]] = []
        self._tiebreak = 0

    def transfer(self, sender_pos: tuple[float, float],
                 receiver_pos: tuple[float, float], msg,
                 now_s: float) -> Optional[float]:
        """Returns the scheduled delivery time, or None when dropped."""
        self.stats.sent += 1
        dist = math.hypot(receiver_pos[0] - sender_pos[0],
                          receiver_pos[1] - sender_pos[1])
        if dist > self.model.max_range_m:
            self.stats.dropped_range += 1
            return None
        if self._rng.random() < self.model.base_loss_prob:
            self.stats.dropped_loss += 1
            return None
        deliver_at = now_s + self.model.latency_s
        heapq.heappush(self._heap, (deliver_at, self._tiebreak, msg))
        self._tiebreak += 1
        return deliver_at

    def due(self, now_s: float) -> list:
        """Pop every message scheduled at or before now, in order."""
        out = []
        while self._heap and self._heap[0][0] <= now_s:
            out.append(heapq.heappop(self._heap)[2])
        self.stats.delivered += len(out)
        return out

    def pending(self) -> int:
        return len(self._heap)


def failsafe_check(last_heartbeat_s: float, now_s: float,
                   timeout_s: float = 2.0) -> bool:
    """True when the heartbeat gap exceeds the timeout (failsafe active)."""
    if now_s < last_heartbeat_s:
        raise ValueError("now_s must be >= last_heartbeat_s")
    return (now_s - last_heartbeat_s) > timeout_s
