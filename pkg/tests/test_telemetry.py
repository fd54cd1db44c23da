"""Wire codec and radio link: goldens, roundtrips, fuzz, delivery stats."""

import math
import re
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from usvsim import telemetry as tm

PROTOCOL_MD = Path(__file__).resolve().parent.parent / "protocol.md"


# ----------------------------------------------------------- golden lines

def test_heartbeat_golden_line():
    line = tm.encode(tm.Heartbeat(seq=1, t_s=0.0))
    assert line == b'{"type":"heartbeat","seq":1,"t_s":0.000000,"proto_version":1}\n'


def test_protocol_md_golden_lines_roundtrip():
    """Every indented example line in protocol.md must decode, and its
    canonical re-encoding must be byte-identical."""
    lines = [m.group(1) for m in
             re.finditer(r"^    (\{.*\})$", PROTOCOL_MD.read_text(), re.M)]
    assert len(lines) >= 7  # one per message type
    for text in lines:
        msg = tm.decode(text)
        assert tm.encode(msg) == (text + "\n").encode()


# -------------------------------------------------------------- roundtrip

def q6f(v):
    return tm.q6(v)


st_seq = st.integers(0, 2 ** 31)
st_f = st.floats(-5000, 5000).map(q6f)
st_unit = st.floats(-1, 1).map(q6f)
st_mode = st.sampled_from(tm.MODE_NAMES)


def message_strategy():
    heartbeat = st.builds(tm.Heartbeat, seq=st_seq, t_s=st_f,
                          proto_version=st.integers(1, 9))
    state = st.builds(
        tm.StateReport, seq=st_seq, t_s=st_f, x_m=st_f, y_m=st_f,
        heading_rad=st_f, surge_mps=st_f, yaw_rate_radps=st_f, mode=st_mode,
        battery_pct=st.floats(0, 100).map(q6f),
        xte_m=st.none() | st_f, in_frame=st.none() | st.booleans())
    cmd = st.builds(tm.CommandManual, seq=st_seq, throttle=st_unit,
                    steering=st_unit)
    set_mode = st.builds(tm.SetMode, seq=st_seq, mode=st_mode)
    wps = st.lists(st.builds(
        tm.WaypointSpec, x_m=st_f, y_m=st_f,
        speed_mps=st.floats(0, 10).map(q6f),
        accept_radius_m=st.floats(0.1, 50).map(q6f)), max_size=5).map(tuple)
    upload = st.builds(tm.MissionUpload, seq=st_seq, waypoints=wps)
    ack = st.builds(tm.MissionAck, seq=st_seq, count=st.integers(0, 100),
                    ok=st.booleans())
    target = st.builds(tm.TargetReport, seq=st_seq, x_m=st_f, y_m=st_f,
                       vx_mps=st_f, vy_mps=st_f, t_s=st_f)
    return st.one_of(heartbeat, state, cmd, set_mode, upload, ack, target)


@settings(max_examples=300)
@given(message_strategy())
def test_roundtrip_identity(msg):
    line = tm.encode(msg)
    assert line.endswith(b"\n") and line.count(b"\n") == 1
    assert tm.decode(line) == msg
    # canonical lines re-encode byte-identically
    assert tm.encode(tm.decode(line)) == line


# ---------------------------------------------------------- encode errors

def test_encode_rejects_out_of_range_command():
    with pytest.raises(tm.EncodeError):
        tm.encode(tm.CommandManual(seq=0, throttle=2.0, steering=0.0))


def test_encode_rejects_non_finite():
    with pytest.raises(tm.EncodeError):
        tm.encode(tm.Heartbeat(seq=0, t_s=math.nan))
    with pytest.raises(tm.EncodeError):
        tm.encode(tm.TargetReport(seq=0, x_m=math.inf, y_m=0.0,
                                  vx_mps=0.0, vy_mps=0.0, t_s=0.0))


def test_encode_rejects_bad_mode_and_seq():
    with pytest.raises(tm.EncodeError):
        tm.encode(tm.SetMode(seq=0, mode="warp"))
    with pytest.raises(tm.EncodeError):
        tm.encode(tm.Heartbeat(seq=-1, t_s=0.0))


# ---------------------------------------------------------- decode errors

def test_decode_unknown_type():
    with pytest.raises(tm.UnknownTypeError):
        tm.decode(b'{"type":"warp","seq":1}')


def test_decode_truncated_line_is_syntax_error():
    with pytest.raises(tm.MalformedLineError):
        tm.decode(b'{"type":"heartbeat","seq":1,"t_s"')


def test_decode_missing_field():
    with pytest.raises(tm.MissingFieldError):
        tm.decode(b'{"type":"heartbeat","seq":1}')


def test_decode_out_of_range_is_error_not_clamp():
    with pytest.raises(tm.FieldValueError):
        tm.decode(b'{"type":"cmd_manual","seq":1,"throttle":1.500000,"steering":0.000000}')


def test_decode_rejects_non_finite_constants():
    with pytest.raises(tm.DecodeError):
        tm.decode(b'{"type":"heartbeat","seq":1,"t_s":Infinity,"proto_version":1}')


def test_decode_ignores_unknown_fields():
    msg = tm.decode(b'{"type":"set_mode","seq":3,"mode":"auto","extra":42}')
    assert msg == tm.SetMode(seq=3, mode="auto")


def test_error_kinds_distinguishable():
    cases = {
        b"not json at all": tm.MalformedLineError,
        b'{"type":"nope","seq":0}': tm.UnknownTypeError,
        b'{"type":"target","seq":0}': tm.MissingFieldError,
        b'{"type":"mission_ack","seq":0,"count":-1,"ok":true}': tm.FieldValueError,
    }
    for line, exc_type in cases.items():
        with pytest.raises(exc_type):
            tm.decode(line)
        # each subclass is still a classified DecodeError
        assert issubclass(exc_type, tm.DecodeError)


@settings(max_examples=400)
@given(st.binary(max_size=200))
def test_decoder_never_crashes_on_garbage(blob):
    try:
        tm.decode(blob)
    except tm.DecodeError:
        pass  # classified failure is the contract


@settings(max_examples=200)
@given(message_strategy(), st.integers(0, 60), st.integers(0, 255))
def test_decoder_never_crashes_on_mutations(msg, pos, val):
    line = bytearray(tm.encode(msg))
    line[pos % len(line)] = val
    try:
        tm.decode(bytes(line))
    except tm.DecodeError:
        pass


# ------------------------------------------------------------- link model

def test_link_in_range_delivery_and_latency():
    link = tm.LinkSimulator(tm.LinkModel(latency_s=0.05))
    at = link.transfer((0, 0), (0, 0), "m", now_s=1.0)
    assert at == pytest.approx(1.05)
    assert link.due(1.04) == []
    assert link.due(1.05) == ["m"]


def test_link_beyond_range_always_dropped():
    link = tm.LinkSimulator(tm.LinkModel(max_range_m=900.0))
    for i in range(1000):
        assert link.transfer((0, 0), (950.0, 0), i, now_s=0.0) is None
    assert link.stats.dropped_range == 1000


def test_link_total_loss_probability_one():
    link = tm.LinkSimulator(tm.LinkModel(base_loss_prob=1.0))
    for i in range(100):
        assert link.transfer((0, 0), (1.0, 0), i, now_s=0.0) is None
    assert link.stats.dropped_loss == 100


def test_link_fifo_order_preserved():
    link = tm.LinkSimulator(tm.LinkModel(latency_s=0.1))
    for i in range(50):
        link.transfer((0, 0), (10, 0), i, now_s=i * 1e-4)
    out = link.due(10.0)
    assert out == list(range(50))


def test_link_empirical_loss_rate():
    link = tm.LinkSimulator(tm.LinkModel(base_loss_prob=0.1, seed=2024))
    n = 10_000
    delivered = sum(
        1 for i in range(n)
        if link.transfer((0, 0), (100.0, 0), i, now_s=0.0) is not None)
    assert delivered / n == pytest.approx(0.9, abs=0.02)


def test_link_deterministic_given_seed():
    def run():
        link = tm.LinkSimulator(tm.LinkModel(base_loss_prob=0.3, seed=9))
        return [link.transfer((0, 0), (1, 0), i, 0.0) is not None
                for i in range(500)]
    assert run() == run()


def test_link_model_validation():
    with pytest.raises(ValueError):
        tm.LinkModel(base_loss_prob=1.5).validate()
    with pytest.raises(ValueError):
        tm.LinkModel(max_range_m=0.0).validate()


# --------------------------------------------------------- failsafe check

def test_failsafe_examples():
    assert tm.failsafe_check(0.0, 0.0) is False
    assert tm.failsafe_check(0.0, 2.5, timeout_s=2.0) is True
    assert tm.failsafe_check(10.0, 11.9, timeout_s=2.0) is False
    with pytest.raises(ValueError):
        tm.failsafe_check(5.0, 4.0)
