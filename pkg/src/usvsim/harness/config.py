"""Scenario configuration: one INI-style file per scenario.

A [scenario] section names the run and points at the vessel /
environment / link blocks by section name (include-by-reference), so
alternative hulls or radios can live side by side in one file.
Angles and angular rates appear in config as degrees and are converted
to radians here; everything downstream is SI.

Unknown keys and dangling section references are hard errors - configs
are part of the test surface and silent typos would invalidate runs.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..dynamics import EnvironmentModel, VesselParams, VesselState
from ..guidance import FollowPolicy, Mission, Mode, Waypoint
from ..steering import PidGains, SpeedConfig, SteeringConfig
from ..telemetry import LinkModel


class ConfigError(ValueError):
    """Config problem, annotated with its section (and key when known)."""

    def __init__(self, section: str, key: Optional[str], msg: str):
        self.section = section
        self.key = key
        where = f"[{section}]" + (f" {key}" if key else "")
        super().__init__(f"{where}: {msg}")


@dataclass(frozen=True)
class LinkConfig:
    """Radio model plus the scripted ground-station behavior."""

    model: LinkModel = field(default_factory=LinkModel)
    gcs_pos: tuple[float, float] = (0.0, 0.0)
    heartbeat_period_s: float = 1.0
    heartbeat_gaps: tuple[tuple[float, float], ...] = ()
    failsafe_timeout_s: float = 2.0


@dataclass(frozen=True)
class ModeEvent:
    """Scripted operator action: switch mode, optionally with sticks."""

    t_s: float
    mode: Mode
    throttle: float = 0.0
    steering: float = 0.0


@dataclass(frozen=True)
class TargetScript:
    """Timed waypoint list the simulated target follows.

    Position interpolates linearly between knots (t, x, y); velocity is
    the segment slope, zero before the first and after the last knot.
    """

    knots: tuple[tuple[float, float, float], ...]
    report_hz: float = 10.0
    noise_std_m: float = 0.0

    def sample(self, t_s: float) -> tuple[float, float, float, float]:
        """(x, y, vx, vy) at time t_s."""
        ks = self.knots
        if t_s <= ks[0][0]:
            return ks[0][1], ks[0][2], 0.0, 0.0
        for (t0, x0, y0), (t1, x1, y1) in zip(ks, ks[1:]):
            if t_s <= t1:
                span = t1 - t0
                f = (t_s - t0) / span
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0),
                        (x1 - x0) / span, (y1 - y0) / span)
        return ks[-1][1], ks[-1][2], 0.0, 0.0


@dataclass(frozen=True)
class GuidanceSettings:
    lookahead_m: float = 5.0
    track_max_age_s: float = 2.0


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    dt_s: float
    seed: int
    initial_state: VesselState
    vessel: VesselParams
    environment: EnvironmentModel
    steering: SteeringConfig
    speed: SpeedConfig
    guidance: GuidanceSettings
    follow: FollowPolicy
    link: Optional[LinkConfig] = None
    mission: Optional[Mission] = None
    target: Optional[TargetScript] = None
    mode_events: tuple[ModeEvent, ...] = ()
    thresholds: dict[str, float] = field(default_factory=dict)
    report_hz: float = 10.0

    def with_seed(self, seed: int) -> "Scenario":
        """Re-derive every component seed from a new master seed."""
        env = dataclasses.replace(self.environment, seed=seed)
        link = self.link
        if link is not None:
            link = dataclasses.replace(
                link, model=dataclasses.replace(link.model, seed=seed + 1))
        return dataclasses.replace(self, seed=seed, environment=env, link=link)


# ------------------------------------------------------------- parsing

_THRESHOLD_KEYS = {
    "xte_rms_max_m", "waypoints_reached_min", "mission_time_max_s",
    "pct_in_frame_min", "standoff_tol_m", "standoff_hold_min_s",
    "final_standoff_err_max_m",
}

_SCENARIO_KEYS = {
    "name", "duration_s", "dt_s", "seed", "vessel", "environment", "link",
    "init_x_m", "init_y_m", "init_heading_deg", "init_surge_mps",
    "init_yaw_rate_degps", "report_hz",
}


class _Section:
    """Typed accessors over one config section with consumed-key check."""

    def __init__(self, cp: configparser.ConfigParser, name: str):
        if not cp.has_section(name):
            raise ConfigError(name, None, "section missing")
        self.name = name
        self._items = dict(cp.items(name))
        self._seen: set[str] = set()

    def _raw(self, key: str, default=None, required: bool = False):
        self._seen.add(key)
        if key in self._items:
            return self._items[key]
        if required:
            raise ConfigError(self.name, key, "required key missing")
        return default

    def get_float(self, key: str, default: Optional[float] = None,
                  required: bool = False) -> Optional[float]:
        raw = self._raw(key, default, required)
        if raw is None or isinstance(raw, float):
            return raw
        try:
            v = float(raw)
        except ValueError:
            raise ConfigError(self.name, key, f"not a number: {raw!r}") from None
        if not math.isfinite(v):
            raise ConfigError(self.name, key, "must be finite")
        return v

    def get_int(self, key: str, default: Optional[int] = None,
                required: bool = False) -> Optional[int]:
        raw = self._raw(key, default, required)
        if raw is None or isinstance(raw, int):
            return raw
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(self.name, key, f"not an integer: {raw!r}") from None

    def get_str(self, key: str, default: Optional[str] = None,
                required: bool = False) -> Optional[str]:
        return self._raw(key, default, required)

    def get_rows(self, key: str) -> list[list[str]]:
        raw = self._raw(key, "")
        rows = []
        for line in str(raw).splitlines():
            line = line.strip()
            if line:
                rows.append(line.split())
        return rows

    def check_consumed(self, allowed_extra: set[str] = frozenset()) -> None:
        unknown = set(self._items) - self._seen - allowed_extra
        if unknown:
            raise ConfigError(self.name, sorted(unknown)[0], "unknown key")


def _parse_steering(sec: _Section) -> SteeringConfig:
    try:
        return SteeringConfig.from_degrees(
            ang_p=sec.get_float("ang_p", 1.0),
            rat_p=sec.get_float("rat_p", 0.2),
            rat_i=sec.get_float("rat_i", 0.2),
            rat_d=sec.get_float("rat_d", 0.02),
            rat_max_degps=sec.get_float("rat_max_degps", 30.0),
            acc_max_degps2=sec.get_float("acc_max_degps2", 120.0),
            integ_limit=sec.get_float("integ_limit", 0.3),
        )
    except ValueError as exc:
        raise ConfigError(sec.name, None, str(exc)) from None


def steering_to_items(cfg: SteeringConfig) -> dict[str, str]:
    """Serialize a steering config back to its config keys (degrees)."""
    return {k: repr(v) for k, v in cfg.to_degrees().items()}


def _parse_vessel(sec: _Section) -> VesselParams:
    params = VesselParams(
        mass_kg=sec.get_float("mass_kg", VesselParams.mass_kg),
        yaw_inertia_kgm2=sec.get_float("yaw_inertia_kgm2", VesselParams.yaw_inertia_kgm2),
        max_thrust_n=sec.get_float("max_thrust_n", VesselParams.max_thrust_n),
        thruster_offset_m=sec.get_float("thruster_offset_m", VesselParams.thruster_offset_m),
        drag_lin_surge=sec.get_float("drag_lin_surge", VesselParams.drag_lin_surge),
        drag_quad_surge=sec.get_float("drag_quad_surge", VesselParams.drag_quad_surge),
        drag_lin_yaw=sec.get_float("drag_lin_yaw", VesselParams.drag_lin_yaw),
        drag_quad_yaw=sec.get_float("drag_quad_yaw", VesselParams.drag_quad_yaw),
        max_speed_mps=sec.get_float("max_speed_mps", VesselParams.max_speed_mps),
    )
    sec.check_consumed()
    try:
        params.validate()
    except ValueError as exc:
        raise ConfigError(sec.name, None, str(exc)) from None
    return params


def _parse_environment(sec: _Section, default_seed: int) -> EnvironmentModel:
    env = EnvironmentModel(
        current_mps=(sec.get_float("current_e_mps", 0.0),
                     sec.get_float("current_n_mps", 0.0)),
        surge_disturbance_std=sec.get_float("surge_disturbance_std", 0.0),
        yaw_disturbance_std=sec.get_float("yaw_disturbance_std", 0.0),
        seed=sec.get_int("seed", default_seed),
    )
    sec.check_consumed()
    try:
        env.validate()
    except ValueError as exc:
        raise ConfigError(sec.name, None, str(exc)) from None
    return env


def _parse_link(sec: _Section, default_seed: int) -> LinkConfig:
    model = LinkModel(
        max_range_m=sec.get_float("max_range_m", 900.0),
        base_loss_prob=sec.get_float("base_loss_prob", 0.0),
        latency_s=sec.get_float("latency_s", 0.05),
        seed=sec.get_int("seed", default_seed),
    )
    try:
        model.validate()
    except ValueError as exc:
        raise ConfigError(sec.name, None, str(exc)) from None
    gaps = []
    for row in sec.get_rows("heartbeat_gaps"):
        if len(row) != 2:
            raise ConfigError(sec.name, "heartbeat_gaps",
                              f"expected 'start end' per line, got {row!r}")
        start, end = float(row[0]), float(row[1])
        if end <= start:
            raise ConfigError(sec.name, "heartbeat_gaps",
                              f"gap end must be after start: {row!r}")
        gaps.append((start, end))
    cfg = LinkConfig(
        model=model,
        gcs_pos=(sec.get_float("gcs_x_m", 0.0), sec.get_float("gcs_y_m", 0.0)),
        heartbeat_period_s=sec.get_float("heartbeat_period_s", 1.0),
        heartbeat_gaps=tuple(gaps),
        failsafe_timeout_s=sec.get_float("failsafe_timeout_s", 2.0),
    )
    sec.check_consumed()
    if cfg.heartbeat_period_s <= 0.0 or cfg.failsafe_timeout_s <= 0.0:
        raise ConfigError(sec.name, None, "periods and timeouts must be > 0")
    return cfg


def _parse_speed(sec: _Section) -> SpeedConfig:
    cfg = SpeedConfig(
        gains=PidGains(kp=sec.get_float("kp", 0.5),
                       ki=sec.get_float("ki", 0.2),
                       kd=sec.get_float("kd", 0.0)),
        integ_limit=sec.get_float("integ_limit", 1.0),
    )
    sec.check_consumed()
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(sec.name, None, str(exc)) from None
    return cfg


def _parse_follow(sec: _Section) -> FollowPolicy:
    policy = FollowPolicy(
        standoff_m=sec.get_float("standoff_m", 10.0),
        approach_gain=sec.get_float("approach_gain", 0.3),
        max_speed_mps=sec.get_float("max_speed_mps", 3.0),
        fov_rad=math.radians(sec.get_float("fov_deg", 60.0)),
    )
    sec.check_consumed()
    try:
        policy.validate()
    except ValueError as exc:
        raise ConfigError(sec.name, None, str(exc)) from None
    return policy


def _parse_mission(sec: _Section) -> Mission:
    rows = sec.get_rows("waypoints")
    sec.check_consumed()
    if not rows:
        raise ConfigError(sec.name, "waypoints", "no waypoints given")
    wps = []
    for row in rows:
        if len(row) != 4:
            raise ConfigError(sec.name, "waypoints",
                              f"expected 'x y speed radius', got {row!r}")
        try:
            wp = Waypoint(float(row[0]), float(row[1]),
                          float(row[2]), float(row[3]))
            wp.validate()
        except ValueError as exc:
            raise ConfigError(sec.name, "waypoints", str(exc)) from None
        wps.append(wp)
    return Mission(waypoints=tuple(wps))


def _parse_target(sec: _Section) -> TargetScript:
    rows = sec.get_rows("script")
    report_hz = sec.get_float("report_hz", 10.0)
    noise = sec.get_float("noise_std_m", 0.0)
    sec.check_consumed()
    if not rows:
        raise ConfigError(sec.name, "script", "no knots given")
    knots = []
    last_t = -math.inf
    for row in rows:
        if len(row) != 3:
            raise ConfigError(sec.name, "script",
                              f"expected 't x y' per line, got {row!r}")
        t, x, y = (float(v) for v in row)
        if t <= last_t:
            raise ConfigError(sec.name, "script", "knot times must increase")
        last_t = t
        knots.append((t, x, y))
    if report_hz <= 0.0:
        raise ConfigError(sec.name, "report_hz", "must be > 0")
    if noise < 0.0:
        raise ConfigError(sec.name, "noise_std_m", "must be >= 0")
    return TargetScript(knots=tuple(knots), report_hz=report_hz,
                        noise_std_m=noise)


def _parse_modes(sec: _Section) -> tuple[ModeEvent, ...]:
    rows = sec.get_rows("script")
    sec.check_consumed()
    events = []
    last_t = -math.inf
    for row in rows:
        if len(row) not in (2, 4):
            raise ConfigError(sec.name, "script",
                              f"expected 't mode [throttle steering]', got {row!r}")
        t = float(row[0])
        if t < last_t:
            raise ConfigError(sec.name, "script", "event times must not decrease")
        last_t = t
        try:
            mode = Mode.parse(row[1])
        except ValueError as exc:
            raise ConfigError(sec.name, "script", str(exc)) from None
        throttle = float(row[2]) if len(row) == 4 else 0.0
        steering = float(row[3]) if len(row) == 4 else 0.0
        events.append(ModeEvent(t, mode, throttle, steering))
    return tuple(events)


def _parse_thresholds(sec: _Section) -> dict[str, float]:
    out = {}
    for key in list(sec._items):
        if key not in _THRESHOLD_KEYS:
            raise ConfigError(sec.name, key, "unknown threshold")
        out[key] = sec.get_float(key, required=True)
    sec.check_consumed()
    return out


def load_scenario_text(text: str, origin: str = "<config>") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError("<file>", None, f"{origin}: {exc}") from None

    scn = _Section(cp, "scenario")
    name = scn.get_str("name", required=True)
    duration_s = scn.get_float("duration_s", required=True)
    dt_s = scn.get_float("dt_s", 0.02)
    seed = scn.get_int("seed", 0)
    if duration_s < 0.0:
        raise ConfigError("scenario", "duration_s", "must be >= 0")
    if not (0.0 < dt_s <= 0.1):
        raise ConfigError("scenario", "dt_s", "must be in (0, 0.1]")

    initial = VesselState(
        x_m=scn.get_float("init_x_m", 0.0),
        y_m=scn.get_float("init_y_m", 0.0),
        heading_rad=math.radians(scn.get_float("init_heading_deg", 0.0)),
        surge_mps=scn.get_float("init_surge_mps", 0.0),
        yaw_rate_radps=math.radians(scn.get_float("init_yaw_rate_degps", 0.0)),
    )

    def ref_section(key: str, default_name: str) -> Optional[_Section]:
        ref = scn.get_str(key, None)
        explicit = ref is not None
        ref = ref if explicit else default_name
        if ref == "none":
            return None
        if not cp.has_section(ref):
            if explicit:
                raise ConfigError("scenario", key,
                                  f"referenced section [{ref}] missing")
            return None
        return _Section(cp, ref)

    vessel_sec = ref_section("vessel", "vessel")
    env_sec = ref_section("environment", "environment")
    link_sec = ref_section("link", "link")
    report_hz = scn.get_float("report_hz", 10.0)
    if report_hz <= 0.0:
        raise ConfigError("scenario", "report_hz", "must be > 0")
    scn.check_consumed()

    vessel = _parse_vessel(vessel_sec) if vessel_sec else VesselParams()
    environment = _parse_environment(env_sec, seed) if env_sec \
        else EnvironmentModel(seed=seed)
    link = _parse_link(link_sec, seed + 1) if link_sec else None

    steering = _parse_steering(_Section(cp, "steering")) \
        if cp.has_section("steering") else SteeringConfig()
    speed = _parse_speed(_Section(cp, "speed")) \
        if cp.has_section("speed") else SpeedConfig()
    follow = _parse_follow(_Section(cp, "follow")) \
        if cp.has_section("follow") else FollowPolicy()

    guidance = GuidanceSettings()
    if cp.has_section("guidance"):
        gsec = _Section(cp, "guidance")
        guidance = GuidanceSettings(
            lookahead_m=gsec.get_float("lookahead_m", 5.0),
            track_max_age_s=gsec.get_float("track_max_age_s", 2.0),
        )
        gsec.check_consumed()
        if guidance.lookahead_m <= 0.0 or guidance.track_max_age_s <= 0.0:
            raise ConfigError("guidance", None, "values must be > 0")

    mission = _parse_mission(_Section(cp, "mission")) \
        if cp.has_section("mission") else None
    target = _parse_target(_Section(cp, "target")) \
        if cp.has_section("target") else None
    mode_events = _parse_modes(_Section(cp, "modes")) \
        if cp.has_section("modes") else ()
    thresholds = _parse_thresholds(_Section(cp, "thresholds")) \
        if cp.has_section("thresholds") else {}

    return Scenario(
        name=name, duration_s=duration_s, dt_s=dt_s, seed=seed,
        initial_state=initial, vessel=vessel, environment=environment,
        steering=steering, speed=speed, guidance=guidance, follow=follow,
        link=link, mission=mission, target=target, mode_events=mode_events,
        thresholds=thresholds, report_hz=report_hz)


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", None, f"cannot read {path}: {exc}") from None
    return load_scenario_text(text, origin=str(path))
