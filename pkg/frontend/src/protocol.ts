/**
 * Wire protocol (version 1): one JSON object per newline-terminated
 * line, fixed key order, floats with exactly six fractional digits.
 * Mirrors protocol.md; every frame this module emits must decode with
 * the simulator's reference codec (checked by the conformance test).
 */

export const PROTO_VERSION = 1;

export type Mode = "manual" | "hold" | "auto" | "follow";
export const MODES: readonly Mode[] = ["manual", "hold", "auto", "follow"];

export interface Heartbeat {
  type: "heartbeat";
  seq: number;
  t_s: number;
  proto_version: number;
}

export interface Diagnostics {
  xte_m: number | null;
  in_frame: boolean | null;
}

export interface StateReport {
  type: "state";
  seq: number;
  t_s: number;
  x_m: number;
  y_m: number;
  heading_rad: number;
  surge_mps: number;
  yaw_rate_radps: number;
  mode: Mode;
  battery_pct: number;
  diagnostics: Diagnostics;
}

export interface CommandManual {
  type: "cmd_manual";
  seq: number;
  throttle: number;
  steering: number;
}

export interface SetMode {
  type: "set_mode";
  seq: number;
  mode: Mode;
}

export interface WaypointSpec {
  x_m: number;
  y_m: number;
  speed_mps: number;
  accept_radius_m: number;
}

export interface MissionUpload {
  type: "mission_upload";
  seq: number;
  waypoints: WaypointSpec[];
}

export interface MissionAck {
  type: "mission_ack";
  seq: number;
  count: number;
  ok: boolean;
}

export interface TargetReport {
  type: "target";
  seq: number;
  x_m: number;
  y_m: number;
  vx_mps: number;
  vy_mps: number;
  t_s: number;
}

export type Message =
  | Heartbeat
  | StateReport
  | CommandManual
  | SetMode
  | MissionUpload
  | MissionAck
  | TargetReport;

export class ProtocolError extends Error {
  constructor(readonly kind: "syntax" | "unknown_type" | "missing_field" | "bad_value",
              message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

function f6(v: number, name: string): string {
  if (!Number.isFinite(v)) {
    throw new ProtocolError("bad_value", `non-finite field ${name}`);
  }
  return v.toFixed(6);
}

function checkUnit(v: number, name: string): void {
  if (!Number.isFinite(v) || v < -1 || v > 1) {
    throw new ProtocolError("bad_value", `${name} out of [-1, 1]`);
  }
}

/** Canonical encoding; returns a complete line including the newline. */
export function encode(msg: Message): string {
  const head = `{"type":"${msg.type}","seq":${msg.seq}`;
  switch (msg.type) {
    case "heartbeat":
      return `${head},"t_s":${f6(msg.t_s, "t_s")},"proto_version":${msg.proto_version}}\n`;
    case "state": {
      const d = msg.diagnostics;
      const xte = d.xte_m === null ? "null" : f6(d.xte_m, "xte_m");
      const frame = d.in_frame === null ? "null" : String(d.in_frame);
      return (
        `${head},"t_s":${f6(msg.t_s, "t_s")},"x_m":${f6(msg.x_m, "x_m")}` +
        `,"y_m":${f6(msg.y_m, "y_m")},"heading_rad":${f6(msg.heading_rad, "heading_rad")}` +
        `,"surge_mps":${f6(msg.surge_mps, "surge_mps")}` +
        `,"yaw_rate_radps":${f6(msg.yaw_rate_radps, "yaw_rate_radps")}` +
        `,"mode":"${msg.mode}","battery_pct":${f6(msg.battery_pct, "battery_pct")}` +
        `,"diagnostics":{"xte_m":${xte},"in_frame":${frame}}}\n`
      );
    }
    case "cmd_manual":
      checkUnit(msg.throttle, "throttle");
      checkUnit(msg.steering, "steering");
      return `${head},"throttle":${f6(msg.throttle, "throttle")},"steering":${f6(msg.steering, "steering")}}\n`;
    case "set_mode":
      return `${head},"mode":"${msg.mode}"}\n`;
    case "mission_upload": {
      const wps = msg.waypoints
        .map((w) =>
          `{"x_m":${f6(w.x_m, "x_m")},"y_m":${f6(w.y_m, "y_m")}` +
          `,"speed_mps":${f6(w.speed_mps, "speed_mps")}` +
          `,"accept_radius_m":${f6(w.accept_radius_m, "accept_radius_m")}}`)
        .join(",");
      return `${head},"waypoints":[${wps}]}\n`;
    }
    case "mission_ack":
      return `${head},"count":${msg.count},"ok":${msg.ok}}\n`;
    case "target":
      return (
        `${head},"x_m":${f6(msg.x_m, "x_m")},"y_m":${f6(msg.y_m, "y_m")}` +
        `,"vx_mps":${f6(msg.vx_mps, "vx_mps")},"vy_mps":${f6(msg.vy_mps, "vy_mps")}` +
        `,"t_s":${f6(msg.t_s, "t_s")}}\n`
      );
  }
}

function num(obj: Record<string, unknown>, name: string): number {
  const v = obj[name];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    if (!(name in obj)) throw new ProtocolError("missing_field", `missing ${name}`);
    throw new ProtocolError("bad_value", `bad number ${name}`);
  }
  return v;
}

function int(obj: Record<string, unknown>, name: string, min = 0): number {
  const v = num(obj, name);
  if (!Number.isInteger(v) || v < min) {
    throw new ProtocolError("bad_value", `bad integer ${name}`);
  }
  return v;
}

function mode(obj: Record<string, unknown>, name = "mode"): Mode {
  const v = obj[name];
  if (typeof v !== "string" || !(MODES as readonly string[]).includes(v)) {
    if (!(name in obj)) throw new ProtocolError("missing_field", `missing ${name}`);
    throw new ProtocolError("bad_value", `bad mode ${String(v)}`);
  }
  return v as Mode;
}

/** Parse one line (without or with its trailing newline). */
export function decode(line: string): Message {
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(line) as Record<string, unknown>;
  } catch (err) {
    throw new ProtocolError("syntax", `bad JSON: ${String(err)}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("syntax", "not a JSON object");
  }
  const type = obj["type"];
  if (typeof type !== "string") {
    throw new ProtocolError("missing_field", "missing type");
  }
  const seq = int(obj, "seq");
  switch (type) {
    case "heartbeat":
      return { type, seq, t_s: num(obj, "t_s"),
               proto_version: int(obj, "proto_version", 1) };
    case "state": {
      const d = obj["diagnostics"];
      if (typeof d !== "object" || d === null) {
        throw new ProtocolError("missing_field", "missing diagnostics");
      }
      const dd = d as Record<string, unknown>;
      const xte = dd["xte_m"] === null ? null : num(dd, "xte_m");
      const frame = dd["in_frame"] === null ? null : dd["in_frame"];
      if (frame !== null && typeof frame !== "boolean") {
        throw new ProtocolError("bad_value", "bad in_frame");
      }
      return {
        type, seq, t_s: num(obj, "t_s"), x_m: num(obj, "x_m"),
        y_m: num(obj, "y_m"), heading_rad: num(obj, "heading_rad"),
        surge_mps: num(obj, "surge_mps"),
        yaw_rate_radps: num(obj, "yaw_rate_radps"), mode: mode(obj),
        battery_pct: num(obj, "battery_pct"),
        diagnostics: { xte_m: xte, in_frame: frame },
      };
    }
    case "cmd_manual": {
      const throttle = num(obj, "throttle");
      const steering = num(obj, "steering");
      checkUnit(throttle, "throttle");
      checkUnit(steering, "steering");
      return { type, seq, throttle, steering };
    }
    case "set_mode":
      return { type, seq, mode: mode(obj) };
    case "mission_upload": {
      const raw = obj["waypoints"];
      if (!Array.isArray(raw)) {
        throw new ProtocolError("missing_field", "missing waypoints");
      }
      const waypoints = raw.map((w) => {
        const ww = w as Record<string, unknown>;
        const spec: WaypointSpec = {
          x_m: num(ww, "x_m"), y_m: num(ww, "y_m"),
          speed_mps: num(ww, "speed_mps"),
          accept_radius_m: num(ww, "accept_radius_m"),
        };
        if (spec.accept_radius_m <= 0 || spec.speed_mps < 0) {
          throw new ProtocolError("bad_value", "bad waypoint");
        }
        return spec;
      });
      return { type, seq, waypoints };
    }
    case "mission_ack": {
      const ok = obj["ok"];
      if (typeof ok !== "boolean") {
        throw new ProtocolError("bad_value", "bad ok");
      }
      return { type, seq, count: int(obj, "count"), ok };
    }
    case "target":
      return { type, seq, x_m: num(obj, "x_m"), y_m: num(obj, "y_m"),
               vx_mps: num(obj, "vx_mps"), vy_mps: num(obj, "vy_mps"),
               t_s: num(obj, "t_s") };
    default:
      throw new ProtocolError("unknown_type", `unknown type ${type}`);
  }
}
