/**
 * Ground-station session: connection lifecycle, heartbeating, teleop
 * streaming, mission drafting/upload, telemetry buffers, and the
 * badges (mode, authority, link, failsafe, protocol version).
 *
 * Transport-agnostic: the browser app plugs in a WebSocket transport,
 * tests drive the same class over TCP or a mock. Every outbound frame
 * goes through protocol.encode and is appended to sentLog, so protocol
 * conformance and the replay property are checkable from the outside.
 *
 * The wire protocol has no authority-grant message, so authority is
 * inferred from effects: a mission_ack or an observed mode change
 * proves control; a command that provably had no effect after several
 * state reports marks the session read-only.
 */

import {
  CommandManual, Heartbeat, Message, MissionUpload, Mode, PROTO_VERSION,
  StateReport, WaypointSpec, decode, encode,
} from "./protocol.js";

export type ConnStatus = "idle" | "connecting" | "connected" | "reconnecting" | "closed";
export type Authority = "unknown" | "granted" | "readonly";
export type UploadState = "idle" | "pending" | "acked" | "rejected" | "timeout";

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface TransportHandlers {
  onOpen(): void;
  onLine(line: string): void;
  onClose(): void;
}

export interface TransportFactory {
  connect(handlers: TransportHandlers): Transport;
}

export interface TelemetrySample {
  t_s: number;
  heading_rad: number;
  surge_mps: number;
  xte_m: number | null;
}

export interface TrailPoint {
  t_s: number;
  x_m: number;
  y_m: number;
}

export interface DraftWaypoint extends WaypointSpec {}

export interface SessionOptions {
  heartbeatMs?: number;
  teleopMs?: number;
  reconnectMinMs?: number;
  reconnectMaxMs?: number;
  staleMs?: number;
  ackTimeoutMs?: number;
  bufferSpanS?: number;
  maxRangeM?: number;
  /** state reports with no effect before a command is declared ignored */
  authorityProbeReports?: number;
}

const DEFAULTS: Required<SessionOptions> = {
  heartbeatMs: 1000,
  teleopMs: 100,
  reconnectMinMs: 400,
  reconnectMaxMs: 5000,
  staleMs: 2000,
  ackTimeoutMs: 3000,
  bufferSpanS: 120,
  maxRangeM: 900,
  authorityProbeReports: 6,
};

export interface UiSessionState {
  status: ConnStatus;
  authority: Authority;
  lastReport: StateReport | null;
  lastReportAtMs: number | null;
  stale: boolean;
  failsafeWarning: boolean;
  protoMismatch: boolean;
  protoVersionSeen: number | null;
  buffers: TelemetrySample[];
  trail: TrailPoint[];
  missionDraft: DraftWaypoint[];
  activeMission: WaypointSpec[] | null;
  uploadState: UploadState;
  uploadCount: number;
  linkDistanceM: number | null;
  linkCritical: boolean;
  modePrompt: string | null;
  designatedTarget: { x_m: number; y_m: number } | null;
}

export class GcsSession {
  readonly opts: Required<SessionOptions>;
  readonly state: UiSessionState;
  readonly sentLog: string[] = [];
  readonly recvLog: string[] = [];
  onChange: (() => void) | null = null;

  private transport: Transport | null = null;
  private seq = 0;
  private startedAtMs = Date.now();
  private heartbeatTimer: ReturnType<typeof setInterval> | null = null;
  private teleopTimer: ReturnType<typeof setInterval> | null = null;
  private watchTimer: ReturnType<typeof setInterval> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private ackTimer: ReturnType<typeof setTimeout> | null = null;
  private reconnectDelayMs: number;
  private teleop = { throttle: 0, steering: 0, active: false };
  private targetTimer: ReturnType<typeof setInterval> | null = null;
  private pendingMode: { mode: Mode; reports: number } | null = null;
  private pendingUploadSeq: number | null = null;
  private pendingUploadDraft: WaypointSpec[] = [];
  private closed = false;

  constructor(private factory: TransportFactory, opts: SessionOptions = {}) {
    this.opts = { ...DEFAULTS, ...opts };
    this.reconnectDelayMs = this.opts.reconnectMinMs;
    this.state = {
      status: "idle",
      authority: "unknown",
      lastReport: null,
      lastReportAtMs: null,
      stale: false,
      failsafeWarning: false,
      protoMismatch: false,
      protoVersionSeen: null,
      buffers: [],
      trail: [],
      missionDraft: [],
      activeMission: null,
      uploadState: "idle",
      uploadCount: 0,
      linkDistanceM: null,
      linkCritical: false,
      modePrompt: null,
      designatedTarget: null,
    };
  }

  // ------------------------------------------------------------ lifecycle

  connect(): void {
    if (this.closed) return;
    this.state.status = this.state.lastReport ? "reconnecting" : "connecting";
    this.emit();
    try {
      this.transport = this.factory.connect({
        onOpen: () => this.handleOpen(),
        onLine: (line) => this.handleLine(line),
        onClose: () => this.handleClose(),
      });
    } catch {
      this.scheduleReconnect();
    }
  }

  close(): void {
    this.closed = true;
    this.stopTimers();
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.transport?.close();
    this.state.status = "closed";
    this.emit();
  }

  private handleOpen(): void {
    this.state.status = "connected";
    this.reconnectDelayMs = this.opts.reconnectMinMs;
    this.sendHeartbeat(); // the authority claim
    this.heartbeatTimer = setInterval(() => this.sendHeartbeat(),
                                      this.opts.heartbeatMs);
    this.watchTimer = setInterval(() => this.watchdog(), 250);
    this.emit();
  }

  private handleClose(): void {
    this.stopTimers();
    this.transport = null;
    if (this.closed) return;
    this.state.status = "reconnecting";
    // no link means no heartbeats: the vessel will trip its failsafe
    this.state.failsafeWarning = true;
    this.emit();
    this.scheduleReconnect();
  }

  private scheduleReconnect(): void {
    if (this.closed) return;
    this.state.status = "reconnecting";
    const delay = this.reconnectDelayMs;
    this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2,
                                     this.opts.reconnectMaxMs);
    this.reconnectTimer = setTimeout(() => this.connect(), delay);
    this.emit();
  }

  private stopTimers(): void {
    for (const t of [this.heartbeatTimer, this.teleopTimer, this.watchTimer,
                     this.targetTimer]) {
      if (t) clearInterval(t);
    }
    this.heartbeatTimer = this.teleopTimer = this.watchTimer = null;
    this.targetTimer = null;
    if (this.ackTimer) clearTimeout(this.ackTimer);
    this.ackTimer = null;
  }

  private watchdog(): void {
    const stale = this.state.lastReportAtMs !== null &&
      Date.now() - this.state.lastReportAtMs > this.opts.staleMs;
    const warn = this.state.status !== "connected" || stale;
    if (stale !== this.state.stale || warn !== this.state.failsafeWarning) {
      this.state.stale = stale;
      this.state.failsafeWarning = warn;
      this.emit();
    }
  }

  // ------------------------------------------------------------- outbound

  private send(msg: Message): void {
    if (!this.transport || this.state.status !== "connected") return;
    const line = encode(msg);
    this.sentLog.push(line);
    this.transport.send(line);
  }

  private nowS(): number {
    return (Date.now() - this.startedAtMs) / 1000;
  }

  private sendHeartbeat(): void {
    const hb: Heartbeat = {
      type: "heartbeat", seq: this.seq++,
      t_s: Number(this.nowS().toFixed(6)), proto_version: PROTO_VERSION,
    };
    this.send(hb);
  }

  requestMode(mode: Mode): void {
    this.state.modePrompt = null;
    this.send({ type: "set_mode", seq: this.seq++, mode });
    this.pendingMode = { mode, reports: 0 };
    this.emit();
  }

  /**
   * Teleop input from keys or sliders. Streams cmd_manual while active
   * (10 Hz), sends one zeroed command on release. Refused with a
   * prompt when the vessel is not in manual mode; suppressed without
   * authority.
   */
  setTeleop(throttle: number, steering: number, active: boolean): void {
    const mode = this.state.lastReport?.mode;
    if (active && mode && mode !== "manual") {
      this.state.modePrompt =
        `vessel is in ${mode}; switch to manual to take the sticks`;
      this.emit();
      return;
    }
    if (active && this.state.authority === "readonly") {
      return; // greyed out in the UI as well
    }
    const wasActive = this.teleop.active;
    this.teleop = {
      throttle: clampUnit(throttle), steering: clampUnit(steering), active,
    };
    if (active && !this.teleopTimer) {
      this.sendTeleop();
      this.teleopTimer = setInterval(() => this.sendTeleop(), this.opts.teleopMs);
    } else if (!active && wasActive) {
      if (this.teleopTimer) clearInterval(this.teleopTimer);
      this.teleopTimer = null;
      this.send({ type: "cmd_manual", seq: this.seq++, throttle: 0, steering: 0 });
    }
  }

  private sendTeleop(): void {
    if (!this.teleop.active) return;
    const cmd: CommandManual = {
      type: "cmd_manual", seq: this.seq++,
      throttle: this.teleop.throttle, steering: this.teleop.steering,
    };
    this.send(cmd);
  }

  /**
   * Operator target designation for follow mode. The vessel treats
   * a track as lost after ~2 s, so the session re-reports the (static)
   * designated point at 2 Hz, stamped with the newest vessel time,
   * until cleared.
   */
  designateTarget(x_m: number, y_m: number): void {
    this.state.designatedTarget = { x_m, y_m };
    this.sendTargetReport();
    if (!this.targetTimer) {
      this.targetTimer = setInterval(() => this.sendTargetReport(), 500);
    }
    this.emit();
  }

  clearTarget(): void {
    this.state.designatedTarget = null;
    if (this.targetTimer) clearInterval(this.targetTimer);
    this.targetTimer = null;
    this.emit();
  }

  private sendTargetReport(): void {
    const tgt = this.state.designatedTarget;
    if (!tgt) return;
    const stamp = this.state.lastReport?.t_s;
    if (stamp === undefined) return; // no vessel clock reference yet
    this.send({ type: "target", seq: this.seq++, x_m: tgt.x_m, y_m: tgt.y_m,
                vx_mps: 0, vy_mps: 0, t_s: stamp });
  }

  // -------------------------------------------------------- mission draft

  addDraftWaypoint(wp: DraftWaypoint): void {
    this.state.missionDraft.push({ ...wp });
    this.emit();
  }

  updateDraftWaypoint(index: number, wp: Partial<DraftWaypoint>): void {
    const cur = this.state.missionDraft[index];
    if (cur) Object.assign(cur, wp);
    this.emit();
  }

  removeDraftWaypoint(index: number): void {
    this.state.missionDraft.splice(index, 1);
    this.emit();
  }

  /** Per-field messages for an invalid draft; empty list means valid. */
  validateDraft(): string[] {
    const problems: string[] = [];
    if (this.state.missionDraft.length === 0) {
      problems.push("draft is empty");
    }
    this.state.missionDraft.forEach((wp, i) => {
      if (!Number.isFinite(wp.x_m) || !Number.isFinite(wp.y_m)) {
        problems.push(`waypoint ${i + 1}: coordinates must be finite`);
      }
      if (!(wp.accept_radius_m > 0)) {
        problems.push(`waypoint ${i + 1}: accept radius must be > 0`);
      }
      if (!(wp.speed_mps >= 0)) {
        problems.push(`waypoint ${i + 1}: speed must be >= 0`);
      }
    });
    return problems;
  }

  uploadMission(): string[] {
    const problems = this.validateDraft();
    if (problems.length > 0) return problems;
    const waypoints = this.state.missionDraft.map((w) => ({ ...w }));
    const msg: MissionUpload = {
      type: "mission_upload", seq: this.seq++, waypoints,
    };
    this.pendingUploadSeq = msg.seq;
    this.pendingUploadDraft = waypoints;
    this.state.uploadState = "pending";
    if (this.ackTimer) clearTimeout(this.ackTimer);
    this.ackTimer = setTimeout(() => {
      if (this.state.uploadState === "pending") {
        this.state.uploadState = "timeout"; // retry affordance in the UI
        this.pendingUploadSeq = null;
        this.emit();
      }
    }, this.opts.ackTimeoutMs);
    this.send(msg);
    this.emit();
    return [];
  }

  // --------------------------------------------------------------- inbound

  private handleLine(line: string): void {
    this.recvLog.push(line);
    let msg: Message;
    try {
      msg = decode(line);
    } catch {
      return; // tolerate garbage; it would not have survived the radio
    }
    applyToView(this.state, msg, this.opts);
    if (msg.type === "state") {
      this.state.lastReportAtMs = Date.now();
      this.state.stale = false;
      if (this.state.status === "connected") {
        this.state.failsafeWarning = false;
      }
      if (this.pendingMode) {
        if (msg.mode === this.pendingMode.mode) {
          this.state.authority = "granted";
          this.pendingMode = null;
        } else if (++this.pendingMode.reports >=
                   this.opts.authorityProbeReports) {
          this.state.authority = "readonly";
          this.pendingMode = null;
        }
      }
    } else if (msg.type === "heartbeat") {
      this.state.protoMismatch = msg.proto_version !== PROTO_VERSION;
    } else if (msg.type === "mission_ack") {
      this.state.authority = "granted"; // only the holder gets acks
      if (msg.seq >= 0 && this.pendingUploadSeq !== null) {
        this.state.uploadState = msg.ok ? "acked" : "rejected";
        this.state.uploadCount = msg.count;
        if (msg.ok) {
          this.state.activeMission = this.pendingUploadDraft;
        }
        this.pendingUploadSeq = null;
        if (this.ackTimer) clearTimeout(this.ackTimer);
        this.ackTimer = null;
      }
    }
    this.emit();
  }

  private emit(): void {
    this.onChange?.();
  }
}

function clampUnit(v: number): number {
  return Math.min(1, Math.max(-1, v));
}

/**
 * The replayable view: everything the dashboards draw that is a pure
 * function of the inbound message log. replayView(recvLog) must equal
 * the live session's view (tested), so any screen state is
 * reconstructible after the fact.
 */
export interface ReplayView {
  lastReport: StateReport | null;
  buffers: TelemetrySample[];
  trail: TrailPoint[];
  linkDistanceM: number | null;
  linkCritical: boolean;
  protoVersionSeen: number | null;
}

export function applyToView(view: ReplayView,
                            msg: Message,
                            opts: { bufferSpanS: number; maxRangeM: number },
                            ): void {
  if (msg.type === "state") {
    view.lastReport = msg;
    view.buffers.push({
      t_s: msg.t_s, heading_rad: msg.heading_rad, surge_mps: msg.surge_mps,
      xte_m: msg.diagnostics.xte_m,
    });
    view.trail.push({ t_s: msg.t_s, x_m: msg.x_m, y_m: msg.y_m });
    const cutoff = msg.t_s - opts.bufferSpanS;
    while (view.buffers.length && view.buffers[0].t_s < cutoff) {
      view.buffers.shift();
    }
    while (view.trail.length && view.trail[0].t_s < cutoff) {
      view.trail.shift();
    }
    view.linkDistanceM = Math.hypot(msg.x_m, msg.y_m);
    view.linkCritical = view.linkDistanceM > 0.9 * opts.maxRangeM;
  } else if (msg.type === "heartbeat") {
    view.protoVersionSeen = msg.proto_version;
  }
}

export function replayView(lines: string[],
                           opts: SessionOptions = {}): ReplayView {
  const o = { ...DEFAULTS, ...opts };
  const view: ReplayView = {
    lastReport: null, buffers: [], trail: [], linkDistanceM: null,
    linkCritical: false, protoVersionSeen: null,
  };
  for (const line of lines) {
    let msg: Message;
    try {
      msg = decode(line);
    } catch {
      continue;
    }
    applyToView(view, msg, o);
  }
  return view;
}
