import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { decode, encode, Message, StateReport } from "../src/protocol.js";
import { GcsSession, replayView, Transport, TransportFactory,
         TransportHandlers } from "../src/session.js";

class MockFactory implements TransportFactory {
  handlers: TransportHandlers | null = null;
  sent: string[] = [];
  connectCalls = 0;
  refuse = false;

  connect(handlers: TransportHandlers): Transport {
    this.connectCalls += 1;
    if (this.refuse) throw new Error("refused");
    this.handlers = handlers;
    // real transports open asynchronously
    setTimeout(() => handlers.onOpen(), 1);
    return {
      send: (line) => this.sent.push(line),
      close: () => {},
    };
  }

  push(msg: Message): void {
    this.handlers?.onLine(encode(msg).trimEnd());
  }

  report(partial: Partial<StateReport> = {}): void {
    this.push({
      type: "state", seq: 0, t_s: 0, x_m: 0, y_m: 0, heading_rad: 0,
      surge_mps: 0, yaw_rate_radps: 0, mode: "hold", battery_pct: 100,
      diagnostics: { xte_m: null, in_frame: null }, ...partial,
    });
  }

  drop(): void {
    this.handlers?.onClose();
  }

  sentMessages(): Message[] {
    return this.sent.map((l) => decode(l));
  }
}

let factory: MockFactory;
let session: GcsSession;

beforeEach(() => {
  vi.useFakeTimers();
  factory = new MockFactory();
  session = new GcsSession(factory);
});

afterEach(() => {
  session.close();
  vi.useRealTimers();
});

function connect(): void {
  session.connect();
  vi.advanceTimersByTime(5);
}

describe("connection lifecycle", () => {
  it("claims authority with a heartbeat on connect, then 1 Hz", () => {
    connect();
    expect(session.state.status).toBe("connected");
    expect(factory.sentMessages()[0].type).toBe("heartbeat");
    vi.advanceTimersByTime(3000);
    const beats = factory.sentMessages().filter((m) => m.type === "heartbeat");
    expect(beats.length).toBeGreaterThanOrEqual(4);
    expect(beats.map((b) => b.seq)).toEqual(
      [...beats.map((b) => b.seq)].sort((a, b) => a - b));
  });

  it("reconnects with backoff and flags the failsafe risk", () => {
    connect();
    factory.drop();
    expect(session.state.status).toBe("reconnecting");
    expect(session.state.failsafeWarning).toBe(true);
    const before = factory.connectCalls;
    vi.advanceTimersByTime(450);
    expect(factory.connectCalls).toBe(before + 1);
    expect(session.state.status).toBe("connected");
  });

  it("backoff grows while the server stays away", () => {
    connect();
    factory.refuse = true;
    factory.drop();
    vi.advanceTimersByTime(420);  // 1st retry (400 ms) refused
    vi.advanceTimersByTime(810);  // 2nd retry (800 ms) refused
    const calls = factory.connectCalls;
    vi.advanceTimersByTime(300);  // 3rd retry still 1.3 s out
    expect(factory.connectCalls).toBe(calls);
    factory.refuse = false;
    vi.advanceTimersByTime(1400);
    expect(session.state.status).toBe("connected");
  });

  it("marks telemetry stale after 2 s without reports", () => {
    connect();
    factory.report();
    expect(session.state.stale).toBe(false);
    vi.advanceTimersByTime(2600);
    expect(session.state.stale).toBe(true);
    expect(session.state.failsafeWarning).toBe(true);
    factory.report();
    expect(session.state.stale).toBe(false);
  });

  it("flags a protocol version mismatch", () => {
    connect();
    factory.push({ type: "heartbeat", seq: 0, t_s: 0, proto_version: 2 });
    expect(session.state.protoMismatch).toBe(true);
  });
});

describe("teleop", () => {
  it("streams at 10 Hz while active and zeroes once on release", () => {
    connect();
    factory.report({ mode: "manual" });
    session.setTeleop(0.5, -0.2, true);
    vi.advanceTimersByTime(1000);
    session.setTeleop(0, 0, false);
    vi.advanceTimersByTime(500);
    const cmds = factory.sentMessages()
      .filter((m) => m.type === "cmd_manual");
    expect(cmds.length).toBeGreaterThanOrEqual(10);
    expect(cmds.length).toBeLessThanOrEqual(13);
    const last = cmds[cmds.length - 1];
    expect(last).toMatchObject({ throttle: 0, steering: 0 });
    // nothing after the zeroing command
    expect(factory.sentMessages().filter((m) => m.type === "cmd_manual")
      .length).toBe(cmds.length);
  });

  it("prompts for a mode switch instead of sending while in auto", () => {
    connect();
    factory.report({ mode: "auto" });
    session.setTeleop(1, 0, true);
    vi.advanceTimersByTime(500);
    expect(factory.sentMessages().some((m) => m.type === "cmd_manual"))
      .toBe(false);
    expect(session.state.modePrompt).toContain("auto");
  });

  it("suppresses teleop when read-only", () => {
    connect();
    factory.report({ mode: "manual" });
    session.state.authority = "readonly";
    session.setTeleop(1, 0, true);
    vi.advanceTimersByTime(500);
    expect(factory.sentMessages().some((m) => m.type === "cmd_manual"))
      .toBe(false);
  });
});

describe("authority inference", () => {
  it("grants on an observed mode change", () => {
    connect();
    session.requestMode("manual");
    factory.report({ mode: "manual" });
    expect(session.state.authority).toBe("granted");
  });

  it("marks read-only when commands have no effect", () => {
    connect();
    session.requestMode("manual");
    for (let i = 0; i < 6; i++) factory.report({ mode: "auto" });
    expect(session.state.authority).toBe("readonly");
  });

  it("grants on a mission ack", () => {
    connect();
    session.addDraftWaypoint({ x_m: 1, y_m: 2, speed_mps: 1,
                               accept_radius_m: 3 });
    expect(session.uploadMission()).toEqual([]);
    factory.push({ type: "mission_ack", seq: 0, count: 1, ok: true });
    expect(session.state.authority).toBe("granted");
    expect(session.state.uploadState).toBe("acked");
    expect(session.state.activeMission?.length).toBe(1);
  });
});

describe("mission draft", () => {
  it("blocks invalid drafts client-side with per-field messages", () => {
    connect();
    expect(session.uploadMission()).toEqual(["draft is empty"]);
    session.addDraftWaypoint({ x_m: 1, y_m: 2, speed_mps: -1,
                               accept_radius_m: 0 });
    const problems = session.uploadMission();
    expect(problems.some((p) => p.includes("radius"))).toBe(true);
    expect(problems.some((p) => p.includes("speed"))).toBe(true);
    expect(factory.sentMessages().some((m) => m.type === "mission_upload"))
      .toBe(false);
  });

  it("shows the retry affordance when the ack never comes", () => {
    connect();
    session.addDraftWaypoint({ x_m: 1, y_m: 2, speed_mps: 1,
                               accept_radius_m: 3 });
    session.uploadMission();
    expect(session.state.uploadState).toBe("pending");
    vi.advanceTimersByTime(3100);
    expect(session.state.uploadState).toBe("timeout");
    // retry works
    session.uploadMission();
    factory.push({ type: "mission_ack", seq: 1, count: 1, ok: true });
    expect(session.state.uploadState).toBe("acked");
  });
});

describe("target designation", () => {
  it("re-reports a designated target at 2 Hz with fresh stamps", () => {
    connect();
    factory.report({ t_s: 10.0 });
    session.designateTarget(5, 25);
    factory.report({ t_s: 10.5 });
    vi.advanceTimersByTime(1000);
    const targets = factory.sentMessages()
      .filter((m) => m.type === "target");
    expect(targets.length).toBeGreaterThanOrEqual(3);
    expect(targets[0]).toMatchObject({ x_m: 5, y_m: 25, t_s: 10 });
    expect(targets[targets.length - 1].t_s).toBe(10.5);
    session.clearTarget();
    const count = factory.sentMessages()
      .filter((m) => m.type === "target").length;
    vi.advanceTimersByTime(1000);
    expect(factory.sentMessages().filter((m) => m.type === "target").length)
      .toBe(count);
    expect(session.state.designatedTarget).toBeNull();
  });
});

describe("replay property", () => {
  it("reconstructs the dashboard view from the message log", () => {
    connect();
    for (let i = 0; i < 30; i++) {
      factory.report({
        seq: i, t_s: i * 0.1, x_m: i, y_m: 2 * i,
        heading_rad: 0.01 * i, surge_mps: 1 + 0.01 * i, mode: "auto",
        diagnostics: { xte_m: 0.1 * i, in_frame: i % 2 === 0 },
      });
    }
    factory.push({ type: "heartbeat", seq: 99, t_s: 3, proto_version: 1 });
    const replay = replayView(session.recvLog);
    expect(replay.lastReport).toEqual(session.state.lastReport);
    expect(replay.buffers).toEqual(session.state.buffers);
    expect(replay.trail).toEqual(session.state.trail);
    expect(replay.linkDistanceM).toBe(session.state.linkDistanceM);
    expect(replay.protoVersionSeen).toBe(1);
  });

  it("keeps only the last 120 s in the buffers", () => {
    connect();
    for (let i = 0; i < 200; i++) {
      factory.report({ seq: i, t_s: i });
    }
    expect(session.state.buffers[0].t_s).toBeGreaterThanOrEqual(199 - 120);
    expect(session.state.buffers.length).toBeLessThanOrEqual(121);
  });
});
