import { execFileSync } from "node:child_process";
import { describe, expect, it } from "vitest";

import { decode, encode, Message, ProtocolError } from "../src/protocol.js";

const GOLDEN: Array<[string, string]> = [
  ["heartbeat",
   '{"type":"heartbeat","seq":1,"t_s":0.000000,"proto_version":1}'],
  ["state",
   '{"type":"state","seq":42,"t_s":3.100000,"x_m":1.250000,"y_m":7.500000,' +
   '"heading_rad":0.100000,"surge_mps":1.200000,"yaw_rate_radps":0.010000,' +
   '"mode":"auto","battery_pct":100.000000,' +
   '"diagnostics":{"xte_m":0.250000,"in_frame":true}}'],
  ["cmd_manual",
   '{"type":"cmd_manual","seq":7,"throttle":0.300000,"steering":-0.100000}'],
  ["set_mode", '{"type":"set_mode","seq":8,"mode":"auto"}'],
  ["mission_upload",
   '{"type":"mission_upload","seq":9,"waypoints":[{"x_m":100.000000,' +
   '"y_m":0.000000,"speed_mps":2.000000,"accept_radius_m":5.000000}]}'],
  ["mission_ack", '{"type":"mission_ack","seq":3,"count":1,"ok":true}'],
  ["target",
   '{"type":"target","seq":4,"x_m":10.000000,"y_m":80.000000,' +
   '"vx_mps":0.000000,"vy_mps":-1.000000,"t_s":12.300000}'],
];

describe("codec", () => {
  it("re-encodes every golden line byte-identically", () => {
    for (const [type, line] of GOLDEN) {
      const msg = decode(line);
      expect(msg.type).toBe(type);
      expect(encode(msg)).toBe(line + "\n");
    }
  });

  it("round-trips constructed messages", () => {
    const msgs: Message[] = [
      { type: "heartbeat", seq: 0, t_s: 12.5, proto_version: 1 },
      { type: "cmd_manual", seq: 5, throttle: -1, steering: 1 },
      { type: "set_mode", seq: 6, mode: "follow" },
      { type: "mission_upload", seq: 7, waypoints: [] },
      { type: "mission_ack", seq: 8, count: 0, ok: false },
      { type: "target", seq: 9, x_m: -3.25, y_m: 0, vx_mps: 0.5,
        vy_mps: -0.5, t_s: 1 },
    ];
    for (const msg of msgs) {
      expect(decode(encode(msg))).toEqual(msg);
    }
  });

  it("classifies decode failures", () => {
    const cases: Array<[string, string]> = [
      ["garbage", "syntax"],
      ['{"type":"warp","seq":1}', "unknown_type"],
      ['{"type":"heartbeat","seq":1}', "missing_field"],
      ['{"type":"cmd_manual","seq":1,"throttle":2.0,"steering":0.0}',
       "bad_value"],
    ];
    for (const [line, kind] of cases) {
      try {
        decode(line);
        throw new Error(`expected failure for ${line}`);
      } catch (err) {
        expect(err).toBeInstanceOf(ProtocolError);
        expect((err as ProtocolError).kind).toBe(kind);
      }
    }
  });

  it("rejects out-of-range teleop on encode", () => {
    expect(() => encode({ type: "cmd_manual", seq: 0, throttle: 1.2,
                          steering: 0 })).toThrow(ProtocolError);
  });

  it("every frame we can emit decodes with the simulator codec", () => {
    // conformance: the reference decoder (python package) must accept
    // our encodings byte-for-byte
    const frames = GOLDEN.map(([, line]) => encode(decode(line))).join("");
    const script =
      "import sys\n" +
      "from usvsim import telemetry\n" +
      "n = 0\n" +
      "for line in sys.stdin.buffer.read().splitlines():\n" +
      "    telemetry.decode(line)\n" +
      "    n += 1\n" +
      "print(n)\n";
    const out = execFileSync("python3", ["-c", script],
                             { input: frames, encoding: "utf-8" });
    expect(out.trim()).toBe(String(GOLDEN.length));
  });
});
