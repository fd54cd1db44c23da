/** Test-side transports and process helpers (node only). */

import { spawn, ChildProcess } from "node:child_process";
import net from "node:net";

import { Transport, TransportFactory, TransportHandlers } from "../src/session.js";

/** Line-framed TCP client: the same protocol the WS gateway carries. */
export class TcpFactory implements TransportFactory {
  lastSocket: net.Socket | null = null;

  constructor(private host: string, private port: number) {}

  connect(handlers: TransportHandlers): Transport {
    const sock = net.createConnection(this.port, this.host);
    this.lastSocket = sock;
    let buf = "";
    let closed = false;
    const closeOnce = () => {
      if (!closed) {
        closed = true;
        handlers.onClose();
      }
    };
    sock.on("connect", () => handlers.onOpen());
    sock.on("data", (chunk) => {
      buf += chunk.toString("utf-8");
      let idx;
      while ((idx = buf.indexOf("\n")) >= 0) {
        const line = buf.slice(0, idx);
        buf = buf.slice(idx + 1);
        if (line.trim()) handlers.onLine(line);
      }
    });
    sock.on("error", closeOnce);
    sock.on("close", closeOnce);
    return {
      send: (line: string) => sock.write(line),
      close: () => sock.destroy(),
    };
  }

  /** Simulate a network drop without telling the server nicely. */
  killConnection(): void {
    this.lastSocket?.destroy();
  }
}

export interface ServerHandle {
  proc: ChildProcess;
  tcpPort: number;
  wsPort: number;
  stop(): Promise<void>;
}

/** Spawn `usvsim serve` on ephemeral ports and parse them from stdout. */
export function startServer(scenarioPath: string,
                            extra: string[] = []): Promise<ServerHandle> {
  return new Promise((resolve, reject) => {
    const proc = spawn("usvsim",
                       ["serve", scenarioPath, "--tcp", "0", "--ws", "0",
                        ...extra],
                       { stdio: ["ignore", "pipe", "pipe"] });
    let out = "";
    let settled = false;
    const onData = (chunk: Buffer) => {
      out += chunk.toString("utf-8");
      const m = out.match(/serving .*: tcp :(\d+), ws :(\d+)/);
      if (m && !settled) {
        settled = true;
        resolve({
          proc,
          tcpPort: Number(m[1]),
          wsPort: Number(m[2]),
          stop: () =>
            new Promise<void>((done) => {
              proc.once("exit", () => done());
              proc.kill("SIGINT");
              setTimeout(() => proc.kill("SIGKILL"), 4000).unref();
            }),
        });
      }
    };
    proc.stdout.on("data", onData);
    proc.stderr.on("data", onData);
    proc.once("exit", (code) => {
      if (!settled) {
        settled = true;
        reject(new Error(`server exited early (${code}): ${out}`));
      }
    });
    setTimeout(() => {
      if (!settled) {
        settled = true;
        proc.kill("SIGKILL");
        reject(new Error(`server did not report ports: ${out}`));
      }
    }, 15000).unref();
  });
}

export function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

export async function waitFor(pred: () => boolean, deadlineMs: number,
                              what: string): Promise<void> {
  const end = Date.now() + deadlineMs;
  while (Date.now() < end) {
    if (pred()) return;
    await sleep(20);
  }
  throw new Error(`timeout waiting for ${what}`);
}
