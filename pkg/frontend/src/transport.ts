/**
 * Browser transport: the WebSocket gateway at /link. One protocol line
 * per text frame, bytes identical to the TCP framing (including the
 * trailing newline).
 */

import { Transport, TransportFactory, TransportHandlers } from "./session.js";

export function wsUrl(loc: Location, port: number, path = "/link"): string {
  const scheme = loc.protocol === "https:" ? "wss:" : "ws:";
  return `${scheme}//${loc.hostname}:${port}${path}`;
}

export class WebSocketFactory implements TransportFactory {
  constructor(private url: string) {}

  connect(handlers: TransportHandlers): Transport {
    const ws = new WebSocket(this.url);
    let closed = false;
    const closeOnce = () => {
      if (!closed) {
        closed = true;
        handlers.onClose();
      }
    };
    ws.onopen = () => handlers.onOpen();
    ws.onmessage = (ev) => {
      if (typeof ev.data === "string") {
        for (const part of ev.data.split("\n")) {
          if (part.trim().length > 0) handlers.onLine(part);
        }
      }
    };
    ws.onclose = closeOnce;
    ws.onerror = closeOnce;
    return {
      send: (line: string) => {
        if (ws.readyState === WebSocket.OPEN) ws.send(line);
      },
      close: () => ws.close(),
    };
  }
}
