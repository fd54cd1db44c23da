"""Minimal WebSocket (RFC 6455) framing for the telemetry gateway.

Server side accepts the HTTP upgrade on a configured path and then
exchanges text frames, one protocol line per frame, bit-identical to
the TCP line framing (including the trailing newline). Only the
features the ground station needs are implemented: text/binary frames,
fragmentation reassembly, ping/pong, close. A small client is included
for tests and tooling.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct
from typing import Optional

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WebSocketError(OSError):
    pass


def accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WebSocketError("connection closed mid-frame")
        buf += chunk
    return buf


def _read_headers(sock: socket.socket, limit: int = 16384) -> bytes:
    buf = b""
    while b"\r\n\r\n" not in buf:
        if len(buf) > limit:
            raise WebSocketError("oversized HTTP header")
        chunk = sock.recv(4096)
        if not chunk:
            raise WebSocketError("connection closed during handshake")
        buf += chunk
    return buf


def server_handshake(sock: socket.socket, expect_path: str = "/link") -> str:
    """Perform the upgrade; returns the request path. Sends an HTTP
    error and raises on anything that is not a valid upgrade."""
    raw = _read_headers(sock)
    head = raw.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    parts = lines[0].split(" ")
    if len(parts) != 3 or parts[0] != "GET":
        _refuse(sock, "400 Bad Request")
    path = parts[1]
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            k, v = line.split(":", 1)
            headers[k.strip().lower()] = v.strip()
    if path != expect_path:
        _refuse(sock, "404 Not Found")
    if "websocket" not in headers.get("upgrade", "").lower() \
            or "sec-websocket-key" not in headers:
        _refuse(sock, "400 Bad Request")
    accept = accept_key(headers["sec-websocket-key"])
    resp = ("HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n")
    sock.sendall(resp.encode("ascii"))
    return path


def _refuse(sock: socket.socket, status: str) -> None:
    try:
        sock.sendall(f"HTTP/1.1 {status}\r\nConnection: close\r\n\r\n"
                     .encode("ascii"))
    except OSError:
        pass
    raise WebSocketError(f"handshake refused: {status}")


def send_frame(sock: socket.socket, payload: bytes, opcode: int = OP_TEXT,
               mask: bool = False) -> None:
    header = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        header += bytes([mask_bit | n])
    elif n < 1 << 16:
        header += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        header += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        body = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        sock.sendall(header + key + body)
    else:
        sock.sendall(header + payload)


def recv_message(sock: socket.socket, mask_replies: bool = False,
                 ) -> Optional[bytes]:
    """Reassemble one data message; answers pings; None on close.

    ``mask_replies`` must be True when the caller is the client side
    (clients mask every frame they send, servers never do).
    """
    message = b""
    while True:
        b0, b1 = _read_exact(sock, 2)
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        n = b1 & 0x7F
        if n == 126:
            (n,) = struct.unpack(">H", _read_exact(sock, 2))
        elif n == 127:
            (n,) = struct.unpack(">Q", _read_exact(sock, 8))
        key = _read_exact(sock, 4) if masked else None
        payload = _read_exact(sock, n) if n else b""
        if key:
            payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        if opcode == OP_CLOSE:
            try:
                send_frame(sock, payload[:2], OP_CLOSE, mask=mask_replies)
            except OSError:
                pass
            return None
        if opcode == OP_PING:
            send_frame(sock, payload, OP_PONG, mask=mask_replies)
            continue
        if opcode == OP_PONG:
            continue
        message += payload
        if fin:
            return message


class WebSocketClient:
    """Blocking client speaking one protocol line per text frame."""

    def __init__(self, host: str, port: int, path: str = "/link",
                 timeout: Optional[float] = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        req = (f"GET {path} HTTP/1.1\r\n"
               f"Host: {host}:{port}\r\n"
               "Upgrade: websocket\r\n"
               "Connection: Upgrade\r\n"
               f"Sec-WebSocket-Key: {key}\r\n"
               "Sec-WebSocket-Version: 13\r\n\r\n")
        self.sock.sendall(req.encode("ascii"))
        raw = _read_headers(self.sock)
        status = raw.split(b"\r\n", 1)[0].decode("latin-1")
        if " 101 " not in status:
            raise WebSocketError(f"upgrade refused: {status}")
        head = raw.split(b"\r\n\r\n", 1)[0].decode("latin-1").lower()
        if accept_key(key).lower() not in head:
            raise WebSocketError("bad Sec-WebSocket-Accept")

    def send_line(self, line: bytes) -> None:
        send_frame(self.sock, line, OP_TEXT, mask=True)

    def recv_line(self) -> Optional[bytes]:
        return recv_message(self.sock, mask_replies=True)

    def close(self) -> None:
        try:
            send_frame(self.sock, b"", OP_CLOSE, mask=True)
        except OSError:
            pass
        self.sock.close()
