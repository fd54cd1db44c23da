"""Live telemetry service: the scenario simulation served over sockets.

One simulation thread owns all state and is paced by the wall clock
(sim dt / speed per tick); connection handler threads never touch the
simulation, they only move decoded messages through queues. The same
line protocol is served over plain TCP and over the WebSocket gateway
(one line per text frame, identical bytes).

Command authority: the first client to send a Heartbeat claims it;
everyone else is read-only until the holder disconnects. As soon as a
live operator claims authority the scenario's scripted ground station
goes quiet and the heartbeat failsafe follows the live link instead
(timeout measured in wall time, scaled by the speed factor into sim
time).
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from typing import Optional

from .. import telemetry
from ..telemetry import DecodeError, Heartbeat, decode, encode
from .config import Scenario
from .metrics import MetricsReport, compute_metrics
from .simcore import SimCore
from . import websocket as ws

log = logging.getLogger("usvsim.server")

OUTBOUND_QUEUE_SIZE = 1024


class _Client:
    """One connection (TCP or WS) with its reader/writer threads."""

    _ids = iter(range(1, 1 << 31))

    def __init__(self, server: "TelemetryServer", sock: socket.socket,
                 transport: str):
        self.server = server
        self.sock = sock
        self.transport = transport
        self.id = next(self._ids)
        self.alive = True
        self.outbound: queue.Queue[bytes] = queue.Queue(OUTBOUND_QUEUE_SIZE)
        self._reader = threading.Thread(target=self._read_loop, daemon=True,
                                        name=f"client{self.id}-read")
        self._writer = threading.Thread(target=self._write_loop, daemon=True,
                                        name=f"client{self.id}-write")

    def start(self) -> None:
        self._reader.start()
        self._writer.start()

    def send_line(self, line: bytes) -> None:
        try:
            self.outbound.put_nowait(line)
        except queue.Full:
            try:  # lossy telemetry: drop the oldest report
                self.outbound.get_nowait()
                self.outbound.put_nowait(line)
            except (queue.Empty, queue.Full):
                pass

    def close(self) -> None:
        if not self.alive:
            return
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

    # -- threads ------------------------------------------------------

    def _read_loop(self) -> None:
        try:
            if self.transport == "tcp":
                f = self.sock.makefile("rb")
                for line in f:
                    if not self._handle_line(line):
                        break
            else:
                while self.alive:
                    msg = ws.recv_message(self.sock)
                    if msg is None:
                        break
                    if not self._handle_line(msg):
                        break
        except (OSError, ws.WebSocketError):
            pass
        finally:
            self.server._client_gone(self)

    def _handle_line(self, line: bytes) -> bool:
        if not line.strip():
            return True
        try:
            msg = decode(line)
        except DecodeError as exc:
            log.warning("client %d sent undecodable line (%s)", self.id, exc)
            return True  # tolerate garbage; the link would too
        self.server._inbound.put((self, msg))
        return True

    def _write_loop(self) -> None:
        try:
            while self.alive:
                try:
                    line = self.outbound.get(timeout=0.25)
                except queue.Empty:
                    continue
                if self.transport == "tcp":
                    self.sock.sendall(line)
                else:
                    ws.send_frame(self.sock, line, ws.OP_TEXT)
        except (OSError, ws.WebSocketError):
            pass
        finally:
            self.server._client_gone(self)


class TelemetryServer:
    """Serve one scenario live. start() returns once listeners are bound."""

    def __init__(self, scenario: Scenario, tcp_port: int = 14550,
                 ws_port: int = 8080, ws_path: str = "/link",
                 speed: float = 1.0):
        if speed <= 0.0:
            raise ValueError("speed must be > 0")
        if scenario.link is None:
            raise ValueError("serve mode needs a [link] section in the scenario")
        self.scenario = scenario
        self.speed = speed
        self.ws_path = ws_path
        self.core = SimCore(scenario)
        # live link silence is wall time; the core runs in sim time
        self.core.failsafe_timeout_s = scenario.link.failsafe_timeout_s * speed

        self._tcp_srv = self._listen(tcp_port)
        self._ws_srv = self._listen(ws_port)
        self.tcp_port = self._tcp_srv.getsockname()[1]
        self.ws_port = self._ws_srv.getsockname()[1]

        self._inbound: queue.Queue = queue.Queue()
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._authority: Optional[_Client] = None
        self._stop = threading.Event()
        self.finished = threading.Event()
        self.metrics: Optional[MetricsReport] = None
        self._hb_seq = telemetry.SeqCounter()
        self._threads: list[threading.Thread] = []

    @staticmethod
    def _listen(port: int) -> socket.socket:
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind(("0.0.0.0", port))
        srv.listen(8)
        return srv

    # ------------------------------------------------------------ control

    def start(self) -> None:
        for name, fn in (("sim", self._sim_loop),
                         ("tcp-accept", self._tcp_accept_loop),
                         ("ws-accept", self._ws_accept_loop)):
            t = threading.Thread(target=fn, daemon=True, name=f"usvsim-{name}")
            t.start()
            self._threads.append(t)
        log.info("serving %s: tcp :%d, ws :%d%s, speed %gx",
                 self.scenario.name, self.tcp_port, self.ws_port,
                 self.ws_path, self.speed)

    def stop(self) -> None:
        self._stop.set()

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self.finished.wait(timeout)

    # ------------------------------------------------------------ accept

    def _tcp_accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, addr = self._tcp_srv.accept()
            except OSError:
                return
            log.info("tcp client from %s:%d", *addr)
            self._add_client(sock, "tcp")

    def _ws_accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, addr = self._ws_srv.accept()
            except OSError:
                return
            threading.Thread(target=self._ws_handshake, args=(sock, addr),
                             daemon=True).start()

    def _ws_handshake(self, sock: socket.socket, addr) -> None:
        try:
            sock.settimeout(5.0)
            ws.server_handshake(sock, self.ws_path)
            sock.settimeout(None)
        except (OSError, ws.WebSocketError) as exc:
            log.info("ws handshake from %s:%d failed: %s", addr[0], addr[1], exc)
            sock.close()
            return
        log.info("ws client from %s:%d", *addr)
        self._add_client(sock, "ws")

    def _add_client(self, sock: socket.socket, transport: str) -> None:
        client = _Client(self, sock, transport)
        with self._clients_lock:
            self._clients.append(client)
        client.start()

    def _client_gone(self, client: _Client) -> None:
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
                log.info("client %d disconnected", client.id)
            if self._authority is client:
                self._authority = None
                log.info("command authority released")
        client.close()

    # --------------------------------------------------------------- sim

    def _sim_loop(self) -> None:
        dt_wall = self.scenario.dt_s / self.speed
        total_ticks = round(self.scenario.duration_s / self.scenario.dt_s)
        next_tick = time.monotonic()
        next_beacon = next_tick
        try:
            while not self._stop.is_set() and self.core.tick_index < total_ticks:
                now = time.monotonic()
                if now < next_tick:
                    time.sleep(min(next_tick - now, 0.05))
                    continue
                next_tick += dt_wall
                self._drain_inbound()
                for msg in self.core.tick():
                    self._broadcast(encode(msg))
                if now >= next_beacon:  # service liveness + proto version
                    beacon = Heartbeat(seq=self._hb_seq.take(),
                                       t_s=telemetry.q6(self.core.now_s))
                    self._broadcast(encode(beacon))
                    next_beacon += 1.0
        finally:
            self.metrics = compute_metrics(self.core.records,
                                           self.scenario.thresholds)
            self._shutdown()

    def _drain_inbound(self) -> None:
        while True:
            try:
                client, msg = self._inbound.get_nowait()
            except queue.Empty:
                return
            if isinstance(msg, Heartbeat):
                with self._clients_lock:
                    if self._authority is None and client.alive:
                        self._authority = client
                        self.core.suspend_script_gcs()
                        log.info("client %d claimed command authority", client.id)
                if client is self._authority:
                    self.core.inject(msg)
                continue
            if client is not self._authority:
                log.info("read-only client %d command %s rejected",
                         client.id, type(msg).__name__)
                continue
            self.core.inject(msg)

    def _broadcast(self, line: bytes) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            c.send_line(line)

    def _shutdown(self) -> None:
        self._stop.set()
        for srv in (self._tcp_srv, self._ws_srv):
            try:
                srv.close()
            except OSError:
                pass
        time.sleep(0.1)  # let writers flush their queues
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            c.close()
        if self.metrics is not None:
            for line in self.metrics.summary_lines():
                log.info("metrics: %s", line)
        self.finished.set()
