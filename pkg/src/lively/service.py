"""Supervisory wire service: live control and telemetry for a running engine.

Protocol v1: newline-delimited JSON objects over a TCP socket, each with a
"type" field. Commands: set_layer, inject, pause, resume, step, set_speed,
query_state. Server messages: ack{cmd_id, effective_tick}, error{cmd_id,
reason}, telemetry{frame}, gap{from_tick, to_tick}.

Browsers cannot open raw sockets, so a connection whose first line is an
HTTP GET is upgraded to a WebSocket (RFC 6455 text frames carrying exactly
the same JSON messages).

Engine mutations happen only at tick boundaries, in command arrival order,
so an interactively steered session stays deterministic and its log replays
offline.
"""

from __future__ import annotations

import asyncio
import base64
import collections
import hashlib
import json
import time

from .core import (
    BalanceReading,
    DeliberativeInput,
    SensoryEvent,
    Tick,
    canonical_json,
    deliberative_kind_from_dict,
    event_kind_from_dict,
    validate_deliberative,
    validate_event,
)
from .engine import Engine, TickRecord
from .simulator import LOG_FORMAT, Scenario, SessionLog

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

COMMAND_TYPES = ("set_layer", "inject", "pause", "resume", "step", "set_speed", "query_state")


def telemetry_frame(record: TickRecord | None, engine: Engine) -> dict:
    """One tick's supervisor-facing view. Before the first tick this is a
    synthetic frame at tick -1 showing the initial switchboard."""
    if record is None:
        return {
            "tick": -1,
            "enabled": {layer.value: on for layer, on in engine.enabled.items()},
            "interrupt": engine.interrupt_flag,
            "fall_state": engine.fall_state.to_dict(),
            "situation": None,
            "surviving_requests": [],
            "commands": [],
            "signals": [],
        }
    winner_ids = set(record.arbitration.get("winners", []))
    return {
        "tick": record.tick,
        "enabled": record.enabled,
        "interrupt": record.interrupt,
        "fall_state": record.fall_state,
        "situation": record.situation,
        "surviving_requests": [r for r in record.requests if r["id"] in winner_ids],
        "commands": record.commands,
        "signals": record.signals,
    }


class _Client:
    """One connected supervisor with a bounded outbound frame buffer."""

    _ids = 0

    def __init__(self, transport, max_frames: int = 256):
        _Client._ids += 1
        self.id = _Client._ids
        self.transport = transport
        self.queue: collections.deque = collections.deque()
        self.max_frames = max_frames
        self.frame_count = 0
        self.gap_from = None
        self.gap_to = None
        self.wakeup = asyncio.Event()
        self.closed = False

    def send(self, message: dict):
        """Queue a control message (ack/error); never dropped."""
        self.queue.append(message)
        self.wakeup.set()

    def send_frame(self, message: dict):
        """Queue a telemetry frame; drops (with a gap marker) when lagging."""
        if self.frame_count >= self.max_frames:
            tick = message["frame"]["tick"]
            if self.gap_from is None:
                self.gap_from = tick
            self.gap_to = tick
            return
        if self.gap_from is not None:
            self.queue.append(
                {"type": "gap", "from_tick": self.gap_from, "to_tick": self.gap_to}
            )
            self.gap_from = self.gap_to = None
        self.frame_count += 1
        self.queue.append(message)
        self.wakeup.set()

    async def writer_loop(self):
        try:
            while True:
                self.wakeup.clear()
                while self.queue:
                    msg = self.queue.popleft()
                    if msg.get("type") == "telemetry":
                        self.frame_count -= 1
                    await self.transport.write_line(canonical_json(msg))
                if self.gap_from is not None:
                    # caught up with a drop range still open: report it now
                    gap = {"type": "gap", "from_tick": self.gap_from, "to_tick": self.gap_to}
                    self.gap_from = self.gap_to = None
                    await self.transport.write_line(canonical_json(gap))
                    continue
                if self.closed:
                    break
                await self.wakeup.wait()
        except (ConnectionError, asyncio.CancelledError):
            pass


class SupervisoryServer:
    """Serves one engine session to any number of supervisor connections."""

    def __init__(
        self,
        engine: Engine,
        scenario: Scenario | None = None,
        speed: float = 10.0,
        paused: bool = False,
        max_client_frames: int = 256,
        client_sndbuf: int | None = None,
    ):
        self.engine = engine
        self.scenario = scenario
        self.speed = speed
        self.paused = paused
        self.step_budget = 0
        self.max_client_frames = max_client_frames
        # Bounding the kernel send buffer keeps lagging-client backpressure in
        # the application, where frames are dropped with gap markers instead
        # of buffering without limit.
        self.client_sndbuf = client_sndbuf

        self._events_by_tick: dict[int, list] = {}
        self._delib_by_tick: dict[int, list] = {}
        if scenario is not None:
            for entry in scenario.timeline:
                if entry.event is not None:
                    self._events_by_tick.setdefault(entry.tick, []).append(entry.event)
                elif entry.deliberative is not None:
                    self._delib_by_tick.setdefault(entry.tick, []).append(entry.deliberative)
                # supervisory command entries are meant for batch runs; live
                # sessions get theirs from connected clients
        self._injected_events: list = []
        self._injected_delib: list = []

        self.records: list[dict] = []
        self.last_record: TickRecord | None = None
        self.clients: list[_Client] = []
        self._cmdq: asyncio.Queue = asyncio.Queue()
        self._server: asyncio.AbstractServer | None = None
        self._loop_task: asyncio.Task | None = None
        self.bound_addr = None

    # -- lifecycle -----------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int = 0):
        self._server = await asyncio.start_server(self._handle_conn, host, port)
        self.bound_addr = self._server.sockets[0].getsockname()[:2]
        self._loop_task = asyncio.create_task(self._engine_loop())
        return self.bound_addr

    async def stop(self):
        if self._loop_task:
            self._loop_task.cancel()
            try:
                await self._loop_task
            except asyncio.CancelledError:
                pass
        if self._server:
            self._server.close()
            await self._server.wait_closed()
        for c in self.clients:
            c.closed = True
            c.wakeup.set()
            await c.transport.close()

    def session_log(self) -> SessionLog:
        meta = {
            "format": LOG_FORMAT,
            "scenario": self.scenario.name if self.scenario else "(live)",
            "seed": self.engine.seed,
            "duration_ticks": len(self.records),
            "config_digest": self.engine.config.digest(),
            "platform": self.engine.platform.name,
        }
        return SessionLog(meta=meta, records=list(self.records))

    # -- engine loop -----------------------------------------------------------

    def _due_inputs(self, t: int):
        cfg = self.engine.config
        events = [
            SensoryEvent(tick=Tick(index=t, tick_duration_ms=cfg.tick_duration_ms), kind=k)
            for k in (event_kind_from_dict(e) for e in self._events_by_tick.get(t, []))
        ]
        delib = [
            DeliberativeInput(kind=deliberative_kind_from_dict(d))
            for d in self._delib_by_tick.get(t, [])
        ]
        events.extend(self._injected_events)
        delib.extend(self._injected_delib)
        self._injected_events = []
        self._injected_delib = []
        return events, delib

    def _execute_tick(self):
        t = self.engine.tick_index
        events, delib = self._due_inputs(t)
        try:
            record = self.engine.step(events, delib)
        except ValueError as e:
            # bad frame (e.g. conflicting injected inputs): pause rather than
            # kill the session, and tell every supervisor what happened
            self.paused = True
            self.step_budget = 0
            for client in self.clients:
                client.send({"type": "error", "cmd_id": None, "reason": f"tick {t} failed: {e}"})
            return
        self.records.append(record.to_dict())
        self.last_record = record
        frame = {"type": "telemetry", "frame": telemetry_frame(record, self.engine)}
        for client in self.clients:
            client.send_frame(frame)

    async def _engine_loop(self):
        next_time = time.monotonic()
        while True:
            # Drain every pending command at this tick boundary, in order.
            try:
                while True:
                    cmd, client = self._cmdq.get_nowait()
                    self._apply_command(cmd, client)
            except asyncio.QueueEmpty:
                pass

            if self.step_budget > 0:
                self.step_budget -= 1
                self._execute_tick()
                await asyncio.sleep(0)  # let client I/O breathe during bursts
                continue

            if self.paused:
                cmd, client = await self._cmdq.get()
                self._apply_command(cmd, client)
                continue

            now = time.monotonic()
            if now < next_time:
                try:
                    cmd, client = await asyncio.wait_for(
                        self._cmdq.get(), timeout=next_time - now
                    )
                    self._apply_command(cmd, client)
                    continue
                except asyncio.TimeoutError:
                    pass
            self._execute_tick()
            next_time = max(next_time + 1.0 / self.speed, time.monotonic() - 1.0)

    # -- command handling --------------------------------------------------------

    def _ack(self, client: _Client, cmd: dict, effective_tick: int):
        client.send(
            {"type": "ack", "cmd_id": cmd.get("cmd_id"), "effective_tick": effective_tick}
        )

    def _error(self, client: _Client, cmd: dict, reason: str):
        client.send({"type": "error", "cmd_id": cmd.get("cmd_id"), "reason": reason})

    def _apply_command(self, cmd: dict, client: _Client):
        ctype = cmd.get("type")
        t = self.engine.tick_index
        try:
            if ctype == "set_layer":
                self.engine.set_layer_enabled(cmd["layer"], bool(cmd["enabled"]))
                self._ack(client, cmd, t)
            elif ctype == "inject":
                self._inject(cmd, client, t)
            elif ctype == "pause":
                self.paused = True
                self._ack(client, cmd, t)
            elif ctype == "resume":
                self.paused = False
                self._ack(client, cmd, t)
            elif ctype == "step":
                n = int(cmd.get("n", 1))
                if n < 1:
                    raise ValueError("step count must be >= 1")
                self.step_budget += n
                self._ack(client, cmd, t)
            elif ctype == "set_speed":
                v = float(cmd["ticks_per_second"])
                if v <= 0:
                    raise ValueError("ticks_per_second must be positive")
                self.speed = v
                self._ack(client, cmd, t)
            elif ctype == "query_state":
                self._ack(client, cmd, t)
                client.send(
                    {"type": "telemetry", "frame": telemetry_frame(self.last_record, self.engine)}
                )
            else:
                self._error(client, cmd, f"unknown command type {ctype!r}")
        except (KeyError, TypeError, ValueError) as e:
            self._error(client, cmd, str(e))

    def _inject(self, cmd: dict, client: _Client, t: int):
        payload = cmd.get("event")
        if not isinstance(payload, dict):
            raise ValueError("inject needs an 'event' object")
        etype = payload.get("type")
        if etype in ("speech_act_request", "speech_act_end"):
            kind = deliberative_kind_from_dict(payload)
            r = validate_deliberative(DeliberativeInput(kind=kind))
            if not r.ok:
                raise ValueError("; ".join(r.violations))
            self._injected_delib.append(DeliberativeInput(kind=kind))
        else:
            kind = event_kind_from_dict(payload)
            ev = SensoryEvent(
                tick=Tick(index=t, tick_duration_ms=self.engine.config.tick_duration_ms),
                kind=kind,
            )
            r = validate_event(ev)
            if not r.ok:
                raise ValueError("; ".join(r.violations))
            if isinstance(kind, BalanceReading):
                already = any(
                    isinstance(e.kind, BalanceReading) for e in self._injected_events
                ) or any(
                    e.get("type") == "balance_reading" for e in self._events_by_tick.get(t, [])
                )
                if already:
                    raise ValueError(f"balance_reading already present at tick {t}")
            self._injected_events.append(ev)
        self._ack(client, cmd, t)

    # -- connection handling -------------------------------------------------------

    async def _handle_conn(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        if self.client_sndbuf:
            import socket as socketmod

            sock = writer.get_extra_info("socket")
            if sock is not None:
                sock.setsockopt(socketmod.SOL_SOCKET, socketmod.SO_SNDBUF, self.client_sndbuf)
            writer.transport.set_write_buffer_limits(high=self.client_sndbuf)
        try:
            first = await reader.readline()
        except ConnectionError:
            return
        if not first:
            writer.close()
            return
        if first.startswith(b"GET "):
            transport = await _upgrade_websocket(reader, writer, first)
            if transport is None:
                return
        else:
            transport = _NdjsonTransport(reader, writer, first_line=first)

        client = _Client(transport, self.max_client_frames)
        self.clients.append(client)
        writer_task = asyncio.create_task(client.writer_loop())
        try:
            while True:
                line = await transport.read_line()
                if line is None:
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    cmd = json.loads(line)
                    if not isinstance(cmd, dict):
                        raise ValueError("message must be a JSON object")
                except (json.JSONDecodeError, ValueError) as e:
                    client.send({"type": "error", "cmd_id": None, "reason": f"malformed message: {e}"})
                    continue
                await self._cmdq.put((cmd, client))
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self.clients.remove(client)
            client.closed = True
            client.wakeup.set()
            writer_task.cancel()
            await transport.close()


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------


class _NdjsonTransport:
    def __init__(self, reader, writer, first_line: bytes = b""):
        self.reader = reader
        self.writer = writer
        self._first = first_line

    async def read_line(self):
        if self._first:
            line, self._first = self._first, b""
            return line.decode("utf-8", "replace")
        line = await self.reader.readline()
        if not line:
            return None
        return line.decode("utf-8", "replace")

    async def write_line(self, text: str):
        self.writer.write(text.encode() + b"\n")
        await self.writer.drain()

    async def close(self):
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, RuntimeError):
            pass


async def _upgrade_websocket(reader, writer, request_line: bytes):
    """Minimal RFC 6455 server handshake; returns a WS transport or None."""
    headers = {}
    while True:
        line = await reader.readline()
        if not line or line in (b"\r\n", b"\n"):
            break
        if b":" in line:
            k, v = line.split(b":", 1)
            headers[k.strip().lower()] = v.strip()
    key = headers.get(b"sec-websocket-key")
    if key is None or b"upgrade" not in headers.get(b"connection", b"").lower():
        writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        await writer.drain()
        writer.close()
        return None
    accept = base64.b64encode(hashlib.sha1(key + _WS_GUID.encode()).digest())
    writer.write(
        b"HTTP/1.1 101 Switching Protocols\r\n"
        b"Upgrade: websocket\r\n"
        b"Connection: Upgrade\r\n"
        b"Sec-WebSocket-Accept: " + accept + b"\r\n\r\n"
    )
    await writer.drain()
    return _WebSocketTransport(reader, writer)


class _WebSocketTransport:
    """Text-frame WebSocket framing over asyncio streams."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer

    async def read_line(self):
        while True:
            try:
                head = await self.reader.readexactly(2)
            except (asyncio.IncompleteReadError, ConnectionError):
                return None
            fin_opcode, len_mask = head[0], head[1]
            opcode = fin_opcode & 0x0F
            masked = bool(len_mask & 0x80)
            length = len_mask & 0x7F
            if length == 126:
                length = int.from_bytes(await self.reader.readexactly(2), "big")
            elif length == 127:
                length = int.from_bytes(await self.reader.readexactly(8), "big")
            mask = await self.reader.readexactly(4) if masked else b"\x00" * 4
            payload = bytearray(await self.reader.readexactly(length))
            if masked:
                for i in range(length):
                    payload[i] ^= mask[i % 4]
            if opcode == 0x8:  # close
                await self._send_frame(0x8, b"")
                return None
            if opcode == 0x9:  # ping
                await self._send_frame(0xA, bytes(payload))
                continue
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8", "replace")
            # ignore continuation/pong frames

    async def _send_frame(self, opcode: int, payload: bytes):
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 1 << 16:
            header += bytes([126]) + n.to_bytes(2, "big")
        else:
            header += bytes([127]) + n.to_bytes(8, "big")
        self.writer.write(header + payload)
        await self.writer.drain()

    async def write_line(self, text: str):
        await self._send_frame(0x1, text.encode())

    async def close(self):
        try:
            await self._send_frame(0x8, b"")
        except (ConnectionError, RuntimeError):
            pass
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, RuntimeError):
            pass


async def serve(
    engine: Engine,
    host: str = "127.0.0.1",
    port: int = 0,
    scenario: Scenario | None = None,
    speed: float = 10.0,
    paused: bool = False,
) -> SupervisoryServer:
    """Start a supervisory server; returns after binding (see .bound_addr)."""
    server = SupervisoryServer(engine, scenario=scenario, speed=speed, paused=paused)
    await server.start(host, port)
    return server
