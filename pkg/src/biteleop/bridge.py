"""TCP bridge between the control loop and an operator console.

Wire format: every message is one ASCII frame, a decimal byte count and
a newline followed by exactly that many payload bytes. Payloads are
``kind key=value ...`` with comma-separated floats inside values, so the
whole exchange can be read in a packet dump.

The first client frame must be ``hello proto=1 ...``; the server answers
with its template catalog and arm names. After that the client streams
pose samples, pedal edges, template requests, and coupling toggles, each
carrying a strictly increasing ``seq``. The server streams sequence-
numbered state snapshots. Unknown kinds or sequence violations close the
connection with an ``error reason=...`` frame first.

Threading: the control loop owns the engine. A reader thread parses
client frames into a bounded inbound queue the loop drains at tick
start; snapshots go out through a drop-oldest deque serviced by a writer
thread. The loop never blocks on the network.
"""

from __future__ import annotations

import queue
import socket
import threading
import time
from collections import deque
from pathlib import Path

import numpy as np

from .errors import ProtocolError, TeleopError
from .geometry import Pose, Rotation
from .runner import Engine, RunConfig
from .session import (CouplingToggle, PedalEdgeEvent, PoseSample,
                      SessionWriter, TemplateSelect)

PROTO_VERSION = 1
MAX_FRAME = 1 << 20
INBOUND_LIMIT = 1024
SNAPSHOT_BACKLOG = 8


def send_frame(sock: socket.socket, payload: str) -> None:
    data = payload.encode("ascii")
    sock.sendall(b"%d\n%s" % (len(data), data))


def recv_frame(fh) -> str | None:
    """Read one frame from a file-like socket wrapper; None on EOF."""
    header = fh.readline(32)
    if not header:
        return None
    if not header.endswith(b"\n"):
        raise ProtocolError("bad-frame", "unterminated length header")
    try:
        length = int(header[:-1])
    except ValueError:
        raise ProtocolError("bad-frame", "non-numeric length %r" % header)
    if not 0 < length <= MAX_FRAME:
        raise ProtocolError("bad-frame", "length %d out of range" % length)
    data = fh.read(length)
    if data is None or len(data) != length:
        return None
    return data.decode("ascii")


def encode_message(kind: str, **fields) -> str:
    parts = [kind]
    for key, value in fields.items():
        parts.append("%s=%s" % (key, value))
    return " ".join(parts)


def decode_message(payload: str) -> tuple[str, dict]:
    tokens = payload.split()
    if not tokens:
        raise ProtocolError("bad-frame", "empty payload")
    fields = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ProtocolError("bad-frame", "expected key=value, got %r" % tok)
        key, _, value = tok.partition("=")
        fields[key] = value
    return tokens[0], fields


def _csv(values) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(values).ravel())


def _parse_csv(text: str, count: int) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != count:
        raise ProtocolError("bad-frame", "expected %d floats, got %d"
                            % (count, len(parts)))
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ProtocolError("bad-frame", "bad float in %r" % text)


def snapshot_message(snap, seq: int) -> str:
    """Self-contained state snapshot; a client can render from any one."""
    fields = {"seq": seq, "clock": repr(snap.clock), "tick": snap.tick}
    for side in sorted(snap.arms):
        arm = snap.arms[side]
        fields["%s_p" % side] = _csv(arm.ee.position)
        fields["%s_q" % side] = _csv(arm.ee.rotation.q)
        fields["%s_joints" % side] = _csv(arm.q)
        fields["%s_wrench" % side] = _csv(arm.wrench.vector())
    templates = ",".join("%s:%s" % (s, snap.hand_templates.get(s, "none"))
                         for s in sorted(snap.arms))
    fields["templates"] = templates
    fields["compression"] = repr(snap.bag_compression)
    fields["needle_dev"] = repr(snap.needle_deviation)
    fields["needle_inc"] = repr(snap.needle_incidence)
    return encode_message("snapshot", **fields)


class _ClientSession:
    """One connected console: reader thread, writer thread, queues."""

    def __init__(self, sock: socket.socket, server: "BridgeServer"):
        self.sock = sock
        self.server = server
        self.inbound = queue.Queue(maxsize=INBOUND_LIMIT)
        self.outbound = deque(maxlen=SNAPSHOT_BACKLOG)
        self.out_ready = threading.Condition()
        self.send_lock = threading.Lock()
        self.ready = threading.Event()  # handshake done, snapshots may flow
        self.closed = threading.Event()
        self.last_seq = 0
        self.reader = threading.Thread(target=self._read_loop, daemon=True)
        self.writer = threading.Thread(target=self._write_loop, daemon=True)

    def start(self):
        self.reader.start()
        self.writer.start()

    def push_snapshot(self, payload: str) -> None:
        if not self.ready.is_set():
            return
        with self.out_ready:
            self.outbound.append(payload)  # deque drops oldest when full
            self.out_ready.notify()

    def close(self, reason: str | None = None) -> None:
        if self.closed.is_set():
            return
        if reason is not None:
            try:
                with self.send_lock:
                    send_frame(self.sock, encode_message("error", reason=reason))
            except OSError:
                pass
        self.closed.set()
        with self.out_ready:
            self.out_ready.notify()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

    def _check_seq(self, fields) -> None:
        try:
            seq = int(fields.get("seq", ""))
        except ValueError:
            raise ProtocolError("bad-seq", "missing or non-numeric seq")
        if seq <= self.last_seq:
            raise ProtocolError(
                "bad-seq", "seq %d not above %d" % (seq, self.last_seq))
        self.last_seq = seq

    def _read_loop(self):
        fh = self.sock.makefile("rb")
        try:
            payload = recv_frame(fh)
            if payload is None:
                return
            kind, fields = decode_message(payload)
            if kind != "hello":
                raise ProtocolError("expected-hello")
            if fields.get("proto") != str(PROTO_VERSION):
                raise ProtocolError("unsupported-proto")
            with self.send_lock:
                send_frame(self.sock, encode_message(
                    "hello", proto=PROTO_VERSION,
                    templates=",".join(self.server.template_names),
                    arms=",".join(self.server.arm_names)))
            self.ready.set()
            while not self.closed.is_set():
                payload = recv_frame(fh)
                if payload is None:
                    break
                kind, fields = decode_message(payload)
                if kind == "bye":
                    break
                event = self._to_event(kind, fields)
                # bounded: stop reading (TCP backpressure) until the
                # control loop drains, or the session closes
                while not self.closed.is_set():
                    try:
                        self.inbound.put(event, timeout=0.1)
                        break
                    except queue.Full:
                        continue
        except ProtocolError as exc:
            self.close(exc.reason)
        except OSError:
            pass
        finally:
            self.close()

    def _to_event(self, kind: str, fields: dict):
        """Validate an inbound message; returns an event builder taking
        the sim clock, so events are stamped when the loop applies them."""
        self._check_seq(fields)
        if kind == "pose":
            side = fields.get("side", "")
            p = _parse_csv(fields.get("p", ""), 3)
            q = _parse_csv(fields.get("q", ""), 4)
            pose = Pose(Rotation.from_quat(q), p)
            return lambda t: PoseSample(t, side, pose)
        if kind == "pedal":
            pedal = fields.get("pedal", "")
            edge = fields.get("edge", "")
            if pedal not in ("left", "right"):
                raise ProtocolError("bad-frame", "pedal %r" % pedal)
            if edge not in ("down", "up"):
                raise ProtocolError("bad-frame", "pedal edge %r" % edge)
            return lambda t: PedalEdgeEvent(t, pedal, edge == "down")
        if kind == "template":
            side = fields.get("side", "")
            name = fields.get("name", "")
            return lambda t: TemplateSelect(t, side, name)
        if kind == "coupling":
            return lambda t: CouplingToggle(t)
        raise ProtocolError("unknown-kind", "inbound kind %r" % kind)

    def _write_loop(self):
        try:
            while not self.closed.is_set():
                with self.out_ready:
                    while not self.outbound and not self.closed.is_set():
                        self.out_ready.wait(0.1)
                    if self.closed.is_set():
                        return
                    payload = self.outbound.popleft()
                with self.send_lock:
                    send_frame(self.sock, payload)
        except OSError:
            self.close()


class BridgeServer:
    """Accepts one console at a time and shuttles frames for it."""

    def __init__(self, port: int, template_names, arm_names):
        self.template_names = list(template_names)
        self.arm_names = list(arm_names)
        self.listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.listener.bind(("127.0.0.1", port))
        self.listener.listen(1)
        self.port = self.listener.getsockname()[1]
        self.client: _ClientSession | None = None
        self._lock = threading.Lock()
        self._stopping = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)
        self._accept_thread.start()

    def _accept_loop(self):
        while not self._stopping.is_set():
            try:
                sock, _ = self.listener.accept()
            except OSError:
                return
            session = _ClientSession(sock, self)
            with self._lock:
                if self.client is not None and not self.client.closed.is_set():
                    session.close("busy")
                    continue
                self.client = session
            session.start()

    def drain_inbound(self) -> list:
        with self._lock:
            client = self.client
        if client is None:
            return []
        builders = []
        while True:
            try:
                builders.append(client.inbound.get_nowait())
            except queue.Empty:
                return builders

    def publish(self, snap, seq: int) -> None:
        with self._lock:
            client = self.client
        if client is not None and not client.closed.is_set():
            client.push_snapshot(snapshot_message(snap, seq))

    def close(self):
        self._stopping.set()
        self.listener.close()
        with self._lock:
            client = self.client
        if client is not None:
            client.close()


def run_live(config: RunConfig, duration_s: float | None = None,
             fast: bool = False, out_dir=None, on_ready=None,
             engine: Engine | None = None) -> tuple[dict, Engine, Path]:
    """Serve a live session and record every applied event.

    ``duration_s`` bounds the run (falling back to the config duration,
    then 60 s). ``fast`` skips wall-clock pacing, for tests.
    ``on_ready(port)`` fires once the socket is listening. The recorded
    log replays to the same hashes as the live run.
    """
    if engine is None:
        engine = Engine(config)
    server = BridgeServer(config.port, engine.library.names(),
                          sorted(engine.arms))
    out_dir = Path(out_dir) if out_dir is not None else (
        config.out if config.out is not None else Path.cwd())
    out_dir.mkdir(parents=True, exist_ok=True)
    session_path = out_dir / ("%s_live.txt" % config.name)

    if duration_s is None:
        duration_s = config.duration_s if config.duration_s is not None else 60.0
    ticks = max(1, int(round(duration_s * config.rate_hz)))
    snap_seq = 0

    try:
        if on_ready is not None:
            on_ready(server.port)
        with SessionWriter(session_path) as log:
            next_wall = time.monotonic()
            for _ in range(ticks):
                t_clock = engine.world.clock
                events = []
                for build in server.drain_inbound():
                    events.append(build(t_clock))
                for ev in events:
                    log.write(ev)
                engine.feed(events)
                snap, _ = engine.tick()
                if engine.world.tick % config.snapshot_stride == 0:
                    snap_seq += 1
                    server.publish(snap, snap_seq)
                if not fast:
                    next_wall += config.dt
                    delay = next_wall - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
    finally:
        server.close()
    return engine.metrics(), engine, session_path


class BridgeClient:
    """Minimal scripted console, used by tests and demos."""

    def __init__(self, port: int, name: str = "scripted", timeout: float = 5.0):
        self.sock = socket.create_connection(("127.0.0.1", port),
                                             timeout=timeout)
        self.fh = self.sock.makefile("rb")
        self.seq = 0
        send_frame(self.sock, encode_message("hello", proto=PROTO_VERSION,
                                             client=name))
        kind, fields = self.read()
        if kind != "hello":
            raise TeleopError("handshake failed: got %r" % kind)
        self.templates = [t for t in fields.get("templates", "").split(",") if t]
        self.arms = [a for a in fields.get("arms", "").split(",") if a]

    def read(self) -> tuple[str, dict]:
        payload = recv_frame(self.fh)
        if payload is None:
            raise ConnectionError("bridge closed the connection")
        return decode_message(payload)

    def _send(self, kind: str, **fields):
        self.seq += 1
        send_frame(self.sock, encode_message(kind, seq=self.seq, **fields))

    def send_pose(self, side: str, pose: Pose):
        self._send("pose", side=side, p=_csv(pose.position),
                   q=_csv(pose.rotation.q))

    def send_pedal(self, pedal: str, down: bool):
        self._send("pedal", pedal=pedal, edge="down" if down else "up")

    def send_template(self, side: str, name: str):
        self._send("template", side=side, name=name)

    def send_coupling(self):
        self._send("coupling")

    def send_raw(self, kind: str, **fields):
        self._send(kind, **fields)

    def bye(self):
        self._send("bye")

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass
