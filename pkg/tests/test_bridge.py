"""Wire protocol and live-session round-trip closure."""

import io
import socket
import threading

import numpy as np
import pytest

from biteleop.bridge import (BridgeClient, decode_message, encode_message,
                             recv_frame, run_live, send_frame,
                             snapshot_message)
from biteleop.errors import ProtocolError
from biteleop.geometry import Pose, Rotation
from biteleop.runner import data_dir, load_run_config, run_replay
from biteleop.session import read_session


def frame_bytes(payload: str) -> bytes:
    data = payload.encode("ascii")
    return b"%d\n%s" % (len(data), data)


# framing

def test_frame_round_trip():
    fh = io.BytesIO(frame_bytes("hello proto=1"))
    assert recv_frame(fh) == "hello proto=1"
    assert recv_frame(fh) is None  # EOF


def test_frame_bad_length():
    with pytest.raises(ProtocolError) as err:
        recv_frame(io.BytesIO(b"abc\nxyz"))
    assert err.value.reason == "bad-frame"
    with pytest.raises(ProtocolError):
        recv_frame(io.BytesIO(b"0\n"))
    with pytest.raises(ProtocolError):
        recv_frame(io.BytesIO(b"99999999\nx"))


def test_frame_unterminated_header():
    # 40 bytes of digits with no newline exhausts the header budget
    with pytest.raises(ProtocolError):
        recv_frame(io.BytesIO(b"1" * 40))


def test_frame_truncated_payload_is_eof():
    fh = io.BytesIO(b"10\nshort")
    assert recv_frame(fh) is None


def test_message_encode_decode():
    payload = encode_message("pose", seq=3, side="right", p="1.0,2.0,3.0")
    kind, fields = decode_message(payload)
    assert kind == "pose"
    assert fields == {"seq": "3", "side": "right", "p": "1.0,2.0,3.0"}


def test_decode_rejects_bad_tokens():
    with pytest.raises(ProtocolError):
        decode_message("")
    with pytest.raises(ProtocolError):
        decode_message("pose naked-token")


# live server

def live_config(tmp_path, **overrides):
    over = {"port": 0, "duration_s": 2.0, "out": str(tmp_path)}
    over.update(overrides)
    return load_run_config(data_dir() / "runs" / "live_demo.yaml", over)


def start_live(config, tmp_path, fast=True):
    box = {}
    ready = threading.Event()

    def on_ready(port):
        box["port"] = port
        ready.set()

    def serve():
        box["result"] = run_live(config, fast=fast, out_dir=tmp_path,
                                 on_ready=on_ready)

    thread = threading.Thread(target=serve)
    thread.start()
    assert ready.wait(10.0), "bridge never came up"
    return thread, box


def test_handshake_lists_catalog(tmp_path):
    config = live_config(tmp_path)
    thread, box = start_live(config, tmp_path)
    client = BridgeClient(box["port"])
    try:
        assert "left" in client.arms and "right" in client.arms
        assert "bag-open" in client.templates
        assert "syringe" in client.templates
    finally:
        client.bye()
        client.close()
        thread.join(30.0)


def test_idle_client_still_gets_snapshots(tmp_path):
    config = live_config(tmp_path, duration_s=1.0)
    thread, box = start_live(config, tmp_path, fast=False)
    client = BridgeClient(box["port"])
    try:
        kind1, f1 = client.read()
        kind2, f2 = client.read()
        assert kind1 == kind2 == "snapshot"
        assert int(f2["seq"]) > int(f1["seq"])
        assert float(f2["clock"]) > float(f1["clock"])
        # arms hold their home pose with no commands
        assert f1["right_p"] == f2["right_p"]
        for field in ("right_p", "right_q", "right_joints", "right_wrench",
                      "left_p", "templates", "compression"):
            assert field in f1
    finally:
        client.close()
        thread.join(30.0)


def test_unknown_kind_closes_with_reason(tmp_path):
    config = live_config(tmp_path, duration_s=1.5)
    thread, box = start_live(config, tmp_path, fast=False)
    client = BridgeClient(box["port"])
    try:
        client.send_raw("warp", factor="9")
        while True:
            kind, fields = client.read()
            if kind == "error":
                break
        assert fields["reason"] == "unknown-kind"
        with pytest.raises(ConnectionError):
            for _ in range(64):
                client.read()
    finally:
        client.close()
        thread.join(30.0)


def test_bad_seq_closes(tmp_path):
    config = live_config(tmp_path, duration_s=1.5)
    thread, box = start_live(config, tmp_path, fast=False)
    client = BridgeClient(box["port"])
    try:
        pose = Pose(Rotation.identity(), np.array([0.2, -0.2, 0.0]))
        client.send_pose("right", pose)
        client.seq = 0  # next message repeats a sequence number
        client.send_pose("right", pose)
        while True:
            kind, fields = client.read()
            if kind == "error":
                break
        assert fields["reason"] == "bad-seq"
    finally:
        client.close()
        thread.join(30.0)


def test_second_client_rejected_busy(tmp_path):
    config = live_config(tmp_path, duration_s=1.5)
    thread, box = start_live(config, tmp_path, fast=False)
    first = BridgeClient(box["port"])
    try:
        sock = socket.create_connection(("127.0.0.1", box["port"]), timeout=5.0)
        fh = sock.makefile("rb")
        send_frame(sock, encode_message("hello", proto=1, client="late"))
        kind, fields = decode_message(recv_frame(fh))
        assert kind == "error" and fields["reason"] == "busy"
        sock.close()
    finally:
        first.close()
        thread.join(30.0)


def test_pedal_validation_is_protocol_level(tmp_path):
    config = live_config(tmp_path, duration_s=1.5)
    thread, box = start_live(config, tmp_path, fast=False)
    client = BridgeClient(box["port"])
    try:
        client.send_raw("pedal", pedal="clutch-right", edge="down")
        while True:
            kind, fields = client.read()
            if kind == "error":
                break
        assert fields["reason"] == "bad-frame"
    finally:
        client.close()
        thread.join(30.0)


def test_live_round_trip_replays_to_same_hashes(tmp_path):
    """A recorded live session must replay to the identical state log and
    commanded-pose stream."""
    config = live_config(tmp_path, duration_s=3.0)
    thread, box = start_live(config, tmp_path, fast=True)
    client = BridgeClient(box["port"])
    p0 = np.array([0.25, -0.3, 0.1])
    client.send_pose("right", Pose(Rotation.identity(), p0))
    client.send_pedal("right", True)
    for i in range(100):
        p = p0 + [0.0, 0.0, 0.001 * i]
        client.send_pose("right", Pose(Rotation.identity(), p))
    client.send_pedal("right", False)
    client.bye()
    client.close()
    thread.join(60.0)
    assert not thread.is_alive()

    live_metrics, _, session_path = box["result"]
    assert live_metrics["event_count"] == 103  # every sent event was applied

    events = read_session(session_path)
    replay_config = load_run_config(
        data_dir() / "runs" / "live_demo.yaml",
        {"mode": "replay", "session": str(session_path), "port": None,
         "duration_s": 3.0, "out": str(tmp_path)})
    replay_metrics, _ = run_replay(replay_config, events)
    assert replay_metrics["state_hash"] == live_metrics["state_hash"]
    assert replay_metrics["command_hash"] == live_metrics["command_hash"]
    assert replay_metrics["ticks"] == live_metrics["ticks"]
