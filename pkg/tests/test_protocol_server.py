import json
import socket
import struct
import threading
import time

import pytest

from deliverysim import protocol
from deliverysim.server import EpisodeServer, RunConfig
from deliverysim.trace import read_trace
from tests.conftest import REFERENCE_TASK


# -- framing ------------------------------------------------------------------


def test_frame_layout():
    frame = protocol.encode_frame({"a": 1})
    length = struct.unpack(">I", frame[:4])[0]
    assert length == len(frame) - 4
    assert json.loads(frame[4:]) == {"a": 1}


def test_frame_round_trip_over_socketpair():
    a, b = socket.socketpair()
    try:
        protocol.send_message(a, protocol.make_message("hello", 1))
        msg = protocol.read_frame(b)
        assert msg == {"v": 1, "id": 1, "kind": "hello"}
    finally:
        a.close()
        b.close()


def test_oversized_frame_rejected():
    a, b = socket.socketpair()
    try:
        a.sendall(struct.pack(">I", protocol.MAX_FRAME + 1))
        with pytest.raises(protocol.ProtocolError, match="cap"):
            protocol.read_frame(b)
    finally:
        a.close()
        b.close()


def test_monotone_ids_enforced():
    protocol.validate_client_message({"v": 1, "id": 5}, 4)
    with pytest.raises(protocol.ProtocolError, match="monotone"):
        protocol.validate_client_message({"v": 1, "id": 5}, 5)


def test_version_mismatch_detected():
    with pytest.raises(protocol.ProtocolError, match="version"):
        protocol.validate_client_message({"v": 99, "id": 1}, 0)


# -- server ---------------------------------------------------------------------


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=30)
        self.sock.settimeout(30)
        self.mid = 0

    def send(self, kind, **payload):
        self.mid += 1
        protocol.send_message(self.sock, protocol.make_message(kind, self.mid, **payload))

    def read(self):
        return protocol.read_frame(self.sock)

    def ask(self, kind, **payload):
        self.send(kind, **payload)
        return self.read()

    def close(self):
        self.sock.close()


@pytest.fixture()
def server_env(tmp_path):
    def start(split="val", tasks=None, timeout=15.0, seed=7, accel=0.0):
        dataset = tmp_path / "tasks.json"
        dataset.write_text(json.dumps(tasks or [REFERENCE_TASK]))
        config = RunConfig(dataset=str(dataset), split=split, seed=seed, port=0,
                           trace_dir=str(tmp_path / "traces"), agent_timeout_s=timeout,
                           accel=accel)
        server = EpisodeServer(config).__enter__()
        results = []
        thread = threading.Thread(target=lambda: results.extend(server.serve()), daemon=True)
        thread.start()
        return server, thread, results

    made = []

    def factory(**kw):
        out = start(**kw)
        made.append(out)
        return out

    yield factory
    for server, thread, _ in made:
        server.__exit__(None, None, None)
        thread.join(timeout=5)


def test_handshake_and_task_offer(server_env):
    server, thread, results = server_env()
    client = Client(server.port)
    offer = client.ask("hello")
    assert offer["kind"] == "task_offer"
    assert offer["task_id"] == REFERENCE_TASK["task_id"]
    assert offer["directive"] == REFERENCE_TASK["directive"]
    assert "Imani" in offer["npc_description"]
    client.close()
    thread.join(timeout=10)
    assert results and results[0].failure_reason == "protocol_error"


def test_version_mismatch_fails_handshake(server_env):
    server, thread, results = server_env()
    client = Client(server.port)
    protocol.send_message(client.sock, {"v": 42, "id": 1, "kind": "hello"})
    reply = client.read()
    assert reply["kind"] == "error"
    assert "version" in reply["error"]
    client.close()
    thread.join(timeout=10)
    assert results[0].failure_reason == "protocol_error"


def test_unknown_kind_gets_error_and_episode_continues(server_env):
    server, thread, _results = server_env()
    client = Client(server.port)
    client.ask("hello")
    reply = client.ask("teleport")
    assert reply["kind"] == "error"
    obs = client.ask("command", name="observe", args={"camera": "head"})
    assert obs["kind"] == "observation_payload"
    client.close()
    thread.join(timeout=10)


def test_idle_agent_times_out_as_protocol_error(server_env):
    server, thread, results = server_env(timeout=0.3)
    client = Client(server.port)
    client.ask("hello")
    end = client.read()  # no commands: the wall-clock guard fires
    assert end["kind"] == "episode_end"
    assert end["result"]["failure_reason"] == "protocol_error"
    client.close()
    thread.join(timeout=10)
    assert results[0].failure_reason == "protocol_error"


def test_privileged_query_refused_when_scored(server_env):
    server, thread, _results = server_env(split="val")
    client = Client(server.port)
    client.ask("hello")
    reply = client.ask("command", name="query_object_truth", args={})
    assert reply["kind"] == "error"
    assert "privileged" in reply["error"]
    client.close()
    thread.join(timeout=10)


def test_privileged_query_answered_in_free_mode_and_trace_tagged(server_env, tmp_path):
    server, thread, _results = server_env(split="free")
    client = Client(server.port)
    client.ask("hello")
    reply = client.ask("command", name="query_object_truth", args={})
    assert reply["kind"] == "command_result"
    assert reply["privileged"] is True
    assert reply["payload"]["object"] == "WaterBottle_Blue_1"
    client.close()
    thread.join(timeout=10)
    trace = read_trace(str(tmp_path / "traces" / f"{REFERENCE_TASK['task_id']}.jsonl"))
    assert trace.mode == "free"
    assert any(ev.get("e") == "privileged"
               for rec in trace.ticks + ([trace.end] if trace.end else [])
               for ev in rec.get("ev", ()))


def test_free_mode_traces_rejected_by_scoring(server_env, tmp_path):
    from deliverysim.cli import _score_traces

    server, thread, _results = server_env(split="free", timeout=0.3)
    client = Client(server.port)
    client.ask("hello")
    client.read()  # episode_end via timeout
    client.close()
    thread.join(timeout=10)
    results, rejected = _score_traces(str(tmp_path / "traces"), None)
    assert rejected == 1
    assert results == []


def test_second_command_in_flight_gets_error(server_env):
    # Pacing (accel) makes execution take real time, so the second frame
    # reliably arrives while the first command is still in flight.
    server, thread, _results = server_env(accel=200.0)
    client = Client(server.port)
    client.ask("hello")
    client.send("command", name="goto_target_goal",
                args={"goal": [-33.0, 0.0, -11.0], "radius": 0.5})
    time.sleep(0.1)
    client.send("command", name="observe", args={"camera": "head"})
    first = client.read()
    second = client.read()
    kinds = {first["kind"], second["kind"]}
    assert kinds == {"error", "command_result"}
    err = first if first["kind"] == "error" else second
    assert "in flight" in err["error"]
    client.close()
    thread.join(timeout=10)


def test_server_replies_deterministic_across_connections(server_env, tmp_path):
    # The same message script against the same task and seed yields
    # byte-identical replies.
    tasks = [REFERENCE_TASK, REFERENCE_TASK]
    server, thread, _results = server_env(tasks=tasks)

    def run_script():
        client = Client(server.port)
        replies = []
        replies.append(client.ask("hello"))
        replies.append(client.ask("asset_request"))
        replies.append(client.ask("command", name="observe", args={"camera": "head"}))
        replies.append(client.ask("command", name="goto_target_goal",
                                  args={"goal": [-5.0, 0.0, 0.0], "radius": 0.5}))
        replies.append(client.ask("command", name="rotate_head", args={"yaw": 1.5}))
        client.close()
        return json.dumps(replies, sort_keys=True)

    a = run_script()
    b = run_script()
    assert a == b
    thread.join(timeout=10)


def test_full_delivery_over_the_wire(server_env):
    import math

    server, thread, results = server_env(split="free")
    client = Client(server.port)
    client.ask("hello")
    client.ask("parse_report", tuple={"obj": "blue water bottle",
                                      "recep_obj": "dining table",
                                      "room_obj": "kitchen", "npc": "Imani",
                                      "room_npc": "kitchen"})
    nav = client.ask("command", name="goto_target_goal",
                     args={"goal": [-17.625, 0.0, -5.375], "radius": 0.1})
    assert nav["payload"]["status"] == "arrived"
    # Aim the head at the bottle using proprioception plus the truth query.
    truth = client.ask("command", name="query_object_truth", args={})
    ox, _oy, oz = truth["payload"]["pos"]
    obs = client.ask("command", name="observe", args={"camera": "head"})
    rx, _ry, rz = nav["payload"]["final_pos"]
    yaw = math.atan2(oz - rz, ox - rx) - obs["payload"]["heading"]
    yaw = (yaw + math.pi) % (2 * math.pi) - math.pi
    obs = client.ask("command", name="rotate_head", args={"yaw": yaw})
    ref = next(e["entity_ref"] for e in obs["payload"]["entities"]
               if e["name"] == "WaterBottle_Blue_1")
    grasp = client.ask("command", name="object_interaction",
                       args={"manipulation": "grasp", "target_ref": ref})
    assert grasp["payload"]["status"] == "grasped"
    npc = client.ask("command", name="query_npc_truth", args={})
    nx, _ny, nz = npc["payload"]["pos"]
    nav = client.ask("command", name="goto_target_goal",
                     args={"goal": [nx + 1.0, 0.0, nz + 0.5], "radius": 0.4})
    assert nav["payload"]["status"] == "arrived"
    fx, _fy, fz = nav["payload"]["final_pos"]
    place = client.ask("command", name="object_interaction",
                       args={"manipulation": "place", "floor_pos": [fx, fz]})
    assert place["payload"]["status"] == "placed"
    end = client.read()
    assert end["kind"] == "episode_end"
    assert end["result"]["success"] is True
    client.close()
    thread.join(timeout=10)
    assert results[0].success
    assert results[0].parsing_correct is None  # free mode has no annotations
