"""Talk to the episode server over TCP, frame by frame.

The server speaks length-prefixed JSON: 4-byte big-endian length, then the
message body.  One connection is one episode (one attempt, no retries).

Run:  python3 demos/05_wire_protocol.py
"""

import json
import math
import socket
import tempfile
import threading
from pathlib import Path

from deliverysim import generate_dataset, protocol
from deliverysim.server import EpisodeServer, RunConfig

with tempfile.TemporaryDirectory() as tmp:
    generate_dataset(None, {"free": 1}, seed=21, out_dir=tmp)
    config = RunConfig(dataset=str(Path(tmp) / "free_tasks.json"), split="free",
                       seed=7, port=0, trace_dir=str(Path(tmp) / "traces"))
    with EpisodeServer(config) as server:
        thread = threading.Thread(target=server.serve, daemon=True)
        thread.start()
        print(f"server on 127.0.0.1:{server.port} (free mode: ground truth queryable)\n")

        sock = socket.create_connection(("127.0.0.1", server.port))
        msg_id = 0

        def ask(kind, **payload):
            global msg_id
            msg_id += 1
            protocol.send_message(sock, protocol.make_message(kind, msg_id, **payload))
            return protocol.read_frame(sock)

        offer = ask("hello")
        print(f"<- {offer['kind']}: {offer['directive'][0]!r}")

        assets = ask("asset_request")["assets"]
        print(f"<- asset_payload: {len(assets['obstacle_maps'])} obstacle maps, "
              f"{len(assets['panorama_samples'])} panorama samples, "
              f"{len(assets['customer_descriptions'])} customer descriptions")

        truth = ask("command", name="query_object_truth", args={})
        ox, oy, oz = truth["payload"]["pos"]
        floor = round(oy / assets["floor_height"] - 0.2)
        print(f"<- privileged object truth: {truth['payload']['object']} at "
              f"({ox:.2f}, {oy:.2f}, {oz:.2f}) on floor {floor}")

        if floor != 0:
            # Ride the elevator: stand by the door cell, then request the floor.
            door = assets["elevator_doors"]["0"]
            dx = assets["origin"][0] + (door[0] + 0.5) * assets["cell_size"]
            dz = assets["origin"][2] + (door[1] + 0.5) * assets["cell_size"]
            nav = ask("command", name="goto_target_goal",
                      args={"goal": [dx, 0.0, dz], "radius": 0.8})
            ride = ask("command", name="request_elevator", args={"target_floor": floor})
            print(f"<- elevator to floor {floor}: {ride['payload']['status']}")

        nav = ask("command", name="goto_target_goal",
                  args={"goal": [ox + 0.9, floor * assets["floor_height"], oz],
                        "radius": 0.6})
        print(f"<- goto: {nav['payload']['status']}")

        rx, _ry, rz = nav["payload"]["final_pos"]
        obs = ask("command", name="observe", args={"camera": "head"})
        yaw = math.atan2(oz - rz, ox - rx) - obs["payload"]["heading"]
        yaw = (yaw + math.pi) % (2 * math.pi) - math.pi
        obs = ask("command", name="rotate_head", args={"yaw": yaw})
        names = [e["name"] for e in obs["payload"]["entities"]][:6]
        print(f"<- observation after the head turn: {names}")

        sock.close()
        thread.join(timeout=10)
        result = server.results[0]
        print(f"\nepisode ended: success={result.success} "
              f"reason={result.failure_reason} (we only looked, never delivered)")
        trace_files = list((Path(tmp) / 'traces').glob('*.jsonl'))
        print(f"trace written: {trace_files[0].name}; free-mode traces are "
              f"rejected by the scoring tools")
