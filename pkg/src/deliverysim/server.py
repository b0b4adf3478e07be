"""Episode server: one agent connection per episode over the TCP protocol.

Message flow per episode: the agent sends ``hello`` and receives the
``task_offer`` (directives, recipient description); ``asset_request`` returns
the static scenario bundle; each ``command`` is executed inside the tick loop
and answered with exactly one ``command_result`` or ``observation_payload``;
``parse_report`` records the agent's parsed tuple.  When the episode reaches a
terminal phase the server sends ``episode_end`` with the scored result and
closes, which also enforces the no-retry rule: a connection is an attempt.

Free mode additionally answers privileged ground-truth queries; its traces
are tagged and rejected by the scoring tools.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import socket
import threading
import time
from dataclasses import dataclass

from . import protocol, robot as rb
from .engine import (FAIL_PROTOCOL, PHASE_FAILED, CommandInFlightError,
                     TerminalEpisodeError, reset_episode)
from .evaluation import EpisodeResult, evaluate_episode
from .geometry import distance3d
from .trace import TraceWriter, read_trace
from .world import load_world

logger = logging.getLogger(__name__)

PRIVILEGED_COMMANDS = ("query_object_truth", "query_npc_truth", "query_task_truth")


@dataclass
class RunConfig:
    dataset: str
    world: str | None = None
    split: str = "val"
    seed: int = 7
    port: int = protocol.DEFAULT_PORT
    host: str = "127.0.0.1"
    accel: float = 0.0  # ticks-per-real-time multiple; 0 = as fast as possible
    trace_dir: str = "traces"
    agent_timeout_s: float = 60.0
    task_limit: int | None = None
    annotations: str | None = None

    def load_tasks(self) -> list[dict]:
        with open(self.dataset, "r", encoding="utf-8") as fh:
            tasks = json.load(fh)
        if not isinstance(tasks, list):
            raise ValueError("dataset must be a JSON array of task records")
        if self.task_limit is not None:
            tasks = tasks[: self.task_limit]
        return tasks

    def load_annotations(self) -> tuple[dict, dict]:
        if self.annotations is None:
            guess = self.dataset.replace("_tasks.json", "_annotations.json")
            if guess != self.dataset and os.path.exists(guess):
                self.annotations = guess
        if self.annotations is None:
            return {}, {}
        with open(self.annotations, "r", encoding="utf-8") as fh:
            blob = json.load(fh)
        return blob.get("tasks", {}), blob.get("synonyms", {})


class _Reader(threading.Thread):
    """Feeds parsed frames (or the close sentinel) into a queue."""

    def __init__(self, sock: socket.socket, inbox: queue.Queue):
        super().__init__(daemon=True)
        self.sock = sock
        self.inbox = inbox

    def run(self):
        while True:
            try:
                message = protocol.read_frame(self.sock)
            except (protocol.ConnectionClosed, protocol.ProtocolError, OSError) as exc:
                self.inbox.put(exc)
                return
            self.inbox.put(message)


class EpisodeServer:
    """Runs the dataset's episodes sequentially, one connection each."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.tasks = config.load_tasks()
        self.truths, self.synonyms = config.load_annotations()
        self.world_source = config.world
        self.free_mode = config.split == "free"
        self._world_cfg = load_world(self.world_source).config
        self._listener: socket.socket | None = None
        self.results: list[EpisodeResult] = []
        os.makedirs(config.trace_dir, exist_ok=True)

    # -- lifecycle ---------------------------------------------------------

    def __enter__(self):
        self._listener = socket.create_server(
            (self.config.host, self.config.port), reuse_port=False)
        self._listener.settimeout(300.0)
        return self

    def __exit__(self, *exc):
        if self._listener is not None:
            self._listener.close()
            self._listener = None

    @property
    def port(self) -> int:
        return self._listener.getsockname()[1]

    def serve(self) -> list[EpisodeResult]:
        """Accept one connection per task; returns the per-episode results."""
        assert self._listener is not None, "use 'with EpisodeServer(...) as srv'"
        for task in self.tasks:
            conn, peer = self._listener.accept()
            logger.info("episode %s: agent connected from %s", task["task_id"], peer)
            try:
                result = self._run_episode(conn, task)
            finally:
                conn.close()
            self.results.append(result)
        self._write_results()
        return self.results

    def _write_results(self):
        path = os.path.join(self.config.trace_dir, "results.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump([r.to_wire() for r in self.results], fh, indent=1)
            fh.write("\n")

    # -- one episode ---------------------------------------------------------

    def _run_episode(self, conn: socket.socket, task: dict) -> EpisodeResult:
        cfg = self.config
        trace_path = os.path.join(cfg.trace_dir, f"{task['task_id']}.jsonl")
        episode = reset_episode(self._world_cfg, task, cfg.seed,
                                trace=TraceWriter(trace_path), free_mode=self.free_mode)
        inbox: queue.Queue = queue.Queue()
        _Reader(conn, inbox).start()
        out_id = 0
        last_in_id = 0

        def send(kind: str, **payload):
            nonlocal out_id
            out_id += 1
            protocol.send_message(conn, protocol.make_message(kind, out_id, **payload))

        def fail_protocol(msg: str):
            logger.warning("episode %s: protocol failure: %s", task["task_id"], msg)
            episode._terminate(PHASE_FAILED, FAIL_PROTOCOL)

        # Handshake: first frame must be a valid hello.
        try:
            first = inbox.get(timeout=cfg.agent_timeout_s)
            if isinstance(first, Exception):
                raise protocol.ProtocolError(f"connection lost before hello: {first}")
            last_in_id = protocol.validate_client_message(first, last_in_id)
            if first.get("kind") != "hello":
                raise protocol.ProtocolError(f"expected hello, got {first.get('kind')!r}")
        except (queue.Empty, protocol.ProtocolError) as exc:
            try:
                send("error", error=str(exc))
            except OSError:
                pass
            fail_protocol(str(exc))
            return self._finish(episode, conn, send_end=False)

        send("task_offer",
             task_id=task["task_id"],
             directive=task["directive"],
             npc_description=task["npc_description"],
             time=task["time"],
             split=cfg.split,
             budget_ticks=episode.budget)

        while episode.running:
            try:
                message = inbox.get(timeout=cfg.agent_timeout_s)
            except queue.Empty:
                fail_protocol(f"agent idle for {cfg.agent_timeout_s}s")
                break
            if isinstance(message, Exception):
                fail_protocol(f"connection error: {message}")
                break
            try:
                last_in_id = protocol.validate_client_message(message, last_in_id)
            except protocol.ProtocolError as exc:
                send("error", error=str(exc))
                fail_protocol(str(exc))
                break
            kind = message.get("kind")
            if kind == "asset_request":
                send("asset_payload", re=message["id"], assets=rb.get_scenario_assets(episode.world))
            elif kind == "parse_report":
                episode.note_parse_report(message.get("tuple", {}))
                send("command_result", re=message["id"], cmd="parse_report",
                     payload={"status": "accepted"})
            elif kind == "command":
                self._handle_command(episode, message, send, inbox)
            else:
                send("error", re=message.get("id"), error=f"unknown message kind {kind!r}")

        return self._finish(episode, conn, send_fn=send)

    def _handle_command(self, episode, message: dict, send, inbox: queue.Queue):
        name = message.get("name")
        if name in PRIVILEGED_COMMANDS:
            if not self.free_mode:
                send("error", re=message["id"],
                     error="privileged query refused outside free mode")
                return
            episode.note_privileged(name)
            send("command_result", re=message["id"], cmd=name, privileged=True,
                 payload=self._privileged_payload(episode, name, message))
            return
        try:
            cmd = rb.command_from_wire(message)
        except ValueError as exc:
            send("error", re=message["id"], error=str(exc))
            return
        try:
            cmd_id = episode.issue(cmd)
        except CommandInFlightError:
            send("error", re=message["id"], error="a command is already in flight")
            return
        except TerminalEpisodeError:
            send("error", re=message["id"], error="episode already ended")
            return
        # Tick until this command's result is available.  Frames that arrive
        # while we are still executing violate the one-in-flight rule if they
        # are commands; other kinds are held back and processed afterwards.
        pace = self.config.accel
        wall_per_tick = (episode.world.tick_dt / pace) if pace > 0 else 0.0
        held: list = []
        while episode.running:
            env = episode.pop_result()
            if env is not None:
                break
            self._check_inflight(send, inbox, held)
            episode.step()
            if wall_per_tick:
                time.sleep(wall_per_tick)
        else:
            env = episode.pop_result()
        if env is not None:
            self._send_result(send, message["id"], env)
        for msg in held:
            inbox.put(msg)

    def _check_inflight(self, send, inbox: queue.Queue, held: list):
        while True:
            try:
                msg = inbox.get_nowait()
            except queue.Empty:
                return
            if isinstance(msg, Exception) or msg.get("kind") != "command":
                held.append(msg)
                continue
            send("error", re=msg.get("id"),
                 error="command sent while another was in flight")

    def _privileged_payload(self, episode, name: str, message: dict) -> dict:
        world = episode.world
        task = episode.task
        if name == "query_object_truth":
            target = message.get("object", task["target_object_name"])
            item = world.items.get(target)
            if item is None:
                return {"error": f"unknown object {target!r}"}
            return {"object": item.name, "pos": item.pos.as_list(), "holder": item.holder}
        if name == "query_npc_truth":
            npc = world.npcs.get(message.get("npc_id", task["npc_id"]))
            if npc is None:
                return {"error": "unknown npc"}
            return {"npc_id": npc.profile.npc_id, "pos": npc.pos.as_list(),
                    "floor": npc.floor, "action": npc.action,
                    "robot_distance": distance3d(world.robot.pos, npc.pos)}
        truth = self.truths.get(task["task_id"])
        return {"task_id": task["task_id"], "tuple": truth,
                "target_object_name": task["target_object_name"],
                "robot_pos": world.robot.pos.as_list(), "robot_floor": world.robot.floor}

    def _send_result(self, send, request_id: int, env):
        if env.kind == "observation":
            send("observation_payload", re=request_id, payload=env.payload.to_wire())
        elif env.kind == "error":
            send("error", re=request_id, **env.payload)
        else:
            payload = env.payload.to_wire() if hasattr(env.payload, "to_wire") else env.payload
            send("command_result", re=request_id, cmd=env.kind, payload=payload)

    def _finish(self, episode, conn: socket.socket, send_fn=None, send_end=True) -> EpisodeResult:
        if episode.running:
            episode._terminate(PHASE_FAILED, FAIL_PROTOCOL)
        episode.finish_trace()
        trace = read_trace(os.path.join(self.config.trace_dir,
                                        f"{episode.task['task_id']}.jsonl"))
        truth = self.truths.get(episode.task["task_id"])
        result = evaluate_episode(trace, truth, self.synonyms)
        if send_fn is not None and send_end:
            try:
                send_fn("episode_end", result=result.to_wire(), phase=episode.phase,
                        reason=episode.fail_reason)
            except OSError:
                pass
        return result
