"""Operator command line: gen / serve / eval / replay / bench.

The PRS_SEED environment variable overrides --seed everywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import subprocess
import sys
import time

from . import protocol
from .evaluation import aggregate, load_results, render_metrics_table, save_results
from .trace import read_trace, replay_trace
from .world import load_world


def _seed_from(args) -> int:
    env = os.environ.get("PRS_SEED")
    return int(env) if env else args.seed


def _cmd_gen(args) -> int:
    from .taskgen import generate_dataset

    spec: dict[str, int] = {}
    if args.split_spec:
        for part in args.split_spec.split(","):
            name, _, count = part.partition("=")
            if not count:
                print(f"bad --split-spec entry {part!r}; use name=count", file=sys.stderr)
                return 2
            spec[name.strip()] = int(count)
    else:
        spec[args.split] = args.tasks
    manifest = generate_dataset(args.world, spec, _seed_from(args), args.out)
    for split, info in sorted(manifest["splits"].items()):
        print(f"{split}: {info['tasks']} tasks, {info['instructions']} instructions, "
              f"{info['scene_count']} scenes, {info['object_category_count']} object categories")
    print(f"total instructions: {manifest['total_instructions']}")
    print(f"written to {args.out}/")
    return 0


def _cmd_serve(args) -> int:
    from .server import EpisodeServer, RunConfig

    config = RunConfig(
        dataset=args.dataset, world=args.world, split=args.split,
        seed=_seed_from(args), port=args.port, host=args.host, accel=args.accel,
        trace_dir=args.trace_dir, agent_timeout_s=args.timeout,
        task_limit=args.limit, annotations=args.annotations)
    with EpisodeServer(config) as server:
        print(f"serving {len(server.tasks)} episodes on {config.host}:{server.port} "
              f"(split={config.split})")
        results = server.serve()
    table = aggregate(results)
    print(render_metrics_table(table, label=f"agent@{config.split}"))
    return 0


def _score_traces(trace_dir: str, annotations: str | None):
    from .evaluation import evaluate_episode

    truths, synonyms = {}, {}
    if annotations:
        with open(annotations, "r", encoding="utf-8") as fh:
            blob = json.load(fh)
        truths, synonyms = blob.get("tasks", {}), blob.get("synonyms", {})
    results = []
    rejected = 0
    for name in sorted(os.listdir(trace_dir)):
        if not name.endswith(".jsonl"):
            continue
        trace = read_trace(os.path.join(trace_dir, name))
        if trace.mode == "free":
            rejected += 1
            continue
        truth = truths.get(trace.task.get("task_id"))
        results.append(evaluate_episode(trace, truth, synonyms))
    return results, rejected


def _cmd_eval(args) -> int:
    if args.results:
        results = load_results(args.results)
        rejected = 0
    elif args.traces:
        results, rejected = _score_traces(args.traces, args.annotations)
    elif args.agent_cmd:
        return _eval_with_agent(args)
    else:
        print("eval needs --results, --traces, or --agent-cmd", file=sys.stderr)
        return 2
    if rejected:
        print(f"rejected {rejected} free-mode trace(s): not scoreable")
    if not results:
        print("no scoreable episodes found", file=sys.stderr)
        return 1
    table = aggregate(results)
    print(render_metrics_table(table, label=args.label))
    if args.out:
        save_results(results, os.path.join(args.out, "results.json"))
        with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as fh:
            json.dump(table.to_wire(), fh, indent=1)
            fh.write("\n")
        print(f"wrote {args.out}/results.json and {args.out}/metrics.json")
    return 0


def _eval_with_agent(args) -> int:
    """Run an agent binary against every task, then score the traces."""
    from .server import EpisodeServer, RunConfig
    import threading

    config = RunConfig(
        dataset=args.dataset, world=args.world, split=args.split,
        seed=_seed_from(args), port=args.port, trace_dir=args.traces or "traces",
        agent_timeout_s=args.timeout, task_limit=args.limit,
        annotations=args.annotations)
    agent_argv = shlex.split(args.agent_cmd)
    with EpisodeServer(config) as server:
        port = server.port
        done: list = []

        def serve():
            done.append(server.serve())

        thread = threading.Thread(target=serve, daemon=True)
        thread.start()
        env = dict(os.environ, DELIVERYSIM_HOST=config.host, DELIVERYSIM_PORT=str(port))
        for _ in range(len(server.tasks)):
            proc = subprocess.run(agent_argv, env=env)
            if proc.returncode != 0:
                print(f"agent exited with {proc.returncode}", file=sys.stderr)
        thread.join(timeout=config.agent_timeout_s * len(server.tasks))
    results = done[0] if done else server.results
    if not results:
        print("no episodes completed", file=sys.stderr)
        return 1
    table = aggregate(results)
    print(render_metrics_table(table, label=args.label))
    return 0


def _cmd_replay(args) -> int:
    trace = read_trace(args.trace)
    result = replay_trace(trace, args.world)
    if result.ok:
        print(f"OK, hashes match ({result.ticks_checked} ticks verified)")
        return 0
    print(f"REPLAY MISMATCH: {result.message}")
    return 1


def _cmd_bench(args) -> int:
    from .engine import reset_episode, tick_budget
    from .taskgen import generate_dataset
    import tempfile

    world = load_world(args.world)
    with tempfile.TemporaryDirectory() as tmp:
        manifest = generate_dataset(args.world, {"bench": 1}, _seed_from(args), tmp)
        with open(os.path.join(tmp, manifest["splits"]["bench"]["tasks_file"])) as fh:
            task = json.load(fh)[0]
    episode = reset_episode(args.world, task, _seed_from(args))
    budget = tick_budget(world.tick_dt)
    start = time.perf_counter()
    while episode.running:
        episode.step()
    elapsed = time.perf_counter() - start
    ticks = episode.world.clock.tick_index
    sim_seconds = ticks * world.tick_dt
    print(f"{ticks} ticks ({sim_seconds:.0f} simulated seconds) in {elapsed:.2f} s wall")
    print(f"throughput: {ticks / elapsed:,.0f} ticks/s = {sim_seconds / elapsed:,.1f}x real time")
    return 0 if ticks == budget else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deliverysim",
        description="Deterministic in-building delivery simulator and benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate task datasets")
    gen.add_argument("--world", default=None, help="world description JSON (default: bundled)")
    gen.add_argument("--split", default="test")
    gen.add_argument("--tasks", type=int, default=50)
    gen.add_argument("--split-spec", default=None,
                     help="comma list of name=count pairs, e.g. test=918,val=5730")
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument("--out", default="dataset")
    gen.set_defaults(func=_cmd_gen)

    serve = sub.add_parser("serve", help="serve episodes to an agent over TCP")
    serve.add_argument("--world", default=None)
    serve.add_argument("--dataset", required=True)
    serve.add_argument("--split", default="val", help="val, test, or free")
    serve.add_argument("--seed", type=int, default=7)
    serve.add_argument("--port", type=int, default=protocol.DEFAULT_PORT)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--accel", type=float, default=0.0,
                       help="cap speed at N x real time (0 = unlimited)")
    serve.add_argument("--trace-dir", default="traces")
    serve.add_argument("--timeout", type=float, default=60.0,
                       help="wall-clock seconds to wait for each agent decision")
    serve.add_argument("--limit", type=int, default=None)
    serve.add_argument("--annotations", default=None)
    serve.set_defaults(func=_cmd_serve)

    ev = sub.add_parser("eval", help="score results or traces into the metrics table")
    ev.add_argument("--results", default=None, help="results.json from a serve run")
    ev.add_argument("--traces", default=None, help="directory of episode traces")
    ev.add_argument("--annotations", default=None)
    ev.add_argument("--agent-cmd", default=None,
                    help="run this agent program once per task against a local server")
    ev.add_argument("--dataset", default=None)
    ev.add_argument("--world", default=None)
    ev.add_argument("--split", default="val")
    ev.add_argument("--seed", type=int, default=7)
    ev.add_argument("--port", type=int, default=0)
    ev.add_argument("--timeout", type=float, default=60.0)
    ev.add_argument("--limit", type=int, default=None)
    ev.add_argument("--label", default="agent")
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=_cmd_eval)

    rp = sub.add_parser("replay", help="re-execute a trace and verify its hashes")
    rp.add_argument("trace")
    rp.add_argument("--world", default=None)
    rp.set_defaults(func=_cmd_replay)

    bench = sub.add_parser("bench", help="measure tick throughput with a no-op agent")
    bench.add_argument("--world", default=None)
    bench.add_argument("--seed", type=int, default=7)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # operator tool: fail with a message, not a trace
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
