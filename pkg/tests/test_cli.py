import json

from deliverysim import robot as rb
from deliverysim.cli import main
from deliverysim.engine import reset_episode
from deliverysim.geometry import Vec3
from deliverysim.trace import TraceWriter


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_single_split(tmp_path, capsys):
    out = str(tmp_path / "ds")
    code, stdout, _ = run_cli(capsys, "gen", "--split", "test", "--tasks", "12",
                              "--seed", "7", "--out", out)
    assert code == 0
    assert "test: 12 tasks, 24 instructions" in stdout
    records = json.loads((tmp_path / "ds" / "test_tasks.json").read_text())
    assert len(records) == 12


def test_gen_split_spec(tmp_path, capsys):
    out = str(tmp_path / "ds")
    code, stdout, _ = run_cli(capsys, "gen", "--split-spec", "test=4,val=6",
                              "--seed", "3", "--out", out)
    assert code == 0
    assert "total instructions: 20" in stdout
    assert (tmp_path / "ds" / "val_annotations.json").exists()
    assert not (tmp_path / "ds" / "test_annotations.json").exists()


def test_env_seed_override(tmp_path, capsys, monkeypatch):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    monkeypatch.setenv("PRS_SEED", "99")
    run_cli(capsys, "gen", "--split", "dev", "--tasks", "5", "--seed", "1", "--out", out_a)
    monkeypatch.delenv("PRS_SEED")
    run_cli(capsys, "gen", "--split", "dev", "--tasks", "5", "--seed", "99", "--out", out_b)
    a = (tmp_path / "a" / "dev_tasks.json").read_bytes()
    b = (tmp_path / "b" / "dev_tasks.json").read_bytes()
    assert a == b


def _write_trace(path, reference_task):
    ep = reset_episode(None, reference_task, 7, trace=TraceWriter(str(path)))
    rb.goto_target_goal(ep, Vec3(-10.0, 0.0, 0.0), 0.5)
    ep.finish_trace()


def test_replay_ok_and_tampered(tmp_path, capsys, reference_task):
    trace_path = tmp_path / "ep.jsonl"
    _write_trace(trace_path, reference_task)
    code, stdout, _ = run_cli(capsys, "replay", str(trace_path))
    assert code == 0
    assert "OK, hashes match" in stdout

    lines = trace_path.read_text().splitlines()
    tampered = []
    for line in lines:
        rec = json.loads(line)
        if rec.get("kind") == "tick" and rec.get("c"):
            for cmd in rec["c"]:
                if cmd["name"] == "goto_target_goal":
                    cmd["args"]["goal"][2] += 0.5
        tampered.append(json.dumps(rec, separators=(",", ":")))
    trace_path.write_text("\n".join(tampered) + "\n")
    code, stdout, _ = run_cli(capsys, "replay", str(trace_path))
    assert code == 1
    assert "MISMATCH" in stdout


def test_eval_from_traces(tmp_path, capsys, reference_task):
    traces = tmp_path / "traces"
    traces.mkdir()
    _write_trace(traces / "ep1.jsonl", reference_task)
    code, stdout, _ = run_cli(capsys, "eval", "--traces", str(traces),
                              "--label", "noop")
    assert code == 0
    assert "Task SR" in stdout
    assert "noop" in stdout
    assert "0.0" in stdout  # the goto-only agent delivers nothing


def test_eval_needs_an_input(capsys):
    code, _, stderr = run_cli(capsys, "eval")
    assert code == 2
    assert "needs" in stderr


def test_bench_runs_full_episode(capsys):
    code, stdout, _ = run_cli(capsys, "bench", "--seed", "5")
    assert code == 0
    assert "4800 ticks" in stdout
    assert "x real time" in stdout
