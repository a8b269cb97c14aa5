import json

import pytest

from cityroute.accounts import UserStore
from cityroute.cli import run_cli
from cityroute.demo import demo_network_document

ALWAYS = {"kind": "ABSOLUTE", "start_at": "2000-01-01T00:00:00"}


@pytest.fixture
def network_file(tmp_path):
    path = tmp_path / "network.json"
    path.write_text(json.dumps(demo_network_document()))
    return path


@pytest.fixture
def data_dir(tmp_path, network_file):
    target = tmp_path / "data"
    assert run_cli(["--data-dir", str(target), "ingest", str(network_file)]) == 0
    return target


def _rule_file(tmp_path, doc, name="rule.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_ingest_installs_network(tmp_path, network_file, capsys):
    target = tmp_path / "data"
    assert run_cli(["--data-dir", str(target), "ingest", str(network_file)]) == 0
    out = capsys.readouterr().out
    assert "4 vertices, 5 segments" in out
    installed = json.loads((target / "network.json").read_text())
    assert {v["id"] for v in installed["vertices"]} == {1, 2, 3, 4}


def test_ingest_rejects_broken_document(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert run_cli(["--data-dir", str(tmp_path / "data"), "ingest", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_ingest_missing_file(tmp_path):
    assert run_cli(["--data-dir", str(tmp_path), "ingest", str(tmp_path / "nope.json")]) == 1


def test_route_prints_result_json(data_dir, capsys):
    code = run_cli(["--data-dir", str(data_dir), "route", "--from", "1,2", "--to", "99,101"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["segments"] == [3]
    assert payload["cost"] == pytest.approx(141.4214, abs=1e-3)


def test_route_without_installed_network(tmp_path, capsys):
    code = run_cli(["--data-dir", str(tmp_path / "empty"), "route", "--from", "0,0", "--to", "1,1"])
    assert code == 1
    assert "no network installed" in capsys.readouterr().err


def test_route_rejects_malformed_point(data_dir):
    assert run_cli(["--data-dir", str(data_dir), "route", "--from", "zero", "--to", "1,1"]) == 1


def test_route_rejects_malformed_instant(data_dir):
    code = run_cli([
        "--data-dir", str(data_dir), "route",
        "--from", "0,0", "--to", "100,100", "--at", "soonish",
    ])
    assert code == 1


def test_route_time_shift_needs_credentials(data_dir, capsys):
    code = run_cli([
        "--data-dir", str(data_dir), "route",
        "--from", "0,0", "--to", "100,100", "--at", "2031-01-01T08:00:00",
    ])
    assert code == 1
    assert "signed-in account" in capsys.readouterr().err


def test_route_time_shift_with_credentials(data_dir, capsys):
    UserStore(data_dir / "users.jsonl").register("maria", "orange-tram-7")
    code = run_cli([
        "--data-dir", str(data_dir), "route",
        "--from", "0,0", "--to", "100,100", "--at", "2031-01-01T08:00:00",
        "--as-user", "maria:orange-tram-7",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["instant"] == "2031-01-01T08:00:00"


def test_route_rejects_bad_credentials(data_dir, capsys):
    UserStore(data_dir / "users.jsonl").register("maria", "orange-tram-7")
    code = run_cli([
        "--data-dir", str(data_dir), "route",
        "--from", "0,0", "--to", "100,100", "--at", "2031-01-01T08:00:00",
        "--as-user", "maria:wrong",
    ])
    assert code == 1
    assert "credentials not accepted" in capsys.readouterr().err


def test_route_exit_code_when_unreachable(tmp_path, data_dir, capsys):
    for rule_id, segment in [(1, 2), (2, 3), (3, 4)]:
        doc = {"id": rule_id, "segment_id": segment, "kind": "CLOSED", "schedule": ALWAYS}
        path = _rule_file(tmp_path, doc, f"rule{rule_id}.json")
        assert run_cli(["--data-dir", str(data_dir), "rule", "add", str(path)]) == 0
    capsys.readouterr()
    code = run_cli(["--data-dir", str(data_dir), "route", "--from", "0,0", "--to", "100,100"])
    assert code == 1
    assert "no route" in capsys.readouterr().err


def test_rule_lifecycle(tmp_path, data_dir, capsys):
    doc = {"id": 7, "segment_id": 3, "kind": "CLOSED", "schedule": ALWAYS}
    assert run_cli(["--data-dir", str(data_dir), "rule", "add", str(_rule_file(tmp_path, doc))]) == 0
    assert "added rule 7 (generation 1, 0 notifications)" in capsys.readouterr().out

    assert run_cli(["--data-dir", str(data_dir), "rule", "list"]) == 0
    listed = json.loads(capsys.readouterr().out)
    assert [r["id"] for r in listed] == [7]

    assert run_cli(["--data-dir", str(data_dir), "rule", "rm", "7"]) == 0
    assert "removed rule 7 (generation 2" in capsys.readouterr().out

    assert run_cli(["--data-dir", str(data_dir), "rule", "list"]) == 0
    assert json.loads(capsys.readouterr().out) == []


def test_rule_add_affects_routing(tmp_path, data_dir, capsys):
    doc = {"id": 1, "segment_id": 3, "kind": "CLOSED", "schedule": ALWAYS}
    assert run_cli(["--data-dir", str(data_dir), "rule", "add", str(_rule_file(tmp_path, doc))]) == 0
    capsys.readouterr()
    assert run_cli(["--data-dir", str(data_dir), "route", "--from", "0,0", "--to", "100,100"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["segments"] == [1, 2]
    assert payload["cost"] == pytest.approx(200.0)


def test_rule_add_rejects_unknown_segment(tmp_path, data_dir, capsys):
    doc = {"id": 1, "segment_id": 99, "kind": "CLOSED", "schedule": ALWAYS}
    assert run_cli(["--data-dir", str(data_dir), "rule", "add", str(_rule_file(tmp_path, doc))]) == 1
    assert "unknown segment" in capsys.readouterr().err


def test_rule_rm_unknown_id(data_dir, capsys):
    assert run_cli(["--data-dir", str(data_dir), "rule", "rm", "42"]) == 1


def test_unknown_command_is_user_error():
    assert run_cli(["frobnicate"]) == 1


def test_help_exits_cleanly(capsys):
    assert run_cli(["--help"]) == 0
    assert "route" in capsys.readouterr().out


def test_data_dir_from_environment(tmp_path, network_file, monkeypatch, capsys):
    target = tmp_path / "from-env"
    monkeypatch.setenv("ROUTE_DATA_DIR", str(target))
    assert run_cli(["ingest", str(network_file)]) == 0
    assert (target / "network.json").is_file()


def test_demo_runs_clean(capsys):
    assert run_cli(["demo"]) == 0
    out = capsys.readouterr().out
    assert "demo complete" in out
    assert out.count("ok - ") == 3
