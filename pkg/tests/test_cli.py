import json

import pytest

from quorumsim.cli import list_presets, main


@pytest.fixture()
def scenario_file(tmp_path):
    doc = {
        "meta": {"name": "cli-test", "description": ""},
        "topology": {
            "replicas": [
                {"id": i, "datacenter": "dc1", "proc_write": {"kind": "constant", "value_us": 100}, "proc_read": {"kind": "constant", "value_us": 100}}
                for i in range(3)
            ],
            "edges": [
                {"src": i, "dst": j, "base": {"kind": "exponential", "mean_us": 2000}}
                for i in range(3)
                for j in range(3)
                if i != j
            ],
        },
        "consistency": {"placement": [0, 1, 2], "coordinator": 0, "write_cl": "QUORUM", "read_cl": "QUORUM"},
        "workload": {
            "clients": 2,
            "ops_per_client": 40,
            "read_ratio": 0.5,
            "think_time": {"kind": "constant", "value_us": 500},
            "keys": {"kind": "uniform", "n": 8},
            "write_payload_bytes": {"kind": "constant", "value_us": 64},
        },
        "strategy": "lww_timestamp",
        "seed": 11,
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_validate_ok(scenario_file, capsys):
    assert main(["validate", str(scenario_file)]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_reports_violations(scenario_file, capsys):
    doc = json.loads(scenario_file.read_text())
    del doc["consistency"]
    doc["cooperation"] = {
        "replication_graphs": [
            {"id": 0, "root": 0, "weight": 0.6, "edges": [{"parent": 0, "child": 1, "class": "async"}]},
            {"id": 1, "root": 0, "weight": 0.3, "edges": [{"parent": 0, "child": 2, "class": "async"}]},
        ],
        "reading_graphs": [{"id": 2, "root": 0, "weight": 1.0, "edges": []}],
    }
    scenario_file.write_text(json.dumps(doc))
    assert main(["validate", str(scenario_file)]) == 1
    assert "WEIGHTS_NOT_NORMALIZED" in capsys.readouterr().out


def test_validate_missing_file_is_io_error(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_validate_unparsable_file(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{")
    assert main(["validate", str(path)]) == 2


def test_run_stage_gating(scenario_file, tmp_path):
    out = tmp_path / "stage1"
    assert main(["run", str(scenario_file), "--out", str(out), "--stages", "1", "--quiet"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["events.jsonl"]

    out_all = tmp_path / "all"
    assert main(["run", str(scenario_file), "--out", str(out_all), "--quiet"]) == 0
    assert sorted(p.name for p in out_all.iterdir()) == [
        "clientcentric.json",
        "datacentric.json",
        "events.jsonl",
        "ops.csv",
        "read_verdicts.csv",
    ]


def test_run_twice_is_byte_identical(scenario_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(scenario_file), "--out", str(a), "--quiet"]) == 0
    assert main(["run", str(scenario_file), "--out", str(b), "--quiet"]) == 0
    for name in ("events.jsonl", "datacentric.json", "clientcentric.json", "read_verdicts.csv", "ops.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_read_verdict_csv_header_is_exact(scenario_file, tmp_path):
    out = tmp_path / "hdr"
    assert main(["run", str(scenario_file), "--out", str(out), "--quiet"]) == 0
    first = (out / "read_verdicts.csv").read_text().splitlines()[0]
    assert first == "op_id,client_id,key,start_us,stale,mrc,rywc,returned_writes"
    ops_first = (out / "ops.csv").read_text().splitlines()[0]
    assert ops_first == "op_id,client_id,kind,key,graph_id,start_us,status,latency_us,window_us,warmup"


def test_run_analyze_pipeline_identity(scenario_file, tmp_path):
    run_dir, out = tmp_path / "run", tmp_path / "analyzed"
    assert main(["run", str(scenario_file), "--out", str(run_dir), "--quiet"]) == 0
    assert main(["analyze", str(run_dir / "events.jsonl"), "--out", str(out), "--quiet"]) == 0
    for name in ("datacentric.json", "clientcentric.json", "read_verdicts.csv", "ops.csv"):
        assert (run_dir / name).read_bytes() == (out / name).read_bytes()


def test_repeat_matches_individual_runs(scenario_file, tmp_path):
    out = tmp_path / "batch"
    assert main(["run", str(scenario_file), "--out", str(out), "--repeat", "3", "--seed", "100", "--quiet"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert [row["seed"] for row in summary["rows"]] == [100, 101, 102]
    for row in summary["rows"]:
        single = tmp_path / f"single_{row['seed']}"
        assert main(["run", str(scenario_file), "--out", str(single), "--seed", str(row["seed"]), "--quiet"]) == 0
        report = json.loads((single / "clientcentric.json").read_text())
        assert row["stale_read_rate"] == report["stale_read_rate"]
        data = json.loads((single / "datacentric.json").read_text())
        assert row["error_rate"] == data["global"]["error_rate"]["all"]
        assert (out / f"seed_{row['seed']}" / "events.jsonl").read_bytes() == (single / "events.jsonl").read_bytes()


def test_jobs_do_not_change_outputs(scenario_file, tmp_path):
    a, b = tmp_path / "j1", tmp_path / "j3"
    assert main(["run", str(scenario_file), "--out", str(a), "--repeat", "3", "--jobs", "1", "--quiet"]) == 0
    assert main(["run", str(scenario_file), "--out", str(b), "--repeat", "3", "--jobs", "3", "--quiet"]) == 0
    for seed_dir in ("seed_11", "seed_12", "seed_13"):
        assert (a / seed_dir / "events.jsonl").read_bytes() == (b / seed_dir / "events.jsonl").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_analyze_malformed_log(tmp_path, capsys):
    path = tmp_path / "events.jsonl"
    path.write_text('{"kind":"run_meta","format":1,"strategy":"lww_timestamp","graphs":{}}\n{"seq":0')
    assert main(["analyze", str(path), "--out", str(tmp_path / "out")]) == 1
    assert "MALFORMED_LOG" in capsys.readouterr().err


def test_quorum_check_verdicts(capsys):
    assert main(["quorum-check", "--rf", "3", "--write-cl", "QUORUM", "--read-cl", "QUORUM"]) == 0
    out = capsys.readouterr().out
    assert "W=2 R=2 RF=3 IMMEDIATE" in out

    assert main(["quorum-check", "--rf", "3", "--write-cl", "ONE", "--read-cl", "ONE"]) == 0
    assert "W=1 R=1 RF=3 EVENTUAL" in capsys.readouterr().out

    assert main(["quorum-check", "--rf", "3", "--write-cl", "ALL", "--read-cl", "ALL"]) == 0
    out = capsys.readouterr().out
    assert "IMMEDIATE" in out and "redundant" in out


def test_quorum_check_domain_errors(capsys):
    assert main(["quorum-check", "--rf", "2", "--write-cl", "THREE", "--read-cl", "ONE"]) == 1
    assert "LEVEL_UNSATISFIABLE" in capsys.readouterr().err
    assert main(["quorum-check", "--rf", "3", "--write-cl", "ANY", "--read-cl", "ONE"]) == 1
    assert "UNSUPPORTED_LEVEL" in capsys.readouterr().err


def test_quorum_check_local_levels(capsys):
    rc = main([
        "quorum-check", "--rf", "6", "--write-cl", "LOCAL_QUORUM", "--read-cl", "LOCAL_QUORUM",
        "--dc-counts", "NY=3,SF=3", "--coordinator-dc", "NY",
    ])
    assert rc == 0
    assert "W=2 R=2 RF=6 EVENTUAL" in capsys.readouterr().out


def test_presets_exist_and_validate(capsys):
    names = list_presets()
    assert {"one_uniform", "one_zipfian", "quorum_uniform", "quorum_zipfian", "all_uniform", "all_zipfian"} <= set(names)
    for name in names:
        assert main(["validate", f"preset:{name}"]) == 0
    capsys.readouterr()
    assert main(["validate", "preset:does_not_exist"]) == 2
