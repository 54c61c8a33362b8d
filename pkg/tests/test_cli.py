from __future__ import annotations

import json

import pytest

from dtplace import instance_to_dict
from dtplace.cli import main

from conftest import build_instance


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "instance.json"
    rc = main(
        [
            "gen",
            "--servers",
            "3",
            "--devices",
            "2",
            "--components",
            "1..2",
            "--seed",
            "5",
            "--out",
            str(path),
        ]
    )
    assert rc == 0
    return path


def test_gen_writes_instance(instance_file):
    data = json.loads(instance_file.read_text())
    assert data["seed"] == 5
    assert len(data["instance"]["servers"]) == 3
    assert len(data["instance"]["devices"]) == 2


def test_gen_is_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for path in (a, b):
        main(["gen", "--servers", "2", "--devices", "2", "--components", "1..1",
              "--seed", "9", "--out", str(path)])
    assert a.read_bytes() == b.read_bytes()


def common_flags(instance_file):
    return [
        "--instance",
        str(instance_file),
        "--seed",
        "3",
        "--alpha",
        "0.05",
        "--epsilon",
        "0.025",
        "--theta",
        "50",
    ]


def test_solve_emits_result_record(tmp_path, instance_file):
    out = tmp_path / "solve.json"
    rc = main(["solve", *common_flags(instance_file), "--out", str(out)])
    assert rc == 0
    record = json.loads(out.read_text())
    for key in (
        "algorithm",
        "rho",
        "offload",
        "communication",
        "cost_per_server",
        "states_visited",
        "iterations",
        "converged",
        "per_iteration_rho",
        "placement",
    ):
        assert key in record
    assert record["algorithm"] == "stage"
    assert record["rho"] > 0
    assert len(record["placement"]) == sum(
        len(d["components"]) for d in json.loads(instance_file.read_text())["instance"]["devices"]
    )


@pytest.mark.parametrize("which", ["random", "restart", "nearest"])
def test_baseline_commands(tmp_path, instance_file, which):
    out = tmp_path / f"{which}.json"
    rc = main(
        ["baseline", "--which", which, "--trials", "4", *common_flags(instance_file),
         "--out", str(out)]
    )
    assert rc == 0
    record = json.loads(out.read_text())
    assert record["algorithm"] == which
    assert record["per_iteration_rho"] == []


def test_oracle_command(tmp_path, instance_file, capsys):
    rc = main(["oracle", *common_flags(instance_file)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "optimum:" in printed
    assert "states_enumerated:" in printed


def test_oracle_respects_size_cap(instance_file, capsys):
    rc = main(["oracle", *common_flags(instance_file), "--size-cap", "2"])
    assert rc == 2


def test_validate_command(tmp_path, instance_file, capsys):
    solve_out = tmp_path / "solve.json"
    main(["solve", *common_flags(instance_file), "--out", str(solve_out)])
    rc = main(
        [
            "validate",
            "--instance",
            str(instance_file),
            "--placement",
            str(solve_out),
            "--alpha",
            "0.05",
            "--validation-theta",
            "500",
            "--seed",
            "11",
        ]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    assert "max_overload_proportion:" in printed
    assert "verdict:" in printed


def test_experiment_command(tmp_path):
    config = {
        "axis": "devices",
        "axis_values": [2, 3],
        "num_servers": 3,
        "components_range": [1, 2],
        "replications": 2,
        "master_seed": 77,
        "alpha": 0.05,
        "epsilon": 0.025,
        "theta": 40,
        "max_iterations": 3,
        "baseline_trials": 3,
    }
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    rc = main(["experiment", str(cfg_path), "--out", str(out_dir)])
    assert rc == 0
    sweep = (out_dir / "sweep.csv").read_text().strip().splitlines()
    assert len(sweep) == 1 + 2 * 4
    assert (out_dir / "convergence.csv").exists()


def test_experiment_seed_override(tmp_path):
    config = {
        "axis": "devices",
        "axis_values": [2],
        "num_servers": 2,
        "components_range": [1, 1],
        "replications": 1,
        "master_seed": 1,
        "alpha": 0.05,
        "epsilon": 0.025,
        "theta": 30,
        "max_iterations": 2,
        "baseline_trials": 2,
    }
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps(config))
    a = tmp_path / "a"
    b = tmp_path / "b"
    main(["experiment", str(cfg_path), "--out", str(a), "--seed", "5"])
    main(["experiment", str(cfg_path), "--out", str(b), "--seed", "5"])
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_bad_components_exits_2(tmp_path):
    rc = main(
        ["gen", "--servers", "2", "--devices", "2", "--components", "3",
         "--seed", "1", "--out", str(tmp_path / "x.json")]
    )
    assert rc == 2


def test_invalid_risk_params_exit_2(instance_file):
    rc = main(
        ["solve", "--instance", str(instance_file), "--seed", "1",
         "--alpha", "0.01", "--epsilon", "0.5", "--theta", "10"]
    )
    assert rc == 2


def test_infeasible_instance_exits_3(tmp_path):
    inst = build_instance(
        servers=[(0.0, 0.0, 1.0, 4.0)],
        devices=[(5.0, 0.0, [(5.0, 200.0, (0.0,))])],
        unit_cost=0.5,
    )
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({"instance": instance_to_dict(inst)}))
    rc = main(
        ["solve", "--instance", str(path), "--seed", "1",
         "--alpha", "0.1", "--epsilon", "0.1", "--theta", "10"]
    )
    assert rc == 3


def test_solve_side_outputs(tmp_path, instance_file):
    samples_out = tmp_path / "samples.json"
    log_out = tmp_path / "iters.csv"
    rc = main(
        ["solve", *common_flags(instance_file),
         "--samples-out", str(samples_out), "--iteration-log", str(log_out)]
    )
    assert rc == 0
    payload = json.loads(samples_out.read_text())
    assert payload["theta"] == 50
    assert payload["seed"] == 3
    assert log_out.read_text().startswith("t,q_t,rho_t,converged")
    # replaying the persisted samples reproduces the run
    reuse = tmp_path / "reuse.json"
    rc = main(["solve", *common_flags(instance_file), "--samples", str(samples_out),
               "--out", str(reuse)])
    assert rc == 0


def test_samples_file_roundtrip(tmp_path, instance_file):
    from dtplace import SaaParams, draw_samples, instance_from_dict
    from dtplace.cli import samples_from_dict, samples_to_dict

    inst = instance_from_dict(json.loads(instance_file.read_text())["instance"])
    params = SaaParams(alpha=0.05, epsilon=0.025, theta=25)
    samples = draw_samples(inst, params, 4)
    payload = samples_to_dict(samples, seed=4)
    path = tmp_path / "samples.json"
    path.write_text(json.dumps(payload))
    again = samples_from_dict(json.loads(path.read_text()))
    assert again.cycles.shape == samples.cycles.shape
    assert (again.cycles == samples.cycles).all()

    out = tmp_path / "solve.json"
    rc = main(
        ["solve", "--instance", str(instance_file), "--seed", "2",
         "--alpha", "0.05", "--epsilon", "0.025", "--theta", "25",
         "--samples", str(path), "--out", str(out)]
    )
    assert rc == 0
