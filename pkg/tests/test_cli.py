import csv
import json

import pytest

from ncvxcs import __version__
from ncvxcs.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, _grid_list, main, read_config, resolve


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_prox_example(capsys):
    code, out, _ = run(["prox", "--family", "scad", "--lambda", "1", "--a", "3",
                        "--s", "1", "--w", "2.5"], capsys)
    assert code == EXIT_OK
    assert out.startswith("x*=2.0, region=Transition")


def test_prox_json(capsys):
    code, out, _ = run(["prox", "--family", "mcp", "--lambda", "1", "--a", "3", "--w", "0.5",
                        "--format", "json"], capsys)
    assert code == EXIT_OK
    assert json.loads(out) == {"x_star": 0.0, "region": "Zero", "sigma_factor": 0.0}


@pytest.mark.parametrize("argv,needle", [
    (["prox", "--family", "scad", "--a", "3", "--w", "1"], "--lambda"),
    (["prox", "--lambda", "1", "--w", "1", "--bogus", "2"], "unrecognized"),
    (["prox", "--family", "lasso", "--lambda", "1", "--w", "1"], "family"),
    (["prox", "--family", "scad", "--lambda", "1", "--a", "1.5", "--w", "1"], "a_min"),
    (["amp", "--alpha", "0.5", "--rho", "0.2", "--lambda", "0.1", "--schedule", "1:-0.1:0.1@2"],
     "conflict"),
    (["phase", "--lambda", "0.1", "--rho-grid", "0.1:0.2:0.1", "--alpha-grid", "0.5"], "exactly one"),
    (["boundary", "--alpha", "0.5", "--rho", "0.3"], "--lambda-grid"),
    (["se-run", "--alpha", "0.5", "--rho", "0.2", "--lambda", "0.5", "--jobs", "0"], "jobs"),
    ([], "subcommand"),
])
def test_config_errors_exit_1(argv, needle, capsys):
    code, _, err = run(argv, capsys)
    assert code == EXIT_CONFIG
    assert needle in err
    assert len(err.strip().splitlines()) == 1


def test_dry_run_prints_plan_without_output(tmp_path, capsys):
    out_path = tmp_path / "t.csv"
    code, out, _ = run(["amp", "--alpha", "0.5", "--rho", "0.28", "--n", "100000",
                        "--schedule", "1.0:-0.1:0.1@20", "--a", "3", "--seed", "7",
                        "--out", str(out_path), "--dry-run"], capsys)
    assert code == EXIT_OK
    plan = json.loads(out)
    assert plan["command"] == "amp" and plan["plan"]["seed"] == 7
    assert plan["plan"]["max_iters"] == 1000      # defaults are resolved
    assert not out_path.exists()


@pytest.mark.parametrize("cmd", ["prox", "amp", "se-run", "se-flow", "basin", "continue",
                                 "saddle", "success", "phase", "boundary", "ncc"])
def test_every_subcommand_has_dry_run(cmd, capsys):
    argv = [cmd, "--lambda", "0.5", "--alpha", "0.5", "--rho", "0.2", "--w", "1",
            "--lambda-grid", "0.1", "--rho-grid", "0.1", "--dry-run"]
    drop = {"prox": {"--alpha", "--rho", "--lambda-grid", "--rho-grid"},
            "amp": {"--w", "--lambda-grid", "--rho-grid"},
            "se-run": {"--w", "--lambda-grid", "--rho-grid"},
            "se-flow": {"--w", "--lambda-grid", "--rho-grid"},
            "basin": {"--w", "--lambda-grid", "--rho-grid"},
            "continue": {"--w", "--lambda", "--lambda-grid", "--rho-grid"},
            "saddle": {"--w", "--lambda-grid", "--rho-grid"},
            "success": {"--w", "--lambda-grid", "--rho-grid"},
            "phase": {"--w", "--alpha", "--rho", "--lambda-grid"},
            "boundary": {"--w", "--lambda", "--rho-grid"},
            "ncc": {"--w", "--lambda", "--rho", "--lambda-grid", "--rho-grid"}}[cmd]
    args, i = [], 1
    while i < len(argv):
        if argv[i] in drop:
            i += 2
            continue
        args.append(argv[i])
        i += 1
    code, out, err = run([cmd] + args, capsys)
    assert code == EXIT_OK, err
    assert json.loads(out)["command"] == cmd


def test_amp_output_and_manifest(tmp_path, capsys):
    out_path = tmp_path / "traj.csv"
    argv = ["amp", "--family", "l1", "--lambda", "1", "--alpha", "0.5", "--rho", "0.1",
            "--n", "1000", "--seed", "3", "--out", str(out_path)]
    assert main(argv) == EXIT_OK
    rows = list(csv.reader(open(out_path)))
    assert rows[0] == ["t", "lambda", "a", "mse", "V_hat", "residual"]
    assert float(rows[-1][3]) <= 1e-8
    man = json.load(open(str(out_path) + ".manifest.json"))
    assert set(man) == {"command", "resolved_config", "seed", "version", "wall_time_s"}
    assert man["seed"] == 3 and man["version"] == __version__
    assert man["resolved_config"]["sigma_x2"] == 1.0
    first = out_path.read_bytes()
    assert main(argv) == EXIT_OK
    assert out_path.read_bytes() == first      # byte-identical rerun


def test_amp_require_success_exit_2(capsys):
    code, _, err = run(["amp", "--lambda", "0.1", "--a", "3", "--alpha", "0.5", "--rho", "0.28",
                        "--n", "1000", "--require-success"], capsys)
    assert code == EXIT_NUMERIC
    assert "numerical failure" in err


def test_amp_instance_dump_and_load(tmp_path, capsys):
    inst = tmp_path / "inst.bin"
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    base = ["amp", "--family", "l1", "--lambda", "1", "--alpha", "0.5", "--rho", "0.1"]
    assert main(base + ["--n", "400", "--dump-instance", str(inst), "--out", str(a)]) == 0
    assert main(base + ["--instance", str(inst), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nfamily = mcp\nlambda = 2\na = 4\ns = 1\n")
    code, out, _ = run(["prox", "--config", str(cfg), "--w", "3", "--dry-run"], capsys)
    plan = json.loads(out)["plan"]
    assert (plan["family"], plan["lam"], plan["a"]) == ("mcp", 2.0, 4.0)
    code, out, _ = run(["prox", "--config", str(cfg), "--w", "3", "--a", "5", "--dry-run"], capsys)
    assert json.loads(out)["plan"]["a"] == 5.0


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("lambda = 1\ncolour = blue\n")
    code, _, err = run(["prox", "--config", str(cfg), "--w", "1"], capsys)
    assert code == EXIT_CONFIG and "colour" in err


def test_read_config_rejects_garbage(tmp_path):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("just words\n")
    with pytest.raises(ValueError):
        read_config(cfg)


def test_resolve_fills_defaults():
    cmd, cfg = resolve(["success", "--lambda", "0.1", "--alpha", "0.5", "--rho", "0.2"])
    assert cmd == "success" and cfg["sigma_x2"] == 1.0 and cfg["a"] == 3.0


@pytest.mark.parametrize("text,expected", [("0.05:0.15:0.05", [0.05, 0.1, 0.15]),
                                           ("0.3,0.1", [0.3, 0.1]),
                                           ("1:0:-0.5", [1.0, 0.5, 0.0])])
def test_grid_list(text, expected):
    assert _grid_list(text) == pytest.approx(expected)


def test_success_outputs(capsys):
    code, out, _ = run(["success", "--lambda", "0.001", "--a", "2", "--alpha", "0.29",
                        "--rho", "0.3"], capsys)
    assert code == EXIT_OK and json.loads(out)["stable"] is False
    code, out, _ = run(["success", "--lambda", "0.001", "--a", "2", "--alpha", "0.31",
                        "--rho", "0.3"], capsys)
    assert json.loads(out)["stable"] is True


def test_saddle_json(tmp_path, capsys):
    out_path = tmp_path / "s.json"
    code = main(["saddle", "--lambda", "1", "--a", "10", "--alpha", "0.5", "--rho", "0.35",
                 "--out", str(out_path)])
    assert code == EXIT_OK
    sol = json.load(open(out_path))
    assert sol["status"] == "converged" and sol["at_lhs"] > 1


def test_saddle_non_convergence_exit_2(capsys):
    code, _, _ = run(["saddle", "--lambda", "1", "--a", "10", "--alpha", "0.5", "--rho", "0.35",
                      "--max-sweeps", "3"], capsys)
    assert code == EXIT_NUMERIC


def test_phase_below_l1_curve(tmp_path, capsys):
    out_path = tmp_path / "phase.csv"
    code = main(["phase", "--family", "mcp", "--lambda", "0.01", "--a", "3",
                 "--rho-grid", "0.1:0.3:0.1", "--jobs", "2", "--out", str(out_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(out_path)))
    assert list(rows[0]) == ["rho", "alpha_c", "family", "lambda", "a"]
    code = main(["phase", "--family", "l1", "--lambda", "1", "--rho-grid", "0.1:0.3:0.1",
                 "--out", str(tmp_path / "l1.csv")])
    l1 = list(csv.DictReader(open(tmp_path / "l1.csv")))
    for r, q in zip(rows, l1):
        assert float(r["alpha_c"]) < float(q["alpha_c"])


def test_basin_writes_summary(tmp_path, capsys):
    out_path = tmp_path / "basin.csv"
    code = main(["basin", "--lambda", "0.5", "--a", "3", "--alpha", "0.5", "--rho", "0.2",
                 "--nv", "5", "--ne", "4", "--out", str(out_path)])
    assert code == EXIT_OK
    assert len(list(csv.reader(open(out_path)))) == 21
    summ = json.load(open(str(out_path) + ".summary.json"))
    assert summ["grid"]["nv"] == 5


def test_stdout_csv_and_stderr_manifest(capsys):
    code, out, err = run(["se-flow", "--lambda", "0.5", "--a", "3", "--alpha", "0.5",
                          "--rho", "0.2", "--nv", "2", "--ne", "2"], capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0] == "V,eps,dV,deps,admissible" and len(out.splitlines()) == 5
    assert json.loads(err.strip().splitlines()[-1])["command"] == "se-flow"
