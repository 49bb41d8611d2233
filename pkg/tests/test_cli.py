import os

import pytest

from noma_lab.cli import main, parse_args


def run_cli(argv, tmp_path=None, cwd=None):
    if cwd is not None:
        old = os.getcwd()
        os.chdir(cwd)
        try:
            return main(argv)
        finally:
            os.chdir(old)
    return main(argv)


# ----------------------------------------------------------------- arguments

def test_parse_run_with_seed():
    cmd = parse_args(["run", "fig7", "--seed", "42"])
    assert cmd.verb == "run" and cmd.target == "fig7" and cmd.seed == 42


def test_parse_repeatable_set_preserves_order():
    cmd = parse_args(["run", "fig5", "--set", "H=3", "--set", "V=4",
                      "--set", "H=2"])
    assert cmd.sets == ["H=3", "V=4", "H=2"]


def test_parse_unknown_flag_usage_error():
    with pytest.raises(SystemExit) as exc:
        parse_args(["run", "fig5", "--bogus"])
    assert exc.value.code != 0


def test_parse_requires_subcommand():
    with pytest.raises(SystemExit):
        parse_args([])


# --------------------------------------------------------------------- verbs

def test_validate_shipped_default_config():
    repo_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    conf = os.path.join(repo_root, "configs", "default.conf")
    assert run_cli(["validate", conf]) == 0


def test_validate_bad_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("M = 0\n")
    assert run_cli(["validate", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_run_unknown_scenario_lists_builtins(capsys):
    assert run_cli(["run", "nosuch"]) == 1
    err = capsys.readouterr().err
    for name in ("fig2", "fig9"):
        assert name in err


def test_list_scenarios(capsys):
    assert run_cli(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "fig7" in out and "sigma2_dBm" in out


def test_run_small_scenario_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "mini.csv"
    code = run_cli(["run", "fig4", "--seed", "7", "--trials", "2",
                    "--set", "M=3", "--set", "N=3", "--set", "H=2",
                    "--set", "V=2", "--out", str(out), "--no-plot"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3  # one summary line per scheme
    for line in lines:
        parts = line.split()
        assert parts[0] in ("SSPA-1", "SSPA-2", "RA-NOMA")
        assert len(parts) == 5
        float(parts[1]), float(parts[2]), float(parts[3])
        assert int(parts[4]) == 2
    body = out.read_text().splitlines()
    assert body[0].startswith("scenario,scheme")
    assert len(body) == 1 + 3 * 2


def test_run_deterministic_with_seed(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["run", "fig4", "--trials", "2", "--set", "M=3", "--set", "N=3",
            "--set", "H=2", "--set", "V=2", "--seed", "42", "--no-plot"]
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_renders_plot(tmp_path):
    out = tmp_path / "plotme.csv"
    code = run_cli(["run", "fig4", "--trials", "1", "--set", "M=2",
                    "--set", "N=2", "--set", "H=1", "--set", "V=1",
                    "--seed", "3", "--out", str(out)])
    assert code == 0
    assert (tmp_path / "plotme.png").exists()


def test_run_infeasible_scenario_exits_two(tmp_path, capsys):
    out = tmp_path / "inf.csv"
    code = run_cli(["run", "fig4", "--trials", "1", "--set", "M=2",
                    "--set", "N=2", "--set", "H=1", "--set", "V=1",
                    "--set", "R_min=1e15", "--seed", "3",
                    "--out", str(out), "--no-plot"])
    assert code == 2
    assert out.exists()  # rows still written, just not converged


def test_run_scenario_file(tmp_path, capsys):
    scen = tmp_path / "custom.conf"
    scen.write_text("M = 2\nN = 2\nH = 1\nV = 1\n"
                    "sweep = M: 2\nschemes = RA-NOMA\ntrials = 2\n")
    out = tmp_path / "c.csv"
    assert run_cli(["run", str(scen), "--out", str(out), "--no-plot"]) == 0
    assert out.exists()


def test_run_fig2_populates_match_ops(tmp_path):
    from noma_lab.harness import read_csv
    out = tmp_path / "fig2.csv"
    code = run_cli(["run", "fig2", "--trials", "1", "--seed", "9",
                    "--out", str(out), "--no-plot"])
    assert code == 0
    table = read_csv(str(out))
    assert len(table.rows) == 3  # one SSPA-1 row per swept M
    assert all(r.match_ops >= 0 for r in table.rows)
    assert any(r.match_ops > 0 for r in table.rows)


def test_oracle_small_instance(capsys):
    code = run_cli(["oracle", "--seed", "5"])
    assert code == 0
    out = capsys.readouterr().out
    for key in ("scas2_ee", "exhaustive_ee", "matching_rel_delta",
                "dinkelbach_ee", "grid_ee", "power_rel_delta"):
        assert key in out
    # the small-instance deltas themselves: matching exact, power in band
    values = {line.split()[0]: float(line.split()[1])
              for line in out.strip().splitlines()}
    assert values["matching_rel_delta"] <= 1e-9
    assert values["power_rel_delta"] >= -0.01


def test_oracle_rejects_large_instance(capsys):
    assert run_cli(["oracle", "--set", "M=10"]) == 1
    assert "small instance" in capsys.readouterr().err
