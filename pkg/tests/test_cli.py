import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from hmimo import cli
from hmimo.errors import ConvergenceError, UsageError


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_dof_planar(capsys):
    code, out, _ = run(["dof", "--geometry", "planar", "--wavelength", "0.1", "--area", "1"],
                       capsys)
    assert code == 0
    table = rows(out)
    assert table[0] == ["geometry", "wavelength", "extent", "dof", "evanescent_loss"]
    assert float(table[1][3]) == pytest.approx(100 * math.pi, rel=1e-15)
    assert table[1][3].startswith("314.159265")
    assert float(table[1][4]) == 1 - math.pi / 4


def test_eigs_to_file(tmp_path, capsys):
    out = tmp_path / "eigs.csv"
    code, stdout, _ = run(["eigs", "--L", "10", "--spacing", "0.5", "--spectrum", "isotropic",
                           "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    table = rows(out.read_text())
    assert table[0] == ["index", "eigenvalue", "cumulative_fraction"]
    assert len(table) == 401
    assert float(table[315][2]) == pytest.approx(0.954, abs=0.01)


def test_capacity_bytes_identical(tmp_path, capsys):
    argv = ["capacity", "--L", "2", "--spacing-sweep", "0.25:0.5:3", "--snr-db", "10",
            "--trials", "5", "--seed", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(argv + ["--out", str(a)], capsys)[0] == 0
    assert run(argv + ["--out", str(b), "--workers", "2"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    table = rows(a.read_text())
    assert table[0] == ["spacing", "regime", "capacity_bits", "stderr", "trials", "seed"]
    assert {r[5] for r in table[1:]} == {"7"}


def test_capacity_reports_snapped_spacings(capsys):
    code, out, err = run(["capacity", "--L", "2", "--spacing-sweep", "0.3,0.5", "--trials",
                          "1", "--regimes", "asymptotic"], capsys)
    assert code == 0
    assert "does not divide" in err
    assert [r[0] for r in rows(out)[1:]] == [repr(2 / 7), "0.5"]


def test_sumrate(capsys):
    code, out, _ = run(["sumrate", "--users", "3:1,1:3", "--radius",
                        repr(1 / math.sqrt(math.pi))], capsys)
    assert code == 0
    table = rows(out)
    assert table[0] == ["user", "term_bits"]
    assert table[-1][0] == "total" and float(table[-1][1]) == pytest.approx(4.0)


def test_compare_json(capsys):
    code, out, _ = run(["compare", "--L", "1", "--spacing-sweep", "0.5", "--trials", "3",
                        "--format", "json"], capsys)
    assert code == 0
    data = json.loads(out)
    (row,) = data["regime-compare"]
    assert row["perfect_csi"] >= row["csir_uniform"] - 1e-9
    assert row["trials"] == 3


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["dof", "--geometry", "cubic"],
    ["dof", "--wavelength", "-1"],
    ["eigs", "--spacing", "0.3"],
    ["capacity", "--trials", "0"],
    ["capacity", "--spacing-sweep", "0.25:0.5"],
    ["capacity", "--regimes", "psychic"],
    ["sumrate", "--users", "1"],
    ["dof", "--trials", "5"],
    ["eigs", "--L", "ten"],
])
def test_usage_errors(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 1
    assert out == ""
    assert err.splitlines()[-1].startswith("hmimo: error:")


def test_numerical_error_exit_code(monkeypatch, capsys):
    def boom(spec):
        raise ConvergenceError("fixed point did not converge", 0.1, 10)

    monkeypatch.setattr(cli, "run_experiment", boom)
    code, out, err = run(["eigs", "--L", "1"], capsys)
    assert code == 2 and out == ""
    assert "did not converge" in err


def test_help_lists_every_flag_with_default(capsys):
    for command in cli.COMMANDS:
        with pytest.raises(SystemExit) as exc:
            cli.main([command, "--help"])
        assert exc.value.code == 0
        text = " ".join(capsys.readouterr().out.split())
        for option in cli._options_for(command):
            assert (option.flags or (option.flag,))[0] in text
        assert text.count("(default:") >= len(cli._options_for(command))


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("L = 4\nfrobnicate = 1\n")
    out = tmp_path / "never.csv"
    code, _, err = run(["eigs", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 1 and "frobnicate" in err
    assert not out.exists()
    assert os.listdir(tmp_path) == ["run.cfg"]


def test_config_key_from_other_command():
    with pytest.raises(UsageError):
        cli.load_config_text("users = 1:1\n", "eigs")


@pytest.mark.parametrize("command", list(cli.COMMANDS))
def test_dump_load_round_trip(command):
    flags = {"capacity": {"L": "4", "regimes": "stat-csit,asymptotic", "snr_db": "3.3"},
             "sumrate": {"users": "0.1:2.5,3:1e-3"},
             "eigs": {"L_y": "2", "spectrum": "directional", "kappa": "0.7"}}.get(command, {})
    cfg = cli.resolve(command, {}, flags, environ={})
    again = cli.resolve(command, cli.load_config_text(cfg.dump(), command), {}, environ={})
    assert again == cfg
    assert again.dump() == cfg.dump()


def test_dump_config_flag(tmp_path, capsys):
    dump = tmp_path / "resolved.cfg"
    code, _, _ = run(["dof", "--wavelength", "0.2", "--dump-config", str(dump)], capsys)
    assert code == 0
    assert "wavelength = 0.2" in dump.read_text()
    code, out, _ = run(["dof", "--config", str(dump)], capsys)
    assert float(rows(out)[1][1]) == 0.2


def test_seed_priority(tmp_path):
    env = {"HMIMO_SEED": "5"}
    assert cli.resolve("capacity", environ={})["seed"] == 0
    assert cli.resolve("capacity", environ=env)["seed"] == 5
    file_values = cli.load_config_text("seed = 6", "capacity")
    assert cli.resolve("capacity", file_values, environ=env)["seed"] == 6
    assert cli.resolve("capacity", file_values, {"seed": "8"}, environ=env)["seed"] == 8


def test_bad_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("HMIMO_SEED", "abc")
    assert run(["dof"], capsys)[0] == 1


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nwavelength = 0.5\ngeometry = linear\n")
    code, out, _ = run(["dof", "--config", str(cfg), "--wavelength", "0.25"], capsys)
    assert code == 0
    assert rows(out)[1][:2] == ["linear", "0.25"]
    assert float(rows(out)[1][3]) == pytest.approx(8.0)


def test_failed_run_leaves_existing_output(tmp_path, capsys, monkeypatch):
    out = tmp_path / "keep.csv"
    out.write_text("old\n")

    def boom(spec):
        raise UsageError("nope")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert run(["eigs", "--out", str(out)], capsys)[0] == 1
    assert out.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["keep.csv"]


def test_write_atomic_cleans_up(tmp_path):
    class Bad:
        def __str__(self):
            return "x"

    with pytest.raises(TypeError):
        cli.write_atomic(str(tmp_path / "f.txt"), Bad())
    assert os.listdir(tmp_path) == []


def test_parse_spacings():
    assert cli.parse_spacings("0.25:0.5:2", 10) == (0.25, 0.5)
    assert cli.parse_spacings("0.5,0.25,0.5", 2) == (0.5, 0.25)
    with pytest.raises(UsageError):
        cli.parse_spacings("0:0.5:3", 2)
    with pytest.raises(UsageError):
        cli.parse_spacings("", 2)


def test_verbose_logs_to_stderr(capsys):
    code, out, err = run(["eigs", "--L", "2", "-v", "1"], capsys)
    assert code == 0 and "nonzero" in err and "nonzero" not in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hmimo", "dof", "--geometry", "linear"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert rows(proc.stdout)[1][3] == "20"
    bad = subprocess.run([sys.executable, "-m", "hmimo", "dof", "--extent", "0"],
                         capture_output=True, text=True, check=False)
    assert bad.returncode == 1 and bad.stdout == ""
