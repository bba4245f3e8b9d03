import json

import pytest

from mcsched import cli
from mcsched.cli import EXIT_FAIL, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, main
from mcsched.errors import InfeasibleError


def test_run_and_validate(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["run", "--workflow", "cybershake-24", "--algo", "lbs+ls", "--eta", "0.3", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "makespan=" in text and "audit=pass" in text
    assert main(["validate", str(out)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_validate_detects_tampering(tmp_path, capsys):
    out = tmp_path / "s.json"
    main(["run", "--workflow", "epigenomics-24", "--out", str(out)])
    doc = json.loads(out.read_text())
    doc["objectives"]["makespan"] += 1.0
    out.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["validate", str(out)]) == EXIT_FAIL
    assert "FAIL makespan" in capsys.readouterr().out


def test_gen_then_run(tmp_path):
    wf = tmp_path / "w.json"
    assert main(["gen", "epigenomics-30", "--seed", "2", "--out", str(wf)]) == EXIT_OK
    assert main(["run", "--workflow", str(wf), "--algo", "greedy", "--frozen-ciphers"]) == EXIT_OK


def test_sweep(tmp_path):
    out = tmp_path / "res"
    rc = main(["sweep", "--workflow", "cybershake-24", "--algo", "lbs", "--algo", "random", "--eta", "0.2",
               "--eta", "0.6", "--reps", "2", "--out", str(out), "--json"])
    assert rc == EXIT_OK
    assert len((out / "raw.csv").read_text().splitlines()) == 9
    assert (out / "results.json").exists()


def test_io_errors(tmp_path):
    assert main(["run", "--workflow", str(tmp_path / "missing.json")]) == EXIT_IO
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["run", "--workflow", str(bad)]) == EXIT_IO


def test_infeasible_exit_code(monkeypatch, capsys):
    # the default cipher table always admits a zero-vulnerability cipher, so force the error
    def infeasible(*args, **kwargs):
        raise InfeasibleError("system budget: cap exceeded")

    monkeypatch.setattr(cli, "run_pipeline", infeasible)
    assert main(["run", "--workflow", "cybershake-24"]) == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_bad_arguments():
    with pytest.raises(SystemExit):
        main(["run", "--algo", "gsa"])
    assert main(["gen", "ligo-30", "--out", "/tmp/never.json"]) == EXIT_FAIL
