import csv

import pytest

from phasediff.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main
from phasediff.runtime import runtime
from phasediff.scenarios import default_config


@pytest.fixture
def restore_runtime():
    snapshot = runtime.snapshot()
    yield
    runtime.global_defaults = snapshot


@pytest.fixture
def workdir(tmp_path, monkeypatch, restore_runtime):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_list(capsys):
    assert main(["list"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "appendix3-constants" in out
    assert "slow-dynamics" in out


def test_default_config(capsys):
    assert main(["default-config", "rapid-motion"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert out.startswith("[scenario]\nname = rapid-motion\n")
    assert "[evolution]" in out


def test_unknown_scenario_is_a_usage_error(capsys, workdir):
    assert main(["run", "tunnelling"]) == EXIT_USAGE
    assert "phasediff: error: Unknown scenario 'tunnelling'" in capsys.readouterr().err


def test_bad_arguments(capsys, workdir):
    assert main(["run", "appendix3-constants", "--threads", "0"]) == EXIT_USAGE
    assert "--threads must be a positive integer" in capsys.readouterr().err
    assert main(["run", "appendix3-constants", "--seed", "-1"]) == EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["run", "appendix3-constants", "--error-mode", "ignore"])


def test_run_writes_results(capsys, workdir):
    out = workdir / "results"
    assert main(["run", "appendix3-constants", "--out", str(out), "--seed", "1"]) == EXIT_PASS
    assert "[appendix3-constants] PASS" in capsys.readouterr().out
    lines = (out / "appendix3-constants" / "results.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema_version=1"
    rows = list(csv.reader(lines[2:]))
    assert rows[0][:3] == ["experiment", "quantity", "value"]
    assert all(row[-1] == "PASS" for row in rows[1:])


def test_run_with_config_file(capsys, workdir):
    path = default_config("appendix3-constants").replace(output="from-config").write(workdir / "a3.ini")
    assert main(["run", "appendix3-constants", "--config", str(path), "--debug"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "--- phasediff Debug Report ---" in out
    assert (workdir / "from-config" / "appendix3-constants" / "results.csv").exists()
    assert main(["run", "nonnegativity", "--config", str(path)]) == EXIT_USAGE


def test_failing_scenario_exits_one(capsys, workdir):
    path = (
        default_config("averaging-limits")
        .replace(options={"width": "narrow"})
        .write(workdir / "broken.ini")
    )
    assert main(["run", "averaging-limits", "--config", str(path), "--out", "out"]) == EXIT_FAIL
    assert "FAIL raised ValueError" in capsys.readouterr().out
