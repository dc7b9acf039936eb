import threading

import pytest

from phasediff import config
from phasediff.runtime import RuntimeConfig, runtime


@pytest.fixture
def restore_runtime():
    snapshot = runtime.snapshot()
    yield
    runtime.global_defaults = snapshot


def test_defaults():
    """A fresh runtime carries the documented defaults."""
    fresh = RuntimeConfig()
    assert fresh.setting("decay_tol") == 1e-12
    assert fresh.setting("boundary_policy") == "warn"
    assert fresh.setting("hermite_cutoff") == 64
    assert fresh.setting("threads") == 1
    assert fresh.setting("error_mode") == "raise"
    assert fresh.setting("log_level") == "WARNING"


def test_config_sets_process_defaults(restore_runtime):
    config(decay_tol=1e-9, boundary_policy="raise", threads=4)
    assert runtime.setting("decay_tol") == 1e-9
    assert runtime.setting("boundary_policy") == "raise"
    assert runtime.setting("threads") == 4


def test_config_normalizes_values(restore_runtime):
    config(trunc_tol=1, log_level="debug")
    assert isinstance(runtime.setting("trunc_tol"), float)
    assert runtime.setting("log_level") == "DEBUG"


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"boundary_policy": "sometimes"}, "boundary_policy must be one of"),
        ({"error_mode": "swallow"}, "error_mode must be one of"),
        ({"log_level": "LOUD"}, "log_level must be one of"),
        ({"decay_tol": 0.0}, "decay_tol must be a positive number"),
        ({"hermitian_tol": True}, "hermitian_tol must be a positive number"),
        ({"threads": 0}, "threads must be a positive integer"),
        ({"hermite_cutoff": 2.5}, "hermite_cutoff must be a positive integer"),
    ],
)
def test_config_rejects_invalid_values(restore_runtime, kwargs, message):
    with pytest.raises(ValueError, match=message):
        config(**kwargs)


def test_unknown_setting_raises():
    with pytest.raises(KeyError, match="Unknown phasediff setting"):
        runtime.setting("max_pending")


def test_scoped_overrides_and_restores(restore_runtime):
    config(boundary_policy="warn")
    with runtime.scoped(boundary_policy="ignore", decay_tol=1e-6):
        assert runtime.setting("boundary_policy") == "ignore"
        assert runtime.setting("decay_tol") == 1e-6
        with runtime.scoped(boundary_policy="raise"):
            assert runtime.setting("boundary_policy") == "raise"
            assert runtime.setting("decay_tol") == 1e-6
        assert runtime.setting("boundary_policy") == "ignore"
    assert runtime.setting("boundary_policy") == "warn"
    assert runtime.setting("decay_tol") == 1e-12


def test_scoped_rejects_unknown_and_invalid():
    with pytest.raises(KeyError):
        with runtime.scoped(retries=3):
            pass
    with pytest.raises(ValueError):
        with runtime.scoped(threads=-1):
            pass


def test_scoped_is_local_to_the_context(restore_runtime):
    """A scoped override in one thread is invisible to another."""
    config(boundary_policy="warn")
    seen = {}
    entered = threading.Event()
    release = threading.Event()

    def worker():
        with runtime.scoped(boundary_policy="raise"):
            entered.set()
            release.wait(timeout=5)

    thread = threading.Thread(target=worker)
    thread.start()
    entered.wait(timeout=5)
    seen["main"] = runtime.setting("boundary_policy")
    release.set()
    thread.join()
    assert seen["main"] == "warn"


def test_config_file_autoload(restore_runtime, tmp_path, monkeypatch):
    (tmp_path / "phasediff_config.py").write_text(
        "hermite_cutoff = 32\nboundary_policy = 'ignore'\nunrelated = 5\n"
    )
    nested = tmp_path / "a" / "b"
    nested.mkdir(parents=True)
    monkeypatch.chdir(nested)

    config()

    assert runtime.setting("hermite_cutoff") == 32
    assert runtime.setting("boundary_policy") == "ignore"


def test_config_file_dict_form(restore_runtime, tmp_path, monkeypatch):
    (tmp_path / "settings.py").write_text("PHASEDIFF_CONFIG = {'threads': 3, 'error_mode': 'return'}\n")
    monkeypatch.chdir(tmp_path)

    config(config_file="settings.py")

    assert runtime.setting("threads") == 3
    assert runtime.setting("error_mode") == "return"


def test_config_file_explicit_values_win(restore_runtime, tmp_path):
    path = tmp_path / "settings.py"
    path.write_text("threads = 3\n")

    config(config_file=str(path), threads=2)

    assert runtime.setting("threads") == 2


def test_config_file_must_be_dict(restore_runtime, tmp_path):
    path = tmp_path / "settings.py"
    path.write_text("PHASEDIFF_CONFIG = [1, 2]\n")
    with pytest.raises(TypeError, match="must be a dictionary"):
        config(config_file=str(path))


def test_missing_config_file(restore_runtime, tmp_path):
    with pytest.raises(FileNotFoundError, match="Config file not found"):
        config(config_file=str(tmp_path / "absent.py"))


def test_snapshot_is_a_copy(restore_runtime):
    snapshot = runtime.snapshot()
    snapshot["threads"] = 99
    assert runtime.setting("threads") != 99
