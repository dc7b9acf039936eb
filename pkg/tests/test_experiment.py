import pytest

from phasediff.core import ModelParams
from phasediff.dynamics import EvolutionConfig
from phasediff.experiment import ExperimentConfig


def full_config():
    return ExperimentConfig(
        scenario="slow-dynamics",
        params=ModelParams(hbar=1.0, mass=0.5, a=5.0, b=10.0),
        points=64,
        aspect=1.5,
        hamiltonian="quartic",
        hamiltonian_args={"lam": 0.1, "omega": 1.0 / 3.0},
        evolution=EvolutionConfig(dt=2e-3, t_end=0.7, substeps=2, hermite_cutoff=32, record_every=5),
        output="out",
        seed=11,
        options={"ladder": (1.0, 2.0), "center": 0.1, "control": "true", "label": "x"},
    )


def test_emit_parse_is_exact():
    """Floats are written with repr, so parsing the emitted text gives the same config."""
    config = full_config()
    parsed = ExperimentConfig.parse(config.emit())
    assert parsed.params == config.params
    assert parsed.evolution == config.evolution
    assert parsed.hamiltonian_args == config.hamiltonian_args
    assert parsed.aspect == config.aspect
    assert (parsed.scenario, parsed.points, parsed.output, parsed.seed) == ("slow-dynamics", 64, "out", 11)
    assert parsed.emit() == config.emit()


def test_auto_values():
    config = ExperimentConfig(scenario="rapid-motion")
    text = config.emit()
    assert "aspect = auto" in text
    assert "hermite_cutoff = auto" in text
    parsed = ExperimentConfig.parse(text)
    assert parsed.aspect is None
    assert parsed.evolution.hermite_cutoff is None


def test_missing_sections_take_defaults():
    config = ExperimentConfig.parse("[scenario]\nname = nonnegativity\n")
    assert config.params == ModelParams()
    assert config.points == 128
    assert config.hamiltonian == "harmonic"
    assert config.evolution == EvolutionConfig()
    assert config.seed == 0


def test_options_are_coerced_to_the_default_type():
    config = ExperimentConfig.parse(full_config().emit())
    assert config.option("ladder", (1.0,)) == (1.0, 2.0)
    assert config.option("center", 0.0) == 0.1
    assert config.option("control", False) is True
    assert config.option("label", "y") == "x"
    assert config.option("missing", 3) == 3
    assert ExperimentConfig(scenario="s", options={"fields": "4"}).option("fields", 1) == 4


@pytest.mark.parametrize(
    "text, message",
    [
        ("[scenario]\nname = x\n[extra]\nk = 1\n", "Unknown configuration sections: extra"),
        ("[scenario]\nname = x\ncolour = red\n", r"\[scenario\] has unknown keys: colour"),
        ("[scenario]\nseed = 1\n", "needs a name"),
        ("[scenario]\nname = x\n[model]\na = wide\n", r"\[model\] a must be a number"),
        ("[scenario]\nname = x\n[grid]\npoints = 12.5\n", r"\[grid\] points must be an integer"),
        ("[scenario]\nname = x\n[evolution]\nmethod = rk4\n", r"\[evolution\] has unknown keys: method"),
        ("[scenario]\nname = x\n[hamiltonian]\nname = morse\n", "Unknown Hamiltonian 'morse'"),
        ("[scenario]\nname = x\nseed = -1\n", "seed must be a non-negative integer"),
        ("[scenario]\nname = x\n[grid]\npoints = 12\n", "power of two"),
        ("no section header\n", "Malformed configuration"),
    ],
)
def test_invalid_configuration(text, message):
    with pytest.raises(ValueError, match=message):
        ExperimentConfig.parse(text)


def test_file_round_trip(tmp_path):
    config = full_config()
    path = config.write(tmp_path / "slow.ini")
    assert ExperimentConfig.from_file(path).emit() == config.emit()


def test_replace_and_helpers():
    config = full_config()
    assert config.replace(seed=3).seed == 3
    assert config.grid().points == 64
    spec = config.build_hamiltonian()
    assert spec.name == "quartic"
    assert spec.frequency == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValueError, match="scenario name"):
        ExperimentConfig(scenario="")
