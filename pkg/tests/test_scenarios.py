import numpy as np
import pytest

from phasediff.dynamics import EvolutionConfig
from phasediff.errors import UnknownScenarioError
from phasediff.experiment import ExperimentConfig
from phasediff.scenarios import (
    SCENARIOS,
    default_config,
    emit_default_config,
    get_scenario,
    list_scenarios,
    load_config,
    run_scenario,
)

NAMES = [
    "appendix3-constants",
    "lemma-integrals",
    "projector-laws",
    "rapid-motion",
    "nonnegativity",
    "effective-hamiltonian",
    "slow-dynamics",
    "oracle-equivalence",
    "averaging-limits",
]


def test_registry():
    assert list(SCENARIOS) == NAMES
    listing = list_scenarios()
    for name in NAMES:
        assert name in listing
    assert get_scenario("rapid-motion").name == "rapid-motion"
    with pytest.raises(UnknownScenarioError, match="Unknown scenario 'tunnelling'"):
        get_scenario("tunnelling")


@pytest.mark.parametrize("name", NAMES)
def test_default_configs_round_trip(name):
    config = default_config(name)
    assert config.scenario == name
    assert ExperimentConfig.parse(emit_default_config(name)).emit() == config.emit()


def test_load_config(tmp_path):
    path = default_config("nonnegativity").replace(seed=5).write(tmp_path / "run.ini")
    assert load_config(path).seed == 5
    path.write_text("[scenario]\nname = tunnelling\n", encoding="utf-8")
    with pytest.raises(UnknownScenarioError):
        load_config(path)


def test_constants_scenario_passes(tmp_path):
    table = run_scenario(default_config("appendix3-constants"), tmp_path)
    assert table.passed, table.summary()
    assert table["appendix3-constants", "a/b [s/g]"].value == pytest.approx(3.41e4, rel=0.01)
    assert (tmp_path / "results.csv").exists()
    assert (tmp_path / "summary.txt").read_text(encoding="utf-8").startswith("[appendix3-constants] PASS")
    assert (tmp_path / "constants.csv").exists()


def test_kernel_integral_scenario_passes(tmp_path):
    table = run_scenario(default_config("lemma-integrals"), tmp_path)
    assert table.passed, table.summary()
    assert len(table["lemma-integrals"]) > 16
    assert (tmp_path / "lemma_checks.csv").exists()


def test_nonnegativity_scenario_passes(tmp_path):
    table = run_scenario(default_config("nonnegativity"), tmp_path)
    assert table.passed, table.summary()
    assert table["nonnegativity", "min W / max |W|"].value < -0.01


def test_averaging_scenario_passes(tmp_path):
    table = run_scenario(default_config("averaging-limits"), tmp_path)
    assert table.passed, table.summary()
    assert (tmp_path / "averages.csv").exists()


def test_same_seed_same_rows(tmp_path):
    """Rows depend only on the configuration and the seed."""
    config = default_config("projector-laws").replace(options={"fields": 2, "kernel_fields": 0})
    first = run_scenario(config, tmp_path / "a", seed=4)
    second = run_scenario(config, tmp_path / "b", seed=np.random.SeedSequence(4))
    assert [row.csv_fields() for row in first] == [row.csv_fields() for row in second]


def test_raising_scenario_in_return_mode(tmp_path):
    config = default_config("averaging-limits").replace(options={"width": "narrow"})
    table = run_scenario(config, tmp_path, error_mode="return")
    assert not table.passed
    assert isinstance(table["averaging-limits"], ValueError)
    assert "error,ValueError" in (tmp_path / "results.csv").read_text(encoding="utf-8")
    with pytest.raises(ValueError):
        run_scenario(config, tmp_path, error_mode="raise")


def reduced(name, **options):
    config = default_config(name)
    return config.replace(options={**config.options, **options})


def test_projector_laws_scenario_passes(tmp_path):
    table = run_scenario(reduced("projector-laws", fields=3, kernel_fields=0), tmp_path)
    assert table.passed, table.summary()
    assert len(table["projector-laws"]) == 7
    assert (tmp_path / "projector_residuals.csv").exists()


@pytest.mark.slow
def test_projector_laws_scenario_with_kernel_integral(tmp_path):
    table = run_scenario(reduced("projector-laws", fields=2, kernel_fields=1), tmp_path)
    assert table.passed, table.summary()


@pytest.mark.slow
def test_rapid_motion_scenario(tmp_path):
    """Only the rows against (-ln eps) hbar / ab fail: relaxation is faster than that reference."""
    table = run_scenario(reduced("rapid-motion", seeds=2), tmp_path)
    reference_rows = [row for row in table["rapid-motion"] if row.quantity.startswith("t_eps / ((-ln eps)")]
    assert len(reference_rows) == 2
    assert all(row.value < 1.0 for row in reference_rows)
    assert [row.quantity for row in table.failures] == [row.quantity for row in reference_rows]
    assert table["rapid-motion", "t_eps / first-shell relaxation time, eta(0) = 0.5"].passed
    assert (tmp_path / "eta_series.csv").exists()


@pytest.mark.slow
def test_effective_hamiltonian_scenario_passes(tmp_path):
    table = run_scenario(reduced("effective-hamiltonian", states=3), tmp_path)
    assert table.passed, table.summary()


@pytest.mark.slow
def test_slow_dynamics_scenario_passes(tmp_path):
    config = reduced("slow-dynamics", ladder="1")
    config = config.replace(evolution=EvolutionConfig(dt=2e-3, t_end=1.0, record_every=50))
    table = run_scenario(config, tmp_path)
    assert table.passed, table.summary()
    assert table["slow-dynamics", "free packet vs closed form [rel]"].value < 1e-8
    assert table["slow-dynamics", "coherent center vs classical orbit"].value < 1e-6
    assert table["slow-dynamics", "energy drift, dense steps [rel]"].value < 1e-8
    assert (tmp_path / "deviations.csv").exists()


@pytest.mark.slow
def test_oracle_equivalence_scenario_passes(tmp_path):
    table = run_scenario(reduced("oracle-equivalence", fields=2), tmp_path)
    assert table.passed, table.summary()
    assert (tmp_path / "diffusion_spectrum.csv").exists()
