from phasediff.debug import print_debug_report
from phasediff.dynamics import EvolutionConfig
from phasediff.scenarios import default_config


def test_debug_report(capsys):
    """Tests that the report lists scenarios, models, the plan and settings."""
    configs = [
        default_config("appendix3-constants"),
        default_config("slow-dynamics").replace(evolution=EvolutionConfig(dt=0.01, t_end=1.0, hermite_cutoff=16)),
    ]
    print_debug_report(configs, threads=2, seed=7, settings={"decay_tol": 1e-12, "threads": 2})
    output = capsys.readouterr().out
    assert "--- phasediff Debug Report ---" in output
    assert "Scenarios (2):" in output
    assert "• appendix3-constants" in output
    assert "• slow-dynamics" in output
    assert "hbar=1 m=1 a=5 b=10 n=1  (ab/hbar=50)" in output
    assert "Hamiltonian: harmonic {'omega': 1.0}" in output
    assert "steps=100 cutoff=16" in output
    assert "- up to 2 concurrent" in output
    assert "- Seeds: children of SeedSequence(7)" in output
    assert "- decay_tol = 1e-12" in output
    assert "--- End Report ---" in output


def test_debug_report_without_scenarios(capsys):
    print_debug_report([], threads=1, seed=None, settings={})
    output = capsys.readouterr().out
    assert "Scenarios (0):" in output
    assert "- No scenarios to run." in output
