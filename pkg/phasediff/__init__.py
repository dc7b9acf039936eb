"""
phasediff.

A numerical laboratory for a diffusion model of quantum mechanics in phase
space. Phase-space wave functions evolve under a fast diffusion that drives
them onto the image of the lift from configuration space, and a slow
transport that follows the classical Hamiltonian. The package discretizes
both, checks the algebraic and asymptotic claims that connect them to the
Schrodinger equation, and runs the named experiments that report those
checks as versioned result tables.
"""

from .core import (
    ConfigWaveFunction,
    DensityField,
    MixedWaveFunction,
    ModelParams,
    PhaseGrid,
    PhaseWaveFunction,
    inner,
    norm_sq,
)
from .calculus import apply_diffusion, apply_transport, diffusion_propagate_exact
from .dynamics import (
    EvolutionConfig,
    apply_hatH_integral,
    apply_hatH_local,
    evolve_full,
    evolve_schrodinger,
    rapid_slow_experiment,
    slow_dynamics_agreement,
)
from .errors import (
    BoundaryDecayError,
    CFLViolationError,
    DerivativeMismatchError,
    DimensionOverflowError,
    GridMismatchError,
    HermiteTruncationError,
    NonFiniteFieldError,
    QuadratureError,
    UnknownScenarioError,
)
from .executor import run_plan
from .experiment import ExperimentConfig
from .hamiltonians import HAMILTONIANS, HamiltonianSpec, build_hamiltonian
from .observables import PhysicalConstants, average_rho, average_W, lamb_shift_pipeline
from .quantization import extract, lift, project_P0, rho_config, rho_phase, wigner
from .result import ResultTable
from .runtime import config
from .scenarios import SCENARIOS, run_scenario

__version__ = "0.1.0"
__all__ = [
    "__version__",
    "ModelParams",
    "PhaseGrid",
    "PhaseWaveFunction",
    "MixedWaveFunction",
    "ConfigWaveFunction",
    "DensityField",
    "inner",
    "norm_sq",
    "apply_diffusion",
    "apply_transport",
    "diffusion_propagate_exact",
    "EvolutionConfig",
    "apply_hatH_local",
    "apply_hatH_integral",
    "evolve_full",
    "evolve_schrodinger",
    "rapid_slow_experiment",
    "slow_dynamics_agreement",
    "HAMILTONIANS",
    "HamiltonianSpec",
    "build_hamiltonian",
    "lift",
    "extract",
    "project_P0",
    "rho_phase",
    "rho_config",
    "wigner",
    "average_W",
    "average_rho",
    "PhysicalConstants",
    "lamb_shift_pipeline",
    "ExperimentConfig",
    "ResultTable",
    "SCENARIOS",
    "run_scenario",
    "run_plan",
    "config",
    "BoundaryDecayError",
    "CFLViolationError",
    "DerivativeMismatchError",
    "DimensionOverflowError",
    "GridMismatchError",
    "HermiteTruncationError",
    "NonFiniteFieldError",
    "QuadratureError",
    "UnknownScenarioError",
]
