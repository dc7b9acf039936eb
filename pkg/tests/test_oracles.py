import math

import numpy as np
import pytest

from phasediff.core import ModelParams, PhaseGrid, PhaseWaveFunction
from phasediff.dynamics import EvolutionConfig, apply_hatH_local, evolve_schrodinger, state_deviation
from phasediff.errors import DerivativeMismatchError, DimensionOverflowError, QuadratureError
from phasediff.hamiltonians import build_hamiltonian
from phasediff.oracles import (
    DENSE_LIMIT,
    LemmaReport,
    check_derivative,
    dense_from_function,
    dense_generator,
    dense_schrodinger_propagate,
    expm_propagate,
    quad_nd,
    quad_nd_estimate,
    verify_lemma1,
    verify_lemma2,
)
from phasediff.quantization import coherent_state, random_phase_state
from phasediff.runtime import runtime


@pytest.fixture
def params():
    return ModelParams(a=1.0, b=1.0)


@pytest.fixture
def small_grid(params):
    return PhaseGrid.from_params(params, points=16)


def test_check_derivative():
    points = np.linspace(-2.0, 2.0, 9)[None, :]
    error = check_derivative("sin", lambda x: np.sin(x[0]), lambda x: np.cos(x[0]), points)
    assert error < 1e-7
    assert check_derivative("sin", lambda x: np.sin(x[0]), lambda x: -np.sin(x[0]), points, order=2) < 1e-5
    with pytest.raises(DerivativeMismatchError, match="sin"):
        check_derivative("sin", lambda x: np.sin(x[0]), lambda x: np.sin(x[0]), points)


def test_quadrature_of_gaussian():
    value = quad_nd(lambda x, y: np.exp(-(x ** 2) - y ** 2), [(-8.0, 8.0), (-8.0, 8.0)])
    assert value == pytest.approx(math.pi, rel=1e-9)
    estimate = quad_nd_estimate(lambda x: x ** 3, [(0.0, 2.0)])
    assert estimate.value == pytest.approx(4.0)
    assert estimate.order == 32


def test_quadrature_failures():
    with pytest.raises(QuadratureError):
        quad_nd_estimate(lambda x: np.sin(200.0 * x), [(0.0, 10.0)], tol=1e-12, max_order=32)
    with pytest.raises(ValueError, match="up to 3 dimensions"):
        quad_nd(lambda *xs: xs[0], [(0.0, 1.0)] * 4)


def test_kernel_identities_hold():
    """The one-axis kernel identities agree with quadrature."""
    report = verify_lemma1(ModelParams(a=1.0, b=2.0))
    assert len(report) > 0
    assert report.passed, [check.name for check in report.failures]
    report.raise_for_failures()


def test_moment_integrals_hold():
    report = verify_lemma2(ModelParams(a=1.0, b=2.0))
    assert len(report) == 16
    assert report.passed, [check.name for check in report.failures]


def test_lemma_report_collects_failures():
    report = LemmaReport("demo")
    report.add("exact", 1.0, 1.0, 1e-12)
    report.add("zero target", 1e-3, 0.0, 1e-6, scale=10.0)
    assert not report.checks[0].error
    assert report.checks[1].error == pytest.approx(1e-4)
    assert [check.name for check in report.failures] == ["zero target"]
    with pytest.raises(AssertionError, match="demo: 1 check"):
        report.raise_for_failures()


def test_dense_from_function():
    operator = dense_from_function(lambda values: 2.0 * values, (3,))
    assert operator.dimension == 3
    assert np.allclose(operator.matrix, 2.0 * np.eye(3))
    assert np.allclose(operator.apply(np.ones(3)), 2.0)
    with pytest.raises(DimensionOverflowError):
        dense_from_function(lambda values: values, (DENSE_LIMIT + 1,))


def test_dense_diffusion_and_transport_symmetries(params, small_grid):
    harmonic = build_hamiltonian("harmonic", params)
    diffusion = dense_generator("diffusion", None, params, small_grid)
    assert diffusion.dimension == 256
    assert diffusion.hermitian_residual() < 1e-10
    transport = dense_generator("transport", harmonic, params, small_grid)
    assert transport.anti_hermitian_residual() < 1e-10


def test_dense_projector(params, small_grid):
    projector = dense_generator("projector", None, params, small_grid)
    assert projector.hermitian_residual() < 1e-10
    assert projector.idempotence_residual() < 1e-10
    eigenvalues = projector.eigenvalues()
    assert np.allclose(eigenvalues[-16:], 1.0, atol=1e-10)
    assert np.allclose(eigenvalues[:-16], 0.0, atol=1e-10)


def test_expm_of_projector(params, small_grid):
    """exp(t P) = 1 + (e^t - 1) P for a projector."""
    projector = dense_generator("projector", None, params, small_grid)
    with runtime.scoped(boundary_policy="ignore"):
        phi = random_phase_state(small_grid, params, np.random.default_rng(0), x_max=1.0, p_max=1.0)
    t = 0.4
    propagated = expm_propagate(projector, t, phi)
    expected = phi.values + (math.exp(t) - 1.0) * projector.apply(phi.values)
    assert isinstance(propagated, PhaseWaveFunction)
    assert np.max(np.abs(propagated.values - expected)) < 1e-10


def test_dense_generator_validation(params, small_grid):
    with pytest.raises(ValueError, match="kind must be one of"):
        dense_generator("liouville", None, params, small_grid)
    with pytest.raises(ValueError, match="needs a Hamiltonian"):
        dense_generator("full", None, params, small_grid)
    with pytest.raises(DimensionOverflowError):
        dense_generator("diffusion", None, params, PhaseGrid.from_params(params, points=64))


def test_dense_effective_hamiltonian(params):
    grid = PhaseGrid.from_params(params, points=32)
    harmonic = build_hamiltonian("harmonic", params)
    psi = coherent_state(grid, params, center=0.5)
    operator = dense_generator("hatH_local", harmonic, params, grid)
    assert operator.hermitian_residual() < 1e-10
    with runtime.scoped(boundary_policy="ignore"):
        direct = apply_hatH_local(psi, harmonic, params).values
        cfg = EvolutionConfig(dt=0.05, t_end=0.5, record_every=10)
        stepped = evolve_schrodinger(psi, harmonic, params, cfg, method="dense").final
        exact = dense_schrodinger_propagate(operator, 0.5, psi, params.hbar)
    assert np.max(np.abs(operator.apply(psi.values) - direct)) < 1e-10
    assert state_deviation(stepped, exact) < 1e-9
