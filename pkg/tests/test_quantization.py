import math

import numpy as np
import pytest

from phasediff.core import ConfigWaveFunction, ModelParams, PhaseGrid, PhaseWaveFunction, inner, norm_sq
from phasediff.errors import GridMismatchError
from phasediff.quantization import (
    cat_state,
    chi,
    chi_kernel,
    chi_tilde,
    coherent_state,
    extract,
    gaussian_state,
    lift,
    lift_mode,
    lift_u,
    normalized,
    orthogonal_complement,
    project_P0,
    project_P0_kernel,
    random_config_state,
    random_phase_state,
    rho_config,
    rho_phase,
    wigner,
)
from phasediff.runtime import runtime


@pytest.fixture
def params():
    return ModelParams(hbar=1.0, mass=1.0, a=1.0, b=2.0)


@pytest.fixture
def grid(params):
    return PhaseGrid.from_params(params, points=128)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def relative(f, g):
    return math.sqrt(norm_sq(f - g) / norm_sq(g))


def test_chi_is_normalized(params):
    u = np.linspace(-8, 8, 8001)
    du = u[1] - u[0]
    assert np.sum(chi(u, params) ** 2) * du == pytest.approx(1.0, abs=1e-10)
    assert np.sum(u ** 2 * chi(u, params) ** 2) * du == pytest.approx(params.width_sq, rel=1e-8)
    k = np.linspace(-16, 16, 8001)
    dk = k[1] - k[0]
    assert np.sum(chi_tilde(k, params) ** 2) * dk == pytest.approx(1.0, abs=1e-10)


def test_sampled_kernel(grid, params):
    kernel = chi_kernel(grid, params)
    assert kernel.sampled_norm == pytest.approx(1.0, abs=1e-12)
    assert np.sum(kernel.profile ** 2) * grid.dx == pytest.approx(1.0, abs=1e-14)
    assert kernel.variance() == pytest.approx(params.width_sq, rel=1e-10)
    assert chi_kernel(grid, params) is kernel


def test_extract_inverts_lift(grid, params, rng):
    psi = random_config_state(grid, params, rng)
    phi = lift(psi, params)
    assert relative(extract(phi, params), psi) < 1e-12
    assert norm_sq(phi) == pytest.approx(norm_sq(psi), rel=1e-12)


def test_lift_is_linear(grid, params, rng):
    f = random_config_state(grid, params, rng)
    g = random_config_state(grid, params, rng)
    combined = lift(f * (2.0 - 1j) + g, params)
    separate = lift(f, params) * (2.0 - 1j) + lift(g, params)
    assert relative(combined, separate) < 1e-12


def test_lift_requires_matching_params(grid, params, rng):
    psi = random_config_state(grid, params, rng)
    with pytest.raises(GridMismatchError):
        lift(psi, params.replace(hbar=0.5))


def test_projector_laws(grid, params, rng):
    """P0 is idempotent and self-adjoint, and fixes lifted states."""
    phi = random_phase_state(grid, params, rng)
    other = random_phase_state(grid, params, rng)
    projected = project_P0(phi, params)
    assert relative(project_P0(projected, params), projected) < 1e-10
    lhs = inner(projected, other)
    rhs = inner(phi, project_P0(other, params))
    assert abs(lhs - rhs) < 1e-10
    assert norm_sq(projected) < norm_sq(phi)
    lifted = lift(random_config_state(grid, params, rng), params)
    assert relative(project_P0(lifted, params), lifted) < 1e-12


def test_excited_modes_are_annihilated(grid, params, rng):
    psi = random_config_state(grid, params, rng)
    excited = lift_mode(psi, params, (1,))
    assert math.sqrt(norm_sq(project_P0(excited, params)) / norm_sq(excited)) < 1e-10
    ground = lift_mode(psi, params, (0,))
    assert relative(ground, lift(psi, params)) < 1e-8
    with pytest.raises(ValueError, match="non-negative integers"):
        lift_mode(psi, params, (1, 0))


def test_lift_u_carries_the_separation(grid, params, rng):
    """lift_u is the first Hermite mode scaled by the kernel width."""
    psi = random_config_state(grid, params, rng)
    shifted = lift_u(psi, params)
    mode = lift_mode(psi, params, (1,))
    factor = inner(mode, shifted) / norm_sq(mode)
    assert abs(factor) == pytest.approx(params.chi_scale / math.sqrt(2.0), rel=1e-8)
    with pytest.raises(ValueError, match="axis must be in"):
        lift_u(psi, params, axis=1)


def test_kernel_projector_matches_transform():
    params = ModelParams(a=1.0, b=1.0)
    grid = PhaseGrid.from_params(params, points=32)
    x, p = grid.x_mesh[0], grid.p_mesh[0]
    phi = PhaseWaveFunction(grid, np.exp(-((x - 0.3) ** 2) / 2 - (p + 0.4) ** 2 / 2 + 0.5j * x))
    with runtime.scoped(boundary_policy="ignore"):
        direct = project_P0_kernel(phi, params)
        transform = project_P0(phi, params)
    assert relative(direct, transform) < 1e-4


def test_orthogonal_complement():
    params = ModelParams(a=1.0, b=1.0)
    grid = PhaseGrid.from_params(params, points=16)
    rng = np.random.default_rng(3)
    with runtime.scoped(boundary_policy="ignore"):
        phi = random_phase_state(grid, params, rng, x_max=1.0, p_max=1.0)
        rest = orthogonal_complement(phi, params)
        assert math.sqrt(norm_sq(project_P0(rest, params))) < 1e-10
        assert relative(rest + project_P0(phi, params), phi) < 1e-10


def test_rho_is_nonnegative_with_the_right_marginal(grid, params):
    psi = cat_state(grid, params)
    rho = rho_phase(psi, params)
    assert rho.values.min() >= 0.0
    assert rho.integral() == pytest.approx(norm_sq(psi), rel=1e-12)
    marginal = rho.marginal_x().values
    convolved = rho_config(psi, params).values
    assert np.max(np.abs(marginal - convolved)) / np.max(convolved) < 1e-8


def test_wigner_of_gaussian(grid, params):
    """W of the unit Gaussian is exp(-x^2 - p^2) / (pi hbar)."""
    psi = gaussian_state(grid, width=1.0)
    w = wigner(psi, params)
    x, p = grid.x_mesh[0], grid.p_mesh[0]
    expected = np.exp(-(x ** 2) - p ** 2) / math.pi
    assert np.max(np.abs(w.values - expected)) < 1e-10


def test_wigner_of_cat_state_goes_negative(grid, params):
    psi = cat_state(grid, params, separation_factor=4.0)
    w = wigner(psi, params)
    assert w.values.min() < -0.01 * np.abs(w.values).max()
    density = np.abs(psi.values) ** 2
    assert np.max(np.abs(w.marginal_x().values - density)) / density.max() < 1e-8
    assert w.integral() == pytest.approx(1.0, abs=1e-10)


def test_state_builders(grid, params, rng):
    gaussian = gaussian_state(grid, center=1.0, momentum=-0.5, width=0.7)
    assert norm_sq(gaussian) == pytest.approx(1.0, abs=1e-12)
    coherent = coherent_state(grid, params, center=0.5, omega=4.0)
    assert norm_sq(coherent) == pytest.approx(1.0, abs=1e-12)
    assert norm_sq(normalized(gaussian * 3.0)) == pytest.approx(1.0)
    assert norm_sq(random_config_state(grid, params, rng)) == pytest.approx(1.0)
    assert norm_sq(random_phase_state(grid, params, rng)) == pytest.approx(1.0)
    assert isinstance(cat_state(grid, params), ConfigWaveFunction)
