import math

import numpy as np
import pytest

from phasediff.core import ModelParams
from phasediff.errors import DerivativeMismatchError
from phasediff.hamiltonians import HAMILTONIANS, HamiltonianSpec, build_hamiltonian


@pytest.fixture
def params():
    return ModelParams(hbar=1.0, mass=2.0, a=1.0, b=2.0)


@pytest.mark.parametrize("name", sorted(HAMILTONIANS))
def test_registry_builds_validated_hamiltonians(name, params):
    """Every registered Hamiltonian passes its own derivative check on construction."""
    spec = build_hamiltonian(name, params)
    assert spec.name == name
    assert spec.check_derivatives() <= 1e-5


def test_unknown_hamiltonian(params):
    with pytest.raises(ValueError, match="Unknown Hamiltonian 'morse'"):
        build_hamiltonian("morse", params)


def test_harmonic_values(params):
    spec = build_hamiltonian("harmonic", params, omega=2.0)
    x = np.array([[1.0, 0.0]])
    p = np.array([[2.0, 1.0]])
    # p^2 / 2m + m omega^2 x^2 / 2 with m = 2
    assert np.allclose(spec.value(x, p), [1.0 + 4.0, 0.25])
    assert np.allclose(spec.grad_x(x, p), [[8.0, 0.0]])
    assert np.allclose(spec.grad_p(x, p), [[1.0, 0.5]])
    assert np.allclose(spec.laplacian_x(x, p), 8.0)
    assert spec.frequency == 2.0
    assert spec.separable


def test_quartic_frequency_defaults_to_curvature(params):
    spec = build_hamiltonian("quartic", params, lam=0.3)
    assert spec.frequency == pytest.approx(math.sqrt(12 * 0.3 / params.mass))
    with_omega = build_hamiltonian("quartic", params, lam=0.3, omega=1.5)
    assert with_omega.frequency == 1.5


def test_coulomb_is_one_dimensional(params):
    spec = build_hamiltonian("regularized-coulomb-1d", params, charge=2.0, softening=0.5)
    x = np.array([[0.0]])
    assert spec.potential(x) == pytest.approx(-4.0)
    # V'' at the origin is Z / s^3
    assert spec.potential_laplacian(x) == pytest.approx(2.0 / 0.125)
    with pytest.raises(ValueError, match="needs n = 1"):
        build_hamiltonian("regularized-coulomb-1d", params.replace(n=2))


def test_constant_is_not_separable(params):
    spec = build_hamiltonian("constant", params, c=0.75)
    x = np.zeros((2, 3))
    assert np.allclose(spec.value(x, x), 0.75)
    assert not spec.separable
    assert spec.hess_x(x, x).shape == (2, 2, 3)


def test_two_dimensional_hessian(params):
    spec = build_hamiltonian("quartic", params.replace(n=2), lam=0.1, omega=1.0)
    x = np.array([[1.0], [2.0]])
    hess = spec.hess_x(x, np.zeros_like(x))
    assert hess.shape == (2, 2, 1)
    assert hess[0, 1, 0] == 0.0
    assert hess[1, 1, 0] == pytest.approx(12 * 0.1 * 4.0 + params.mass)


def test_wrong_derivative_is_rejected():
    with pytest.raises(DerivativeMismatchError, match="dH/dx0"):
        HamiltonianSpec(
            name="broken",
            value=lambda x, p: np.sum(x ** 2, axis=0),
            grad_x=lambda x, p: x,
            grad_p=lambda x, p: np.zeros_like(p),
            hess_x=lambda x, p: np.full((1, 1) + x.shape[1:], 2.0),
        )


def test_validation_can_be_skipped():
    spec = HamiltonianSpec(
        name="unchecked",
        value=lambda x, p: np.sum(x ** 2, axis=0),
        grad_x=lambda x, p: x,
        grad_p=lambda x, p: np.zeros_like(p),
        hess_x=lambda x, p: np.full((1, 1) + x.shape[1:], 2.0),
        validate=False,
    )
    with pytest.raises(DerivativeMismatchError):
        spec.check_derivatives()
