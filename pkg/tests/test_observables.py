import math

import numpy as np
import pytest
from scipy import constants as codata

from phasediff.core import ModelParams, PhaseGrid, norm_sq
from phasediff.observables import (
    PhysicalConstants,
    average_rho,
    average_W,
    classical_average,
    compton_length,
    delta_E_n,
    frequency_to_energy,
    invert_lamb_shift,
    lamb_shift_pipeline,
    smoothing_width,
    thermal_params,
)
from phasediff.quantization import gaussian_state


@pytest.fixture
def params():
    return ModelParams(hbar=1.0, mass=1.0, a=1.0, b=2.0)


@pytest.fixture
def psi(params):
    grid = PhaseGrid.from_params(params, points=128)
    return gaussian_state(grid, width=0.8)


def x_squared(x, p):
    return x[0] ** 2


def p_squared(x, p):
    return p[0] ** 2


def test_constants_units():
    cgs = PhysicalConstants.cgs()
    assert 1.0 / cgs.alpha == pytest.approx(137.036, abs=1e-3)
    si = cgs.si()
    assert si.unit == "SI"
    assert si.e == pytest.approx(codata.e, rel=1e-12)
    assert si.hbar == pytest.approx(codata.hbar, rel=1e-12)
    assert si.si() is si
    assert 1.0 / PhysicalConstants.rounded().alpha == pytest.approx(137.0, rel=1e-3)
    assert cgs.h == pytest.approx(2 * math.pi * cgs.hbar)


def test_averages_of_one_are_the_norm(psi, params):
    def one(x, p):
        return np.ones_like(x[0])

    norm = norm_sq(psi)
    assert average_W(one, psi, params) == pytest.approx(norm, abs=1e-10)
    assert average_rho(one, psi, params) == pytest.approx(norm, abs=1e-10)


def test_standard_ordered_average_reproduces_quantum_moments(psi, params):
    """For a real Gaussian of width w, <x^2> = w^2/2 and <p^2> = hbar^2 / 2w^2."""
    assert average_W(x_squared, psi, params).real == pytest.approx(0.32, rel=1e-8)
    assert average_W(p_squared, psi, params).real == pytest.approx(1.0 / 1.28, rel=1e-8)
    mixed = average_W(lambda x, p: x[0] * p[0], psi, params)
    assert abs(mixed.real) < 1e-10
    assert abs(mixed.imag) == pytest.approx(0.5 * params.hbar, rel=1e-8)


def test_smoothed_average_adds_kernel_widths(psi, params):
    """rho carries the extra spread of chi^2 in x and of chi_tilde^2 in p."""
    w_x = average_W(x_squared, psi, params).real
    w_p = average_W(p_squared, psi, params).real
    assert average_rho(x_squared, psi, params) - w_x == pytest.approx(params.width_sq, abs=1e-3)
    assert average_rho(p_squared, psi, params) - w_p == pytest.approx(params.p_width_sq, abs=1e-3)


def test_classical_average(psi):
    assert classical_average(x_squared, psi) == pytest.approx(0.32, rel=1e-10)
    assert classical_average(p_squared, psi) == 0.0


def test_lamb_shift_chain():
    """The measured 1058 MHz shift fixes a/b and the thermal coefficients."""
    record = lamb_shift_pipeline(1058.0, 1.0)
    thermal = record.thermal
    assert record.a_over_b == pytest.approx(3.41e4, rel=0.01)
    assert record.a_over_b_si == pytest.approx(3.41e7, rel=0.01)
    assert record.smoothing_width == pytest.approx(4.24e-12, rel=0.02)
    assert record.compton_length == pytest.approx(3.86e-11, rel=1e-3)
    assert thermal.gamma == pytest.approx(3.22e22, rel=0.01)
    assert thermal.relaxation_time == pytest.approx(7.638e-12, rel=1e-3)
    assert thermal.a_sq == pytest.approx(4.708e-16, rel=0.01)
    assert thermal.b_sq == pytest.approx(4.049e-31, rel=0.01)
    si = PhysicalConstants.cgs().si()
    assert thermal.ab == pytest.approx(si.k_B * thermal.temperature, rel=1e-12)


def test_rounded_inputs_give_the_same_ratio():
    rounded = lamb_shift_pipeline(constants=PhysicalConstants.rounded())
    assert rounded.a_over_b == pytest.approx(3.41e4, rel=0.01)


def test_level_shift_inversion_round_trip():
    constants = PhysicalConstants.cgs()
    energy = frequency_to_energy(1058.0, constants)
    ratio = invert_lamb_shift(energy, constants)
    assert abs(delta_E_n(2, ratio, constants)) == pytest.approx(energy, rel=1e-12)
    assert delta_E_n(1, ratio, constants) / delta_E_n(8, ratio, constants) == pytest.approx(512.0)
    assert delta_E_n(3, ratio, constants) < 0
    assert smoothing_width(ratio, constants) / compton_length(constants) < 0.2


@pytest.mark.parametrize(
    "call, message",
    [
        (lambda c: delta_E_n(0, 1.0, c), "n_level must be >= 1"),
        (lambda c: delta_E_n(2, -1.0, c), "a_over_b must be non-negative"),
        (lambda c: invert_lamb_shift(-1.0, c), "positive magnitude"),
        (lambda c: thermal_params(0.0, 1.0, c), "temperature must be positive"),
        (lambda c: thermal_params(1.0, 0.0, c), "a_over_b must be positive"),
    ],
)
def test_invalid_inputs(call, message):
    with pytest.raises(ValueError, match=message):
        call(PhysicalConstants.cgs())
