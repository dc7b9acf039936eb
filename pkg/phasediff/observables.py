"""
Averages of phase-space functions over a wave function, and the chain from
the measured 2S-2P level shift to the model's physical constants.

The level-shift formulas are written in Gaussian CGS units; thermal
coefficients are produced in SI.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import constants as codata

from .core import ConfigWaveFunction, ModelParams, enforce_boundary
from .quantization import rho_phase

logger = logging.getLogger(__name__)

PhaseFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, c, the electron charge and mass, and Boltzmann's constant."""

    hbar: float
    c: float
    e: float
    m_e: float
    k_B: float
    unit: str = "CGS"

    @property
    def alpha(self) -> float:
        """Fine-structure constant e^2 / (hbar c)."""
        return self.e ** 2 / (self.hbar * self.c)

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar

    @classmethod
    def cgs(cls) -> "PhysicalConstants":
        """CODATA values from scipy.constants in Gaussian units."""
        return cls(
            hbar=codata.hbar * 1e7,  # J s -> erg s
            c=codata.c * 1e2,  # m/s -> cm/s
            e=codata.e * codata.c * 10.0,  # C -> statC
            m_e=codata.m_e * 1e3,  # kg -> g
            k_B=codata.k * 1e7,  # J/K -> erg/K
        )

    @classmethod
    def rounded(cls) -> "PhysicalConstants":
        """Four-figure textbook values, CGS."""
        return cls(hbar=1.0546e-27, c=2.998e10, e=4.803e-10, m_e=9.109e-28, k_B=1.381e-16)

    def si(self) -> "PhysicalConstants":
        if self.unit == "SI":
            return self
        return PhysicalConstants(
            hbar=self.hbar * 1e-7,
            c=self.c * 1e-2,
            e=self.e / (self.c * 0.1),
            m_e=self.m_e * 1e-3,
            k_B=self.k_B * 1e-7,
            unit="SI",
        )


@dataclass(frozen=True)
class ThermalParams:
    """Diffusion coefficients of an electron in a bath at `temperature`, SI units."""

    temperature: float
    gamma: float
    a_sq: float
    b_sq: float
    ab: float
    a_over_b: float
    relaxation_time: float


def _momentum_transform(psi: ConfigWaveFunction) -> np.ndarray:
    """psi_hat(p) = (2 pi hbar)^{-n/2} sum_y psi(y) e^{-i y p / hbar} dx on the p axes."""
    grid = psi.grid
    kernel = np.exp(-1j * np.outer(grid.x_axis, grid.p_axis) / grid.hbar)
    out = psi.values
    for k in range(grid.n):
        out = np.moveaxis(np.tensordot(kernel, out, axes=([0], [k])), 0, k)
    return out * (grid.dx / math.sqrt(2.0 * math.pi * grid.hbar)) ** grid.n


def average_W(F: PhaseFunction, psi: ConfigWaveFunction, params: ModelParams) -> complex:
    """
    Average of F(x, p) against the standard-ordered density
    (2 pi hbar)^{-n/2} psi(x) e^{-i x p / hbar} conj(psi_hat(p)). Complex in
    general; its x-marginal is |psi(x)|^2 and its p-marginal |psi_hat(p)|^2.
    """
    grid = psi.grid
    grid.require_compatible(params)
    enforce_boundary(psi, "average_W")
    n = grid.n
    values = np.reshape(psi.values, grid.config_shape + (1,) * n)
    hat = np.reshape(np.conj(_momentum_transform(psi)), (1,) * n + grid.config_shape)
    density = values * np.conj(grid.gauge_phase) * hat / (2.0 * math.pi * grid.hbar) ** (n / 2.0)
    weights = np.broadcast_to(F(grid.x_mesh, grid.p_mesh), grid.shape)
    return complex(np.sum(weights * density)) * grid.phase_cell


def average_rho(F: PhaseFunction, psi: ConfigWaveFunction, params: ModelParams) -> float:
    """Average of a real F(x, p) against the nonnegative density |lift psi|^2."""
    grid = psi.grid
    rho = rho_phase(psi, params)
    weights = np.broadcast_to(F(grid.x_mesh, grid.p_mesh), grid.shape)
    return float(np.sum(np.real(weights) * rho.values)) * grid.phase_cell


def classical_average(F: PhaseFunction, psi: ConfigWaveFunction) -> float:
    """int F(x, 0) |psi(x)|^2 dx, the limit of both averages as hbar -> 0."""
    grid = psi.grid
    weights = F(grid.config_mesh, np.zeros_like(grid.config_mesh))
    return float(np.sum(np.real(weights) * np.abs(psi.values) ** 2)) * grid.config_cell


def delta_E_n(n_level: int, a_over_b: float, constants: PhysicalConstants) -> float:
    """Level shift -(a/b) m^3 alpha^4 c^4 / (n^3 hbar) of hydrogen level n, CGS."""
    if n_level < 1:
        raise ValueError(f"n_level must be >= 1, got {n_level}")
    if a_over_b < 0:
        raise ValueError(f"a_over_b must be non-negative, got {a_over_b}")
    m, alpha, c = constants.m_e, constants.alpha, constants.c
    return -a_over_b * m ** 3 * alpha ** 4 * c ** 4 / (n_level ** 3 * constants.hbar)


def invert_lamb_shift(delta_E: float, constants: PhysicalConstants, n_level: int = 2) -> float:
    """a/b in s/g from the magnitude of the level-n shift in erg."""
    if not delta_E > 0:
        raise ValueError(f"delta_E must be a positive magnitude, got {delta_E}")
    m, alpha, c = constants.m_e, constants.alpha, constants.c
    return delta_E * n_level ** 3 * constants.hbar / (m ** 3 * alpha ** 4 * c ** 4)


def frequency_to_energy(frequency_mhz: float, constants: PhysicalConstants) -> float:
    return frequency_mhz * 1e6 * constants.h


def smoothing_width(a_over_b: float, constants: PhysicalConstants) -> float:
    """sqrt(a hbar / 2b), the width of chi^2."""
    return math.sqrt(a_over_b * constants.hbar / 2.0)


def compton_length(constants: PhysicalConstants) -> float:
    return constants.hbar / (constants.m_e * constants.c)


def a_over_b_to_si(a_over_b_cgs: float) -> float:
    """s/g -> s/kg."""
    return a_over_b_cgs * 1e3


def thermal_params(temperature: float, a_over_b: float, constants: PhysicalConstants) -> ThermalParams:
    """
    Friction and diffusion coefficients from the Einstein relations:
    gamma = 1 / ((a/b) m), a^2 = kT / (m gamma), b^2 = gamma kT m.
    `a_over_b` is in s/kg.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if not a_over_b > 0:
        raise ValueError(f"a_over_b must be positive, got {a_over_b}")
    si = constants.si()
    kT = si.k_B * temperature
    gamma = 1.0 / (a_over_b * si.m_e)
    a_sq = kT / (si.m_e * gamma)
    b_sq = gamma * kT * si.m_e
    return ThermalParams(
        temperature=temperature,
        gamma=gamma,
        a_sq=a_sq,
        b_sq=b_sq,
        ab=math.sqrt(a_sq * b_sq),
        a_over_b=a_over_b,
        relaxation_time=si.hbar / kT,
    )


@dataclass(frozen=True)
class LambShiftRecord:
    frequency_mhz: float
    delta_E: float
    a_over_b: float
    a_over_b_si: float
    smoothing_width: float
    compton_length: float
    thermal: ThermalParams


def lamb_shift_pipeline(
    frequency_mhz: float = 1058.0,
    temperature: float = 1.0,
    constants: Optional[PhysicalConstants] = None,
) -> LambShiftRecord:
    """Every derived constant from the measured n = 2 shift, in one record."""
    constants = PhysicalConstants.cgs() if constants is None else constants
    delta_E = frequency_to_energy(frequency_mhz, constants)
    a_over_b = invert_lamb_shift(delta_E, constants)
    a_over_b_si = a_over_b_to_si(a_over_b)
    record = LambShiftRecord(
        frequency_mhz=frequency_mhz,
        delta_E=delta_E,
        a_over_b=a_over_b,
        a_over_b_si=a_over_b_si,
        smoothing_width=smoothing_width(a_over_b, constants),
        compton_length=compton_length(constants),
        thermal=thermal_params(temperature, a_over_b_si, constants),
    )
    logger.debug("level-shift chain: %s", record)
    return record
