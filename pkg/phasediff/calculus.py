"""
Covariant derivatives, the diffusion operator, the transport operator and
the exact diffusion propagator.

In the gauge-stripped, p-transformed representation psi0(x, y) the diffusion
operator is a harmonic oscillator in the separation u = x - y for every
column y:

    a^2 d^2/du^2 - (b/hbar)^2 u^2 + n ab/hbar

so its eigenfunctions are Hermite functions of u / sqrt(a hbar / b) and
mode j decays like exp(-2 j ab t / hbar).
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.special import eval_hermite, gammaln

from .core import (
    ModelParams,
    PhaseGrid,
    PhaseWaveFunction,
    enforce_boundary,
    fourier_p_inv_values,
    fourier_p_values,
    spectral_derivative,
)
from .errors import CFLViolationError, HermiteTruncationError
from .hamiltonians import HamiltonianSpec
from .runtime import runtime

logger = logging.getLogger(__name__)

CFL_MAX = 2.8


def apply_Dx(field: PhaseWaveFunction, axis: int, params: ModelParams) -> PhaseWaveFunction:
    """D_{x_k} phi = d phi / d x_k - (i p_k / hbar) phi."""
    grid = field.grid
    enforce_boundary(field, "apply_Dx")
    values = spectral_derivative(field.values, axis, grid.dx)
    values -= 1j / params.hbar * grid.p_mesh[axis] * field.values
    return field.with_values(values)


def apply_Dp(field: PhaseWaveFunction, axis: int, params: ModelParams) -> PhaseWaveFunction:
    """D_{p_k} phi = d phi / d p_k."""
    grid = field.grid
    enforce_boundary(field, "apply_Dp")
    return field.with_values(spectral_derivative(field.values, grid.n + axis, grid.dp))


def diffusion_mixed_values(values: np.ndarray, grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    """The diffusion operator acting on psi0(x, y) values."""
    n = grid.n
    ndim = values.ndim
    coupling = (params.b / params.hbar) ** 2
    out = n * params.rate * values
    for k in range(n):
        out += params.a ** 2 * spectral_derivative(values, k, grid.dx, order=2)
        out -= coupling * grid.pair(grid.separation_table ** 2, k, n + k, ndim) * values
    return out


def apply_diffusion(field: PhaseWaveFunction, params: ModelParams) -> PhaseWaveFunction:
    """
    Delta_{a,b} phi, evaluated in the gauge-stripped p-transformed
    representation where it is Hermitian on the grid.
    """
    grid = field.grid
    grid.require_compatible(params)
    enforce_boundary(field, "apply_diffusion")
    stripped = field.values * np.conj(grid.gauge_phase)
    mixed = fourier_p_values(stripped, grid)
    back = fourier_p_inv_values(diffusion_mixed_values(mixed, grid, params), grid)
    return field.with_values(back * grid.gauge_phase)


def apply_diffusion_covariant(field: PhaseWaveFunction, params: ModelParams) -> PhaseWaveFunction:
    """Delta_{a,b} written directly as a^2 sum D_x^2 + b^2 sum d^2/dp^2 + n ab/hbar."""
    grid = field.grid
    grid.require_compatible(params)
    out = grid.n * params.rate * field.values
    for k in range(grid.n):
        out = out + params.a ** 2 * apply_Dx(apply_Dx(field, k, params), k, params).values
        out = out + params.b ** 2 * spectral_derivative(field.values, grid.n + k, grid.dp, order=2)
    return field.with_values(out)


class TransportOperator:
    """
    The transport operator A for a fixed Hamiltonian on a fixed grid.

    The Liouville part is discretized in skew-symmetrized form,
    1/2 (H_x d_p + d_p H_x) - 1/2 (H_p d_x + d_x H_p), which equals the
    plain form in the continuum and is exactly anti-Hermitian on the grid.
    """

    def __init__(self, grid: PhaseGrid, hamiltonian: HamiltonianSpec, params: ModelParams) -> None:
        grid.require_compatible(params)
        self.grid = grid
        self.params = params
        self.hamiltonian = hamiltonian
        x, p = grid.x_mesh, grid.p_mesh
        self.h_x = np.broadcast_to(hamiltonian.grad_x(x, p), x.shape)
        self.h_p = np.broadcast_to(hamiltonian.grad_p(x, p), p.shape)
        value = np.broadcast_to(hamiltonian.value(x, p), grid.shape)
        self.phase = -1j / params.hbar * (value - np.sum(self.h_p * p, axis=0))

    @property
    def spectral_radius(self) -> float:
        """Upper estimate of the largest |eigenvalue| of A on the grid."""
        grid = self.grid
        radius = float(np.max(np.abs(self.phase)))
        for k in range(grid.n):
            radius += math.pi * float(np.max(np.abs(self.h_p[k]))) / grid.dx
            radius += math.pi * float(np.max(np.abs(self.h_x[k]))) / grid.dp
        return radius

    def cfl_number(self, dt: float) -> float:
        return dt * self.spectral_radius

    def check_cfl(self, dt: float, limit: float = CFL_MAX) -> float:
        number = self.cfl_number(dt)
        if number > limit:
            raise CFLViolationError(number, limit, dt)
        return number

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        grid = self.grid
        n = grid.n
        out = self.phase * values
        for k in range(n):
            h_x, h_p = self.h_x[k], self.h_p[k]
            out += 0.5 * (
                h_x * spectral_derivative(values, n + k, grid.dp)
                + spectral_derivative(h_x * values, n + k, grid.dp)
            )
            out -= 0.5 * (
                h_p * spectral_derivative(values, k, grid.dx)
                + spectral_derivative(h_p * values, k, grid.dx)
            )
        return out

    def apply(self, field: PhaseWaveFunction) -> PhaseWaveFunction:
        enforce_boundary(field, "apply_transport")
        return field.with_values(self.apply_values(field.values))


def apply_transport(
    field: PhaseWaveFunction, hamiltonian: HamiltonianSpec, params: ModelParams
) -> PhaseWaveFunction:
    """A phi = sum (H_x d phi/dp - H_p d phi/dx) - (i/hbar)(H - sum H_p p) phi."""
    return TransportOperator(field.grid, hamiltonian, params).apply(field)


def hermite_functions(u: np.ndarray, order: int, scale: float) -> np.ndarray:
    """
    Normalized Hermite functions h_j(u) for j < order, shape (order, len(u)),
    with int h_j^2 du = 1 at width `scale`.
    """
    xi = np.asarray(u, dtype=float) / scale
    j = np.arange(order)
    log_norm = 0.5 * (j * math.log(2.0) + gammaln(j + 1) + 0.5 * math.log(math.pi) + math.log(scale))
    polys = eval_hermite(j[:, None], xi[None, :])
    return polys * np.exp(-0.5 * xi[None, :] ** 2 - log_norm[:, None])


def eigenvalue_ladder(j: Union[int, Sequence[int]], params: ModelParams) -> float:
    """
    lambda_j = -(2|j| + n) ab/hbar for the oscillator without the n ab/hbar
    shift; |j| is the total order of a multi-index.
    """
    order = int(np.sum(np.abs(j)))
    return -(2 * order + params.n) * params.rate


def diffusion_eigenvalue(j: Union[int, Sequence[int]], params: ModelParams) -> float:
    """Eigenvalue of Delta_{a,b} itself: -2|j| ab/hbar."""
    return eigenvalue_ladder(j, params) + params.n * params.rate


def spectral_second_derivative_matrix(points: int, spacing: float) -> np.ndarray:
    return spectral_derivative(np.eye(points), 0, spacing, order=2).real


class HermiteBasis:
    """
    Discrete Hermite functions of the separation u on the x grid: the
    leading eigenvectors of a^2 D2 - (b/hbar)^2 u^2, normalized so that
    sum |h_j|^2 dx = 1 and sign-aligned with the analytic functions.
    """

    def __init__(self, grid: PhaseGrid, params: ModelParams, cutoff: Optional[int] = None) -> None:
        cutoff = runtime.setting("hermite_cutoff") if cutoff is None else cutoff
        if cutoff < 1:
            raise ValueError(f"Hermite cutoff must be positive, got {cutoff}")
        self.grid = grid
        self.cutoff = min(int(cutoff), grid.points)
        self.scale = params.chi_scale
        self.operator = (
            params.a ** 2 * spectral_second_derivative_matrix(grid.points, grid.dx)
            - (params.b / params.hbar) ** 2 * np.diag(grid.offsets ** 2)
        )
        eigenvalues, eigenvectors = linalg.eigh(self.operator)
        order = np.argsort(eigenvalues)[::-1][: self.cutoff]
        vectors = eigenvectors[:, order]
        self.analytic = hermite_functions(grid.offsets, self.cutoff, self.scale)
        overlap = np.sum(vectors * self.analytic.T, axis=0)
        signs = np.where(overlap < 0, -1.0, 1.0)
        self.vectors = vectors * signs
        self.eigenvalues = eigenvalues[order]
        self.tables = self.vectors.T / math.sqrt(grid.dx)

    def gram_deviation(self) -> float:
        gram = self.tables @ self.tables.T * self.grid.dx
        return float(np.max(np.abs(gram - np.eye(self.cutoff))))

    def eigen_residual(self) -> float:
        residual = self.operator @ self.vectors - self.vectors * self.eigenvalues
        return float(np.max(np.linalg.norm(residual, axis=0) / np.abs(self.eigenvalues)))

    def analytic_deviation(self, up_to: int = 10) -> float:
        """Largest difference from the analytic Hermite functions for j <= up_to."""
        count = min(up_to + 1, self.cutoff)
        diff = self.tables[:count] - self.analytic[:count]
        return float(np.max(np.abs(diff)) / np.max(np.abs(self.analytic[:count])))


class DiffusionPropagator:
    """
    Exact propagator exp(t Delta_{a,b}) through the Hermite expansion of
    every column of psi0 around its own y.
    """

    def __init__(self, grid: PhaseGrid, params: ModelParams, cutoff: Optional[int] = None) -> None:
        grid.require_compatible(params)
        self.grid = grid
        self.params = params
        self.basis = HermiteBasis(grid, params, cutoff)
        # basis eigenvalues are -(2j+1) ab/hbar per axis
        self.rates = self.basis.eigenvalues + params.rate
        idx = np.arange(grid.points)
        self._skew = (idx[:, None] + idx[None, :]) % grid.points
        self._unskew = (idx[:, None] - idx[None, :]) % grid.points

    @property
    def cutoff(self) -> int:
        return self.basis.cutoff

    def coefficients(self, mixed: np.ndarray) -> np.ndarray:
        grid = self.grid
        n = grid.n
        coeffs = mixed
        for k in range(n):
            index = grid.pair(self._skew, k, n + k, coeffs.ndim)
            skewed = np.take_along_axis(coeffs, index, axis=k)
            coeffs = np.moveaxis(np.tensordot(self.basis.vectors, skewed, axes=([0], [k])), 0, k)
        return coeffs

    def reassemble(self, coeffs: np.ndarray) -> np.ndarray:
        grid = self.grid
        n = grid.n
        values = coeffs
        for k in reversed(range(n)):
            expanded = np.moveaxis(np.tensordot(self.basis.vectors, values, axes=([1], [k])), 0, k)
            index = grid.pair(self._unskew, k, n + k, expanded.ndim)
            values = np.take_along_axis(expanded, index, axis=k)
        return values

    def mixed_values(self, values: np.ndarray) -> np.ndarray:
        return fourier_p_values(values * np.conj(self.grid.gauge_phase), self.grid)

    def discarded_fraction(self, field: PhaseWaveFunction) -> float:
        """Share of the mass of `field` that lies outside the kept Hermite modes."""
        mixed = self.mixed_values(field.values)
        return self._discarded(mixed, self.coefficients(mixed))

    @staticmethod
    def _discarded(mixed: np.ndarray, coeffs: np.ndarray) -> float:
        total = float(np.vdot(mixed, mixed).real)
        if total <= 0:
            return 0.0
        kept = float(np.vdot(coeffs, coeffs).real)
        return max(total - kept, 0.0) / total

    def propagate_mixed(self, mixed: np.ndarray, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"diffusion time must be non-negative, got {t}")
        if t == 0:
            return mixed.copy()
        coeffs = self.coefficients(mixed)
        discarded = self._discarded(mixed, coeffs)
        tolerance = runtime.setting("trunc_tol")
        if discarded > tolerance:
            raise HermiteTruncationError(discarded, tolerance, self.cutoff)
        logger.debug("Hermite truncation discards %.3e of the mass", discarded)
        decay = np.exp(t * self.rates)
        for k in range(self.grid.n):
            shape = [1] * coeffs.ndim
            shape[k] = decay.size
            coeffs = coeffs * decay.reshape(shape)
        return self.reassemble(coeffs)

    def propagate_values(self, values: np.ndarray, t: float) -> np.ndarray:
        grid = self.grid
        if t == 0:
            return values.copy()
        mixed = self.mixed_values(values)
        evolved = self.propagate_mixed(mixed, t)
        return fourier_p_inv_values(evolved, grid) * grid.gauge_phase

    def propagate(self, field: PhaseWaveFunction, t: float) -> PhaseWaveFunction:
        enforce_boundary(field, "diffusion_propagate_exact")
        return field.with_values(self.propagate_values(field.values, t))


@lru_cache(maxsize=16)
def diffusion_propagator(grid: PhaseGrid, params: ModelParams, cutoff: Optional[int] = None) -> DiffusionPropagator:
    return DiffusionPropagator(grid, params, cutoff)


def diffusion_propagate_exact(
    field: PhaseWaveFunction, t: float, params: ModelParams, cutoff: Optional[int] = None
) -> PhaseWaveFunction:
    """exp(t Delta_{a,b}) phi."""
    if t < 0:
        raise ValueError(f"diffusion time must be non-negative, got {t}")
    if cutoff is None:
        cutoff = runtime.setting("hermite_cutoff")
    return diffusion_propagator(field.grid, params, cutoff).propagate(field, t)
