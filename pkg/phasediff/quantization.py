"""
Maps between configuration wave functions psi(y) and phase-space wave
functions phi(x, p): the chi kernel, lift, extract, the projector P0, the
nonnegative density rho and the Wigner function.
"""
import logging
import math
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .calculus import HermiteBasis
from .core import (
    ConfigWaveFunction,
    DensityField,
    ModelParams,
    PhaseGrid,
    PhaseWaveFunction,
    enforce_boundary,
    fourier_p_inv_values,
    fourier_p_values,
    norm_sq,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


def chi(u: ArrayLike, params: ModelParams) -> np.ndarray:
    """chi(u) = (b / a pi hbar)^{1/4} exp(-b u^2 / 2 a hbar), one axis."""
    u = np.asarray(u, dtype=float)
    norm = (params.b / (params.a * math.pi * params.hbar)) ** 0.25
    return norm * np.exp(-params.b * u ** 2 / (2.0 * params.a * params.hbar))


def chi_tilde(k: ArrayLike, params: ModelParams) -> np.ndarray:
    """Closed-form Fourier image (a / b pi hbar)^{1/4} exp(-a k^2 / 2 b hbar), one axis."""
    k = np.asarray(k, dtype=float)
    norm = (params.a / (params.b * math.pi * params.hbar)) ** 0.25
    return norm * np.exp(-params.a * k ** 2 / (2.0 * params.b * params.hbar))


class ChiKernel:
    """
    chi(u) = (b / a pi hbar)^{1/4} exp(-b u^2 / 2 a hbar) per axis, sampled
    at the wrapped separations of a grid and renormalized so that
    sum chi^2 dx = 1 exactly.
    """

    def __init__(self, grid: PhaseGrid, params: ModelParams) -> None:
        grid.require_compatible(params)
        self.grid = grid
        self.params = params
        self.scale = params.chi_scale
        self.norm = (params.b / (params.a * math.pi * params.hbar)) ** 0.25
        sampled = self.evaluate(grid.offsets)
        self.sampled_norm = float(np.sum(sampled ** 2) * grid.dx)
        self.profile = sampled / math.sqrt(self.sampled_norm)
        idx = np.arange(grid.points)
        self.table = self.profile[(idx[:, None] - idx[None, :]) % grid.points]
        self.u_table = grid.separation_table * self.table

    def evaluate(self, u: ArrayLike) -> np.ndarray:
        return chi(u, self.params)

    def tilde(self, k: ArrayLike) -> np.ndarray:
        return chi_tilde(k, self.params)

    def variance(self) -> float:
        """Variance of chi^2 on the grid."""
        return float(np.sum(self.grid.offsets ** 2 * self.profile ** 2) * self.grid.dx)


@lru_cache(maxsize=16)
def chi_kernel(grid: PhaseGrid, params: ModelParams) -> ChiKernel:
    return ChiKernel(grid, params)


def _kernel_mixed(values: np.ndarray, grid: PhaseGrid, tables: Sequence[np.ndarray]) -> np.ndarray:
    n = grid.n
    ndim = 2 * n
    out = np.reshape(values, (1,) * n + values.shape)
    for k in range(n):
        out = out * grid.pair(tables[k], k, n + k, ndim)
    return out


def _lift_with(psi: ConfigWaveFunction, tables: Sequence[np.ndarray]) -> PhaseWaveFunction:
    grid = psi.grid
    mixed = _kernel_mixed(psi.values, grid, tables)
    values = fourier_p_inv_values(mixed, grid) * grid.gauge_phase
    return PhaseWaveFunction(grid, values)


def lift(psi: ConfigWaveFunction, params: ModelParams) -> PhaseWaveFunction:
    """
    phi(x, p) = (2 pi hbar)^{-n/2} int psi(y) chi(x - y) e^{-i (y - x) p / hbar} dy.
    """
    grid = psi.grid
    grid.require_compatible(params)
    enforce_boundary(psi, "lift")
    kernel = chi_kernel(grid, params)
    return _lift_with(psi, [kernel.table] * grid.n)


def lift_u(psi: ConfigWaveFunction, params: ModelParams, axis: int = 0) -> PhaseWaveFunction:
    """lift with the kernel (x_k - y_k) chi(x - y) on axis k."""
    grid = psi.grid
    grid.require_compatible(params)
    if not 0 <= axis < grid.n:
        raise ValueError(f"axis must be in [0, {grid.n}), got {axis}")
    kernel = chi_kernel(grid, params)
    tables = [kernel.u_table if k == axis else kernel.table for k in range(grid.n)]
    return _lift_with(psi, tables)


def lift_mode(psi: ConfigWaveFunction, params: ModelParams, orders: Tuple[int, ...]) -> PhaseWaveFunction:
    """
    lift with the discrete Hermite function h_{j_k}(x_k - y_k) in place of
    chi on every axis. Order 0 on all axes reproduces lift; any nonzero
    order gives a state orthogonal to the stationary subspace that decays
    at rate 2 |j| ab / hbar.
    """
    grid = psi.grid
    grid.require_compatible(params)
    if len(orders) != grid.n or any(j < 0 for j in orders):
        raise ValueError(f"orders must be {grid.n} non-negative integers, got {orders!r}")
    basis = HermiteBasis(grid, params, cutoff=max(orders) + 1)
    idx = np.arange(grid.points)
    wrap = (idx[:, None] - idx[None, :]) % grid.points
    return _lift_with(psi, [basis.tables[j][wrap] for j in orders])


def extract_values(values: np.ndarray, grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    kernel = chi_kernel(grid, params)
    mixed = fourier_p_values(values * np.conj(grid.gauge_phase), grid)
    weighted = _kernel_mixed_weights(mixed, grid, kernel.table)
    return np.sum(weighted, axis=grid.x_axes) * grid.config_cell


def _kernel_mixed_weights(mixed: np.ndarray, grid: PhaseGrid, table: np.ndarray) -> np.ndarray:
    n = grid.n
    out = mixed
    for k in range(n):
        out = out * grid.pair(table, k, n + k, mixed.ndim)
    return out


def extract(field: PhaseWaveFunction, params: ModelParams) -> ConfigWaveFunction:
    """
    psi(y) = (2 pi hbar)^{-n/2} int int phi(x, p) e^{i (y - x) p / hbar} chi(x - y) dp dx.
    """
    grid = field.grid
    grid.require_compatible(params)
    enforce_boundary(field, "extract")
    return ConfigWaveFunction(grid, extract_values(field.values, grid, params))


def project_P0(field: PhaseWaveFunction, params: ModelParams) -> PhaseWaveFunction:
    """Orthogonal projector onto the stationary subspace, as lift(extract(phi))."""
    return lift(extract(field, params), params)


def project_P0_values(values: np.ndarray, grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    kernel = chi_kernel(grid, params)
    psi = extract_values(values, grid, params)
    mixed = _kernel_mixed(psi, grid, [kernel.table] * grid.n)
    return fourier_p_inv_values(mixed, grid) * grid.gauge_phase


def _kernel_axis(values: np.ndarray, grid: PhaseGrid, params: ModelParams, axis: int) -> np.ndarray:
    hbar, a, b = params.hbar, params.a, params.b
    x, p = grid.x_axis, grid.p_axis
    arr = np.moveaxis(values, (axis, grid.n + axis), (-2, -1))
    weighted = arr * np.exp(-0.5j * np.outer(x, p) / hbar) * grid.dx * grid.dp
    gauss_x = np.exp(-b * (x[None, :] - x[:, None]) ** 2 / (4.0 * a * hbar))
    gauss_p = np.exp(-a * (p[None, :] - p[:, None]) ** 2 / (4.0 * b * hbar))
    # B[x, x', p] and C[p, p', x]
    left = gauss_x[:, :, None] * np.exp(-0.5j * x[None, :, None] * p[None, None, :] / hbar)
    right = gauss_p[:, :, None] * np.exp(0.5j * x[None, None, :] * p[None, :, None] / hbar)
    partial = np.einsum("pqx,...yq->...pxy", right, weighted, optimize=True)
    total = np.einsum("xyp,...pxy->...xp", left, partial, optimize=True)
    total = total * np.exp(0.5j * np.outer(x, p) / hbar) / (2.0 * math.pi * hbar)
    return np.moveaxis(total, (-2, -1), (axis, grid.n + axis))


def project_P0_kernel(field: PhaseWaveFunction, params: ModelParams) -> PhaseWaveFunction:
    """
    P0 as the Gaussian kernel integral

        (2 pi hbar)^{-n} int phi(x', p') e^{-b (x' - x)^2 / 4 a hbar}
            e^{-a (p' - p)^2 / 4 b hbar} e^{i (x - x')(p + p') / 2 hbar} dx' dp',

    contracted one (x_k, p_k) pair at a time. Costs O(N^4) per pair, so it
    is meant for validation on small grids. Contractions run in einsum's
    fixed order, so the result is deterministic.
    """
    grid = field.grid
    grid.require_compatible(params)
    values = field.values
    for k in range(grid.n):
        values = _kernel_axis(values, grid, params, k)
    return field.with_values(values)


def rho_phase(psi: ConfigWaveFunction, params: ModelParams) -> DensityField:
    """rho(x, p) = |lift(psi)|^2."""
    phi = lift(psi, params)
    return DensityField(psi.grid, np.abs(phi.values) ** 2, kind="phase")


def rho_config(psi: ConfigWaveFunction, params: ModelParams) -> DensityField:
    """rho(x) = int |psi(y)|^2 chi^2(x - y) dy."""
    grid = psi.grid
    grid.require_compatible(params)
    enforce_boundary(psi, "rho_config")
    squared = chi_kernel(grid, params).table ** 2
    out = np.abs(psi.values) ** 2
    for k in range(grid.n):
        out = np.moveaxis(np.tensordot(squared, out, axes=([1], [k])), 0, k)
    return DensityField(grid, out * grid.config_cell, kind="config")


def wigner(psi: ConfigWaveFunction, params: ModelParams) -> DensityField:
    """
    W(x, p) = (2 pi hbar)^{-n} int psi(x - s/2) conj(psi(x + s/2)) e^{i s p / hbar} ds.

    Half-step samples come from Fourier interpolation onto a doubled grid,
    the s sum runs over s = j dx for |j| < N and is folded onto the p grid.
    """
    grid = psi.grid
    grid.require_compatible(params)
    enforce_boundary(psi, "wigner")
    n, n_pts = grid.n, grid.points
    doubled = psi.values
    for axis in range(n):
        doubled = signal.resample(doubled, 2 * n_pts, axis=axis)
    padded = np.pad(doubled, [(n_pts, n_pts)] * n)

    k = np.arange(n_pts)
    j = np.arange(-n_pts + 1, n_pts)
    minus = 2 * k[:, None] - j[None, :] + n_pts
    plus = 2 * k[:, None] + j[None, :] + n_pts
    minus_index, plus_index = [], []
    for axis in range(n):
        shape = [1] * (2 * n)
        shape[axis] = n_pts
        shape[n + axis] = 2 * n_pts - 1
        minus_index.append(minus.reshape(shape))
        plus_index.append(plus.reshape(shape))
    products = padded[tuple(minus_index)] * np.conj(padded[tuple(plus_index)])

    # (-1)^j from the centered p axis, then fold j onto r = j mod N
    j_sign = np.where(j % 2, -1.0, 1.0)
    for axis in range(n):
        j_axis = n + axis
        shape = [1] * (2 * n)
        shape[j_axis] = 2 * n_pts - 1
        products = products * j_sign.reshape(shape)
        pad = [(0, 0)] * (2 * n)
        pad[j_axis] = (0, 1)
        products = np.pad(products, pad)
        head = np.take(products, np.arange(n_pts), axis=j_axis)
        tail = np.take(products, np.arange(n_pts, 2 * n_pts), axis=j_axis)
        products = np.roll(head + tail, 1, axis=j_axis)

    spectrum = sfft.ifftn(products, axes=grid.p_axes, norm="forward")
    factor = (grid.dx / (2.0 * math.pi * grid.hbar)) ** n
    return DensityField(grid, np.real(spectrum) * factor, kind="phase")


def gaussian_state(
    grid: PhaseGrid,
    center: ArrayLike = 0.0,
    momentum: ArrayLike = 0.0,
    width: float = 1.0,
) -> ConfigWaveFunction:
    """(pi w^2)^{-n/4} exp(-(y - c)^2 / 2 w^2 + i p0 (y - c) / hbar), normalized in the continuum."""
    n = grid.n
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    p0 = np.broadcast_to(np.asarray(momentum, dtype=float), (n,))
    y = grid.config_mesh
    exponent = np.zeros(grid.config_shape, dtype=complex)
    for k in range(n):
        shifted = y[k] - c[k]
        exponent += -0.5 * shifted ** 2 / width ** 2 + 1j * p0[k] * shifted / grid.hbar
    values = (math.pi * width ** 2) ** (-n / 4.0) * np.exp(exponent)
    return ConfigWaveFunction(grid, values)


def spreading_gaussian(
    grid: PhaseGrid,
    t: float,
    center: ArrayLike = 0.0,
    momentum: ArrayLike = 0.0,
    width: float = 1.0,
    mass: float = 1.0,
) -> ConfigWaveFunction:
    """
    gaussian_state(grid, center, momentum, width) evolved for a time t under
    p^2 / 2m, in closed form. The packet moves at p0 / m and its complex
    width is w^2 (1 + i hbar t / (m w^2)).
    """
    n = grid.n
    hbar = grid.hbar
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    p0 = np.broadcast_to(np.asarray(momentum, dtype=float), (n,))
    spread = 1.0 + 1j * hbar * t / (mass * width ** 2)
    y = grid.config_mesh
    exponent = np.zeros(grid.config_shape, dtype=complex)
    for k in range(n):
        moved = y[k] - c[k] - p0[k] * t / mass
        exponent += (
            -0.5 * moved ** 2 / (width ** 2 * spread)
            + 1j * p0[k] * (y[k] - c[k]) / hbar
            - 0.5j * p0[k] ** 2 * t / (mass * hbar)
        )
    values = (math.pi * width ** 2) ** (-n / 4.0) * spread ** (-n / 2.0) * np.exp(exponent)
    return ConfigWaveFunction(grid, values)


def coherent_state(
    grid: PhaseGrid,
    params: ModelParams,
    center: ArrayLike = 0.0,
    momentum: ArrayLike = 0.0,
    omega: float = 1.0,
) -> ConfigWaveFunction:
    """Ground-state-width packet of the oscillator with frequency omega."""
    width = math.sqrt(params.hbar / (params.mass * omega))
    return gaussian_state(grid, center, momentum, width)


def normalized(psi: ConfigWaveFunction) -> ConfigWaveFunction:
    return psi * (1.0 / math.sqrt(norm_sq(psi)))


def cat_state(grid: PhaseGrid, params: ModelParams, separation_factor: float = 4.0) -> ConfigWaveFunction:
    """Two chi-width packets at +-d along the first axis, d = separation_factor * width."""
    sigma = params.chi_scale
    offset = np.zeros(grid.n)
    offset[0] = separation_factor * sigma
    left = gaussian_state(grid, -offset, 0.0, sigma)
    right = gaussian_state(grid, offset, 0.0, sigma)
    return normalized(left + right)


def random_config_state(
    grid: PhaseGrid,
    params: ModelParams,
    rng: np.random.Generator,
    packets: int = 3,
    x_max: float = 2.0,
    p_max: float = 3.0,
) -> ConfigWaveFunction:
    """Normalized superposition of random Gaussian packets well inside the grid."""
    n = grid.n
    total = np.zeros(grid.config_shape, dtype=complex)
    for _ in range(packets):
        center = rng.uniform(-x_max, x_max, size=n)
        momentum = rng.uniform(-p_max, p_max, size=n)
        width = params.chi_scale * rng.uniform(0.7, 1.4)
        weight = complex(rng.normal(), rng.normal())
        total += weight * gaussian_state(grid, center, momentum, width).values
    return normalized(ConfigWaveFunction(grid, total))


def random_phase_state(
    grid: PhaseGrid,
    params: ModelParams,
    rng: np.random.Generator,
    packets: int = 3,
    x_max: float = 2.0,
    p_max: float = 3.0,
) -> PhaseWaveFunction:
    """
    Normalized superposition of random phase-space Gaussians with random
    linear phases. Generic: it has components outside the stationary subspace.
    """
    n = grid.n
    x, p = grid.x_mesh, grid.p_mesh
    p_scale = math.sqrt(params.b * params.hbar / params.a)
    total = np.zeros(grid.shape, dtype=complex)
    for _ in range(packets):
        exponent = np.full(grid.shape, 1j * rng.uniform(0.0, 2.0 * math.pi), dtype=complex)
        for k in range(n):
            x0 = rng.uniform(-x_max, x_max)
            p0 = rng.uniform(-p_max, p_max)
            sx = params.chi_scale * rng.uniform(0.7, 1.4)
            sp = p_scale * rng.uniform(0.7, 1.4)
            kx = rng.uniform(-1.0, 1.0) / sx
            kp = rng.uniform(-1.0, 1.0) / sp
            exponent += -0.5 * ((x[k] - x0) / sx) ** 2 - 0.5 * ((p[k] - p0) / sp) ** 2
            exponent += 1j * (kx * (x[k] - x0) + kp * (p[k] - p0))
        total += rng.uniform(0.5, 1.5) * np.exp(exponent)
    phi = PhaseWaveFunction(grid, total)
    return phi * (1.0 / math.sqrt(norm_sq(phi)))


def orthogonal_complement(field: PhaseWaveFunction, params: ModelParams) -> PhaseWaveFunction:
    """
    Removes the stationary component of `field` by Gram-Schmidt against the
    lifted grid deltas, which form an orthonormal basis of the subspace.
    Slow, one basis state per configuration grid point.
    """
    grid = field.grid
    result = field.values.copy()
    scale = 1.0 / math.sqrt(grid.config_cell)
    for index in np.ndindex(*grid.config_shape):
        delta = np.zeros(grid.config_shape, dtype=complex)
        delta[index] = scale
        basis = lift(ConfigWaveFunction(grid, delta), params).values
        result -= np.vdot(basis, result) * grid.phase_cell * basis
    return field.with_values(result)
