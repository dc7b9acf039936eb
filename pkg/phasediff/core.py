"""
Grids, fields, norms and the hbar-scaled Fourier pair.

Phase-space fields live on a centered tensor grid with the same number of
points N along every x and p axis, x_k = (k - N/2) dx and p_l = (l - N/2) dp,
and dx * dp = 2 pi hbar / N. With N a power of two the kernel e^{i x p / hbar}
sampled on the grid is an exact DFT mode, so the p <-> y transform below is a
unitary pair and not an approximation of one.
"""
import logging
import math
import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft

from .errors import (
    BoundaryDecayError,
    BoundaryDecayWarning,
    GridMismatchError,
    NonFiniteFieldError,
)
from .runtime import runtime

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelParams:
    """
    Physical constants of the model: hbar, mass, the diffusion amplitudes a
    (coordinates) and b (momenta), and the spatial dimension n.
    """

    hbar: float = 1.0
    mass: float = 1.0
    a: float = 1.0
    b: float = 2.0
    n: int = 1

    def __post_init__(self) -> None:
        for name in ("hbar", "mass", "a", "b"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")

    @property
    def width_sq(self) -> float:
        """Variance a*hbar/(2b) of chi squared along one axis."""
        return self.a * self.hbar / (2.0 * self.b)

    @property
    def p_width_sq(self) -> float:
        return self.b * self.hbar / (2.0 * self.a)

    @property
    def rate(self) -> float:
        """The relaxation rate ab/hbar."""
        return self.a * self.b / self.hbar

    @property
    def chi_scale(self) -> float:
        return math.sqrt(self.a * self.hbar / self.b)

    def replace(self, **changes: Any) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PhaseGrid:
    """
    Uniform centered grid on R^{2n}, N points per axis, periodic for spectral
    derivatives. The configuration grid is its x part.
    """

    points: int
    dx: float
    hbar: float = 1.0
    n: int = 1

    def __post_init__(self) -> None:
        if self.points < 8 or self.points & (self.points - 1):
            raise ValueError(f"points must be a power of two >= 8, got {self.points}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.n not in (1, 2):
            raise ValueError(f"grids support n = 1 or 2, got {self.n}")

    @classmethod
    def from_params(
        cls, params: ModelParams, points: int = 128, aspect: Optional[float] = None
    ) -> "PhaseGrid":
        """
        Builds the grid for `params`. `aspect` is dp/dx and defaults to b/a,
        which gives chi and its Fourier image the same number of grid cells.
        """
        if aspect is None:
            aspect = params.b / params.a
        if not aspect > 0:
            raise ValueError(f"aspect must be positive, got {aspect}")
        dx = math.sqrt(2.0 * math.pi * params.hbar / (points * aspect))
        return cls(points=points, dx=dx, hbar=params.hbar, n=params.n)

    @property
    def dp(self) -> float:
        return 2.0 * math.pi * self.hbar / (self.points * self.dx)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points,) * (2 * self.n)

    @property
    def config_shape(self) -> Tuple[int, ...]:
        return (self.points,) * self.n

    @property
    def x_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.n))

    @property
    def p_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.n, 2 * self.n))

    @property
    def phase_cell(self) -> float:
        return (self.dx * self.dp) ** self.n

    @property
    def config_cell(self) -> float:
        return self.dx ** self.n

    @property
    def mixed_cell(self) -> float:
        return self.dx ** (2 * self.n)

    @cached_property
    def x_axis(self) -> np.ndarray:
        return (np.arange(self.points) - self.points // 2) * self.dx

    @cached_property
    def p_axis(self) -> np.ndarray:
        return (np.arange(self.points) - self.points // 2) * self.dp

    @cached_property
    def offsets(self) -> np.ndarray:
        """Wrapped separation for index difference j, in [-N/2, N/2) * dx."""
        n_pts = self.points
        return ((np.arange(n_pts) + n_pts // 2) % n_pts - n_pts // 2) * self.dx

    @cached_property
    def separation_table(self) -> np.ndarray:
        """table[k, m] = wrapped x_k - y_m."""
        idx = np.arange(self.points)
        return self.offsets[(idx[:, None] - idx[None, :]) % self.points]

    @cached_property
    def checkerboard(self) -> np.ndarray:
        return np.where(np.arange(self.points) % 2, -1.0, 1.0)

    @property
    def x_extent(self) -> Tuple[float, float]:
        return float(self.x_axis[0]), float(self.x_axis[-1])

    @property
    def p_extent(self) -> Tuple[float, float]:
        return float(self.p_axis[0]), float(self.p_axis[-1])

    def along(self, vector: np.ndarray, axis: int, ndim: int) -> np.ndarray:
        """Reshapes a length-N vector so it broadcasts along `axis` of an ndim array."""
        shape = [1] * ndim
        shape[axis] = self.points
        return np.reshape(vector, shape)

    def pair(self, table: np.ndarray, axis: int, other: int, ndim: int) -> np.ndarray:
        """Reshapes an N x N table so it broadcasts over axes (axis, other)."""
        shape = [1] * ndim
        shape[axis] = self.points
        shape[other] = self.points
        return np.reshape(table, shape)

    def checker(self, axes: Sequence[int], ndim: int) -> np.ndarray:
        sign = np.ones([1] * ndim)
        for axis in axes:
            sign = sign * self.along(self.checkerboard, axis, ndim)
        return sign

    @cached_property
    def x_mesh(self) -> np.ndarray:
        ndim = 2 * self.n
        return np.stack([
            np.broadcast_to(self.along(self.x_axis, k, ndim), self.shape) for k in range(self.n)
        ])

    @cached_property
    def p_mesh(self) -> np.ndarray:
        ndim = 2 * self.n
        return np.stack([
            np.broadcast_to(self.along(self.p_axis, self.n + k, ndim), self.shape)
            for k in range(self.n)
        ])

    @cached_property
    def config_mesh(self) -> np.ndarray:
        return np.stack([
            np.broadcast_to(self.along(self.x_axis, k, self.n), self.config_shape)
            for k in range(self.n)
        ])

    @cached_property
    def gauge_phase(self) -> np.ndarray:
        """e^{i x.p / hbar} on the phase grid."""
        return np.exp(1j * np.sum(self.x_mesh * self.p_mesh, axis=0) / self.hbar)

    def require_compatible(self, params: ModelParams) -> None:
        if params.n != self.n or not math.isclose(params.hbar, self.hbar, rel_tol=1e-14):
            raise GridMismatchError(
                f"grid (n={self.n}, hbar={self.hbar}) does not match params "
                f"(n={params.n}, hbar={params.hbar})"
            )


@dataclass(frozen=True, eq=False)
class _GridField:
    grid: PhaseGrid
    values: np.ndarray

    _dtype = np.complex128

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=self._dtype)
        expected = self._expected_shape()
        if values.shape != expected:
            raise GridMismatchError(
                f"{type(self).__name__} values have shape {values.shape}, expected {expected}"
            )
        bad = int(np.count_nonzero(~np.isfinite(values)))
        if bad:
            raise NonFiniteFieldError(type(self).__name__, bad)
        object.__setattr__(self, "values", values)

    def _expected_shape(self) -> Tuple[int, ...]:
        return self.grid.shape

    @property
    def cell_volume(self) -> float:
        raise NotImplementedError

    def with_values(self, values: np.ndarray):
        return replace(self, values=values)

    def _check_peer(self, other: "_GridField") -> None:
        if type(other) is not type(self) or other.grid != self.grid:
            raise GridMismatchError(
                f"cannot combine {type(self).__name__} and {type(other).__name__} on different grids"
            )

    def __add__(self, other: "_GridField"):
        self._check_peer(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "_GridField"):
        self._check_peer(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: complex):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class PhaseWaveFunction(_GridField):
    """A complex field phi(x, p) on a PhaseGrid."""

    @property
    def cell_volume(self) -> float:
        return self.grid.phase_cell


@dataclass(frozen=True, eq=False)
class MixedWaveFunction(_GridField):
    """The gauge-stripped field after the p -> y transform, psi0(x, y)."""

    @property
    def cell_volume(self) -> float:
        return self.grid.mixed_cell


@dataclass(frozen=True, eq=False)
class ConfigWaveFunction(_GridField):
    """A complex wave function psi(y) on the x axes of a PhaseGrid."""

    def _expected_shape(self) -> Tuple[int, ...]:
        return self.grid.config_shape

    @property
    def cell_volume(self) -> float:
        return self.grid.config_cell


@dataclass(frozen=True, eq=False)
class DensityField(_GridField):
    """
    A real density on the phase grid (kind 'phase') or on its x axes
    (kind 'config').
    """

    kind: str = "phase"

    _dtype = np.float64

    def _expected_shape(self) -> Tuple[int, ...]:
        if self.kind == "phase":
            return self.grid.shape
        if self.kind == "config":
            return self.grid.config_shape
        raise ValueError(f"DensityField kind must be 'phase' or 'config', got '{self.kind}'")

    @property
    def cell_volume(self) -> float:
        return self.grid.phase_cell if self.kind == "phase" else self.grid.config_cell

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.cell_volume

    def marginal_x(self) -> "DensityField":
        """Integrates a phase density over p."""
        if self.kind == "config":
            return self
        summed = np.sum(self.values, axis=self.grid.p_axes) * self.grid.dp ** self.grid.n
        return DensityField(self.grid, summed, kind="config")

    def moments(self, axis: int = 0) -> Tuple[float, float]:
        """Mean and variance of the x-marginal along one axis."""
        marginal = self.marginal_x()
        weights = marginal.values
        coord = self.grid.config_mesh[axis]
        total = np.sum(weights)
        mean = float(np.sum(coord * weights) / total)
        variance = float(np.sum((coord - mean) ** 2 * weights) / total)
        return mean, variance

    def variance_x(self, axis: int = 0) -> float:
        return self.moments(axis)[1]


Field = Union[PhaseWaveFunction, MixedWaveFunction, ConfigWaveFunction]


def _workers() -> int:
    return runtime.setting("threads")


def norm_sq(field: Field) -> float:
    """
    Squared L2 norm, sum |f|^2 times the cell volume. The sum is numpy's
    vdot over the C-ordered flattened array, so it is reproducible.
    """
    bad = int(np.count_nonzero(~np.isfinite(field.values)))
    if bad:
        raise NonFiniteFieldError(type(field).__name__, bad)
    return float(np.vdot(field.values, field.values).real) * field.cell_volume


def inner(f: Field, g: Field) -> complex:
    """<f, g>, conjugate-linear in the first argument."""
    if type(f) is not type(g) or f.grid != g.grid:
        raise GridMismatchError(
            f"inner product needs two fields of one type on one grid, got "
            f"{type(f).__name__} and {type(g).__name__}"
        )
    return complex(np.vdot(f.values, g.values)) * f.cell_volume


def boundary_magnitude(values: np.ndarray, axes: Optional[Sequence[int]] = None) -> float:
    """Largest |value| on the outermost shell of `axes`, relative to the peak."""
    magnitude = np.abs(values)
    peak = float(np.max(magnitude)) if magnitude.size else 0.0
    if peak == 0.0:
        return 0.0
    edge = 0.0
    for axis in range(values.ndim) if axes is None else axes:
        edge = max(edge, float(np.max(np.take(magnitude, [0, -1], axis=axis))))
    return edge / peak


def enforce_boundary(field: Field, operation: str, axes: Optional[Sequence[int]] = None) -> float:
    """
    Applies the runtime boundary_policy to `field`. Returns the measured
    relative boundary magnitude, or 0.0 when the policy is 'ignore'.
    """
    policy = runtime.setting("boundary_policy")
    if policy == "ignore":
        return 0.0
    tolerance = runtime.setting("decay_tol")
    magnitude = boundary_magnitude(field.values, axes)
    if magnitude <= tolerance:
        logger.debug("%s: boundary magnitude %.3e", operation, magnitude)
        return magnitude
    error = BoundaryDecayError(operation, magnitude, tolerance)
    if policy == "raise":
        raise error
    logger.warning(str(error))
    warnings.warn(str(error), BoundaryDecayWarning, stacklevel=3)
    return magnitude


def fourier_p_values(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """psi0(x, y) = (2 pi hbar)^{-n/2} sum_p phi0(x, p) e^{+i y p / hbar} dp."""
    axes = grid.p_axes
    sign = grid.checker(axes, values.ndim)
    out = sfft.ifftn(values * sign, axes=axes, norm="forward", workers=_workers())
    out *= sign
    out *= (grid.dp / math.sqrt(2.0 * math.pi * grid.hbar)) ** grid.n
    return out


def fourier_p_inv_values(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    axes = grid.p_axes
    sign = grid.checker(axes, values.ndim)
    out = sfft.fftn(values * sign, axes=axes, workers=_workers())
    out *= sign
    out *= (grid.dx / math.sqrt(2.0 * math.pi * grid.hbar)) ** grid.n
    return out


def fourier_p(field: PhaseWaveFunction) -> MixedWaveFunction:
    """Transforms the p axes of a (gauge-stripped) phase field into y axes."""
    enforce_boundary(field, "fourier_p", axes=field.grid.p_axes)
    return MixedWaveFunction(field.grid, fourier_p_values(field.values, field.grid))


def fourier_p_inv(field: MixedWaveFunction) -> PhaseWaveFunction:
    enforce_boundary(field, "fourier_p_inv", axes=field.grid.p_axes)
    return PhaseWaveFunction(field.grid, fourier_p_inv_values(field.values, field.grid))


def gauge_strip(field: PhaseWaveFunction) -> PhaseWaveFunction:
    """phi0 = phi * e^{-i x.p / hbar}."""
    return field.with_values(field.values * np.conj(field.grid.gauge_phase))


def gauge_apply(field: PhaseWaveFunction) -> PhaseWaveFunction:
    """phi = phi0 * e^{+i x.p / hbar}."""
    return field.with_values(field.values * field.grid.gauge_phase)


def spectral_derivative(values: np.ndarray, axis: int, spacing: float, order: int = 1) -> np.ndarray:
    """
    Periodic Fourier derivative along one axis. The Nyquist mode is dropped
    for odd orders, which keeps the first derivative anti-Hermitian.
    """
    n_pts = values.shape[axis]
    wavenumber = 2.0 * math.pi * sfft.fftfreq(n_pts, d=spacing)
    if order % 2:
        wavenumber[n_pts // 2] = 0.0
    symbol = (1j * wavenumber) ** order
    shape = [1] * values.ndim
    shape[axis] = n_pts
    spectrum = sfft.fft(values, axis=axis, workers=_workers())
    return sfft.ifft(spectrum * symbol.reshape(shape), axis=axis, workers=_workers())
