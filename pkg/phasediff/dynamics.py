"""
Time evolution of the full phase-space equation d phi/dt = (Delta + A) phi,
the effective Schrodinger dynamics on the stationary subspace, and the
diagnostics that compare the two.

The full equation is split Strang style: half a step of exact diffusion,
a transport step by classical RK4 (optionally substepped), and another half
step of diffusion. The diffusion halves are exact, so the splitting error is
the only approximation in the slow part of the motion.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import integrate, linalg, stats

from .calculus import CFL_MAX, TransportOperator, apply_diffusion, diffusion_propagator
from .core import (
    ConfigWaveFunction,
    ModelParams,
    PhaseGrid,
    PhaseWaveFunction,
    enforce_boundary,
    inner,
    norm_sq,
    spectral_derivative,
)
from .errors import NonHermitianWarning, ScaleSeparationWarning
from .hamiltonians import HamiltonianSpec
from .helpers import assemble_columns
from .quantization import (
    extract,
    extract_values,
    lift,
    lift_mode,
    lift_u,
    project_P0_values,
    random_config_state,
)
from .runtime import runtime

logger = logging.getLogger(__name__)

SCHEMES = ("strang",)
FORMS = ("local", "integral")
METHODS = ("split-step", "dense")
SCALE_SEPARATION_MIN = 50.0


@dataclass(frozen=True)
class EvolutionConfig:
    """
    Step control for a run. `t_end` is reached in ceil(t_end / dt) equal
    steps, so the effective step may be slightly below `dt`.
    """

    dt: float = 1e-3
    t_end: float = 1.0
    scheme: str = "strang"
    substeps: int = 1
    hermite_cutoff: Optional[int] = None
    record_every: int = 1
    cfl_max: float = CFL_MAX

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be a positive finite number, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be a non-negative finite number, got {self.t_end!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of: {', '.join(SCHEMES)}")
        for name in ("substeps", "record_every"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.hermite_cutoff is not None and self.hermite_cutoff < 1:
            raise ValueError(f"hermite_cutoff must be a positive integer, got {self.hermite_cutoff!r}")
        if not self.cfl_max > 0:
            raise ValueError(f"cfl_max must be positive, got {self.cfl_max!r}")

    @property
    def steps(self) -> int:
        if self.t_end == 0:
            return 0
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def step(self) -> float:
        return self.t_end / self.steps if self.steps else self.dt

    def cutoff(self) -> int:
        return runtime.setting("hermite_cutoff") if self.hermite_cutoff is None else self.hermite_cutoff

    def record_steps(self) -> List[int]:
        """Step indices at which a state is recorded, always including 0 and the last step."""
        marks = list(range(0, self.steps + 1, self.record_every))
        if marks[-1] != self.steps:
            marks.append(self.steps)
        return marks


@dataclass
class Trajectory:
    """Recorded states of a run with their times and squared norms."""

    times: List[float] = field(default_factory=list)
    states: List = field(default_factory=list)
    norms: List[float] = field(default_factory=list)

    def append(self, t: float, state) -> None:
        self.times.append(float(t))
        self.states.append(state)
        self.norms.append(norm_sq(state))

    @property
    def final(self):
        if not self.states:
            raise IndexError("trajectory is empty")
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[Tuple[float, object]]:
        return iter(zip(self.times, self.states))


def rk4_step(func: Callable[[np.ndarray], np.ndarray], values: np.ndarray, dt: float) -> np.ndarray:
    k1 = func(values)
    k2 = func(values + 0.5 * dt * k1)
    k3 = func(values + 0.5 * dt * k2)
    k4 = func(values + dt * k3)
    return values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_full(
    phi0: PhaseWaveFunction,
    hamiltonian: Optional[HamiltonianSpec],
    params: ModelParams,
    cfg: EvolutionConfig,
) -> Trajectory:
    """
    Integrates d phi/dt = Delta phi + A phi from phi0 up to cfg.t_end.

    With `hamiltonian` None the transport step is skipped and the run is
    pure diffusion. Raises CFLViolationError before the first step when the
    transport substep is unstable.
    """
    grid = phi0.grid
    grid.require_compatible(params)
    enforce_boundary(phi0, "evolve_full")
    propagator = diffusion_propagator(grid, params, cfg.cutoff())
    transport = TransportOperator(grid, hamiltonian, params) if hamiltonian is not None else None
    dt = cfg.step
    substep = dt / cfg.substeps
    if transport is not None:
        number = transport.check_cfl(substep, cfg.cfl_max)
        logger.info("evolve_full: %d steps of %.3e, CFL number %.3f", cfg.steps, dt, number)

    marks = set(cfg.record_steps())
    trajectory = Trajectory()
    trajectory.append(0.0, phi0)
    values = phi0.values.copy()
    for step in range(1, cfg.steps + 1):
        values = propagator.propagate_values(values, 0.5 * dt)
        if transport is not None:
            for _ in range(cfg.substeps):
                values = rk4_step(transport.apply_values, values, substep)
        values = propagator.propagate_values(values, 0.5 * dt)
        if step in marks:
            state = PhaseWaveFunction(grid, values)
            enforce_boundary(state, "evolve_full")
            trajectory.append(step * dt, state)
    return trajectory


def effective_potential(hamiltonian: HamiltonianSpec, grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    """V - (a hbar / 4b) Laplacian V + 3 n b hbar / (4 m a) on the configuration grid."""
    if not hamiltonian.separable:
        raise ValueError(
            f"Hamiltonian '{hamiltonian.name}' is not of the form p^2/2m + V with a known "
            "Laplacian of V; use the integral form"
        )
    y = grid.config_mesh
    m = hamiltonian.mass
    shift = 3.0 * params.n * params.b * params.hbar / (4.0 * m * params.a)
    return (
        np.broadcast_to(hamiltonian.potential(y), grid.config_shape)
        - params.a * params.hbar / (4.0 * params.b) * hamiltonian.potential_laplacian(y)
        + shift
    )


def apply_hatH_local(
    psi: ConfigWaveFunction, hamiltonian: HamiltonianSpec, params: ModelParams
) -> ConfigWaveFunction:
    """-hbar^2/2m Laplacian psi + V_eff psi."""
    grid = psi.grid
    grid.require_compatible(params)
    potential = effective_potential(hamiltonian, grid, params)
    kinetic = sum(spectral_derivative(psi.values, k, grid.dx, order=2) for k in range(grid.n))
    values = -params.hbar ** 2 / (2.0 * hamiltonian.mass) * kinetic + potential * psi.values
    return psi.with_values(values)


@dataclass(frozen=True)
class HatHDecomposition:
    """The three pieces of the integral Hamiltonian for H = p^2/2m + V."""

    kinetic: ConfigWaveFunction
    drift: ConfigWaveFunction
    potential: ConfigWaveFunction

    @property
    def total(self) -> ConfigWaveFunction:
        return self.kinetic + self.drift + self.potential


def _integral_terms(psi: ConfigWaveFunction, hamiltonian: HamiltonianSpec, params: ModelParams):
    grid = psi.grid
    x, p = grid.x_mesh, grid.p_mesh
    ratio = params.b / params.a
    phi = lift(psi, params)
    lifted_u = [lift_u(psi, params, axis=k).values for k in range(grid.n)]
    value = np.broadcast_to(hamiltonian.value(x, p), grid.shape)
    grad_x = np.broadcast_to(hamiltonian.grad_x(x, p), x.shape)
    grad_p = np.broadcast_to(hamiltonian.grad_p(x, p), p.shape)
    return phi.values, lifted_u, value, grad_x, 1j * ratio * grad_p


def apply_hatH_integral(
    psi: ConfigWaveFunction, hamiltonian: HamiltonianSpec, params: ModelParams
) -> ConfigWaveFunction:
    """
    extract(H lift psi) - sum_k extract((H_{x_k} + i (b/a) H_{p_k}) lift_{u_k} psi),
    the integral form valid for any H.
    """
    grid = psi.grid
    grid.require_compatible(params)
    enforce_boundary(psi, "apply_hatH_integral")
    phi, lifted_u, value, grad_x, drift = _integral_terms(psi, hamiltonian, params)
    weighted = value * phi
    enforce_boundary(PhaseWaveFunction(grid, weighted), "apply_hatH_integral")
    total = extract_values(weighted, grid, params)
    for k in range(grid.n):
        total -= extract_values((grad_x[k] + drift[k]) * lifted_u[k], grid, params)
    return psi.with_values(total)


def hatH_decomposition(
    psi: ConfigWaveFunction, hamiltonian: HamiltonianSpec, params: ModelParams
) -> HatHDecomposition:
    """
    Splits the integral form of a separable Hamiltonian into the kinetic
    term, the drift term from i (b/a) H_p and the potential term.
    """
    grid = psi.grid
    grid.require_compatible(params)
    if not hamiltonian.separable:
        raise ValueError(f"Hamiltonian '{hamiltonian.name}' is not separable")
    phi, lifted_u, _, _, drift = _integral_terms(psi, hamiltonian, params)
    x, p = grid.x_mesh, grid.p_mesh
    kinetic_value = np.sum(p ** 2, axis=0) / (2.0 * hamiltonian.mass)
    potential_value = np.broadcast_to(hamiltonian.potential(x), grid.shape)
    potential_grad = np.broadcast_to(hamiltonian.grad_x(x, p), x.shape)
    kinetic = extract_values(kinetic_value * phi, grid, params)
    drift_term = np.zeros(grid.config_shape, dtype=complex)
    potential = extract_values(potential_value * phi, grid, params)
    for k in range(grid.n):
        drift_term -= extract_values(drift[k] * lifted_u[k], grid, params)
        potential -= extract_values(potential_grad[k] * lifted_u[k], grid, params)
    return HatHDecomposition(
        kinetic=psi.with_values(kinetic),
        drift=psi.with_values(drift_term),
        potential=psi.with_values(potential),
    )


def hatH_matrix(grid: PhaseGrid, hamiltonian: HamiltonianSpec, params: ModelParams, form: str) -> np.ndarray:
    """Dense matrix of the effective Hamiltonian on the configuration grid."""
    if form not in FORMS:
        raise ValueError(f"form must be one of: {', '.join(FORMS)}")
    apply = apply_hatH_local if form == "local" else apply_hatH_integral

    def column(values: np.ndarray) -> np.ndarray:
        return apply(ConfigWaveFunction(grid, values), hamiltonian, params).values

    with runtime.scoped(boundary_policy="ignore"):
        return assemble_columns(column, grid.config_shape)


def hermitian_residual(matrix: np.ndarray) -> float:
    scale = float(np.max(np.abs(matrix))) or 1.0
    return float(np.max(np.abs(matrix - matrix.conj().T))) / scale


def unitary_step(matrix: np.ndarray, dt: float, hbar: float, label: str = "hatH") -> np.ndarray:
    """
    exp(-i M dt / hbar). Uses the eigendecomposition when M is Hermitian to
    within hermitian_tol, otherwise warns and falls back to expm.
    """
    residual = hermitian_residual(matrix)
    tolerance = runtime.setting("hermitian_tol")
    if residual > tolerance:
        message = f"{label} is not Hermitian on this grid (residual {residual:.3e} > {tolerance:.3e})"
        logger.warning(message)
        warnings.warn(message, NonHermitianWarning, stacklevel=2)
        return linalg.expm(-1j * dt / hbar * matrix)
    eigenvalues, vectors = linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return (vectors * np.exp(-1j * dt / hbar * eigenvalues)) @ vectors.conj().T


class SplitStepPropagator:
    """
    Strang split-step for -hbar^2/2m Laplacian + V on a periodic grid:
    half a potential kick, a full kinetic step in Fourier space, another
    half kick.
    """

    def __init__(self, grid: PhaseGrid, potential: np.ndarray, mass: float, hbar: float, dt: float) -> None:
        self.grid = grid
        self.dt = dt
        kinetic = np.zeros(grid.config_shape)
        wavenumber = 2.0 * math.pi * sfft.fftfreq(grid.points, d=grid.dx)
        for k in range(grid.n):
            kinetic = kinetic + grid.along(wavenumber, k, grid.n) ** 2
        self.kinetic_phase = np.exp(-1j * hbar * dt * kinetic / (2.0 * mass))
        self.half_kick = np.exp(-0.5j * dt * potential / hbar)

    def step(self, values: np.ndarray) -> np.ndarray:
        workers = runtime.setting("threads")
        values = self.half_kick * values
        values = sfft.ifftn(self.kinetic_phase * sfft.fftn(values, workers=workers), workers=workers)
        return self.half_kick * values


def evolve_schrodinger(
    psi0: ConfigWaveFunction,
    hamiltonian: HamiltonianSpec,
    params: ModelParams,
    cfg: EvolutionConfig,
    form: str = "local",
    method: str = "split-step",
) -> Trajectory:
    """
    Evolves psi0 under the effective Hamiltonian. The local form steps with
    the split-step propagator (or, with method='dense', the exact
    exponential of its matrix); the integral form always uses the dense
    exponential.
    """
    grid = psi0.grid
    grid.require_compatible(params)
    if form not in FORMS:
        raise ValueError(f"form must be one of: {', '.join(FORMS)}")
    if method not in METHODS:
        raise ValueError(f"method must be one of: {', '.join(METHODS)}")
    enforce_boundary(psi0, "evolve_schrodinger")
    dt = cfg.step
    if form == "local" and method == "split-step":
        potential = effective_potential(hamiltonian, grid, params)
        stepper = SplitStepPropagator(grid, potential, hamiltonian.mass, params.hbar, dt).step
    else:
        matrix = hatH_matrix(grid, hamiltonian, params, form)
        propagator = unitary_step(matrix, dt, params.hbar, label=f"{form} effective Hamiltonian")

        def stepper(values: np.ndarray) -> np.ndarray:
            return (propagator @ values.ravel()).reshape(grid.config_shape)

    marks = set(cfg.record_steps())
    trajectory = Trajectory()
    trajectory.append(0.0, psi0)
    values = psi0.values.copy()
    for step in range(1, cfg.steps + 1):
        values = stepper(values)
        if step in marks:
            state = ConfigWaveFunction(grid, values)
            enforce_boundary(state, "evolve_schrodinger")
            trajectory.append(step * dt, state)
    return trajectory


def energy(psi: ConfigWaveFunction, hamiltonian: HamiltonianSpec, params: ModelParams, form: str = "local") -> float:
    """Re <psi, hatH psi> / <psi, psi>."""
    apply = apply_hatH_local if form == "local" else apply_hatH_integral
    return inner(psi, apply(psi, hamiltonian, params)).real / norm_sq(psi)


def fit_decay_rate(
    times: Sequence[float], values: Sequence[float], window: Tuple[float, float], floor: float = 0.0
) -> float:
    """
    Exponent k of values ~ C exp(-k t), fitted by least squares on log(values)
    over times inside `window`. Samples at or below `floor` are ignored.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (times >= window[0]) & (times <= window[1]) & (values > floor)
    if np.count_nonzero(mask) < 3:
        raise ValueError(f"fit window {window} holds fewer than 3 usable samples")
    fit = stats.linregress(times[mask], np.log(values[mask]))
    return -float(fit.slope)


def crossing_time(times: Sequence[float], values: Sequence[float], level: float) -> float:
    """First time `values` reaches `level`, linearly interpolated; inf if never."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    above = np.nonzero(values >= level)[0]
    if above.size == 0:
        return math.inf
    i = int(above[0])
    if i == 0:
        return float(times[0])
    t0, t1, v0, v1 = times[i - 1], times[i], values[i - 1], values[i]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))


def epsilon_floor(alpha: float, beta: float) -> float:
    """Smallest epsilon for which the transition bound is finite: 1/2 - sqrt(1/4 - alpha^2/beta^2)."""
    ratio = (alpha / beta) ** 2
    if ratio >= 0.25:
        return 0.5
    return 0.5 - math.sqrt(0.25 - ratio)


def transition_time_bound(epsilon: float, alpha: float, beta: float) -> float:
    """
    Upper bound on the time for eta to climb from epsilon to 1 - epsilon
    when d eta/dt >= -alpha sqrt(eta (1 - eta)) + beta eta (1 - eta):

        int_eps^{1-eps} d eta / (beta eta (1 - eta) - alpha sqrt(eta (1 - eta)))

    Returns inf when the integrand is not positive on the interval.
    """
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2), got {epsilon}")
    if epsilon <= epsilon_floor(alpha, beta):
        return math.inf

    def integrand(eta: float) -> float:
        spread = eta * (1.0 - eta)
        return 1.0 / (beta * spread - alpha * math.sqrt(spread))

    value, _ = integrate.quad(integrand, epsilon, 1.0 - epsilon, limit=200)
    return float(value)


def transition_time_series(epsilon: float, alpha: float, beta: float) -> float:
    """Leading terms 4 artanh(1 - 2 eps)/beta + 4 (1 - 2 eps) alpha / (sqrt(eps (1 - eps)) beta^2)."""
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2), got {epsilon}")
    head = 4.0 * math.atanh(1.0 - 2.0 * epsilon) / beta
    return head + 4.0 * (1.0 - 2.0 * epsilon) * alpha / (math.sqrt(epsilon * (1.0 - epsilon)) * beta ** 2)


def first_shell_transition_time(epsilon: float, eta0: float, rate: float, first_shell: float = 1.0) -> float:
    """
    Time for pure diffusion to lift eta from eta0 to 1 - epsilon when a
    share `first_shell` of the excited mass sits in the first shell and the
    rest in faster shells that are already gone by then. With `rate` = ab/hbar
    the first-shell mass decays as exp(-4 rate t):

        ln(first_shell (1 - eta0) (1 - eps) / (eta0 eps)) / (4 rate)
    """
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2), got {epsilon}")
    if not 0 < eta0 <= 1:
        raise ValueError(f"eta0 must be in (0, 1], got {eta0}")
    if not 0 < first_shell <= 1:
        raise ValueError(f"first_shell must be in (0, 1], got {first_shell}")
    ratio = first_shell * (1.0 - eta0) * (1.0 - epsilon) / (eta0 * epsilon)
    if ratio <= 1.0:
        return 0.0
    return math.log(ratio) / (4.0 * rate)


def estimate_alpha_max(
    hamiltonian: Optional[HamiltonianSpec],
    grid: PhaseGrid,
    params: ModelParams,
    rng: np.random.Generator,
    samples: int = 4,
) -> float:
    """
    2 max ||A phi - P0 A phi|| over normalized lifted random states, a sampled
    estimate of the transport leakage out of the stationary subspace.
    """
    if hamiltonian is None:
        return 0.0
    transport = TransportOperator(grid, hamiltonian, params)
    worst = 0.0
    for _ in range(samples):
        phi = lift(random_config_state(grid, params, rng), params)
        moved = transport.apply_values(phi.values)
        leak = moved - project_P0_values(moved, grid, params)
        worst = max(worst, math.sqrt(float(np.vdot(leak, leak).real) * grid.phase_cell))
    return 2.0 * worst


def prepare_eta_state(
    psi: ConfigWaveFunction,
    params: ModelParams,
    eta: float,
    rng: np.random.Generator,
    second_shell: float = 0.3,
) -> PhaseWaveFunction:
    """
    A normalized phi with ||P0 phi||^2 = eta: sqrt(eta) lift(psi) plus
    sqrt(1 - eta) times a random mix of first- and second-shell excitations.
    `second_shell` is the squared weight of the second shell, at most 1/2.
    """
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    if not 0 <= second_shell <= 0.5:
        raise ValueError(f"second_shell must be in [0, 1/2], got {second_shell}")
    grid = psi.grid
    n = grid.n
    base = lift(psi, params)
    base = base * (1.0 / math.sqrt(norm_sq(base)))

    def shell(order: int) -> np.ndarray:
        total = np.zeros(grid.shape, dtype=complex)
        for k in range(n):
            orders = tuple(order if j == k else 0 for j in range(n))
            source = random_config_state(grid, params, rng)
            total += complex(rng.normal(), rng.normal()) * lift_mode(source, params, orders).values
        return total / math.sqrt(float(np.vdot(total, total).real) * grid.phase_cell)

    excited = math.sqrt(1.0 - second_shell) * shell(1) + math.sqrt(second_shell) * shell(2)
    excited /= math.sqrt(float(np.vdot(excited, excited).real) * grid.phase_cell)
    return base.with_values(math.sqrt(eta) * base.values + math.sqrt(1.0 - eta) * excited)


@dataclass
class RapidSlowDiagnostics:
    """Time series and fitted quantities of a rapid-motion run."""

    times: np.ndarray
    eta: np.ndarray
    beta: np.ndarray
    distance: np.ndarray
    eta_decay_rate: float
    distance_decay_rate: float
    alpha_hat: float
    beta_min: float
    epsilon: float
    epsilon_floor: float
    t_eps_bound: float
    t_eps_series: float
    t_eps_measured: float
    envelope_residual: float


def stationary_fraction(values: np.ndarray, grid: PhaseGrid, params: ModelParams) -> Tuple[float, float]:
    """||phi||^2 and ||phi - P0 phi||^2 of raw phase values."""
    total = float(np.vdot(values, values).real) * grid.phase_cell
    rest = values - project_P0_values(values, grid, params)
    return total, float(np.vdot(rest, rest).real) * grid.phase_cell


def beta_series(states: Sequence[np.ndarray], grid: PhaseGrid, params: ModelParams) -> np.ndarray:
    """
    beta(t) = -2 <Delta phi, phi> / (||phi||^2 (1 - eta)) for each state, NaN
    where the state already sits in the stationary subspace.
    """
    beta = np.full(len(states), np.nan)
    for i, values in enumerate(states):
        total, outside = stationary_fraction(values, grid, params)
        if outside / total > 1e-12:
            diffused = apply_diffusion(PhaseWaveFunction(grid, values), params).values
            rayleigh = float(np.vdot(values, diffused).real) * grid.phase_cell / total
            beta[i] = -2.0 * rayleigh / (outside / total)
    return beta


def eta_envelope_residual(
    times: np.ndarray, eta: np.ndarray, beta: np.ndarray, alpha: float, beta_min: float
) -> float:
    """
    Largest violation of d eta/dt >= -alpha sqrt(eta (1 - eta)) + beta eta (1 - eta)
    by the finite-difference slope of eta, relative to the largest |slope|.
    """
    if len(times) < 3:
        return 0.0
    slope = np.gradient(eta, times)
    spread = np.clip(eta * (1.0 - eta), 0.0, None)
    envelope = -alpha * np.sqrt(spread) + np.nan_to_num(beta, nan=beta_min) * spread
    scale = float(np.max(np.abs(slope))) or 1.0
    return float(np.max(np.clip(envelope - slope, 0.0, None))) / scale


def _fit_or_nan(times: np.ndarray, values: np.ndarray, window: Tuple[float, float], floor: float) -> float:
    try:
        return fit_decay_rate(times, values, window, floor)
    except ValueError:
        return math.nan


def rapid_slow_experiment(
    phi0: PhaseWaveFunction,
    hamiltonian: Optional[HamiltonianSpec],
    params: ModelParams,
    cfg: EvolutionConfig,
    epsilon: float = 0.01,
    fit_window: Tuple[float, float] = (1.5, 3.5),
    rng: Optional[np.random.Generator] = None,
    alpha_samples: int = 4,
) -> RapidSlowDiagnostics:
    """
    Follows eta(t) = ||P0 phi||^2 / ||phi||^2 and the distance
    ||phi - P0 phi|| of an evolving state. `fit_window` is in units of
    hbar / ab. With `hamiltonian` None the states come from the exact
    diffusion propagator at every recorded time. Fitted rates are NaN when
    the state has too little weight outside the subspace to fit.
    """
    grid = phi0.grid
    grid.require_compatible(params)
    start = norm_sq(phi0)
    if abs(start - 1.0) > 1e-6:
        raise ValueError(f"phi0 must be normalized, ||phi0||^2 = {start:.9f}")
    rng = np.random.default_rng(0) if rng is None else rng

    if hamiltonian is None:
        propagator = diffusion_propagator(grid, params, cfg.cutoff())
        enforce_boundary(phi0, "rapid_slow_experiment")
        times = [step * cfg.step for step in cfg.record_steps()]
        states = [propagator.propagate_values(phi0.values, t) for t in times]
    else:
        trajectory = evolve_full(phi0, hamiltonian, params, cfg)
        times = trajectory.times
        states = [state.values for state in trajectory.states]

    times = np.asarray(times, dtype=float)
    split = [stationary_fraction(values, grid, params) for values in states]
    eta = np.array([1.0 - outside / total for total, outside in split])
    distance = np.sqrt([outside for _, outside in split])
    beta = beta_series(states, grid, params)

    rate = params.rate
    window = (fit_window[0] / rate, fit_window[1] / rate)
    alpha_hat = estimate_alpha_max(hamiltonian, grid, params, rng, alpha_samples)
    beta_min = 2.0 * rate
    floor = epsilon_floor(alpha_hat, beta_min)
    bound = transition_time_bound(epsilon, alpha_hat, beta_min)
    series = transition_time_series(epsilon, alpha_hat, beta_min)

    eta_rate = _fit_or_nan(times, 1.0 - eta, window, 1e-13)
    distance_rate = _fit_or_nan(times, distance, window, 1e-7)
    measured = crossing_time(times, eta, 1.0 - epsilon)
    residual = eta_envelope_residual(times, eta, beta, alpha_hat, beta_min)

    logger.info(
        "rapid motion: eta rate %.4g, distance rate %.4g, t_eps measured %.4g, bound %.4g",
        eta_rate, distance_rate, measured, bound,
    )
    return RapidSlowDiagnostics(
        times=times,
        eta=eta,
        beta=beta,
        distance=distance,
        eta_decay_rate=eta_rate,
        distance_decay_rate=distance_rate,
        alpha_hat=alpha_hat,
        beta_min=beta_min,
        epsilon=epsilon,
        epsilon_floor=floor,
        t_eps_bound=bound,
        t_eps_series=series,
        t_eps_measured=measured,
        envelope_residual=residual,
    )


@dataclass
class SlowDynamicsReport:
    times: List[float]
    deviations: List[float]
    max_deviation: float
    separation: float
    form: str
    warnings: List[str] = field(default_factory=list)


def state_deviation(psi: ConfigWaveFunction, reference: ConfigWaveFunction) -> float:
    """Phase-insensitive relative distance min_theta ||psi - e^{i theta} ref|| / ||ref||."""
    overlap = inner(reference, psi)
    phase = overlap / abs(overlap) if abs(overlap) > 0.0 else 1.0
    return math.sqrt(norm_sq(psi - reference * phase) / norm_sq(reference))


def slow_dynamics_agreement(
    psi0: ConfigWaveFunction,
    hamiltonian: HamiltonianSpec,
    params: ModelParams,
    cfg: EvolutionConfig,
) -> SlowDynamicsReport:
    """
    Evolves lift(psi0) under the full equation and psi0 under the effective
    Hamiltonian, and compares extract(phi(t)) with psi(t) at every recorded
    time. Warns with ScaleSeparationWarning when ab/hbar is less than fifty
    times the classical frequency.
    """
    notes: List[str] = []
    separation = params.rate / hamiltonian.frequency if hamiltonian.frequency > 0 else math.inf
    if separation < SCALE_SEPARATION_MIN:
        message = (
            f"ab/hbar is only {separation:.1f} times the classical frequency of "
            f"'{hamiltonian.name}'; the effective dynamics is not expected to match"
        )
        logger.warning(message)
        warnings.warn(message, ScaleSeparationWarning, stacklevel=2)
        notes.append(message)
    form = "local" if hamiltonian.separable else "integral"
    full = evolve_full(lift(psi0, params), hamiltonian, params, cfg)
    reference = evolve_schrodinger(psi0, hamiltonian, params, cfg, form=form)
    deviations = [
        state_deviation(extract(phi, params), psi)
        for phi, psi in zip(full.states, reference.states)
    ]
    worst = max(deviations)
    logger.info("slow dynamics (%s form): max deviation %.4g at ab/hbar = %.4g", form, worst, params.rate)
    return SlowDynamicsReport(
        times=list(full.times),
        deviations=deviations,
        max_deviation=worst,
        separation=separation,
        form=form,
        warnings=notes,
    )
