"""
The named experiments. Each scenario checks one group of claims about the
model, adds its rows to a ResultTable and writes its time series or grid
dumps next to the table.

A runner takes (config, table, out, rng) and returns nothing; `run_scenario`
wraps it with timing, error handling and the results/summary files.
"""
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from scipy import stats

from .calculus import apply_diffusion
from .core import ModelParams, PhaseGrid, inner, norm_sq, spectral_derivative
from .dynamics import (
    EvolutionConfig,
    apply_hatH_integral,
    apply_hatH_local,
    effective_potential,
    energy,
    evolve_full,
    evolve_schrodinger,
    first_shell_transition_time,
    hatH_decomposition,
    prepare_eta_state,
    rapid_slow_experiment,
    slow_dynamics_agreement,
    state_deviation,
)
from .errors import UnknownScenarioError
from .experiment import ExperimentConfig
from .hamiltonians import build_hamiltonian
from .observables import (
    PhysicalConstants,
    average_rho,
    average_W,
    classical_average,
    delta_E_n,
    lamb_shift_pipeline,
)
from .oracles import (
    check_derivative,
    dense_generator,
    expm_propagate,
    verify_lemma1,
    verify_lemma2,
)
from .quantization import (
    cat_state,
    coherent_state,
    extract,
    gaussian_state,
    lift,
    normalized,
    project_P0,
    project_P0_kernel,
    random_config_state,
    random_phase_state,
    rho_config,
    rho_phase,
    spreading_gaussian,
    wigner,
)
from .result import ResultTable, write_data
from .runtime import runtime

logger = logging.getLogger(__name__)

Runner = Callable[[ExperimentConfig, ResultTable, Path, np.random.Generator], None]


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    runner: Runner
    defaults: Callable[[], ExperimentConfig]


def _relative(diff, reference) -> float:
    return math.sqrt(norm_sq(diff) / norm_sq(reference))


def _appendix3_constants(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    constants = PhysicalConstants.cgs()
    record = lamb_shift_pipeline(
        config.option("frequency_mhz", 1058.0), config.option("temperature", 1.0), constants
    )
    thermal = record.thermal
    table.check_close(name, "a/b [s/g]", record.a_over_b, 3.41e4, rtol=0.01)
    table.check_close(name, "sqrt(a hbar/2b) [cm]", record.smoothing_width, 4.24e-12, rtol=0.02)
    table.check_close(name, "gamma [1/s]", thermal.gamma, 3.22e22, rtol=0.01)
    table.check_close(name, "hbar/kT [s]", thermal.relaxation_time, 7.638e-12, rtol=1e-3)
    table.check_close(name, "a^2 [m^2/s]", thermal.a_sq, 4.708e-16, rtol=0.01)
    table.check_close(name, "b^2 [(kg m/s)^2/s]", thermal.b_sq, 4.049e-31, rtol=0.01)
    table.check_close(name, "a/b [s/kg]", record.a_over_b_si, 3.41e7, rtol=0.01)
    table.check_close(name, "1/alpha", 1.0 / constants.alpha, 137.036, atol=1e-3)
    table.check_close(name, "Compton length [cm]", record.compton_length, 3.86e-11, rtol=1e-3)
    table.check_bound(name, "width / Compton length", record.smoothing_width / record.compton_length, upper=0.2)
    table.check_close(
        name,
        "|delta E_2| round trip [erg]",
        abs(delta_E_n(2, record.a_over_b, constants)),
        record.delta_E,
        rtol=1e-12,
    )
    table.check_close(
        name,
        "delta E_1 / delta E_8",
        delta_E_n(1, record.a_over_b, constants) / delta_E_n(8, record.a_over_b, constants),
        512.0,
        rtol=1e-12,
    )
    si = constants.si()
    table.check_close(name, "ab / kT", thermal.ab / (si.k_B * thermal.temperature), 1.0, rtol=1e-12)

    rounded = lamb_shift_pipeline(record.frequency_mhz, thermal.temperature, PhysicalConstants.rounded())
    table.check_close(name, "a/b from rounded inputs [s/g]", rounded.a_over_b, 3.41e4, rtol=0.01)

    write_data(
        out / "constants.csv",
        ("quantity", "CODATA inputs", "rounded inputs", "unit"),
        [
            ("delta E_2", record.delta_E, rounded.delta_E, "erg"),
            ("a/b", record.a_over_b, rounded.a_over_b, "s/g"),
            ("smoothing width", record.smoothing_width, rounded.smoothing_width, "cm"),
            ("gamma", thermal.gamma, rounded.thermal.gamma, "1/s"),
            ("hbar/kT", thermal.relaxation_time, rounded.thermal.relaxation_time, "s"),
            ("a^2", thermal.a_sq, rounded.thermal.a_sq, "m^2/s"),
            ("b^2", thermal.b_sq, rounded.thermal.b_sq, "(kg m/s)^2/s"),
        ],
    )


def _lemma_integrals(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    tol = config.option("tolerance", 1e-6)
    reports = [
        ("chi", verify_lemma1(config.params, tol, seed=int(rng.integers(2 ** 31)))),
        ("kernel moment", verify_lemma2(config.params, tol, order=config.option("order", 64))),
    ]
    rows = []
    for prefix, report in reports:
        for check in report.checks:
            table.add(name, f"{prefix}: {check.name}", check.value, check.target, f"err<={tol:g}", check.passed)
            rows.append((report.title, check.name, check.value, check.target, check.error))
    write_data(out / "lemma_checks.csv", ("group", "check", "value", "target", "error [rel]"), rows)


def _projector_laws(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    params = config.params
    grid = config.grid()
    count = config.option("fields", 20)
    fields = [random_phase_state(grid, params, rng) for _ in range(count)]
    states = [random_config_state(grid, params, rng) for _ in range(count)]
    rows = []

    idempotence = commutator = adjoint = 0.0
    for i, phi in enumerate(fields):
        projected = project_P0(phi, params)
        twice = project_P0(projected, params)
        diffused = apply_diffusion(phi, params)
        swapped = project_P0(diffused, params) - apply_diffusion(projected, params)
        other = fields[(i + 1) % count]
        lhs = inner(projected, other)
        rhs = inner(phi, project_P0(other, params))
        scale = math.sqrt(norm_sq(phi) * norm_sq(other))
        residuals = (
            _relative(twice - projected, phi),
            _relative(swapped, diffused),
            abs(lhs - rhs) / scale,
        )
        idempotence = max(idempotence, residuals[0])
        commutator = max(commutator, residuals[1])
        adjoint = max(adjoint, residuals[2])
        rows.append(("phase", i) + residuals)

    annihilated = left_inverse = isometry = 0.0
    for i, psi in enumerate(states):
        lifted = lift(psi, params)
        residuals = (
            math.sqrt(norm_sq(apply_diffusion(lifted, params)) / norm_sq(lifted)) / params.rate,
            _relative(extract(lifted, params) - psi, psi),
            abs(norm_sq(lifted) - norm_sq(psi)) / norm_sq(psi),
        )
        annihilated = max(annihilated, residuals[0])
        left_inverse = max(left_inverse, residuals[1])
        isometry = max(isometry, residuals[2])
        rows.append(("config", i) + residuals)

    table.check_bound(name, "||P0^2 - P0|| [rel]", idempotence, upper=1e-8)
    table.check_bound(name, "self-adjointness residual [rel]", adjoint, upper=1e-8)
    table.check_bound(name, "||[P0, Delta]|| [rel]", commutator, upper=1e-8)
    table.check_bound(name, "||Delta lift|| [ab/hbar]", annihilated, upper=1e-8)
    table.check_bound(name, "||extract lift - id|| [rel]", left_inverse, upper=1e-8)
    table.check_bound(name, "lift isometry defect [rel]", isometry, upper=1e-10)

    kernel = 0.0
    for phi in fields[: config.option("kernel_fields", 1)]:
        kernel = max(kernel, _relative(project_P0_kernel(phi, params) - project_P0(phi, params), phi))
    table.check_bound(name, "kernel integral vs transform P0 [rel]", kernel, upper=1e-6)

    write_data(
        out / "projector_residuals.csv",
        ("field", "index", "residual 1 [rel]", "residual 2 [rel]", "residual 3 [rel]"),
        rows,
    )


def _rapid_motion(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    params = config.params
    grid = config.grid()
    rate = params.rate
    epsilon = config.option("epsilon", 0.01)
    window = (config.option("fit_start", 1.5), config.option("fit_end", 3.5))
    horizon = config.evolution.t_end
    samples = config.option("samples", 81)
    sampling = EvolutionConfig(dt=horizon / (samples - 1), t_end=horizon, hermite_cutoff=config.evolution.hermite_cutoff)

    rates = []
    for _ in range(config.option("seeds", 10)):
        phi0 = random_phase_state(grid, params, rng)
        run = rapid_slow_experiment(phi0, None, params, sampling, epsilon, window, rng)
        rates.append(run.distance_decay_rate / rate)
    rates = np.asarray(rates)
    table.check_bound(name, "min distance decay rate [ab/hbar]", float(np.min(rates)), lower=1.0)
    table.check_bound(name, "max |rate / (2ab/hbar) - 1|", float(np.max(np.abs(rates / 2.0 - 1.0))), upper=0.05)

    second_shell = config.option("second_shell", 0.3)
    relaxation = -math.log(epsilon) / rate
    runs = {}
    for eta0, label, band in ((epsilon, "eta(0) = eps", (0.5, 2.0)), (0.5, "eta(0) = 0.5", (0.8, 1.2))):
        psi = random_config_state(grid, params, rng)
        phi0 = prepare_eta_state(psi, params, eta0, rng, second_shell=second_shell)
        run = rapid_slow_experiment(phi0, None, params, config.evolution, epsilon, window, rng)
        runs[eta0] = run
        shell_time = first_shell_transition_time(epsilon, eta0, rate, 1.0 - second_shell)
        table.check_close(name, f"eta(0), {label}", float(run.eta[0]), eta0, atol=1e-8)
        table.check_bound(
            name,
            f"t_eps / ((-ln eps) hbar / ab), {label}",
            run.t_eps_measured / relaxation,
            lower=band[0],
            upper=band[1],
        )
        table.check_bound(
            name,
            f"t_eps / first-shell relaxation time, {label}",
            run.t_eps_measured / shell_time,
            lower=0.95,
            upper=1.05,
        )
    run = runs[epsilon]
    table.check_bound(name, "t_eps measured / bound", run.t_eps_measured / run.t_eps_bound, upper=1.0)
    table.check_bound(name, "eta envelope violation [rel]", run.envelope_residual, upper=0.02)

    write_data(
        out / "decay_rates.csv",
        ("seed", "distance decay rate [ab/hbar]"),
        [(i, value) for i, value in enumerate(rates)],
    )
    write_data(
        out / "eta_series.csv",
        ("t [hbar/ab]", "eta", "beta [ab/hbar]", "distance"),
        [
            (t * rate, eta, beta / rate, distance)
            for t, eta, beta, distance in zip(run.times, run.eta, run.beta, run.distance)
        ],
    )


def _nonnegativity(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    params = config.params
    grid = config.grid()
    psi = cat_state(grid, params, config.option("separation", 4.0))
    rho = rho_phase(psi, params)
    w = wigner(psi, params)

    table.check_bound(name, "min rho / max rho", float(rho.values.min() / rho.values.max()), lower=-1e-10)
    table.check_bound(name, "min W / max |W|", float(w.values.min() / np.abs(w.values).max()), upper=-0.01)
    table.check_close(name, "int rho dx dp", rho.integral(), norm_sq(psi), atol=1e-10)

    marginal = rho.marginal_x().values
    convolved = rho_config(psi, params).values
    table.check_bound(
        name,
        "int rho dp vs chi^2 convolution [rel]",
        float(np.max(np.abs(marginal - convolved)) / np.max(convolved)),
        upper=1e-6,
    )
    density = np.abs(psi.values) ** 2
    table.check_bound(
        name,
        "int W dp vs |psi|^2 [rel]",
        float(np.max(np.abs(w.marginal_x().values - density)) / np.max(density)),
        upper=1e-6,
    )

    gaussian = gaussian_state(grid, width=config.option("gaussian_width", 1.0))
    weights = np.abs(gaussian.values) ** 2
    coord = grid.config_mesh[0]
    mean = float(np.sum(coord * weights) / np.sum(weights))
    variance = float(np.sum((coord - mean) ** 2 * weights) / np.sum(weights))
    table.check_close(
        name,
        "Gaussian marginal variance",
        rho_phase(gaussian, params).variance_x(),
        variance + params.width_sq,
        atol=1e-8,
    )

    # first x and p axes only in two dimensions
    x = grid.x_mesh[0].ravel()
    p = grid.p_mesh[0].ravel()
    dump = zip(x, p, rho.values.ravel(), w.values.ravel())
    write_data(out / "phase_densities.csv", ("x", "p", "rho [1/(x p)]", "W [1/(x p)]"), dump)


def _effective_hamiltonian(
    config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator
) -> None:
    name = config.scenario
    params = config.params
    grid = config.grid()
    omega = float(config.hamiltonian_args.get("omega", 1.0))
    harmonic = build_hamiltonian("harmonic", params, omega=omega)

    agreement = 0.0
    for _ in range(config.option("states", 10)):
        psi = random_config_state(grid, params, rng)
        local = apply_hatH_local(psi, harmonic, params)
        agreement = max(agreement, _relative(apply_hatH_integral(psi, harmonic, params) - local, local))
    table.check_bound(name, "integral vs local form, harmonic [rel]", agreement, upper=1e-8)

    psi = random_config_state(grid, params, rng)
    parts = hatH_decomposition(psi, harmonic, params)
    m, hbar, a, b, n = params.mass, params.hbar, params.a, params.b, params.n
    second = sum(spectral_derivative(psi.values, k, grid.dx, order=2) for k in range(n))
    kinetic = psi.with_values(-hbar ** 2 / (2.0 * m) * second + n * b * hbar / (4.0 * m * a) * psi.values)
    potential = harmonic.potential(grid.config_mesh) - a * hbar / (4.0 * b) * harmonic.potential_laplacian(grid.config_mesh)
    table.check_bound(name, "kinetic term closed form [rel]", _relative(parts.kinetic - kinetic, kinetic), upper=1e-8)
    drift = psi * (n * b * hbar / (2.0 * m * a))
    table.check_bound(name, "drift term closed form [rel]", _relative(parts.drift - drift, drift), upper=1e-8)
    expected = psi.with_values(potential * psi.values)
    table.check_bound(name, "potential term closed form [rel]", _relative(parts.potential - expected, expected), upper=1e-8)

    levels = config.option("levels", 11)
    spectrum = dense_generator("hatH_local", harmonic, params, grid).eigenvalues()[:levels]
    k = np.arange(levels)
    shift = -a * hbar / (4.0 * b) * m * omega ** 2 + 3.0 * b * hbar / (4.0 * m * a)
    predicted = hbar * omega * (k + 0.5) + shift
    table.check_bound(
        name,
        f"local spectrum k<{levels} [rel]",
        float(np.max(np.abs(spectrum - predicted)) / np.max(np.abs(predicted))),
        upper=1e-8,
    )
    write_data(
        out / "spectrum.csv",
        ("k", "eigenvalue [hbar omega]", "predicted [hbar omega]"),
        [(int(i), s / (hbar * omega), e / (hbar * omega)) for i, s, e in zip(k, spectrum, predicted)],
    )

    lam = config.option("lam", 0.1)
    widths, residuals = [], []
    for halving in range(config.option("halvings", 2) + 1):
        scaled = params.replace(a=params.a / 2 ** halving)
        scaled_grid = PhaseGrid.from_params(scaled, config.points)
        quartic = build_hamiltonian("quartic", scaled, lam=lam)
        packet = normalized(gaussian_state(scaled_grid, 0.3, 0.5, config.option("quartic_width", 0.6)))
        gap = apply_hatH_integral(packet, quartic, scaled) - apply_hatH_local(packet, quartic, scaled)
        widths.append(scaled.a * scaled.hbar / scaled.b)
        residuals.append(math.sqrt(norm_sq(gap) / norm_sq(packet)))
    fit = stats.linregress(np.log(widths), np.log(residuals))
    table.check_close(name, "quartic residual exponent", float(fit.slope), 2.0, atol=0.3)
    write_data(
        out / "quartic_residuals.csv",
        ("a hbar / b", "||hatH_integral - hatH_local|| [energy]"),
        list(zip(widths, residuals)),
    )

    level = config.option("constant", 0.75)
    flat = build_hamiltonian("constant", params, c=level)
    shifted = apply_hatH_integral(psi, flat, params)
    table.check_bound(name, "constant H gives c psi [rel]", _relative(shifted - psi * level, psi * level), upper=1e-8)

    coulomb = build_hamiltonian("regularized-coulomb-1d", params.replace(n=1))
    points = np.linspace(-3.0, 3.0, 61)[None, :]
    error = check_derivative(coulomb.name, coulomb.potential, coulomb.potential_laplacian, points, order=2, h=1e-3)
    table.check_bound(name, "coulomb Laplacian vs finite differences", error, upper=1e-5)
    if params.n == 1:
        veff = effective_potential(coulomb, grid, params)
        origin = grid.points // 2
        expected_origin = -1.0 - a * hbar / (4.0 * b) * 1.0 + 3.0 * b * hbar / (4.0 * m * a)
        table.check_close(name, "coulomb V_eff(0)", float(veff[origin]), expected_origin, rtol=1e-12)


def _schrodinger_checks(name: str, table: ResultTable, params: ModelParams, grid: PhaseGrid, center: float, omega: float) -> None:
    """Free spreading, the coherent-state orbit and energy conservation of the effective equation."""
    def position(x, p):
        return x[0]

    with runtime.scoped(boundary_policy="ignore"):
        free = build_hamiltonian("free", params)
        packet = gaussian_state(grid, -1.0, 0.5)
        run = evolve_schrodinger(packet, free, params, EvolutionConfig(dt=0.01, t_end=1.0, record_every=25))
        spread = max(
            state_deviation(state, spreading_gaussian(grid, t, -1.0, 0.5, mass=free.mass)) for t, state in run
        )
        table.check_bound(name, "free packet vs closed form [rel]", spread, upper=1e-8)

        harmonic = build_hamiltonian("harmonic", params, omega=omega)
        psi0 = coherent_state(grid, params, center=center, omega=omega)
        half_period = math.pi / omega
        run = evolve_schrodinger(psi0, harmonic, params, EvolutionConfig(dt=1e-3 / omega, t_end=half_period, record_every=250))
        drift = max(
            abs(classical_average(position, state) / norm_sq(state) - center * math.cos(omega * t)) for t, state in run
        )
        table.check_bound(name, "coherent center vs classical orbit", drift, upper=1e-6 * max(1.0, abs(center)))

        cfg = EvolutionConfig(dt=0.05 / omega, t_end=half_period, record_every=7)
        dense = evolve_schrodinger(psi0, harmonic, params, cfg, method="dense")
        energies = [energy(state, harmonic, params) for state in dense.states]
        table.check_bound(name, "energy drift, dense steps [rel]", max(abs(e / energies[0] - 1.0) for e in energies), upper=1e-8)


def _slow_dynamics(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    params = config.params
    omega = float(config.hamiltonian_args.get("omega", 1.0))
    center = config.option("center", 1.0)
    ladder = config.option("ladder", (1.0, 2.0, 4.0))
    rows = []
    worst: List[float] = []
    for factor in ladder:
        root = math.sqrt(factor)
        scaled = params.replace(a=params.a * root, b=params.b * root)
        grid = PhaseGrid.from_params(scaled, config.points, config.aspect)
        hamiltonian = config.build_hamiltonian(scaled)
        psi0 = coherent_state(grid, scaled, center=center, omega=omega)
        report = slow_dynamics_agreement(psi0, hamiltonian, scaled, config.evolution)
        worst.append(report.max_deviation)
        separation = scaled.rate / omega
        table.check_bound(name, f"max deviation, ab/hbar = {separation:g} omega", report.max_deviation, upper=0.05)
        rows.extend((separation, t, d) for t, d in zip(report.times, report.deviations))
    if len(worst) > 1:
        ratio = max(later / earlier for earlier, later in zip(worst, worst[1:]))
        table.check_bound(name, "deviation ratio per doubling of ab/hbar", ratio, upper=1.0)

    if config.option("control", True):
        grid = config.grid()
        flat = build_hamiltonian("constant", params, c=config.option("constant", 0.75))
        psi0 = coherent_state(grid, params, center=center, omega=omega)
        short = EvolutionConfig(dt=0.01, t_end=1.0, record_every=10)
        report = slow_dynamics_agreement(psi0, flat, params, short)
        table.check_bound(name, "constant H deviation", report.max_deviation, upper=1e-8)

    if config.option("schrodinger", True):
        _schrodinger_checks(name, table, params, config.grid(), center, omega)

    write_data(out / "deviations.csv", ("ab/hbar [omega]", "t [1/omega]", "deviation [rel]"), rows)


def _oracle_equivalence(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    params = config.params
    grid = config.grid()
    hamiltonian = config.build_hamiltonian()
    cfg = config.evolution
    with runtime.scoped(boundary_policy="ignore"):
        packet = normalized(gaussian_state(grid, 0.3, 0.5, 1.0))
        phi0 = prepare_eta_state(packet, params, 0.5, rng, second_shell=0.0)

        split = evolve_full(phi0, hamiltonian, params, cfg).final
        full = dense_generator("full", hamiltonian, params, grid)
        reference = expm_propagate(full, cfg.t_end, phi0)
        table.check_bound(name, f"Strang vs expm at t={cfg.t_end:g} [rel]", _relative(split - reference, reference), upper=1e-6)

        mismatch = 0.0
        transport = dense_generator("transport", hamiltonian, params, grid)
        for _ in range(config.option("fields", 3)):
            phi = random_phase_state(grid, params, rng)
            dense = full.apply(phi.values)
            direct = apply_diffusion(phi, params).values + transport.apply(phi.values)
            mismatch = max(mismatch, float(np.linalg.norm(dense - direct) / np.linalg.norm(direct)))
        table.check_bound(name, "dense vs transform generator [rel]", mismatch, upper=1e-10)
        table.check_bound(name, "dense A anti-Hermitian residual", transport.anti_hermitian_residual(), upper=1e-8)

        projector = dense_generator("projector", None, params, grid)
        spectrum = projector.eigenvalues()
        spread = float(np.max(np.minimum(np.abs(spectrum), np.abs(spectrum - 1.0))))
        table.check_bound(name, "dense P0 spectrum distance from {0, 1}", spread, upper=1e-8)
        table.check_close(name, "dense P0 rank", int(np.sum(spectrum > 0.5)), grid.points ** grid.n)

        local = dense_generator("hatH_local", hamiltonian, params, grid)
        table.check_bound(name, "dense local hatH Hermitian residual", local.hermitian_residual(), upper=1e-8)

        fine = PhaseGrid.from_params(params, config.option("diffusion_points", 32), config.aspect)
        diffusion = dense_generator("diffusion", None, params, fine)
        eigenvalues = diffusion.eigenvalues()
        table.check_bound(name, "dense Delta Hermitian residual", diffusion.hermitian_residual(), upper=1e-8)
        table.check_bound(name, "dense Delta max eigenvalue [ab/hbar]", float(eigenvalues[-1]) / params.rate, upper=1e-8)
        kernel = int(np.sum(eigenvalues > -1e-6 * params.rate))
        table.check_close(name, "dense Delta kernel dimension", kernel, fine.points ** fine.n)

    write_data(
        out / "diffusion_spectrum.csv",
        ("index", "eigenvalue [ab/hbar]"),
        [(i, value / params.rate) for i, value in enumerate(eigenvalues[::-1])],
    )


def _averaging_limits(config: ExperimentConfig, table: ResultTable, out: Path, rng: np.random.Generator) -> None:
    name = config.scenario
    params = config.params
    grid = config.grid()
    width = config.option("width", 0.8)
    psi = gaussian_state(grid, width=width)
    norm = norm_sq(psi)

    def one(x, p):
        return np.ones_like(x[0])

    def x_squared(x, p):
        return x[0] ** 2

    def p_squared(x, p):
        return p[0] ** 2

    def mixed(x, p):
        return x[0] ** 2 + x[0] * p[0]

    table.check_close(name, "average_W(1) - ||psi||^2", average_W(one, psi, params), norm, atol=1e-10)
    table.check_close(name, "average_rho(1) - ||psi||^2", average_rho(one, psi, params), norm, atol=1e-10)
    w_x = average_W(x_squared, psi, params).real
    table.check_close(
        name,
        "average_rho(x^2) - average_W(x^2)",
        average_rho(x_squared, psi, params) - w_x,
        params.width_sq,
        atol=5e-3 * max(1.0, abs(w_x)),
    )
    w_p = average_W(p_squared, psi, params).real
    table.check_close(
        name,
        "average_rho(p^2) - average_W(p^2)",
        average_rho(p_squared, psi, params) - w_p,
        params.p_width_sq,
        atol=5e-3 * max(1.0, abs(w_p)),
    )

    rows = []
    gaps = []
    for divisor in (1.0, 2.0):
        scaled = params.replace(hbar=params.hbar / divisor)
        scaled_grid = PhaseGrid.from_params(scaled, config.points, config.aspect)
        packet = gaussian_state(scaled_grid, width=width)
        quantum = average_W(mixed, packet, scaled)
        classical = classical_average(mixed, packet)
        gaps.append(abs(quantum - classical))
        rows.append((scaled.hbar, quantum, average_rho(mixed, packet, scaled), classical))
    table.check_bound(name, "|average_W - classical| ratio under hbar halving", gaps[0] / gaps[1], lower=1.6, upper=2.4)
    write_data(
        out / "averages.csv",
        ("hbar", "average_W(x^2 + x p)", "average_rho(x^2 + x p)", "classical"),
        rows,
    )


def _defaults(name: str, **kwargs) -> Callable[[], ExperimentConfig]:
    def build() -> ExperimentConfig:
        return ExperimentConfig(scenario=name, **kwargs)

    return build


SCENARIOS: Dict[str, Scenario] = {
    scenario.name: scenario
    for scenario in (
        Scenario(
            "appendix3-constants",
            "Level shift to a/b, smoothing width and thermal coefficients.",
            _appendix3_constants,
            _defaults("appendix3-constants", options={"frequency_mhz": 1058.0, "temperature": 1.0}),
        ),
        Scenario(
            "lemma-integrals",
            "Kernel identities and moment integrals against quadrature.",
            _lemma_integrals,
            _defaults("lemma-integrals", options={"tolerance": 1e-6, "order": 64}),
        ),
        Scenario(
            "projector-laws",
            "P0 is an orthogonal projector commuting with the diffusion; lift is an isometry.",
            _projector_laws,
            _defaults("projector-laws", options={"fields": 20, "kernel_fields": 1}),
        ),
        Scenario(
            "rapid-motion",
            "Pure diffusion relaxes onto the stationary subspace at rate 2ab/hbar.",
            _rapid_motion,
            _defaults(
                "rapid-motion",
                evolution=EvolutionConfig(dt=0.01, t_end=2.0),
                options={
                    "seeds": 10,
                    "samples": 81,
                    "epsilon": 0.01,
                    "fit_start": 1.5,
                    "fit_end": 3.5,
                },
            ),
        ),
        Scenario(
            "nonnegativity",
            "rho stays nonnegative where the Wigner function of a cat state does not.",
            _nonnegativity,
            _defaults("nonnegativity", options={"separation": 4.0, "gaussian_width": 1.0}),
        ),
        Scenario(
            "effective-hamiltonian",
            "Integral and local effective Hamiltonians, spectrum and quartic residual scaling.",
            _effective_hamiltonian,
            _defaults(
                "effective-hamiltonian",
                hamiltonian_args={"omega": 1.0},
                options={"states": 10, "levels": 11, "lam": 0.1, "halvings": 2, "quartic_width": 0.6, "constant": 0.75},
            ),
        ),
        Scenario(
            "slow-dynamics",
            "Extracted full dynamics follows the effective Schrodinger equation.",
            _slow_dynamics,
            _defaults(
                "slow-dynamics",
                params=ModelParams(a=5.0, b=10.0),
                hamiltonian_args={"omega": 1.0},
                evolution=EvolutionConfig(dt=2e-3, t_end=2.0 * math.pi, record_every=50),
                options={"ladder": "1, 2, 4", "center": 1.0, "control": "true", "constant": 0.75, "schrodinger": "true"},
            ),
        ),
        Scenario(
            "oracle-equivalence",
            "Dense matrices and expm against the transform-based operators and Strang splitting.",
            _oracle_equivalence,
            _defaults(
                "oracle-equivalence",
                params=ModelParams(a=1.0, b=1.0),
                points=16,
                hamiltonian_args={"omega": 1.0},
                evolution=EvolutionConfig(dt=2e-5, t_end=0.5, record_every=5000),
                options={"fields": 3, "diffusion_points": 32},
            ),
        ),
        Scenario(
            "averaging-limits",
            "Averages against rho and W differ by the kernel variance and meet the classical limit.",
            _averaging_limits,
            _defaults("averaging-limits", options={"width": 0.8}),
        ),
    )
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise UnknownScenarioError(name, SCENARIOS) from None


def list_scenarios() -> str:
    width = max(len(name) for name in SCENARIOS)
    return "\n".join(f"{name.ljust(width)}  {s.summary}" for name, s in SCENARIOS.items()) + "\n"


def default_config(name: str) -> ExperimentConfig:
    return get_scenario(name).defaults()


def emit_default_config(name: str) -> str:
    return default_config(name).emit()


def load_config(source: Union[str, Path]) -> ExperimentConfig:
    """Parses a configuration file and checks that its scenario exists."""
    config = ExperimentConfig.from_file(source)
    get_scenario(config.scenario)
    return config


def run_scenario(
    config: ExperimentConfig,
    out: Optional[Union[str, Path]] = None,
    seed: Optional[Union[int, np.random.SeedSequence]] = None,
    error_mode: Optional[str] = None,
) -> ResultTable:
    """
    Runs one scenario and writes results.csv, summary.txt and its data files
    into `out` (default: <config.output>/<scenario>). `seed` overrides the
    config's seed.
    """
    scenario = get_scenario(config.scenario)
    error_mode = error_mode or runtime.setting("error_mode")
    table = ResultTable(error_mode)
    out = Path(config.output) / config.scenario if out is None else Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(config.seed if seed is None else seed)
    rng = np.random.default_rng(seed)

    logger.info("scenario %s: starting", scenario.name)
    start = time.monotonic()
    try:
        scenario.runner(config, table, out, rng)
    except Exception as exc:
        if error_mode == "raise":
            raise
        logger.error("scenario %s raised %s: %s", scenario.name, type(exc).__name__, exc)
        table._add_error(scenario.name, exc)
    duration = time.monotonic() - start
    table._add_timing(scenario.name, duration)
    logger.info("scenario %s: %d rows, %d failed, %.2fs", scenario.name, len(table), len(table.failures), duration)

    table.write_csv(out / "results.csv")
    table.write_summary(out / "summary.txt")
    return table
