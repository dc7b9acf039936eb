from typing import Optional, Sequence

from .experiment import ExperimentConfig


def print_debug_report(
    configs: Sequence[ExperimentConfig],
    threads: int,
    seed: Optional[int],
    settings: dict,
) -> None:
    """Prints the scenarios about to run with their models, grids and step control."""
    print("\n--- phasediff Debug Report ---")

    print(f"Scenarios ({len(configs)}):")
    for config in configs:
        print(f"  • {config.scenario}")

    print("\nModels:")
    for config in configs:
        params = config.params
        grid = config.grid()
        x_lo, x_hi = grid.x_extent
        p_lo, p_hi = grid.p_extent
        print(
            f"  • {config.scenario}\n"
            f"    hbar={params.hbar:g} m={params.mass:g} a={params.a:g} b={params.b:g} n={params.n}"
            f"  (ab/hbar={params.rate:g})\n"
            f"    Grid: {grid.points}^{2 * grid.n} points, x in [{x_lo:.3g}, {x_hi:.3g}], "
            f"p in [{p_lo:.3g}, {p_hi:.3g}]\n"
            f"    Hamiltonian: {config.hamiltonian} {config.hamiltonian_args or ''}".rstrip()
        )
        evo = config.evolution
        print(f"    Evolution: dt={evo.dt:g} t_end={evo.t_end:g} steps={evo.steps} cutoff={evo.cutoff()}")

    print("\nExecution Plan:")
    if not configs:
        print("  - No scenarios to run.")
    else:
        mode = "sequential" if threads <= 1 else f"up to {threads} concurrent"
        print(f"  - {mode}")
        source = f"children of SeedSequence({seed})" if seed is not None else "per-config seeds"
        print(f"  - Seeds: {source}")

    print("\nRuntime Settings:")
    for key in sorted(settings):
        print(f"  - {key} = {settings[key]!r}")

    print("--- End Report ---\n")
