from typing import Optional


class BoundaryDecayError(ValueError):
    """
    Raised when a field has not decayed at the outermost grid shell, so
    periodic spectral operations on it would wrap real content around.
    """

    def __init__(self, operation: str, magnitude: float, tolerance: float) -> None:
        self.operation = operation
        self.magnitude = magnitude
        self.tolerance = tolerance
        super().__init__(
            f"{operation}: boundary magnitude {magnitude:.3e} exceeds decay_tol={tolerance:.1e}. "
            "Enlarge the grid or move the state away from the edges."
        )


class BoundaryDecayWarning(RuntimeWarning):
    """
    Emitted instead of BoundaryDecayError when boundary_policy is 'warn'.
    """
    pass


class NonFiniteFieldError(ValueError):
    """
    Raised when a field holds NaN or Inf entries.
    """

    def __init__(self, kind: str, count: int) -> None:
        self.count = count
        super().__init__(f"{kind} has {count} non-finite entries.")


class GridMismatchError(ValueError):
    """
    Raised when two fields, or a field and a parameter set, do not live on
    compatible grids.
    """
    pass


class HermiteTruncationError(RuntimeError):
    """
    Raised when the Hermite expansion of the diffusion propagator drops more
    than trunc_tol of the field's mass.
    """

    def __init__(self, discarded: float, tolerance: float, cutoff: int) -> None:
        self.discarded = discarded
        self.tolerance = tolerance
        self.cutoff = cutoff
        super().__init__(
            f"Hermite cutoff J={cutoff} discards {discarded:.3e} of the mass "
            f"(trunc_tol={tolerance:.1e}). Raise hermite_cutoff."
        )


class QuadratureError(ArithmeticError):
    """
    Raised when a tensor quadrature fails to reach its tolerance.
    """

    def __init__(self, value: complex, error: float, tolerance: float, order: int) -> None:
        self.value = value
        self.error = error
        self.tolerance = tolerance
        self.order = order
        super().__init__(
            f"Quadrature did not converge at order {order}: estimate {value:.6e}, "
            f"error {error:.3e} > tol {tolerance:.1e}."
        )


class CFLViolationError(ValueError):
    """
    Raised when the transport step is outside the explicit integrator's
    stability interval.
    """

    def __init__(self, number: float, limit: float, dt: float) -> None:
        self.number = number
        self.limit = limit
        super().__init__(
            f"CFL number {number:.3f} exceeds {limit:.3f} at dt={dt:.3e}. "
            f"Use dt <= {dt * limit / number:.3e}."
        )


class NonHermitianWarning(RuntimeWarning):
    """
    Emitted when a discretized Hamiltonian is not Hermitian to hermitian_tol.
    """
    pass


class ScaleSeparationWarning(UserWarning):
    """
    Emitted when ab/hbar is not well separated from the classical frequency
    of the Hamiltonian, so the slow-motion limit is not expected to hold.
    """
    pass


class DimensionOverflowError(ValueError):
    """
    Raised when a dense operator would be too large to assemble.
    """

    def __init__(self, dimension: int, limit: int) -> None:
        self.dimension = dimension
        super().__init__(
            f"Dense assembly needs dimension {dimension}, above the limit of {limit}. "
            "Use a smaller grid."
        )


class DerivativeMismatchError(ValueError):
    """
    Raised when a Hamiltonian's supplied derivative disagrees with finite
    differences of its value.
    """

    def __init__(self, name: str, derivative: str, error: float, point: Optional[str] = None) -> None:
        self.error = error
        where = f" at {point}" if point else ""
        super().__init__(
            f"Hamiltonian '{name}': {derivative} disagrees with finite differences{where} "
            f"(error {error:.3e})."
        )


class UnknownScenarioError(NameError):
    """
    Raised when a scenario name is not in the registry.
    """

    def __init__(self, name: str, known) -> None:
        self.name = name
        super().__init__(
            f"Unknown scenario '{name}'. Known scenarios: {', '.join(sorted(known))}."
        )
