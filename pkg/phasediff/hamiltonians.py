"""
Classical Hamilton functions H(x, p) with their derivatives.

Evaluators take coordinate and momentum arrays shaped (n, ...) and return
arrays shaped (...) for values, (n, ...) for gradients and (n, n, ...) for
the coordinate Hessian.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from .core import ModelParams
from .errors import DerivativeMismatchError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
Potential = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """
    H(x, p) with first derivatives and the coordinate Hessian. When `mass`
    and the potential callables are given, H = p^2/2m + V(x) and the local
    effective Hamiltonian is available.
    """

    name: str
    value: Evaluator
    grad_x: Evaluator
    grad_p: Evaluator
    hess_x: Evaluator
    mass: Optional[float] = None
    potential: Optional[Potential] = None
    potential_grad: Optional[Potential] = None
    potential_laplacian: Optional[Potential] = None
    frequency: float = 0.0
    dimension: Optional[int] = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        if self.validate:
            self.check_derivatives()

    @property
    def separable(self) -> bool:
        return (
            self.mass is not None
            and self.potential is not None
            and self.potential_laplacian is not None
        )

    def laplacian_x(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        hessian = self.hess_x(x, p)
        return sum(hessian[k, k] for k in range(x.shape[0]))

    def check_derivatives(self, samples: int = 16, h: float = 1e-4, tol: float = 1e-5) -> float:
        """
        Compares the supplied derivatives with central differences of H at
        seeded random points. Returns the worst scaled error.
        """
        from .oracles import central_difference, second_difference

        n = self.dimension or 1
        rng = np.random.default_rng(0)
        x = rng.uniform(-2.0, 2.0, size=(n, samples))
        p = rng.uniform(-2.0, 2.0, size=(n, samples))
        worst = 0.0

        def compare(label: str, supplied: np.ndarray, estimate: np.ndarray) -> None:
            nonlocal worst
            scale = max(1.0, float(np.max(np.abs(supplied))))
            error = float(np.max(np.abs(supplied - estimate))) / scale
            worst = max(worst, error)
            if error > tol:
                raise DerivativeMismatchError(self.name, label, error)

        grad_x = self.grad_x(x, p)
        grad_p = self.grad_p(x, p)
        hess = self.hess_x(x, p)
        for k in range(n):
            compare(f"dH/dx{k}", grad_x[k], central_difference(lambda y: self.value(y, p), x, k, h))
            compare(f"dH/dp{k}", grad_p[k], central_difference(lambda q: self.value(x, q), p, k, h))
            for j in range(n):
                compare(
                    f"d2H/dx{j}dx{k}",
                    hess[j, k],
                    central_difference(lambda y: self.grad_x(y, p)[j], x, k, h),
                )
        if self.separable:
            potential_grad = self.potential_grad(x) if self.potential_grad else None
            for k in range(n):
                if potential_grad is not None:
                    compare(f"dV/dy{k}", potential_grad[k], central_difference(self.potential, x, k, h))
            lap = sum(second_difference(self.potential, x, k, 1e-3) for k in range(n))
            compare("laplacian V", self.potential_laplacian(x), lap)
        logger.debug("Hamiltonian '%s' derivatives validated (worst error %.2e)", self.name, worst)
        return worst


def _kinetic(mass: float):
    def value(p: np.ndarray) -> np.ndarray:
        return np.sum(p ** 2, axis=0) / (2.0 * mass)

    return value


def _separable(
    name: str,
    mass: float,
    potential: Potential,
    potential_grad: Potential,
    potential_hess_diag: Potential,
    frequency: float,
    dimension: Optional[int] = None,
) -> HamiltonianSpec:
    kinetic = _kinetic(mass)

    def hess_x(x: np.ndarray, p: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        diag = potential_hess_diag(x)
        out = np.zeros((n, n) + x.shape[1:])
        for k in range(n):
            out[k, k] = diag[k]
        return out

    return HamiltonianSpec(
        name=name,
        value=lambda x, p: kinetic(p) + potential(x),
        grad_x=lambda x, p: potential_grad(x) + 0.0 * p,
        grad_p=lambda x, p: p / mass + 0.0 * x,
        hess_x=hess_x,
        mass=mass,
        potential=potential,
        potential_grad=potential_grad,
        potential_laplacian=lambda x: np.sum(potential_hess_diag(x), axis=0),
        frequency=frequency,
        dimension=dimension,
    )


def free(params: ModelParams) -> HamiltonianSpec:
    """H = p^2 / 2m."""
    return _separable(
        "free",
        params.mass,
        lambda x: np.zeros(x.shape[1:]),
        np.zeros_like,
        np.zeros_like,
        frequency=0.0,
    )


def harmonic(params: ModelParams, omega: float = 1.0) -> HamiltonianSpec:
    """H = p^2 / 2m + m omega^2 x^2 / 2."""
    m = params.mass
    stiffness = m * omega ** 2
    return _separable(
        "harmonic",
        m,
        lambda x: 0.5 * stiffness * np.sum(x ** 2, axis=0),
        lambda x: stiffness * x,
        lambda x: np.full_like(x, stiffness, dtype=float),
        frequency=omega,
    )


def quartic(params: ModelParams, lam: float = 0.1, omega: float = 0.0) -> HamiltonianSpec:
    """H = p^2 / 2m + lam x^4 + m omega^2 x^2 / 2."""
    m = params.mass
    stiffness = m * omega ** 2
    frequency = omega if omega > 0 else math.sqrt(12.0 * lam / m)
    return _separable(
        "quartic",
        m,
        lambda x: np.sum(lam * x ** 4 + 0.5 * stiffness * x ** 2, axis=0),
        lambda x: 4.0 * lam * x ** 3 + stiffness * x,
        lambda x: 12.0 * lam * x ** 2 + stiffness,
        frequency=frequency,
    )


def regularized_coulomb_1d(
    params: ModelParams, charge: float = 1.0, softening: float = 1.0
) -> HamiltonianSpec:
    """H = p^2 / 2m - Z / sqrt(x^2 + s^2), one dimension only."""
    if params.n != 1:
        raise ValueError("regularized-coulomb-1d needs n = 1")
    s2 = softening ** 2

    def potential(x: np.ndarray) -> np.ndarray:
        return -charge / np.sqrt(x[0] ** 2 + s2)

    def potential_grad(x: np.ndarray) -> np.ndarray:
        return charge * x / (x ** 2 + s2) ** 1.5

    def potential_hess(x: np.ndarray) -> np.ndarray:
        return charge * (s2 - 2.0 * x ** 2) / (x ** 2 + s2) ** 2.5

    return _separable(
        "regularized-coulomb-1d",
        params.mass,
        potential,
        potential_grad,
        potential_hess,
        frequency=math.sqrt(charge / (softening ** 3 * params.mass)),
        dimension=1,
    )


def constant(params: ModelParams, c: float = 0.0) -> HamiltonianSpec:
    """H = c everywhere."""
    return HamiltonianSpec(
        name="constant",
        value=lambda x, p: np.full(x.shape[1:], float(c)),
        grad_x=lambda x, p: np.zeros_like(x, dtype=float),
        grad_p=lambda x, p: np.zeros_like(p, dtype=float),
        hess_x=lambda x, p: np.zeros((x.shape[0],) + x.shape, dtype=float),
        frequency=0.0,
    )


HAMILTONIANS: Dict[str, Callable[..., HamiltonianSpec]] = {
    "free": free,
    "harmonic": harmonic,
    "quartic": quartic,
    "regularized-coulomb-1d": regularized_coulomb_1d,
    "constant": constant,
}


def build_hamiltonian(name: str, params: ModelParams, **kwargs: Any) -> HamiltonianSpec:
    try:
        factory = HAMILTONIANS[name]
    except KeyError:
        known = ", ".join(sorted(HAMILTONIANS))
        raise ValueError(f"Unknown Hamiltonian '{name}'. Known: {known}.") from None
    return factory(params, **kwargs)
