"""
Brute-force reference machinery: finite differences, tensor Gauss
quadrature, the closed-form kernel integrals, and dense matrices of the
grid operators with their exponentials.

Everything here is slow on purpose and independent of the transform-based
production paths it is used to check.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg
from scipy.special import roots_hermite

from .calculus import TransportOperator, apply_diffusion
from .core import ConfigWaveFunction, ModelParams, PhaseGrid, PhaseWaveFunction
from .dynamics import apply_hatH_integral, apply_hatH_local
from .errors import DerivativeMismatchError, DimensionOverflowError, QuadratureError
from .helpers import assemble_columns
from .quantization import chi, chi_tilde, project_P0_values
from .runtime import runtime

logger = logging.getLogger(__name__)

DENSE_LIMIT = 1024
DENSE_KINDS = ("diffusion", "transport", "projector", "full", "hatH_local", "hatH_integral")


def central_difference(func: Callable[[np.ndarray], np.ndarray], points: np.ndarray, axis: int, h: float) -> np.ndarray:
    """(f(x + h e_k) - f(x - h e_k)) / 2h for points shaped (n, ...)."""
    step = np.zeros_like(points, dtype=float)
    step[axis] = h
    return (func(points + step) - func(points - step)) / (2.0 * h)


def second_difference(func: Callable[[np.ndarray], np.ndarray], points: np.ndarray, axis: int, h: float) -> np.ndarray:
    step = np.zeros_like(points, dtype=float)
    step[axis] = h
    return (func(points + step) - 2.0 * func(points) + func(points - step)) / h ** 2


def check_derivative(
    name: str,
    func: Callable[[np.ndarray], np.ndarray],
    derivative: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray,
    axis: int = 0,
    order: int = 1,
    h: float = 1e-4,
    tol: float = 1e-5,
) -> float:
    """
    Compares `derivative` with a first or second central difference of
    `func` along `axis`. Returns the scaled error, raises
    DerivativeMismatchError above `tol`.
    """
    difference = central_difference if order == 1 else second_difference
    estimate = difference(func, points, axis, h)
    supplied = derivative(points)
    scale = max(1.0, float(np.max(np.abs(supplied))))
    error = float(np.max(np.abs(supplied - estimate))) / scale
    if error > tol:
        worst = int(np.argmax(np.abs(supplied - estimate)))
        raise DerivativeMismatchError(name, f"order {order} along axis {axis}", error, np.ravel(points)[worst])
    return error


@dataclass(frozen=True)
class QuadratureEstimate:
    value: complex
    error: float
    order: int


def _gauss_legendre(box: Sequence[Tuple[float, float]], order: int):
    nodes, weights = leggauss(order)
    axes, axis_weights = [], []
    for lo, hi in box:
        half = 0.5 * (hi - lo)
        axes.append(0.5 * (hi + lo) + half * nodes)
        axis_weights.append(half * weights)
    mesh = np.meshgrid(*axes, indexing="ij")
    total = axis_weights[0]
    for w in axis_weights[1:]:
        total = np.multiply.outer(total, w)
    return mesh, total


def quad_nd_estimate(
    integrand: Callable[..., np.ndarray],
    box: Sequence[Tuple[float, float]],
    tol: Optional[float] = None,
    start_order: int = 16,
    max_order: int = 512,
) -> QuadratureEstimate:
    """
    Tensor Gauss-Legendre quadrature over a box, doubling the order until two
    successive estimates agree to `tol` relative to max(1, |value|).

    `integrand` takes one coordinate mesh per dimension and returns values of
    the mesh shape. Raises QuadratureError if `max_order` is reached first.
    """
    tol = runtime.setting("quadrature_tol") if tol is None else tol
    if len(box) > 3:
        raise ValueError(f"tensor quadrature supports up to 3 dimensions, got {len(box)}")

    def evaluate(order: int) -> complex:
        mesh, weights = _gauss_legendre(box, order)
        return complex(np.sum(weights * integrand(*mesh)))

    order = start_order
    previous = evaluate(order)
    while True:
        order *= 2
        current = evaluate(order)
        error = abs(current - previous)
        if error <= tol * max(1.0, abs(current)):
            logger.debug("quad_nd converged at order %d, error %.2e", order, error)
            return QuadratureEstimate(current, error, order)
        if order >= max_order:
            raise QuadratureError(current, error, tol, order)
        previous = current


def quad_nd(
    integrand: Callable[..., np.ndarray],
    box: Sequence[Tuple[float, float]],
    tol: Optional[float] = None,
) -> complex:
    return quad_nd_estimate(integrand, box, tol).value


@dataclass
class LemmaCheck:
    name: str
    value: complex
    target: complex
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


@dataclass
class LemmaReport:
    title: str
    checks: List[LemmaCheck] = field(default_factory=list)

    def add(
        self,
        name: str,
        value: complex,
        target: complex,
        tolerance: float,
        scale: Optional[float] = None,
        extra_error: float = 0.0,
    ) -> LemmaCheck:
        """
        Records a check. The error is relative for nonzero targets and taken
        over `scale` for zero targets; `extra_error` folds in the error of a
        companion identity reported under the same name.
        """
        if scale is None:
            scale = abs(target) if target != 0 else 1.0
        error = max(abs(value - target) / scale, extra_error)
        check = LemmaCheck(name, complex(value), complex(target), error, tolerance)
        self.checks.append(check)
        return check

    @property
    def failures(self) -> List[LemmaCheck]:
        return [check for check in self.checks if not check.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def raise_for_failures(self) -> None:
        if self.failures:
            names = ", ".join(f"{c.name} (error {c.error:.2e})" for c in self.failures)
            raise AssertionError(f"{self.title}: {len(self.failures)} check(s) failed: {names}")

    def __len__(self) -> int:
        return len(self.checks)


def verify_lemma1(params: ModelParams, tol: float = 1e-6, seed: int = 0) -> LemmaReport:
    """
    Checks the one-axis identities of the chi kernel against quadrature:
    its Fourier image and the inverse, the shifted-kernel transforms, the
    product factorization, the derivative formulas, the second moments of
    chi^2 and chi_tilde^2 and the chi/chi_tilde cross moments.
    """
    hbar, a, b = params.hbar, params.a, params.b
    norm = 1.0 / math.sqrt(2.0 * math.pi * hbar)
    sigma_x = math.sqrt(a * hbar / (2.0 * b))
    sigma_p = math.sqrt(b * hbar / (2.0 * a))
    box_x = (-14.0 * sigma_x, 14.0 * sigma_x)
    box_p = (-14.0 * sigma_p, 14.0 * sigma_p)
    rng = np.random.default_rng(seed)
    report = LemmaReport("chi kernel identities")

    def worst(values: Sequence[complex], targets: Sequence[complex]) -> Tuple[complex, complex, float]:
        errors = [abs(v - t) / max(abs(t), 1e-300) for v, t in zip(values, targets)]
        i = int(np.argmax(errors))
        return values[i], targets[i], errors[i]

    def record(name: str, values: Sequence[complex], targets: Sequence[complex]) -> None:
        value, target, _ = worst(values, targets)
        report.add(name, value, target, tol)

    ks = rng.uniform(-2.0, 2.0, size=4) * sigma_p
    values = [norm * quad_nd(lambda y, k=k: chi(y, params) * np.exp(1j * y * k / hbar), [box_x]) for k in ks]
    record("fourier image of chi", values, list(chi_tilde(ks, params)))

    ys = rng.uniform(-2.0, 2.0, size=4) * sigma_x
    values = [norm * quad_nd(lambda k, y=y: chi_tilde(k, params) * np.exp(1j * y * k / hbar), [box_p]) for y in ys]
    record("inverse transform of chi_tilde", values, list(chi(ys, params)))

    xs = rng.uniform(-1.0, 1.0, size=4) * sigma_x
    qs = rng.uniform(-1.0, 1.0, size=4) * sigma_p
    values, targets = [], []
    for x, q in zip(xs, qs):
        shifted = (x + box_x[0], x + box_x[1])
        values.append(norm * quad_nd(lambda y: chi(x - y, params) * np.exp(1j * y * q / hbar), [shifted]))
        targets.append(complex(chi_tilde(q, params) * np.exp(1j * x * q / hbar)))
    record("shifted chi transform", values, targets)

    values, targets = [], []
    for d, pk in zip(xs, qs):
        shifted = (pk + box_p[0], pk + box_p[1])
        values.append(norm * quad_nd(lambda k: chi_tilde(pk - k, params) * np.exp(1j * k * d / hbar), [shifted]))
        targets.append(complex(chi(d, params) * np.exp(1j * pk * d / hbar)))
    record("shifted chi_tilde transform", values, targets)

    alpha, beta = rng.uniform(-2.0, 2.0, size=2) * sigma_x
    root2 = math.sqrt(2.0)
    lhs = float(chi(alpha, params) * chi(beta, params))
    rhs = float(chi((alpha + beta) / root2, params) * chi((alpha - beta) / root2, params))
    alpha_p, beta_p = rng.uniform(-2.0, 2.0, size=2) * sigma_p
    lhs_p = float(chi_tilde(alpha_p, params) * chi_tilde(beta_p, params))
    rhs_p = float(chi_tilde((alpha_p + beta_p) / root2, params) * chi_tilde((alpha_p - beta_p) / root2, params))
    value, target, _ = worst([lhs, lhs_p], [rhs, rhs_p])
    report.add("product factorization", value, target, min(tol, 1e-12))

    points = rng.uniform(-2.0, 2.0, size=(1, 8)) * sigma_x
    err_x = check_derivative(
        "chi", lambda y: chi(y[0], params), lambda y: -b / (a * hbar) * y[0] * chi(y[0], params),
        points, h=1e-4 * sigma_x, tol=math.inf,
    )
    points = rng.uniform(-2.0, 2.0, size=(1, 8)) * sigma_p
    err_p = check_derivative(
        "chi_tilde", lambda k: chi_tilde(k[0], params), lambda k: -a / (b * hbar) * k[0] * chi_tilde(k[0], params),
        points, h=1e-4 * sigma_p, tol=math.inf,
    )
    report.add("derivative formulas", max(err_x, err_p), 0.0, tol)

    for label, density, box, variance in (
        ("chi^2", chi, box_x, a * hbar / (2.0 * b)),
        ("chi_tilde^2", chi_tilde, box_p, b * hbar / (2.0 * a)),
    ):
        zeroth = quad_nd(lambda y: density(y, params) ** 2, [box])
        first = quad_nd(lambda y: y * density(y, params) ** 2, [box])
        second = quad_nd(lambda y: y ** 2 * density(y, params) ** 2, [box])
        # off-diagonal second moments are products of two first moments
        companion = max(abs(zeroth - 1.0), abs(first) / math.sqrt(variance), abs(first) ** 2 / variance)
        report.add(f"moments of {label}", second, variance, tol, extra_error=companion)

    def cross(power_eta: int, power_xi: int) -> complex:
        def integrand(eta: np.ndarray, xi: np.ndarray) -> np.ndarray:
            kernel = chi(eta, params) * chi_tilde(xi, params) * np.exp(1j * eta * xi / hbar)
            return eta ** power_eta * xi ** power_xi * kernel

        return norm * quad_nd(integrand, [box_x, box_p])

    off_diagonal = abs(cross(1, 0) * cross(0, 1)) / hbar
    report.add("cross moments", cross(1, 1), 0.5j * hbar, tol, extra_error=off_diagonal)
    return report


# item -> ({(power of eta, xi, eta', xi'): coefficient}, target key)
_LEMMA2_ITEMS: Dict[int, Tuple[Dict[Tuple[int, int, int, int], float], str]] = {
    1: ({(0, 0, 0, 0): 1.0}, "one"),
    2: ({(1, 0, 0, 0): 1.0}, "zero"),
    3: ({(1, 0, 0, 0): 1.0, (0, 0, 1, 0): 1.0}, "zero"),
    4: ({(0, 1, 0, 0): 1.0}, "zero"),
    5: ({(0, 1, 0, 0): 1.0, (0, 0, 0, 1): 1.0}, "zero"),
    6: ({(2, 0, 0, 0): 1.0, (1, 0, 1, 0): 1.0}, "zero"),
    7: ({(0, 2, 0, 0): 1.0, (0, 1, 0, 1): 1.0}, "zero"),
    8: ({(2, 0, 0, 0): 1.0}, "x_var"),
    9: ({(2, 0, 0, 0): 1.0, (1, 0, 1, 0): 2.0, (0, 0, 2, 0): 1.0}, "x_var"),
    10: ({(0, 2, 0, 0): 1.0}, "p_var"),
    11: ({(0, 2, 0, 0): 1.0, (0, 1, 0, 1): 2.0, (0, 0, 0, 2): 1.0}, "p_var"),
    12: ({(1, 1, 0, 0): 1.0}, "zero"),
    13: ({(0, 0, 1, 1): 1.0}, "zero"),
    14: ({(1, 1, 0, 0): 1.0, (1, 0, 0, 1): 1.0}, "half_i_hbar"),
    15: ({(1, 1, 0, 0): 1.0, (0, 1, 1, 0): 1.0}, "half_i_hbar"),
    16: ({(1, 1, 0, 0): 1.0, (1, 0, 0, 1): 1.0, (0, 1, 1, 0): 1.0, (0, 0, 1, 1): 1.0}, "i_hbar"),
}

# items whose off-diagonal (i != j) version is a product of two first moments
_LEMMA2_OFF_DIAGONAL = {
    6: ((1, 0, 0, 0), {(1, 0, 0, 0): 1.0, (0, 0, 1, 0): 1.0}),
    7: ({(0, 1, 0, 0): 1.0, (0, 0, 0, 1): 1.0}, (0, 1, 0, 0)),
    8: ((1, 0, 0, 0), (1, 0, 0, 0)),
    9: ({(1, 0, 0, 0): 1.0, (0, 0, 1, 0): 1.0}, {(1, 0, 0, 0): 1.0, (0, 0, 1, 0): 1.0}),
    10: ((0, 1, 0, 0), (0, 1, 0, 0)),
    11: ({(0, 1, 0, 0): 1.0, (0, 0, 0, 1): 1.0}, {(0, 1, 0, 0): 1.0, (0, 0, 0, 1): 1.0}),
    12: ((1, 0, 0, 0), (0, 1, 0, 0)),
    13: ((0, 0, 1, 0), (0, 0, 0, 1)),
    14: ((1, 0, 0, 0), {(0, 1, 0, 0): 1.0, (0, 0, 0, 1): 1.0}),
    15: ((0, 1, 0, 0), {(1, 0, 0, 0): 1.0, (0, 0, 1, 0): 1.0}),
    16: ({(0, 1, 0, 0): 1.0, (0, 0, 0, 1): 1.0}, {(1, 0, 0, 0): 1.0, (0, 0, 1, 0): 1.0}),
}


class _FourKernel:
    """
    Gauss-Hermite evaluation of one-axis integrals against
    D = (2 pi hbar)^{-1} 2^{-1/2} chi(eta) chi(eta'/sqrt2) chi_tilde(xi'/sqrt2) chi_tilde(xi)
        exp(i (eta xi + eta xi' + eta' xi + eta' xi' / 2) / hbar).
    Each variable gets nodes scaled to its own Gaussian factor, so only the
    oscillating exponentials and the monomials are left to the rule.
    """

    def __init__(self, params: ModelParams, order: int) -> None:
        hbar, a, b = params.hbar, params.a, params.b
        t, w = roots_hermite(order)
        chi_norm = (b / (a * math.pi * hbar)) ** 0.25
        tilde_norm = (a / (b * math.pi * hbar)) ** 0.25
        # chi(eta) = chi_norm exp(-eta^2 / s^2) with s^2 = 2 a hbar / b, and so on
        widths = (
            math.sqrt(2.0 * a * hbar / b),
            math.sqrt(2.0 * b * hbar / a),
            math.sqrt(4.0 * a * hbar / b),
            math.sqrt(4.0 * b * hbar / a),
        )
        norms = (chi_norm, tilde_norm, chi_norm, tilde_norm)
        self.sigmas = (
            math.sqrt(a * hbar / (2.0 * b)),
            math.sqrt(b * hbar / (2.0 * a)),
            math.sqrt(a * hbar / b),
            math.sqrt(b * hbar / a),
        )
        self.nodes = [s * t for s in widths]
        self.weights = [c * s * w for c, s in zip(norms, widths)]
        eta, xi, eta_p, xi_p = self.nodes
        self.phases = (
            np.exp(1j * np.outer(eta, xi) / hbar),
            np.exp(1j * np.outer(eta, xi_p) / hbar),
            np.exp(1j * np.outer(eta_p, xi) / hbar),
            np.exp(0.5j * np.outer(eta_p, xi_p) / hbar),
        )
        self.prefactor = 1.0 / (2.0 * math.pi * hbar * math.sqrt(2.0))

    def monomial(self, powers: Tuple[int, int, int, int]) -> complex:
        vectors = [w * x ** k for w, x, k in zip(self.weights, self.nodes, powers)]
        ab, ad, cb, cd = self.phases
        return self.prefactor * complex(
            np.einsum("a,b,c,d,ab,ad,cb,cd->", *vectors, ab, ad, cb, cd, optimize=True)
        )

    def polynomial(self, terms) -> complex:
        if isinstance(terms, tuple):
            terms = {terms: 1.0}
        return sum(coeff * self.monomial(powers) for powers, coeff in terms.items())

    def scale(self, terms) -> float:
        if isinstance(terms, tuple):
            terms = {terms: 1.0}
        return max(
            abs(coeff) * math.prod(s ** k for s, k in zip(self.sigmas, powers))
            for powers, coeff in terms.items()
        )


def verify_lemma2(params: ModelParams, tol: float = 1e-6, order: int = 64) -> LemmaReport:
    """
    Evaluates the sixteen moment integrals of the four-variable kernel D on
    one axis, each at `order` and at twice that order. Diagonal items are
    compared with their closed forms; off-diagonal items are products of two
    one-axis first moments and must vanish.
    """
    hbar = params.hbar
    targets = {
        "one": 1.0,
        "zero": 0.0,
        "x_var": params.a * hbar / (2.0 * params.b),
        "p_var": params.b * hbar / (2.0 * params.a),
        "half_i_hbar": 0.5j * hbar,
        "i_hbar": 1j * hbar,
    }
    coarse = _FourKernel(params, order)
    fine = _FourKernel(params, 2 * order)
    report = LemmaReport("four-variable kernel moments")
    for item, (terms, key) in _LEMMA2_ITEMS.items():
        value = fine.polynomial(terms)
        target = targets[key]
        scale = abs(target) if target != 0 else fine.scale(terms)
        companion = abs(value - coarse.polynomial(terms)) / scale
        if item in _LEMMA2_OFF_DIAGONAL:
            left, right = _LEMMA2_OFF_DIAGONAL[item]
            product = fine.polynomial(left) * fine.polynomial(right)
            companion = max(companion, abs(product) / (fine.scale(left) * fine.scale(right)))
        logger.debug("item %d: %s against %s", item, value, target)
        report.add(f"item {item}", value, target, tol, scale=scale, extra_error=companion)
    return report


@dataclass
class DenseOperator:
    """A grid operator as an explicit matrix over the flattened grid."""

    matrix: np.ndarray
    kind: str
    shape: Tuple[int, ...] = ()

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def _scale(self) -> float:
        return float(np.max(np.abs(self.matrix))) or 1.0

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) / self._scale()

    def anti_hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix + self.matrix.conj().T))) / self._scale()

    def idempotence_residual(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix))) / self._scale()

    def eigenvalues(self) -> np.ndarray:
        """Sorted real eigenvalues for Hermitian kinds, complex ones otherwise."""
        if self.kind in ("diffusion", "projector", "hatH_local"):
            return linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        return linalg.eigvals(self.matrix)

    def apply(self, values: np.ndarray) -> np.ndarray:
        shape = self.shape or values.shape
        return (self.matrix @ np.ravel(values)).reshape(shape)


def dense_from_function(apply: Callable[[np.ndarray], np.ndarray], shape: Tuple[int, ...], kind: str = "custom") -> DenseOperator:
    dimension = int(np.prod(shape))
    if dimension > DENSE_LIMIT:
        raise DimensionOverflowError(dimension, DENSE_LIMIT)
    with runtime.scoped(boundary_policy="ignore"):
        matrix = assemble_columns(apply, shape)
    return DenseOperator(matrix, kind, tuple(shape))


def dense_generator(kind: str, hamiltonian, params: ModelParams, grid: PhaseGrid) -> DenseOperator:
    """
    Assembles the dense matrix of a production operator column by column.
    `kind` is one of diffusion, transport, projector, full, hatH_local or
    hatH_integral; the last two act on the configuration grid.
    """
    if kind not in DENSE_KINDS:
        raise ValueError(f"kind must be one of: {', '.join(DENSE_KINDS)}")
    grid.require_compatible(params)
    if kind in ("transport", "full", "hatH_local", "hatH_integral") and hamiltonian is None:
        raise ValueError(f"dense '{kind}' needs a Hamiltonian")

    if kind.startswith("hatH"):
        form = apply_hatH_local if kind == "hatH_local" else apply_hatH_integral

        def config_apply(values: np.ndarray) -> np.ndarray:
            return form(ConfigWaveFunction(grid, values), hamiltonian, params).values

        return dense_from_function(config_apply, grid.config_shape, kind)

    transport = TransportOperator(grid, hamiltonian, params) if hamiltonian is not None else None

    def phase_apply(values: np.ndarray) -> np.ndarray:
        if kind == "projector":
            return project_P0_values(values, grid, params)
        if kind == "transport":
            return transport.apply_values(values)
        out = apply_diffusion(PhaseWaveFunction(grid, values), params).values
        if kind == "full":
            out = out + transport.apply_values(values)
        return out

    return dense_from_function(phase_apply, grid.shape, kind)


def expm_propagate(operator: DenseOperator, t: float, field: PhaseWaveFunction) -> PhaseWaveFunction:
    """exp(t M) applied to a field, by scipy's scaling-and-squaring Pade expm."""
    propagator = linalg.expm(t * operator.matrix)
    return field.with_values((propagator @ np.ravel(field.values)).reshape(field.values.shape))


def dense_schrodinger_propagate(
    operator: DenseOperator, t: float, psi: ConfigWaveFunction, hbar: float
) -> ConfigWaveFunction:
    """exp(-i t M / hbar) psi through the eigendecomposition of the Hermitian part of M."""
    matrix = operator.matrix
    eigenvalues, vectors = linalg.eigh(0.5 * (matrix + matrix.conj().T))
    coeffs = vectors.conj().T @ np.ravel(psi.values)
    evolved = vectors @ (np.exp(-1j * t * eigenvalues / hbar) * coeffs)
    return psi.with_values(evolved.reshape(psi.values.shape))
