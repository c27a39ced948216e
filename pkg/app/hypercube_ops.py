"""Analytic operators on the quantum hypercube.

Everything diagonal in the Pauli basis (derivatives, conditional expectations,
restrictions, the Ornstein-Uhlenbeck semigroup and its relatives, spectral
weights) acts on coefficients directly. Only norms, spectra and functional
calculus go through dense matrices.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, Iterator, List, Optional

import numpy as np
from numpy.typing import NDArray

from app import dense_ops
from app.dense_ops import DenseOperator
from app.errors import ContractError, DimensionError
from app.pauli_core import Observable, PauliIndex, add, identity, l2_norm_squared, scale, support_size, trace

logger = logging.getLogger(__name__)

PREDICATE_TOL = 1e-9
BALANCED_TOL = 1e-9


@dataclass(frozen=True)
class SubsetJ:
    """A subset J of the sites {1, ..., n}"""

    n: int
    members: FrozenSet[int]

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError(f"site count must be positive, got {self.n}")
        outside = [j for j in self.members if not 1 <= j <= self.n]
        if outside:
            raise ContractError(f"subset members {sorted(outside)} outside 1..{self.n}")

    @classmethod
    def of(cls, n: int, members: Iterable[int]) -> "SubsetJ":
        return cls(n=n, members=frozenset(int(j) for j in members))

    @classmethod
    def full(cls, n: int) -> "SubsetJ":
        return cls(n=n, members=frozenset(range(1, n + 1)))

    def complement(self) -> "SubsetJ":
        return SubsetJ(n=self.n, members=frozenset(range(1, self.n + 1)) - self.members)

    def __contains__(self, j: object) -> bool:
        return j in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def label(self) -> str:
        return "{" + ",".join(str(j) for j in self) + "}"


@dataclass(frozen=True)
class IndexResult:
    """ind(T) together with how it was obtained"""

    value: float
    degenerate: bool = False
    undefined: bool = False


def _check_site(operand: Observable, j: int) -> None:
    if not 1 <= j <= operand.n:
        raise ContractError(f"site {j} outside 1..{operand.n}")


def _check_subset(operand: Observable, subset: SubsetJ) -> None:
    if subset.n != operand.n:
        raise DimensionError(f"subset lives on {subset.n} sites, observable on {operand.n}")


def _filter(operand: Observable, keep: Callable[[PauliIndex], bool]) -> Observable:
    return Observable(operand.n, {s: value for s, value in operand.items() if keep(s)}, validate=False)


def _multiplier(operand: Observable, factor: Callable[[int], float]) -> Observable:
    """Multiply T̂(s) by factor(|supp(s)|)"""
    return Observable(
        operand.n, {s: factor(support_size(s)) * value for s, value in operand.items()}, validate=False
    )


def is_power_of_two(d: int) -> bool:
    return d >= 1 and d & (d - 1) == 0


def partial_derivative(operand: Observable, j: int) -> Observable:
    """d_j T = Σ_{s_j ≠ 0} T̂(s) σ_s"""
    _check_site(operand, j)
    return _filter(operand, lambda s: s[j - 1] != 0)


def bit_flip_reflection(operand: Observable, j: int) -> Observable:
    """S_j fixes σ_0 at site j and negates σ_1, σ_2, σ_3 there"""
    _check_site(operand, j)
    return Observable(
        operand.n, {s: (-value if s[j - 1] else value) for s, value in operand.items()}, validate=False
    )


def conditional_expectation(operand: Observable, subset: SubsetJ) -> Observable:
    """E_J T keeps the terms with supp(s) ⊆ J"""
    _check_subset(operand, subset)
    outside = [k - 1 for k in subset.complement()]
    return _filter(operand, lambda s: all(s[k] == 0 for k in outside))


def restriction(operand: Observable, j: int, subset: SubsetJ) -> Observable:
    """R_j^J T = E_{J^c ∪ {j}}(d_j T); zero unless j ∈ J"""
    _check_site(operand, j)
    _check_subset(operand, subset)
    if j not in subset:
        return Observable(operand.n)
    blocked = [k - 1 for k in subset if k != j]
    return _filter(operand, lambda s: s[j - 1] != 0 and all(s[k] == 0 for k in blocked))


def semigroup(operand: Observable, t: float) -> Observable:
    """e^{-tL} multiplies T̂(s) by e^{-t|supp(s)|}"""
    if t < 0:
        raise ContractError(f"semigroup time must be nonnegative, got {t}")
    return _multiplier(operand, lambda k: math.exp(-t * k))


def generator(operand: Observable) -> Observable:
    return _multiplier(operand, float)


def delta_power(operand: Observable, delta: float) -> Observable:
    """δ^L multiplies T̂(s) by δ^{|supp(s)|}, with 0^0 = 1"""
    if not 0.0 <= delta <= 1.0:
        raise ContractError(f"delta must lie in [0, 1], got {delta}")
    return _multiplier(operand, lambda k: delta**k)


def hd_multiplier(d: int, k: int) -> float:
    return (1.0 - 1.0 / (2 * d)) ** k - (1.0 - 1.0 / d) ** k


def spectral_slice_hd(operand: Observable, d: int) -> Observable:
    """H_d = (1 − 1/(2d))^L − (1 − 1/d)^L for d a power of two"""
    if not is_power_of_two(d):
        raise ContractError(f"H_d needs d to be a positive power of two, got {d}")
    return _multiplier(operand, lambda k: hd_multiplier(d, k))


def rademacher_projection(operand: Observable, d: int) -> Observable:
    if d < 0:
        raise ContractError(f"truncation degree must be nonnegative, got {d}")
    return _filter(operand, lambda s: support_size(s) <= d)


def _band_weight(operand: Observable, lo: int, hi: float) -> float:
    return float(sum(abs(value) ** 2 for s, value in operand.items() if lo <= support_size(s) < hi))


def weight_eq(operand: Observable, d: int) -> float:
    """W_{=d}: squared mass at support size exactly d"""
    if d < 0:
        raise ContractError(f"weight degree must be nonnegative, got {d}")
    return _band_weight(operand, d, d + 1)


def weight_geq(operand: Observable, d: int) -> float:
    if d < 0:
        raise ContractError(f"weight degree must be nonnegative, got {d}")
    return _band_weight(operand, d, math.inf)


def weight_approx(operand: Observable, d: int) -> float:
    """W_{≈d}: squared mass in the dyadic band d ≤ |supp(s)| < 2d"""
    if d < 1:
        raise ContractError(f"band start must be at least 1, got {d}")
    return _band_weight(operand, d, 2 * d)


def weight_profile(operand: Observable) -> List[float]:
    """[W_{=0}, ..., W_{=n}]"""
    profile = [0.0] * (operand.n + 1)
    for s, value in operand.items():
        profile[support_size(s)] += abs(value) ** 2
    return profile


def dyadic_scales(n: int) -> List[int]:
    """Every power of two d with a nonempty band [d, 2d) inside 1..n"""
    return [2**k for k in range(max(1, n).bit_length())]


def variance(operand: Observable) -> float:
    """Σ_{s≠0} |T̂(s)|², equal to tr|T|² − |tr T|²"""
    return l2_norm_squared(operand) - abs(trace(operand)) ** 2


def lp_norm(operand: Observable, p: float) -> float:
    if p < 1:
        raise ContractError(f"L_p exponent must be >= 1, got {p}")
    if operand.is_zero():
        return 0.0
    if p == 2:
        return math.sqrt(l2_norm_squared(operand))
    return dense_ops.schatten_norm(dense_ops.synthesize(operand), p)


def operator_norm(operand: Observable) -> float:
    return lp_norm(operand, math.inf)


def influence(operand: Observable, j: int, p: float = 2.0) -> float:
    """Inf_j^p(T) = ‖d_j T‖_p^p"""
    if p < 1 or math.isinf(p):
        raise ContractError(f"influence exponent must lie in [1, ∞), got {p}")
    derivative = partial_derivative(operand, j)
    if p == 2:
        return l2_norm_squared(derivative)
    return lp_norm(derivative, p) ** p


def influences(operand: Observable, p: float = 2.0) -> NDArray[np.float64]:
    return np.array([influence(operand, j, p) for j in range(1, operand.n + 1)])


def total_influence(operand: Observable, p: float = 2.0) -> float:
    return float(np.sum(influences(operand, p)))


def derivative_norms(operand: Observable, p: float) -> NDArray[np.float64]:
    """‖d_j T‖_p for j = 1..n"""
    return np.array([lp_norm(partial_derivative(operand, j), p) for j in range(1, operand.n + 1)])


def geometric_mass(operand: Observable, subset: Optional[SubsetJ] = None) -> float:
    """M_J(T) = Σ_{j∈J} ‖d_j T‖_1²; M(T) when J is omitted"""
    sites: Iterable[int] = range(1, operand.n + 1) if subset is None else subset
    if subset is not None:
        _check_subset(operand, subset)
    return float(sum(lp_norm(partial_derivative(operand, j), 1) ** 2 for j in sites))


def gradient_magnitude(operand: Observable) -> DenseOperator:
    """|∇T| = (Σ_j |d_j T|²)^{1/2}"""
    dim = 2**operand.n
    gram = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(1, operand.n + 1):
        derivative = partial_derivative(operand, j)
        if derivative.is_zero():
            continue
        dense = dense_ops.synthesize(derivative).matrix
        gram += dense.conj().T @ dense
    return dense_ops.matrix_sqrt(DenseOperator.from_matrix(gram, hermitian=True))


def gradient_lp(operand: Observable, p: float) -> float:
    return dense_ops.schatten_norm(gradient_magnitude(operand), p)


def index_of(operand: Observable) -> IndexResult:
    """inf{α ≥ 0 : ‖d_j T‖_1^α ≤ ‖d_j T‖_2² for every j}"""
    value = 0.0
    constrained = False
    undefined = False
    for j in range(1, operand.n + 1):
        derivative = partial_derivative(operand, j)
        if derivative.is_zero():
            continue
        l1 = lp_norm(derivative, 1)
        l2_squared = l2_norm_squared(derivative)
        if l1 >= 1.0 - 1e-12:
            logger.debug(f"Index undefined: ‖d_{j}T‖_1 = {l1:.6g} >= 1")
            undefined = True
            continue
        constrained = True
        # ln(l1) < 0, so the constraint reads α ≥ ln(l2²)/ln(l1)
        value = max(value, math.log(l2_squared) / math.log(l1))
    if undefined:
        return IndexResult(value=math.nan, degenerate=not constrained, undefined=True)
    return IndexResult(value=value, degenerate=not constrained)


def dense_square_defect(operand: Observable, target: Optional[DenseOperator]) -> float:
    """‖T² − target‖_∞ with target = T when omitted"""
    matrix = dense_ops.synthesize(operand).matrix
    reference = matrix if target is None else target.matrix
    defect = DenseOperator.from_matrix(matrix @ matrix - reference)
    return dense_ops.schatten_norm(defect, math.inf)


def is_projection(operand: Observable, tol: float = PREDICATE_TOL) -> bool:
    return operand.is_hermitian() and dense_square_defect(operand, None) <= tol


def is_quantum_boolean(operand: Observable, tol: float = PREDICATE_TOL) -> bool:
    """Hermitian and unitary, i.e. T² = 𝟙"""
    return operand.is_hermitian() and dense_square_defect(operand, dense_ops.identity(operand.n)) <= tol


def is_balanced_projection(operand: Observable, tol: float = PREDICATE_TOL) -> bool:
    return is_projection(operand, tol) and abs(variance(operand) - 0.25) <= BALANCED_TOL


def boolean_to_projection(operand: Observable) -> Observable:
    """T ↦ (𝟙 + T)/2"""
    return scale(add(identity(operand.n), operand), 0.5)


def spectrum(operand: Observable) -> NDArray[np.float64]:
    return dense_ops.synthesize(operand).eigenvalues()


def is_contraction(operand: Observable, tol: float = PREDICATE_TOL) -> bool:
    return operator_norm(operand) <= 1.0 + tol


def is_positive(operand: Observable, tol: float = PREDICATE_TOL) -> bool:
    return operand.is_hermitian() and spectrum(operand)[0] >= -tol


def is_unit_interval(operand: Observable, tol: float = PREDICATE_TOL) -> bool:
    """0 ≤ T ≤ 𝟙"""
    if not operand.is_hermitian():
        return False
    eigenvalues = spectrum(operand)
    return eigenvalues[0] >= -tol and eigenvalues[-1] <= 1.0 + tol
