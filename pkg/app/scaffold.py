"""(n+1)-site constructions T_j, T_copy,j, T̃_j and A_j.

An index s on n sites is viewed on n+1 sites as (s, 0). s^{j↷} moves the
digit at site j to the new site n+1 and leaves 0 behind; on operators this
is the *-isomorphism Ψ_j(T ⊗ 𝟙).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from app import dense_ops
from app.errors import ContractError
from app.hypercube_ops import SubsetJ, conditional_expectation, lp_norm, partial_derivative
from app.pauli_core import (
    Observable,
    PauliIndex,
    index_insert,
    index_remove,
    l2_norm_squared,
    max_abs_difference,
    multiply,
    scale,
    support,
    trace,
)

logger = logging.getLogger(__name__)


class LiftKind(str, Enum):
    LIFT = "lift"
    MOVE_TO_LAST = "move_to_last"
    T_J = "T_j"
    T_COPY = "T_copy"
    T_TILDE = "T_tilde"
    A_J = "A_j"


@dataclass(frozen=True)
class LiftedObservable:
    """An Observable on n+1 sites built from data on n sites"""

    observable: Observable
    source_n: int
    kind: LiftKind

    def __post_init__(self):
        if self.observable.n != self.source_n + 1:
            raise ContractError(f"lifted observable has {self.observable.n} sites, expected {self.source_n + 1}")


def _check_site(n: int, j: int) -> None:
    if not 1 <= j <= n:
        raise ContractError(f"site {j} outside 1..{n}")


def moved(s: PauliIndex, j: int) -> PauliIndex:
    """s^{j↷} = (s_1, ..., s_{j-1}, 0, s_{j+1}, ..., s_n, s_j)"""
    return s[: j - 1] + (0,) + s[j:] + (s[j - 1],)


def lift(operand: Observable) -> LiftedObservable:
    """T ⊗ 𝟙"""
    terms = {s + (0,): value for s, value in operand.items()}
    return LiftedObservable(Observable(operand.n + 1, terms, validate=False), operand.n, LiftKind.LIFT)


def move_to_last(operand: Observable, j: int) -> LiftedObservable:
    """Ψ_j(T ⊗ 𝟙): every index s goes to s^{j↷}"""
    _check_site(operand.n, j)
    terms = {moved(s, j): value for s, value in operand.items()}
    return LiftedObservable(Observable(operand.n + 1, terms, validate=False), operand.n, LiftKind.MOVE_TO_LAST)


def build_tj(operand: Observable, subset: SubsetJ, j: int, d: int) -> LiftedObservable:
    """T_j = Σ_{supp(s)⊆J^c, |supp(s)|=d−1} Σ_α T̂(s ⊕ e_j^α) σ_{s ⊕ e_{n+1}^α}"""
    _check_site(operand.n, j)
    if j not in subset:
        raise ContractError(f"T_j needs j ∈ J, got j={j}, J={subset.label()}")
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    allowed = subset.complement().members
    terms = {}
    for s, value in operand.items():
        alpha = s[j - 1]
        if alpha == 0:
            continue
        rest = index_remove(s, j, alpha)
        rest_support = support(rest)
        if len(rest_support) == d - 1 and rest_support <= allowed:
            terms[index_insert(rest + (0,), operand.n + 1, alpha)] = value
    return LiftedObservable(Observable(operand.n + 1, terms, validate=False), operand.n, LiftKind.T_J)


def build_tcopy(operand: Observable, j: int) -> LiftedObservable:
    """s_j = 0 terms lifted, s_j ≠ 0 terms moved to the last site"""
    _check_site(operand.n, j)
    terms = {(s + (0,) if s[j - 1] == 0 else moved(s, j)): value for s, value in operand.items()}
    return LiftedObservable(Observable(operand.n + 1, terms, validate=False), operand.n, LiftKind.T_COPY)


def build_ttilde(operand: Observable, j: int) -> LiftedObservable:
    """s_j = 0 terms lifted; s_j ≠ 0 terms keep s_j at j and copy it to site n+1"""
    _check_site(operand.n, j)
    terms = {s + (s[j - 1],): value for s, value in operand.items()}
    return LiftedObservable(Observable(operand.n + 1, terms, validate=False), operand.n, LiftKind.T_TILDE)


def build_aj(n: int, j: int) -> LiftedObservable:
    """A_j = σ_{e_j^1} + σ_{e_j^2} + σ_{e_j^3} on n+1 sites"""
    _check_site(n, j)
    zero_index = (0,) * (n + 1)
    terms = {index_insert(zero_index, j, alpha): 1.0 for alpha in (1, 2, 3)}
    return LiftedObservable(Observable(n + 1, terms, validate=False), n, LiftKind.A_J)


def outer_subset(subset: SubsetJ) -> SubsetJ:
    """J^c ∪ {n+1} on n+1 sites"""
    return SubsetJ.of(subset.n + 1, subset.complement().members | {subset.n + 1})


def projected_product(operand: Observable, subset: SubsetJ, j: int) -> Observable:
    """E_{J^c∪{n+1}}(A_j T̃_j)"""
    product = multiply(build_aj(operand.n, j).observable, build_ttilde(operand, j).observable)
    return conditional_expectation(product, outer_subset(subset))


def cjc_deviation(operand: Observable, subset: SubsetJ, j: int) -> float:
    """Coefficient gap between E(A_j T̃_j) and E(d_{n+1} T_copy,j), both over J^c ∪ {n+1}"""
    if j not in subset:
        raise ContractError(f"j={j} is not in J={subset.label()}")
    copy_derivative = partial_derivative(build_tcopy(operand, j).observable, operand.n + 1)
    expected = conditional_expectation(copy_derivative, outer_subset(subset))
    return max_abs_difference(projected_product(operand, subset, j), expected)


def key_identity8_gap(operand: Observable, j: int) -> Tuple[float, float]:
    """(‖d_{n+1} T_copy,j‖_1, ‖d_j T‖_1)"""
    copy_derivative = partial_derivative(build_tcopy(operand, j).observable, operand.n + 1)
    return lp_norm(copy_derivative, 1), lp_norm(partial_derivative(operand, j), 1)


def tj_trace_identity(operand: Observable, subset: SubsetJ, j: int, d: int) -> Optional[Tuple[float, float]]:
    """(‖T_j‖_2², (tr[T̄_j·A_j T̃_j])²), or None when T_j = 0"""
    tj = build_tj(operand, subset, j, d).observable
    mass = l2_norm_squared(tj)
    if tj.is_zero():
        return None
    normalized = scale(tj, 1.0 / np.sqrt(mass))
    product = multiply(build_aj(operand.n, j).observable, build_ttilde(operand, j).observable)
    pairing = trace(multiply(normalized, product))
    if abs(pairing.imag) > 1e-9:
        logger.debug(f"tr[T̄_j A_j T̃_j] has imaginary part {pairing.imag:.3e}")
    return mass, float(pairing.real**2 - pairing.imag**2)


def y1j_bound(operand: Observable, subset: SubsetJ, j: int, d: int, t0: float) -> Optional[Tuple[float, float]]:
    """(∫_0^{t0} tr[1_{(t,∞)}(|T̄_j|)·|E(A_j T̃_j)|] dt, t0·‖d_j T‖_1), or None when T_j = 0"""
    if t0 <= 0:
        raise ContractError(f"t0 must be positive, got {t0}")
    tj = build_tj(operand, subset, j, d).observable
    if tj.is_zero():
        return None
    normalized = scale(tj, 1.0 / np.sqrt(l2_norm_squared(tj)))
    level = dense_ops.absolute_value(dense_ops.synthesize(normalized))
    weight = dense_ops.absolute_value(dense_ops.synthesize(projected_product(operand, subset, j)))
    integral = dense_ops.layercake_trace(weight, level, upper=t0).real
    return float(integral), t0 * lp_norm(partial_derivative(operand, j), 1)
