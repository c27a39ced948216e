"""Checker bodies for the inequality registry.

Every checker takes an Instance (an Observable plus lazily cached dense data)
and a fully merged parameter map, and returns an Evaluation: the two sides of
one inequality written as lhs ≤ rhs. Status is left to the suite unless the
checker has a reason to override it (degenerate denominators, gates, vacuous
sums).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import scipy.integrate
import scipy.special
from numpy.typing import NDArray

from app import dense_ops, restriction_mc, scaffold
from app.dense_ops import DenseOperator
from app.errors import ContractError
from app.hypercube_ops import (
    SubsetJ,
    delta_power,
    dyadic_scales,
    generator,
    hd_multiplier,
    index_of,
    lp_norm,
    partial_derivative,
    restriction,
    semigroup,
    spectral_slice_hd,
    total_influence,
    variance,
    weight_approx,
    weight_eq,
    weight_geq,
)
from app.models import CheckStatus, ConstantRole, Hypothesis
from app.pauli_core import (
    Observable,
    add,
    adjoint,
    degree,
    l2_norm_squared,
    max_abs_difference,
    multiply,
    scale,
    subtract,
)
from app.verdict import RATIO_FLOOR, is_violated

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-9
PSD_TOL = 1e-9
SUBSET_POLICY_MAX_N = 6
SUBSET_SAMPLES = 32
DENOMINATOR_FLOOR = 1e-12
QUAD_ABS_TOL = 1e-8
QUAD_TAIL = 1e-16


class Instance:
    """An Observable together with the dense quantities several checkers share"""

    def __init__(self, observable: Observable, instance_id: str = ""):
        self.observable = observable
        self.instance_id = instance_id
        self._norms: Dict[float, float] = {}
        self._derivative_norms: Dict[float, NDArray[np.float64]] = {}

    @property
    def n(self) -> int:
        return self.observable.n

    @cached_property
    def dense(self) -> DenseOperator:
        return dense_ops.synthesize(self.observable)

    @cached_property
    def singular_values(self) -> NDArray[np.float64]:
        return dense_ops.singular_values(self.dense)

    @cached_property
    def degree(self) -> int:
        return degree(self.observable)

    @cached_property
    def variance(self) -> float:
        return variance(self.observable)

    @cached_property
    def derivatives(self) -> List[Observable]:
        return [partial_derivative(self.observable, j) for j in range(1, self.n + 1)]

    @cached_property
    def dense_derivatives(self) -> List[Optional[DenseOperator]]:
        return [None if d.is_zero() else dense_ops.synthesize(d) for d in self.derivatives]

    def norm(self, p: float) -> float:
        """‖T‖_p under the normalized trace"""
        if p not in self._norms:
            self._norms[p] = dense_ops.schatten_norm(self.dense, p)
        return self._norms[p]

    def derivative_norms(self, p: float) -> NDArray[np.float64]:
        """‖d_j T‖_p for j = 1..n"""
        if p not in self._derivative_norms:
            if p == 2:
                values = [math.sqrt(l2_norm_squared(d)) for d in self.derivatives]
            else:
                values = [0.0 if d is None else dense_ops.schatten_norm(d, p) for d in self.dense_derivatives]
            self._derivative_norms[p] = np.array(values, dtype=np.float64)
        return self._derivative_norms[p]

    def influences(self, p: float = 2.0) -> NDArray[np.float64]:
        """Inf_j^p(T) = ‖d_j T‖_p^p"""
        if p == 2:
            return np.array([l2_norm_squared(d) for d in self.derivatives], dtype=np.float64)
        return self.derivative_norms(p) ** p

    def total_influence(self, p: float = 2.0) -> float:
        return float(np.sum(self.influences(p)))

    @cached_property
    def geometric_mass(self) -> float:
        """M(T) = Σ_j ‖d_j T‖_1²"""
        return float(np.sum(self.derivative_norms(1) ** 2))

    @cached_property
    def gradient(self) -> DenseOperator:
        """|∇T| = (Σ_j |d_j T|²)^{1/2}"""
        dim = 2**self.n
        gram = np.zeros((dim, dim), dtype=np.complex128)
        for dense in self.dense_derivatives:
            if dense is not None:
                gram += dense.matrix.conj().T @ dense.matrix
        return dense_ops.matrix_sqrt(DenseOperator.from_matrix(gram, hermitian=True))

    def gradient_norm(self, p: float) -> float:
        return dense_ops.schatten_norm(self.gradient, p)


@dataclass
class Evaluation:
    """Both sides of lhs ≤ rhs, plus anything the suite cannot infer on its own"""

    lhs: float
    rhs: float
    status: Optional[CheckStatus] = None
    note: str = ""
    extra: Dict[str, float] = field(default_factory=dict)
    critical: Optional[float] = None


Checker = Callable[[Optional[Instance], Dict[str, Any]], Evaluation]


@dataclass(frozen=True)
class CheckEntry:
    check_id: str
    func: Checker
    defaults: Mapping[str, Any] = field(default_factory=dict)
    hypothesis: Hypothesis = Hypothesis.NONE
    constant: Optional[str] = None
    role: ConstantRole = ConstantRole.NONE
    unconditional: bool = False
    exact: bool = False
    anchor: str = ""
    needs_observable: bool = True


REGISTRY: Dict[str, CheckEntry] = {}


def register(check_id: str, **options: Any) -> Callable[[Checker], Checker]:
    def decorator(func: Checker) -> Checker:
        REGISTRY[check_id] = CheckEntry(check_id=check_id, func=func, **options)
        return func

    return decorator


# Parameter access


def real_param(params: Mapping[str, Any], name: str) -> float:
    value = params[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ContractError(f"parameter {name} must be a real number, got {value!r}")
    return float(value)


def int_param(params: Mapping[str, Any], name: str) -> int:
    value = real_param(params, name)
    if value != int(value):
        raise ContractError(f"parameter {name} must be an integer, got {value!r}")
    return int(value)


def influence_exponent(params: Mapping[str, Any], upper_open: bool = True) -> float:
    """p ∈ [1, 2), or [1, 2] when upper_open is False"""
    p = real_param(params, "p")
    if p < 1 or p > 2 or (upper_open and p == 2):
        bracket = ")" if upper_open else "]"
        raise ContractError(f"p must lie in [1, 2{bracket}, got {p}")
    return p


def mls_constant(p: float) -> float:
    """K_p = 4/((2 − p)e)"""
    if not 1 <= p < 2:
        raise ContractError(f"K_p needs 1 <= p < 2, got {p}")
    return 4.0 / ((2.0 - p) * math.e)


def subsets_for(inst: Instance, params: Mapping[str, Any]) -> List[SubsetJ]:
    """The J values a per-subset claim is checked on

    An explicit list of sites or "all" pins J. Otherwise every subset is used
    for n <= 6 and 32 subsets drawn from μ_{1/2} (seeded by "seed") above that.
    """
    chosen = params.get("J")
    n = inst.n
    match chosen:
        case None:
            dist = restriction_mc.SubsetDistribution(n, 0.5)
            if n <= SUBSET_POLICY_MAX_N:
                return [subset for subset, _ in restriction_mc.enumerate_subsets(dist)]
            rng = np.random.default_rng(int_param(params, "seed"))
            return [restriction_mc.sample(dist, rng) for _ in range(SUBSET_SAMPLES)]
        case "all":
            return [SubsetJ.full(n)]
        case list() | tuple():
            return [SubsetJ.of(n, chosen)]
        case _:
            raise ContractError(f"J must be a list of sites or 'all', got {chosen!r}")


def sites_for(inst: Instance, params: Mapping[str, Any], candidates: Iterable[int]) -> List[int]:
    """j = 0 means every candidate site"""
    j = int_param(params, "j")
    candidates = list(candidates)
    if j == 0:
        return candidates
    if not 1 <= j <= inst.n:
        raise ContractError(f"site {j} outside 1..{inst.n}")
    return [j] if j in candidates else []


def _ratio_key(lhs: float, rhs: float) -> float:
    if rhs > RATIO_FLOOR:
        return lhs / rhs
    return math.inf if lhs > 0 else 0.0


def worst_claim(claims: Iterable[Tuple[str, float, float]]) -> Evaluation:
    """Pick the claim closest to (or furthest past) violation"""
    best: Optional[Tuple[Tuple[bool, float], str, float, float]] = None
    for label, lhs, rhs in claims:
        key = (is_violated(lhs, rhs), _ratio_key(lhs, rhs))
        if best is None or key > best[0]:
            best = (key, label, lhs, rhs)
    if best is None:
        return Evaluation(0.0, 0.0, status=CheckStatus.SKIPPED_PRECONDITION, note="no applicable claim")
    _, label, lhs, rhs = best
    return Evaluation(lhs, rhs, note=label)


def gram_sum(parts: Iterable[Observable], n: int) -> Observable:
    """Σ a*a over the given operators"""
    total = Observable(n)
    for part in parts:
        total = add(total, multiply(adjoint(part), part))
    return total


def psd_evaluation(operand: Observable, note: str = "") -> Evaluation:
    """lhs = −λ_min, rhs = PSD tolerance"""
    margin = dense_ops.psd_margin(dense_ops.synthesize(operand))
    return Evaluation(-margin, PSD_TOL, note=note or f"smallest eigenvalue {margin:.6g}")


def identity_evaluation(deviation: float, note: str = "") -> Evaluation:
    return Evaluation(deviation, IDENTITY_TOL, note=note or f"max deviation {deviation:.3e}")


def degenerate(note: str) -> Evaluation:
    return Evaluation(0.0, 0.0, status=CheckStatus.DEGENERATE, note=note)


def skipped(note: str) -> Evaluation:
    return Evaluation(0.0, 0.0, status=CheckStatus.SKIPPED_PRECONDITION, note=note)


# Entropy and log-Sobolev


@register("log_sobolev", anchor="L2 logarithmic Sobolev inequality", unconditional=True)
def log_sobolev(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """tr[|T|² log|T|²] − ‖T‖_2² log‖T‖_2² ≤ 2 Σ_j ‖d_j T‖_2²"""
    squares = inst.singular_values**2
    mass = float(np.mean(squares))
    entropy = float(np.mean(scipy.special.xlogy(squares, squares))) - float(scipy.special.xlogy(mass, mass))
    return Evaluation(entropy, 2.0 * inst.total_influence(2))


@register(
    "modified_log_sobolev",
    defaults={"p": 1.0},
    hypothesis=Hypothesis.CONTRACTION,
    anchor="modified log-Sobolev inequality with L_p norms",
    unconditional=True,
)
def modified_log_sobolev(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """−K_p‖T‖_2‖T‖_p^{p/2} − ‖T‖_2² log‖T‖_2² ≤ 2 Σ_j ‖d_j T‖_2² for |T| ≤ 1"""
    p = influence_exponent(params)
    l2 = inst.norm(2)
    lhs = -mls_constant(p) * l2 * inst.norm(p) ** (p / 2) - float(scipy.special.xlogy(l2**2, l2**2))
    return Evaluation(lhs, 2.0 * inst.total_influence(2))


# KKL and Talagrand families


@register(
    "dim_free_kkl",
    defaults={"p": 1.0, "K": 1.0},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    constant="K",
    role=ConstantRole.EXPONENT,
    anchor="dimension-free quantum KKL inequality",
)
def dim_free_kkl(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(1/4)exp{−(K/(2−p))·Inf^p/var} ≤ max_j Inf_j^p"""
    p = influence_exponent(params)
    K = real_param(params, "K")
    var = inst.variance
    if var <= RATIO_FLOOR:
        return degenerate("var(T) = 0")
    influences = inst.influences(p)
    total, largest = float(np.sum(influences)), float(np.max(influences))
    lhs = 0.25 * math.exp(-(K / (2.0 - p)) * total / var)
    # smallest K that makes the exponential drop below 4·max_j Inf_j^p
    critical = 0.0 if 4.0 * largest >= 1.0 else (2.0 - p) * (var / total) * math.log(1.0 / (4.0 * largest))
    return Evaluation(lhs, largest, critical=max(0.0, critical), extra={"ratio_inf_var": total / var})


@register(
    "kkl_lp",
    defaults={"p": 1.0, "C": 1.0},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    constant="C",
    role=ConstantRole.LHS,
    anchor="quantum KKL inequality with L_p influences",
)
def kkl_lp(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """C(2−p)·var·log(n)/n ≤ max_j Inf_j^p"""
    p = influence_exponent(params)
    if inst.n < 2:
        return degenerate("log(n) = 0 at n = 1")
    if inst.variance <= RATIO_FLOOR:
        return degenerate("var(T) = 0")
    lhs = real_param(params, "C") * (2.0 - p) * inst.variance * math.log(inst.n) / inst.n
    return Evaluation(lhs, float(np.max(inst.influences(p))))


@register(
    "talagrand_influence",
    defaults={"p": 1.0, "C": 1.0},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    constant="C",
    role=ConstantRole.RHS,
    anchor="quantum Talagrand influence inequality",
)
def talagrand_influence(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var(T) ≤ C_p Σ_j Inf_j^p / log(1/Inf_j^p)"""
    p = influence_exponent(params)
    total = 0.0
    clamped = []
    for j, value in enumerate(inst.influences(p), start=1):
        if value <= 0.0:
            continue
        if value >= 1.0 - DENOMINATOR_FLOOR:
            clamped.append(j)
            total += value / DENOMINATOR_FLOOR
            continue
        total += value / math.log(1.0 / value)
    evaluation = Evaluation(inst.variance, real_param(params, "C") * total)
    if clamped:
        evaluation.status = CheckStatus.DEGENERATE
        evaluation.note = f"Inf_j^p ≈ 1 at sites {clamped}; denominator clamped at {DENOMINATOR_FLOOR:g}"
    return evaluation


@register(
    "rwz_talagrand",
    defaults={"p": 1.0, "C": 1.0},
    hypothesis=Hypothesis.SELF_ADJOINT_CONTRACTION,
    constant="C",
    role=ConstantRole.RHS,
    anchor="Talagrand inequality with the (1 + log⁺) denominator",
)
def rwz_talagrand(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var(T) ≤ (C/(2−p)) Σ_j I_j(1 + I_j)/(1 + log⁺(1/I_j)), I_j = ‖d_j T‖_p^p"""
    p = influence_exponent(params)
    total = 0.0
    for value in inst.influences(p):
        if value > 0.0:
            total += value * (1.0 + value) / (1.0 + max(math.log(1.0 / value), 0.0))
    return Evaluation(inst.variance, real_param(params, "C") / (2.0 - p) * total)


@register(
    "isoperimetric",
    defaults={"K": 1.0},
    hypothesis=Hypothesis.PROJECTION,
    constant="K",
    role=ConstantRole.RHS,
    anchor="quantum Talagrand-type isoperimetric inequality",
)
def isoperimetric(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var(T)·√log(1/var(T)) ≤ K·‖|∇T|‖_1"""
    var = inst.variance
    if var <= RATIO_FLOOR:
        return degenerate("var(T) = 0")
    if var > 1.0 / math.e:
        return degenerate(f"log(1/var) < 0 at var = {var:.6g}")
    lhs = var * math.sqrt(math.log(1.0 / var))
    return Evaluation(lhs, real_param(params, "K") * inst.gradient_norm(1))


@register(
    "eldan_gross",
    defaults={"K": 1.0},
    hypothesis=Hypothesis.PROJECTION,
    constant="K",
    role=ConstantRole.RHS,
    anchor="quantum Eldan-Gross inequality",
)
def eldan_gross(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var(T)·√log(1 + 1/M(T)) ≤ K·‖|∇T|‖_1"""
    var = inst.variance
    if var <= RATIO_FLOOR or inst.geometric_mass <= RATIO_FLOOR:
        return degenerate("var(T) = 0")
    lhs = var * math.sqrt(math.log(1.0 + 1.0 / inst.geometric_mass))
    return Evaluation(lhs, real_param(params, "K") * inst.gradient_norm(1), extra={"M": inst.geometric_mass})


@register(
    "kkl_geometric",
    defaults={"C": 1.0},
    hypothesis=Hypothesis.BALANCED_PROJECTION,
    constant="C",
    role=ConstantRole.LHS,
    anchor="quantum KKL inequality with geometric influences",
)
def kkl_geometric(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """C·√log(n)/n ≤ max_j ‖d_j T‖_1"""
    if inst.n < 2:
        return degenerate("log(n) = 0 at n = 1")
    lhs = real_param(params, "C") * math.sqrt(math.log(inst.n)) / inst.n
    return Evaluation(lhs, float(np.max(inst.derivative_norms(1))))


@register(
    "kkl_dichotomy",
    defaults={"eps": 0.5, "C": 1.0},
    hypothesis=Hypothesis.BALANCED_PROJECTION,
    constant="C",
    role=ConstantRole.LHS,
    anchor="quantum KKL dichotomy between L_2 and L_1 influences",
)
def kkl_dichotomy(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """At least one branch holds; lhs = min over branches of required/actual, rhs = 1"""
    eps = real_param(params, "eps")
    if not 0 < eps < 1:
        raise ContractError(f"eps must lie in (0, 1), got {eps}")
    if inst.n < 2:
        return degenerate("log(n) = 0 at n = 1")
    C, n = real_param(params, "C"), inst.n
    largest_l2 = float(np.max(inst.influences(2)))
    largest_l1 = float(np.max(inst.derivative_norms(1)))
    first = C * eps * math.log(n) / n / largest_l2
    second = C / n ** ((1.0 + eps) / 2.0) / largest_l1
    branch = "L_2 branch" if first <= second else "L_1 branch"
    return Evaluation(min(first, second), 1.0, note=f"{branch} is the closer one")


def index_constant(C: float, alpha: float) -> float:
    """C_ind = min{C(2−α)/(2α), (2−α)C^α/4}"""
    return min(C * (2.0 - alpha) / (2.0 * alpha), (2.0 - alpha) * C**alpha / 4.0)


@register(
    "kkl_index",
    defaults={"C": 1.0},
    hypothesis=Hypothesis.BALANCED_PROJECTION,
    constant="C",
    role=ConstantRole.LHS,
    anchor="index version of the quantum KKL inequality",
)
def kkl_index(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """C_ind(T)·log(n)/n ≤ max_j ‖d_j T‖_2², for ind(T) < 2"""
    if inst.n < 2:
        return degenerate("log(n) = 0 at n = 1")
    result = index_of(inst.observable)
    if result.undefined or result.degenerate:
        return skipped("ind(T) is not defined")
    if result.value >= 2.0 - DENOMINATOR_FLOOR:
        return skipped(f"ind(T) = {result.value:.6g} is not below 2")
    alpha = max(result.value, 1.0)
    scale_factor = math.log(inst.n) / inst.n
    largest = float(np.max(inst.influences(2)))
    lhs = index_constant(real_param(params, "C"), alpha) * scale_factor
    # C_ind is increasing in C, so the largest admissible C inverts each branch of the minimum
    target = largest / scale_factor
    critical = max(target * 2.0 * alpha / (2.0 - alpha), (4.0 * target / (2.0 - alpha)) ** (1.0 / alpha))
    return Evaluation(lhs, largest, critical=critical, extra={"ind": result.value})


@register(
    "stability",
    defaults={"C1": 1.0, "C2": 1.0},
    hypothesis=Hypothesis.PROJECTION,
    constant="C2",
    role=ConstantRole.LHS,
    anchor="stability of the KKL inequality with geometric influences",
)
def stability(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """Gated on max_j‖d_jT‖_1 ≤ C1 log(n) var/n: C2·var ≤ tr[1_{(½ var √log n, ∞)}(|∇T|)]"""
    n, var = inst.n, inst.variance
    if n < 2:
        return degenerate("log(n) = 0 at n = 1")
    if var <= RATIO_FLOOR:
        return degenerate("var(T) = 0")
    gate = real_param(params, "C1") * math.log(n) * var / n
    largest = float(np.max(inst.derivative_norms(1)))
    if largest > gate:
        return skipped(f"max ‖d_jT‖_1 = {largest:.6g} exceeds the gate {gate:.6g}")
    level = 0.5 * var * math.sqrt(math.log(n))
    mass = dense_ops.spectral_count(inst.gradient, level, closed=False)
    return Evaluation(real_param(params, "C2") * var, mass)


# Semigroup and gradient inequalities


def _positive_time(params: Mapping[str, Any]) -> float:
    t = real_param(params, "t")
    if t <= 0:
        raise ContractError(f"t must be positive, got {t}")
    return t


@register("buser", defaults={"p": 1.0, "t": 0.5}, anchor="quantum Buser-type inequality", unconditional=True)
def buser(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """‖T − e^{−tL}T‖_p ≤ √(2t)·‖|∇T|‖_p, 1 ≤ p ≤ 2"""
    p = influence_exponent(params, upper_open=False)
    t = _positive_time(params)
    lhs = lp_norm(subtract(inst.observable, semigroup(inst.observable, t)), p)
    return Evaluation(lhs, math.sqrt(2.0 * t) * inst.gradient_norm(p))


@register(
    "local_reverse_poincare",
    defaults={"t": 0.5},
    anchor="local reverse Poincaré inequality",
    unconditional=True,
)
def local_reverse_poincare(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """e^{−tL}(|T|²) − |e^{−tL}T|² − (e^{2t} − 1)Σ_j |e^{−tL} d_j T|² ≥ 0"""
    t = _positive_time(params)
    T = inst.observable
    evolved = semigroup(T, t)
    gap = subtract(semigroup(multiply(adjoint(T), T), t), multiply(adjoint(evolved), evolved))
    gradient = gram_sum((partial_derivative(evolved, j) for j in range(1, inst.n + 1)), inst.n)
    return psd_evaluation(subtract(gap, scale(gradient, math.expm1(2.0 * t))))


@register(
    "gradient_estimate",
    defaults={"p": 2.0, "t": 0.5},
    anchor="gradient estimate dual to the Buser inequality",
    unconditional=True,
)
def gradient_estimate(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """‖|∇e^{−tL}T|‖_p ≤ ‖T‖_p/√(2t), p ≥ 2"""
    p = real_param(params, "p")
    if p < 2:
        raise ContractError(f"p must be at least 2, got {p}")
    t = _positive_time(params)
    evolved = Instance(semigroup(inst.observable, t))
    return Evaluation(evolved.gradient_norm(p), inst.norm(p) / math.sqrt(2.0 * t))


@register(
    "curvature_i",
    defaults={"sign": -1.0, "stated": 0.0},
    exact=True,
    anchor="curvature identity for the Ornstein-Uhlenbeck generator",
    unconditional=True,
)
def curvature_i(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """L(T*T) − L(T)*T − T*L(T) = sign·2Σ_j|d_jT|² + Σ_j d_j(|d_jT|²)

    With stated = 1 the last sum is dropped; that form only holds when every
    pair of noncommuting terms is absent, e.g. on diagonal (classical) T.
    sign = +1 is a negative control and fails on every nonconstant T.
    """
    sign = real_param(params, "sign")
    stated = real_param(params, "stated")
    T = inst.observable
    LT = generator(T)
    left = subtract(subtract(generator(multiply(adjoint(T), T)), multiply(adjoint(LT), T)), multiply(adjoint(T), LT))
    squares = [multiply(adjoint(d), d) for d in inst.derivatives]
    right = Observable(inst.n)
    for square in squares:
        right = add(right, scale(square, 2.0 * sign))
    if stated == 0:
        for j, square in enumerate(squares, start=1):
            right = add(right, partial_derivative(square, j))
    return identity_evaluation(max_abs_difference(left, right))


@register(
    "curvature_ii",
    defaults={"t": 0.5, "j": 0},
    anchor="per-site curvature bound for the Ornstein-Uhlenbeck semigroup",
    unconditional=True,
)
def curvature_ii(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """|d_j e^{−tL}T|² ≤ e^{−2t} e^{−tL}(|d_jT|²); j = 0 reports the worst site"""
    t = _positive_time(params)
    evolved = semigroup(inst.observable, t)
    worst: Optional[Evaluation] = None
    for j in sites_for(inst, params, range(1, inst.n + 1)):
        derivative = inst.derivatives[j - 1]
        moved = partial_derivative(evolved, j)
        bound = scale(semigroup(multiply(adjoint(derivative), derivative), t), math.exp(-2.0 * t))
        current = psd_evaluation(subtract(bound, multiply(adjoint(moved), moved)), note=f"site {j}")
        if worst is None or current.lhs > worst.lhs:
            worst = current
    return worst or skipped("no site selected")


@register(
    "curvature_iii",
    defaults={"t": 0.5},
    anchor="summed curvature bound for the Ornstein-Uhlenbeck semigroup",
    unconditional=True,
)
def curvature_iii(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """Σ_j |d_j e^{−tL}T|² ≤ e^{−2t} e^{−tL}(Σ_j |d_jT|²)"""
    t = _positive_time(params)
    evolved = semigroup(inst.observable, t)
    moved = gram_sum((partial_derivative(evolved, j) for j in range(1, inst.n + 1)), inst.n)
    bound = scale(semigroup(gram_sum(inst.derivatives, inst.n), t), math.exp(-2.0 * t))
    return psd_evaluation(subtract(bound, moved))


@register(
    "fundamental_identity",
    defaults={"t": 1.0},
    hypothesis=Hypothesis.PROJECTION,
    anchor="variance decay along the semigroup for projections",
    unconditional=True,
)
def fundamental_identity(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var(T) ≤ ‖T − e^{−tL}T‖_1 + var(e^{−tL/2}T)"""
    t = real_param(params, "t")
    if t < 0:
        raise ContractError(f"t must be nonnegative, got {t}")
    T = inst.observable
    rhs = lp_norm(subtract(T, semigroup(T, t)), 1) + variance(semigroup(T, t / 2.0))
    return Evaluation(inst.variance, rhs)


@register(
    "high_degree",
    defaults={"d": 1},
    hypothesis=Hypothesis.PROJECTION,
    anchor="high-degree weight against the gradient",
    unconditional=True,
)
def high_degree(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(1/4)√d·W_{≥d}(T) ≤ ‖|∇T|‖_1"""
    d = int_param(params, "d")
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    return Evaluation(0.25 * math.sqrt(d) * weight_geq(inst.observable, d), inst.gradient_norm(1))


@register("moment_comparison", defaults={"r": 4.0}, anchor="moment comparison for low degree", unconditional=True)
def moment_comparison(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """‖T‖_r ≤ (r − 1)^{k/2}‖T‖_2 with k = degree(T)"""
    r = real_param(params, "r")
    if r < 2:
        raise ContractError(f"r must be at least 2, got {r}")
    return Evaluation(inst.norm(r), (r - 1.0) ** (inst.degree / 2.0) * inst.norm(2), extra={"k": inst.degree})


def critical_time(p: float, q: float) -> float:
    """½ log((q − 1)/(p − 1))"""
    if not 1 < p <= q:
        raise ContractError(f"hypercontractivity needs 1 < p <= q, got p={p}, q={q}")
    return 0.5 * math.log((q - 1.0) / (p - 1.0))


@register(
    "hypercontractivity_sample",
    defaults={"p": 2.0, "q": 4.0, "t": -1.0},
    anchor="optimal hypercontractivity of the semigroup",
    unconditional=True,
)
def hypercontractivity_sample(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """‖e^{−tL}T‖_q ≤ ‖T‖_p once t ≥ ½ log((q−1)/(p−1)); t < 0 uses that critical time"""
    p, q = real_param(params, "p"), real_param(params, "q")
    threshold = critical_time(p, q)
    t = real_param(params, "t")
    if t < 0:
        t = threshold
    elif t < threshold:
        return skipped(f"t = {t:.6g} is below the critical time {threshold:.6g}")
    lhs = lp_norm(semigroup(inst.observable, t), q)
    return Evaluation(lhs, inst.norm(p), extra={"t_used": t})


# Spectral tails


@register(
    "deviation",
    defaults={"K": 1.0, "t": 0.0},
    constant="K",
    role=ConstantRole.RHS,
    anchor="tail bound for low-degree elements",
)
def deviation(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """tr[1_{[t,∞)}(|T|)] ≤ K·exp{−d·t^{2/d}/(4e)} for ‖T‖_2 ≤ 1; t = 0 scans every singular value"""
    d = inst.degree
    if d < 1:
        return skipped("degree 0")
    if inst.norm(2) > 1.0 + PSD_TOL:
        return skipped(f"‖T‖_2 = {inst.norm(2):.6g} exceeds 1")
    K, t = real_param(params, "K"), real_param(params, "t")
    values = inst.singular_values
    levels = [t] if t > 0 else sorted({float(v) for v in values if v > dense_ops.SPECTRAL_CUT_TOL})
    if not levels:
        return degenerate("T = 0")
    best: Optional[Tuple[float, float, float]] = None
    for level in levels:
        count = float(np.count_nonzero(values >= level - dense_ops.SPECTRAL_CUT_TOL)) / len(values)
        bound = K * math.exp(-d * level ** (2.0 / d) / (4.0 * math.e))
        if best is None or _ratio_key(count, bound) > _ratio_key(best[0], best[1]):
            best = (count, bound, level)
    count, bound, level = best
    return Evaluation(count, bound, extra={"t_worst": level, "degree": d})


@register(
    "paley_zygmund",
    defaults={"delta": 0.5},
    hypothesis=Hypothesis.POSITIVE,
    anchor="Paley-Zygmund inequality",
    unconditional=True,
)
def paley_zygmund(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(1 − δ)²‖T‖_1²/‖T‖_2² ≤ tr[1_{[δ‖T‖_1, ∞)}(T)]"""
    delta = real_param(params, "delta")
    if not 0 < delta < 1:
        raise ContractError(f"delta must lie in (0, 1), got {delta}")
    l1, l2 = inst.norm(1), inst.norm(2)
    if l2 <= RATIO_FLOOR:
        return degenerate("T = 0")
    lhs = (1.0 - delta) ** 2 * l1**2 / l2**2
    return Evaluation(lhs, dense_ops.spectral_count(inst.dense, delta * l1, closed=True))


def _xlog_power(x: float, inner: float, d: int) -> float:
    """x·(log(inner/x))^d with the x → 0 limit 0"""
    if x <= 0.0:
        return 0.0
    return x * math.log(inner / x) ** d


@register(
    "kk18",
    defaults={"d": 1},
    hypothesis=Hypothesis.PROJECTION,
    anchor="level-d weight against geometric influences",
    unconditional=True,
)
def kk18(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """W_{=d} ≤ (6e/d)(2e/d)^d·M·(log(d/M))^d, gated on M(T) ≤ e^{−2d}"""
    d = int_param(params, "d")
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    M = inst.geometric_mass
    if M > math.exp(-2.0 * d):
        return skipped(f"M(T) = {M:.6g} exceeds e^(-2d)")
    if M <= RATIO_FLOOR:
        return degenerate("M(T) = 0")
    rhs = (6.0 * math.e / d) * (2.0 * math.e / d) ** d * _xlog_power(M, d, d)
    return Evaluation(weight_eq(inst.observable, d), rhs, extra={"M": M})


@register(
    "key_prop",
    defaults={"d": 1, "J": None, "seed": 0},
    hypothesis=Hypothesis.PROJECTION,
    anchor="single-hit spectral mass against M_J",
    unconditional=True,
)
def key_prop(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """Σ_{j∈J} ‖T_j‖_2² ≤ 6(2e/d)^d·M_J·(log(1/M_J))^d, gated on M(T) ≤ e^{−2d}"""
    d = int_param(params, "d")
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    if inst.geometric_mass > math.exp(-2.0 * d):
        return skipped(f"M(T) = {inst.geometric_mass:.6g} exceeds e^(-2d)")
    claims = []
    l1 = inst.derivative_norms(1)
    for subset in subsets_for(inst, params):
        if not len(subset):
            continue
        mass = math.fsum(
            l2_norm_squared(scaffold.build_tj(inst.observable, subset, j, d).observable) for j in subset
        )
        local = float(sum(l1[j - 1] ** 2 for j in subset))
        claims.append((f"J={subset.label()}", mass, 6.0 * (2.0 * math.e / d) ** d * _xlog_power(local, 1.0, d)))
    return worst_claim(claims)


@register(
    "main_spectral",
    hypothesis=Hypothesis.PROJECTION,
    anchor="low-degree spectral mass against M(T)",
    unconditional=True,
)
def main_spectral(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """Σ_{1 ≤ |supp(s)| ≤ (1/10) log(1/M)} |T̂(s)|² ≤ 12e·M^{2/5}"""
    M = inst.geometric_mass
    if M <= RATIO_FLOOR:
        return degenerate("M(T) = 0")
    cutoff = math.log(1.0 / M) / 10.0
    rhs = 12.0 * math.e * M**0.4
    if cutoff < 1.0:
        return Evaluation(0.0, rhs, status=CheckStatus.HOLDS, note="vacuous: empty degree range")
    top = min(int(math.floor(cutoff)), inst.n)
    lhs = math.fsum(weight_eq(inst.observable, k) for k in range(1, top + 1))
    return Evaluation(lhs, rhs, extra={"cutoff": cutoff})


# Dyadic decomposition bounds


@register(
    "dgood",
    defaults={"p": 1.0},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    anchor="good dyadic scales carry half the variance",
    unconditional=True,
)
def dgood(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var/2 ≤ Σ_{d good} W_{≈d}, good meaning W_{≈d} ≥ var²/(16·Inf^p)"""
    p = influence_exponent(params)
    var = inst.variance
    if var <= RATIO_FLOOR:
        return degenerate("var(T) = 0")
    threshold = var**2 / (16.0 * inst.total_influence(p))
    weights = {d: weight_approx(inst.observable, d) for d in dyadic_scales(inst.n)}
    good = [d for d, w in weights.items() if w >= threshold]
    return Evaluation(0.5 * var, math.fsum(weights[d] for d in good), note=f"good scales {good}")


@register(
    "lehd",
    defaults={"d": 0, "p": 1.0},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    anchor="properties of the dyadic band operators H_d",
    unconditional=True,
)
def lehd(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """The four H_d claims; d = 0 checks every dyadic scale, the worst claim is reported"""
    d_param = int_param(params, "d")
    p = influence_exponent(params, upper_open=False)
    T = inst.observable
    scales = dyadic_scales(inst.n) if d_param == 0 else [d_param]
    claims: List[Tuple[str, float, float]] = []
    base = inst.influences(p)
    for d in scales:
        sliced = spectral_slice_hd(T, d)
        claims.append((f"|H_{d}T| <= 1", lp_norm(sliced, math.inf), 1.0))
        for j in range(1, inst.n + 1):
            claims.append((f"d_{j}H_{d}T", lp_norm(partial_derivative(sliced, j), p) ** p, 2.0**p * base[j - 1]))
        band = [hd_multiplier(d, k) for k in range(d, min(2 * d, inst.n + 1))]
        if band:
            claims.append((f"band multiplier of H_{d} >= 1/4", 0.25, min(band)))
            claims.append((f"band multiplier of H_{d} <= 1", max(band), 1.0))
    sliced_all = [spectral_slice_hd(T, d) for d in dyadic_scales(inst.n)]
    claims.append(("Σ_d ‖H_dT‖_2² <= var", math.fsum(l2_norm_squared(s) for s in sliced_all), inst.variance))
    claims.append(
        ("Σ_d Inf(H_dT) <= Inf", math.fsum(total_influence(s) for s in sliced_all), inst.total_influence(2))
    )
    return worst_claim(claims)


@register(
    "comlemma",
    defaults={"p": 1.0, "d": 1},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    anchor="influence lower bound from one dyadic band",
    unconditional=True,
)
def comlemma(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(1/16)log(1/max_j Inf_j^p)·W_{≈d} − (K_p/16)√Inf^p·√W_{≈d} ≤ Inf + var"""
    p = influence_exponent(params)
    d = int_param(params, "d")
    weight = weight_approx(inst.observable, d)
    influences = inst.influences(p)
    largest = float(np.max(influences))
    if largest <= RATIO_FLOOR:
        return degenerate("every influence vanishes")
    lhs = math.log(1.0 / largest) * weight / 16.0
    lhs -= mls_constant(p) / 16.0 * math.sqrt(float(np.sum(influences))) * math.sqrt(weight)
    return Evaluation(lhs, inst.total_influence(2) + inst.variance)


def _restriction_masses(T: Observable, subset: SubsetJ) -> List[Observable]:
    return [restriction(T, j, subset) for j in subset]


@register(
    "restricted_comlemma",
    defaults={"p": 1.0, "J": None, "seed": 0},
    hypothesis=Hypothesis.UNIT_INTERVAL,
    anchor="influence lower bound from a fixed restriction set",
    unconditional=True,
)
def restricted_comlemma(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """½ΣR·log(1/max_{j∈J}Inf_j^p) − (K_p/2)√ΣR·√Inf^p ≤ Inf + var, ΣR = Σ_{j∈J}‖R_j^J T‖_2²"""
    p = influence_exponent(params)
    influences = inst.influences(p)
    total_p = float(np.sum(influences))
    rhs = inst.total_influence(2) + inst.variance
    claims = []
    for subset in subsets_for(inst, params):
        largest = max((influences[j - 1] for j in subset), default=0.0)
        if largest <= RATIO_FLOOR:
            continue
        mass = restriction_mc.restriction_mass(inst.observable, subset)
        lhs = 0.5 * mass * math.log(1.0 / largest) - 0.5 * mls_constant(p) * math.sqrt(mass) * math.sqrt(total_p)
        claims.append((f"J={subset.label()}", lhs, rhs))
    return worst_claim(claims)


# Restriction operators


@register(
    "cor_ik1",
    defaults={"J": None, "seed": 0},
    anchor="restriction operators against derivatives and variance",
    unconditional=True,
)
def cor_ik1(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(i) derivative split of R_j^J T, (ii) Σ_{j∈J}‖R_j^J T‖_2² ≤ var, (iii) Σ_{j∈J}‖d_k R_j^J T‖_2² ≤ ‖d_k T‖_2²"""
    T = inst.observable
    base = inst.influences(2)
    claims = []
    for subset in subsets_for(inst, params):
        label = subset.label()
        restricted = {j: restriction(T, j, subset) for j in subset}
        outside = list(subset.complement())
        for j, R in restricted.items():
            parts = [l2_norm_squared(partial_derivative(R, k)) for k in range(1, inst.n + 1)]
            split = math.fsum(parts[k - 1] for k in outside) + parts[j - 1]
            claims.append((f"(i) J={label}, j={j}", abs(math.fsum(parts) - split), IDENTITY_TOL))
        mass = math.fsum(l2_norm_squared(R) for R in restricted.values())
        claims.append((f"(ii) J={label}", mass, inst.variance))
        for k in outside:
            spread = math.fsum(l2_norm_squared(partial_derivative(R, k)) for R in restricted.values())
            claims.append((f"(iii) J={label}, k={k}", spread, base[k - 1]))
    return worst_claim(claims)


@register(
    "prrr",
    defaults={"p": 1.5, "J": None, "seed": 0},
    hypothesis=Hypothesis.CONTRACTION,
    anchor="L_p bounds for restriction operators",
    unconditional=True,
)
def prrr(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(i) ‖R_j^J T‖_p^p ≤ ‖d_jT‖_p^p, (ii) ‖R_j^J T‖_2² ≤ ‖R_j^J T‖_p^p, (iii) Σ_{j∈J} Inf(R_j^J T) ≤ var + Inf"""
    p = influence_exponent(params, upper_open=False)
    T = inst.observable
    base = inst.influences(p)
    ceiling = inst.variance + inst.total_influence(2)
    claims = []
    for subset in subsets_for(inst, params):
        label = subset.label()
        spread = 0.0
        for j in subset:
            R = restriction(T, j, subset)
            norm_p = lp_norm(R, p) ** p
            claims.append((f"(i) J={label}, j={j}", norm_p, base[j - 1]))
            claims.append((f"(ii) J={label}, j={j}", l2_norm_squared(R), norm_p))
            spread += total_influence(R)
        claims.append((f"(iii) J={label}", spread, ceiling))
    return worst_claim(claims)


@register(
    "zrr",
    defaults={"d": 1},
    hypothesis=Hypothesis.CONTRACTION,
    anchor="expected restriction mass against a dyadic band",
    unconditional=True,
)
def zrr(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(1/8)W_{≈d} ≤ E_J[Σ_{j∈J}‖R_j^J T‖_2²], J ~ μ_{1/d}"""
    d = int_param(params, "d")
    record = restriction_mc.zrr_expectation(inst.observable, d, instance_id=inst.instance_id)
    status = record.status if record.status == CheckStatus.VIOLATED else None
    return Evaluation(record.lhs, record.rhs, status=status, note=record.note)


@register(
    "dlili",
    defaults={"p": 1.5},
    hypothesis=Hypothesis.CONTRACTION,
    anchor="derivative bounds for contractions",
    unconditional=True,
)
def dlili(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """(i) ‖d_jT‖_∞ ≤ ‖T‖_∞ and (ii) Inf_j(T) ≤ Inf_j^p(T), worst site reported

    Both fail on some contractions (the swap operator at n = 2 is one); both
    hold when 0 ≤ T ≤ 1.
    """
    p = influence_exponent(params, upper_open=False)
    ceiling = inst.norm(math.inf)
    sup_norms = inst.derivative_norms(math.inf)
    l2, lp = inst.influences(2), inst.influences(p)
    claims = []
    for j in range(1, inst.n + 1):
        claims.append((f"(i) site {j}", float(sup_norms[j - 1]), ceiling))
        claims.append((f"(ii) site {j}", float(l2[j - 1]), float(lp[j - 1])))
    return worst_claim(claims)


@register(
    "tav",
    defaults={"delta": 0.5},
    exact=True,
    anchor="δ^L as an average of conditional expectations",
    unconditional=True,
)
def tav(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """δ^L(T) = E_J[E_J(T)] with J ~ μ_δ"""
    delta = real_param(params, "delta")
    T = inst.observable
    deviation = max_abs_difference(delta_power(T, delta), restriction_mc.tav_average(T, delta))
    return Evaluation(deviation, restriction_mc.IDENTITY_TOL, note=f"max coefficient deviation {deviation:.3e}")


@register(
    "restriction_sampling",
    defaults={"delta": 0.5, "samples": 2000, "seed": 0},
    anchor="Monte Carlo mean of conditional expectations",
    unconditional=True,
)
def restriction_sampling(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """Sample mean of E_J(T) within five binomial standard errors of δ^L(T)"""
    rng = np.random.default_rng(int_param(params, "seed"))
    record = restriction_mc.check_restriction_sampling(
        inst.observable, real_param(params, "delta"), int_param(params, "samples"), rng, inst.instance_id
    )
    return Evaluation(record.lhs, record.rhs, note=record.note)


# (n+1)-site scaffold


def _pairs(inst: Instance, params: Mapping[str, Any]) -> List[Tuple[SubsetJ, int]]:
    pairs = []
    for subset in subsets_for(inst, params):
        pairs.extend((subset, j) for j in sites_for(inst, params, subset))
    return pairs


@register(
    "lem_cjc",
    defaults={"j": 0, "J": None, "seed": 0},
    exact=True,
    anchor="projected product identity on n+1 sites",
    unconditional=True,
)
def lem_cjc(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """E_{J^c∪{n+1}}(A_j T̃_j) = E_{J^c∪{n+1}}(d_{n+1} T_copy,j)"""
    claims = [
        (f"J={subset.label()}, j={j}", scaffold.cjc_deviation(inst.observable, subset, j), IDENTITY_TOL)
        for subset, j in _pairs(inst, params)
    ]
    return worst_claim(claims)


@register(
    "key_identity8",
    defaults={"j": 0},
    exact=True,
    anchor="moving a site preserves the L_1 derivative norm",
    unconditional=True,
)
def key_identity8(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """‖d_{n+1} T_copy,j‖_1 = ‖d_j T‖_1"""
    claims = []
    for j in sites_for(inst, params, range(1, inst.n + 1)):
        moved, original = scaffold.key_identity8_gap(inst.observable, j)
        claims.append((f"site {j}", abs(moved - original), IDENTITY_TOL))
    return worst_claim(claims)


@register(
    "lem_tj1",
    defaults={"j": 0, "J": None, "d": 1, "seed": 0},
    hypothesis=Hypothesis.HERMITIAN,
    exact=True,
    anchor="single-hit mass as a squared trace pairing",
    unconditional=True,
)
def lem_tj1(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """‖T_j‖_2² = (tr[T̄_j·A_j T̃_j])²; pairs with T_j = 0 are skipped"""
    d = int_param(params, "d")
    claims = []
    for subset, j in _pairs(inst, params):
        result = scaffold.tj_trace_identity(inst.observable, subset, j, d)
        if result is not None:
            mass, pairing = result
            claims.append((f"J={subset.label()}, j={j}", abs(mass - pairing), IDENTITY_TOL))
    return worst_claim(claims)


@register(
    "y1j",
    defaults={"j": 0, "J": None, "d": 1, "t0": 1.0, "seed": 0},
    anchor="truncated layer-cake integral against ‖d_jT‖_1",
    unconditional=True,
)
def y1j(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """∫_0^{t0} tr[1_{(t,∞)}(|T̄_j|)·|E(A_j T̃_j)|] dt ≤ t0·‖d_j T‖_1"""
    d, t0 = int_param(params, "d"), real_param(params, "t0")
    claims = []
    for subset, j in _pairs(inst, params):
        result = scaffold.y1j_bound(inst.observable, subset, j, d, t0)
        if result is not None:
            claims.append((f"J={subset.label()}, j={j}", result[0], result[1]))
    return worst_claim(claims)


# Scalar inequalities and exact corollaries


def calculus_integral(d: int, t0: float) -> float:
    """∫_{t0}^∞ (t/t0)² exp{−d(t^{2/d} − t0^{2/d})/(2e)} dt by adaptive quadrature"""

    def integrand(t: float) -> float:
        return (t / t0) ** 2 * math.exp(-d * (t ** (2.0 / d) - t0 ** (2.0 / d)) / (2.0 * math.e))

    upper = 2.0 * t0
    while integrand(upper) >= QUAD_TAIL:
        upper *= 2.0
    value, error = scipy.integrate.quad(integrand, t0, upper, epsabs=QUAD_ABS_TOL, limit=200)
    logger.debug(f"Quadrature on [{t0:.6g}, {upper:.6g}] for d={d}: {value:.12g} ± {error:.1e}")
    return float(value)


@register(
    "calculus_bound",
    defaults={"d": 1, "t0": 0.0},
    anchor="Gaussian-type tail integral",
    unconditional=True,
    needs_observable=False,
)
def calculus_bound(inst: Optional[Instance], params: Dict[str, Any]) -> Evaluation:
    """∫_{t0}^∞ t² e^{−d t^{2/d}/(2e)} dt ≤ 5e·t0^{3−2/d} e^{−d t0^{2/d}/(2e)}, both sides divided by t0² e^{...}"""
    d = int_param(params, "d")
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    threshold = (4.0 * math.e) ** (d / 2.0)
    t0 = real_param(params, "t0")
    if t0 == 0:
        t0 = 1.1 * threshold
    if t0 <= threshold:
        return skipped(f"t0 = {t0:.6g} is not above (4e)^(d/2) = {threshold:.6g}")
    return Evaluation(calculus_integral(d, t0), 5.0 * math.e * t0 ** (1.0 - 2.0 / d), extra={"t0_used": t0})


@register("poincare", exact=True, anchor="Poincaré inequality", unconditional=True)
def poincare(inst: Instance, params: Dict[str, Any]) -> Evaluation:
    """var(T) ≤ Σ_j Inf_j(T), with equality exactly on degree ≤ 1"""
    return Evaluation(inst.variance, inst.total_influence(2))
