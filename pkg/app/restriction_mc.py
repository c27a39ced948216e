"""Random subsets J ~ μ_δ and the expectation identities of the restriction method.

μ_δ includes each site independently with probability δ. Exact enumeration
is used whenever 2^n is affordable; the Monte Carlo estimators report a
standard error alongside the mean.
"""

import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.errors import ContractError, EnumerationCapError
from app.hypercube_ops import SubsetJ, conditional_expectation, delta_power, restriction, weight_approx
from app.models import CheckRecord, CheckStatus
from app.pauli_core import Observable, PauliIndex, l2_norm_squared, max_abs_difference, support, support_size
from app.verdict import make_record

logger = logging.getLogger(__name__)

ENUMERATION_CAP = 16
ENUMERATION_HARD_CAP = 20
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class SubsetDistribution:
    """μ_δ on subsets of {1, ..., n}"""

    n: int
    delta: float

    def __post_init__(self):
        if self.n < 1:
            raise ContractError(f"site count must be positive, got {self.n}")
        if not 0.0 <= self.delta <= 1.0:
            raise ContractError(f"delta must lie in [0, 1], got {self.delta}")

    def probability(self, subset: SubsetJ) -> float:
        size = len(subset)
        return self.delta**size * (1.0 - self.delta) ** (self.n - size)


def sample(dist: SubsetDistribution, rng: np.random.Generator) -> SubsetJ:
    mask = rng.random(dist.n) < dist.delta
    return SubsetJ.of(dist.n, (int(k) + 1 for k in np.flatnonzero(mask)))


def enumerate_subsets(dist: SubsetDistribution, cap: int = ENUMERATION_CAP) -> List[Tuple[SubsetJ, float]]:
    """All 2^n subsets with their μ_δ weights"""
    limit = min(cap, ENUMERATION_HARD_CAP)
    if dist.n > limit:
        raise EnumerationCapError(f"enumerating 2^{dist.n} subsets exceeds the cap n <= {limit}")
    subsets = []
    for bits in product((0, 1), repeat=dist.n):
        subset = SubsetJ.of(dist.n, (k + 1 for k, bit in enumerate(bits) if bit))
        subsets.append((subset, dist.probability(subset)))
    return subsets


def tav_average(operand: Observable, delta: float, cap: int = ENUMERATION_CAP) -> Observable:
    """Σ_J μ_δ(J)·E_J(T), summed per coefficient with math.fsum"""
    dist = SubsetDistribution(operand.n, delta)
    contributions: Dict[PauliIndex, List[complex]] = {s: [] for s in operand}
    for subset, weight in enumerate_subsets(dist, cap):
        if weight == 0.0:
            continue
        for s, value in conditional_expectation(operand, subset).items():
            contributions[s].append(weight * value)
    terms = {
        s: complex(math.fsum(c.real for c in parts), math.fsum(c.imag for c in parts))
        for s, parts in contributions.items()
    }
    return Observable(operand.n, terms, validate=False)


def check_tav(operand: Observable, delta: float, instance_id: str = "", cap: int = ENUMERATION_CAP) -> CheckRecord:
    """δ^L(T) = E_J[E_J(T)] coefficient by coefficient"""
    deviation = max_abs_difference(delta_power(operand, delta), tav_average(operand, delta, cap))
    return make_record(
        "tav",
        deviation,
        IDENTITY_TOL,
        instance_id=instance_id,
        params={"delta": delta},
        note=f"max coefficient deviation {deviation:.3e}",
    )


def single_hit_probability(s: PauliIndex, d: int) -> float:
    """μ_{1/d}{J : |supp(s) ∩ J| = 1} = (1 − 1/d)^{|supp(s)|−1}·|supp(s)|/d"""
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    k = support_size(s)
    if k == 0:
        return 0.0
    return (1.0 - 1.0 / d) ** (k - 1) * k / d


def single_hit_probability_enumerated(s: PauliIndex, d: int, cap: int = ENUMERATION_CAP) -> float:
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    sites = support(s)
    dist = SubsetDistribution(len(s), 1.0 / d)
    return math.fsum(weight for subset, weight in enumerate_subsets(dist, cap) if len(sites & subset.members) == 1)


def restriction_mass(operand: Observable, subset: SubsetJ) -> float:
    """Σ_{j∈J} ‖R_j^J T‖_2²"""
    return math.fsum(l2_norm_squared(restriction(operand, j, subset)) for j in subset)


def zrr_spectral(operand: Observable, d: int) -> float:
    """E_J[Σ_{j∈J}‖R_j^J T‖_2²] through the single-hit probabilities"""
    return math.fsum(abs(value) ** 2 * single_hit_probability(s, d) for s, value in operand.items())


def zrr_enumerated(
    operand: Observable, d: int, cap: int = ENUMERATION_CAP
) -> Tuple[float, List[Tuple[SubsetJ, float]]]:
    """Exact E_J by enumeration, together with the per-subset masses"""
    dist = SubsetDistribution(operand.n, 1.0 / d)
    weighted = [(subset, weight, restriction_mass(operand, subset)) for subset, weight in enumerate_subsets(dist, cap)]
    expectation = math.fsum(weight * mass for _, weight, mass in weighted)
    return expectation, [(subset, mass) for subset, _, mass in weighted]


def zrr_expectation(
    operand: Observable,
    d: int,
    instance_id: str = "",
    cap: int = ENUMERATION_CAP,
    rng: Optional[np.random.Generator] = None,
) -> CheckRecord:
    """(1/8)·W_{≈d}(T) ≤ E_J[Σ_{j∈J}‖R_j^J T‖_2²] with J ~ μ_{1/d}, plus a witness J_0 above the mean"""
    if d < 1:
        raise ContractError(f"d must be at least 1, got {d}")
    expectation = zrr_spectral(operand, d)
    notes = []
    status = None
    witness: Optional[SubsetJ] = None
    if operand.n <= cap:
        enumerated, masses = zrr_enumerated(operand, d, cap)
        deviation = abs(enumerated - expectation)
        notes.append(f"enumeration deviation {deviation:.3e}")
        if deviation > 1e-10:
            logger.warning(f"zrr closed form and enumeration disagree by {deviation:.3e} on {instance_id}")
            status = CheckStatus.VIOLATED
        witness = next((subset for subset, mass in masses if mass >= expectation - IDENTITY_TOL), None)
    else:
        rng = rng or np.random.default_rng(0)
        dist = SubsetDistribution(operand.n, 1.0 / d)
        for _ in range(4096):
            candidate = sample(dist, rng)
            if restriction_mass(operand, candidate) >= expectation - IDENTITY_TOL:
                witness = candidate
                break
    if witness is not None:
        notes.append(f"J0={witness.label()}")
    return make_record(
        "zrr",
        weight_approx(operand, d) / 8.0,
        expectation,
        instance_id=instance_id,
        params={"d": d},
        status=status,
        note="; ".join(notes),
    )


def monte_carlo_tav(
    operand: Observable, delta: float, samples: int, rng: np.random.Generator
) -> Tuple[Observable, Dict[PauliIndex, float]]:
    """Sample mean of E_J(T) over J ~ μ_δ and the standard error of each coefficient"""
    if samples < 2:
        raise ContractError(f"need at least two samples, got {samples}")
    dist = SubsetDistribution(operand.n, delta)
    keys = list(operand)
    if not keys:
        return Observable(operand.n), {}
    supports = np.array([[digit != 0 for digit in s] for s in keys], dtype=bool)
    masks = rng.random((samples, dist.n)) < dist.delta
    # term s survives E_J exactly when every site of supp(s) is in J
    survives = ~np.any(supports[None, :, :] & ~masks[:, None, :], axis=2)
    frequency = survives.mean(axis=0)
    spread = survives.std(axis=0, ddof=1) / math.sqrt(samples)
    mean = Observable(
        operand.n, {s: frequency[i] * operand.coefficient(s) for i, s in enumerate(keys)}, validate=False
    )
    errors = {s: float(spread[i] * abs(operand.coefficient(s))) for i, s in enumerate(keys)}
    return mean, errors


def check_restriction_sampling(
    operand: Observable, delta: float, samples: int, rng: np.random.Generator, instance_id: str = ""
) -> CheckRecord:
    """Monte Carlo mean of E_J(T) within 5 binomial standard errors of δ^L(T)"""
    mean, _ = monte_carlo_tav(operand, delta, samples, rng)
    exact = delta_power(operand, delta)
    worst = 0.0
    for s in operand:
        hit = delta ** support_size(s)
        band = 5.0 * math.sqrt(hit * (1.0 - hit) / samples) * abs(operand.coefficient(s)) + IDENTITY_TOL
        worst = max(worst, abs(mean.coefficient(s) - exact.coefficient(s)) / band)
    return make_record(
        "restriction_sampling",
        worst,
        1.0,
        instance_id=instance_id,
        params={"delta": delta, "samples": samples},
        note="largest coefficient deviation in units of five standard errors",
    )
