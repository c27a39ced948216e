"""Reproducible instance families for the verification harness."""

import logging
from itertools import combinations, product
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from app import dense_ops
from app.dense_ops import DENSE_SOFT_CAP, DenseOperator
from app.errors import ContractError
from app.models import DENSE_HARD_CAP, EnsembleKind, EnsembleSpec
from app.pauli_core import Observable, PauliIndex, add, identity, pauli_string, scale, single_site

logger = logging.getLogger(__name__)

CLASSICAL_FUNCTIONS = ("dictator", "parity", "majority", "tribes")


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per (seed, instance index)"""
    return np.random.default_rng([seed, index])


def _int_param(params: Dict[str, Any], name: str, default: int, lo: int, hi: int) -> int:
    value = params.get(name, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ContractError(f"parameter {name} must be an integer, got {value!r}")
    value = int(value)
    if not lo <= value <= hi:
        raise ContractError(f"parameter {name}={value} outside [{lo}, {hi}]")
    return value


def _sign_vectors(n: int) -> NDArray[np.int64]:
    """x ∈ {−1, 1}^n for every computational basis state; bit 0 at site j gives x_j = +1"""
    bits = np.array(list(product((0, 1), repeat=n)), dtype=np.int64)
    return 1 - 2 * bits


def _diagonal_observable(values: NDArray[np.float64], n: int) -> Observable:
    return dense_ops.analyze(DenseOperator.from_matrix(np.diag(values.astype(np.complex128)), hermitian=True), n)


def _classical_values(n: int, params: Dict[str, Any]) -> NDArray[np.float64]:
    name = params.get("function", "dictator")
    x = _sign_vectors(n)
    match name:
        case "dictator":
            site = _int_param(params, "site", 1, 1, n)
            return (1 + x[:, site - 1]) / 2.0
        case "parity":
            k = _int_param(params, "k", n, 1, n)
            return (1 + np.prod(x[:, :k], axis=1)) / 2.0
        case "majority":
            if n % 2 == 0:
                raise ContractError(f"majority needs an odd number of sites, got n={n}")
            return (np.sum(x, axis=1) > 0).astype(np.float64)
        case "tribes":
            width = _int_param(params, "width", min(2, n), 1, n)
            blocks = x[:, : (n // width) * width].reshape(len(x), n // width, width)
            return np.any(np.all(blocks == 1, axis=2), axis=1).astype(np.float64)
        case _:
            raise ContractError(f"unknown classical function {name!r}; expected one of {CLASSICAL_FUNCTIONS}")


def classical(n: int, params: Dict[str, Any]) -> Observable:
    """Diagonal embedding of a {0,1}-valued function of x ∈ {−1,1}^n through σ_1"""
    return _diagonal_observable(_classical_values(n, params), n)


def subcube(n: int, k: int) -> Observable:
    """∏_{j≤k} (𝟙 + σ_1^{(j)})/2, a projection of normalized trace 2^{-k}"""
    if not 0 <= k <= n:
        raise ContractError(f"subcube codimension k={k} outside [0, {n}]")
    terms: Dict[PauliIndex, complex] = {}
    for bits in product((0, 1), repeat=k):
        terms[tuple(bits) + (0,) * (n - k)] = 2.0**-k
    return Observable(n, terms, validate=False)


def remark_p2(n: int) -> Observable:
    """½𝟙 + (1/(2n)) Σ_k σ_1^{(k)}, whose variance equals its total influence"""
    result = scale(identity(n), 0.5)
    for k in range(1, n + 1):
        result = add(result, single_site(n, k, 1, 1.0 / (2 * n)))
    return result


def haar_isometry(dim: int, rank: int, rng: np.random.Generator) -> NDArray[np.complex128]:
    """First `rank` columns of a Haar unitary via QR with the phase fix on diag(R)"""
    gaussian = (rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))) / np.sqrt(2)
    q, r = scipy.linalg.qr(gaussian, mode="economic")
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_projection(n: int, rank: int, rng: np.random.Generator) -> Observable:
    dim = 2**n
    if not 1 <= rank <= dim:
        raise ContractError(f"rank {rank} outside [1, {dim}]")
    columns = haar_isometry(dim, rank, rng)
    return dense_ops.analyze(DenseOperator.from_matrix(columns @ columns.conj().T, hermitian=True), n)


def random_boolean(n: int, rank: int, rng: np.random.Generator) -> Observable:
    """2P − 𝟙 for a Haar-random projection P"""
    return add(scale(random_projection(n, rank, rng), 2.0), scale(identity(n), -1.0))


def random_contraction(n: int, rng: np.random.Generator) -> Observable:
    """Gaussian Hermitian H shifted and rescaled so that 0 ≤ T ≤ 𝟙 with both ends attained"""
    dim = 2**n
    gaussian = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    hermitian = DenseOperator.from_matrix((gaussian + gaussian.conj().T) / 2, hermitian=True)
    eigenvalues = hermitian.eigenvalues()
    spread = eigenvalues[-1] - eigenvalues[0]
    shifted = (hermitian.matrix - eigenvalues[0] * np.eye(dim)) / spread
    return dense_ops.analyze(DenseOperator.from_matrix(shifted, hermitian=True), n)


def low_degree_indices(n: int, d: int) -> List[PauliIndex]:
    indices: List[PauliIndex] = []
    for size in range(0, min(d, n) + 1):
        for sites in combinations(range(n), size):
            for symbols in product((1, 2, 3), repeat=size):
                digits = [0] * n
                for site, symbol in zip(sites, symbols):
                    digits[site] = symbol
                indices.append(tuple(digits))
    return indices


def random_low_degree(n: int, d: int, rng: np.random.Generator) -> Observable:
    """Real Gaussian coefficients on |supp(s)| ≤ d, normalized to ‖T‖_2 = 1"""
    indices = low_degree_indices(n, d)
    coefficients = rng.standard_normal(len(indices))
    coefficients /= np.linalg.norm(coefficients)
    return Observable(n, dict(zip(indices, coefficients.tolist())), validate=False)


def _random_pauli_index(n: int, rng: np.random.Generator) -> PauliIndex:
    while True:
        digits = tuple(int(d) for d in rng.integers(0, 4, size=n))
        if any(digits):
            return digits


def _pauli_string(spec: EnsembleSpec, rng: np.random.Generator) -> Observable:
    digits = spec.params.get("s")
    if digits is None:
        return pauli_string(_random_pauli_index(spec.n, rng))
    if len(digits) != spec.n:
        raise ContractError(f"pauli_string index {digits} does not have length {spec.n}")
    return pauli_string(tuple(int(d) for d in digits), complex(spec.params.get("coefficient", 1.0)))


def _builder(spec: EnsembleSpec) -> Callable[[np.random.Generator], Observable]:
    n, params = spec.n, spec.params
    half = 2 ** (n - 1)
    match spec.kind:
        case EnsembleKind.PAULI_STRING:
            return lambda rng: _pauli_string(spec, rng)
        case EnsembleKind.CLASSICAL:
            fixed = classical(n, params)
            return lambda rng: fixed
        case EnsembleKind.SUBCUBE:
            fixed = subcube(n, _int_param(params, "k", n, 0, n))
            return lambda rng: fixed
        case EnsembleKind.RANDOM_PROJECTION:
            rank = _int_param(params, "r", half, 1, 2**n)
            return lambda rng: random_projection(n, rank, rng)
        case EnsembleKind.RANDOM_BOOLEAN:
            rank = _int_param(params, "r", half, 1, 2**n)
            return lambda rng: random_boolean(n, rank, rng)
        case EnsembleKind.RANDOM_CONTRACTION:
            return lambda rng: random_contraction(n, rng)
        case EnsembleKind.RANDOM_LOW_DEGREE:
            degree = _int_param(params, "d", min(2, n), 0, n)
            return lambda rng: random_low_degree(n, degree, rng)
        case EnsembleKind.REMARK_P2:
            fixed = remark_p2(n)
            return lambda rng: fixed
        case _:
            raise ContractError(f"unsupported ensemble kind {spec.kind}")


def make(spec: EnsembleSpec) -> List[Observable]:
    """Draw spec.count instances; equal specs give coefficient-identical instances"""
    return [observable for _, observable in make_labeled(spec)]


def make_labeled(spec: EnsembleSpec) -> List[Tuple[str, Observable]]:
    if spec.n > DENSE_HARD_CAP:
        raise ContractError(f"n={spec.n} exceeds the dense cap {DENSE_HARD_CAP}")
    if spec.n > DENSE_SOFT_CAP:
        logger.warning(f"Ensemble {spec.label()} uses n={spec.n}; dense checks above n={DENSE_SOFT_CAP} are slow")
    build = _builder(spec)
    label = spec.label()
    instances = [(f"{label}#{index}", build(instance_rng(spec.seed, index))) for index in range(spec.count)]
    logger.debug(f"Generated {len(instances)} instances for {label}")
    return instances
