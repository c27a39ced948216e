"""Dense 2^n × 2^n spectral linear algebra under the normalized trace.

Eigen-decomposition of Hermitian matrices is the single spectral primitive:
Schatten norms, spectral projections, square roots and |T| are all applied to
eigenvalues in the eigenbasis, as in a symmetric-matrix transform.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from app.errors import ContractError, DimensionError, SpectralError
from app.pauli_core import HERMITIAN_TOL, SIGMA, STORAGE_EPS, Observable

logger = logging.getLogger(__name__)

PSD_CLIP = 1e-9
SPECTRAL_CUT_TOL = 1e-12
DENSE_SOFT_CAP = 8


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """A concrete matrix plus a record of whether it passed the Hermiticity test"""

    matrix: NDArray[np.complex128]
    hermitian: bool

    @classmethod
    def from_matrix(cls, matrix: NDArray, hermitian: Optional[bool] = None) -> "DenseOperator":
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {matrix.shape}")
        dim = matrix.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise DimensionError(f"dimension {dim} is not a power of two >= 2")
        if hermitian is None:
            hermitian = bool(np.max(np.abs(matrix - matrix.conj().T)) <= HERMITIAN_TOL)
        if hermitian:
            matrix = (matrix + matrix.conj().T) / 2
        matrix.setflags(write=False)
        return cls(matrix=matrix, hermitian=hermitian)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.dim.bit_length() - 1

    def eigh(self) -> Tuple[NDArray[np.float64], NDArray[np.complex128]]:
        if not self.hermitian:
            raise SpectralError("spectral routine needs a Hermitian operator")
        return np.linalg.eigh(self.matrix)

    def eigenvalues(self) -> NDArray[np.float64]:
        if not self.hermitian:
            raise SpectralError("spectral routine needs a Hermitian operator")
        return np.linalg.eigvalsh(self.matrix)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator.from_matrix(self.matrix @ other.matrix)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator.from_matrix(self.matrix + other.matrix)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator.from_matrix(self.matrix - other.matrix)

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(matrix=self.matrix.conj().T, hermitian=self.hermitian)

    def scaled(self, factor: complex) -> "DenseOperator":
        return DenseOperator.from_matrix(factor * self.matrix)


def identity(n: int) -> DenseOperator:
    return DenseOperator(matrix=np.eye(2**n, dtype=np.complex128), hermitian=True)


def _string_matrix(s: Tuple[int, ...]) -> NDArray[np.complex128]:
    return reduce(np.kron, (SIGMA[digit] for digit in s))


def synthesize(operand: Observable) -> DenseOperator:
    """Σ_s T̂(s) σ_{s_1} ⊗ ⋯ ⊗ σ_{s_n}, site 1 being the most significant tensor factor"""
    n = operand.n
    if n > DENSE_SOFT_CAP:
        logger.warning(f"Synthesizing a dense operator at n={n}, above the soft cap {DENSE_SOFT_CAP}")
    dim = 2**n
    if len(operand) < 2**n:
        matrix = np.zeros((dim, dim), dtype=np.complex128)
        for s, value in operand.items():
            matrix += value * _string_matrix(s)
    else:
        tensor = np.zeros((4,) * n, dtype=np.complex128)
        for s, value in operand.items():
            tensor[s] = value
        for _ in range(n):
            tensor = np.tensordot(tensor, SIGMA, axes=([0], [0]))
        order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
        matrix = tensor.transpose(order).reshape(dim, dim)
    return DenseOperator.from_matrix(matrix, hermitian=operand.is_hermitian())


def analyze(operator: DenseOperator, n: Optional[int] = None) -> Observable:
    """T̂(s) = 2^{-n} tr(σ_s M), contracted one site at a time"""
    if n is None:
        n = operator.n
    if operator.dim != 2**n:
        raise DimensionError(f"dimension {operator.dim} does not match n={n}")
    # X[i_1..i_n, j_1..j_n] = M[j, i]; interleave to (i_1, j_1, i_2, j_2, ...)
    tensor = operator.matrix.T.reshape((2,) * (2 * n))
    order = [axis for k in range(n) for axis in (k, n + k)]
    tensor = tensor.transpose(order)
    for _ in range(n):
        tensor = np.tensordot(tensor, SIGMA, axes=([0, 1], [1, 2]))
    tensor = tensor / 2**n
    kept = np.argwhere(np.abs(tensor) >= STORAGE_EPS)
    terms = {tuple(index): complex(tensor[tuple(index)]) for index in kept.tolist()}
    if operator.hermitian:
        terms = {s: complex(value.real, 0.0) for s, value in terms.items()}
    return Observable(n, terms, validate=False)


def normalized_trace(operator: DenseOperator) -> complex:
    return complex(np.trace(operator.matrix)) / operator.dim


def singular_values(operator: DenseOperator) -> NDArray[np.float64]:
    if operator.hermitian:
        return np.abs(np.linalg.eigvalsh(operator.matrix))
    return np.linalg.svd(operator.matrix, compute_uv=False)


def schatten_norm(operator: DenseOperator, p: float) -> float:
    """(2^{-n} Σ_i s_i^p)^{1/p}; ‖𝟙‖_p = 1 for every p"""
    if p < 1:
        raise ContractError(f"Schatten exponent must be >= 1, got {p}")
    values = singular_values(operator)
    if np.isinf(p):
        return float(values.max())
    return float(np.mean(values**p) ** (1.0 / p))


def variance(operator: DenseOperator) -> float:
    """tr(|T|²) − |tr T|², both traces normalized"""
    second_moment = float(np.sum(np.abs(operator.matrix) ** 2)) / operator.dim
    return max(0.0, second_moment - abs(normalized_trace(operator)) ** 2)


def functional_calculus(operator: DenseOperator, function: Callable[[NDArray], NDArray]) -> DenseOperator:
    eigenvalues, vectors = operator.eigh()
    image = np.asarray(function(eigenvalues))
    matrix = (vectors * image) @ vectors.conj().T
    return DenseOperator.from_matrix(matrix, hermitian=bool(np.isrealobj(image) or np.allclose(image.imag, 0.0)))


def psd_margin(operator: DenseOperator) -> float:
    """Smallest eigenvalue; nonnegative exactly when the operator is PSD"""
    return float(operator.eigenvalues()[0])


def is_psd(operator: DenseOperator, tol: float = PSD_CLIP) -> bool:
    return operator.hermitian and psd_margin(operator) >= -tol


def matrix_sqrt(operator: DenseOperator) -> DenseOperator:
    eigenvalues, vectors = operator.eigh()
    if eigenvalues[0] < -PSD_CLIP:
        raise SpectralError(f"square root of an operator with eigenvalue {eigenvalues[0]:.3e} < 0")
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return DenseOperator.from_matrix((vectors * roots) @ vectors.conj().T, hermitian=True)


def absolute_value(operator: DenseOperator) -> DenseOperator:
    """|M| = (M*M)^{1/2}"""
    if operator.hermitian:
        return functional_calculus(operator, np.abs)
    gram = DenseOperator.from_matrix(operator.matrix.conj().T @ operator.matrix, hermitian=True)
    return matrix_sqrt(gram)


def spectral_indicator(
    operator: DenseOperator, lo: float, hi: float = np.inf, closed: bool = True
) -> DenseOperator:
    """Projection onto eigenvalues in [lo, hi) (closed) or (lo, hi) (open at lo)"""
    if not operator.hermitian:
        raise SpectralError("spectral projection needs a Hermitian operator")
    eigenvalues, vectors = operator.eigh()
    if closed:
        mask = eigenvalues >= lo - SPECTRAL_CUT_TOL
    else:
        mask = eigenvalues > lo + SPECTRAL_CUT_TOL
    if np.isfinite(hi):
        mask &= eigenvalues < hi - SPECTRAL_CUT_TOL
    kept = vectors[:, mask]
    return DenseOperator.from_matrix(kept @ kept.conj().T, hermitian=True)


def spectral_count(operator: DenseOperator, lo: float, closed: bool = True) -> float:
    """Normalized trace of the spectral indicator of [lo, ∞) or (lo, ∞)"""
    eigenvalues = operator.eigenvalues()
    if closed:
        return float(np.count_nonzero(eigenvalues >= lo - SPECTRAL_CUT_TOL)) / operator.dim
    return float(np.count_nonzero(eigenvalues > lo + SPECTRAL_CUT_TOL)) / operator.dim


def layercake_trace(weight: DenseOperator, positive: DenseOperator, upper: float = np.inf) -> complex:
    """∫_0^upper tr(S·1_{(t,∞)}(T)) dt as an exact finite sum over the spectrum of T

    Between consecutive eigenvalues of T the integrand is constant, so each
    segment contributes its width times the weight of the eigenvectors above it.
    """
    eigenvalues, vectors = positive.eigh()
    if eigenvalues[0] < -PSD_CLIP:
        raise SpectralError(f"layer-cake integral needs T >= 0, smallest eigenvalue {eigenvalues[0]:.3e}")
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    if weight.dim != positive.dim:
        raise DimensionError(f"dimensions differ: {weight.dim} vs {positive.dim}")
    diagonal = np.einsum("ik,ij,jk->k", vectors.conj(), weight.matrix, vectors) / positive.dim
    suffix = np.cumsum(diagonal[::-1])[::-1]
    capped = np.minimum(eigenvalues, upper)
    widths = np.diff(np.concatenate(([0.0], capped)))
    return complex(np.sum(widths * suffix))
