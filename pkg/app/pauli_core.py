"""Sparse Pauli-coefficient algebra on the quantum hypercube (M_2)^{⊗n}.

Sites are numbered 1..n in every public function. Digits 0..3 label the basis
matrices σ_0 = 𝟙, σ_1 = diag(1, -1), σ_2 = [[0, 1], [1, 0]] and
σ_3 = [[0, i], [-i, 0]]; note that σ_3 is minus the usual Pauli Y, so the
single-site product table below is generated from the matrices rather than
copied from a textbook.
"""

import json
import logging
from itertools import product
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from app.errors import ContractError, DimensionError
from app.models import ObservablePayload, PauliTerm

logger = logging.getLogger(__name__)

PauliIndex = Tuple[int, ...]

STORAGE_EPS = 1e-14
HERMITIAN_TOL = 1e-10
_PRODUCT_CHUNK = 1 << 21

SIGMA: NDArray[np.complex128] = np.array(
    [
        [[1, 0], [0, 1]],
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
    ],
    dtype=np.complex128,
)
SIGMA.setflags(write=False)

_UNIT_PHASES = np.array([1, -1, 1j, -1j], dtype=np.complex128)


def _generate_product_table() -> Tuple[NDArray[np.complex128], NDArray[np.int64]]:
    phases = np.zeros((4, 4), dtype=np.complex128)
    symbols = np.zeros((4, 4), dtype=np.int64)
    for a, b in product(range(4), repeat=2):
        prod = SIGMA[a] @ SIGMA[b]
        # every σ_c is Hermitian with σ_c² = 𝟙, so tr(σ_c·prod)/2 is the coefficient on σ_c
        coefficients = np.einsum("cij,ji->c", SIGMA, prod) / 2
        c = int(np.argmax(np.abs(coefficients)))
        phase = _UNIT_PHASES[int(np.argmin(np.abs(_UNIT_PHASES - coefficients[c])))]
        if not np.allclose(prod, phase * SIGMA[c], atol=1e-12):
            raise RuntimeError(f"sigma_{a} sigma_{b} is not a unit multiple of a basis matrix")
        phases[a, b] = phase
        symbols[a, b] = c
    phases.setflags(write=False)
    symbols.setflags(write=False)
    return phases, symbols


PRODUCT_PHASE, PRODUCT_SYMBOL = _generate_product_table()


def _check_index(s: PauliIndex, n: int) -> None:
    if len(s) != n:
        raise DimensionError(f"index {s} has length {len(s)}, expected {n}")
    for digit in s:
        if digit not in (0, 1, 2, 3):
            raise ContractError(f"index {s} contains digit {digit} outside {{0,1,2,3}}")


def _as_digit(digit, s) -> int:
    """Integral digits only; 1.0 is accepted, 1.5 and True are not"""
    if isinstance(digit, (bool, np.bool_)) or not isinstance(digit, (int, float, np.integer, np.floating)):
        raise ContractError(f"index {s} contains non-integer digit {digit!r}")
    if int(digit) != digit:
        raise ContractError(f"index {s} contains non-integer digit {digit!r}")
    return int(digit)


def _check_site(j: int, n: int) -> None:
    if not 1 <= j <= n:
        raise ContractError(f"site {j} outside 1..{n}")


class Observable:
    """Immutable element of M_{2^n} stored as its nonzero Fourier coefficients"""

    __slots__ = ("_n", "_terms")

    def __init__(self, n: int, terms: Optional[Mapping[PauliIndex, complex]] = None, *, validate: bool = True):
        if n < 1:
            raise DimensionError(f"site count must be positive, got {n}")
        cleaned: Dict[PauliIndex, complex] = {}
        for s, value in (terms or {}).items():
            key = tuple(_as_digit(digit, s) for digit in s) if validate else s
            if validate:
                _check_index(key, n)
            coefficient = complex(value)
            if abs(coefficient) >= STORAGE_EPS:
                cleaned[key] = coefficient
        object.__setattr__(self, "_n", n)
        object.__setattr__(self, "_terms", cleaned)

    def __setattr__(self, name, value):
        raise AttributeError("Observable is immutable")

    @property
    def n(self) -> int:
        return self._n

    @property
    def terms(self) -> Mapping[PauliIndex, complex]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliIndex]:
        return iter(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, s: PauliIndex) -> complex:
        return self._terms.get(tuple(s), 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        """The basis is Hermitian, so T = T* exactly when every coefficient is real"""
        return all(abs(value.imag) <= tol for value in self._terms.values())

    def to_arrays(self) -> Tuple[NDArray[np.int64], NDArray[np.complex128]]:
        """Digits (m, n) and coefficients (m,) in lexicographic index order"""
        keys = sorted(self._terms)
        digits = np.array(keys, dtype=np.int64).reshape(len(keys), self._n)
        coefficients = np.array([self._terms[key] for key in keys], dtype=np.complex128)
        return digits, coefficients

    def allclose(self, other: "Observable", atol: float = 1e-10) -> bool:
        return self._n == other.n and max_abs_difference(self, other) <= atol

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Observable):
            return NotImplemented
        return self._n == other.n and self._terms == dict(other.items())

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        shown = ", ".join(f"{''.join(map(str, s))}: {c:.6g}" for s, c in sorted(self._terms.items())[:6])
        more = ", ..." if len(self._terms) > 6 else ""
        return f"Observable(n={self._n}, {{{shown}{more}}})"


def zero(n: int) -> Observable:
    return Observable(n)


def identity(n: int) -> Observable:
    return Observable(n, {(0,) * n: 1.0}, validate=False)


def pauli_string(s: PauliIndex, coefficient: complex = 1.0) -> Observable:
    return Observable(len(s), {tuple(s): coefficient})


def single_site(n: int, j: int, alpha: int, coefficient: complex = 1.0) -> Observable:
    """coefficient · σ_{e_j^α}"""
    _check_site(j, n)
    return pauli_string(index_insert((0,) * n, j, alpha), coefficient)


def support(s: PauliIndex) -> FrozenSet[int]:
    return frozenset(k + 1 for k, digit in enumerate(s) if digit != 0)


def support_size(s: PauliIndex) -> int:
    return sum(1 for digit in s if digit != 0)


def index_insert(s: PauliIndex, j: int, alpha: int) -> PauliIndex:
    """s ⊕ e_j^α, defined only when s_j = 0"""
    _check_site(j, len(s))
    if alpha not in (1, 2, 3):
        raise ContractError(f"symbol {alpha} must be one of 1, 2, 3")
    if s[j - 1] != 0:
        raise ContractError(f"s ⊕ e_{j}^{alpha} needs s_{j} = 0, index is {s}")
    return s[: j - 1] + (alpha,) + s[j:]


def index_remove(s: PauliIndex, j: int, alpha: int) -> PauliIndex:
    """s ⊖ e_j^α, defined only when s_j = α"""
    _check_site(j, len(s))
    if alpha not in (1, 2, 3) or s[j - 1] != alpha:
        raise ContractError(f"s ⊖ e_{j}^{alpha} needs s_{j} = {alpha}, index is {s}")
    return s[: j - 1] + (0,) + s[j:]


def single_site_product(a: int, b: int) -> Tuple[complex, int]:
    """σ_a σ_b = phase · σ_c"""
    if a not in (0, 1, 2, 3) or b not in (0, 1, 2, 3):
        raise ContractError(f"symbols must lie in 0..3, got {a}, {b}")
    return complex(PRODUCT_PHASE[a, b]), int(PRODUCT_SYMBOL[a, b])


def product_table() -> List[List[Tuple[complex, int]]]:
    return [[single_site_product(a, b) for b in range(4)] for a in range(4)]


def _require_same_sites(left: Observable, right: Observable) -> int:
    if left.n != right.n:
        raise DimensionError(f"site counts differ: {left.n} vs {right.n}")
    return left.n


def multiply(left: Observable, right: Observable) -> Observable:
    """Coefficient-space product with phases accumulated site by site"""
    n = _require_same_sites(left, right)
    if left.is_zero() or right.is_zero():
        return zero(n)
    left_digits, left_coefficients = left.to_arrays()
    right_digits, right_coefficients = right.to_arrays()
    place = 4 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    rows_per_chunk = max(1, _PRODUCT_CHUNK // (len(right_coefficients) * n))
    accumulated: Dict[int, complex] = {}
    for start in range(0, len(left_coefficients), rows_per_chunk):
        block = left_digits[start : start + rows_per_chunk]
        symbols = PRODUCT_SYMBOL[block[:, None, :], right_digits[None, :, :]]
        phases = np.prod(PRODUCT_PHASE[block[:, None, :], right_digits[None, :, :]], axis=2)
        values = (left_coefficients[start : start + rows_per_chunk, None] * right_coefficients[None, :] * phases).ravel()
        codes = (symbols.reshape(-1, n) * place).sum(axis=1)
        unique, inverse = np.unique(codes, return_inverse=True)
        inverse = inverse.ravel()
        real = np.bincount(inverse, weights=values.real, minlength=len(unique))
        imag = np.bincount(inverse, weights=values.imag, minlength=len(unique))
        for code, re_part, im_part in zip(unique.tolist(), real.tolist(), imag.tolist()):
            accumulated[code] = accumulated.get(code, 0j) + complex(re_part, im_part)
    codes = np.array(list(accumulated), dtype=np.int64)
    digits = (codes[:, None] // place[None, :]) % 4
    return Observable(
        n, {tuple(row): value for row, value in zip(digits.tolist(), accumulated.values())}, validate=False
    )


def add(left: Observable, right: Observable) -> Observable:
    n = _require_same_sites(left, right)
    terms = dict(left.items())
    for s, value in right.items():
        terms[s] = terms.get(s, 0j) + value
    return Observable(n, terms, validate=False)


def scale(operand: Observable, factor: complex) -> Observable:
    return Observable(operand.n, {s: factor * value for s, value in operand.items()}, validate=False)


def subtract(left: Observable, right: Observable) -> Observable:
    return add(left, scale(right, -1.0))


def adjoint(operand: Observable) -> Observable:
    return Observable(operand.n, {s: value.conjugate() for s, value in operand.items()}, validate=False)


def inner_product(left: Observable, right: Observable) -> complex:
    """Σ_s conj(Ŝ(s)) T̂(s), the normalized Hilbert-Schmidt pairing"""
    _require_same_sites(left, right)
    smaller, larger = (left, right) if len(left) <= len(right) else (right, left)
    total = sum(smaller.coefficient(s).conjugate() * larger.coefficient(s) for s in smaller)
    return complex(total) if smaller is left else complex(total).conjugate()


def trace(operand: Observable) -> complex:
    return operand.coefficient((0,) * operand.n)


def degree(operand: Observable) -> int:
    return max((support_size(s) for s in operand), default=0)


def l2_norm_squared(operand: Observable) -> float:
    return float(sum(abs(value) ** 2 for value in operand.terms.values()))


def max_abs_difference(left: Observable, right: Observable) -> float:
    _require_same_sites(left, right)
    keys = set(left) | set(right)
    return max((abs(left.coefficient(s) - right.coefficient(s)) for s in keys), default=0.0)


def to_payload(operand: Observable) -> ObservablePayload:
    terms = [
        PauliTerm(s=list(s), re=float(value.real), im=float(value.imag)) for s, value in sorted(operand.items())
    ]
    return ObservablePayload(n=operand.n, terms=terms)


def from_payload(payload: ObservablePayload) -> Observable:
    terms: Dict[PauliIndex, complex] = {}
    for term in payload.terms:
        key = tuple(term.s)
        terms[key] = terms.get(key, 0j) + complex(term.re, term.im)
    return Observable(payload.n, terms)


def dumps(operand: Observable) -> str:
    """Byte-stable JSON: terms sorted lexicographically by index"""
    return json.dumps(to_payload(operand).model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> Observable:
    return from_payload(ObservablePayload.model_validate_json(text))
