import json
from itertools import product

import numpy as np
import pytest

from app import dense_ops, pauli_core
from app.errors import ContractError, DimensionError
from app.pauli_core import Observable


def random_observable(rng: np.random.Generator, n: int, terms: int = 6) -> Observable:
    values = {}
    for _ in range(terms):
        s = tuple(int(d) for d in rng.integers(0, 4, size=n))
        values[s] = complex(rng.standard_normal(), rng.standard_normal())
    return Observable(n, values)


def test_product_table_matches_matrices():
    """Every single-site product is a unit phase times a basis matrix"""
    for a, b in product(range(4), repeat=2):
        phase, c = pauli_core.single_site_product(a, b)
        assert abs(abs(phase) - 1) < 1e-15
        assert np.allclose(pauli_core.SIGMA[a] @ pauli_core.SIGMA[b], phase * pauli_core.SIGMA[c], atol=1e-14)


def test_product_table_specific_entries():
    """σ_1σ_2 = −iσ_3 under the sign convention for σ_3"""
    assert pauli_core.single_site_product(1, 2) == (-1j, 3)
    assert pauli_core.single_site_product(2, 1) == (1j, 3)
    assert pauli_core.single_site_product(3, 3) == (1, 0)
    assert pauli_core.single_site_product(0, 2) == (1, 2)


def test_single_site_product_rejects_bad_symbol():
    """Symbols outside 0..3 are a contract error"""
    with pytest.raises(ContractError):
        pauli_core.single_site_product(4, 0)


def test_observable_drops_tiny_coefficients():
    """Coefficients below the storage epsilon are not stored"""
    operand = Observable(2, {(0, 1): 1e-15, (1, 0): 0.5})
    assert len(operand) == 1
    assert operand.coefficient((1, 0)) == 0.5
    assert operand.coefficient((0, 1)) == 0


def test_observable_validates_indices():
    """Wrong lengths and digits are rejected"""
    with pytest.raises(DimensionError):
        Observable(2, {(0, 1, 0): 1.0})
    with pytest.raises(ContractError):
        Observable(2, {(0, 4): 1.0})
    with pytest.raises(DimensionError):
        Observable(0)


def test_observable_rejects_fractional_digits():
    """A digit like 1.5 is an error, not a truncation to σ_1"""
    with pytest.raises(ContractError):
        Observable(2, {(0, 1.5): 1.0})
    with pytest.raises(ContractError):
        Observable(1, {(True,): 1.0})
    assert Observable(2, {(0.0, 3.0): 1.0}).coefficient((0, 3)) == 1.0
    assert Observable(2, {(np.int64(2), 0): 1.0}).coefficient((2, 0)) == 1.0


def test_observable_is_immutable():
    """Attributes cannot be reassigned"""
    operand = pauli_core.identity(2)
    with pytest.raises(AttributeError):
        operand._n = 3  # type: ignore[misc]


def test_multiply_matches_dense_product():
    """Coefficient-space multiplication agrees with the matrix product"""
    rng = np.random.default_rng(7)
    for n in (1, 2, 3):
        left = random_observable(rng, n)
        right = random_observable(rng, n)
        expected = dense_ops.synthesize(left).matrix @ dense_ops.synthesize(right).matrix
        actual = dense_ops.synthesize(pauli_core.multiply(left, right)).matrix
        assert np.allclose(actual, expected, atol=1e-10)


def test_multiply_site_mismatch():
    """Operands on different site counts cannot be multiplied"""
    with pytest.raises(DimensionError):
        pauli_core.multiply(pauli_core.identity(1), pauli_core.identity(2))


def test_multiply_by_zero():
    """Products with zero are zero"""
    assert pauli_core.multiply(pauli_core.zero(2), pauli_core.identity(2)).is_zero()


def test_pauli_strings_square_to_identity():
    """σ_s² = 𝟙 for every string"""
    for s in product(range(4), repeat=2):
        square = pauli_core.multiply(pauli_core.pauli_string(s), pauli_core.pauli_string(s))
        assert square.allclose(pauli_core.identity(2))


def test_add_scale_subtract():
    """Linear operations act coefficientwise"""
    a = pauli_core.pauli_string((1, 0), 2.0)
    b = pauli_core.pauli_string((0, 1), 3.0)
    total = pauli_core.add(a, b)
    assert total.coefficient((1, 0)) == 2.0
    assert total.coefficient((0, 1)) == 3.0
    assert pauli_core.subtract(total, total).is_zero()
    assert pauli_core.scale(a, 0.5).coefficient((1, 0)) == 1.0


def test_adjoint_conjugates_coefficients():
    """The basis is Hermitian, so T* conjugates coefficients"""
    operand = Observable(1, {(3,): 1j, (0,): 2.0})
    adjoint = pauli_core.adjoint(operand)
    assert adjoint.coefficient((3,)) == -1j
    assert not operand.is_hermitian()
    assert pauli_core.add(operand, adjoint).is_hermitian()


def test_inner_product_and_trace():
    """⟨S, T⟩ = Σ conj(Ŝ) T̂ and tr T = T̂(0)"""
    left = Observable(1, {(0,): 1.0, (1,): 1j})
    right = Observable(1, {(1,): 2.0, (0,): 3.0})
    assert pauli_core.inner_product(left, right) == pytest.approx(3.0 - 2j)
    assert pauli_core.trace(right) == 3.0


def test_degree_and_support():
    """degree is the largest support size"""
    operand = Observable(4, {(1, 0, 2, 0): 1.0, (0, 0, 0, 3): 1.0})
    assert pauli_core.degree(operand) == 2
    assert pauli_core.support((1, 0, 2, 0)) == frozenset({1, 3})
    assert pauli_core.degree(pauli_core.zero(3)) == 0


def test_index_insert_and_remove():
    """s ⊕ e_j^α and its inverse"""
    s = (1, 0, 2)
    inserted = pauli_core.index_insert(s, 2, 3)
    assert inserted == (1, 3, 2)
    assert pauli_core.index_remove(inserted, 2, 3) == s
    with pytest.raises(ContractError):
        pauli_core.index_insert(s, 1, 2)
    with pytest.raises(ContractError):
        pauli_core.index_remove(s, 1, 2)
    with pytest.raises(ContractError):
        pauli_core.index_insert(s, 4, 1)


def test_single_site_builder():
    """single_site places the symbol at the requested site"""
    operand = pauli_core.single_site(3, 2, 1, 0.5)
    assert dict(operand.items()) == {(0, 1, 0): 0.5}


def test_json_is_sorted_and_stable():
    """dumps sorts terms lexicographically and loads restores the observable"""
    operand = Observable(2, {(3, 0): 1.0 - 2j, (0, 1): 0.25})
    text = pauli_core.dumps(operand)
    payload = json.loads(text)
    assert payload["n"] == 2
    assert [term["s"] for term in payload["terms"]] == [[0, 1], [3, 0]]
    assert pauli_core.loads(text) == operand
    assert pauli_core.dumps(pauli_core.loads(text)) == text


def test_loads_merges_duplicate_terms():
    """Repeated indices in a payload are summed"""
    text = '{"n": 1, "terms": [{"s": [1], "re": 0.5}, {"s": [1], "re": 0.25, "im": 1.0}]}'
    assert pauli_core.loads(text).coefficient((1,)) == pytest.approx(0.75 + 1j)
