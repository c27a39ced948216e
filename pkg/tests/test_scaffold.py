import numpy as np
import pytest

from app import ensembles, hypercube_ops, scaffold
from app.errors import ContractError
from app.hypercube_ops import SubsetJ
from app.pauli_core import Observable
from app.scaffold import LiftKind


def random_cases(count: int, max_n: int = 4):
    """Seeded (T, J, j, d) tuples with j ∈ J"""
    rng = np.random.default_rng(17)
    for index in range(count):
        n = int(rng.integers(2, max_n + 1))
        operand = ensembles.random_low_degree(n, n, ensembles.instance_rng(17, index))
        members = [k for k in range(1, n + 1) if rng.random() < 0.5]
        j = int(rng.integers(1, n + 1))
        subset = SubsetJ.of(n, set(members) | {j})
        d = int(rng.integers(1, n + 1))
        yield operand, subset, j, d


def test_moved_index():
    """s^{j↷} moves the digit at j to the new last site"""
    assert scaffold.moved((1, 2, 3), 2) == (1, 0, 3, 2)
    assert scaffold.moved((0, 2), 1) == (0, 2, 0)


def test_lift_and_move_to_last():
    """T ⊗ 𝟙 and Ψ_j(T ⊗ 𝟙) relabel indices"""
    operand = Observable(2, {(1, 2): 1.0, (0, 3): 2.0})
    lifted = scaffold.lift(operand)
    assert lifted.kind == LiftKind.LIFT
    assert dict(lifted.observable.items()) == {(1, 2, 0): 1.0, (0, 3, 0): 2.0}
    moved = scaffold.move_to_last(operand, 1)
    assert dict(moved.observable.items()) == {(0, 2, 1): 1.0, (0, 3, 0): 2.0}


def test_lifted_observable_site_check():
    """A lifted observable must have one more site than its source"""
    with pytest.raises(ContractError):
        scaffold.LiftedObservable(Observable(2), 2, LiftKind.LIFT)


def test_build_tj_selects_degree_and_support():
    """T_j keeps s ⊕ e_j^α with supp(s) ⊆ J^c of size d − 1, moved to site n+1"""
    operand = Observable(3, {(1, 0, 0): 1.0, (2, 0, 3): 2.0, (3, 1, 0): 3.0, (0, 0, 1): 4.0})
    subset = SubsetJ.of(3, [1, 2])
    assert dict(scaffold.build_tj(operand, subset, 1, 1).observable.items()) == {(0, 0, 0, 1): 1.0}
    assert dict(scaffold.build_tj(operand, subset, 1, 2).observable.items()) == {(0, 0, 3, 2): 2.0}
    with pytest.raises(ContractError):
        scaffold.build_tj(operand, SubsetJ.of(3, [2]), 1, 1)
    with pytest.raises(ContractError):
        scaffold.build_tj(operand, subset, 1, 0)


def test_build_aj_and_copies():
    """A_j sums the three symbols at j; T̃_j copies s_j to the last site"""
    assert dict(scaffold.build_aj(2, 2).observable.items()) == {(0, 1, 0): 1.0, (0, 2, 0): 1.0, (0, 3, 0): 1.0}
    operand = Observable(2, {(2, 1): 1.0, (0, 1): 2.0})
    assert dict(scaffold.build_ttilde(operand, 1).observable.items()) == {(2, 1, 2): 1.0, (0, 1, 0): 2.0}
    assert dict(scaffold.build_tcopy(operand, 1).observable.items()) == {(0, 1, 2): 1.0, (0, 1, 0): 2.0}


def test_cjc_identity_exact():
    """E(A_j T̃_j) = E(d_{n+1} T_copy,j) over J^c ∪ {n+1}"""
    for operand, subset, j, _ in random_cases(40):
        assert scaffold.cjc_deviation(operand, subset, j) <= 1e-9


def test_cjc_requires_j_in_subset():
    """j must belong to J"""
    with pytest.raises(ContractError):
        scaffold.cjc_deviation(ensembles.subcube(2, 1), SubsetJ.of(2, [2]), 1)


def test_key_identity8_exact():
    """‖d_{n+1} T_copy,j‖_1 = ‖d_j T‖_1"""
    for operand, _, j, _ in random_cases(30):
        copy_norm, derivative_norm = scaffold.key_identity8_gap(operand, j)
        assert copy_norm == pytest.approx(derivative_norm, abs=1e-9)


def test_tj_trace_identity_on_hermitian_inputs():
    """‖T_j‖_2² = (tr[T̄_j A_j T̃_j])² for Hermitian T"""
    checked = 0
    for operand, subset, j, d in random_cases(100, max_n=5):
        result = scaffold.tj_trace_identity(operand, subset, j, d)
        if result is None:
            continue
        checked += 1
        mass, pairing_squared = result
        assert mass == pytest.approx(pairing_squared, abs=1e-9)
    assert checked > 30


def test_tj_trace_identity_none_for_empty_tj():
    """T_j = 0 gives no identity to check"""
    dictator = ensembles.classical(3, {"function": "dictator"})
    assert scaffold.tj_trace_identity(dictator, SubsetJ.of(3, [1]), 1, 2) is None


def test_y1j_bound_holds():
    """The layer-cake integral is at most t0·‖d_j T‖_1"""
    for operand, subset, j, d in random_cases(15, max_n=3):
        result = scaffold.y1j_bound(operand, subset, j, d, 1.0)
        if result is None:
            continue
        integral, bound = result
        assert integral <= bound + 1e-9
    with pytest.raises(ContractError):
        scaffold.y1j_bound(ensembles.subcube(2, 1), SubsetJ.of(2, [1]), 1, 1, 0.0)


def test_outer_subset():
    """J^c ∪ {n+1} on n+1 sites"""
    assert list(scaffold.outer_subset(SubsetJ.of(3, [1, 3]))) == [2, 4]
    assert hypercube_ops.conditional_expectation(
        scaffold.lift(ensembles.subcube(3, 1)).observable, scaffold.outer_subset(SubsetJ.of(3, [2]))
    ).allclose(scaffold.lift(ensembles.subcube(3, 1)).observable)
