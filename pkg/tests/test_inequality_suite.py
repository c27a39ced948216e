import math

import pytest

from app import ensembles, inequality_suite, pauli_core
from app.errors import ContractError, UnknownCheckError
from app.inequality_checks import REGISTRY, calculus_integral
from app.inequality_suite import CALIBRATION_SLACK, calibrated_params, estimate_constant, run_check
from app.models import CheckStatus, ConstantRole, EnsembleKind, EnsembleSpec
from app.pauli_core import Observable

REGISTERED = {
    "log_sobolev",
    "modified_log_sobolev",
    "dim_free_kkl",
    "kkl_lp",
    "talagrand_influence",
    "rwz_talagrand",
    "isoperimetric",
    "eldan_gross",
    "kkl_geometric",
    "kkl_dichotomy",
    "kkl_index",
    "stability",
    "buser",
    "local_reverse_poincare",
    "gradient_estimate",
    "curvature_i",
    "curvature_ii",
    "curvature_iii",
    "fundamental_identity",
    "high_degree",
    "moment_comparison",
    "hypercontractivity_sample",
    "deviation",
    "paley_zygmund",
    "kk18",
    "key_prop",
    "main_spectral",
    "dgood",
    "lehd",
    "comlemma",
    "restricted_comlemma",
    "cor_ik1",
    "prrr",
    "zrr",
    "dlili",
    "tav",
    "restriction_sampling",
    "lem_cjc",
    "key_identity8",
    "lem_tj1",
    "y1j",
    "calculus_bound",
    "poincare",
}


@pytest.fixture()
def dictator() -> Observable:
    return ensembles.classical(3, {"function": "dictator"})


@pytest.fixture()
def crossing_pair() -> Observable:
    """σ_(1,2) + σ_(2,3): two strings anticommuting at both sites"""
    return Observable(2, {(1, 2): 1.0, (2, 3): 1.0})


@pytest.fixture()
def swap() -> Observable:
    return Observable(2, {(0, 0): 0.5, (1, 1): 0.5, (2, 2): 0.5, (3, 3): 0.5})


def test_registry_is_complete():
    """Every catalogued inequality has an entry"""
    assert REGISTERED <= set(REGISTRY)
    assert all(entry.anchor for entry in inequality_suite.list_checks())


def test_constant_roles_are_consistent():
    """Checks with a free constant declare where it sits, and it has a default"""
    for entry in inequality_suite.list_checks():
        if entry.constant is None:
            assert entry.role == ConstantRole.NONE
        else:
            assert entry.role != ConstantRole.NONE
            assert entry.constant in entry.defaults


def test_unknown_check_id():
    """Unknown ids raise"""
    with pytest.raises(UnknownCheckError):
        run_check("no_such_check", pauli_core.identity(2))


def test_unknown_params_are_rejected(dictator):
    """Parameters outside the check's defaults are a contract error"""
    with pytest.raises(ContractError):
        run_check("poincare", dictator, {"x": 1.0})


def test_out_of_range_param(dictator):
    """p outside [1, 2) for an L_p influence check"""
    with pytest.raises(ContractError):
        run_check("kkl_lp", dictator, {"p": 2.0})


def test_observable_required(dictator):
    """Checks on an instance need one"""
    with pytest.raises(ContractError):
        run_check("poincare", None)


def test_unmet_hypothesis_is_skipped():
    """A non-projection is skipped by a projection-only check"""
    record = run_check("eldan_gross", pauli_core.single_site(2, 1, 2), instance_id="boolean")
    assert record.status == CheckStatus.SKIPPED_PRECONDITION
    assert record.ratio is None
    assert "projection" in record.note


def test_record_carries_params_and_extras(dictator):
    """Numeric params and checker extras land in the record"""
    record = run_check("eldan_gross", dictator, instance_id="dictator")
    assert record.params["K"] == 1.0
    assert record.params["M"] == pytest.approx(0.25)
    assert record.instance_id == "dictator"


def test_eldan_gross_on_dictator(dictator):
    """var·√log(1 + 1/M) / ‖|∇T|‖_1 = √log 5 / 2 for the dictator"""
    record = run_check("eldan_gross", dictator)
    assert record.status == CheckStatus.HOLDS
    assert record.lhs == pytest.approx(0.25 * math.sqrt(math.log(5.0)))
    assert record.rhs == pytest.approx(0.5)
    assert record.ratio == pytest.approx(math.sqrt(math.log(5.0)) / 2.0)


def test_kk18_on_subcubes():
    """W_{=1} = M for the subcube, well under the level-1 bound"""
    for k in (2, 3, 4):
        operand = ensembles.subcube(max(k, 3), k)
        record = run_check("kk18", operand, {"d": 1})
        mass = k * 4.0**-k
        assert record.status == CheckStatus.HOLDS
        assert record.lhs == pytest.approx(mass)
        assert record.rhs == pytest.approx(12.0 * math.e**2 * mass * math.log(1.0 / mass))


def test_kk18_gated_on_geometric_mass():
    """M(T) = 1/4 exceeds e^{-2}, so the codimension-1 subcube is skipped"""
    record = run_check("kk18", ensembles.subcube(3, 1), {"d": 1})
    assert record.status == CheckStatus.SKIPPED_PRECONDITION


def test_key_prop_sees_level_two_mass_by_default():
    """With J unset every subset is tried, so level-2 terms straddling J and J^c count

    For the codimension-5 subcube on 6 sites, J meeting [5] in a sites carries
    a(5 − a)·4^{-5} on the left; the worst ratio is at a = 1.
    """
    operand = ensembles.subcube(6, 5)
    record = run_check("key_prop", operand, {"d": 2})
    assert record.status == CheckStatus.HOLDS
    assert record.lhs == pytest.approx(4.0 * 4.0**-5)
    mass = 4.0**-5
    assert record.rhs == pytest.approx(6.0 * math.e**2 * mass * math.log(1.0 / mass) ** 2)
    assert record.note.startswith("J=")


def test_key_prop_full_set_is_empty_above_level_one():
    """J = [n] leaves no room for the d − 1 outside sites"""
    record = run_check("key_prop", ensembles.subcube(6, 5), {"d": 2, "J": "all"})
    assert record.lhs == 0.0


def test_calculus_bound_closed_form_at_degree_two():
    """For d = 2 the normalized integral is e(t0² + 2e·t0 + 2e²)/t0²"""
    for factor in (1.1, 2.0, 5.0):
        t0 = factor * 4.0 * math.e
        record = run_check("calculus_bound", None, {"d": 2, "t0": t0})
        expected = math.e * (t0**2 + 2.0 * math.e * t0 + 2.0 * math.e**2) / t0**2
        assert record.lhs == pytest.approx(expected, rel=1e-6)
        assert record.rhs == pytest.approx(5.0 * math.e)
        assert record.status == CheckStatus.HOLDS


def test_calculus_bound_defaults_and_threshold():
    """t0 = 0 picks 1.1·(4e)^{d/2}; a t0 below the threshold is skipped"""
    record = run_check("calculus_bound", None, {"d": 1})
    assert record.params["t0_used"] == pytest.approx(1.1 * math.sqrt(4.0 * math.e))
    assert record.status == CheckStatus.HOLDS
    assert run_check("calculus_bound", None, {"d": 2, "t0": 1.0}).status == CheckStatus.SKIPPED_PRECONDITION
    assert calculus_integral(1, 4.0) > 0.0


def test_curvature_identity_holds_with_derivative_correction(crossing_pair):
    """The identity with the Σ_j d_j(|d_jT|²) term holds on noncommuting input"""
    record = run_check("curvature_i", crossing_pair)
    assert record.status == CheckStatus.HOLDS
    assert record.lhs <= 1e-12


def test_curvature_identity_without_correction_fails(crossing_pair):
    """Dropping the correction leaves a coefficient gap of 4"""
    record = run_check("curvature_i", crossing_pair, {"stated": 1})
    assert record.status == CheckStatus.VIOLATED
    assert record.lhs == pytest.approx(4.0)


def test_curvature_identity_without_correction_on_classical_input():
    """On diagonal T the shorter form is exact"""
    operand = ensembles.classical(3, {"function": "majority"})
    assert run_check("curvature_i", operand, {"stated": 1}).status == CheckStatus.HOLDS


def test_curvature_sign_negative_control(dictator):
    """sign = +1 fails on any nonconstant T"""
    assert run_check("curvature_i", dictator, {"sign": 1.0}).status == CheckStatus.VIOLATED


def test_local_reverse_poincare_small_time(crossing_pair):
    """Below t = ln2/2 the operator has eigenvalue 2(1 − a)(1 − 2a), a = e^{-2t}"""
    a = math.exp(-0.2)
    record = run_check("local_reverse_poincare", crossing_pair, {"t": 0.1})
    assert record.status == CheckStatus.VIOLATED
    assert record.lhs == pytest.approx(-2.0 * (1.0 - a) * (1.0 - 2.0 * a), abs=1e-9)
    assert run_check("local_reverse_poincare", crossing_pair, {"t": 0.5}).status == CheckStatus.HOLDS


def test_dlili_fails_on_swap(swap):
    """‖d_1 SWAP‖_∞ = 3/2 against ‖SWAP‖_∞ = 1"""
    record = run_check("dlili", swap)
    assert record.status == CheckStatus.VIOLATED
    assert record.note.startswith("(i)")
    assert record.lhs == pytest.approx(1.5)
    assert record.rhs == pytest.approx(1.0)


def test_dlili_holds_on_unit_interval():
    """0 ≤ T ≤ 1 satisfies both derivative bounds"""
    for index in range(4):
        operand = ensembles.random_contraction(3, ensembles.instance_rng(8, index))
        assert run_check("dlili", operand).status == CheckStatus.HOLDS


def test_main_spectral_vacuous(dictator):
    """M = 1/4 leaves an empty degree range"""
    record = run_check("main_spectral", dictator)
    assert record.status == CheckStatus.HOLDS
    assert record.lhs == 0.0
    assert "vacuous" in record.note


def test_poincare_is_tight_on_degree_one():
    """var = Inf exactly on degree ≤ 1; strict for higher degree"""
    operand = ensembles.random_low_degree(4, 1, ensembles.instance_rng(2, 0))
    record = run_check("poincare", operand)
    assert record.status == CheckStatus.HOLDS
    assert record.ratio == pytest.approx(1.0, abs=1e-12)
    assert run_check("poincare", pauli_core.pauli_string((1, 2))).ratio == pytest.approx(0.5)


def test_semigroup_bounds_at_p_two():
    """Buser and the gradient estimate hold at p = 2"""
    for index in range(5):
        operand = ensembles.random_low_degree(3, 3, ensembles.instance_rng(4, index))
        assert run_check("buser", operand, {"p": 2.0}).status == CheckStatus.HOLDS
        assert run_check("gradient_estimate", operand, {"p": 2.0}).status == CheckStatus.HOLDS


def test_exact_identities_on_random_input():
    """The restriction and scaffold identities hold to the identity tolerance"""
    operand = ensembles.random_low_degree(3, 3, ensembles.instance_rng(6, 0))
    for check_id in ("tav", "lem_cjc", "key_identity8", "cor_ik1"):
        record = run_check(check_id, operand)
        assert record.status == CheckStatus.HOLDS, check_id


def test_explicit_subset_param(dictator):
    """J given as a list pins one subset and is spelled out in the note"""
    record = run_check("cor_ik1", dictator, {"J": [1, 2]})
    assert record.status == CheckStatus.HOLDS
    assert "J=[1, 2]" in record.note
    with pytest.raises(ContractError):
        run_check("cor_ik1", dictator, {"J": "some"})


def test_estimate_constant_on_the_right(dictator):
    """The implied K is the largest lhs/rhs; calibrating just above it makes every instance hold"""
    spec = EnsembleSpec(kind=EnsembleKind.CLASSICAL, n=3, params={"function": "dictator"})
    estimate, records = estimate_constant("eldan_gross", spec, {"K": 7.0})
    assert len(records) == 1
    assert estimate.constant_role == ConstantRole.RHS
    assert estimate.implied_constant == pytest.approx(math.sqrt(math.log(5.0)) / 2.0)
    assert estimate.sup_ratio == pytest.approx(estimate.implied_constant)
    assert estimate.witness == records[0].instance_id
    params = calibrated_params(estimate)
    assert params["K"] == pytest.approx(estimate.implied_constant * CALIBRATION_SLACK)
    assert run_check("eldan_gross", dictator, params).ratio == pytest.approx(1.0 / CALIBRATION_SLACK)


def test_estimate_constant_on_the_left(dictator):
    """For a constant on the left the implied C is the smallest rhs/lhs"""
    spec = EnsembleSpec(kind=EnsembleKind.CLASSICAL, n=3, params={"function": "dictator"})
    estimate, _ = estimate_constant("kkl_geometric", spec)
    expected = 0.5 / (math.sqrt(math.log(3.0)) / 3.0)
    assert estimate.constant_role == ConstantRole.LHS
    assert estimate.implied_constant == pytest.approx(expected)
    params = calibrated_params(estimate)
    assert params["C"] == pytest.approx(expected / CALIBRATION_SLACK)
    assert run_check("kkl_geometric", dictator, params).status == CheckStatus.HOLDS


def test_estimate_constant_when_everything_is_skipped():
    """No projection in the ensemble: nothing evaluated, nothing implied"""
    spec = EnsembleSpec(kind=EnsembleKind.PAULI_STRING, n=2, count=3, seed=1)
    estimate, records = estimate_constant("eldan_gross", spec)
    assert len(records) == 3
    assert estimate.evaluated == 0
    assert estimate.skipped == 3
    assert estimate.implied_constant is None
    assert estimate.sup_ratio is None
    assert calibrated_params(estimate) == {}


def test_calibrated_params_without_constant(dictator):
    """Checks with no free constant pass params through"""
    spec = EnsembleSpec(kind=EnsembleKind.CLASSICAL, n=3, params={"function": "dictator"})
    estimate, _ = estimate_constant("poincare", spec)
    assert estimate.implied_constant is None
    assert calibrated_params(estimate, {"a": 1}) == {"a": 1}
