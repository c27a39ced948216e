import numpy as np
import pytest

from app import ensembles, hypercube_ops, pauli_core
from app.errors import UnknownCheckError
from app.inequality_suite import run_check
from app.models import EnsembleKind, EnsembleSpec, WitnessSettings
from app.witness_service import (
    WitnessService,
    conjugate,
    fresh_string,
    jitter_coefficients,
    perturbation_for,
    permute_basis,
)

SMALL = WitnessSettings(restarts=2, steps=5, step_size=0.3)


def test_perturbation_choice():
    """Each ensemble kind gets a move that keeps its hypothesis"""
    assert perturbation_for(EnsembleKind.CLASSICAL) is permute_basis
    assert perturbation_for(EnsembleKind.SUBCUBE) is permute_basis
    assert perturbation_for(EnsembleKind.RANDOM_LOW_DEGREE) is jitter_coefficients
    assert perturbation_for(EnsembleKind.PAULI_STRING) is fresh_string
    assert perturbation_for(EnsembleKind.RANDOM_PROJECTION) is conjugate


def test_conjugate_keeps_spectrum():
    """U T U* has the spectrum of T"""
    operand = ensembles.random_projection(3, 4, ensembles.instance_rng(0, 0))
    moved = conjugate(operand, np.random.default_rng(1), 0.3)
    assert np.allclose(hypercube_ops.spectrum(moved), hypercube_ops.spectrum(operand), atol=1e-9)
    assert not moved.allclose(operand)


def test_permute_basis_keeps_classical_input_diagonal():
    """Permuting basis states maps diagonal operators to diagonal operators"""
    operand = ensembles.classical(3, {"function": "majority"})
    moved = permute_basis(operand, np.random.default_rng(2), 0.5)
    assert all(all(digit in (0, 1) for digit in s) for s in moved)
    assert hypercube_ops.is_projection(moved)


def test_jitter_keeps_support_and_norm():
    """Jitter only touches existing coefficients and renormalizes"""
    operand = ensembles.random_low_degree(3, 2, ensembles.instance_rng(0, 1))
    moved = jitter_coefficients(operand, np.random.default_rng(3), 0.3)
    assert set(moved) <= set(operand)
    assert pauli_core.l2_norm_squared(moved) == pytest.approx(1.0)


def test_search_improves_on_the_start():
    """Hill climbing never ends below the best starting ratio"""
    spec = EnsembleSpec(kind=EnsembleKind.RANDOM_LOW_DEGREE, n=3, params={"d": 2}, seed=4)
    result = WitnessService.search("poincare", spec, settings=SMALL, seed=1)
    starts = ensembles.make_labeled(spec.model_copy(update={"count": SMALL.restarts}))
    start_best = max(run_check("poincare", operand).ratio for _, operand in starts)
    assert result.found
    assert result.ratio >= start_best
    assert result.ratio <= 1.0 + 1e-9
    assert result.evaluations == SMALL.restarts * (SMALL.steps + 1)


def test_search_is_reproducible():
    """Same seed, same witness"""
    spec = EnsembleSpec(kind=EnsembleKind.RANDOM_PROJECTION, n=2, seed=3)
    first = WitnessService.search("eldan_gross", spec, settings=SMALL, seed=5)
    second = WitnessService.search("eldan_gross", spec, settings=SMALL, seed=5)
    assert first.ratio == second.ratio
    assert first.observable is not None and second.observable is not None
    assert first.observable.allclose(second.observable)


def test_search_without_judged_instances(tmp_path):
    """Nothing satisfies the hypothesis: no witness, nothing written"""
    spec = EnsembleSpec(kind=EnsembleKind.PAULI_STRING, n=2, seed=1)
    result = WitnessService.search("eldan_gross", spec, settings=SMALL)
    assert not result.found
    assert WitnessService.write(result, tmp_path / "w.json") is None
    assert WitnessService.summary(result)["ratio"] is None


def test_write_round_trips(tmp_path):
    """The witness file loads back as the same Observable"""
    spec = EnsembleSpec(kind=EnsembleKind.CLASSICAL, n=3, params={"function": "dictator"})
    result = WitnessService.search("eldan_gross", spec, settings=SMALL)
    path = WitnessService.write(result, tmp_path / "nested" / "w.json")
    assert path is not None
    assert result.observable is not None
    assert pauli_core.loads(path.read_text()).allclose(result.observable)
    summary = WitnessService.summary(result)
    assert summary["check_id"] == "eldan_gross"
    assert summary["status"] in ("holds", "violated")


def test_unknown_check():
    """The check id is validated before searching"""
    with pytest.raises(UnknownCheckError):
        WitnessService.search("nope", EnsembleSpec(kind=EnsembleKind.SUBCUBE, n=2))
