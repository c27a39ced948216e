import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np
import scipy.linalg

from app import dense_ops, ensembles, pauli_core
from app.dense_ops import DenseOperator
from app.inequality_suite import get_entry, run_check
from app.models import CheckRecord, CheckStatus, EnsembleKind, EnsembleSpec, Tolerances, WitnessSettings
from app.pauli_core import Observable

logger = logging.getLogger(__name__)

Perturbation = Callable[[Observable, np.random.Generator, float], Observable]


@dataclass
class WitnessResult:
    check_id: str
    ratio: float
    observable: Optional[Observable]
    record: Optional[CheckRecord]
    start_id: str
    evaluations: int

    @property
    def found(self) -> bool:
        return self.observable is not None


def score(record: CheckRecord) -> float:
    """Constant-free ratio; unjudged records never win"""
    if record.status not in (CheckStatus.HOLDS, CheckStatus.VIOLATED) or record.ratio is None:
        return -math.inf
    return record.ratio


def conjugate(operand: Observable, rng: np.random.Generator, step: float) -> Observable:
    """U T U* with U = exp(i·step·H) for a random Hermitian H; the spectrum is unchanged"""
    dim = 2**operand.n
    gaussian = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    hermitian = (gaussian + gaussian.conj().T) / (2 * math.sqrt(dim))
    unitary = scipy.linalg.expm(1j * step * hermitian)
    matrix = dense_ops.synthesize(operand).matrix
    rotated = DenseOperator.from_matrix(unitary @ matrix @ unitary.conj().T, hermitian=operand.is_hermitian())
    return dense_ops.analyze(rotated, operand.n)


def permute_basis(operand: Observable, rng: np.random.Generator, step: float) -> Observable:
    """Swap a few computational basis states; diagonal inputs stay diagonal"""
    dim = 2**operand.n
    order = np.arange(dim)
    for _ in range(max(1, round(step * dim / 2))):
        a, b = rng.choice(dim, size=2, replace=False)
        order[[a, b]] = order[[b, a]]
    matrix = dense_ops.synthesize(operand).matrix[np.ix_(order, order)]
    return dense_ops.analyze(DenseOperator.from_matrix(matrix, hermitian=operand.is_hermitian()), operand.n)


def jitter_coefficients(operand: Observable, rng: np.random.Generator, step: float) -> Observable:
    """Gaussian noise on the existing real coefficients, renormalized to ‖T‖_2 = 1"""
    keys = sorted(operand)
    values = np.array([operand.coefficient(s).real for s in keys])
    values = values + step * rng.standard_normal(len(keys)) / math.sqrt(max(len(keys), 1))
    norm = np.linalg.norm(values)
    if norm == 0.0:
        return operand
    return Observable(operand.n, dict(zip(keys, (values / norm).tolist())), validate=False)


def fresh_string(operand: Observable, rng: np.random.Generator, step: float) -> Observable:
    while True:
        digits = tuple(int(d) for d in rng.integers(0, 4, size=operand.n))
        if any(digits):
            return pauli_core.pauli_string(digits)


def perturbation_for(kind: EnsembleKind) -> Perturbation:
    match kind:
        case EnsembleKind.CLASSICAL | EnsembleKind.SUBCUBE:
            return permute_basis
        case EnsembleKind.RANDOM_LOW_DEGREE:
            return jitter_coefficients
        case EnsembleKind.PAULI_STRING:
            return fresh_string
        case _:
            return conjugate


class WitnessService:
    """Service for searching an ensemble's neighbourhood for extremal instances"""

    @staticmethod
    def search(
        check_id: str,
        spec: EnsembleSpec,
        params: Optional[Mapping[str, Any]] = None,
        settings: Optional[WitnessSettings] = None,
        tolerances: Optional[Tolerances] = None,
        seed: int = 0,
    ) -> WitnessResult:
        """Random-restart hill climbing on the constant-free ratio lhs/rhs"""
        get_entry(check_id)
        settings = settings or WitnessSettings()
        perturb = perturbation_for(spec.kind)
        starts = ensembles.make_labeled(spec.model_copy(update={"count": settings.restarts}))
        best = WitnessResult(check_id, -math.inf, None, None, "", 0)
        evaluations = 0
        for restart, (start_id, current) in enumerate(starts):
            rng = np.random.default_rng([seed, restart])
            record = run_check(check_id, current, params, start_id, tolerances)
            evaluations += 1
            current_score = score(record)
            for _ in range(settings.steps):
                candidate = perturb(current, rng, settings.step_size)
                candidate_record = run_check(check_id, candidate, params, start_id, tolerances)
                evaluations += 1
                if score(candidate_record) > current_score:
                    current, record, current_score = candidate, candidate_record, score(candidate_record)
            logger.debug(f"Restart {restart} from {start_id} reached ratio {current_score}")
            if current_score > best.ratio:
                best = WitnessResult(check_id, current_score, current, record, start_id, 0)
        best.evaluations = evaluations
        if best.found:
            label = spec.label()
            logger.info(f"Witness search for {check_id} over {label}: best ratio {best.ratio} from {best.start_id}")
        else:
            logger.warning(f"Witness search for {check_id} over {spec.label()} found no judged instance")
        return best

    @staticmethod
    def write(result: WitnessResult, path: Path) -> Optional[Path]:
        """Write the best instance as Observable JSON"""
        if result.observable is None:
            return None
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(pauli_core.dumps(result.observable) + "\n", encoding="utf-8")
        logger.info(f"Wrote witness {path}")
        return path

    @staticmethod
    def summary(result: WitnessResult) -> Dict[str, Any]:
        return {
            "check_id": result.check_id,
            "ratio": result.ratio if result.found else None,
            "start": result.start_id,
            "evaluations": result.evaluations,
            "status": result.record.status.value if result.record is not None else None,
        }
