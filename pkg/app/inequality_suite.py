"""Registry front end: run one check on one instance, estimate a free constant over an ensemble."""

import logging
import math
from typing import Any, Dict, List, Mapping, Optional, Tuple

from app import ensembles
from app.errors import ContractError, UnknownCheckError
from app.hypercube_ops import (
    is_balanced_projection,
    is_contraction,
    is_positive,
    is_projection,
    is_unit_interval,
)
from app.inequality_checks import REGISTRY, CheckEntry, Evaluation, Instance
from app.models import CheckRecord, CheckStatus, ConstantEstimate, ConstantRole, EnsembleSpec, Hypothesis, Tolerances
from app.pauli_core import Observable
from app.verdict import RATIO_FLOOR, make_record

logger = logging.getLogger(__name__)

CALIBRATION_SLACK = 1.01


def get_entry(check_id: str) -> CheckEntry:
    entry = REGISTRY.get(check_id)
    if entry is None:
        raise UnknownCheckError(f"unknown check id {check_id!r}")
    return entry


def list_checks() -> List[CheckEntry]:
    return list(REGISTRY.values())


def merged_params(entry: CheckEntry, params: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    """Defaults overlaid with the caller's values; unknown keys are a contract error"""
    params = dict(params or {})
    unknown = sorted(set(params) - set(entry.defaults))
    if unknown:
        raise ContractError(f"check {entry.check_id} takes {sorted(entry.defaults)}, got unknown {unknown}")
    return {**entry.defaults, **params}


def satisfies(operand: Observable, hypothesis: Hypothesis) -> bool:
    match hypothesis:
        case Hypothesis.NONE | Hypothesis.ANY:
            return True
        case Hypothesis.HERMITIAN:
            return operand.is_hermitian()
        case Hypothesis.CONTRACTION:
            return is_contraction(operand)
        case Hypothesis.SELF_ADJOINT_CONTRACTION:
            return operand.is_hermitian() and is_contraction(operand)
        case Hypothesis.UNIT_INTERVAL:
            return is_unit_interval(operand)
        case Hypothesis.POSITIVE:
            return is_positive(operand)
        case Hypothesis.PROJECTION:
            return is_projection(operand)
        case Hypothesis.BALANCED_PROJECTION:
            return is_balanced_projection(operand)
        case _:
            raise ContractError(f"unsupported hypothesis {hypothesis}")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _split_params(params: Mapping[str, Any]) -> Tuple[Dict[str, float], str]:
    """Numeric params go in the record, everything else is spelled out in the note"""
    numeric = {key: float(value) for key, value in params.items() if _is_number(value)}
    other = [f"{key}={value}" for key, value in sorted(params.items()) if not _is_number(value) and value is not None]
    return numeric, "; ".join(other)


def evaluate(
    check_id: str, operand: Optional[Observable], params: Optional[Mapping[str, Any]] = None, instance_id: str = ""
) -> Tuple[CheckEntry, Dict[str, Any], Evaluation]:
    entry = get_entry(check_id)
    merged = merged_params(entry, params)
    if entry.needs_observable:
        if operand is None:
            raise ContractError(f"check {check_id} needs an observable")
        if not satisfies(operand, entry.hypothesis):
            note = f"hypothesis {entry.hypothesis.value} not satisfied"
            return entry, merged, Evaluation(0.0, 0.0, status=CheckStatus.SKIPPED_PRECONDITION, note=note)
        instance: Optional[Instance] = Instance(operand, instance_id)
    else:
        instance = None
    return entry, merged, entry.func(instance, merged)


def run_check(
    check_id: str,
    operand: Optional[Observable],
    params: Optional[Mapping[str, Any]] = None,
    instance_id: str = "",
    tolerances: Optional[Tolerances] = None,
) -> CheckRecord:
    """Evaluate one registry entry on one instance and judge it"""
    entry, merged, evaluation = evaluate(check_id, operand, params, instance_id)
    return judge(entry, merged, evaluation, instance_id, tolerances)


def judge(
    entry: CheckEntry,
    merged: Mapping[str, Any],
    evaluation: Evaluation,
    instance_id: str = "",
    tolerances: Optional[Tolerances] = None,
) -> CheckRecord:
    numeric, described = _split_params(merged)
    numeric.update(evaluation.extra)
    note = "; ".join(part for part in (described, evaluation.note) if part)
    if evaluation.status in (CheckStatus.SKIPPED_PRECONDITION, CheckStatus.DEGENERATE):
        label = instance_id or "<anonymous>"
        logger.debug(f"{entry.check_id} on {label}: {evaluation.status.value} ({evaluation.note})")
    return make_record(
        entry.check_id,
        evaluation.lhs,
        evaluation.rhs,
        instance_id=instance_id,
        params=numeric,
        status=evaluation.status,
        note=note,
        tolerances=tolerances,
    )


def _critical(entry: CheckEntry, evaluation: Evaluation) -> Optional[float]:
    """The constant this instance forces, evaluated with the constant set to 1"""
    if evaluation.critical is not None:
        return evaluation.critical
    match entry.role:
        case ConstantRole.RHS:
            return evaluation.lhs / evaluation.rhs if evaluation.rhs > RATIO_FLOOR else None
        case ConstantRole.LHS:
            return evaluation.rhs / evaluation.lhs if evaluation.lhs > RATIO_FLOOR else math.inf
        case _:
            return None


def estimate_constant(
    check_id: str,
    spec: EnsembleSpec,
    params: Optional[Mapping[str, Any]] = None,
    tolerances: Optional[Tolerances] = None,
) -> Tuple[ConstantEstimate, List[CheckRecord]]:
    """Supremum of the constant-free ratio over an ensemble, with its witness

    The free constant is pinned to 1 while evaluating. For constants on the
    right (and in the exponent) the implied value is the largest critical
    constant seen; for constants on the left it is the smallest.
    """
    entry = get_entry(check_id)
    pinned = dict(params or {})
    if entry.constant is not None:
        pinned[entry.constant] = 1.0
    records: List[CheckRecord] = []
    sup_ratio: Optional[float] = None
    witness: Optional[str] = None
    criticals: List[float] = []
    skipped = 0
    for instance_id, operand in ensembles.make_labeled(spec):
        _, merged, evaluation = evaluate(check_id, operand, pinned, instance_id)
        record = judge(entry, merged, evaluation, instance_id, tolerances)
        records.append(record)
        if record.status in (CheckStatus.SKIPPED_PRECONDITION, CheckStatus.DEGENERATE):
            skipped += 1
            continue
        if record.ratio is not None and (sup_ratio is None or record.ratio > sup_ratio):
            sup_ratio, witness = record.ratio, instance_id
        critical = _critical(entry, evaluation)
        if critical is not None:
            criticals.append(critical)
    evaluated = len(records) - skipped
    if evaluated == 0:
        logger.warning(f"{check_id} over {spec.label()}: every instance was skipped or degenerate")
    implied: Optional[float] = None
    if criticals:
        implied = min(criticals) if entry.role == ConstantRole.LHS else max(criticals)
    logger.info(f"{check_id} over {spec.label()}: sup ratio {sup_ratio}, implied constant {implied}")
    estimate = ConstantEstimate(
        check_id=check_id,
        constant_role=entry.role,
        sup_ratio=sup_ratio,
        implied_constant=implied,
        witness=witness,
        evaluated=evaluated,
        skipped=skipped,
    )
    return estimate, records


def calibrated_params(estimate: ConstantEstimate, params: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Params with the free constant set just past the estimate (×1.01, or ÷1.01 on the left)"""
    entry = get_entry(estimate.check_id)
    calibrated = dict(params or {})
    if entry.constant is None or estimate.implied_constant is None:
        return calibrated
    match entry.role:
        case ConstantRole.LHS:
            calibrated[entry.constant] = estimate.implied_constant / CALIBRATION_SLACK
        case _:
            calibrated[entry.constant] = estimate.implied_constant * CALIBRATION_SLACK
    return calibrated
