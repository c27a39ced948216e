"""Turning a computed (lhs, rhs) pair into a CheckRecord."""

from typing import Dict, Optional

from app.models import CheckRecord, CheckStatus, Tolerances

RATIO_FLOOR = 1e-300
DEFAULT_TOLERANCES = Tolerances()


def is_violated(lhs: float, rhs: float, tolerances: Optional[Tolerances] = None) -> bool:
    """lhs > rhs·(1 + rel) + abs"""
    tolerances = tolerances or DEFAULT_TOLERANCES
    return lhs > rhs * (1.0 + tolerances.relative) + tolerances.absolute


def make_record(
    check_id: str,
    lhs: float,
    rhs: float,
    *,
    instance_id: str = "",
    params: Optional[Dict[str, float]] = None,
    status: Optional[CheckStatus] = None,
    note: str = "",
    tolerances: Optional[Tolerances] = None,
) -> CheckRecord:
    lhs, rhs = float(lhs), float(rhs)
    ratio = lhs / rhs if rhs > RATIO_FLOOR else None
    if status is None:
        status = CheckStatus.VIOLATED if is_violated(lhs, rhs, tolerances) else CheckStatus.HOLDS
    return CheckRecord(
        check_id=check_id,
        instance_id=instance_id,
        params={key: float(value) for key, value in (params or {}).items()},
        lhs=lhs,
        rhs=rhs,
        ratio=ratio,
        status=status,
        note=note,
    )
