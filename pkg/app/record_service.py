import json
import logging
from typing import List, Optional, Sequence
from sqlmodel import select, desc
from app.database import get_session
from app.models import CheckRecord, CheckStatus, StoredCheckRecord, VerificationRun

logger = logging.getLogger(__name__)


class RecordService:
    """Service for the run-history store"""

    @staticmethod
    def save_run(verb: str, config_digest: str, seed: int, records: Sequence[CheckRecord]) -> Optional[VerificationRun]:
        """Persist one run and its check records"""
        with get_session() as session:
            run = VerificationRun(
                verb=verb,
                config_digest=config_digest,
                seed=str(seed),
                record_count=len(records),
                violated_count=sum(1 for record in records if record.status == CheckStatus.VIOLATED),
            )
            session.add(run)
            session.commit()
            session.refresh(run)
            if run.id is None:
                return None

            for record in records:
                session.add(
                    StoredCheckRecord(
                        run_id=run.id,
                        check_id=record.check_id,
                        instance_id=record.instance_id,
                        status=record.status,
                        lhs=record.lhs,
                        rhs=record.rhs,
                        ratio=record.ratio,
                        params_json=json.dumps(record.params, sort_keys=True),
                        note=record.note[:2000],
                    )
                )
            session.commit()
            session.refresh(run)
            logger.info(f"Stored run {run.id} ({verb}) with {len(records)} records")
            return run

    @staticmethod
    def get_recent_runs(limit: Optional[int] = None) -> List[VerificationRun]:
        """Get runs, newest first"""
        with get_session() as session:
            query = select(VerificationRun).order_by(desc(VerificationRun.created_at), desc(VerificationRun.id))

            if limit is not None:
                query = query.limit(limit)

            return list(session.exec(query).all())

    @staticmethod
    def get_run(run_id: int) -> Optional[VerificationRun]:
        """Get a run by ID"""
        with get_session() as session:
            return session.get(VerificationRun, run_id)

    @staticmethod
    def get_run_records(run_id: int) -> List[CheckRecord]:
        """Get the stored records of a run in their original order"""
        with get_session() as session:
            query = select(StoredCheckRecord).where(StoredCheckRecord.run_id == run_id).order_by(StoredCheckRecord.id)
            return [
                CheckRecord(
                    check_id=stored.check_id,
                    instance_id=stored.instance_id,
                    params=json.loads(stored.params_json),
                    lhs=stored.lhs,
                    rhs=stored.rhs,
                    ratio=stored.ratio,
                    status=stored.status,
                    note=stored.note,
                )
                for stored in session.exec(query).all()
            ]

    @staticmethod
    def get_violated_records(run_id: int) -> List[CheckRecord]:
        """Get only the violated records of a run"""
        return [record for record in RecordService.get_run_records(run_id) if record.status == CheckStatus.VIOLATED]
