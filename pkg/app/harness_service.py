import csv
import hashlib
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app import dense_ops, ensembles, hypercube_ops, pauli_core, restriction_mc
from app.errors import PairFailure, QHCError
from app.inequality_suite import estimate_constant, get_entry, run_check
from app.models import CheckRecord, CheckSpec, CheckStatus, ConstantEstimate, EnsembleSpec, RunConfig, Tolerances

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.csv"
CONSTANTS_FILE = "constants.csv"
TRENDS_FILE = "trends.csv"

# (check_id, params, instance_id, observable JSON or None, tolerances)
PairTask = Tuple[str, Dict[str, Any], str, Optional[str], Dict[str, float]]


def fmt(value: Optional[float]) -> str:
    """17 significant digits; empty for a missing value"""
    return "" if value is None else format(value, ".17g")


def record_line(record: CheckRecord) -> str:
    return json.dumps(record.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def record_sort_key(record: CheckRecord) -> Tuple[str, str, str]:
    return record.check_id, record.instance_id, json.dumps(record.params, sort_keys=True)


def config_digest(config: RunConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def derive_seed(run_seed: int, spec_seed: int) -> int:
    """One independent 64-bit stream per (run seed, ensemble seed)"""
    return int(np.random.SeedSequence([run_seed, spec_seed]).generate_state(1, dtype=np.uint64)[0])


def seeded(spec: EnsembleSpec, run_seed: int) -> EnsembleSpec:
    return spec.model_copy(update={"seed": derive_seed(run_seed, spec.seed)})


def _run_pair(task: PairTask) -> CheckRecord:
    check_id, params, instance_id, payload, tolerances = task
    operand = None if payload is None else pauli_core.loads(payload)
    try:
        return run_check(check_id, operand, params, instance_id, Tolerances(**tolerances))
    except QHCError as error:
        logger.error(f"Check {check_id} failed on {instance_id}: {error}")
        raise PairFailure(check_id, instance_id, str(error)) from error


@dataclass
class VerifyOutcome:
    records: List[CheckRecord]
    failed_unconditional: List[CheckRecord] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed_unconditional else 0


@dataclass
class ConstantsOutcome:
    estimates: List[Tuple[EnsembleSpec, ConstantEstimate]]
    records: List[CheckRecord]
    trends: List[Tuple[str, int, Optional[float], int]]


class HarnessService:
    """Service for running checks over ensembles and writing reports"""

    @staticmethod
    def instances(config: RunConfig) -> List[Tuple[EnsembleSpec, str, pauli_core.Observable]]:
        """Draw every ensemble with its seed derived from the run seed"""
        drawn = []
        for spec in config.ensembles:
            derived = seeded(spec, config.seed)
            labeled = ensembles.make_labeled(derived)
            logger.info(f"Ensemble {derived.label()} gave {len(labeled)} instances")
            drawn.extend((derived, instance_id, operand) for instance_id, operand in labeled)
        return drawn

    @staticmethod
    def tasks(config: RunConfig) -> List[PairTask]:
        """Every (check, instance) pair; checks without an observable run once"""
        for check in config.checks:
            get_entry(check.check_id)
        drawn = HarnessService.instances(config)
        tolerances = config.tolerances.model_dump()
        tasks: List[PairTask] = []
        for check in config.checks:
            if not get_entry(check.check_id).needs_observable:
                tasks.append((check.check_id, dict(check.params), "", None, tolerances))
                continue
            for _, instance_id, operand in drawn:
                tasks.append((check.check_id, dict(check.params), instance_id, pauli_core.dumps(operand), tolerances))
        return tasks

    @staticmethod
    def run_pairs(tasks: Sequence[PairTask], jobs: int = 1) -> List[CheckRecord]:
        """Evaluate pairs, in a process pool when jobs > 1, and sort the records"""
        logger.info(f"Evaluating {len(tasks)} (check, instance) pairs with {jobs} worker(s)")
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                records = list(pool.map(_run_pair, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
        else:
            records = [_run_pair(task) for task in tasks]
        return sorted(records, key=record_sort_key)

    @staticmethod
    def verify(config: RunConfig) -> VerifyOutcome:
        """Run every configured check over every instance"""
        records = HarnessService.run_pairs(HarnessService.tasks(config), config.parallelism)
        failed = [
            record
            for record in records
            if record.status == CheckStatus.VIOLATED and get_entry(record.check_id).unconditional
        ]
        for record in failed:
            logger.warning(f"{record.check_id} violated on {record.instance_id}: lhs={record.lhs!r} rhs={record.rhs!r}")
        return VerifyOutcome(records=records, failed_unconditional=failed)

    @staticmethod
    def constants(config: RunConfig) -> ConstantsOutcome:
        """Estimate each check's free constant over each ensemble, plus per-n trends"""
        estimates: List[Tuple[EnsembleSpec, ConstantEstimate]] = []
        records: List[CheckRecord] = []
        site_counts: Dict[str, int] = {}
        for check in config.checks:
            for spec in config.ensembles:
                derived = seeded(spec, config.seed)
                try:
                    estimate, found = estimate_constant(check.check_id, derived, check.params, config.tolerances)
                except QHCError as error:
                    logger.error(f"Constant estimate for {check.check_id} over {derived.label()} failed: {error}")
                    raise PairFailure(check.check_id, derived.label(), str(error)) from error
                estimates.append((derived, estimate))
                records.extend(found)
                site_counts.update({record.instance_id: derived.n for record in found})
        records.sort(key=record_sort_key)
        return ConstantsOutcome(estimates=estimates, records=records, trends=trend_rows(records, site_counts))

    @staticmethod
    def write_records(records: Iterable[CheckRecord], out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / RECORDS_FILE
        path.write_text("".join(record_line(record) + "\n" for record in records), encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def write_summary(records: Sequence[CheckRecord], out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / SUMMARY_FILE
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["check_id", "count", "holds", "violated", "skipped", "sup_ratio"])
            for row in summary_rows(records):
                writer.writerow([row[0], row[1], row[2], row[3], row[4], fmt(row[5])])
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def write_constants(outcome: ConstantsOutcome, out_dir: Path) -> List[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        constants_path = out_dir / CONSTANTS_FILE
        with constants_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(
                ["check_id", "sup_ratio", "witness", "ensemble", "constant_role", "implied_constant", "evaluated",
                 "skipped"]
            )
            for spec, estimate in outcome.estimates:
                writer.writerow(
                    [
                        estimate.check_id,
                        fmt(estimate.sup_ratio),
                        estimate.witness or "",
                        spec.label(),
                        estimate.constant_role.value,
                        fmt(estimate.implied_constant),
                        estimate.evaluated,
                        estimate.skipped,
                    ]
                )
        trends_path = out_dir / TRENDS_FILE
        with trends_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["check_id", "n", "sup_ratio", "evaluated"])
            for check_id, n, sup_ratio, evaluated in outcome.trends:
                writer.writerow([check_id, n, fmt(sup_ratio), evaluated])
        logger.info(f"Wrote {constants_path} and {trends_path}")
        return [constants_path, trends_path]


def _judged(record: CheckRecord) -> bool:
    return record.status in (CheckStatus.HOLDS, CheckStatus.VIOLATED)


def summary_rows(records: Sequence[CheckRecord]) -> List[Tuple[str, int, int, int, int, Optional[float]]]:
    """(check_id, count, holds, violated, skipped, sup_ratio); degenerate records count as skipped"""
    grouped: Dict[str, List[CheckRecord]] = defaultdict(list)
    for record in records:
        grouped[record.check_id].append(record)
    rows = []
    for check_id in sorted(grouped):
        group = grouped[check_id]
        ratios = [r.ratio for r in group if _judged(r) and r.ratio is not None and not math.isnan(r.ratio)]
        rows.append(
            (
                check_id,
                len(group),
                sum(1 for r in group if r.status == CheckStatus.HOLDS),
                sum(1 for r in group if r.status == CheckStatus.VIOLATED),
                sum(1 for r in group if not _judged(r)),
                max(ratios) if ratios else None,
            )
        )
    return rows


def trend_rows(
    records: Sequence[CheckRecord], site_counts: Dict[str, int]
) -> List[Tuple[str, int, Optional[float], int]]:
    """Supremum of the constant-free ratio per (check, n)"""
    grouped: Dict[Tuple[str, int], List[CheckRecord]] = defaultdict(list)
    for record in records:
        if record.instance_id in site_counts:
            grouped[(record.check_id, site_counts[record.instance_id])].append(record)
    rows = []
    for (check_id, n), group in sorted(grouped.items()):
        ratios = [r.ratio for r in group if _judged(r) and r.ratio is not None]
        rows.append((check_id, n, max(ratios) if ratios else None, sum(1 for r in group if _judged(r))))
    return rows


def load_config(path: Path) -> RunConfig:
    """Parse and validate a JSON run configuration"""
    return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))


def check_specs(check_ids: Iterable[str]) -> List[CheckSpec]:
    return [CheckSpec(check_id=check_id) for check_id in check_ids]


@dataclass
class SelftestResult:
    name: str
    passed: bool
    detail: str


def _selftest_product_table() -> SelftestResult:
    sigma = pauli_core.SIGMA
    worst = 0.0
    for a in range(4):
        for b in range(4):
            phase, c = pauli_core.single_site_product(a, b)
            worst = max(worst, float(np.max(np.abs(sigma[a] @ sigma[b] - phase * sigma[c]))))
    return SelftestResult("product_table", worst <= 1e-12, f"max entry deviation {worst:.3e}")


def _selftest_fourier_round_trip() -> SelftestResult:
    worst = 0.0
    for index in range(20):
        rng = ensembles.instance_rng(0, index)
        n = 1 + index % 5
        operand = ensembles.random_low_degree(n, n, rng)
        restored = dense_ops.analyze(dense_ops.synthesize(operand), n)
        worst = max(worst, pauli_core.max_abs_difference(operand, restored))
    return SelftestResult("fourier_round_trip", worst <= 1e-10, f"max coefficient deviation {worst:.3e}")


def _selftest_tav() -> SelftestResult:
    operand = ensembles.random_low_degree(3, 3, ensembles.instance_rng(0, 0))
    records = [restriction_mc.check_tav(operand, delta) for delta in (0.0, 0.25, 0.5, 0.75, 1.0)]
    failed = [record.params["delta"] for record in records if record.status != CheckStatus.HOLDS]
    return SelftestResult("tav_n3", not failed, f"failing deltas {failed}" if failed else "all deltas exact")


def _selftest_remark_p2() -> SelftestResult:
    worst = 0.0
    for n in (2, 4, 8):
        operand = ensembles.remark_p2(n)
        expected = 1.0 / (4 * n)
        worst = max(
            worst,
            abs(hypercube_ops.variance(operand) - expected),
            abs(hypercube_ops.total_influence(operand, 2) - expected),
            float(np.max(np.abs(hypercube_ops.influences(operand, 2) - 1.0 / (4 * n * n)))),
        )
    return SelftestResult("remark_p2", worst <= 1e-12, f"max deviation {worst:.3e}")


def _selftest_eldan_gross() -> SelftestResult:
    dictator = ensembles.classical(3, {"function": "dictator", "site": 1})
    record = run_check("eldan_gross", dictator, {"K": 1.0})
    expected = math.sqrt(math.log(5.0)) / 2.0
    ratio = record.ratio if record.ratio is not None else math.nan
    detail = f"ratio {ratio:.6f}, expected {expected:.6f}"
    return SelftestResult("eldan_gross_dictator", abs(ratio - expected) <= 1e-3, detail)


def _selftest_calculus_bound() -> SelftestResult:
    worst = 0.0
    for factor in (1.1, 2.0, 5.0):
        t0 = factor * 4.0 * math.e
        record = run_check("calculus_bound", None, {"d": 2, "t0": t0})
        expected = math.e * (t0 * t0 + 2 * math.e * t0 + 2 * math.e**2) / (t0 * t0)
        worst = max(worst, abs(record.lhs - expected))
    return SelftestResult("calculus_bound_d2", worst <= 1e-6, f"max quadrature error {worst:.3e}")


SELFTESTS = (
    _selftest_product_table,
    _selftest_fourier_round_trip,
    _selftest_tav,
    _selftest_remark_p2,
    _selftest_eldan_gross,
    _selftest_calculus_bound,
)


def selftest() -> List[SelftestResult]:
    """Built-in regression battery over closed-form values"""
    results = []
    for test in SELFTESTS:
        result = test()
        log = logger.info if result.passed else logger.error
        log(f"Selftest {result.name}: {'ok' if result.passed else 'FAILED'} ({result.detail})")
        results.append(result)
    return results
