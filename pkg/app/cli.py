"""Batch entry point: verify, constants, spectrum, witness, selftest and history verbs."""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from app import database, hypercube_ops, pauli_core
from app.errors import QHCError
from app.harness_service import HarnessService, config_digest, load_config, seeded, selftest
from app.inequality_suite import get_entry
from app.models import CheckRecord, RunConfig
from app.record_service import RecordService
from app.startup import startup
from app.witness_service import WitnessService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SPECTRUM_EXPONENTS = (1.0, 1.5, 2.0)


class ConfigError(Exception):
    """The run configuration could not be read or validated"""


def emit(payload: Any) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def finite_or_none(value: float) -> Optional[float]:
    return None if math.isnan(value) else float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhc", description="Quantum hypercube inequality harness")
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="global seed (overrides the config)")
    parser.add_argument("--out", type=Path, help="output directory (overrides the config)")
    parser.add_argument("--jobs", type=int, help="worker processes (overrides the config)")
    parser.add_argument("--n-cap", type=int, dest="n_cap", help="largest allowed site count (at most 12)")
    parser.add_argument("--db", help="SQLAlchemy URL of the run-history store (overrides APP_DATABASE_URL)")
    verbs = parser.add_subparsers(dest="verb", required=True)
    verbs.add_parser("verify", help="run every configured check over every ensemble instance")
    verbs.add_parser("constants", help="estimate each check's free constant over each ensemble")
    spectrum = verbs.add_parser("spectrum", help="dump spectral weights and influences of an Observable JSON file")
    spectrum.add_argument("path", type=Path)
    witness = verbs.add_parser("witness", help="hill-climb for an instance maximizing lhs/rhs")
    witness.add_argument("check_id")
    verbs.add_parser("selftest", help="run the built-in regression battery")
    history = verbs.add_parser("history", help="list stored runs or dump one run's records")
    history.add_argument("--limit", type=int, default=20)
    history.add_argument("--run", type=int, dest="run_id")
    history.add_argument("--violated", action="store_true", help="with --run, only the violated records")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file (or defaults) overlaid with the command-line flags"""
    try:
        config = load_config(args.config) if args.config is not None else RunConfig()
        overrides: Dict[str, Any] = {
            key: value
            for key, value in (("seed", args.seed), ("parallelism", args.jobs), ("n_cap", args.n_cap))
            if value is not None
        }
        if args.out is not None:
            overrides["output"] = str(args.out)
        if overrides:
            config = RunConfig.model_validate({**config.model_dump(mode="json"), **overrides})
        for check in config.checks:
            get_entry(check.check_id)
    except (OSError, ValueError, ValidationError, QHCError) as error:
        logger.error(f"Invalid configuration: {error}")
        raise ConfigError(str(error)) from error
    return config


def persist(verb: str, config: RunConfig, records: Sequence[CheckRecord]) -> None:
    if not database.is_enabled():
        return
    startup()
    run = RecordService.save_run(verb, config_digest(config), config.seed, records)
    if run is not None:
        emit({"stored_run": run.id})


def cmd_verify(config: RunConfig) -> int:
    out_dir = Path(config.output)
    outcome = HarnessService.verify(config)
    HarnessService.write_records(outcome.records, out_dir)
    HarnessService.write_summary(outcome.records, out_dir)
    persist("verify", config, outcome.records)
    emit(
        {
            "records": len(outcome.records),
            "violated_unconditional": [f"{r.check_id}@{r.instance_id}" for r in outcome.failed_unconditional],
            "out": str(out_dir),
        }
    )
    return outcome.exit_code


def cmd_constants(config: RunConfig) -> int:
    out_dir = Path(config.output)
    outcome = HarnessService.constants(config)
    HarnessService.write_constants(outcome, out_dir)
    HarnessService.write_records(outcome.records, out_dir)
    persist("constants", config, outcome.records)
    for spec, estimate in outcome.estimates:
        emit({"ensemble": spec.label(), **estimate.model_dump(mode="json")})
    return EXIT_OK


def spectrum_report(operand: pauli_core.Observable) -> Dict[str, Any]:
    index = hypercube_ops.index_of(operand)
    return {
        "n": operand.n,
        "degree": pauli_core.degree(operand),
        "weights": hypercube_ops.weight_profile(operand),
        "variance": hypercube_ops.variance(operand),
        "influences": {
            format(p, "g"): hypercube_ops.influences(operand, p).tolist() for p in SPECTRUM_EXPONENTS
        },
        "geometric_mass": hypercube_ops.geometric_mass(operand),
        "index": {
            "value": finite_or_none(index.value),
            "degenerate": index.degenerate,
            "undefined": index.undefined,
        },
    }


def cmd_spectrum(path: Path) -> int:
    try:
        operand = pauli_core.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError, ValidationError, QHCError) as error:
        logger.error(f"Cannot read observable {path}: {error}")
        raise ConfigError(str(error)) from error
    emit(spectrum_report(operand))
    return EXIT_OK


def cmd_witness(check_id: str, config: RunConfig) -> int:
    try:
        get_entry(check_id)
    except QHCError as error:
        logger.error(f"Invalid witness target: {error}")
        raise ConfigError(str(error)) from error
    params = next((check.params for check in config.checks if check.check_id == check_id), {})
    out_dir = Path(config.output)
    for position, spec in enumerate(config.ensembles):
        starts = seeded(spec, config.seed)
        result = WitnessService.search(check_id, starts, params, config.witness, config.tolerances, seed=config.seed)
        path = WitnessService.write(result, out_dir / f"witness_{check_id}_{position}.json")
        emit({"ensemble": spec.label(), "path": str(path) if path else None, **WitnessService.summary(result)})
    return EXIT_OK


def cmd_selftest() -> int:
    results = selftest()
    for result in results:
        emit({"name": result.name, "passed": result.passed, "detail": result.detail})
    return EXIT_OK if all(result.passed for result in results) else EXIT_FAILURE


def cmd_history(limit: int, run_id: Optional[int], violated_only: bool = False) -> int:
    if not database.is_enabled():
        logger.error("history needs a database; set APP_DATABASE_URL or pass --db")
        return EXIT_USAGE
    startup()
    if run_id is None:
        if violated_only:
            logger.error("--violated needs --run")
            return EXIT_USAGE
        for run in RecordService.get_recent_runs(limit):
            emit(run.model_dump(mode="json"))
        return EXIT_OK
    if RecordService.get_run(run_id) is None:
        logger.error(f"No stored run with id {run_id}")
        return EXIT_FAILURE
    records = RecordService.get_violated_records(run_id) if violated_only else RecordService.get_run_records(run_id)
    for record in records:
        emit(record.model_dump(mode="json"))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.db is not None:
        database.configure(args.db)
    try:
        match args.verb:
            case "verify":
                return cmd_verify(resolve_config(args))
            case "constants":
                return cmd_constants(resolve_config(args))
            case "spectrum":
                return cmd_spectrum(args.path)
            case "witness":
                return cmd_witness(args.check_id, resolve_config(args))
            case "selftest":
                return cmd_selftest()
            case "history":
                return cmd_history(args.limit, args.run_id, args.violated)
            case _:
                logger.error(f"Unknown verb {args.verb}")
                return EXIT_USAGE
    except ConfigError as error:
        logger.error(f"Configuration error: {error}")
        return EXIT_USAGE
    except QHCError as error:
        logger.error(f"Run failed: {error}")
        return EXIT_FAILURE
