import json
import os

import pytest

from app import ensembles, pauli_core
from app.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from app.harness_service import seeded
from app.models import CheckSpec, EnsembleKind, EnsembleSpec, RunConfig, WitnessSettings
from app.witness_service import WitnessService


def write_config(path, checks, **overrides):
    config = RunConfig(
        checks=checks,
        ensembles=[
            EnsembleSpec(kind=EnsembleKind.CLASSICAL, n=3, params={"function": "dictator"}),
            EnsembleSpec(kind=EnsembleKind.RANDOM_LOW_DEGREE, n=2, seed=3, count=2),
        ],
        **overrides,
    )
    path.write_text(config.model_dump_json())
    return path


def stdout_lines(capsys):
    return [json.loads(line) for line in capsys.readouterr().out.splitlines()]


def test_verify_exit_ok(tmp_path, capsys):
    """Holding checks exit 0 and write both reports"""
    config = write_config(tmp_path / "config.json", [CheckSpec(check_id="poincare"), CheckSpec(check_id="tav")])
    out = tmp_path / "out"
    assert main(["--config", str(config), "--out", str(out), "verify"]) == EXIT_OK
    assert (out / "records.jsonl").exists()
    assert (out / "summary.csv").exists()
    summary = stdout_lines(capsys)[-1]
    assert summary["records"] == 6
    assert summary["violated_unconditional"] == []


def test_verify_with_no_checks(tmp_path):
    """An empty check list exits 0 with empty outputs"""
    config = write_config(tmp_path / "config.json", [])
    out = tmp_path / "out"
    assert main(["--config", str(config), "--out", str(out), "verify"]) == EXIT_OK
    assert (out / "records.jsonl").read_text() == ""
    assert (out / "summary.csv").read_text() == "check_id,count,holds,violated,skipped,sup_ratio\n"


def test_verify_exit_failure_on_violation(tmp_path, capsys):
    """A violated unconditional check exits 1"""
    checks = [CheckSpec(check_id="curvature_i", params={"sign": 1.0})]
    config = write_config(tmp_path / "config.json", checks)
    assert main(["--config", str(config), "--out", str(tmp_path / "out"), "verify"]) == EXIT_FAILURE
    assert len(stdout_lines(capsys)[-1]["violated_unconditional"]) == 3


def test_violated_constant_check_does_not_fail_the_run(tmp_path):
    """Checks with a free constant report violations without failing"""
    checks = [CheckSpec(check_id="kkl_geometric", params={"C": 100.0})]
    config = write_config(tmp_path / "config.json", checks)
    assert main(["--config", str(config), "--out", str(tmp_path / "out"), "verify"]) == EXIT_OK
    records = [json.loads(line) for line in (tmp_path / "out" / "records.jsonl").read_text().splitlines()]
    assert any(record["status"] == "violated" for record in records)


def test_bad_configs_exit_usage(tmp_path):
    """Missing file, malformed JSON, unknown check and an over-cap ensemble all exit 2"""
    assert main(["--config", str(tmp_path / "missing.json"), "verify"]) == EXIT_USAGE
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["--config", str(broken), "verify"]) == EXIT_USAGE
    unknown = write_config(tmp_path / "unknown.json", [CheckSpec(check_id="no_such_check")])
    assert main(["--config", str(unknown), "verify"]) == EXIT_USAGE
    capped = write_config(tmp_path / "capped.json", [CheckSpec(check_id="poincare")])
    assert main(["--config", str(capped), "--n-cap", "2", "verify"]) == EXIT_USAGE


def test_pair_error_exits_failure(tmp_path):
    """A check raising on an instance exits 1"""
    config = write_config(tmp_path / "config.json", [CheckSpec(check_id="kkl_lp", params={"p": 3.0})])
    assert main(["--config", str(config), "--out", str(tmp_path / "out"), "verify"]) == EXIT_FAILURE


def test_constants_verb(tmp_path, capsys):
    """One estimate line per ensemble and both CSV files"""
    config = write_config(tmp_path / "config.json", [CheckSpec(check_id="eldan_gross")])
    out = tmp_path / "out"
    assert main(["--config", str(config), "--out", str(out), "constants"]) == EXIT_OK
    lines = stdout_lines(capsys)
    assert len(lines) == 2
    assert lines[0]["constant_role"] == "rhs"
    assert lines[1]["implied_constant"] is None
    assert (out / "constants.csv").exists()
    assert (out / "trends.csv").exists()


def test_spectrum_verb(tmp_path, capsys):
    """Weights, influences and index of an Observable file"""
    path = tmp_path / "dictator.json"
    path.write_text(pauli_core.dumps(ensembles.classical(3, {"function": "dictator"})))
    assert main(["spectrum", str(path)]) == EXIT_OK
    report = stdout_lines(capsys)[0]
    assert report["n"] == 3
    assert report["degree"] == 1
    assert report["variance"] == pytest.approx(0.25)
    assert report["weights"] == pytest.approx([0.25, 0.25, 0.0, 0.0])
    assert sorted(report["influences"]) == ["1", "1.5", "2"]
    assert report["influences"]["1"] == pytest.approx([0.5, 0.0, 0.0])
    assert report["index"]["value"] == pytest.approx(2.0)


def test_spectrum_verb_rejects_bad_file(tmp_path):
    """An unreadable Observable is a usage error"""
    path = tmp_path / "bad.json"
    path.write_text('{"n": 0, "terms": []}')
    assert main(["spectrum", str(path)]) == EXIT_USAGE


def test_witness_verb(tmp_path, capsys):
    """The witness verb writes one file per ensemble"""
    config = write_config(
        tmp_path / "config.json",
        [CheckSpec(check_id="poincare")],
        witness={"restarts": 1, "steps": 3, "step_size": 0.2},
    )
    out = tmp_path / "out"
    assert main(["--config", str(config), "--out", str(out), "witness", "poincare"]) == EXIT_OK
    lines = stdout_lines(capsys)
    assert len(lines) == 2
    assert (out / "witness_poincare_0.json").exists()
    assert lines[1]["evaluations"] == 4
    assert main(["--config", str(config), "witness", "no_such_check"]) == EXIT_USAGE


def test_selftest_verb(capsys):
    """Every regression passes"""
    assert main(["selftest"]) == EXIT_OK
    assert all(line["passed"] for line in stdout_lines(capsys))


def test_history_round_trip(tmp_path, capsys, sqlite_url):
    """verify with --db stores a run that history lists and dumps"""
    config = write_config(tmp_path / "config.json", [CheckSpec(check_id="poincare")])
    out = str(tmp_path / "out")
    assert main(["--db", sqlite_url, "--config", str(config), "--out", out, "verify"]) == EXIT_OK
    stored = next(line["stored_run"] for line in stdout_lines(capsys) if "stored_run" in line)
    assert main(["--db", sqlite_url, "history"]) == EXIT_OK
    runs = stdout_lines(capsys)
    assert [run["id"] for run in runs] == [stored]
    assert runs[0]["verb"] == "verify"
    assert main(["--db", sqlite_url, "history", "--run", str(stored)]) == EXIT_OK
    assert len(stdout_lines(capsys)) == 3
    assert main(["--db", sqlite_url, "history", "--run", "999"]) == EXIT_FAILURE


@pytest.mark.skipif(bool(os.environ.get("APP_DATABASE_URL")), reason="a database is configured")
def test_history_without_database():
    """history needs a store"""
    assert main(["history"]) == EXIT_USAGE


def test_witness_starts_follow_the_run_seed(tmp_path, capsys):
    """--seed reseeds the starting instances the same way verify does"""
    settings = WitnessSettings(restarts=1, steps=2, step_size=0.2)
    config = write_config(tmp_path / "config.json", [CheckSpec(check_id="poincare")], witness=settings)
    out = str(tmp_path / "out")
    assert main(["--config", str(config), "--out", out, "--seed", "11", "witness", "poincare"]) == EXIT_OK
    line = stdout_lines(capsys)[1]
    spec = seeded(EnsembleSpec(kind=EnsembleKind.RANDOM_LOW_DEGREE, n=2, seed=3, count=2), 11)
    expected = WitnessService.search("poincare", spec, {}, settings, seed=11)
    assert line["start"] == expected.start_id
    assert line["start"].startswith(spec.label())
    assert line["ratio"] == pytest.approx(expected.ratio)


def test_history_violated_records(tmp_path, capsys, sqlite_url):
    """history --run ID --violated dumps only the violated records"""
    checks = [CheckSpec(check_id="curvature_i", params={"sign": 1.0}), CheckSpec(check_id="poincare")]
    config = write_config(tmp_path / "config.json", checks)
    out = str(tmp_path / "out")
    assert main(["--db", sqlite_url, "--config", str(config), "--out", out, "verify"]) == EXIT_FAILURE
    stored = next(line["stored_run"] for line in stdout_lines(capsys) if "stored_run" in line)
    assert main(["--db", sqlite_url, "history", "--run", str(stored), "--violated"]) == EXIT_OK
    violated = stdout_lines(capsys)
    assert len(violated) == 3
    assert all(record["status"] == "violated" for record in violated)
    assert {record["check_id"] for record in violated} == {"curvature_i"}
    assert main(["--db", sqlite_url, "history", "--violated"]) == EXIT_USAGE
