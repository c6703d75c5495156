import csv
import io
import json
import math

import pytest

from hyperdistill import (
    FidelityVector,
    RunConfig,
    Transcript,
    audit,
    execute_run,
    parse_config,
)
from hyperdistill.cli import (
    CSV_COLUMNS,
    main,
    run_sweep,
    serialize_report,
    write_transcript,
)

MIXED = FidelityVector(0.7, 0.1, 0.15, 0.05)


# --- parsing -----------------------------------------------------------------


def test_defaults():
    cfg = parse_config([])
    assert cfg.pairs == 1000
    assert cfg.fidelities.as_tuple() == (0.7, 0.1, 0.1, 0.1)
    assert cfg.theta == pytest.approx(math.pi / 4)
    assert cfg.alpha == 1000.0
    assert cfg.dephase_p == 0.0
    assert cfg.homodyne_error == 0.0
    assert cfg.evil_bob_flip_p == 0.0
    assert cfg.seed == 0
    assert cfg.output_format == "json"
    assert cfg.emit_transcript is False
    assert cfg.sweep is None
    assert cfg.allow_audit_fail is False


def test_flag_parsing():
    cfg = parse_config(
        [
            "--pairs", "10",
            "--fidelities", "1,0,0,0",
            "--theta", "0.5",
            "--seed", "41",
            "--format", "csv",
            "--dephase-p", "0.25",
            "--evil-bob-flip-p", "0.5",
            "--homodyne-error", "0.1",
        ]
    )
    assert cfg.pairs == 10
    assert cfg.fidelities.as_tuple() == (1.0, 0.0, 0.0, 0.0)
    assert cfg.theta == 0.5
    assert cfg.seed == 41
    assert cfg.output_format == "csv"
    assert cfg.dephase_p == 0.25
    assert cfg.evil_bob_flip_p == 0.5
    assert cfg.homodyne_error == 0.1


def test_unnormalizable_fidelities_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        parse_config(["--fidelities", "0.5,0.5,0.5,0.5"])
    assert exc.value.code == 2
    assert "--fidelities" in capsys.readouterr().err


def test_out_of_range_value_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        parse_config(["--theta", "7.0"])
    assert exc.value.code == 2
    assert "theta" in capsys.readouterr().err


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        parse_config(["--bogus", "1"])
    assert exc.value.code == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(
        json.dumps({"pairs": 77, "seed": 5, "fidelities": [0.9, 0.1, 0, 0]})
    )
    cfg = parse_config(["--config", str(cfg_path)])
    assert cfg.pairs == 77
    assert cfg.seed == 5
    assert cfg.fidelities.as_tuple() == (0.9, 0.1, 0.0, 0.0)
    overridden = parse_config(["--config", str(cfg_path), "--pairs", "11"])
    assert overridden.pairs == 11
    assert overridden.seed == 5


def test_sweep_with_transcript_rejected():
    with pytest.raises(SystemExit):
        parse_config(["--sweep", "3", "--transcript", "t.log"])


# --- execution ----------------------------------------------------------------


def test_noiseless_end_to_end():
    cfg = RunConfig(pairs=100, fidelities=FidelityVector(1, 0, 0, 0), seed=2)
    report, transcript = execute_run(cfg)
    assert report.phi_class_count == 100
    assert report.psi_class_count == 0
    assert report.mean_phi_pair_fidelity_phi_plus == pytest.approx(1.0, abs=1e-12)
    assert report.mean_psi_pair_fidelity_psi_plus is None
    assert report.analytic_phi_probability == pytest.approx(1.0, abs=1e-12)
    assert report.audit_passed
    assert report.class_mismatch_count == 0
    assert len(transcript.messages) == 6 * 100 + 1


def test_mixed_run_statistics():
    cfg = RunConfig(pairs=10_000, fidelities=MIXED, seed=1)
    report, _ = execute_run(cfg)
    assert report.analytic_phi_probability == pytest.approx(0.8, abs=1e-12)
    sigma = math.sqrt(0.8 * 0.2 / cfg.pairs)
    assert abs(report.phi_class_frequency - 0.8) <= 3 * sigma
    assert sum(report.angle_counts.values()) == cfg.pairs


def test_evil_bob_report_semantics():
    cfg = RunConfig(
        pairs=60,
        fidelities=FidelityVector(1, 0, 0, 0),
        evil_bob_flip_p=1.0,
        seed=4,
    )
    report, _ = execute_run(cfg)
    # Alice sees only Psi-class pairs, yet the photons are perfect PhiPlus.
    assert report.psi_class_count == 60
    assert report.phi_class_count == 0
    assert report.class_mismatch_count == 60
    assert report.mean_phi_pair_fidelity_phi_plus == pytest.approx(1.0, abs=1e-12)
    assert report.mean_psi_pair_fidelity_psi_plus is None


def test_dephasing_degrades_phase_but_not_class():
    cfg = RunConfig(
        pairs=400,
        fidelities=FidelityVector(1, 0, 0, 0),
        dephase_p=0.5,
        seed=6,
    )
    report, _ = execute_run(cfg)
    assert report.phi_class_count == 400
    # dephased pairs distill into the other Phi state
    plus = report.mean_phi_pair_fidelity_phi_plus
    minus = report.mean_phi_pair_fidelity_phi_minus
    assert plus + minus == pytest.approx(1.0, abs=1e-12)
    assert 0.3 < minus < 0.7


# --- serialization ---------------------------------------------------------------


def test_json_report_roundtrip():
    cfg = RunConfig(pairs=50, fidelities=MIXED, seed=9)
    report, _ = execute_run(cfg)
    payload = serialize_report(report.to_dict(), "json")
    parsed = json.loads(payload.decode("utf-8"))
    assert parsed == report.to_dict()


def test_csv_report_schema_and_values():
    cfg = RunConfig(pairs=50, fidelities=MIXED, seed=9, output_format="csv")
    report, _ = execute_run(cfg)
    payload = serialize_report(report.to_dict(), "csv").decode("utf-8")
    rows = list(csv.reader(io.StringIO(payload)))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2
    record = dict(zip(rows[0], rows[1]))
    assert int(record["pairs"]) == 50
    assert float(record["f"]) == 0.7
    assert int(record["phi_class_count"]) == report.phi_class_count
    # numeric round trip at full precision
    assert float(record["analytic_phi_probability"]) == (
        report.analytic_phi_probability
    )
    assert float(record["phi_class_frequency"]) == report.phi_class_frequency
    assert record["audit_passed"] == "true"


def test_reports_and_transcripts_are_byte_identical():
    cfg = RunConfig(pairs=120, fidelities=MIXED, dephase_p=0.1, seed=33)
    report_a, transcript_a = execute_run(cfg)
    report_b, transcript_b = execute_run(cfg)
    assert serialize_report(report_a.to_dict(), "json") == serialize_report(
        report_b.to_dict(), "json"
    )
    assert serialize_report(report_a.to_dict(), "csv") == serialize_report(
        report_b.to_dict(), "csv"
    )
    assert transcript_a.to_bytes() == transcript_b.to_bytes()


def test_transcript_file_reparses_and_audits(tmp_path):
    cfg = RunConfig(pairs=25, fidelities=MIXED, seed=13)
    _, transcript = execute_run(cfg)
    path = tmp_path / "messages.log"
    write_transcript(transcript, str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    reparsed = Transcript.from_lines(lines)
    assert audit(reparsed).passed
    assert reparsed.to_bytes() == transcript.to_bytes()


def test_emit_report_unwritable_destination():
    cfg = RunConfig(pairs=5, fidelities=MIXED, seed=1)
    report, _ = execute_run(cfg)
    from hyperdistill import emit_report

    with pytest.raises(OSError, match="no/such/dir"):
        emit_report(report, "json", "no/such/dir/report.json")


# --- main entry point ----------------------------------------------------------------


def test_main_writes_report_and_transcript(tmp_path):
    out = tmp_path / "report.json"
    log = tmp_path / "run.log"
    code = main(
        [
            "--pairs", "40",
            "--fidelities", "0.7,0.1,0.15,0.05",
            "--seed", "3",
            "--out", str(out),
            "--transcript", str(log),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["pair_count"] == 40
    assert doc["audit_passed"] is True
    reparsed = Transcript.from_lines(log.read_text().splitlines())
    assert audit(reparsed).passed


def test_main_is_deterministic(tmp_path):
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    args = ["--pairs", "30", "--seed", "17", "--out"]
    assert main(args + [str(out_a)]) == 0
    assert main(args + [str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_main_reports_io_failure(tmp_path, capsys):
    code = main(["--pairs", "5", "--out", str(tmp_path / "no" / "dir" / "x.json")])
    assert code == 1
    assert "cannot write report" in capsys.readouterr().err


def test_main_csv_to_stdout(capsys):
    code = main(["--pairs", "20", "--seed", "8", "--format", "csv"])
    assert code == 0
    out = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2


# --- sweep ------------------------------------------------------------------------


def test_sweep_aggregate_and_audit():
    cfg = RunConfig(pairs=200, fidelities=MIXED, seed=0, sweep=3)
    doc = run_sweep(cfg)
    agg = doc["sweep_aggregate"]
    assert agg["seeds"] == 3
    assert len(doc["runs"]) == 3
    assert agg["audit_all_passed"] is True
    assert [r["config"]["seed"] for r in doc["runs"]] == [0, 1, 2]
    assert agg["analytic_phi_probability"] == pytest.approx(0.8, abs=1e-12)


def test_hundred_seed_sweep_within_four_sigma():
    # empirical frequency fluctuates with the seed; the analytic value
    # does not, and every run stays inside the 4-sigma band
    cfg = RunConfig(pairs=400, fidelities=MIXED, seed=0, sweep=100)
    doc = run_sweep(cfg)
    agg = doc["sweep_aggregate"]
    analytics = {r["analytic_phi_probability"] for r in doc["runs"]}
    assert analytics == {agg["analytic_phi_probability"]}
    freqs = [r["phi_class_frequency"] for r in doc["runs"]]
    assert len(set(freqs)) > 1
    assert agg["all_within_four_sigma"] is True


def test_main_sweep(tmp_path):
    out = tmp_path / "sweep.json"
    code = main(
        ["--pairs", "50", "--seed", "1", "--sweep", "2", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["sweep_aggregate"]["seeds"] == 2
