"""Command-line front end: seeded runs, reports, transcripts, audit.

A run is fully determined by its configuration and seed: reports and
transcripts are byte-identical across invocations. Wall-clock timing is
kept off the serialized artifacts for exactly that reason; it is printed
to stderr instead.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import secrets
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .protocol import (
    BellClass,
    ProtocolRun,
    Transcript,
    analytic_phi_probability,
    derive_run_id,
    run_protocol,
)
from .qnd import DeviceParams
from .states import FidelityVector, PolarizationBell, bell_vector

DEFAULT_PAIRS = 1000
DEFAULT_FIDELITIES = (0.7, 0.1, 0.1, 0.1)
DEFAULT_THETA = math.pi / 4
DEFAULT_ALPHA = 1000.0
DEFAULT_SEED = 0
DEFAULT_FORMAT = "json"

#: Flat column order of the CSV report.
CSV_COLUMNS = (
    "run_id",
    "pairs",
    "f",
    "f1",
    "f2",
    "f3",
    "theta",
    "alpha",
    "dephase_p",
    "homodyne_error",
    "evil_bob_flip_p",
    "seed",
    "phi_class_count",
    "psi_class_count",
    "phi_class_frequency",
    "psi_class_frequency",
    "analytic_phi_probability",
    "class_mismatch_count",
    "mean_phi_pair_fidelity_phi_plus",
    "mean_phi_pair_fidelity_phi_minus",
    "mean_psi_pair_fidelity_psi_plus",
    "mean_psi_pair_fidelity_psi_minus",
    "angle_count_k0",
    "angle_count_k1",
    "angle_count_k2",
    "angle_count_k3",
    "angle_count_k4",
    "angle_count_k5",
    "angle_count_k6",
    "angle_count_k7",
    "audit_passed",
    "audit_violation_count",
)


@dataclass(frozen=True)
class RunConfig:
    pairs: int = DEFAULT_PAIRS
    fidelities: FidelityVector = FidelityVector(*DEFAULT_FIDELITIES)
    theta: float = DEFAULT_THETA
    alpha: float = DEFAULT_ALPHA
    dephase_p: float = 0.0
    homodyne_error: float = 0.0
    evil_bob_flip_p: float = 0.0
    seed: int = DEFAULT_SEED
    output_format: str = DEFAULT_FORMAT
    out_path: str | None = None
    transcript_path: str | None = None
    sweep: int | None = None
    allow_audit_fail: bool = False

    def __post_init__(self):
        if self.pairs < 1:
            raise ValueError(f"pairs {self.pairs} must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed {self.seed} outside unsigned 64-bit range")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"format must be json or csv, got {self.output_format!r}")
        for name, value in (
            ("dephase_p", self.dephase_p),
            ("evil_bob_flip_p", self.evil_bob_flip_p),
        ):
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} {value!r} outside [0, 1]")
        if self.sweep is not None and self.sweep < 1:
            raise ValueError(f"sweep {self.sweep} must be >= 1")
        # theta/alpha/homodyne_error ranges are enforced by DeviceParams.
        DeviceParams(self.theta, self.alpha, self.homodyne_error)

    @property
    def emit_transcript(self) -> bool:
        return self.transcript_path is not None

    def device_params(self) -> DeviceParams:
        return DeviceParams(self.theta, self.alpha, self.homodyne_error)

    def echo(self) -> dict:
        return {
            "pairs": self.pairs,
            "fidelities": list(self.fidelities.as_tuple()),
            "theta": self.theta,
            "alpha": self.alpha,
            "dephase_p": self.dephase_p,
            "homodyne_error": self.homodyne_error,
            "evil_bob_flip_p": self.evil_bob_flip_p,
            "seed": self.seed,
            "output_format": self.output_format,
            "emit_transcript": self.emit_transcript,
        }

    def run_id(self) -> str:
        return derive_run_id(
            self.seed, json.dumps(self.echo(), sort_keys=True)
        )


@dataclass
class RunReport:
    """Aggregated results of one run.

    The fidelity means are grouped by the ground-truth class of each
    surviving state; the class counts are Alice's view, inferred from
    the readouts as reported. The two diverge under readout
    misclassification or misreporting, counted in
    ``class_mismatch_count``. ``duration_seconds`` never enters the
    serialized artifact.
    """

    run_id: str
    config: dict
    pair_count: int
    phi_class_count: int
    psi_class_count: int
    analytic_phi_probability: float
    class_mismatch_count: int
    mean_phi_pair_fidelity_phi_plus: float | None
    mean_phi_pair_fidelity_phi_minus: float | None
    mean_psi_pair_fidelity_psi_plus: float | None
    mean_psi_pair_fidelity_psi_minus: float | None
    angle_counts: dict[str, int]
    audit_passed: bool
    audit_violations: list[dict]
    duration_seconds: float = 0.0

    @property
    def phi_class_frequency(self) -> float:
        return self.phi_class_count / self.pair_count

    @property
    def psi_class_frequency(self) -> float:
        return self.psi_class_count / self.pair_count

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": dict(self.config),
            "pair_count": self.pair_count,
            "phi_class_count": self.phi_class_count,
            "psi_class_count": self.psi_class_count,
            "phi_class_frequency": self.phi_class_frequency,
            "psi_class_frequency": self.psi_class_frequency,
            "analytic_phi_probability": self.analytic_phi_probability,
            "class_mismatch_count": self.class_mismatch_count,
            "mean_phi_pair_fidelity_phi_plus": self.mean_phi_pair_fidelity_phi_plus,
            "mean_phi_pair_fidelity_phi_minus": self.mean_phi_pair_fidelity_phi_minus,
            "mean_psi_pair_fidelity_psi_plus": self.mean_psi_pair_fidelity_psi_plus,
            "mean_psi_pair_fidelity_psi_minus": self.mean_psi_pair_fidelity_psi_minus,
            "angle_counts": dict(self.angle_counts),
            "audit_passed": self.audit_passed,
            "audit_violation_count": len(self.audit_violations),
            "audit_violations": [dict(v) for v in self.audit_violations],
        }


_BELL_AMPS = {
    kind: np.asarray(bell_vector(kind).amplitudes) for kind in PolarizationBell
}


def _mean_or_none(values) -> float | None:
    values = list(values)
    if not values:
        return None
    return float(sum(values) / len(values))


def execute_run(cfg: RunConfig) -> tuple[RunReport, Transcript]:
    """Run the full protocol once and aggregate the report."""
    started = time.perf_counter()
    run: ProtocolRun = run_protocol(
        m=cfg.pairs,
        fv=cfg.fidelities,
        params=cfg.device_params(),
        dephase_p=cfg.dephase_p,
        evil_bob_flip_p=cfg.evil_bob_flip_p,
        seed=cfg.seed,
        run_id=cfg.run_id(),
    )
    phi_fid_plus, phi_fid_minus, psi_fid_plus, psi_fid_minus = [], [], [], []
    inferred_phi = 0
    mismatches = 0
    for record in run.records:
        if record.inferred_class is BellClass.PHI:
            inferred_phi += 1
        if record.inferred_class is not record.true_class:
            mismatches += 1
        amps = record.pair.pol_state.amplitudes
        if record.true_class is BellClass.PHI:
            phi_fid_plus.append(
                abs(np.vdot(_BELL_AMPS[PolarizationBell.PHI_PLUS], amps)) ** 2
            )
            phi_fid_minus.append(
                abs(np.vdot(_BELL_AMPS[PolarizationBell.PHI_MINUS], amps)) ** 2
            )
        else:
            psi_fid_plus.append(
                abs(np.vdot(_BELL_AMPS[PolarizationBell.PSI_PLUS], amps)) ** 2
            )
            psi_fid_minus.append(
                abs(np.vdot(_BELL_AMPS[PolarizationBell.PSI_MINUS], amps)) ** 2
            )
    angle_counts = {str(k): 0 for k in range(8)}
    for bqc_round in run.rounds:
        angle_counts[str(bqc_round.theta_index)] += 1
    report = RunReport(
        run_id=run.transcript.run_id,
        config=cfg.echo(),
        pair_count=cfg.pairs,
        phi_class_count=inferred_phi,
        psi_class_count=cfg.pairs - inferred_phi,
        analytic_phi_probability=analytic_phi_probability(
            cfg.fidelities, cfg.dephase_p
        ),
        class_mismatch_count=mismatches,
        mean_phi_pair_fidelity_phi_plus=_mean_or_none(phi_fid_plus),
        mean_phi_pair_fidelity_phi_minus=_mean_or_none(phi_fid_minus),
        mean_psi_pair_fidelity_psi_plus=_mean_or_none(psi_fid_plus),
        mean_psi_pair_fidelity_psi_minus=_mean_or_none(psi_fid_minus),
        angle_counts=angle_counts,
        audit_passed=run.audit_report.passed,
        audit_violations=[
            {"kind": v.kind, "seq": v.seq, "description": v.description}
            for v in run.audit_report.violations
        ],
        duration_seconds=time.perf_counter() - started,
    )
    return report, run.transcript


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_row(doc: dict) -> list[str]:
    flat = {
        "run_id": doc["run_id"],
        "pairs": doc["config"]["pairs"],
        "f": doc["config"]["fidelities"][0],
        "f1": doc["config"]["fidelities"][1],
        "f2": doc["config"]["fidelities"][2],
        "f3": doc["config"]["fidelities"][3],
        "theta": doc["config"]["theta"],
        "alpha": doc["config"]["alpha"],
        "dephase_p": doc["config"]["dephase_p"],
        "homodyne_error": doc["config"]["homodyne_error"],
        "evil_bob_flip_p": doc["config"]["evil_bob_flip_p"],
        "seed": doc["config"]["seed"],
        "phi_class_count": doc["phi_class_count"],
        "psi_class_count": doc["psi_class_count"],
        "phi_class_frequency": doc["phi_class_frequency"],
        "psi_class_frequency": doc["psi_class_frequency"],
        "analytic_phi_probability": doc["analytic_phi_probability"],
        "class_mismatch_count": doc["class_mismatch_count"],
        "mean_phi_pair_fidelity_phi_plus": doc["mean_phi_pair_fidelity_phi_plus"],
        "mean_phi_pair_fidelity_phi_minus": doc["mean_phi_pair_fidelity_phi_minus"],
        "mean_psi_pair_fidelity_psi_plus": doc["mean_psi_pair_fidelity_psi_plus"],
        "mean_psi_pair_fidelity_psi_minus": doc["mean_psi_pair_fidelity_psi_minus"],
        **{f"angle_count_k{k}": doc["angle_counts"][str(k)] for k in range(8)},
        "audit_passed": doc["audit_passed"],
        "audit_violation_count": doc["audit_violation_count"],
    }
    return [_csv_cell(flat[col]) for col in CSV_COLUMNS]


def serialize_report(doc: dict, output_format: str) -> bytes:
    """Render a report document (or a sweep document) to bytes."""
    if output_format == "json":
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if output_format != "csv":
        raise ValueError(f"unknown format {output_format!r}")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    if "runs" in doc:
        for row in doc["runs"]:
            writer.writerow(_csv_row(row))
    else:
        writer.writerow(_csv_row(doc))
    return buffer.getvalue().encode("utf-8")


def emit_report(
    report: "RunReport | dict", output_format: str, destination: str | None
) -> bytes:
    """Serialize a report (or sweep document) to a path, or stdout when None."""
    doc = report.to_dict() if isinstance(report, RunReport) else report
    payload = serialize_report(doc, output_format)
    if destination is None:
        sys.stdout.write(payload.decode("utf-8"))
        return payload
    try:
        with open(destination, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write report to {destination!r}: {exc}") from exc
    return payload


def write_transcript(transcript: Transcript, destination: str) -> None:
    try:
        with open(destination, "wb") as fh:
            fh.write(transcript.to_bytes())
    except OSError as exc:
        raise OSError(f"cannot write transcript to {destination!r}: {exc}") from exc


# --- seed sweep --------------------------------------------------------------


def _sweep_single(args: tuple[RunConfig, int]) -> dict:
    cfg, seed = args
    report, _ = execute_run(dataclasses.replace(cfg, seed=seed))
    return report.to_dict()


def run_sweep(cfg: RunConfig) -> dict:
    """Run ``cfg.sweep`` consecutive seeds in parallel worker processes."""
    n = int(cfg.sweep or 1)
    seeds = [cfg.seed + i for i in range(n)]
    jobs = [(cfg, seed) for seed in seeds]
    if n == 1:
        runs = [_sweep_single(jobs[0])]
    else:
        with ProcessPoolExecutor() as pool:
            runs = list(pool.map(_sweep_single, jobs))
    analytic = runs[0]["analytic_phi_probability"]
    freqs = [r["phi_class_frequency"] for r in runs]
    sigma = math.sqrt(max(analytic * (1.0 - analytic), 0.0) / cfg.pairs)
    within = [abs(f - analytic) <= 4.0 * sigma for f in freqs]
    aggregate = {
        "seeds": n,
        "first_seed": cfg.seed,
        "pairs_per_run": cfg.pairs,
        "analytic_phi_probability": analytic,
        "empirical_phi_frequency_mean": float(sum(freqs) / n),
        "empirical_phi_frequency_min": min(freqs),
        "empirical_phi_frequency_max": max(freqs),
        "four_sigma_band": 4.0 * sigma,
        "all_within_four_sigma": all(within),
        "audit_all_passed": all(r["audit_passed"] for r in runs),
    }
    return {"sweep_aggregate": aggregate, "runs": runs}


# --- argument parsing ---------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperdistill",
        description=(
            "Seeded simulation of two-server Bell-pair distillation with "
            "transcript auditing."
        ),
    )
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="JSON config file; flags override its keys")
    parser.add_argument("--pairs", type=int, default=None,
                        help=f"number of pairs per run (default {DEFAULT_PAIRS})")
    parser.add_argument("--fidelities", default=None, metavar="F,F1,F2,F3",
                        help="four comma-separated mixture weights summing to 1")
    parser.add_argument("--theta", type=float, default=None,
                        help="probe phase shift per photon in radians (default pi/4)")
    parser.add_argument("--alpha", type=float, default=None,
                        help=f"probe amplitude (default {DEFAULT_ALPHA})")
    parser.add_argument("--dephase-p", type=float, default=None,
                        help="spatial phase-flip probability per pair (default 0)")
    parser.add_argument("--homodyne-error", type=float, default=None,
                        help="probability of misreading a probe shift (default 0)")
    parser.add_argument("--evil-bob-flip-p", type=float, default=None,
                        help="probability that Bob1 misreports a readout (default 0)")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"64-bit run seed (default {DEFAULT_SEED})")
    parser.add_argument("--entropy", action="store_true",
                        help="draw the seed from OS entropy and print it")
    parser.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default json)")
    parser.add_argument("--out", metavar="PATH", default=None,
                        help="report destination (default stdout)")
    parser.add_argument("--transcript", metavar="PATH", default=None,
                        help="also write the message transcript to PATH")
    parser.add_argument("--sweep", type=int, default=None, metavar="N",
                        help="run N consecutive seeds in parallel workers")
    parser.add_argument("--allow-audit-fail", action="store_true",
                        help="exit 0 even when the security audit fails")
    return parser


def parse_config(argv=None) -> RunConfig:
    """Resolve the run configuration: flag > config-file key > default."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    file_cfg = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config: cannot read {args.config!r}: {exc}")
        if not isinstance(file_cfg, dict):
            parser.error("--config: file must hold a JSON object")

    def resolve(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return file_cfg[key]
        return default

    raw_fidelities = resolve(args.fidelities, "fidelities", DEFAULT_FIDELITIES)
    if isinstance(raw_fidelities, str):
        parts = raw_fidelities.split(",")
        try:
            raw_fidelities = [float(p) for p in parts]
        except ValueError:
            parser.error(f"--fidelities: not numeric: {raw_fidelities!r}")
    try:
        fidelities = FidelityVector.from_components(raw_fidelities)
    except ValueError as exc:
        parser.error(f"--fidelities: {exc}")

    seed = resolve(args.seed, "seed", DEFAULT_SEED)
    if args.entropy:
        seed = secrets.randbits(64)
        print(f"entropy seed: {seed}", file=sys.stderr)

    if args.sweep is not None and args.transcript is not None:
        parser.error("--transcript: not available in --sweep mode")

    try:
        return RunConfig(
            pairs=int(resolve(args.pairs, "pairs", DEFAULT_PAIRS)),
            fidelities=fidelities,
            theta=float(resolve(args.theta, "theta", DEFAULT_THETA)),
            alpha=float(resolve(args.alpha, "alpha", DEFAULT_ALPHA)),
            dephase_p=float(resolve(args.dephase_p, "dephase_p", 0.0)),
            homodyne_error=float(
                resolve(args.homodyne_error, "homodyne_error", 0.0)
            ),
            evil_bob_flip_p=float(
                resolve(args.evil_bob_flip_p, "evil_bob_flip_p", 0.0)
            ),
            seed=int(seed),
            output_format=str(resolve(args.format, "format", DEFAULT_FORMAT)),
            out_path=resolve(args.out, "out", None),
            transcript_path=resolve(args.transcript, "transcript", None),
            sweep=args.sweep if args.sweep is None else int(args.sweep),
            allow_audit_fail=bool(
                args.allow_audit_fail or file_cfg.get("allow_audit_fail", False)
            ),
        )
    except ValueError as exc:
        parser.error(str(exc))


def main(argv=None) -> int:
    cfg = parse_config(argv)
    started = time.perf_counter()
    try:
        if cfg.sweep is not None:
            doc = run_sweep(cfg)
            emit_report(doc, cfg.output_format, cfg.out_path)
            audit_ok = doc["sweep_aggregate"]["audit_all_passed"]
        else:
            report, transcript = execute_run(cfg)
            if cfg.transcript_path is not None:
                write_transcript(transcript, cfg.transcript_path)
            emit_report(report, cfg.output_format, cfg.out_path)
            audit_ok = report.audit_passed
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    duration = time.perf_counter() - started
    print(f"completed in {duration:.3f} s", file=sys.stderr)
    if not audit_ok and not cfg.allow_audit_fail:
        print("security audit FAILED", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
