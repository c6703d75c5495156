"""Deterministic simulator of two-server Bell-pair distillation.

A photon-pair source emits states entangled in both polarization and
spatial mode; a noisy channel scrambles the polarization part into a
Bell mixture. Each of two non-communicating servers pipes its photon
through a cross-Kerr nondemolition gate and reports a two-valued probe
readout to a classical client, who infers the surviving Bell class of
every pair without feeding anything back. The package models the exact
state evolution, the measurement statistics, the delegated-measurement
rounds that follow, and the communication-security audit.
"""

from .linalg import (
    EPS_NORM,
    EPS_ORACLE,
    MAX_DIM,
    DensityMatrix,
    StateVector,
    canonical_phase,
    fidelity,
    partial_trace,
    projector,
    reorder_subsystems,
    tensor,
    trace_distance,
)
from .states import (
    ENSEMBLE_ORDER,
    FidelityVector,
    HyperComponent,
    PolarizationBell,
    bell_vector,
    ensemble_polarization_density,
    hyper_source_state,
    mixed_ensemble,
    sample_component,
    spatial_dephase,
    spatial_vector,
)
from .qnd import (
    OUTCOME_PAIRS,
    Branch,
    BranchTable,
    DeviceParams,
    DistilledPair,
    QndOutcome,
    build_branch_table,
    conditional_pol_state,
    measure_probes,
    oracle_conditional_pol_state,
    oracle_evolve,
    oracle_outcome_distribution,
    outcome_distribution,
    output_mode,
    same_outcome_probability,
)
from .protocol import (
    AuditReport,
    BellClass,
    BqcRound,
    DistillationRecord,
    HandoffSummary,
    Message,
    Party,
    Phase,
    ProtocolRun,
    Transcript,
    Violation,
    alice_announce_angles,
    analytic_phi_probability,
    audit,
    bob1_measure,
    handoff_single_server,
    infer_bell_class,
    run_distillation,
    run_distribution,
    run_protocol,
    state_bell_class,
)
from .cli import RunConfig, RunReport, execute_run, emit_report, main, parse_config

__version__ = "0.1.0"

__all__ = [
    "EPS_NORM",
    "EPS_ORACLE",
    "MAX_DIM",
    "DensityMatrix",
    "StateVector",
    "canonical_phase",
    "fidelity",
    "partial_trace",
    "projector",
    "reorder_subsystems",
    "tensor",
    "trace_distance",
    "ENSEMBLE_ORDER",
    "FidelityVector",
    "HyperComponent",
    "PolarizationBell",
    "bell_vector",
    "ensemble_polarization_density",
    "hyper_source_state",
    "mixed_ensemble",
    "sample_component",
    "spatial_dephase",
    "spatial_vector",
    "OUTCOME_PAIRS",
    "Branch",
    "BranchTable",
    "DeviceParams",
    "DistilledPair",
    "QndOutcome",
    "build_branch_table",
    "conditional_pol_state",
    "measure_probes",
    "oracle_conditional_pol_state",
    "oracle_evolve",
    "oracle_outcome_distribution",
    "outcome_distribution",
    "output_mode",
    "same_outcome_probability",
    "AuditReport",
    "BellClass",
    "BqcRound",
    "DistillationRecord",
    "HandoffSummary",
    "Message",
    "Party",
    "Phase",
    "ProtocolRun",
    "Transcript",
    "Violation",
    "alice_announce_angles",
    "analytic_phi_probability",
    "audit",
    "bob1_measure",
    "handoff_single_server",
    "infer_bell_class",
    "run_distillation",
    "run_distribution",
    "run_protocol",
    "state_bell_class",
    "RunConfig",
    "RunReport",
    "execute_run",
    "emit_report",
    "main",
    "parse_config",
]
