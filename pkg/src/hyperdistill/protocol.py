"""Four-party protocol engine over an audited classical message bus.

The Source distributes noisy hyperentangled pairs to the two servers
(Bob1, Bob2). Each server measures its probe and reports the readout to
the classical client (Alice), who infers the surviving Bell class of
every pair: same readouts mean a Phi-class pair, different readouts a
Psi-class pair. Alice then announces one signed angle per pair to Bob1
only, Bob1 measures his qubit in that rotated basis and reports a bit,
and the run ends with a single handoff marker to Bob2.

Every classical exchange is appended to a transcript; the auditor
re-reads it and fails the run if the servers talked to each other, if
Alice fed anything back during distribution or distillation, if an
angle went to Bob2, or if Bob2 reported a measured bit.
"""

from __future__ import annotations

import functools
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg import StateVector, canonical_phase
from .qnd import (
    BranchTable,
    DeviceParams,
    DistilledPair,
    QndOutcome,
    build_branch_table,
    measure_probes,
    same_outcome_probability,
)
from .states import (
    FidelityVector,
    HyperComponent,
    mixed_ensemble,
    sample_component,
    spatial_dephase,
)


class Party(Enum):
    SOURCE = "Source"
    ALICE = "Alice"
    BOB1 = "Bob1"
    BOB2 = "Bob2"


class Phase(Enum):
    DISTRIBUTION = "Distribution"
    DISTILLATION = "Distillation"
    ANGLE_ANNOUNCEMENT = "AngleAnnouncement"
    RESULT_REPORT = "ResultReport"
    HANDOFF = "Handoff"


#: Payload tag each phase is allowed to carry.
PAYLOAD_KIND_FOR_PHASE = {
    Phase.DISTRIBUTION: "quantum_marker",
    Phase.DISTILLATION: "qnd_outcome",
    Phase.ANGLE_ANNOUNCEMENT: "angle",
    Phase.RESULT_REPORT: "result_bit",
    Phase.HANDOFF: "control",
}


@dataclass(frozen=True)
class Message:
    """One classical message on the bus, in canonical wire form."""

    seq: int
    phase: Phase
    sender: Party
    recipient: Party
    payload_kind: str
    payload: str

    def __post_init__(self):
        if self.seq < 1:
            raise ValueError(f"seq {self.seq} must be >= 1")
        if self.sender is self.recipient:
            raise ValueError(f"{self.sender.value} cannot message itself")
        expected = PAYLOAD_KIND_FOR_PHASE[self.phase]
        if self.payload_kind != expected:
            raise ValueError(
                f"phase {self.phase.value} carries {expected!r} payloads, "
                f"got {self.payload_kind!r}"
            )
        if "|" in self.payload or "\n" in self.payload:
            raise ValueError("payload must not contain '|' or newlines")

    def to_line(self) -> str:
        return (
            f"{self.seq}|{self.phase.value}|{self.sender.value}"
            f"|{self.recipient.value}|{self.payload_kind}|{self.payload}"
        )

    @classmethod
    def from_line(cls, line: str) -> "Message":
        parts = line.rstrip("\n").split("|")
        if len(parts) != 6:
            raise ValueError(f"malformed transcript line: {line!r}")
        seq, phase, sender, recipient, kind, payload = parts
        return cls(
            seq=int(seq),
            phase=Phase(phase),
            sender=Party(sender),
            recipient=Party(recipient),
            payload_kind=kind,
            payload=payload,
        )


class Transcript:
    """Append-only, strictly sequenced log of classical messages."""

    def __init__(self, run_id: str, seed: int):
        self.run_id = run_id
        self.seed = seed
        self._messages: list[Message] = []

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    def append(
        self,
        phase: Phase,
        sender: Party,
        recipient: Party,
        payload_kind: str,
        payload: str,
    ) -> Message:
        msg = Message(
            seq=len(self._messages) + 1,
            phase=phase,
            sender=sender,
            recipient=recipient,
            payload_kind=payload_kind,
            payload=payload,
        )
        self._messages.append(msg)
        return msg

    def to_lines(self) -> list[str]:
        return [msg.to_line() for msg in self._messages]

    def to_bytes(self) -> bytes:
        return ("\n".join(self.to_lines()) + "\n").encode("utf-8")

    @classmethod
    def from_lines(
        cls, lines, run_id: str = "", seed: int = 0
    ) -> "Transcript":
        transcript = cls(run_id, seed)
        prev = 0
        for line in lines:
            if not line.strip():
                continue
            msg = Message.from_line(line)
            if msg.seq <= prev:
                raise ValueError(f"seq {msg.seq} not strictly increasing")
            prev = msg.seq
            transcript._messages.append(msg)
        return transcript


class BellClass(Enum):
    """Coarse pair label Alice infers from the two readouts."""

    PHI = "PhiClass"
    PSI = "PsiClass"


def infer_bell_class(outcome_a: QndOutcome, outcome_b: QndOutcome) -> BellClass:
    """Same readouts mean a Phi-class pair, different readouts Psi-class."""
    return BellClass.PHI if outcome_a is outcome_b else BellClass.PSI


#: Announced angles are multiples of pi/4.
ANGLE_STEP = math.pi / 4
ANGLE_COUNT = 8


@dataclass
class BqcRound:
    """Alice's per-pair bookkeeping for the delegated-measurement rounds."""

    index: int
    theta_index: int
    theta: float
    bell_class: BellClass
    sent_angle: float
    a_bit: int | None = None


@dataclass(frozen=True)
class DistillationRecord:
    """Ground truth plus reported view of one distilled pair.

    ``inferred_class`` is what Alice computes from the readouts as
    reported; ``true_class`` is the physical class of the surviving
    state itself. They diverge under readout misclassification or
    misreporting.
    """

    component: HyperComponent
    pair: DistilledPair
    reported_a: QndOutcome
    reported_b: QndOutcome
    inferred_class: BellClass
    true_class: BellClass


def state_bell_class(state: StateVector) -> BellClass:
    """Physical class of a two-qubit polarization state by span weight."""
    amps = state.amplitudes
    phi_weight = abs(amps[0]) ** 2 + abs(amps[3]) ** 2
    return BellClass.PHI if phi_weight > 0.5 else BellClass.PSI


@dataclass(frozen=True)
class HandoffSummary:
    pair_count: int
    phi_count: int
    psi_count: int
    residuals: tuple[StateVector, ...]


def run_distribution(
    m: int,
    fv: FidelityVector,
    dephase_p: float,
    rng: np.random.Generator,
    transcript: Transcript,
) -> list[HyperComponent]:
    """Sample m noisy pairs and log their delivery to both servers."""
    if m < 1:
        raise ValueError(f"pair count {m} must be >= 1")
    components = []
    for j in range(1, m + 1):
        component = sample_component(fv, rng)
        if dephase_p > 0.0:
            component = spatial_dephase(component, dephase_p, rng)
        components.append(component)
        transcript.append(
            Phase.DISTRIBUTION, Party.SOURCE, Party.BOB1, "quantum_marker", str(j)
        )
        transcript.append(
            Phase.DISTRIBUTION, Party.SOURCE, Party.BOB2, "quantum_marker", str(j)
        )
    return components


def run_distillation(
    components,
    params: DeviceParams,
    rng: np.random.Generator,
    transcript: Transcript,
    evil_bob_flip_p: float = 0.0,
) -> list[DistillationRecord]:
    """Run both servers' probe measurements and report readouts to Alice.

    With ``evil_bob_flip_p > 0`` the first server misreports his readout
    with that probability; the actual photons are untouched, so Alice's
    inferred classes diverge from ground truth.
    """
    if not components:
        raise ValueError("component list must be nonempty")
    if not (0.0 <= evil_bob_flip_p <= 1.0):
        raise ValueError(f"evil_bob_flip_p {evil_bob_flip_p!r} outside [0, 1]")
    records = []
    for component in components:
        table = build_branch_table(component)
        pair = measure_probes(table, params, rng)
        reported_a = pair.outcome_a
        if evil_bob_flip_p > 0.0 and float(rng.random()) < evil_bob_flip_p:
            reported_a = reported_a.flipped()
        reported_b = pair.outcome_b
        transcript.append(
            Phase.DISTILLATION, Party.BOB1, Party.ALICE, "qnd_outcome",
            reported_a.value,
        )
        transcript.append(
            Phase.DISTILLATION, Party.BOB2, Party.ALICE, "qnd_outcome",
            reported_b.value,
        )
        records.append(
            DistillationRecord(
                component=component,
                pair=pair,
                reported_a=reported_a,
                reported_b=reported_b,
                inferred_class=infer_bell_class(reported_a, reported_b),
                true_class=state_bell_class(pair.pol_state),
            )
        )
    return records


def alice_announce_angles(
    classes, rng: np.random.Generator, transcript: Transcript
) -> list[BqcRound]:
    """Draw one angle per pair and announce the signed angle to Bob1.

    The angle is uniform over the eight multiples of pi/4; its sign is
    positive for Phi-class pairs and negative for Psi-class pairs.
    """
    rounds = []
    for j, bell_class in enumerate(classes, start=1):
        k = int(rng.integers(ANGLE_COUNT))
        theta = k * ANGLE_STEP
        sign = 1.0 if bell_class is BellClass.PHI else -1.0
        sent = sign * theta + 0.0  # normalize -0.0 to 0.0
        transcript.append(
            Phase.ANGLE_ANNOUNCEMENT, Party.ALICE, Party.BOB1, "angle", repr(sent)
        )
        rounds.append(
            BqcRound(
                index=j,
                theta_index=k,
                theta=theta,
                bell_class=bell_class,
                sent_angle=sent,
            )
        )
    return rounds


@functools.lru_cache(maxsize=512)
def _rotated_basis_projection(
    state: StateVector, sent_angle: float
) -> tuple[float, StateVector, StateVector]:
    """Bit-0 probability and both residual states for one pair state.

    Keyed on state identity; distilled states are shared immutable
    instances, so this caches the handful of distinct cases per run.
    """
    psi = np.asarray(state.amplitudes, dtype=complex).reshape(2, 2)
    phase = np.exp(-1j * sent_angle)
    residuals = []
    probs = []
    for sign in (1.0, -1.0):
        bra = np.array([1.0, sign * phase], dtype=complex).conj() / math.sqrt(2.0)
        branch = bra @ psi
        probs.append(float(np.sum(np.abs(branch) ** 2)))
        norm = np.linalg.norm(branch)
        residuals.append(
            None
            if norm <= 1e-9
            else StateVector(canonical_phase(branch / norm), ("H", "V"))
        )
    return probs[0], residuals[0], residuals[1]


def bob1_measure(
    pair: DistilledPair,
    sent_angle: float,
    rng: np.random.Generator,
    transcript: Transcript,
) -> tuple[int, StateVector]:
    """Measure Bob1's qubit (the first tensor factor) in the rotated basis.

    The basis states are (|H> +- e^{-i * sent_angle} |V>)/sqrt(2); the
    first projector corresponds to bit 0. Returns the bit and Bob2's
    residual qubit state, and reports the bit to Alice. Normalization of
    the input pair is guaranteed by the state-vector type.
    """
    p0, residual0, residual1 = _rotated_basis_projection(
        pair.pol_state, float(sent_angle)
    )
    a_bit = 0 if float(rng.random()) < p0 else 1
    residual = residual0 if a_bit == 0 else residual1
    if residual is None:
        raise RuntimeError(f"bit {a_bit} sampled despite zero Born weight")
    transcript.append(
        Phase.RESULT_REPORT, Party.BOB1, Party.ALICE, "result_bit", str(a_bit)
    )
    return a_bit, residual


def handoff_single_server(
    rounds, residuals, transcript: Transcript
) -> HandoffSummary:
    """Close the run: summarize and send the single handoff marker to Bob2."""
    rounds = list(rounds)
    residuals = tuple(residuals)
    if len(rounds) != len(residuals):
        raise ValueError(
            f"{len(rounds)} rounds but {len(residuals)} residual states"
        )
    incomplete = [r.index for r in rounds if r.a_bit is None]
    if incomplete:
        raise ValueError(f"rounds {incomplete} have no reported bit")
    transcript.append(
        Phase.HANDOFF, Party.ALICE, Party.BOB2, "control", "begin_single_server"
    )
    phi = sum(1 for r in rounds if r.bell_class is BellClass.PHI)
    return HandoffSummary(
        pair_count=len(rounds),
        phi_count=phi,
        psi_count=len(rounds) - phi,
        residuals=residuals,
    )


# --- security audit ---------------------------------------------------------

VIOLATION_BOB_TO_BOB = "bob_to_bob"
VIOLATION_ALICE_FEEDBACK = "alice_feedback"
VIOLATION_ANGLE_TO_BOB2 = "angle_to_bob2"
VIOLATION_RESULT_FROM_BOB2 = "result_from_bob2"


@dataclass(frozen=True)
class Violation:
    kind: str
    seq: int
    description: str


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    violations: tuple[Violation, ...]


def audit(transcript: Transcript) -> AuditReport:
    """Check the communication constraints of the two-server setting.

    Flags: (a) any server-to-server message; (b) any Alice-to-server
    message during distribution or distillation; (c) any angle
    announcement addressed to Bob2; (d) any result report sent by Bob2.
    """
    bobs = (Party.BOB1, Party.BOB2)
    violations = []
    for msg in transcript.messages:
        if msg.sender in bobs and msg.recipient in bobs:
            violations.append(
                Violation(
                    VIOLATION_BOB_TO_BOB,
                    msg.seq,
                    f"{msg.sender.value} messaged {msg.recipient.value}",
                )
            )
        if (
            msg.sender is Party.ALICE
            and msg.recipient in bobs
            and msg.phase in (Phase.DISTRIBUTION, Phase.DISTILLATION)
        ):
            violations.append(
                Violation(
                    VIOLATION_ALICE_FEEDBACK,
                    msg.seq,
                    f"Alice fed back to {msg.recipient.value} during "
                    f"{msg.phase.value}",
                )
            )
        if msg.phase is Phase.ANGLE_ANNOUNCEMENT and msg.recipient is Party.BOB2:
            violations.append(
                Violation(
                    VIOLATION_ANGLE_TO_BOB2, msg.seq, "angle announced to Bob2"
                )
            )
        if msg.phase is Phase.RESULT_REPORT and msg.sender is Party.BOB2:
            violations.append(
                Violation(
                    VIOLATION_RESULT_FROM_BOB2, msg.seq, "Bob2 reported a result bit"
                )
            )
    return AuditReport(passed=not violations, violations=tuple(violations))


# --- whole-run orchestration ------------------------------------------------


def analytic_phi_probability(fv: FidelityVector, dephase_p: float = 0.0) -> float:
    """Exact probability that Alice infers a Phi-class pair.

    Averages the same-readout probability of each ensemble component
    over the mixture weights and the dephasing channel.
    """
    total = 0.0
    for component in mixed_ensemble(fv):
        for sign, sign_p in ((1, 1.0 - dephase_p), (-1, dephase_p)):
            if sign_p == 0.0 or component.weight == 0.0:
                continue
            table: BranchTable = build_branch_table(
                HyperComponent(component.pol, component.weight, sign)
            )
            total += component.weight * sign_p * same_outcome_probability(table)
    return total


def derive_run_id(seed: int, payload: str) -> str:
    """Deterministic run identifier from the seed and a config digest."""
    digest = hashlib.sha256(f"{seed}:{payload}".encode("utf-8")).hexdigest()
    return f"run-{digest[:12]}"


@dataclass
class ProtocolRun:
    """Everything produced by one end-to-end run."""

    components: list[HyperComponent]
    records: list[DistillationRecord]
    rounds: list[BqcRound]
    residuals: list[StateVector]
    summary: HandoffSummary
    transcript: Transcript
    audit_report: AuditReport = field(init=False)

    def __post_init__(self):
        self.audit_report = audit(self.transcript)


def run_protocol(
    m: int,
    fv: FidelityVector,
    params: DeviceParams = DeviceParams(),
    dephase_p: float = 0.0,
    evil_bob_flip_p: float = 0.0,
    seed: int = 0,
    run_id: str | None = None,
) -> ProtocolRun:
    """Execute the full pipeline with four named substreams of ``seed``."""
    root = np.random.SeedSequence(seed)
    rng_dist, rng_qnd, rng_angle, rng_meas = (
        np.random.default_rng(child) for child in root.spawn(4)
    )
    transcript = Transcript(
        run_id if run_id is not None else derive_run_id(seed, f"m={m}"), seed
    )
    components = run_distribution(m, fv, dephase_p, rng_dist, transcript)
    records = run_distillation(
        components, params, rng_qnd, transcript, evil_bob_flip_p
    )
    rounds = alice_announce_angles(
        [record.inferred_class for record in records], rng_angle, transcript
    )
    residuals = []
    for bqc_round, record in zip(rounds, records):
        a_bit, residual = bob1_measure(
            record.pair, bqc_round.sent_angle, rng_meas, transcript
        )
        bqc_round.a_bit = a_bit
        residuals.append(residual)
    summary = handoff_single_server(rounds, residuals, transcript)
    return ProtocolRun(
        components=components,
        records=records,
        rounds=rounds,
        residuals=residuals,
        summary=summary,
        transcript=transcript,
    )
