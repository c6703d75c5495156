"""One full protocol run, message by message.

Source -> servers: noisy pair delivery. Servers -> Alice: one readout
each per pair. Alice infers the Bell class of every pair, announces a
signed angle per pair to the first server only, collects his measured
bits, and hands the residual qubits off to the second server. The
transcript auditor then re-checks that nobody said anything forbidden.
"""

import collections

from hyperdistill import BellClass, FidelityVector, audit, run_protocol

fv = FidelityVector(0.7, 0.1, 0.15, 0.05)
run = run_protocol(m=8, fv=fv, seed=2026)

print("=" * 72)
print("Transcript")
print("=" * 72)
for line in run.transcript.to_lines():
    print(" ", line)

print()
print("=" * 72)
print("Alice's bookkeeping")
print("=" * 72)
print("pair  true state  readouts            inferred class  angle sent   bit")
for record, bqc_round in zip(run.records, run.rounds):
    readouts = f"({record.reported_a.value}, {record.reported_b.value})"
    print(
        f"  {bqc_round.index}   {record.component.pol.value:9s} "
        f"{readouts:19s} {record.inferred_class.value:14s} "
        f"{bqc_round.sent_angle:+.4f}     {bqc_round.a_bit}"
    )

phi = sum(r.inferred_class is BellClass.PHI for r in run.records)
print()
print(f"classes: {phi} Phi, {len(run.records) - phi} Psi")
print(f"handoff summary: {run.summary.pair_count} pairs, "
      f"{run.summary.phi_count} Phi, {run.summary.psi_count} Psi, "
      f"{len(run.summary.residuals)} residual qubits for the second server")

print()
print("=" * 72)
print("Security audit")
print("=" * 72)
verdict = audit(run.transcript)
print("verdict:", "PASS" if verdict.passed else "FAIL")

message_kinds = collections.Counter(
    (m.phase.value, m.sender.value, m.recipient.value)
    for m in run.transcript.messages
)
print("message flow:")
for (phase, sender, recipient), count in sorted(message_kinds.items()):
    print(f"  {phase:17s} {sender:7s} -> {recipient:7s} x{count}")

print()
print("Note what is absent: no Bob1 <-> Bob2 traffic, no Alice -> server")
print("feedback during distribution or distillation, no angles to the")
print("second server, no result bits from it.")
