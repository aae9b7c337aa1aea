"""Controlled modular multiplication, three ways.

All schemes map ``|0>|x>|0>_w`` to ``(|0>|x>|0>_w + |1>|a*x mod N>|0>_w)/sqrt(2)``.

* ``A``: H, C-MAC(a), C-Swap, C-MAC(-a^-1).
* ``B``: H, C-copy, MAC(a-1), C-Swap, MAC(-a^-1), C-Swap.  No controlled
  multiply-accumulate at the price of a copy and a second swap.
* ``C``: the first five steps of ``B``, then MAC(-(a^-1 - 1)) leaves ``a*x`` in
  both registers on the ``|1>`` branch. The work register is Hadamard
  transformed and measured, giving ``s`` and a relative phase
  ``(-1)^(s . a*x)``. A parity oracle built from ``s`` undoes that phase and
  the work qubits that read 1 are flipped back to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import modarith as ma
from .modarith import RegisterLayout, SchemeParams
from .sim import (
    CNOT,
    TOFFOLI,
    Circuit,
    DynamicProgram,
    Gate,
    H,
    MeasurementRecord,
    MeasurementStage,
    StateVector,
    SynthesisStage,
    UnitaryStage,
    X,
    basis_state,
    iter_all_outcomes,
    max_deviation,
    register_is_zero,
    run_circuit,
    run_program,
)

VERIFY_TOL = 1e-9


class SchemeKind(str, Enum):
    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class ParityMask:
    """Bit string ``s`` over a register; character ``i`` is register bit ``i``."""

    bits: str

    def __post_init__(self):
        if set(self.bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {self.bits!r}")

    @classmethod
    def from_int(cls, value: int, width: int) -> ParityMask:
        return cls("".join("1" if value >> i & 1 else "0" for i in range(width)))

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b == "1")

    @property
    def value(self) -> int:
        return sum(1 << i for i in self.positions)

    def __len__(self):
        return len(self.bits)


def parity_phase(mask: ParityMask, y: int) -> int:
    if not 0 <= y < 1 << len(mask):
        raise ValueError(f"{y} does not fit in {len(mask)} bits")
    return -1 if bin(mask.value & y).count("1") % 2 else 1


def parity_oracle_gates(mask: ParityMask, data: int, target: Sequence[int], oracle: int) -> list[Gate]:
    if len(mask) != len(target):
        raise ValueError(f"mask has {len(mask)} bits, target register {len(target)}")
    pos = [target[i] for i in mask.positions]
    if not pos:
        return []
    if oracle in target or oracle == data or data in target:
        raise ma.LayoutError("oracle qubit, data qubit and target register must be disjoint")
    chain = [CNOT(pos[i], pos[i + 1]) for i in range(len(pos) - 1)]
    return chain + [TOFFOLI(data, pos[-1], oracle)] + chain[::-1]


def build_parity_oracle(
    mask: ParityMask,
    data: int,
    target: Sequence[int],
    oracle: int,
    num_qubits: int | None = None,
) -> Circuit:
    """Phase ``(-1)^(s . y)`` on the amplitudes with ``data = 1``.

    CNOTs fold the selected bits of ``y`` onto the last selected position, a
    Toffoli with the data qubit kicks the parity back from an oracle qubit in
    ``(|0> - |1>)/sqrt(2)``, and the CNOTs are undone in reverse.
    """
    gates = parity_oracle_gates(mask, data, target, oracle)
    if num_qubits is None:
        num_qubits = max([data, oracle, *target]) + 1
    return Circuit(num_qubits, gates)


def layout_for(kind: SchemeKind | str, params: SchemeParams) -> RegisterLayout:
    return ma.make_layout(params, controlled_mac=SchemeKind(kind) is SchemeKind.A)


def initial_state(layout: RegisterLayout, x: int) -> StateVector:
    return basis_state(layout.total, layout.encode(x=x))


def expected_target_state(params: SchemeParams, x: int, layout: RegisterLayout) -> StateVector:
    if not 0 <= x < params.N:
        raise ValueError(f"x = {x} outside [0, {params.N})")
    idx = [layout.encode(0, x, 0), layout.encode(1, params.multiply(x), 0)]
    return StateVector.from_sparse(layout.total, idx, [2**-0.5] * 2)


def clean_qubits(layout: RegisterLayout) -> tuple[int, ...]:
    return layout.work + layout.adder_ancilla


def scheme_a_circuit(params: SchemeParams, layout: RegisterLayout) -> Circuit:
    d, xr, w, tot = layout.data, layout.xreg, layout.work, layout.total
    return (
        Circuit(tot, [H(d)])
        + ma.build_cmac(params.a, d, xr, w, params, layout)
        + ma.build_cswap_registers(d, xr, w, tot)
        + ma.build_cmac(-params.a_inv, d, xr, w, params, layout)
    )


def scheme_b_prefix(params: SchemeParams, layout: RegisterLayout) -> Circuit:
    """H, C-copy, MAC(a-1), C-Swap: leaves ``|0>|x>|0> + |1>|x>|a*x>``."""
    d, xr, w, tot = layout.data, layout.xreg, layout.work, layout.total
    return (
        Circuit(tot, [H(d)])
        + ma.build_ccopy(d, xr, w, tot)
        + ma.build_mac(params.a - 1, w, xr, params, layout)
        + ma.build_cswap_registers(d, xr, w, tot)
    )


def scheme_b_circuit(params: SchemeParams, layout: RegisterLayout) -> Circuit:
    d, xr, w, tot = layout.data, layout.xreg, layout.work, layout.total
    return (
        scheme_b_prefix(params, layout)
        + ma.build_mac(-params.a_inv, w, xr, params, layout)
        + ma.build_cswap_registers(d, xr, w, tot)
    )


def scheme_c_stage1(params: SchemeParams, layout: RegisterLayout) -> Circuit:
    """Everything before the measurement, Walsh-Hadamard included."""
    stage = scheme_b_prefix(params, layout) + ma.build_mac(
        -(params.a_inv - 1), layout.work, layout.xreg, params, layout
    )
    return stage + Circuit(layout.total, [H(q) for q in layout.work])


def correction_circuit(
    outcome: str, bit_offset: int, layout: RegisterLayout, correct_phase: bool = True
) -> Circuit:
    """Reset the measured work register and remove the ``(-1)^(s . a*x)`` phase.

    Work qubit ``i`` is flipped under classical bit ``bit_offset + i``.
    """
    gates = [X(q, condition=bit_offset + i) for i, q in enumerate(layout.work) if outcome[i] == "1"]
    mask = ParityMask(outcome)
    if correct_phase and mask.positions:
        o = layout.oracle
        gates += [X(o), H(o)]
        gates += parity_oracle_gates(mask, layout.data, layout.xreg, o)
        gates += [H(o), X(o)]
    return Circuit(layout.total, gates)


def build_scheme_a(params: SchemeParams, layout: RegisterLayout) -> DynamicProgram:
    return DynamicProgram(layout.total, [UnitaryStage(scheme_a_circuit(params, layout))])


def build_scheme_b(params: SchemeParams, layout: RegisterLayout) -> DynamicProgram:
    return DynamicProgram(layout.total, [UnitaryStage(scheme_b_circuit(params, layout))])


def build_scheme_c(
    params: SchemeParams, layout: RegisterLayout, correct_phase: bool = True
) -> DynamicProgram:
    """Three stages: unitary prefix, work-register measurement, correction.

    With ``correct_phase=False`` the last stage only resets the work register,
    exposing the measurement-induced phase.
    """

    def synthesize(records: Sequence[MeasurementRecord]) -> Circuit:
        offset = sum(len(r.qubit_indices) for r in records[:-1])
        return correction_circuit(records[-1].outcome_bits, offset, layout, correct_phase)

    return DynamicProgram(
        layout.total,
        [
            UnitaryStage(scheme_c_stage1(params, layout)),
            MeasurementStage(layout.work, label="work"),
            SynthesisStage(synthesize, label="parity correction"),
        ],
    )


def build_scheme(
    kind: SchemeKind | str, params: SchemeParams, layout: RegisterLayout | None = None
) -> DynamicProgram:
    kind = SchemeKind(kind)
    layout = layout or layout_for(kind, params)
    return {
        SchemeKind.A: build_scheme_a,
        SchemeKind.B: build_scheme_b,
        SchemeKind.C: build_scheme_c,
    }[kind](params, layout)


# ---------------------------------------------------------------------------
# verification


@dataclass
class CaseResult:
    scheme: str
    x: int
    outcome: str | None
    passed: bool
    max_deviation: float
    probability: float | None = None
    clean: bool = True
    phase_law: bool | None = None
    records: list[MeasurementRecord] = field(default_factory=list, repr=False)

    def key(self):
        return (self.scheme, self.x, self.outcome or "")

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "x": self.x,
            "outcome": self.outcome,
            "passed": self.passed,
            "max_deviation": float(f"{self.max_deviation:.3e}"),
            "probability": self.probability,
            "clean": self.clean,
            "phase_law": self.phase_law,
        }


@dataclass
class VerificationReport:
    scheme: str
    N: int
    a: int
    cases: list[CaseResult]

    @property
    def passed(self) -> bool:
        return bool(self.cases) and all(c.passed for c in self.cases)

    @property
    def fidelities(self) -> dict[str | None, float]:
        return {c.outcome: 1.0 - c.max_deviation for c in self.cases}


def relative_branch_phase(state: StateVector, params: SchemeParams, x: int, layout: RegisterLayout) -> complex:
    """Amplitude of ``|1>|a*x>|0>`` divided by that of ``|0>|x>|0>``."""
    amp = state.amplitudes
    return complex(amp[layout.encode(1, params.multiply(x), 0)] / amp[layout.encode(0, x, 0)])


def _check(kind, params, x, layout, state, records, target, phase_law=None) -> CaseResult:
    dev = max_deviation(state, target)
    clean = register_is_zero(state, clean_qubits(layout), VERIFY_TOL)
    prob = None
    outcome = None
    ok = dev < VERIFY_TOL and clean
    if records:
        outcome = records[-1].outcome_bits
        prob = records[-1].probability
        ok = ok and abs(prob - 2.0 ** -params.n) < VERIFY_TOL
    if phase_law is not None:
        ok = ok and phase_law
    return CaseResult(kind.value, x, outcome, bool(ok), dev, prob, clean, phase_law, records)


def verify_scheme(
    kind: SchemeKind | str,
    params: SchemeParams,
    x: int,
    mode: str = "all",
    seed: int = 0,
    forced: str | None = None,
    check_phase_law: bool = False,
) -> VerificationReport:
    """Run a scheme from ``|0>|x>|0>`` and compare with the target state.

    ``mode`` is ``"all"`` (every measurement outcome of scheme C), ``"sampled"``
    (one run seeded with ``seed``) or ``"forced"`` (the outcome ``forced``).
    With ``check_phase_law`` each scheme-C outcome is also run without phase
    correction, and the leftover branch phase must equal ``(-1)^(s . a*x)``.
    """
    kind = SchemeKind(kind)
    layout = layout_for(kind, params)
    program = build_scheme(kind, params, layout)
    init = initial_state(layout, x)
    target = expected_target_state(params, x, layout)

    if kind is not SchemeKind.C or mode != "all":
        outcomes = None if mode != "forced" else [forced]
        state, records = run_program(program, init, seed=seed, forced_outcomes=outcomes)
        law = None
        if kind is SchemeKind.C and check_phase_law:
            raw, _ = run_program(
                build_scheme_c(params, layout, correct_phase=False),
                init,
                forced_outcomes=[records[-1].outcome_bits],
            )
            law = _phase_law_holds(raw, records[-1].outcome_bits, params, x, layout)
        case = _check(kind, params, x, layout, state, records, target, law)
        return VerificationReport(kind.value, params.N, params.a, [case])

    raw_phases = {}
    if check_phase_law:
        raw_program = build_scheme_c(params, layout, correct_phase=False)
        for state, records in iter_all_outcomes(raw_program, init):
            s = records[-1].outcome_bits
            raw_phases[s] = _phase_law_holds(state, s, params, x, layout)
    cases = []
    for state, records in iter_all_outcomes(program, init):
        law = raw_phases.get(records[-1].outcome_bits) if check_phase_law else None
        if check_phase_law and law is None:
            law = False
        cases.append(_check(kind, params, x, layout, state, records, target, law))
    if len(cases) != 1 << params.n:
        # some outcome was unreachable; report it as a failure
        seen = {c.outcome for c in cases}
        for v in range(1 << params.n):
            s = ParityMask.from_int(v, params.n).bits
            if s not in seen:
                cases.append(CaseResult(kind.value, x, s, False, float("inf"), 0.0, False))
    return VerificationReport(kind.value, params.N, params.a, cases)


def _phase_law_holds(raw: StateVector, outcome: str, params: SchemeParams, x: int, layout) -> bool:
    ratio = relative_branch_phase(raw, params, x, layout)
    expected = parity_phase(ParityMask(outcome), params.multiply(x))
    return bool(np.isclose(ratio, expected, atol=VERIFY_TOL, rtol=0))


def check_parity_oracle(mask: ParityMask) -> dict[str, bool]:
    """Simulate the oracle on every (data, y) at once.

    Qubit 0 is the data qubit, 1..n hold ``y``, n+1 is the oracle qubit. The
    input is the uniform superposition over data and ``y``, so each output
    amplitude ratio is the phase applied to that basis state.
    """
    n = len(mask)
    data, target, oracle = 0, list(range(1, n + 1)), n + 1
    width = n + 2
    core = build_parity_oracle(mask, data, target, oracle, width)
    wrapped = Circuit(width, [X(oracle), H(oracle)]) + core + Circuit(width, [H(oracle), X(oracle)])
    prep = Circuit(width, [H(q) for q in [data, *target]])
    start = run_circuit(basis_state(width, 0), prep)
    once = run_circuit(start, wrapped)
    twice = run_circuit(once, wrapped)

    phase_ok = selective = True
    for idx in start.support():
        d, y = idx & 1, (idx >> 1) & ((1 << n) - 1)
        ratio = once.amplitudes[idx] / start.amplitudes[idx]
        want = parity_phase(mask, y) if d else 1
        phase_ok &= bool(np.isclose(ratio, want, atol=VERIFY_TOL, rtol=0))
        if not d:
            selective &= abs(once.amplitudes[idx] - start.amplitudes[idx]) < VERIFY_TOL
    return {
        "phase": phase_ok,
        "selective": selective,
        "self_inverse": max_deviation(twice, start) < VERIFY_TOL,
        "clean": register_is_zero(once, [oracle], VERIFY_TOL),
    }


def check_all_parity_oracles(n: int) -> dict[str, bool]:
    results = [check_parity_oracle(ParityMask.from_int(v, n)) for v in range(1 << n)]
    return {k: all(r[k] for r in results) for k in results[0]}
