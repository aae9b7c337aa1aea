"""Dense statevector simulator with mid-circuit measurement and classical feedback.

Basis ordering is little-endian: qubit ``i`` is bit ``i`` (value ``2**i``) of the
amplitude index. Bit strings passed in or returned (``init_basis_state``,
measurement outcomes) list qubits in order, first character first, so ``"10"``
on qubits ``[0, 1]`` means qubit 0 is 1.

Classical bits live in a flat list. Every measurement appends its outcome bits,
and ``Gate.condition`` refers to a position in that list.

Sampled measurements draw from ``numpy.random.default_rng(seed)`` (PCG64), one
generator per ``run_program`` call, consumed in stage order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Sequence, Union

import numpy as np

STATE_TOL = 1e-10
ZERO_PROB_TOL = 1e-12

_SQRT1_2 = 1 / np.sqrt(2)


class SimulationError(Exception):
    """Base class for simulator errors."""


class ZeroProbabilityOutcome(SimulationError):
    """A forced measurement outcome has (numerically) zero probability."""


class GateKind(str, Enum):
    X = "X"
    H = "H"
    Z = "Z"
    CNOT = "CNOT"
    CZ = "CZ"
    TOFFOLI = "TOFFOLI"
    CSWAP = "CSWAP"


ARITY = {
    GateKind.X: 1,
    GateKind.H: 1,
    GateKind.Z: 1,
    GateKind.CNOT: 2,
    GateKind.CZ: 2,
    GateKind.TOFFOLI: 3,
    GateKind.CSWAP: 3,
}

@dataclass(frozen=True)
class Gate:
    """A gate on explicit qubit indices.

    Qubit order is controls first, target(s) last: ``CNOT(c, t)``,
    ``TOFFOLI(c1, c2, t)``, ``CSWAP(c, a, b)``. ``condition`` optionally names a
    classical bit; the gate is skipped when that bit is 0.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    condition: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != ARITY[self.kind]:
            raise ValueError(
                f"{self.kind.value} takes {ARITY[self.kind]} qubits, got {len(self.qubits)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit indices in {self.kind.value}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")

    def check(self, num_qubits: int) -> None:
        if max(self.qubits) >= num_qubits:
            raise IndexError(
                f"{self.kind.value}{self.qubits} out of range for {num_qubits} qubits"
            )

    def __str__(self):
        s = f"{self.kind.value}({', '.join(map(str, self.qubits))})"
        if self.condition is not None:
            s += f" if c[{self.condition}]"
        return s


def X(q, condition=None):
    return Gate(GateKind.X, (q,), condition)


def H(q):
    return Gate(GateKind.H, (q,))


def Z(q):
    return Gate(GateKind.Z, (q,))


def CNOT(control, target):
    return Gate(GateKind.CNOT, (control, target))


def CZ(a, b):
    return Gate(GateKind.CZ, (a, b))


def TOFFOLI(c1, c2, target):
    return Gate(GateKind.TOFFOLI, (c1, c2, target))


def CSWAP(control, a, b):
    return Gate(GateKind.CSWAP, (control, a, b))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            g.check(self.num_qubits)

    def __add__(self, other: Circuit) -> Circuit:
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        return Circuit(self.num_qubits, self.gates + other.gates)

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def inverse(self) -> Circuit:
        # every supported gate is self-inverse
        if any(g.condition is not None for g in self.gates):
            raise ValueError("cannot invert a classically conditioned circuit")
        return Circuit(self.num_qubits, self.gates[::-1])


class StateVector:
    """Amplitudes over ``num_qubits`` qubits, index bit ``i`` = qubit ``i``.

    States built by the simulator know their nonzero support; their amplitude
    array is then read-only so the cached support cannot go stale.
    """

    __slots__ = ("num_qubits", "amplitudes", "_support")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << num_qubits,):
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, "
                f"got shape {amplitudes.shape}"
            )
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes
        self._support = None

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        idx = self.support()
        return float(np.linalg.norm(self.amplitudes[idx]))

    def support(self) -> np.ndarray:
        """Sorted indices of the nonzero amplitudes."""
        if self._support is not None and not self.amplitudes.flags.writeable:
            return self._support
        return np.flatnonzero(self.amplitudes)

    def __repr__(self):
        nz = self.support()
        if len(nz) > 8:
            return f"StateVector({self.num_qubits} qubits, {len(nz)} nonzero)"
        terms = " + ".join(f"({self.amplitudes[i]:.4g})|{i}>" for i in nz)
        return f"StateVector({self.num_qubits}: {terms})"

    @classmethod
    def from_sparse(cls, num_qubits: int, indices, amps) -> StateVector:
        indices = np.asarray(indices, dtype=np.int64)
        amps = np.broadcast_to(np.asarray(amps, dtype=np.complex128), indices.shape)
        order = np.argsort(indices, kind="stable")
        indices, amps = indices[order], amps[order]
        keep = amps != 0
        indices = indices[keep]
        out = np.zeros(1 << num_qubits, dtype=np.complex128)
        out[indices] = amps[keep]
        out.flags.writeable = False
        state = cls(num_qubits, out)
        state._support = indices
        return state


def init_basis_state(num_qubits: int, bitstring: str) -> StateVector:
    if len(bitstring) != num_qubits:
        raise ValueError(f"bitstring of length {len(bitstring)} for {num_qubits} qubits")
    if set(bitstring) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bitstring!r}")
    index = sum(1 << i for i, b in enumerate(bitstring) if b == "1")
    return basis_state(num_qubits, index)


def basis_state(num_qubits: int, index: int) -> StateVector:
    return StateVector.from_sparse(num_qubits, [index], [1.0])


def bits_to_int(bits: str) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b == "1")


def int_to_bits(value: int, width: int) -> str:
    return "".join("1" if value >> i & 1 else "0" for i in range(width))


# ---------------------------------------------------------------------------
# gate application


def _condition_met(gate: Gate, classical_bits: Sequence[int]) -> bool:
    if gate.condition is None:
        return True
    if not 0 <= gate.condition < len(classical_bits):
        raise IndexError(
            f"classical bit {gate.condition} does not exist ({len(classical_bits)} bits)"
        )
    return bool(classical_bits[gate.condition])


def _axis(n: int, q: int) -> int:
    # reshape([2]*n) puts the most significant bit on axis 0
    return n - 1 - q


def _slot(n: int, fixed: dict[int, int]):
    idx = [slice(None)] * n
    for q, v in fixed.items():
        idx[_axis(n, q)] = v
    return tuple(idx)


def apply_gate(state: StateVector, gate: Gate, classical_bits: Sequence[int] = ()) -> StateVector:
    """Return a new state with ``gate`` applied, acting on the full dense array."""
    gate.check(state.num_qubits)
    if not _condition_met(gate, classical_bits):
        return state.copy()
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n)
    out = psi.copy()
    k, q = gate.kind, gate.qubits
    if k is GateKind.X:
        out[_slot(n, {q[0]: 0})] = psi[_slot(n, {q[0]: 1})]
        out[_slot(n, {q[0]: 1})] = psi[_slot(n, {q[0]: 0})]
    elif k is GateKind.H:
        a0, a1 = psi[_slot(n, {q[0]: 0})], psi[_slot(n, {q[0]: 1})]
        out[_slot(n, {q[0]: 0})] = (a0 + a1) * _SQRT1_2
        out[_slot(n, {q[0]: 1})] = (a0 - a1) * _SQRT1_2
    elif k is GateKind.Z:
        out[_slot(n, {q[0]: 1})] *= -1
    elif k is GateKind.CZ:
        out[_slot(n, {q[0]: 1, q[1]: 1})] *= -1
    elif k is GateKind.CNOT:
        c, t = q
        out[_slot(n, {c: 1, t: 0})] = psi[_slot(n, {c: 1, t: 1})]
        out[_slot(n, {c: 1, t: 1})] = psi[_slot(n, {c: 1, t: 0})]
    elif k is GateKind.TOFFOLI:
        c1, c2, t = q
        out[_slot(n, {c1: 1, c2: 1, t: 0})] = psi[_slot(n, {c1: 1, c2: 1, t: 1})]
        out[_slot(n, {c1: 1, c2: 1, t: 1})] = psi[_slot(n, {c1: 1, c2: 1, t: 0})]
    elif k is GateKind.CSWAP:
        c, a, b = q
        out[_slot(n, {c: 1, a: 0, b: 1})] = psi[_slot(n, {c: 1, a: 1, b: 0})]
        out[_slot(n, {c: 1, a: 1, b: 0})] = psi[_slot(n, {c: 1, a: 0, b: 1})]
    return StateVector(n, out.reshape(-1))


def _apply_sparse(idx: np.ndarray, amp: np.ndarray, gate: Gate):
    """Apply one gate to a state given as (basis indices, amplitudes)."""
    k, q = gate.kind, gate.qubits
    if k is GateKind.X:
        return idx ^ (1 << q[0]), amp
    if k is GateKind.CNOT:
        return idx ^ (((idx >> q[0]) & 1) << q[1]), amp
    if k is GateKind.TOFFOLI:
        return idx ^ (((idx >> q[0]) & (idx >> q[1]) & 1) << q[2]), amp
    if k is GateKind.CSWAP:
        c, a, b = q
        flip = (idx >> c) & ((idx >> a) ^ (idx >> b)) & 1
        return idx ^ (flip * ((1 << a) | (1 << b))), amp
    if k is GateKind.Z:
        return idx, np.where((idx >> q[0]) & 1, -amp, amp)
    if k is GateKind.CZ:
        return idx, np.where((idx >> q[0]) & (idx >> q[1]) & 1, -amp, amp)
    # H: each basis state splits in two, then equal indices are summed
    m = 1 << q[0]
    bit = (idx & m) != 0
    lo, hi = idx & ~m, idx | m
    a = amp * _SQRT1_2
    all_idx = np.concatenate([lo, hi])
    all_amp = np.concatenate([a, np.where(bit, -a, a)])
    uniq, inv = np.unique(all_idx, return_inverse=True)
    summed = np.zeros(len(uniq), dtype=np.complex128)
    np.add.at(summed, inv, all_amp)
    keep = summed != 0
    return uniq[keep], summed[keep]


def run_circuit(
    state: StateVector, circuit: Circuit, classical_bits: Sequence[int] = ()
) -> StateVector:
    """Apply every gate of ``circuit`` in order.

    Gates are applied to the nonzero support of the state only, which gives the
    same amplitudes as ``apply_gate`` gate by gate (up to rounding order in H)
    at a fraction of the cost for the near-basis states arithmetic circuits see.
    """
    if circuit.num_qubits != state.num_qubits:
        raise ValueError(
            f"circuit width {circuit.num_qubits} != state width {state.num_qubits}"
        )
    if not circuit.gates:
        return state.copy()
    idx = state.support().astype(np.int64)
    amp = state.amplitudes[idx]
    for gate in circuit.gates:
        if _condition_met(gate, classical_bits):
            idx, amp = _apply_sparse(idx, amp, gate)
    return StateVector.from_sparse(state.num_qubits, idx, amp)


# ---------------------------------------------------------------------------
# measurement


class MeasureMode(str, Enum):
    SAMPLED = "sampled"
    FORCED = "forced"


@dataclass(frozen=True)
class MeasurementRecord:
    qubit_indices: tuple[int, ...]
    outcome_bits: str
    probability: float
    mode: MeasureMode

    def __post_init__(self):
        if len(self.outcome_bits) != len(self.qubit_indices):
            raise ValueError("outcome bits not aligned with qubit indices")
        if not self.probability > 0:
            raise ValueError("measurement record with non-positive probability")

    @property
    def value(self) -> int:
        return bits_to_int(self.outcome_bits)


def _check_qubits(num_qubits: int, qubits: Sequence[int]) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices {qubits}")
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise IndexError(f"qubit {q} out of range for {num_qubits} qubits")
    return qubits


def _outcome_keys(idx: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    key = np.zeros(len(idx), dtype=np.int64)
    for j, q in enumerate(qubits):
        key |= ((idx >> q) & 1) << j
    return key


def outcome_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Probability of every outcome; entry ``v`` has bit ``j`` = result of ``qubits[j]``."""
    qubits = _check_qubits(state.num_qubits, qubits)
    idx = state.support()
    weights = np.abs(state.amplitudes[idx]) ** 2
    return np.bincount(_outcome_keys(idx, qubits), weights=weights, minlength=1 << len(qubits))


def measure(
    state: StateVector,
    qubits: Sequence[int],
    forced: str | None = None,
    rng: np.random.Generator | int | None = None,
) -> tuple[StateVector, MeasurementRecord]:
    """Measure ``qubits`` in the computational basis.

    With ``forced`` set, post-select that outcome and report its true
    probability. Otherwise sample with ``rng`` (a Generator or an integer seed).
    """
    qubits = _check_qubits(state.num_qubits, qubits)
    idx = state.support()
    amps = state.amplitudes[idx]
    keys = _outcome_keys(idx, qubits)
    probs = np.bincount(keys, weights=np.abs(amps) ** 2, minlength=1 << len(qubits))
    if forced is not None:
        if len(forced) != len(qubits):
            raise ValueError(f"forced outcome {forced!r} does not match {len(qubits)} qubits")
        outcome = bits_to_int(forced)
        mode = MeasureMode.FORCED
        if probs[outcome] < ZERO_PROB_TOL:
            raise ZeroProbabilityOutcome(
                f"outcome {forced} on qubits {list(qubits)} has probability {probs[outcome]:.3g}"
            )
    else:
        if rng is None:
            raise ValueError("sampled measurement needs a seed or generator")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        cdf = np.cumsum(probs)
        outcome = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        outcome = min(outcome, len(probs) - 1)
        mode = MeasureMode.SAMPLED
    p = float(probs[outcome])
    keep = keys == outcome
    post = StateVector.from_sparse(state.num_qubits, idx[keep], amps[keep] / np.sqrt(p))
    return post, MeasurementRecord(qubits, int_to_bits(outcome, len(qubits)), p, mode)


# ---------------------------------------------------------------------------
# dynamic programs


@dataclass(frozen=True)
class UnitaryStage:
    circuit: Circuit


@dataclass(frozen=True)
class MeasurementStage:
    qubits: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))


Synthesizer = Callable[[Sequence[MeasurementRecord]], Circuit]


@dataclass(frozen=True)
class SynthesisStage:
    """Builds a continuation circuit from every measurement record so far."""

    synthesize: Synthesizer
    label: str = ""


Stage = Union[UnitaryStage, MeasurementStage, SynthesisStage]


@dataclass(frozen=True)
class DynamicProgram:
    num_qubits: int
    stages: tuple[Stage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        for st in self.stages:
            if isinstance(st, UnitaryStage):
                if st.circuit.num_qubits != self.num_qubits:
                    raise ValueError("unitary stage width differs from program width")
            elif isinstance(st, MeasurementStage):
                _check_qubits(self.num_qubits, st.qubits)
            elif not isinstance(st, SynthesisStage):
                raise TypeError(f"unknown stage {st!r}")

    @property
    def measurement_stages(self) -> list[MeasurementStage]:
        return [s for s in self.stages if isinstance(s, MeasurementStage)]


def _synthesize(program: DynamicProgram, stage: SynthesisStage, records) -> Circuit:
    circuit = stage.synthesize(tuple(records))
    if circuit.num_qubits != program.num_qubits:
        raise SimulationError(
            f"synthesis stage returned a {circuit.num_qubits}-qubit circuit "
            f"for a {program.num_qubits}-qubit program"
        )
    return circuit


def run_program(
    program: DynamicProgram,
    initial: StateVector,
    seed: int = 0,
    forced_outcomes: Sequence[str | None] | None = None,
) -> tuple[StateVector, list[MeasurementRecord]]:
    """Execute the stages in order.

    ``forced_outcomes[i]`` (if given and not None) post-selects the ``i``-th
    measurement; the others are sampled from a generator seeded with ``seed``.
    """
    if initial.num_qubits != program.num_qubits:
        raise ValueError(
            f"program has {program.num_qubits} qubits, initial state {initial.num_qubits}"
        )
    rng = np.random.default_rng(seed)
    state = initial
    records: list[MeasurementRecord] = []
    bits: list[int] = []
    m = 0
    for stage in program.stages:
        if isinstance(stage, UnitaryStage):
            state = run_circuit(state, stage.circuit, bits)
        elif isinstance(stage, MeasurementStage):
            forced = None
            if forced_outcomes is not None and m < len(forced_outcomes):
                forced = forced_outcomes[m]
            state, rec = measure(state, stage.qubits, forced=forced, rng=rng)
            records.append(rec)
            bits.extend(int(b) for b in rec.outcome_bits)
            m += 1
        else:
            state = run_circuit(state, _synthesize(program, stage, records), bits)
    if state is initial:
        state = initial.copy()
    return state, records


def iter_all_outcomes(
    program: DynamicProgram, initial: StateVector
) -> Iterator[tuple[StateVector, list[MeasurementRecord]]]:
    """Yield the final state for every nonzero-probability measurement branch.

    Equivalent to calling ``run_program`` once per forced outcome combination,
    but shared prefixes are executed once.
    """
    if initial.num_qubits != program.num_qubits:
        raise ValueError("initial state width differs from program width")

    def walk(i, state, records, bits):
        if i == len(program.stages):
            yield state, list(records)
            return
        stage = program.stages[i]
        if isinstance(stage, UnitaryStage):
            yield from walk(i + 1, run_circuit(state, stage.circuit, bits), records, bits)
        elif isinstance(stage, SynthesisStage):
            circuit = _synthesize(program, stage, records)
            yield from walk(i + 1, run_circuit(state, circuit, bits), records, bits)
        else:
            probs = outcome_probabilities(state, stage.qubits)
            for v in range(len(probs)):
                if probs[v] < ZERO_PROB_TOL:
                    continue
                outcome = int_to_bits(v, len(stage.qubits))
                post, rec = measure(state, stage.qubits, forced=outcome)
                yield from walk(
                    i + 1, post, records + [rec], bits + [int(b) for b in outcome]
                )

    yield from walk(0, initial, [], [])


def all_bitstrings(width: int) -> Iterator[str]:
    for bits in itertools.product("01", repeat=width):
        yield "".join(bits)


# ---------------------------------------------------------------------------
# comparisons


def _same_width(a: StateVector, b: StateVector):
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"state widths differ: {a.num_qubits} vs {b.num_qubits}")


def max_deviation(a: StateVector, b: StateVector) -> float:
    """Largest amplitude-wise difference, phase-sensitive."""
    _same_width(a, b)
    idx = np.union1d(a.support(), b.support())
    if len(idx) == 0:
        return 0.0
    return float(np.max(np.abs(a.amplitudes[idx] - b.amplitudes[idx])))


def states_equal_exact(a: StateVector, b: StateVector, tolerance: float = STATE_TOL) -> bool:
    return max_deviation(a, b) < tolerance


def states_equal(a: StateVector, b: StateVector, tolerance: float = STATE_TOL) -> bool:
    """Equality up to a global phase."""
    _same_width(a, b)

    def unphase(v):
        nz = np.flatnonzero(np.abs(v) > tolerance)
        if len(nz) == 0:
            return v
        p = v[nz[0]]
        return v * (abs(p) / p)

    return bool(
        np.max(np.abs(unphase(a.amplitudes) - unphase(b.amplitudes))) < tolerance
    )


def register_is_zero(state: StateVector, qubits: Sequence[int], tolerance: float = STATE_TOL) -> bool:
    """True iff the probability of any listed qubit reading 1 is below ``tolerance``."""
    qubits = _check_qubits(state.num_qubits, qubits)
    mask = sum(1 << q for q in qubits)
    idx = state.support()
    hit = (idx & mask) != 0
    return float(np.sum(np.abs(state.amplitudes[idx[hit]]) ** 2)) < tolerance
