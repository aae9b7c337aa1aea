import math

import numpy as np
import pytest

from cmodmul.modarith import SchemeParams
from cmodmul.sim import GateKind, StateVector, run_circuit

PERMUTATION_KINDS = {GateKind.X, GateKind.CNOT, GateKind.TOFFOLI, GateKind.CSWAP}


def coprime_multipliers(N):
    return [a for a in range(1, N) if math.gcd(a, N) == 1]


def all_params(moduli=(9, 15, 21)):
    return [SchemeParams(N, a) for N in moduli for a in coprime_multipliers(N)]


def permutation_map(circuit, inputs):
    """Map each basis input index to its output index.

    Every input gets a distinct tag as its amplitude; since the circuit only
    permutes basis states, each output amplitude names the input it came from.
    """
    assert all(g.kind in PERMUTATION_KINDS for g in circuit.gates)
    inputs = list(inputs)
    tags = np.arange(1, len(inputs) + 1, dtype=complex)
    state = StateVector.from_sparse(circuit.num_qubits, inputs, tags)
    out = run_circuit(state, circuit)
    idx = out.support()
    assert len(idx) == len(inputs), "circuit is not a permutation on these inputs"
    back = out.amplitudes[idx].real.round().astype(int) - 1
    return {inputs[t]: int(i) for t, i in zip(back, idx)}


@pytest.fixture
def p15():
    return SchemeParams(15, 7)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
