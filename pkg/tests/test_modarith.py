import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmodmul import modarith as ma
from cmodmul.modarith import NoInverseError, SchemeParams
from cmodmul.resources import count_circuit
from cmodmul.sim import Circuit, basis_state, register_is_zero, run_circuit

from conftest import coprime_multipliers, permutation_map


def brute_inverse(a, N):
    return next(b for b in range(1, N) if a * b % N == 1)


def test_modinv_examples():
    assert ma.modinv(1, 15) == 1
    assert brute_inverse(7, 15) == 13
    assert ma.modinv(7, 15) == 13
    with pytest.raises(NoInverseError):
        ma.modinv(3, 15)


@given(st.integers(3, 500).filter(lambda N: N % 2), st.data())
def test_modinv_matches_brute_force(N, data):
    a = data.draw(st.integers(1, N - 1))
    if math.gcd(a, N) == 1:
        assert ma.modinv(a, N) == brute_inverse(a, N)
    else:
        with pytest.raises(NoInverseError):
            ma.modinv(a, N)


def test_norm_const():
    assert ma.norm_const(-1, 15) == 14
    assert ma.norm_const(0, 15) == 0
    assert ma.norm_const(1 - 1, 9) == 0


def test_classical_mac():
    assert ma.classical_mac(7, 2, 0, 15) == 14
    assert ma.classical_mac(5, 0, 4, 15) == 4
    assert ma.classical_mac(0, 9, 4, 15) == 4


def test_params_validation():
    p = SchemeParams(15, 7)
    assert p.n == 4 and p.a_inv == 13
    assert SchemeParams(9, 2).n == 4
    assert SchemeParams(21, 5).n == 5
    with pytest.raises(NoInverseError):
        SchemeParams(15, 6)
    with pytest.raises(ValueError):
        SchemeParams(16, 3)
    with pytest.raises(ValueError):
        SchemeParams(15, 15)


def test_layout_is_disjoint(p15):
    for controlled in (True, False):
        lay = ma.make_layout(p15, controlled)
        qubits = [lay.data, *lay.xreg, *lay.work, *lay.adder_ancilla]
        assert len(set(qubits)) == len(qubits) == lay.total
        assert lay.oracle in lay.work


def test_constant_schedule():
    assert ma.constant_schedule(6, 4, 15) == [6, 12, 9, 3]
    assert ma.constant_schedule(0, 4, 15) == [0, 0, 0, 0]


def _run_value(circuit, lay, **regs):
    out = run_circuit(basis_state(lay.total, lay.encode(**regs)), circuit)
    (idx,) = out.support()
    return lay.decode(int(idx))


@pytest.mark.parametrize(
    "c,b,y,expected", [(0, 1, 10, 10), (7, 1, 10, 2), (7, 0, 10, 10)]
)
def test_cmodadd_examples(p15, c, b, y, expected):
    lay = ma.make_layout(p15)
    circ = ma.build_cmodadd_const(c, lay.xreg[0], lay.work, p15, lay)
    assert _run_value(circ, lay, x=b, work=y)["work"] == expected


def test_cmodadd_rejects_unreduced(p15):
    lay = ma.make_layout(p15)
    with pytest.raises(ValueError):
        ma.build_cmodadd_const(15, lay.xreg[0], lay.work, p15, lay)
    with pytest.raises(ma.LayoutError):
        ma.build_cmodadd_const(3, lay.work[0], lay.work, p15, lay)


def test_mac_examples(p15):
    lay = ma.make_layout(p15)
    mac = lambda c: ma.build_mac(c, lay.xreg, lay.work, p15, lay)
    # x=3, y=3, c = a - 1 = 6
    assert _run_value(mac(6), lay, x=3, work=3)["work"] == 6
    # c = 0 on the |0> branch is the identity
    assert _run_value(mac(0), lay, x=9, work=4)["work"] == 4
    # c = -a^-1 = 2 clears y = x when src holds a*x = 6
    assert ma.norm_const(-13, 15) == 2
    assert _run_value(mac(-13), lay, x=6, work=3)["work"] == 0


def test_mac_overlap_rejected(p15):
    lay = ma.make_layout(p15)
    with pytest.raises(ma.LayoutError):
        ma.build_mac(3, lay.xreg, lay.xreg, p15, lay)


def test_cmac_examples(p15):
    lay = ma.make_layout(p15)
    circ = ma.build_cmac(7, lay.data, lay.xreg, lay.work, p15, lay)
    assert _run_value(circ, lay, data=1, x=1, work=0)["work"] == 7
    for x, y in [(0, 0), (5, 9), (14, 14)]:
        assert _run_value(circ, lay, data=0, x=x, work=y)["work"] == y
    with pytest.raises(ma.LayoutError):
        ma.build_cmac(7, lay.data, lay.xreg, lay.work, p15, ma.make_layout(p15, False))


def test_ccopy():
    p = SchemeParams(15, 2)
    lay = ma.make_layout(p)
    circ = ma.build_ccopy(lay.data, lay.xreg, lay.work, lay.total)
    assert _run_value(circ, lay, data=1, x=5)["work"] == 5
    assert _run_value(circ, lay, data=0, x=5)["work"] == 0
    assert count_circuit(circ).toffoli == 4 and count_circuit(circ).total_gates == 4


def test_cswap_registers():
    p = SchemeParams(15, 2)
    lay = ma.make_layout(p)
    circ = ma.build_cswap_registers(lay.data, lay.xreg, lay.work, lay.total)
    v = _run_value(circ, lay, data=1, x=3, work=12)
    assert (v["x"], v["work"]) == (12, 3)
    v = _run_value(circ, lay, data=0, x=3, work=12)
    assert (v["x"], v["work"]) == (3, 12)
    rc = count_circuit(circ)
    assert (rc.toffoli, rc.cnot, rc.total_gates) == (4, 8, 12)


@pytest.mark.parametrize("N", [9, 15, 21])
def test_mac_reversibility(N):
    p = SchemeParams(N, coprime_multipliers(N)[1])
    lay = ma.make_layout(p, False)
    for c in range(N):
        roundtrip = ma.build_mac(c, lay.xreg, lay.work, p, lay) + ma.build_mac(
            ma.norm_const(-c, N), lay.xreg, lay.work, p, lay
        )
        inputs = [lay.encode(x=x, work=y) for x in range(N) for y in range(N)]
        perm = permutation_map(roundtrip, inputs)
        assert all(perm[i] == i for i in inputs)


@pytest.mark.parametrize("N", [9, 15, 21])
def test_cmac_costs_more_by_a_uniform_gap(N):
    gaps = set()
    for a in coprime_multipliers(N):
        p = SchemeParams(N, a)
        lay = ma.make_layout(p)
        for c in (a, a - 1, -p.a_inv, 0):
            t_mac = count_circuit(ma.build_mac(c, lay.xreg, lay.work, p, lay)).toffoli
            t_cmac = count_circuit(ma.build_cmac(c, lay.data, lay.xreg, lay.work, p, lay)).toffoli
            gaps.add(t_cmac - t_mac)
    assert len(gaps) == 1 and gaps.pop() > 0


def test_adder_scratch_clean_after_controlled_add(p15):
    lay = ma.make_layout(p15)
    circ = ma.build_cmodadd_const(11, lay.xreg[0], lay.work, p15, lay)
    for y in range(15):
        out = run_circuit(basis_state(lay.total, lay.encode(x=1, work=y)), circ)
        assert register_is_zero(out, lay.adder_ancilla, 1e-9)


def test_ripple_primitives_exhaustive():
    # b += a mod 2^m and carry-out, on three-bit operands
    m = 3
    a, b, carry, tgt = [0, 1, 2], [3, 4, 5], 6, 7
    add = Circuit(8, ma.ripple_add(a, b, carry))
    cmp_ = Circuit(8, ma.ripple_carry_out(a, b, carry, tgt))
    inputs = [va | vb << 3 for va in range(8) for vb in range(8)]
    add_map = permutation_map(add, inputs)
    cmp_map = permutation_map(cmp_, inputs)
    for va in range(8):
        for vb in range(8):
            i = va | vb << 3
            assert add_map[i] == va | ((va + vb) % 8) << 3
            assert cmp_map[i] == i | (va + vb >= 1 << m) << tgt
